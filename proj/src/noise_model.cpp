#include "semcast/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "semcast/quadrature.hpp"

namespace semcast {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kCdfKnots = 8192;

double gaussian_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * kPi * var);
}

}  // namespace

NoiseModel NoiseModel::gaussian(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("NoiseModel::gaussian: variance must be positive and finite");
  NoiseModel m;
  m.kind_ = NoiseKind::Gaussian;
  m.gauss_var_ = variance;
  m.mass_ = 1.0;
  m.mean_ = 0.0;
  m.second_moment_ = variance;
  const double sd = std::sqrt(variance);
  m.lo_ = -14.0 * sd;
  m.hi_ = 14.0 * sd;
  return m;
}

NoiseModel NoiseModel::erf_mixture(double a, double b, double c, MassCheck policy) {
  if (!(b > 0.0) || !(c > 0.0) || !(a > 0.0))
    throw std::invalid_argument("NoiseModel::erf_mixture: parameters must be positive");
  NoiseModel m;
  m.kind_ = NoiseKind::ErfMixture;
  m.a_ = a;
  m.b_ = b;
  m.c_ = c;
  // The mixture is a uniform[-u,u] convolved with a Gaussian of variance s^2,
  // scaled by 4uc; u and s set the integration support.
  const double u = a / b;
  const double s = 1.0 / (b * std::sqrt(2.0));
  m.lo_ = -(u + 14.0 * s);
  m.hi_ = u + 14.0 * s;
  m.compute_moments();
  if (policy == MassCheck::Enforce && std::abs(m.mass_ - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "NoiseModel::erf_mixture: density integrates to " << m.mass_
       << ", not 1 (|mass-1| > 1e-6); the (a,b,c) triple is mis-specified. "
          "Construct with MassCheck::Report to keep it as given.";
    throw std::invalid_argument(os.str());
  }
  m.build_cdf_table();
  return m;
}

NoiseModel NoiseModel::tabulated(const Eigen::ArrayXd& x, const Eigen::ArrayXd& p,
                                 MassCheck policy) {
  if (x.size() != p.size()) throw std::invalid_argument("NoiseModel::tabulated: size mismatch");
  if (x.size() < 128)
    throw std::invalid_argument("NoiseModel::tabulated: need at least 128 grid points");
  const double dx = x[1] - x[0];
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    const double step = x[i] - x[i - 1];
    if (!(step > 0.0))
      throw std::invalid_argument("NoiseModel::tabulated: grid must be strictly increasing");
    if (std::abs(step - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
      throw std::invalid_argument("NoiseModel::tabulated: grid spacing must be uniform");
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || !std::isfinite(p[i]))
      throw std::invalid_argument("NoiseModel::tabulated: density must be nonnegative and finite");
  }

  // Tail estimate: treat the grid edges as the start of exponential decay. A
  // density that does not decay toward the edges has unbounded tail mass and
  // its moments cannot be trusted.
  auto edge_tail = [&](double p_in, double p_edge) {
    if (p_edge <= 0.0) return 0.0;
    if (p_in <= p_edge) return std::numeric_limits<double>::infinity();
    const double rate = std::log(p_in / p_edge) / dx;
    return p_edge / rate;
  };
  const Eigen::Index n = x.size();
  const double tail = edge_tail(p[1], p[0]) + edge_tail(p[n - 2], p[n - 1]);
  if (!(tail <= 1e-6)) {
    std::ostringstream os;
    os << "NoiseModel::tabulated: estimated tail mass outside the grid is " << tail
       << " (> 1e-6); the grid truncates the density and the variance integral diverges";
    throw std::invalid_argument(os.str());
  }

  NoiseModel m;
  m.kind_ = NoiseKind::Tabulated;
  m.tab_x_ = x;
  m.tab_p_ = p;
  m.lo_ = x[0];
  m.hi_ = x[n - 1];
  m.compute_moments();
  if (policy == MassCheck::Enforce && std::abs(m.mass_ - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "NoiseModel::tabulated: density integrates to " << m.mass_ << ", not 1";
    throw std::invalid_argument(os.str());
  }
  m.build_cdf_table();
  return m;
}

double NoiseModel::density(double x) const {
  switch (kind_) {
    case NoiseKind::Gaussian:
      return gaussian_pdf(x, 0.0, gauss_var_);
    case NoiseKind::ErfMixture:
      return c_ * (std::erf(a_ - b_ * x) + std::erf(a_ + b_ * x));
    case NoiseKind::Tabulated: {
      if (x <= lo_ || x >= hi_) {
        // clamp to edge values at the boundary, zero outside
        if (x == lo_) return tab_p_[0];
        if (x == hi_) return tab_p_[tab_p_.size() - 1];
        return 0.0;
      }
      const double dx = tab_x_[1] - tab_x_[0];
      const auto i = static_cast<Eigen::Index>((x - lo_) / dx);
      const Eigen::Index j = std::min(i, tab_x_.size() - 2);
      const double t = (x - tab_x_[j]) / dx;
      return (1.0 - t) * tab_p_[j] + t * tab_p_[j + 1];
    }
  }
  return 0.0;
}

void NoiseModel::compute_moments() {
  if (kind_ == NoiseKind::Tabulated) {
    mass_ = trapezoid(tab_x_, tab_p_);
    const Eigen::ArrayXd xp = tab_x_ * tab_p_;
    mean_ = trapezoid(tab_x_, xp) / mass_;
    const Eigen::ArrayXd x2p = tab_x_ * tab_x_ * tab_p_;
    second_moment_ = trapezoid(tab_x_, x2p);
    return;
  }
  const double span = hi_ - lo_;
  const double tol = 1e-12 * std::max(1.0, span);
  mass_ = adaptive_simpson([this](double x) { return density(x); }, lo_, hi_, tol);
  mean_ = adaptive_simpson([this](double x) { return x * density(x); }, lo_, hi_, tol) / mass_;
  second_moment_ =
      adaptive_simpson([this](double x) { return x * x * density(x); }, lo_, hi_, tol);
}

void NoiseModel::build_cdf_table() {
  // Monotone CDF on a uniform grid; tabulated grids are refined to at least
  // kCdfKnots knots so inverse lookups interpolate a dense table.
  Eigen::Index n = kCdfKnots;
  if (kind_ == NoiseKind::Tabulated) n = std::max<Eigen::Index>(n, tab_x_.size());
  cdf_x_.resize(n);
  cdf_v_.resize(n);
  const double dx = (hi_ - lo_) / static_cast<double>(n - 1);
  double acc = 0.0;
  double prev = density(lo_);
  cdf_x_[0] = lo_;
  cdf_v_[0] = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double x = lo_ + dx * static_cast<double>(i);
    const double cur = density(x);
    acc += 0.5 * dx * (prev + cur);
    prev = cur;
    cdf_x_[i] = x;
    cdf_v_[i] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("NoiseModel: CDF table has zero total mass");
  for (Eigen::Index i = 0; i < n; ++i) cdf_v_[i] /= acc;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (cdf_v_[i] < cdf_v_[i - 1])
      throw std::invalid_argument("NoiseModel: non-monotone CDF table");
  }
  cdf_v_[n - 1] = 1.0;
}

double NoiseModel::cdf(double x) const {
  if (kind_ == NoiseKind::Gaussian) {
    return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0 * gauss_var_)));
  }
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  const double dx = cdf_x_[1] - cdf_x_[0];
  const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>((x - lo_) / dx),
                                        cdf_x_.size() - 2);
  const double t = (x - cdf_x_[i]) / dx;
  return (1.0 - t) * cdf_v_[i] + t * cdf_v_[i + 1];
}

double NoiseModel::sample(Rng& rng) const {
  if (kind_ == NoiseKind::Gaussian) {
    return rng.normal(0.0, std::sqrt(gauss_var_));
  }
  const double u = rng.uniform01();
  // first index with cdf_v_ >= u, then interpolate within the bracket
  const double* begin = cdf_v_.data();
  const double* end = begin + cdf_v_.size();
  const double* it = std::lower_bound(begin, end, u);
  if (it == begin) return cdf_x_[0];
  if (it == end) return cdf_x_[cdf_x_.size() - 1];
  const Eigen::Index j = it - begin;
  const double c0 = cdf_v_[j - 1];
  const double c1 = cdf_v_[j];
  const double t = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
  return cdf_x_[j - 1] + t * (cdf_x_[j] - cdf_x_[j - 1]);
}

Eigen::ArrayXd NoiseModel::sample(Eigen::Index n, Rng& rng) const {
  Eigen::ArrayXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = sample(rng);
  return out;
}

std::string NoiseModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case NoiseKind::Gaussian:
      os << "gaussian(" << gauss_var_ << ")";
      break;
    case NoiseKind::ErfMixture:
      os << "erf_mixture(" << a_ << "," << b_ << "," << c_ << ")";
      break;
    case NoiseKind::Tabulated:
      os << "tabulated(" << tab_x_.size() << " points on [" << lo_ << "," << hi_ << "])";
      break;
  }
  return os.str();
}

NoiseModel NoiseModel::from_file(const std::filesystem::path& path, MassCheck policy) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("NoiseModel::from_file: cannot open " + path.string());
  std::vector<double> xs, ps;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x, p;
    if (ls >> x >> p) {
      xs.push_back(x);
      ps.push_back(p);
    }
  }
  if (xs.empty()) throw std::runtime_error("NoiseModel::from_file: no data rows in " + path.string());
  Eigen::ArrayXd ax = Eigen::Map<Eigen::ArrayXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  Eigen::ArrayXd ap = Eigen::Map<Eigen::ArrayXd>(ps.data(), static_cast<Eigen::Index>(ps.size()));
  return tabulated(ax, ap, policy);
}

void NoiseModel::to_file(const std::filesystem::path& path) const {
  if (kind_ != NoiseKind::Tabulated)
    throw std::runtime_error("NoiseModel::to_file: only tabulated models are serialized");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("NoiseModel::to_file: cannot open " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < tab_x_.size(); ++i) {
    out << tab_x_[i] << ' ' << tab_p_[i] << '\n';
  }
}

double noise_variance(const NoiseModel& model) { return model.variance(); }

Eigen::ArrayXd sample_noise(const NoiseModel& model, Eigen::Index n, RngSeed seed) {
  if (n < 1) throw std::invalid_argument("sample_noise: n must be >= 1");
  Rng rng = Rng(seed.seed).derive("noise");
  return model.sample(n, rng);
}

NoiseModel q1_noise() {
  return NoiseModel::erf_mixture(1.0 / std::sqrt(2.0), std::sqrt(2.0 / 3.0),
                                 1.0 / (2.0 * std::sqrt(3.0)));
}

NoiseModel q2_noise() {
  return NoiseModel::erf_mixture(3.0 * std::sqrt(2.0) / 10.0, std::sqrt(14.0) / 5.0,
                                 std::sqrt(7.0) / 6.0);
}

NoiseModel angc_noise() {
  return NoiseModel::erf_mixture(1.0 / std::sqrt(2.0), 5.0 * std::sqrt(2.0), 2.5);
}

NoiseModel parse_noise_spec(const std::string& spec) {
  if (spec == "q1") return q1_noise();
  if (spec == "q2") return q2_noise();
  if (spec == "angc") return angc_noise();
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string head = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    if (head == "gaussian") return NoiseModel::gaussian(std::stod(rest));
    if (head == "table") return NoiseModel::from_file(rest);
    if (head == "erf" || head == "erf-report") {
      std::istringstream ss(rest);
      std::string tok;
      double v[3];
      for (double& vi : v) {
        if (!std::getline(ss, tok, ','))
          throw std::invalid_argument("noise spec: erf needs three comma-separated values");
        vi = std::stod(tok);
      }
      return NoiseModel::erf_mixture(v[0], v[1], v[2],
                                     head == "erf-report" ? MassCheck::Report
                                                          : MassCheck::Enforce);
    }
  }
  throw std::invalid_argument("unrecognized noise spec: " + spec);
}

}  // namespace semcast
