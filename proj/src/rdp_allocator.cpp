#include "semcast/rdp_allocator.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace semcast {

namespace {

// Distortion floor keeps iterates away from both the D -> 0 rate blowup and
// the KL singularity at D -> var.
constexpr double kFloorFrac = 1e-9;

double floor_of(double var) { return kFloorFrac * var; }
double ceil_of(double var) { return (1.0 - kFloorFrac) * var; }

// Stationarity residual g(D) = -1/(2D) + lambda_D + lambda_P * D / (2 var (var - D)),
// strictly increasing in D on (0, var).
double stationarity(double var, double d, double lam_d, double lam_p) {
  return -0.5 / d + lam_d + 0.5 * lam_p * d / (var * (var - d));
}

// Per-source optimum for fixed multipliers: the unique root of the
// stationarity condition, clamped to the distortion box.
double optimal_distortion(double var, double lam_d, double lam_p) {
  const double lo = floor_of(var);
  const double hi = ceil_of(var);
  if (stationarity(var, hi, lam_d, lam_p) <= 0.0) return hi;
  if (stationarity(var, lo, lam_d, lam_p) >= 0.0) return lo;
  double a = lo, b = hi;
  for (int it = 0; it < 80; ++it) {
    const double m = 0.5 * (a + b);
    if (stationarity(var, m, lam_d, lam_p) < 0.0)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

struct InnerResult {
  double lam_p;
  Eigen::VectorXd d;
  double perception_sum;
};

// For a fixed lambda_D, find lambda_P >= 0 so the perception constraint holds
// with complementary slackness. The perception sum decreases in lambda_P.
InnerResult inner_solve(const Eigen::VectorXd& vars, double lam_d, double p_budget) {
  const Eigen::Index n = vars.size();
  auto eval = [&](double lam_p) {
    Eigen::VectorXd d(n);
    double psum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d[i] = optimal_distortion(vars[i], lam_d, lam_p);
      psum += perception_of(vars[i], d[i]);
    }
    return std::make_pair(d, psum);
  };

  auto [d0, p0] = eval(0.0);
  if (p0 <= p_budget) return {0.0, std::move(d0), p0};

  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    if (eval(hi).second <= p_budget) break;
    hi *= 2.0;
  }
  double lo = 0.0;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eval(mid).second > p_budget)
      lo = mid;
    else
      hi = mid;
  }
  auto [d, psum] = eval(hi);
  return {hi, std::move(d), psum};
}

}  // namespace

double rate_of(double variance, double distortion) {
  if (!(variance > 0.0)) throw std::invalid_argument("rate_of: variance must be > 0");
  if (!(distortion > 0.0)) throw std::invalid_argument("rate_of: distortion must be > 0");
  return std::max(0.0, 0.5 * std::log(variance / distortion));
}

double perception_of(double variance, double distortion) {
  if (!(variance > 0.0)) throw std::invalid_argument("perception_of: variance must be > 0");
  if (!(distortion > 0.0)) throw std::invalid_argument("perception_of: distortion must be > 0");
  if (distortion >= variance)
    throw std::domain_error("perception_of: KL diverges as distortion approaches the variance");
  const double s = variance - distortion;
  return 0.5 * (std::log(variance / s) + s / variance - 1.0);
}

AllocationSolution solve(const AllocationProblem& problem, double tol) {
  if (!(tol > 0.0) || tol > 1e-3)
    throw std::invalid_argument("solve: tol must lie in (0, 1e-3]");
  const Eigen::VectorXd& vars = problem.sources.variances();
  const Eigen::Index n = vars.size();
  const double d_budget = problem.total_distortion;
  const double p_budget = problem.total_perception;

  int iterations = 0;

  // Distortion multiplier slack?
  InnerResult at_zero = inner_solve(vars, 0.0, p_budget);
  double lam_d = 0.0;
  InnerResult best = at_zero;
  if (at_zero.d.sum() > d_budget + tol * 1e-3) {
    double lam_max = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) lam_max = std::max(lam_max, 0.5 / floor_of(vars[i]));
    double lo = 0.0, hi = lam_max;
    for (int it = 0; it < 90; ++it) {
      ++iterations;
      const double mid = 0.5 * (lo + hi);
      InnerResult r = inner_solve(vars, mid, p_budget);
      if (r.d.sum() > d_budget)
        lo = mid;
      else
        hi = mid;
    }
    lam_d = hi;
    best = inner_solve(vars, lam_d, p_budget);
  }

  AllocationSolution sol;
  sol.distortions = best.d;
  sol.lambda_distortion = lam_d;
  sol.lambda_perception = best.lam_p;
  sol.rates.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) sol.rates[i] = rate_of(vars[i], best.d[i]);
  sol.total_rate = sol.rates.sum();
  sol.distortion_sum = best.d.sum();
  sol.perception_sum = best.perception_sum;
  sol.iterations = iterations;

  const double d_slack = d_budget - sol.distortion_sum;
  const double p_slack = p_budget - sol.perception_sum;
  sol.distortion_active = lam_d > tol && std::abs(d_slack) < 1e-6 * std::max(1.0, d_budget);
  sol.perception_active =
      best.lam_p > tol && std::abs(p_slack) < 1e-6 * std::max(1.0, p_budget);

  // KKT residuals: stationarity at interior points, primal feasibility and
  // complementary slackness everywhere.
  double resid = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = floor_of(vars[i]);
    const double hi = ceil_of(vars[i]);
    const double g = stationarity(vars[i], best.d[i], lam_d, best.lam_p);
    if (best.d[i] > lo * 1.0001 && best.d[i] < hi * 0.9999999) {
      resid = std::max(resid, std::abs(g) * best.d[i]);  // scale-free residual
    } else if (best.d[i] >= hi * 0.9999999) {
      resid = std::max(resid, std::max(0.0, g) * best.d[i]);  // must be <= 0 at the cap
    } else {
      resid = std::max(resid, std::max(0.0, -g) * best.d[i]);  // must be >= 0 at the floor
    }
  }
  resid = std::max(resid, std::abs(lam_d * d_slack));
  resid = std::max(resid, std::abs(best.lam_p * std::min(p_slack, 0.0)));
  resid = std::max(resid, std::max(0.0, -d_slack));
  sol.kkt_residual = resid;
  if (resid > std::max(tol, 1e-6)) {
    std::ostringstream os;
    os << "solve: KKT residual " << resid << " exceeds tolerance after bisection "
       << "(lambda_D=" << lam_d << ", lambda_P=" << best.lam_p << ")";
    throw std::runtime_error(os.str());
  }
  return sol;
}

std::vector<SweepRow> sweep(const GaussianSourceSet& sources, const std::vector<double>& d_values,
                            const std::vector<double>& p_values, double tol) {
  if (d_values.empty() || p_values.empty())
    throw std::invalid_argument("sweep: grids must be nonempty");
  std::vector<SweepRow> rows;
  rows.reserve(d_values.size() * p_values.size());
  for (double d : d_values) {
    for (double p : p_values) {
      AllocationProblem prob(sources, d, p);
      rows.push_back({d, p, solve(prob, tol)});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool bits) {
  if (rows.empty()) return;
  const Eigen::Index n = rows.front().solution.distortions.size();
  os << "D,P_kl";
  for (Eigen::Index i = 0; i < n; ++i) os << ",D_" << (i + 1);
  for (Eigen::Index i = 0; i < n; ++i) os << ",R_" << (i + 1);
  os << ",lambda_D,lambda_P,total_rate\n";
  const double unit = bits ? 1.0 / std::log(2.0) : 1.0;
  os.precision(12);
  for (const auto& row : rows) {
    os << row.total_distortion << ',' << row.total_perception;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << row.solution.distortions[i];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << row.solution.rates[i] * unit;
    os << ',' << row.solution.lambda_distortion << ',' << row.solution.lambda_perception << ','
       << row.solution.total_rate * unit << '\n';
  }
}

}  // namespace semcast
