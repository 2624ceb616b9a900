#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "semcast/noise_model.hpp"

namespace semcast {

/// Per-source variances for the distortion-allocation problem.
class GaussianSourceSet {
 public:
  explicit GaussianSourceSet(Eigen::VectorXd variances) : variances_(std::move(variances)) {
    if (variances_.size() < 1)
      throw std::invalid_argument("GaussianSourceSet: need at least one source");
    for (Eigen::Index i = 0; i < variances_.size(); ++i) {
      if (!(variances_[i] > 0.0) || !std::isfinite(variances_[i]))
        throw std::invalid_argument(
            "GaussianSourceSet: every variance must be strictly positive and finite");
    }
  }

  Eigen::Index size() const { return variances_.size(); }
  double operator[](Eigen::Index i) const { return variances_[i]; }
  const Eigen::VectorXd& variances() const { return variances_; }
  double total() const { return variances_.sum(); }

 private:
  Eigen::VectorXd variances_;
};

/// Two-user broadcast channel: effective gains, per-user noise, total power,
/// optional per-user Rayleigh scale (variance of the Gaussian gain draw).
struct BroadcastChannelParams {
  double gain1;
  double gain2;
  NoiseModel noise1;
  NoiseModel noise2;
  double total_power;
  std::optional<double> fading_scale1;
  std::optional<double> fading_scale2;

  BroadcastChannelParams(double g1, double g2, NoiseModel n1, NoiseModel n2, double power,
                         std::optional<double> fade1 = std::nullopt,
                         std::optional<double> fade2 = std::nullopt)
      : gain1(g1),
        gain2(g2),
        noise1(std::move(n1)),
        noise2(std::move(n2)),
        total_power(power),
        fading_scale1(fade1),
        fading_scale2(fade2) {
    if (!(total_power > 0.0))
      throw std::invalid_argument("BroadcastChannelParams: total_power must be positive");
  }

  /// User 1 is the strong (SIC-capable) user when |G1| >= |G2|.
  bool degraded_order() const { return std::abs(gain1) >= std::abs(gain2); }
};

}  // namespace semcast
