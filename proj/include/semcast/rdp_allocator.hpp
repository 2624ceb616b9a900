#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "semcast/core_types.hpp"

namespace semcast {

/// Multi-source distortion allocation under a total squared-error budget and
/// a total perception (KL divergence) budget.
struct AllocationProblem {
  GaussianSourceSet sources;
  double total_distortion;   // D
  double total_perception;   // P_kl, in nats

  AllocationProblem(GaussianSourceSet s, double d, double p_kl)
      : sources(std::move(s)), total_distortion(d), total_perception(p_kl) {
    if (!(total_distortion > 0.0))
      throw std::invalid_argument("AllocationProblem: total_distortion must be > 0");
    if (!(total_perception >= 0.0))
      throw std::invalid_argument("AllocationProblem: total_perception must be >= 0");
  }
};

struct AllocationSolution {
  Eigen::VectorXd distortions;     // D_i
  Eigen::VectorXd rates;           // R_i, nats
  double lambda_distortion = 0.0;  // multiplier on sum D_i <= D
  double lambda_perception = 0.0;  // multiplier on sum KL_i <= P_kl
  double total_rate = 0.0;         // nats
  double distortion_sum = 0.0;
  double perception_sum = 0.0;
  bool distortion_active = false;
  bool perception_active = false;
  double kkt_residual = 0.0;       // max stationarity residual over sources
  int iterations = 0;
};

/// Rate of one Gaussian source at distortion D_i: max(0, 0.5 log(var/D)).
double rate_of(double variance, double distortion);

/// KL divergence between the reconstruction N(0, var - D) and the source
/// N(0, var); strictly increasing in D on (0, var). Throws for D >= var
/// where the divergence is unbounded.
double perception_of(double variance, double distortion);

/// KKT solve by nested bisection: outer on the distortion multiplier, inner
/// on the perception multiplier, with the per-source stationarity condition
/// solved by 1-D root-finding. Handles all four active-set regimes.
AllocationSolution solve(const AllocationProblem& problem, double tol = 1e-9);

/// One row per (D, P_kl) grid pair.
struct SweepRow {
  double total_distortion;
  double total_perception;
  AllocationSolution solution;
};

std::vector<SweepRow> sweep(const GaussianSourceSet& sources,
                            const std::vector<double>& d_values,
                            const std::vector<double>& p_values, double tol = 1e-9);

/// CSV with the fixed header: D,P_kl,D_1..,R_1..,lambda_D,lambda_P,total_rate.
/// `bits` converts the rate columns from nats to bits.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool bits = false);

}  // namespace semcast
