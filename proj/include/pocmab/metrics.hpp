#pragma once

#include <vector>

#include "pocmab/environment.hpp"
#include "pocmab/linalg.hpp"
#include "pocmab/random.hpp"

namespace pocmab {

struct RoundOutcome {
  int t = 0;
  int chosen = 0;
  int oracle = 0;
  double reward = 0.0;
  double instant_regret = 0.0;
  Vector mu_tilde;
  Vector mu_hat_snapshot;  // posterior mean entering round t
};

/// Monte-Carlo estimates of the first two moments of the maximum of N
/// independent standard normals.
struct Constants {
  int N = 0;
  double c_N = 0.0;  // E[max]
  double k_N = 0.0;  // E[max^2]
  int mc_samples = 0;
  double std_error_c = 0.0;
  double std_error_k = 0.0;
};

/// Asymptotic-covariance ingredients: M = proj(S mu*) (k_N - 1) + I has
/// eigenvalues {k_N, 1 x (d-1)}; limit_cov is the limit of t * Cov(mu_hat),
/// equal to (S M S)^{-1} * sigma2_ry.
struct LimitQuantities {
  SpdMatrix S;
  SpdMatrix M;
  SpdMatrix limit_cov;
};

/// Gap (x_hat_oracle - x_hat_chosen)^T mu_star; nonnegative when `oracle`
/// maximizes estimates * mu_star.
double instant_regret(const Matrix& estimates, int chosen, int oracle,
                      const Vector& mu_star);

std::vector<double> cumulative_regret(const std::vector<RoundOutcome>& outcomes);

/// ||mu_hat - mu_star|| / sqrt(d).
double estimation_error(const Vector& mu_hat, const Vector& mu_star, int d);

/// regret / (d * ln t * sqrt(ln N)); undefined for t < 2 or N < 2.
double normalized_regret(double regret, int d, int t, int N);

Constants estimate_constants(int N, int samples, RandomStream& rng);

/// Constants for every N in [1, max_N] from one shared sample set: each
/// sample draws max_N normals and sweeps the prefix maximum.
std::vector<Constants> estimate_constants_upto(int max_N, int samples,
                                               RandomStream& rng);

LimitQuantities limit_quantities(const DerivedOperators& ops, const Vector& mu_star,
                                 const Constants& constants);

/// Angle in [0, pi] between S*mu_star and S*mu_tilde.
double angle_theta(const SpdMatrix& S, const Vector& mu_star, const Vector& mu_tilde);

struct RatePoint {
  int t = 0;
  double scaled_trace = 0.0;  // t * trace(sample Cov(mu_hat(t)))
  double ratio = 0.0;         // scaled_trace / trace(limit_cov)
  double band = 0.0;          // 3 standard errors of the ratio
};

struct RateReport {
  std::vector<RatePoint> points;
  double limit_trace = 0.0;
  int replications = 0;
};

/// snapshots[rep][k] is mu_hat at checkpoints[k] for replication rep.
/// Requires at least 200 replications.
RateReport covariance_rate_check(const std::vector<std::vector<Vector>>& snapshots,
                                 const std::vector<int>& checkpoints,
                                 const LimitQuantities& limit);

}  // namespace pocmab
