#pragma once

#include <optional>
#include <string>

#include "pocmab/linalg.hpp"
#include "pocmab/random.hpp"

namespace pocmab {

/// Generative world: hidden contexts x_i ~ N(0, Sigma_x) per arm, observed
/// outputs y_i = A x_i + noise with noise ~ N(0, Sigma_y), scalar rewards
/// r = x^T mu_star + N(0, sigma2) for the pulled arm.
struct ProblemInstance {
  int d = 0;
  int N = 0;
  Matrix A;
  SpdMatrix sigma_x;
  SpdMatrix sigma_y;
  double sigma2 = 1.0;
  Vector mu_star;
};

/// Checks dimensions, finiteness, A nonsingularity (smallest singular value
/// > 1e-8 * largest), SPD covariances, sigma2 > 0 and ||mu_star|| > 0.
/// Throws ValidationError / NotPositiveDefinite / DegenerateA.
void validate_instance(const ProblemInstance& inst);

/// Which covariance the whitening matrix S squares to.
enum class Whitening {
  estimate_marginal,  // S^2 = Cov(x_hat) = D (A Sigma_x A^T + Sigma_y) D^T (default)
  output_noise,       // S^2 = D Sigma_y D^T
};

/// Filter quantities computed once per instance.
struct DerivedOperators {
  Matrix D;             // x_hat = D y
  SpdMatrix sigma_xy;   // (A^T Sigma_y^{-1} A + Sigma_x^{-1})^{-1}
  double sigma2_ry;     // mu*^T sigma_xy mu* + sigma2
  SpdMatrix S;          // whitening matrix, S^2 per `whitening`
  SpdMatrix S_inv;
  Whitening whitening = Whitening::estimate_marginal;

  // caches for per-round sampling
  LowerTriangular chol_sigma_x;
  LowerTriangular chol_sigma_y;
  Matrix xhat_marginal_cov;  // D (A Sigma_x A^T + Sigma_y) D^T
};

DerivedOperators derive_operators(const ProblemInstance& inst,
                                  Whitening whitening = Whitening::estimate_marginal);

/// One time step of the environment, all N arms.
/// `contexts` is hidden information; strip it with without_hidden() to model
/// the observer's view.
struct RoundDraw {
  std::optional<Matrix> contexts;  // N x d
  Matrix outputs;                  // N x d
  Matrix context_estimates;        // N x d, row i = (D * outputs_i)^T

  RoundDraw without_hidden() const {
    RoundDraw r = *this;
    r.contexts.reset();
    return r;
  }
};

/// How generate_instance fills in the world.
struct GenScheme {
  enum class Kind { standard, explicit_fields };
  Kind kind = Kind::standard;
  // Required when kind == explicit_fields (d, N of the instance must match
  // the requested ones).
  std::optional<ProblemInstance> instance;

  static GenScheme standard() { return {}; }
  static GenScheme explicit_instance(ProblemInstance inst);
};

/// Standard scheme: rows of A and mu_star i.i.d. N(0, I), Sigma_x = Sigma_y = I,
/// sigma2 = 1; A redrawn (up to 100 times, else DegenerateA) until its
/// condition number is below 5d. Pure function of (d, N, scheme, rng seed).
ProblemInstance generate_instance(int d, int N, const GenScheme& scheme,
                                  RandomStream& rng);

/// Draws contexts and output noise from separate streams so environment
/// randomness can be partitioned by label.
RoundDraw spawn_round(const ProblemInstance& inst, const DerivedOperators& ops,
                      RandomStream& context_rng, RandomStream& noise_rng);

inline RoundDraw spawn_round(const ProblemInstance& inst, const DerivedOperators& ops,
                             RandomStream& rng) {
  return spawn_round(inst, ops, rng, rng);
}

double realize_reward(const ProblemInstance& inst, const Vector& context,
                      RandomStream& rng);

/// Monte-Carlo check of the conditional-Gaussian filter.
struct ValidationReport {
  int samples = 0;
  Matrix regression;                 // least-squares matrix of x on y
  double regression_max_abs_dev = 0; // vs D, entrywise
  double residual_variance = 0;      // Var(r - x_hat^T mu*)
  double residual_variance_expected = 0;  // sigma2_ry
  double residual_variance_rel_dev = 0;
  Matrix xhat_covariance;            // empirical Cov(x_hat)
  double cov_rel_dev_marginal = 0;      // vs D(A Sigma_x A^T + Sigma_y)D^T, operator norm
  double cov_rel_dev_output_noise = 0;  // vs D Sigma_y D^T, operator norm
};

ValidationReport validate_filter(const ProblemInstance& inst, const DerivedOperators& ops,
                                 int samples, RandomStream& rng);

/// Fixture serialization: JSON object with keys d, N, A (row-major),
/// sigma_x, sigma_y (row-major), sigma2, mu_star.
std::string instance_to_text(const ProblemInstance& inst);
ProblemInstance instance_from_text(const std::string& text);
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace pocmab
