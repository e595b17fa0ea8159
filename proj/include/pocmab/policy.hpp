#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pocmab/environment.hpp"
#include "pocmab/linalg.hpp"
#include "pocmab/random.hpp"

namespace pocmab {

/// Gaussian posterior over the reward parameter after t-1 updates.
/// B = prior precision + sum of x_hat x_hat^T over past pulls;
/// mu_hat = B^{-1} * sum of x_hat * reward.
struct PosteriorState {
  SpdMatrix B;
  Vector mu_hat;
  int t = 1;
  LowerTriangular chol_B;
};

struct History {
  std::vector<Vector> chosen_estimates;
  std::vector<double> rewards;
};

enum class PolicyKind { thompson, greedy, random, oracle, full_obs_thompson };

std::string policy_name(PolicyKind kind);
PolicyKind policy_from_name(std::string_view name);

/// t = 1, mu_hat = 0, B = prior^{-1}.
PosteriorState init_posterior(const SpdMatrix& prior, int d);

/// Draws from N(mu_hat, variance_scale * B^{-1}).
Vector sample_parameter(const PosteriorState& state, RandomStream& rng,
                        double variance_scale = 1.0);

/// Smallest index attaining max_i estimates.row(i) . mu.
int select_arm(const Matrix& estimates, const Vector& mu);

/// B' = B + x_hat x_hat^T, mu' = B'^{-1} (B mu_hat + x_hat * reward), t' = t+1.
PosteriorState update_posterior(const PosteriorState& state, const Vector& x_hat,
                                double reward);

PosteriorState posterior_from_history(const SpdMatrix& prior, const History& hist);

struct ActOptions {
  bool scaled_posterior = false;  // sample from N(mu_hat, sigma2_ry * B^{-1})
  double sigma2_ry = 1.0;         // used only when scaled_posterior
};

struct Action {
  int arm = 0;
  Vector mu_used;  // the comparison vector the decision maximized against
};

/// thompson / greedy / random act on draw.context_estimates; oracle compares
/// estimates against mu_star; full_obs_thompson needs draw.contexts and
/// throws OracleAccessDenied when they were stripped.
Action act(PolicyKind kind, const PosteriorState& state, const RoundDraw& draw,
           const ProblemInstance& inst, RandomStream& rng,
           const ActOptions& options = {});

}  // namespace pocmab
