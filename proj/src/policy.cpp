#include "pocmab/policy.hpp"

#include <cmath>

#include "pocmab/errors.hpp"

namespace pocmab {

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::thompson: return "thompson";
    case PolicyKind::greedy: return "greedy";
    case PolicyKind::random: return "random";
    case PolicyKind::oracle: return "oracle";
    case PolicyKind::full_obs_thompson: return "full_obs_thompson";
  }
  throw ValidationError("policy_name: unknown kind");
}

PolicyKind policy_from_name(std::string_view name) {
  if (name == "thompson") return PolicyKind::thompson;
  if (name == "greedy") return PolicyKind::greedy;
  if (name == "random") return PolicyKind::random;
  if (name == "oracle") return PolicyKind::oracle;
  if (name == "full_obs_thompson") return PolicyKind::full_obs_thompson;
  throw ParseError("unknown policy name: " + std::string(name));
}

PosteriorState init_posterior(const SpdMatrix& prior, int d) {
  if (prior.dim() != d)
    throw DimensionMismatch("init_posterior: prior must be d x d");
  PosteriorState state;
  state.B = spd_inverse(cholesky(prior));
  state.mu_hat = Vector::Zero(d);
  state.t = 1;
  state.chol_B = cholesky(state.B);
  return state;
}

Vector sample_parameter(const PosteriorState& state, RandomStream& rng,
                        double variance_scale) {
  if (!(variance_scale > 0.0))
    throw ValidationError("sample_parameter: variance_scale must be positive");
  const Vector unit = mvn_sample_precision(Vector::Zero(state.mu_hat.size()),
                                           state.chol_B, rng);
  return state.mu_hat + std::sqrt(variance_scale) * unit;
}

int select_arm(const Matrix& estimates, const Vector& mu) {
  if (estimates.rows() < 1)
    throw DimensionMismatch("select_arm: need at least one arm");
  if (estimates.cols() != mu.size())
    throw DimensionMismatch("select_arm: estimate and parameter dims differ");
  const Vector scores = estimates * mu;
  int best = 0;
  for (int i = 1; i < scores.size(); ++i)
    if (scores(i) > scores(best)) best = i;
  return best;
}

PosteriorState update_posterior(const PosteriorState& state, const Vector& x_hat,
                                double reward) {
  if (x_hat.size() != state.mu_hat.size())
    throw DimensionMismatch("update_posterior: x_hat has wrong length");
  PosteriorState next;
  Matrix b = state.B.mat() + x_hat * x_hat.transpose();
  b = 0.5 * (b + b.transpose());
  next.B = SpdMatrix(b);
  next.chol_B = cholesky(next.B);
  next.mu_hat =
      spd_solve(next.chol_B, state.B.mat() * state.mu_hat + x_hat * reward);
  next.t = state.t + 1;
  return next;
}

PosteriorState posterior_from_history(const SpdMatrix& prior, const History& hist) {
  if (hist.chosen_estimates.size() != hist.rewards.size())
    throw DimensionMismatch("history: estimate and reward counts differ");
  const int d = prior.dim();
  Matrix b = spd_inverse(cholesky(prior)).mat();
  Vector rhs = Vector::Zero(d);
  for (std::size_t k = 0; k < hist.rewards.size(); ++k) {
    const Vector& x = hist.chosen_estimates[k];
    if (x.size() != d)
      throw DimensionMismatch("history: estimate has wrong length");
    b += x * x.transpose();
    rhs += x * hist.rewards[k];
  }
  b = 0.5 * (b + b.transpose());
  PosteriorState state;
  state.B = SpdMatrix(b);
  state.chol_B = cholesky(state.B);
  state.mu_hat = spd_solve(state.chol_B, rhs);
  state.t = static_cast<int>(hist.rewards.size()) + 1;
  return state;
}

Action act(PolicyKind kind, const PosteriorState& state, const RoundDraw& draw,
           const ProblemInstance& inst, RandomStream& rng,
           const ActOptions& options) {
  const double scale = options.scaled_posterior ? options.sigma2_ry : 1.0;
  Action action;
  switch (kind) {
    case PolicyKind::thompson:
      action.mu_used = sample_parameter(state, rng, scale);
      action.arm = select_arm(draw.context_estimates, action.mu_used);
      return action;
    case PolicyKind::greedy:
      action.mu_used = state.mu_hat;
      action.arm = select_arm(draw.context_estimates, action.mu_used);
      return action;
    case PolicyKind::random:
      action.mu_used = Vector::Zero(inst.d);
      action.arm = static_cast<int>(
          rng.next_below(static_cast<uint64_t>(draw.context_estimates.rows())));
      return action;
    case PolicyKind::oracle:
      action.mu_used = inst.mu_star;
      action.arm = select_arm(draw.context_estimates, action.mu_used);
      return action;
    case PolicyKind::full_obs_thompson:
      if (!draw.contexts)
        throw OracleAccessDenied("full_obs_thompson: hidden contexts unavailable");
      action.mu_used = sample_parameter(state, rng, scale);
      action.arm = select_arm(*draw.contexts, action.mu_used);
      return action;
  }
  throw ValidationError("act: unknown policy kind");
}

}  // namespace pocmab
