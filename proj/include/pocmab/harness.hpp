#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pocmab/environment.hpp"
#include "pocmab/metrics.hpp"
#include "pocmab/policy.hpp"

namespace pocmab {

struct ExperimentConfig {
  int d = 10;
  int N = 10;
  int T = 1000;
  int replications = 50;
  uint64_t master_seed = 123456789;
  std::vector<PolicyKind> policies = {
      PolicyKind::thompson, PolicyKind::greedy, PolicyKind::random,
      PolicyKind::oracle, PolicyKind::full_obs_thompson};
  double prior_scale = 1.0;
  bool scaled_posterior = false;
  GenScheme gen_scheme;
  std::vector<int> checkpoints;  // empty => {10,50,100,250,500,1000} clipped to [1,T]
  std::string output_path = "results.csv";
  Whitening whitening = Whitening::estimate_marginal;
};

/// Checkpoints actually used for a config (defaults applied, clipped, sorted).
std::vector<int> effective_checkpoints(const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);

/// JSON text with keys matching the field names; empty/absent keys take
/// defaults; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& source);
std::string emit_config(const ExperimentConfig& cfg);

struct AggregateRecord {
  int t = 0;
  PolicyKind policy = PolicyKind::thompson;
  double mean_cum_regret = 0.0;
  double se_cum_regret = 0.0;
  std::optional<double> mean_norm_regret;
  double mean_est_error = 0.0;
  double se_est_error = 0.0;
};

struct PolicyTrajectory {
  PolicyKind kind = PolicyKind::thompson;
  std::vector<RoundOutcome> outcomes;   // one per round, t = 1..T
  std::vector<Vector> checkpoint_mu;    // mu_hat entering each checkpoint round
};

struct ReplicationRecords {
  int rep_index = 0;
  ProblemInstance instance;
  std::vector<PolicyTrajectory> trajectories;  // config policy order
};

/// One seeded trajectory bundle: a single instance and shared round draws,
/// every configured policy run against them. Deterministic in
/// (cfg.master_seed, rep_index); reward noise is drawn per (round, arm) so
/// one policy's choices never shift another's rewards.
ReplicationRecords run_replication(const ExperimentConfig& cfg, int rep_index);

struct ExperimentResult {
  std::vector<AggregateRecord> records;  // sorted by policy name, then t
  std::vector<int> checkpoints;
  std::vector<PolicyKind> policies;  // config order
  // snapshots[policy][rep][k]: mu_hat entering round checkpoints[k]
  std::vector<std::vector<std::vector<Vector>>> checkpoint_snapshots;
};

/// Worker count: POCMAB_THREADS if set and positive, else hardware
/// concurrency; always capped at `replications`.
int resolve_thread_count(int replications);

/// Runs all replications (in parallel when allowed) and reduces them in
/// replication order, so output is identical for any thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void emit_csv(const std::vector<AggregateRecord>& records, const std::string& path);
std::string csv_text(const std::vector<AggregateRecord>& records);
std::vector<AggregateRecord> parse_csv_text(const std::string& text);
std::vector<AggregateRecord> parse_csv(const std::string& path);

}  // namespace pocmab
