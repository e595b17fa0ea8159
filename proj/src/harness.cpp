#include "pocmab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "pocmab/errors.hpp"

namespace pocmab {

namespace {

using json = nlohmann::json;

constexpr const char* kCsvHeader =
    "t,policy,mean_cum_regret,se_cum_regret,mean_norm_regret,mean_est_error,"
    "se_est_error";

std::string whitening_name(Whitening w) {
  return w == Whitening::estimate_marginal ? "estimate_marginal" : "output_noise";
}

Whitening whitening_from_name(const std::string& name) {
  if (name == "estimate_marginal") return Whitening::estimate_marginal;
  if (name == "output_noise") return Whitening::output_noise;
  throw ParseError("config.whitening: unknown value '" + name + "'");
}

json scheme_to_json(const GenScheme& scheme) {
  json j;
  if (scheme.kind == GenScheme::Kind::standard) {
    j["kind"] = "standard";
  } else {
    j["kind"] = "explicit";
    if (!scheme.instance)
      throw ValidationError("config.gen_scheme: explicit scheme carries no instance");
    j["instance"] = json::parse(instance_to_text(*scheme.instance));
  }
  return j;
}

GenScheme scheme_from_json(const json& v) {
  if (!v.is_object()) throw ParseError("config.gen_scheme: must be an object");
  std::string kind;
  try {
    kind = v.at("kind").get<std::string>();
  } catch (const json::exception&) {
    throw ParseError("config.gen_scheme.kind: missing or not a string");
  }
  if (kind == "standard") {
    for (const auto& item : v.items())
      if (item.key() != "kind")
        throw ParseError("config.gen_scheme: unknown key '" + item.key() + "'");
    return GenScheme::standard();
  }
  if (kind == "explicit") {
    for (const auto& item : v.items())
      if (item.key() != "kind" && item.key() != "instance")
        throw ParseError("config.gen_scheme: unknown key '" + item.key() + "'");
    if (!v.contains("instance"))
      throw ParseError("config.gen_scheme.instance: required for explicit scheme");
    return GenScheme::explicit_instance(instance_from_text(v.at("instance").dump()));
  }
  throw ParseError("config.gen_scheme.kind: unknown value '" + kind + "'");
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::vector<int> effective_checkpoints(const ExperimentConfig& cfg) {
  std::vector<int> cps = cfg.checkpoints;
  if (cps.empty()) {
    for (int t : {10, 50, 100, 250, 500, 1000})
      if (t >= 1 && t <= cfg.T) cps.push_back(t);
    return cps;
  }
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  return cps;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.d < 1) throw ValidationError("config.d: must be >= 1");
  if (cfg.N < 1) throw ValidationError("config.N: must be >= 1");
  if (cfg.T < 1) throw ValidationError("config.T: must be >= 1");
  if (cfg.replications < 1)
    throw ValidationError("config.replications: must be >= 1");
  if (!(std::isfinite(cfg.prior_scale) && cfg.prior_scale > 0.0))
    throw ValidationError("config.prior_scale: must be positive");
  if (cfg.policies.empty())
    throw ValidationError("config.policies: must name at least one policy");
  for (int t : cfg.checkpoints)
    if (t < 1 || t > cfg.T)
      throw ValidationError("config.checkpoints: entries must lie in [1, T]");
  if (cfg.gen_scheme.kind == GenScheme::Kind::explicit_fields) {
    if (!cfg.gen_scheme.instance)
      throw ValidationError("config.gen_scheme: explicit scheme carries no instance");
    const ProblemInstance& inst = *cfg.gen_scheme.instance;
    if (inst.d != cfg.d || inst.N != cfg.N)
      throw ValidationError("config.gen_scheme: instance dimensions disagree with d/N");
    validate_instance(inst);
  }
}

ExperimentConfig parse_config(const std::string& source) {
  json j;
  const auto first = source.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    j = json::object();
  } else {
    try {
      j = json::parse(source);
    } catch (const json::exception& e) {
      throw ParseError(std::string("config: invalid JSON: ") + e.what());
    }
  }
  if (j.is_null()) j = json::object();
  if (!j.is_object()) throw ParseError("config: top level must be an object");

  ExperimentConfig cfg;
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const json& value = item.value();
    try {
      if (key == "d") {
        cfg.d = value.get<int>();
      } else if (key == "N") {
        cfg.N = value.get<int>();
      } else if (key == "T") {
        cfg.T = value.get<int>();
      } else if (key == "replications") {
        cfg.replications = value.get<int>();
      } else if (key == "master_seed") {
        cfg.master_seed = value.get<uint64_t>();
      } else if (key == "policies") {
        if (!value.is_array())
          throw ParseError("config.policies: must be an array of names");
        cfg.policies.clear();
        for (const auto& p : value)
          cfg.policies.push_back(policy_from_name(p.get<std::string>()));
      } else if (key == "prior_scale") {
        cfg.prior_scale = value.get<double>();
      } else if (key == "scaled_posterior") {
        cfg.scaled_posterior = value.get<bool>();
      } else if (key == "gen_scheme") {
        cfg.gen_scheme = scheme_from_json(value);
      } else if (key == "checkpoints") {
        if (!value.is_array())
          throw ParseError("config.checkpoints: must be an array of rounds");
        cfg.checkpoints.clear();
        for (const auto& t : value) cfg.checkpoints.push_back(t.get<int>());
      } else if (key == "output_path") {
        cfg.output_path = value.get<std::string>();
      } else if (key == "whitening") {
        cfg.whitening = whitening_from_name(value.get<std::string>());
      } else {
        throw ParseError("config: unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError("config." + key + ": " + e.what());
    }
  }
  validate_config(cfg);
  cfg.checkpoints = effective_checkpoints(cfg);
  return cfg;
}

std::string emit_config(const ExperimentConfig& cfg) {
  json j;
  j["d"] = cfg.d;
  j["N"] = cfg.N;
  j["T"] = cfg.T;
  j["replications"] = cfg.replications;
  j["master_seed"] = cfg.master_seed;
  json names = json::array();
  for (PolicyKind kind : cfg.policies) names.push_back(policy_name(kind));
  j["policies"] = names;
  j["prior_scale"] = cfg.prior_scale;
  j["scaled_posterior"] = cfg.scaled_posterior;
  j["gen_scheme"] = scheme_to_json(cfg.gen_scheme);
  j["checkpoints"] = effective_checkpoints(cfg);
  j["output_path"] = cfg.output_path;
  j["whitening"] = whitening_name(cfg.whitening);
  return j.dump(2);
}

ReplicationRecords run_replication(const ExperimentConfig& cfg, int rep_index) {
  validate_config(cfg);
  if (rep_index < 0)
    throw IndexOutOfRange("run_replication: rep_index must be >= 0");

  RandomStream root(cfg.master_seed);
  RandomStream rep = root.derive(static_cast<uint64_t>(rep_index));
  RandomStream instance_rng = rep.derive("instance");
  RandomStream context_rng = rep.derive("contexts");
  RandomStream output_rng = rep.derive("output-noise");
  RandomStream reward_rng = rep.derive("reward-noise");

  ReplicationRecords records;
  records.rep_index = rep_index;
  records.instance = generate_instance(cfg.d, cfg.N, cfg.gen_scheme, instance_rng);
  const ProblemInstance& inst = records.instance;
  const DerivedOperators ops = derive_operators(inst, cfg.whitening);
  const std::vector<int> cps = effective_checkpoints(cfg);

  const SpdMatrix prior =
      SpdMatrix::diagonal(Vector::Constant(cfg.d, cfg.prior_scale));

  struct Runner {
    PolicyKind kind;
    PosteriorState state;
    RandomStream rng;
    PolicyTrajectory traj;
  };
  std::vector<Runner> runners;
  runners.reserve(cfg.policies.size());
  for (PolicyKind kind : cfg.policies) {
    Runner r{kind, init_posterior(prior, cfg.d),
             rep.derive("policy:" + policy_name(kind)), {}};
    r.traj.kind = kind;
    r.traj.outcomes.reserve(cfg.T);
    runners.push_back(std::move(r));
  }

  ActOptions options;
  options.scaled_posterior = cfg.scaled_posterior;
  options.sigma2_ry = ops.sigma2_ry;
  const double noise_sd = std::sqrt(inst.sigma2);

  for (int t = 1; t <= cfg.T; ++t) {
    const RoundDraw draw = spawn_round(inst, ops, context_rng, output_rng);
    Vector reward_noise(inst.N);
    for (int i = 0; i < inst.N; ++i)
      reward_noise(i) = noise_sd * reward_rng.next_gaussian();
    const bool at_checkpoint = std::binary_search(cps.begin(), cps.end(), t);

    for (Runner& r : runners) {
      if (at_checkpoint) r.traj.checkpoint_mu.push_back(r.state.mu_hat);

      const Action action = act(r.kind, r.state, draw, inst, r.rng, options);
      const bool hidden_basis = r.kind == PolicyKind::full_obs_thompson;
      const Matrix& basis = hidden_basis ? *draw.contexts : draw.context_estimates;
      const int oracle_arm = select_arm(basis, inst.mu_star);

      RoundOutcome outcome;
      outcome.t = t;
      outcome.chosen = action.arm;
      outcome.oracle = oracle_arm;
      outcome.reward =
          draw.contexts->row(action.arm).dot(inst.mu_star) + reward_noise(action.arm);
      outcome.instant_regret =
          instant_regret(basis, action.arm, oracle_arm, inst.mu_star);
      outcome.mu_tilde = action.mu_used;
      outcome.mu_hat_snapshot = r.state.mu_hat;
      r.traj.outcomes.push_back(std::move(outcome));

      const Vector update_vec = basis.row(action.arm).transpose();
      r.state = update_posterior(r.state, update_vec, r.traj.outcomes.back().reward);
    }
  }

  records.trajectories.reserve(runners.size());
  for (Runner& r : runners) records.trajectories.push_back(std::move(r.traj));
  return records;
}

int resolve_thread_count(int replications) {
  int workers = 0;
  if (const char* env = std::getenv("POCMAB_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && parsed > 0) workers = static_cast<int>(parsed);
  }
  if (workers <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    workers = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return std::max(1, std::min(workers, replications));
}

namespace {

/// Per-replication reductions: prefix regret and estimation error per round,
/// plus checkpoint snapshots, all in config policy order.
struct ReplicationSummary {
  std::vector<std::vector<double>> cum_regret;
  std::vector<std::vector<double>> est_error;
  std::vector<std::vector<Vector>> snapshots;
};

ReplicationSummary summarize(const ExperimentConfig& cfg,
                             const ReplicationRecords& records) {
  ReplicationSummary s;
  const int P = static_cast<int>(records.trajectories.size());
  s.cum_regret.resize(P);
  s.est_error.resize(P);
  s.snapshots.resize(P);
  for (int p = 0; p < P; ++p) {
    const PolicyTrajectory& traj = records.trajectories[p];
    s.cum_regret[p] = cumulative_regret(traj.outcomes);
    s.est_error[p].reserve(traj.outcomes.size());
    for (const RoundOutcome& oc : traj.outcomes)
      s.est_error[p].push_back(
          estimation_error(oc.mu_hat_snapshot, records.instance.mu_star, cfg.d));
    s.snapshots[p] = traj.checkpoint_mu;
  }
  return s;
}

struct Accumulator {
  std::vector<double> sum;
  std::vector<double> sumsq;

  explicit Accumulator(int n) : sum(n, 0.0), sumsq(n, 0.0) {}

  void add(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum[i] += values[i];
      sumsq[i] += values[i] * values[i];
    }
  }

  double mean(int i, int reps) const { return sum[i] / reps; }

  double se(int i, int reps) const {
    if (reps < 2) return 0.0;
    const double m = mean(i, reps);
    const double var =
        std::max(0.0, (sumsq[i] - reps * m * m) / (reps - 1.0));
    return std::sqrt(var / reps);
  }
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const int R = cfg.replications;
  const int P = static_cast<int>(cfg.policies.size());

  ExperimentResult result;
  result.checkpoints = effective_checkpoints(cfg);
  result.policies = cfg.policies;
  result.checkpoint_snapshots.assign(P, {});
  for (int p = 0; p < P; ++p) result.checkpoint_snapshots[p].reserve(R);

  std::vector<Accumulator> regret_acc(P, Accumulator(cfg.T));
  std::vector<Accumulator> error_acc(P, Accumulator(cfg.T));

  auto reduce = [&](ReplicationSummary&& s) {
    for (int p = 0; p < P; ++p) {
      regret_acc[p].add(s.cum_regret[p]);
      error_acc[p].add(s.est_error[p]);
      result.checkpoint_snapshots[p].push_back(std::move(s.snapshots[p]));
    }
  };

  const int workers = resolve_thread_count(R);
  if (workers <= 1) {
    for (int rep = 0; rep < R; ++rep)
      reduce(summarize(cfg, run_replication(cfg, rep)));
  } else {
    std::mutex mu;
    std::condition_variable cv;
    std::map<int, ReplicationSummary> ready;
    std::atomic<int> next_claim{0};
    std::atomic<int> needed{0};
    std::exception_ptr error;
    const std::size_t buffer_cap = static_cast<std::size_t>(2 * workers + 16);

    auto work = [&]() {
      while (true) {
        const int rep = next_claim.fetch_add(1);
        if (rep >= R) return;
        try {
          ReplicationSummary s = summarize(cfg, run_replication(cfg, rep));
          std::unique_lock<std::mutex> lock(mu);
          // the item the reducer waits for must always be insertable
          cv.wait(lock, [&] {
            return error || rep == needed.load() || ready.size() < buffer_cap;
          });
          if (error) return;
          ready.emplace(rep, std::move(s));
          cv.notify_all();
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          cv.notify_all();
          return;
        }
      }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);

    for (int expected = 0; expected < R; ++expected) {
      needed.store(expected);
      ReplicationSummary s;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.notify_all();
        cv.wait(lock, [&] { return error || ready.count(expected) > 0; });
        if (error) break;
        s = std::move(ready.at(expected));
        ready.erase(expected);
        cv.notify_all();
      }
      reduce(std::move(s));
    }

    for (std::thread& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  result.records.reserve(static_cast<std::size_t>(P) * cfg.T);
  for (int p = 0; p < P; ++p) {
    for (int t = 1; t <= cfg.T; ++t) {
      AggregateRecord rec;
      rec.t = t;
      rec.policy = cfg.policies[p];
      rec.mean_cum_regret = regret_acc[p].mean(t - 1, R);
      rec.se_cum_regret = regret_acc[p].se(t - 1, R);
      if (t >= 2 && cfg.N >= 2)
        rec.mean_norm_regret = normalized_regret(rec.mean_cum_regret, cfg.d, t, cfg.N);
      rec.mean_est_error = error_acc[p].mean(t - 1, R);
      rec.se_est_error = error_acc[p].se(t - 1, R);
      result.records.push_back(rec);
    }
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const AggregateRecord& a, const AggregateRecord& b) {
              const std::string an = policy_name(a.policy);
              const std::string bn = policy_name(b.policy);
              if (an != bn) return an < bn;
              return a.t < b.t;
            });
  return result;
}

std::string csv_text(const std::vector<AggregateRecord>& records) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const AggregateRecord& r : records) {
    out << r.t << ',' << policy_name(r.policy) << ','
        << format_value(r.mean_cum_regret) << ',' << format_value(r.se_cum_regret)
        << ',';
    if (r.mean_norm_regret) out << format_value(*r.mean_norm_regret);
    out << ',' << format_value(r.mean_est_error) << ','
        << format_value(r.se_est_error) << '\n';
  }
  return out.str();
}

void emit_csv(const std::vector<AggregateRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << csv_text(records);
  if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

}  // namespace

std::vector<AggregateRecord> parse_csv_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError("csv: unexpected header: " + line);

  std::vector<AggregateRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 7)
      throw ParseError("csv line " + std::to_string(line_no) + ": expected 7 fields");
    try {
      AggregateRecord r;
      r.t = std::stoi(f[0]);
      r.policy = policy_from_name(f[1]);
      r.mean_cum_regret = std::stod(f[2]);
      r.se_cum_regret = std::stod(f[3]);
      if (!f[4].empty()) r.mean_norm_regret = std::stod(f[4]);
      r.mean_est_error = std::stod(f[5]);
      r.se_est_error = std::stod(f[6]);
      records.push_back(r);
    } catch (const std::invalid_argument&) {
      throw ParseError("csv line " + std::to_string(line_no) + ": bad number");
    } catch (const std::out_of_range&) {
      throw ParseError("csv line " + std::to_string(line_no) + ": number out of range");
    }
  }
  return records;
}

std::vector<AggregateRecord> parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_text(buf.str());
}

}  // namespace pocmab
