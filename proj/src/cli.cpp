#include "pocmab/cli.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pocmab/errors.hpp"
#include "pocmab/harness.hpp"

namespace pocmab {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_simulate(const std::string& config_path, const std::string& out_override) {
  ExperimentConfig cfg = parse_config(read_file(config_path));
  if (!out_override.empty()) cfg.output_path = out_override;
  const ExperimentResult result = run_experiment(cfg);
  emit_csv(result.records, cfg.output_path);
  std::cout << "wrote " << cfg.output_path << " (" << result.records.size()
            << " rows, " << cfg.policies.size() << " policies, T=" << cfg.T
            << ", replications=" << cfg.replications << ")\n";
  return 0;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

int run_constants(int n, int samples, uint64_t seed) {
  RandomStream rng(seed);
  const Constants c = estimate_constants(n, samples, rng);
  std::cout << "N=" << c.N << " samples=" << c.mc_samples
            << " c_N=" << fmt("%.10g", c.c_N) << " se_c=" << fmt("%.10g", c.std_error_c)
            << " k_N=" << fmt("%.10g", c.k_N) << " se_k=" << fmt("%.10g", c.std_error_k)
            << '\n';
  return 0;
}

bool report(const char* name, bool ok, double value, double tol) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << " value=" << fmt("%.6g", value)
            << " tol=" << fmt("%.6g", tol) << '\n';
  return ok;
}

int run_validate(const std::string& config_path) {
  const ExperimentConfig cfg = parse_config(read_file(config_path));
  RandomStream root(cfg.master_seed);
  RandomStream rep = root.derive(0);
  RandomStream instance_rng = rep.derive("instance");
  const ProblemInstance inst =
      generate_instance(cfg.d, cfg.N, cfg.gen_scheme, instance_rng);
  const DerivedOperators ops = derive_operators(inst, cfg.whitening);

  RandomStream filter_rng = root.derive("validate:filter");
  const ValidationReport rpt = validate_filter(inst, ops, 100000, filter_rng);

  bool all_ok = true;
  all_ok &= report("filter-regression-vs-D", rpt.regression_max_abs_dev <= 0.05,
                   rpt.regression_max_abs_dev, 0.05);
  all_ok &= report("reward-residual-variance", rpt.residual_variance_rel_dev <= 0.05,
                   rpt.residual_variance_rel_dev, 0.05);
  const double cov_dev = cfg.whitening == Whitening::estimate_marginal
                             ? rpt.cov_rel_dev_marginal
                             : rpt.cov_rel_dev_output_noise;
  all_ok &= report("estimate-covariance-vs-whitening", cov_dev <= 0.05, cov_dev, 0.05);
  std::cout << "note: Cov(x_hat) relative deviation: estimate_marginal="
            << fmt("%.4g", rpt.cov_rel_dev_marginal)
            << " output_noise=" << fmt("%.4g", rpt.cov_rel_dev_output_noise) << '\n';

  RandomStream hist_rng = root.derive("validate:history");
  double worst = 0.0;
  const SpdMatrix prior = SpdMatrix::diagonal(Vector::Constant(cfg.d, cfg.prior_scale));
  for (int trial = 0; trial < 10; ++trial) {
    History hist;
    PosteriorState folded = init_posterior(prior, cfg.d);
    for (int step = 0; step < 200; ++step) {
      const Vector x = hist_rng.gaussian_vector(cfg.d);
      const double r = hist_rng.next_gaussian();
      hist.chosen_estimates.push_back(x);
      hist.rewards.push_back(r);
      folded = update_posterior(folded, x, r);
    }
    const PosteriorState batch = posterior_from_history(prior, hist);
    const double dev_b = (batch.B.mat() - folded.B.mat()).norm() / folded.B.mat().norm();
    const double dev_mu =
        (batch.mu_hat - folded.mu_hat).norm() / std::max(1e-300, folded.mu_hat.norm());
    worst = std::max({worst, dev_b, dev_mu});
  }
  all_ok &= report("posterior-batch-vs-recursive", worst <= 1e-8, worst, 1e-8);

  return all_ok ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Partially observable contextual bandit simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  auto* simulate = app.add_subcommand("simulate", "Run a configured experiment");
  simulate->add_option("--config", config_path, "Path to JSON config")->required();
  simulate->add_option("--out", out_override, "Override the configured CSV path");

  int n = 1;
  int samples = 1000000;
  uint64_t seed = 948377;
  auto* constants =
      app.add_subcommand("constants", "Estimate max-of-N-normals moments");
  constants->add_option("--n", n, "Number of arms N")->required()
      ->check(CLI::PositiveNumber);
  constants->add_option("--samples", samples, "Monte-Carlo sample count")
      ->check(CLI::PositiveNumber);
  constants->add_option("--seed", seed, "Random seed");

  std::string validate_config_path;
  auto* validate = app.add_subcommand("validate", "Check filter and posterior math");
  validate->add_option("--config", validate_config_path, "Path to JSON config")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return run_simulate(config_path, out_override);
    if (constants->parsed()) return run_constants(n, samples, seed);
    if (validate->parsed()) return run_validate(validate_config_path);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("pocmab");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace pocmab
