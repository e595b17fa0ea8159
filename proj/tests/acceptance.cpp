// Acceptance checks, one per statistical or behavioral guarantee the project
// makes. Run with no arguments for the full gate or with a single criterion
// number. Each criterion prints exactly one PASS/FAIL line.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "pocmab/cli.hpp"
#include "pocmab/environment.hpp"
#include "pocmab/errors.hpp"
#include "pocmab/harness.hpp"
#include "pocmab/metrics.hpp"
#include "pocmab/policy.hpp"

using namespace pocmab;

namespace {

bool emit(int criterion, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion,
              what.c_str(), detail.c_str());
  std::fflush(stdout);
  return ok;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

const AggregateRecord& record_at(const ExperimentResult& result, PolicyKind kind,
                                 int t) {
  for (const AggregateRecord& r : result.records)
    if (r.policy == kind && r.t == t) return r;
  throw IndexOutOfRange("no record for requested policy/round");
}

// --- quadrature oracle for the order-statistic constants ---

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double quadrature_moment(int N, int power) {
  const double a = -10.0, b = 10.0;
  const int n_intervals = 20000;
  const double h = (b - a) / n_intervals;
  auto f = [&](double x) {
    return N * std::pow(x, power) * std_normal_pdf(x) *
           std::pow(std_normal_cdf(x), N - 1);
  };
  double sum = f(a) + f(b);
  for (int i = 1; i < n_intervals; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

struct CoutCapture {
  std::ostringstream buf;
  std::streambuf* old;
  CoutCapture() : old(std::cout.rdbuf(buf.rdbuf())) {}
  ~CoutCapture() { std::cout.rdbuf(old); }
};

double parse_field(const std::string& text, const std::string& key) {
  const auto pos = text.find(key + "=");
  if (pos == std::string::npos) throw ParseError("missing field " + key);
  return std::stod(text.substr(pos + key.size() + 1));
}

ProblemInstance rate_check_instance() {
  ProblemInstance inst;
  inst.d = 3;
  inst.N = 10;
  inst.A.resize(3, 3);
  inst.A << 1.0, 0.2, 0.0,
            0.0, 1.0, 0.2,
            0.1, 0.0, 1.0;
  inst.sigma_x = SpdMatrix::identity(3);
  inst.sigma_y = SpdMatrix::identity(3);
  inst.sigma2 = 1.0;
  inst.mu_star.resize(3);
  inst.mu_star << 1.0, -0.5, 0.25;
  return inst;
}

// 1. Estimation error decays like t^{-1/2} in the reference setup.
bool criterion_1() {
  ExperimentConfig cfg;
  cfg.d = 10;
  cfg.N = 10;
  cfg.T = 1000;
  cfg.replications = 50;
  cfg.policies = {PolicyKind::thompson};
  cfg.master_seed = 1001;
  const ExperimentResult result = run_experiment(cfg);

  const std::vector<int> ts = {50, 100, 250, 500, 1000};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int t : ts) {
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(record_at(result, PolicyKind::thompson, t).mean_est_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(ts.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double ratio = record_at(result, PolicyKind::thompson, 1000).mean_est_error /
                       record_at(result, PolicyKind::thompson, 100).mean_est_error;
  const bool ok = slope >= -0.65 && slope <= -0.35 && ratio <= 0.45;
  return emit(1, ok, "estimation error decays at the square-root rate",
              "slope=" + fmt("%.3f", slope) + " in [-0.65,-0.35], e(1000)/e(100)=" +
                  fmt("%.3f", ratio) + " <= 0.45");
}

// 2. Normalized regret flattens late in the run for both arm counts.
bool criterion_2() {
  bool ok = true;
  std::string details;
  for (int N : {5, 20}) {
    ExperimentConfig cfg;
    cfg.d = 10;
    cfg.N = N;
    cfg.T = 2000;
    cfg.replications = 50;
    cfg.policies = {PolicyKind::thompson};
    cfg.master_seed = 1002 + static_cast<uint64_t>(N);
    const ExperimentResult result = run_experiment(cfg);

    double late = 0.0, mid = 0.0;
    int late_n = 0, mid_n = 0;
    for (const AggregateRecord& r : result.records) {
      if (!r.mean_norm_regret) continue;
      if (r.t >= 1600 && r.t <= 2000) {
        late += *r.mean_norm_regret;
        ++late_n;
      }
      if (r.t >= 600 && r.t <= 1000) {
        mid += *r.mean_norm_regret;
        ++mid_n;
      }
    }
    const double ratio = (late / late_n) / (mid / mid_n);
    ok = ok && ratio >= 0.6 && ratio <= 1.4;
    if (!details.empty()) details += ", ";
    details += "N=" + std::to_string(N) + " ratio=" + fmt("%.3f", ratio);
  }
  return emit(2, ok, "normalized regret is flat between mid and late windows",
              details + " in [0.6,1.4]");
}

// 3. Monte-Carlo constants match independent quadrature and the growth band.
bool criterion_3() {
  const double c2_exact = quadrature_moment(2, 1);
  const double c3_exact = quadrature_moment(3, 1);
  bool ok = std::abs(c2_exact - 1.0 / std::sqrt(std::numbers::pi)) < 1e-9 &&
            std::abs(c3_exact - 1.5 / std::sqrt(std::numbers::pi)) < 1e-9;

  std::string line2, line3;
  {
    CoutCapture cap;
    const int code2 = cli_main({"constants", "--n", "2", "--samples", "1000000"});
    const std::string first = cap.buf.str();
    const int code3 = cli_main({"constants", "--n", "3", "--samples", "1000000"});
    ok = ok && code2 == 0 && code3 == 0;
    line2 = first;
    line3 = cap.buf.str().substr(first.size());
  }
  if (line2.empty() || line3.empty())
    return emit(3, false, "order-statistic constants match the quadrature oracle",
                "constants subcommand produced no output");
  const double c2 = parse_field(line2, "c_N");
  const double se_c2 = parse_field(line2, "se_c");
  const double k2 = parse_field(line2, "k_N");
  const double se_k2 = parse_field(line2, "se_k");
  const double c3 = parse_field(line3, "c_N");
  const double se_c3 = parse_field(line3, "se_c");
  ok = ok && std::abs(c2 - c2_exact) <= 3.0 * se_c2;
  ok = ok && std::abs(c3 - c3_exact) <= 3.0 * se_c3;
  ok = ok && std::abs(k2 - 1.0) <= 3.0 * se_k2;

  RandomStream rng(10033);
  const std::vector<Constants> sweep = estimate_constants_upto(1000, 100000, rng);
  int band_violations = 0;
  for (int N = 2; N <= 1000; ++N)
    if (sweep[N - 1].c_N > 2.5 * std::sqrt(std::log(static_cast<double>(N))))
      ++band_violations;
  ok = ok && band_violations == 0;

  return emit(3, ok, "order-statistic constants match the quadrature oracle",
              "c2=" + fmt("%.5f", c2) + "(exact " + fmt("%.5f", c2_exact) + "), c3=" +
                  fmt("%.5f", c3) + "(exact " + fmt("%.5f", c3_exact) + "), k2=" +
                  fmt("%.5f", k2) + ", band violations=" +
                  std::to_string(band_violations));
}

// 4. Batch posterior equals the recursive fold on random histories.
bool criterion_4() {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = trial < 50 ? 2 : 10;
    RandomStream rng(20000 + static_cast<uint64_t>(trial));
    const SpdMatrix prior = SpdMatrix::identity(d);
    History hist;
    PosteriorState folded = init_posterior(prior, d);
    for (int step = 0; step < 500; ++step) {
      const Vector x = rng.gaussian_vector(d);
      const double r = rng.next_gaussian() * 2.0;
      hist.chosen_estimates.push_back(x);
      hist.rewards.push_back(r);
      folded = update_posterior(folded, x, r);
    }
    const PosteriorState batch = posterior_from_history(prior, hist);
    const double dev_b =
        (batch.B.mat() - folded.B.mat()).norm() / folded.B.mat().norm();
    const double dev_mu = (batch.mu_hat - folded.mu_hat).norm() / folded.mu_hat.norm();
    worst = std::max({worst, dev_b, dev_mu});
  }
  return emit(4, worst <= 1e-8, "batch and recursive posteriors coincide",
              "worst relative deviation=" + fmt("%.3g", worst) + " <= 1e-8");
}

// 5. The conditional-mean filter is statistically correct.
bool criterion_5() {
  ProblemInstance inst;
  inst.d = 10;
  inst.N = 2;
  inst.A = Matrix::Identity(10, 10);
  inst.sigma_x = SpdMatrix::identity(10);
  inst.sigma_y = SpdMatrix::identity(10);
  inst.sigma2 = 1.0;
  RandomStream mu_rng(30001);
  inst.mu_star = mu_rng.gaussian_vector(10);

  const DerivedOperators ops = derive_operators(inst);
  RandomStream rng(30002);
  const ValidationReport rpt = validate_filter(inst, ops, 100000, rng);
  const double reg_dev =
      (rpt.regression - 0.5 * Matrix::Identity(10, 10)).cwiseAbs().maxCoeff();
  const double expected_var = 0.5 * inst.mu_star.squaredNorm() + inst.sigma2;
  const double var_dev = std::abs(rpt.residual_variance - expected_var) / expected_var;
  bool ok = reg_dev <= 0.02 && var_dev <= 0.05;

  double worst_cov = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    RandomStream gen(30010 + static_cast<uint64_t>(trial));
    const ProblemInstance rnd = generate_instance(4, 3, GenScheme::standard(), gen);
    const DerivedOperators rnd_ops = derive_operators(rnd);
    RandomStream sample_rng(30020 + static_cast<uint64_t>(trial));
    const ValidationReport r = validate_filter(rnd, rnd_ops, 100000, sample_rng);
    worst_cov = std::max(worst_cov, r.cov_rel_dev_marginal);
  }
  ok = ok && worst_cov <= 0.05;
  return emit(5, ok, "context filter matches its closed form",
              "regression dev=" + fmt("%.4f", reg_dev) + " <= 0.02, residual var dev=" +
                  fmt("%.4f", var_dev) + " <= 0.05, worst cov dev=" +
                  fmt("%.4f", worst_cov) + " <= 0.05");
}

// 6. t * Cov(mu_hat) approaches the predicted asymptotic covariance.
bool criterion_6() {
  const ProblemInstance inst = rate_check_instance();
  ExperimentConfig cfg;
  cfg.d = 3;
  cfg.N = 10;
  cfg.T = 4000;
  cfg.replications = 2000;
  cfg.policies = {PolicyKind::thompson};
  cfg.gen_scheme = GenScheme::explicit_instance(inst);
  cfg.checkpoints = {1000, 2000, 4000};
  cfg.master_seed = 1006;
  const ExperimentResult result = run_experiment(cfg);

  RandomStream const_rng(40001);
  const Constants consts = estimate_constants(10, 1000000, const_rng);
  const DerivedOperators ops = derive_operators(inst);
  const LimitQuantities lim = limit_quantities(ops, inst.mu_star, consts);
  const RateReport report =
      covariance_rate_check(result.checkpoint_snapshots[0], result.checkpoints, lim);

  const RatePoint& final_point = report.points.back();
  const bool ok = final_point.ratio >= 0.7 && final_point.ratio <= 1.3;
  std::string trail;
  for (const RatePoint& p : report.points) {
    if (!trail.empty()) trail += ", ";
    trail += "t=" + std::to_string(p.t) + " ratio=" + fmt("%.3f", p.ratio);
  }
  return emit(6, ok, "scaled posterior covariance reaches its predicted limit",
              trail + "; final in [0.7,1.3]");
}

// 7. Policies rank the way their information advantages dictate.
bool criterion_7() {
  ExperimentConfig cfg;
  cfg.d = 10;
  cfg.N = 10;
  cfg.T = 1000;
  cfg.replications = 50;
  cfg.policies = {PolicyKind::thompson, PolicyKind::random, PolicyKind::oracle,
                  PolicyKind::full_obs_thompson};
  cfg.master_seed = 1007;
  const ExperimentResult result = run_experiment(cfg);

  const AggregateRecord& oracle = record_at(result, PolicyKind::oracle, 1000);
  const AggregateRecord& thompson = record_at(result, PolicyKind::thompson, 1000);
  const AggregateRecord& random_p = record_at(result, PolicyKind::random, 1000);
  const AggregateRecord& full_obs =
      record_at(result, PolicyKind::full_obs_thompson, 1000);

  const double pooled_se =
      std::sqrt(thompson.se_cum_regret * thompson.se_cum_regret +
                random_p.se_cum_regret * random_p.se_cum_regret);
  const double margin = random_p.mean_cum_regret - thompson.mean_cum_regret;
  const bool ok = oracle.mean_cum_regret == 0.0 && margin >= 3.0 * pooled_se &&
                  full_obs.mean_cum_regret <= thompson.mean_cum_regret;
  return emit(7, ok, "policy ranking follows information access",
              "oracle=" + fmt("%.3g", oracle.mean_cum_regret) + " (exact 0), random-thompson=" +
                  fmt("%.1f", margin) + " >= 3*se=" + fmt("%.1f", 3.0 * pooled_se) +
                  ", full_obs=" + fmt("%.1f", full_obs.mean_cum_regret) +
                  " <= thompson=" + fmt("%.1f", thompson.mean_cum_regret));
}

// 8. Identical runs with different worker counts emit identical bytes.
bool criterion_8() {
  const std::string cfg_path = "acceptance_threads.json";
  {
    std::ofstream out(cfg_path);
    out << R"({"d":4,"N":5,"T":200,"replications":16,)"
        << R"("policies":["thompson","greedy"],"master_seed":1008})";
  }
  const char* saved = std::getenv("POCMAB_THREADS");
  const std::string saved_value = saved ? saved : "";

  int code1 = 0, code8 = 0;
  {
    CoutCapture cap;
    setenv("POCMAB_THREADS", "1", 1);
    code1 = cli_main({"simulate", "--config", cfg_path, "--out", "acceptance_t1.csv"});
    setenv("POCMAB_THREADS", "8", 1);
    code8 = cli_main({"simulate", "--config", cfg_path, "--out", "acceptance_t8.csv"});
  }
  if (saved)
    setenv("POCMAB_THREADS", saved_value.c_str(), 1);
  else
    unsetenv("POCMAB_THREADS");

  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const std::string a = slurp("acceptance_t1.csv");
  const std::string b = slurp("acceptance_t8.csv");
  std::remove(cfg_path.c_str());
  std::remove("acceptance_t1.csv");
  std::remove("acceptance_t8.csv");

  const bool ok = code1 == 0 && code8 == 0 && !a.empty() && a == b;
  return emit(8, ok, "output is byte-identical across worker counts",
              std::string("bytes=") + std::to_string(a.size()) +
                  (a == b ? ", identical" : ", DIFFER"));
}

}  // namespace

int main(int argc, char** argv) {
  bool (*criteria[])() = {criterion_1, criterion_2, criterion_3, criterion_4,
                          criterion_5, criterion_6, criterion_7, criterion_8};
  const int total = 8;

  int failures = 0;
  if (argc > 1) {
    const int pick = std::atoi(argv[1]);
    if (pick < 1 || pick > total) {
      std::fprintf(stderr, "usage: %s [criterion 1..%d]\n", argv[0], total);
      return 2;
    }
    if (!criteria[pick - 1]()) ++failures;
  } else {
    for (int i = 0; i < total; ++i)
      if (!criteria[i]()) ++failures;
    std::printf("%d/%d criteria passed\n", total - failures, total);
  }
  return failures == 0 ? 0 : 1;
}
