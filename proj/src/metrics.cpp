#include "pocmab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pocmab/errors.hpp"

namespace pocmab {

double instant_regret(const Matrix& estimates, int chosen, int oracle,
                      const Vector& mu_star) {
  if (chosen < 0 || chosen >= estimates.rows())
    throw IndexOutOfRange("instant_regret: chosen arm out of range");
  if (oracle < 0 || oracle >= estimates.rows())
    throw IndexOutOfRange("instant_regret: oracle arm out of range");
  if (estimates.cols() != mu_star.size())
    throw DimensionMismatch("instant_regret: dimension mismatch");
  return (estimates.row(oracle) - estimates.row(chosen)).dot(mu_star);
}

std::vector<double> cumulative_regret(const std::vector<RoundOutcome>& outcomes) {
  std::vector<double> cum(outcomes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    total += outcomes[i].instant_regret;
    cum[i] = total;
  }
  return cum;
}

double estimation_error(const Vector& mu_hat, const Vector& mu_star, int d) {
  if (mu_hat.size() != d || mu_star.size() != d)
    throw DimensionMismatch("estimation_error: vectors must have length d");
  return (mu_hat - mu_star).norm() / std::sqrt(static_cast<double>(d));
}

double normalized_regret(double regret, int d, int t, int N) {
  if (t < 2 || N < 2)
    throw UndefinedNormalization("normalized_regret: needs t >= 2 and N >= 2");
  return regret / (d * std::log(static_cast<double>(t)) *
                   std::sqrt(std::log(static_cast<double>(N))));
}

namespace {

Constants finalize_constants(int N, int samples, double sum1, double sum2,
                             double sum4) {
  const double n = static_cast<double>(samples);
  Constants c;
  c.N = N;
  c.mc_samples = samples;
  c.c_N = sum1 / n;
  c.k_N = sum2 / n;
  const double var_max = std::max(0.0, sum2 / n - c.c_N * c.c_N);
  const double var_max2 = std::max(0.0, sum4 / n - c.k_N * c.k_N);
  c.std_error_c = std::sqrt(var_max / n);
  c.std_error_k = std::sqrt(var_max2 / n);
  return c;
}

}  // namespace

Constants estimate_constants(int N, int samples, RandomStream& rng) {
  if (N < 1) throw ValidationError("estimate_constants: N must be >= 1");
  if (samples < 2) throw ValidationError("estimate_constants: too few samples");
  double sum1 = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int s = 0; s < samples; ++s) {
    double m = rng.next_gaussian();
    for (int i = 1; i < N; ++i) m = std::max(m, rng.next_gaussian());
    const double m2 = m * m;
    sum1 += m;
    sum2 += m2;
    sum4 += m2 * m2;
  }
  return finalize_constants(N, samples, sum1, sum2, sum4);
}

std::vector<Constants> estimate_constants_upto(int max_N, int samples,
                                               RandomStream& rng) {
  if (max_N < 1) throw ValidationError("estimate_constants_upto: max_N must be >= 1");
  if (samples < 2) throw ValidationError("estimate_constants_upto: too few samples");
  std::vector<double> sum1(max_N, 0.0), sum2(max_N, 0.0), sum4(max_N, 0.0);
  for (int s = 0; s < samples; ++s) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < max_N; ++i) {
      m = std::max(m, rng.next_gaussian());
      const double m2 = m * m;
      sum1[i] += m;
      sum2[i] += m2;
      sum4[i] += m2 * m2;
    }
  }
  std::vector<Constants> out(max_N);
  for (int i = 0; i < max_N; ++i)
    out[i] = finalize_constants(i + 1, samples, sum1[i], sum2[i], sum4[i]);
  return out;
}

LimitQuantities limit_quantities(const DerivedOperators& ops, const Vector& mu_star,
                                 const Constants& constants) {
  const Vector s_mu = ops.S.mat() * mu_star;
  const Matrix proj = projection_matrix(s_mu);
  const int d = static_cast<int>(mu_star.size());
  Matrix m = proj * (constants.k_N - 1.0) + Matrix::Identity(d, d);
  m = 0.5 * (m + m.transpose());

  LimitQuantities lim;
  lim.S = ops.S;
  lim.M = SpdMatrix(m);
  const Matrix m_inv = spd_inverse(cholesky(lim.M)).mat();
  Matrix cov = ops.S_inv.mat() * m_inv * ops.S_inv.mat() * ops.sigma2_ry;
  cov = 0.5 * (cov + cov.transpose());
  lim.limit_cov = SpdMatrix(cov);
  return lim;
}

double angle_theta(const SpdMatrix& S, const Vector& mu_star, const Vector& mu_tilde) {
  const Vector a = S.mat() * mu_star;
  const Vector b = S.mat() * mu_tilde;
  if (!(a.squaredNorm() > 0.0) || !(b.squaredNorm() > 0.0))
    throw ZeroVector("angle_theta: vector vanishes after whitening");
  const double cosine = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
  return std::acos(cosine);
}

RateReport covariance_rate_check(const std::vector<std::vector<Vector>>& snapshots,
                                 const std::vector<int>& checkpoints,
                                 const LimitQuantities& limit) {
  const int reps = static_cast<int>(snapshots.size());
  if (reps < 200)
    throw InsufficientReplications("covariance_rate_check: needs >= 200 replications");

  RateReport report;
  report.replications = reps;
  report.limit_trace = limit.limit_cov.mat().trace();
  if (checkpoints.empty()) return report;

  for (const auto& rep : snapshots)
    if (rep.size() != checkpoints.size())
      throw DimensionMismatch("covariance_rate_check: snapshot count per replication "
                              "must match checkpoints");

  const double r = static_cast<double>(reps);
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const int d = static_cast<int>(snapshots[0][k].size());
    Vector mean = Vector::Zero(d);
    for (const auto& rep : snapshots) mean += rep[k];
    mean /= r;

    // trace of the sample covariance is the sum of per-component variances
    Vector var = Vector::Zero(d);
    for (const auto& rep : snapshots) {
      const Vector dev = rep[k] - mean;
      var += dev.cwiseProduct(dev);
    }
    var /= (r - 1.0);

    const double t = static_cast<double>(checkpoints[k]);
    double var_of_trace = 0.0;
    for (int j = 0; j < d; ++j) var_of_trace += 2.0 * var(j) * var(j) / (r - 1.0);

    RatePoint point;
    point.t = checkpoints[k];
    point.scaled_trace = t * var.sum();
    point.ratio = point.scaled_trace / report.limit_trace;
    point.band = 3.0 * t * std::sqrt(var_of_trace) / report.limit_trace;
    report.points.push_back(point);
  }
  return report;
}

}  // namespace pocmab
