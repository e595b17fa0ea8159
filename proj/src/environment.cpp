#include "pocmab/environment.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "pocmab/errors.hpp"

namespace pocmab {

namespace {

using json = nlohmann::json;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

double operator_norm(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

void validate_instance(const ProblemInstance& inst) {
  require(inst.d >= 1, "instance: d must be >= 1");
  require(inst.N >= 1, "instance: N must be >= 1");
  require(inst.A.rows() == inst.d && inst.A.cols() == inst.d,
          "instance: A must be d x d");
  require(inst.A.allFinite(), "instance: A must be finite");
  require(inst.sigma_x.dim() == inst.d, "instance: sigma_x must be d x d");
  require(inst.sigma_y.dim() == inst.d, "instance: sigma_y must be d x d");
  require(std::isfinite(inst.sigma2) && inst.sigma2 > 0.0,
          "instance: sigma2 must be positive");
  require(inst.mu_star.size() == inst.d, "instance: mu_star must have length d");
  require(inst.mu_star.allFinite(), "instance: mu_star must be finite");
  if (!(inst.mu_star.squaredNorm() > 0.0))
    throw ZeroVector("instance: mu_star must be nonzero");

  Eigen::JacobiSVD<Matrix> svd(inst.A);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(inst.d - 1);
  if (!(smin > 1e-8 * smax))
    throw DegenerateA("instance: A is singular or near-singular");

  cholesky(inst.sigma_x);
  cholesky(inst.sigma_y);
}

DerivedOperators derive_operators(const ProblemInstance& inst, Whitening whitening) {
  validate_instance(inst);

  DerivedOperators ops;
  ops.whitening = whitening;
  ops.chol_sigma_x = cholesky(inst.sigma_x);
  ops.chol_sigma_y = cholesky(inst.sigma_y);

  const Matrix sy_inv = spd_inverse(ops.chol_sigma_y).mat();
  const Matrix sx_inv = spd_inverse(ops.chol_sigma_x).mat();

  Matrix precision = inst.A.transpose() * sy_inv * inst.A + sx_inv;
  precision = 0.5 * (precision + precision.transpose());
  ops.sigma_xy = spd_inverse(cholesky(SpdMatrix(precision)));
  ops.D = ops.sigma_xy.mat() * inst.A.transpose() * sy_inv;
  ops.sigma2_ry =
      inst.mu_star.dot(ops.sigma_xy.mat() * inst.mu_star) + inst.sigma2;

  const Matrix y_cov =
      inst.A * inst.sigma_x.mat() * inst.A.transpose() + inst.sigma_y.mat();
  ops.xhat_marginal_cov = ops.D * y_cov * ops.D.transpose();
  ops.xhat_marginal_cov =
      0.5 * (ops.xhat_marginal_cov + ops.xhat_marginal_cov.transpose());

  Matrix s_sq = whitening == Whitening::estimate_marginal
                    ? ops.xhat_marginal_cov
                    : Matrix(ops.D * inst.sigma_y.mat() * ops.D.transpose());
  s_sq = 0.5 * (s_sq + s_sq.transpose());
  ops.S = sym_sqrt(SpdMatrix(s_sq));
  ops.S_inv = spd_inverse(cholesky(ops.S));
  return ops;
}

GenScheme GenScheme::explicit_instance(ProblemInstance inst) {
  GenScheme s;
  s.kind = Kind::explicit_fields;
  s.instance = std::move(inst);
  return s;
}

ProblemInstance generate_instance(int d, int N, const GenScheme& scheme,
                                  RandomStream& rng) {
  if (scheme.kind == GenScheme::Kind::explicit_fields) {
    if (!scheme.instance)
      throw ValidationError("gen scheme: explicit scheme carries no instance");
    const ProblemInstance& inst = *scheme.instance;
    if (inst.d != d || inst.N != N)
      throw ValidationError("gen scheme: explicit instance dimensions disagree");
    validate_instance(inst);
    return inst;
  }

  require(d >= 1, "generate_instance: d must be >= 1");
  require(N >= 1, "generate_instance: N must be >= 1");

  ProblemInstance inst;
  inst.d = d;
  inst.N = N;
  inst.sigma_x = SpdMatrix::identity(d);
  inst.sigma_y = SpdMatrix::identity(d);
  inst.sigma2 = 1.0;

  bool found = false;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix a(d, d);
    for (int i = 0; i < d; ++i) a.row(i) = rng.gaussian_vector(d).transpose();
    Eigen::JacobiSVD<Matrix> svd(a);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(d - 1);
    // cond(A) < 5d keeps every context direction learnable at desk-scale
    // horizons; the raw conditioning tail of square Gaussian matrices is
    // heavy enough to dominate averaged error curves otherwise.
    if (smin > 0.0 && smax / smin < 5.0 * d) {
      inst.A = a;
      found = true;
      break;
    }
  }
  if (!found) throw DegenerateA("generate_instance: no well-conditioned A in 100 draws");

  do {
    inst.mu_star = rng.gaussian_vector(d);
  } while (!(inst.mu_star.squaredNorm() > 0.0));

  validate_instance(inst);
  return inst;
}

RoundDraw spawn_round(const ProblemInstance& inst, const DerivedOperators& ops,
                      RandomStream& context_rng, RandomStream& noise_rng) {
  RoundDraw draw;
  Matrix contexts(inst.N, inst.d);
  const Vector zero = Vector::Zero(inst.d);
  for (int i = 0; i < inst.N; ++i)
    contexts.row(i) =
        mvn_sample_cov(zero, ops.chol_sigma_x, context_rng).transpose();

  draw.outputs.resize(inst.N, inst.d);
  for (int i = 0; i < inst.N; ++i) {
    const Vector mean = inst.A * contexts.row(i).transpose();
    draw.outputs.row(i) =
        mvn_sample_cov(mean, ops.chol_sigma_y, noise_rng).transpose();
  }

  draw.context_estimates = draw.outputs * ops.D.transpose();
  draw.contexts = std::move(contexts);
  return draw;
}

double realize_reward(const ProblemInstance& inst, const Vector& context,
                      RandomStream& rng) {
  if (context.size() != inst.d)
    throw DimensionMismatch("realize_reward: context length must be d");
  return context.dot(inst.mu_star) + std::sqrt(inst.sigma2) * rng.next_gaussian();
}

ValidationReport validate_filter(const ProblemInstance& inst,
                                 const DerivedOperators& ops, int samples,
                                 RandomStream& rng) {
  require(samples >= inst.d + 1, "validate_filter: too few samples");

  const int d = inst.d;
  ValidationReport report;
  report.samples = samples;

  Matrix sum_xy = Matrix::Zero(d, d);
  Matrix sum_yy = Matrix::Zero(d, d);
  Matrix sum_hh = Matrix::Zero(d, d);
  Vector sum_h = Vector::Zero(d);
  double sum_res = 0.0;
  double sum_res2 = 0.0;

  const Vector zero = Vector::Zero(d);
  for (int s = 0; s < samples; ++s) {
    const Vector x = mvn_sample_cov(zero, ops.chol_sigma_x, rng);
    const Vector y = mvn_sample_cov(inst.A * x, ops.chol_sigma_y, rng);
    const double r = realize_reward(inst, x, rng);
    const Vector xhat = ops.D * y;

    sum_xy += x * y.transpose();
    sum_yy += y * y.transpose();
    sum_hh += xhat * xhat.transpose();
    sum_h += xhat;
    const double res = r - xhat.dot(inst.mu_star);
    sum_res += res;
    sum_res2 += res * res;
  }

  const double n = static_cast<double>(samples);
  Matrix syy = sum_yy / n;
  syy = 0.5 * (syy + syy.transpose());
  const LowerTriangular chol_yy = cholesky(SpdMatrix(syy));
  Matrix regression(d, d);
  const Matrix sxy = sum_xy / n;
  for (int i = 0; i < d; ++i)
    regression.row(i) = spd_solve(chol_yy, sxy.row(i).transpose()).transpose();
  report.regression = regression;
  report.regression_max_abs_dev = (regression - ops.D).cwiseAbs().maxCoeff();

  const double res_mean = sum_res / n;
  report.residual_variance = sum_res2 / (n - 1.0) - n / (n - 1.0) * res_mean * res_mean;
  report.residual_variance_expected = ops.sigma2_ry;
  report.residual_variance_rel_dev =
      std::abs(report.residual_variance - ops.sigma2_ry) / ops.sigma2_ry;

  const Vector h_mean = sum_h / n;
  Matrix cov_h = sum_hh / n - h_mean * h_mean.transpose();
  cov_h = 0.5 * (cov_h + cov_h.transpose());
  report.xhat_covariance = cov_h;
  const Matrix cov_noise = ops.D * inst.sigma_y.mat() * ops.D.transpose();
  report.cov_rel_dev_marginal =
      operator_norm(cov_h - ops.xhat_marginal_cov) / operator_norm(ops.xhat_marginal_cov);
  report.cov_rel_dev_output_noise =
      operator_norm(cov_h - cov_noise) / operator_norm(cov_noise);
  return report;
}

namespace {

json matrix_to_row_major(const Matrix& m) {
  json arr = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

Matrix matrix_from_row_major(const json& arr, int d, const char* name) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != d * d)
    throw ParseError(std::string("instance: ") + name + " must be a flat array of d*d numbers");
  Matrix m(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = arr.at(k++).get<double>();
  return m;
}

}  // namespace

std::string instance_to_text(const ProblemInstance& inst) {
  json j;
  j["d"] = inst.d;
  j["N"] = inst.N;
  j["A"] = matrix_to_row_major(inst.A);
  j["sigma_x"] = matrix_to_row_major(inst.sigma_x.mat());
  j["sigma_y"] = matrix_to_row_major(inst.sigma_y.mat());
  j["sigma2"] = inst.sigma2;
  j["mu_star"] = std::vector<double>(inst.mu_star.begin(), inst.mu_star.end());
  return j.dump(2);
}

ProblemInstance instance_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("instance: invalid JSON: ") + e.what());
  }
  try {
    ProblemInstance inst;
    inst.d = j.at("d").get<int>();
    inst.N = j.at("N").get<int>();
    if (inst.d < 1) throw ParseError("instance: d must be >= 1");
    inst.A = matrix_from_row_major(j.at("A"), inst.d, "A");
    inst.sigma_x = SpdMatrix(matrix_from_row_major(j.at("sigma_x"), inst.d, "sigma_x"));
    inst.sigma_y = SpdMatrix(matrix_from_row_major(j.at("sigma_y"), inst.d, "sigma_y"));
    inst.sigma2 = j.at("sigma2").get<double>();
    const auto& mu = j.at("mu_star");
    if (!mu.is_array() || static_cast<int>(mu.size()) != inst.d)
      throw ParseError("instance: mu_star must be an array of d numbers");
    inst.mu_star.resize(inst.d);
    for (int i = 0; i < inst.d; ++i) inst.mu_star(i) = mu.at(i).get<double>();
    validate_instance(inst);
    return inst;
  } catch (const json::exception& e) {
    throw ParseError(std::string("instance: ") + e.what());
  }
}

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << instance_to_text(inst) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_text(buf.str());
}

}  // namespace pocmab
