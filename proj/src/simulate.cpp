#include "scr/simulate.hpp"

#include <Eigen/Cholesky>

#include <map>
#include <random>

#include "scr/parallel.hpp"

namespace scr {

using Eigen::Index;

Matrix gen_locations(Index n, Seed seed) {
  if (n < 1) throw ArgumentError("n must be positive");
  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(n, 2);
  Index filled = 0;
  while (filled < n) {
    // 1 - 2u with u in [0, 1) lands in (-1, 1], matching the half-open regions.
    const double s1 = 1.0 - 2.0 * unit(rng);
    const double s2 = 2.0 - 2.0 * unit(rng);
    if (s1 * s1 + 0.5 * s2 * s2 > 0.25) {
      out(filled, 0) = s1;
      out(filled, 1) = s2;
      ++filled;
    }
  }
  return out;
}

Matrix exponential_covariance(const Matrix& locations, const GPConfig& config) {
  if (!(config.range > 0.0)) throw ArgumentError("GP range must be positive");
  if (!(config.variance > 0.0)) throw ArgumentError("GP variance must be positive");
  const Index n = locations.rows();
  Matrix cov(n, n);
  for (Index i = 0; i < n; ++i) {
    cov(i, i) = config.variance;
    for (Index j = 0; j < i; ++j) {
      const double d = (locations.row(i) - locations.row(j)).norm();
      cov(i, j) = cov(j, i) = config.variance * std::exp(-d / config.range);
    }
  }
  return cov;
}

namespace {

Matrix gp_factor(const Matrix& locations, const GPConfig& config) {
  if (!(config.nugget >= 0.0)) throw ArgumentError("GP nugget must be nonnegative");
  const Matrix cov = exponential_covariance(locations, config);
  double nugget = config.nugget;
  while (true) {
    Matrix jittered = cov;
    jittered.diagonal().array() += nugget;
    Eigen::LLT<Matrix> llt(jittered);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    if (nugget >= 1e-6) throw NumericalError("GP covariance is not positive definite");
    nugget = nugget > 0.0 ? std::min(nugget * 10.0, 1e-6) : 1e-10;
  }
}

Vector draw(const Matrix& factor, Seed seed) {
  std::mt19937_64 rng(mix_seed(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(factor.rows());
  for (Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return factor.triangularView<Eigen::Lower>() * z;
}

Vector standard_normals(Index n, Seed seed) {
  std::mt19937_64 rng(mix_seed(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

}  // namespace

Vector sample_gp(const Matrix& locations, const GPConfig& config, Seed seed) {
  return draw(gp_factor(locations, config), seed);
}

Matrix gen_covariates(const Matrix& locations, double eta, double r, Seed seed) {
  if (!(std::abs(r) <= 1.0)) throw ArgumentError("|r| must not exceed 1");
  if (!(eta >= 0.0)) throw ArgumentError("eta must be nonnegative");
  const Index n = locations.rows();
  Vector z1, z2;
  if (eta == 0.0) {
    z1 = standard_normals(n, mix_seed(seed, 1));
    z2 = standard_normals(n, mix_seed(seed, 2));
  } else {
    const Matrix factor = gp_factor(locations, GPConfig{eta, 1.0});
    z1 = draw(factor, mix_seed(seed, 1));
    z2 = draw(factor, mix_seed(seed, 2));
  }
  Matrix x(n, 2);
  x.col(0) = z1;
  x.col(1) = r * z1 + std::sqrt(1.0 - r * r) * z2;
  return x;
}

ScenarioTruth scenario1_truth(const Matrix& locations) {
  const Index n = locations.rows();
  ScenarioTruth truth;
  truth.locations = locations;
  truth.coefficients.resize(n, 3);
  truth.sigma.resize(n);
  Labels regions(n);
  for (Index i = 0; i < n; ++i) {
    const double s1 = locations(i, 0), s2 = locations(i, 1);
    int j = -1, k = -1;
    for (int jj = 0; jj < 2; ++jj)
      if (s1 > -1.0 + jj && s1 <= -1.0 + (jj + 1)) j = jj;
    for (int kk = 0; kk < 3; ++kk)
      if (s2 > 2.0 * kk / 3.0 && s2 <= 2.0 * (kk + 1) / 3.0) k = kk;
    if (j < 0 || k < 0)
      throw DataError("location " + std::to_string(i + 1) + " lies outside every region");
    const double g1 = -1.0 + j;
    const double g2 = 2.0 * k / 3.0;
    truth.coefficients(i, 0) = 2.0 * (g1 + g2);
    truth.coefficients(i, 1) = g1 * g1 + g2 * g2;
    truth.coefficients(i, 2) = -g1 - g2;
    truth.sigma(i) = 0.5 + 0.2 * std::abs(g1 - g2);
    regions(i) = 3 * j + k;
  }
  truth.regions = std::move(regions);
  return truth;
}

ScenarioTruth scenario2_truth(const Matrix& locations, double tau2, Seed seed) {
  if (!(tau2 > 0.0)) throw ArgumentError("tau2 must be positive");
  const Index n = locations.rows();
  ScenarioTruth truth;
  truth.locations = locations;
  truth.coefficients.resize(n, 3);
  for (int k = 0; k < 3; ++k)
    truth.coefficients.col(k) =
        sample_gp(locations, GPConfig{static_cast<double>(k + 1), tau2}, mix_seed(seed, k));
  const Vector u = sample_gp(locations, GPConfig{3.0, 0.25}, mix_seed(seed, 3));
  truth.sigma = 0.2 * u.array().exp();
  return truth;
}

Vector gen_response(const ScenarioTruth& truth, const Matrix& covariates, Seed seed) {
  const Index n = truth.coefficients.rows();
  if (covariates.rows() != n || covariates.cols() != 2 || truth.sigma.size() != n)
    throw ArgumentError("truth and covariates differ in shape");
  const Vector eps = standard_normals(n, seed);
  return truth.coefficients.col(0) +
         truth.coefficients.col(1).cwiseProduct(covariates.col(0)) +
         truth.coefficients.col(2).cwiseProduct(covariates.col(1)) +
         truth.sigma.cwiseProduct(eps);
}

Vector gen_counts(const ScenarioTruth& truth, const Matrix& covariates, const Vector& exposure,
                  double nu, Seed seed) {
  const Index n = truth.coefficients.rows();
  if (covariates.rows() != n || covariates.cols() != 2 || exposure.size() != n)
    throw ArgumentError("truth, covariates and exposure differ in shape");
  if (!(nu > 0.0)) throw ArgumentError("dispersion must be positive");
  std::mt19937_64 rng(mix_seed(seed));
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double eta = truth.coefficients(i, 0) + truth.coefficients(i, 1) * covariates(i, 0) +
                       truth.coefficients(i, 2) * covariates(i, 1);
    const double mu = exposure(i) * std::exp(eta);
    const double lambda = std::gamma_distribution<double>(nu, mu / nu)(rng);
    y(i) = lambda > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(lambda)(rng))
                        : 0.0;
  }
  return y;
}

Matrix pooled_coefficients(const SpatialDataset& data, Family family) {
  const GroupParameters pooled = weighted_mle(family, data, Vector::Ones(data.size()));
  return pooled.coefficients.transpose().replicate(data.size(), 1);
}

double adjusted_rand_index(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw ArgumentError("partitions differ in size");
  const Index n = a.size();
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (Index i = 0; i < n; ++i) {
    cells[{a(i), b(i)}] += 1.0;
    rows[a(i)] += 1.0;
    cols[b(i)] += 1.0;
  }
  auto pairs = [](double c) { return c * (c - 1.0) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, c] : cells) index += pairs(c);
  for (const auto& [key, c] : rows) sum_rows += pairs(c);
  for (const auto& [key, c] : cols) sum_cols += pairs(c);
  const double expected = sum_rows * sum_cols / pairs(static_cast<double>(n));
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

}  // namespace scr
