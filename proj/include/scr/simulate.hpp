#pragma once

#include <cmath>
#include <optional>

#include "scr/data.hpp"
#include "scr/errors.hpp"
#include "scr/likelihoods.hpp"
#include "scr/types.hpp"

namespace scr {

/// Per-location true coefficients (beta_0, beta_1, beta_2), noise scale and,
/// for the piecewise-constant scenario, the region label (0..5).
struct ScenarioTruth {
  Matrix locations;
  Matrix coefficients;  // n x 3
  Vector sigma;
  std::optional<Labels> regions;
};

/// Zero-mean GP with covariance variance * exp(-d / range) + nugget * I.
struct GPConfig {
  double range = 1.0;
  double variance = 1.0;
  double nugget = 1e-10;
};

/// Uniform points on {s1 in (-1, 1], s2 in (0, 2], s1^2 + 0.5 s2^2 > 0.25}
/// by rejection from the bounding box.
Matrix gen_locations(Eigen::Index n, Seed seed);

/// variance * exp(-|s_i - s_j| / range), without the nugget.
Matrix exponential_covariance(const Matrix& locations, const GPConfig& config);

/// One GP draw through a dense Cholesky factor.  The nugget is raised ten-fold
/// on failure up to 1e-6, after which NumericalError is thrown.
Vector sample_gp(const Matrix& locations, const GPConfig& config, Seed seed);

/// x1 = z1, x2 = r z1 + sqrt(1 - r^2) z2 for independent unit GPs z1, z2 with
/// range eta.  eta = 0 gives spatially independent standard normals.
Matrix gen_covariates(const Matrix& locations, double eta, double r, Seed seed);

/// Six rectangular regions D_jk with constant coefficients and noise.
/// Throws DataError for a location outside every region.
ScenarioTruth scenario1_truth(const Matrix& locations);

/// Coefficients from independent GPs (variance tau2, ranges 1, 2, 3) and
/// sigma = 0.2 exp(u) with u a GP of variance 0.25 and range 3.
ScenarioTruth scenario2_truth(const Matrix& locations, double tau2, Seed seed);

/// y = beta_0 + beta_1 x1 + beta_2 x2 + sigma * eps, eps iid N(0, 1).
Vector gen_response(const ScenarioTruth& truth, const Matrix& covariates, Seed seed);

/// Counts y ~ NB(a exp(beta_0 + beta_1 x1 + beta_2 x2), nu).
Vector gen_counts(const ScenarioTruth& truth, const Matrix& covariates, const Vector& exposure,
                  double nu, Seed seed);

/// Coefficients of a single pooled model fitted to every location, repeated
/// for each row (the non-spatial baseline).
Matrix pooled_coefficients(const SpatialDataset& data, Family family);

/// Adjusted Rand index between two partitions.
double adjusted_rand_index(const Labels& a, const Labels& b);

/// (1 / np) sum_i sum_k (estimated_ik - truth_ik)^2.
template <typename DerivedA, typename DerivedB>
double mse(const Eigen::MatrixBase<DerivedA>& estimated, const Eigen::MatrixBase<DerivedB>& truth) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
    throw ArgumentError("mse: shape mismatch");
  if (estimated.size() == 0) throw ArgumentError("mse: empty input");
  return (estimated - truth).squaredNorm() / static_cast<double>(estimated.size());
}

struct PredictionErrors {
  double mape = 0.0;
  double rmse = 0.0;
};

/// MAPE = mean |yhat - y| / (y + 1); RMSE = sqrt(mean (yhat - y)^2).
template <typename DerivedA, typename DerivedB>
PredictionErrors mape_rmse(const Eigen::MatrixBase<DerivedA>& predicted,
                           const Eigen::MatrixBase<DerivedB>& observed) {
  if (predicted.size() != observed.size() || predicted.size() < 1)
    throw ArgumentError("mape_rmse: sizes must match and be positive");
  const auto diff = (predicted.derived().array() - observed.derived().array()).eval();
  const double m = static_cast<double>(predicted.size());
  return {(diff.abs() / (observed.derived().array() + 1.0)).sum() / m,
          std::sqrt(diff.square().sum() / m)};
}

}  // namespace scr
