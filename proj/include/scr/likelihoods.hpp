#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "scr/data.hpp"
#include "scr/types.hpp"

namespace scr {

enum class Family { Gaussian, NegativeBinomial };

std::string_view family_name(Family family);
/// Accepts "gaussian" and "negbin"; throws ArgumentError otherwise.
Family parse_family(std::string_view name);

/// theta_g: regression coefficients plus a positive scale, which is the error
/// variance for the Gaussian family and the NB size (dispersion) otherwise.
struct GroupParameters {
  Vector coefficients;
  double scale = 1.0;
};

/// Checks the GroupParameters invariants against a covariate width.
void validate_parameters(const GroupParameters& params, Eigen::Index p);

/// Throws DataError if the dataset cannot be modelled by the family
/// (negative or non-integer counts for the negative binomial).
void validate_family(Family family, const SpatialDataset& data);

// Variance floor for Gaussian groups that fit their members exactly.
inline constexpr double kVarianceFloor = 1e-10;
// Search range for the NB size parameter.
inline constexpr double kMinDispersion = 1e-4;
inline constexpr double kMaxDispersion = 1e4;

template <typename Scalar>
Scalar gaussian_loglik(Scalar y, Scalar mean, Scalar variance) {
  using std::log;
  const Scalar r = y - mean;
  return Scalar(-0.5) * log(Scalar(2) * std::numbers::pi_v<Scalar> * variance) -
         r * r / (Scalar(2) * variance);
}

/// log NB(y; mean mu, size nu), variance mu + mu^2 / nu.
template <typename Scalar>
Scalar negbin_loglik(Scalar y, Scalar mu, Scalar nu) {
  using std::lgamma;
  using std::log;
  using std::log1p;
  // log(nu / (nu + mu)) and log(mu / (nu + mu)) written to stay accurate when
  // one of the two dominates.
  const Scalar log_p0 = -log1p(mu / nu);
  Scalar out = lgamma(y + nu) - lgamma(nu) - lgamma(y + Scalar(1)) + nu * log_p0;
  if (y > Scalar(0)) out += y * (log(mu) - log(nu + mu));
  return out;
}

/// log f(y | x; theta) for one observation with exposure a.
double loglik(Family family, double y, const Eigen::Ref<const Vector>& x, double a,
              const GroupParameters& params);

/// log f(y_i | x_i; theta) for every row of the dataset.
Vector loglik_vector(Family family, const SpatialDataset& data, const GroupParameters& params);

/// n x G matrix of log f(y_i | x_i; theta_g).
Matrix loglik_matrix(Family family, const SpatialDataset& data,
                     std::span<const GroupParameters> params);

/// sum_i w_i log f(y_i | x_i; theta).
double weighted_loglik(Family family, const SpatialDataset& data, const Vector& obs_weights,
                       const GroupParameters& params);

/// Maximizes sum_i w_i log f(y_i | x_i; theta).
///
/// Gaussian: closed-form weighted least squares with sigma^2 the weighted
/// mean squared residual (floored at kVarianceFloor).  A rank-deficient
/// weighted design gets the minimum-norm least-squares solution instead of
/// failing.
///
/// Negative binomial: alternating Newton steps on beta and on log(nu), each
/// with step halving, until the score norm is below 1e-8 or 100 rounds pass.
/// `start`, when given, seeds the iteration, and the result never has a lower
/// weighted log-likelihood than `start`.
///
/// Throws DegenerateGroupError when the weights sum to zero.
GroupParameters weighted_mle(Family family, const SpatialDataset& data, const Vector& obs_weights,
                             const GroupParameters* start = nullptr);

/// Conditional mean E[y | x] with exposure a: x'beta (Gaussian) or
/// a exp(x'beta) (negative binomial).
double conditional_mean(Family family, const Eigen::Ref<const Vector>& x, double a,
                        const Eigen::Ref<const Vector>& coefficients);

/// Number of free parameters per group (coefficients plus scale).
inline Eigen::Index parameters_per_group(Eigen::Index p) { return p + 1; }

}  // namespace scr
