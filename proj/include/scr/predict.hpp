#pragma once

#include <optional>

#include "scr/data.hpp"
#include "scr/fit.hpp"
#include "scr/types.hpp"

namespace scr {

/// m x n weights w_ri linking new locations (rows) to fitted locations.
class CrossWeights {
 public:
  CrossWeights() = default;
  /// Checks 0 <= w_ri <= 1.  Rows without any positive weight are rejected
  /// when the weights are used, naming the offending row.
  explicit CrossWeights(SparseMatrix matrix);

  const SparseMatrix& matrix() const { return matrix_; }
  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index cols() const { return matrix_.cols(); }

 private:
  SparseMatrix matrix_;
};

/// Weight 1 to each of the k nearest fitted points (any dimension).
CrossWeights cross_knn_weights(const Matrix& new_points, const Matrix& fitted_points, int k);
/// exp(-|s_r - s_i|^2 / bandwidth^2), entries below `cutoff` dropped.
CrossWeights cross_exp_weights(const Matrix& new_locations, const Matrix& fitted_locations,
                               double bandwidth, double cutoff = 1e-8);
/// Entrywise mean of two cross-weight matrices.
CrossWeights cross_blend_weights(const CrossWeights& a, const CrossWeights& b);

/// g_r = argmax_g sum_i w_ri I(g = g_i), ties to the smallest index.
Labels predict_assignment(const FitResult& fit, const CrossWeights& cross);

struct FuzzyPrediction {
  FuzzyMembership memberships;  // m x G
  Matrix coefficients;          // m x p, sum_g pi_rg theta_g
};

/// pi_rg proportional to exp{phi sum_i w_ri I(g = g_i)}^delta.
FuzzyPrediction predict_fuzzy(const FitResult& fit, const CrossWeights& cross, double phi,
                              double delta);

/// Coefficients at the new locations: theta_{g_r} (hard) or the fuzzy blend
/// (using the fit's phi and delta).
Matrix interpolate_coefficients(const FitResult& fit, const CrossWeights& cross, Method mode);

/// Plug-in conditional mean at new sites.  `new_covariates` includes the
/// intercept column.  The negative binomial family requires exposure.
Vector predict_response(const FitResult& fit, const CrossWeights& cross,
                        const Matrix& new_covariates, const std::optional<Vector>& new_exposure,
                        Method mode);

enum class SeMethod { PlugIn, Bootstrap };

struct StandardErrors {
  SeMethod method = SeMethod::PlugIn;
  Matrix se;                    // G x p; NaN where unavailable
  std::vector<bool> available;  // per group
  int replicates = 0;           // bootstrap replicates requested
  int dropped = 0;              // non-converged replicates
};

/// Per-group coefficient SEs from the members of each group, ignoring label
/// uncertainty.  Gaussian: classical OLS errors with the unbiased residual
/// variance RSS / (m_g - p).  Negative binomial: inverse observed information
/// in (beta, nu).  Groups with m_g <= p are flagged unavailable.
StandardErrors plug_in_se(const FitResult& fit, const SpatialDataset& data, Family family);

/// Parametric bootstrap: simulate y* from the fitted model, refit with the
/// fit's method, G and config (replicate b uses seed + b), align labels to
/// the original by minimal Hamming distance, report across-replicate
/// standard deviations.  Throws BootstrapError when more than 20% of the
/// replicates fail to converge.
StandardErrors bootstrap_se(const FitResult& fit, const SpatialDataset& data, Family family,
                            const SpatialWeights& weights, int replicates, Seed seed,
                            int jobs = 1);

/// Permutation perm with perm[replicate group] = original group minimizing
/// sum_i I(perm[replicate_i] != original_i).  Exhaustive for G <= 8,
/// greedy on the confusion matrix beyond.
std::vector<int> align_labels(const Labels& original, const Labels& replicate, int groups);

/// One parametric draw y*_i ~ f(. | x_i; theta_{g_i}).
Vector simulate_response(const FitResult& fit, const SpatialDataset& data, Family family,
                         Seed seed);

}  // namespace scr
