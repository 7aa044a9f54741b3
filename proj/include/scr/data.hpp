#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scr/types.hpp"

namespace scr {

/// One record per sampled location: coordinates s_i, covariates x_i (with a
/// leading intercept column), response y_i and an optional exposure a_i.
struct SpatialDataset {
  Matrix locations;   // n x 2
  Matrix covariates;  // n x p, column 0 is all ones
  Vector response;
  std::optional<Vector> exposure;
  std::vector<std::string> ids;
  std::vector<std::string> covariate_names;  // p names, "(Intercept)" first

  Eigen::Index size() const { return response.size(); }
  Eigen::Index num_covariates() const { return covariates.cols(); }

  /// Exposure vector, or a vector of ones when the dataset has none.
  Vector exposure_or_ones() const;

  /// Covariates without the intercept column (n x (p-1)).
  Matrix raw_covariates() const { return covariates.rightCols(covariates.cols() - 1); }

  /// Throws DataError if any invariant (equal row counts, finite values,
  /// positive exposure) is violated.
  void validate() const;

  /// Rows in the given order; used for train/test splits.
  SpatialDataset subset(std::span<const Eigen::Index> rows) const;
};

/// Builds a dataset from raw columns, prepending the intercept.  Ids default
/// to the 1-based row number.
SpatialDataset make_dataset(const Matrix& locations, const Matrix& raw_covariates,
                            const Vector& response,
                            std::optional<Vector> exposure = std::nullopt,
                            std::vector<std::string> ids = {},
                            std::vector<std::string> covariate_names = {});

/// Column-name mapping for delimiter-separated input.  An empty covariate
/// list selects every header column whose name starts with 'x'.  An empty
/// response name reads files without a response column (all zeros).
struct CsvSchema {
  std::string id = "id";
  std::string s1 = "s1";
  std::string s2 = "s2";
  std::string response = "y";
  std::vector<std::string> covariates;
  std::string exposure = "a";
  char delimiter = ',';
};

SpatialDataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema = {},
                            bool has_exposure = false);

/// Sparse symmetric pairwise weights with entries in [0, 1] and a zero
/// diagonal.  The constructor checks every invariant.
class SpatialWeights {
 public:
  SpatialWeights() = default;
  explicit SpatialWeights(SparseMatrix matrix);

  const SparseMatrix& matrix() const { return matrix_; }
  Eigen::Index size() const { return matrix_.rows(); }
  Eigen::Index nonzeros() const { return matrix_.nonZeros(); }

  /// Sum of w_ij over stored pairs with i < j.
  double upper_sum() const;

 private:
  SparseMatrix matrix_;
};

/// Indices of the k nearest reference rows for every query row, nearest
/// first.  Distances are Euclidean; ties go to the smaller reference index.
/// When `exclude_self` is set, query row i never returns reference row i
/// (queries and references are then the same point set).
std::vector<std::vector<Eigen::Index>> nearest_neighbors(const Matrix& queries,
                                                         const Matrix& references, int k,
                                                         bool exclude_self);

/// Symmetrized 0/1 k-nearest-neighbour graph on the coordinates.
SpatialWeights knn_weights(const SpatialDataset& data, int k);

/// w_ij = exp(-|s_i - s_j|^2 / bandwidth^2); entries below `cutoff` are dropped.
SpatialWeights exp_weights(const SpatialDataset& data, double bandwidth, double cutoff = 1e-8);

/// k-nearest-neighbour graph in covariate space (intercept excluded).
SpatialWeights covariate_knn_weights(const SpatialDataset& data, int k);

/// Entrywise mean (w1 + w2) / 2.
SpatialWeights blend_weights(const SpatialWeights& w1, const SpatialWeights& w2);

/// Writes "i,j,w" rows (1-based indices, both triangles) for debugging.
void write_weight_triplets(const SpatialWeights& weights, const std::filesystem::path& path);

}  // namespace scr
