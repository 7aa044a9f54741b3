#include "scr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "scr/errors.hpp"

namespace scr {

using Eigen::Index;

Vector SpatialDataset::exposure_or_ones() const {
  return exposure ? *exposure : Vector::Ones(size());
}

void SpatialDataset::validate() const {
  const Index n = response.size();
  if (n < 1) throw DataError("dataset has no rows");
  if (locations.rows() != n || locations.cols() != 2)
    throw DataError("locations must be n x 2");
  if (covariates.rows() != n || covariates.cols() < 1)
    throw DataError("covariates must be n x p with p >= 1");
  if (static_cast<Index>(ids.size()) != n) throw DataError("ids must have n entries");
  if (!locations.allFinite()) throw DataError("non-finite coordinate");
  if (!covariates.allFinite()) throw DataError("non-finite covariate");
  if (!response.allFinite()) throw DataError("non-finite response");
  if (exposure) {
    if (exposure->size() != n) throw DataError("exposure must have n entries");
    for (Index i = 0; i < n; ++i) {
      const double a = (*exposure)(i);
      if (!(a > 0.0) || !std::isfinite(a))
        throw DataError("exposure must be positive: row " + std::to_string(i + 1));
    }
  }
}

SpatialDataset SpatialDataset::subset(std::span<const Index> rows) const {
  SpatialDataset out;
  const Index m = static_cast<Index>(rows.size());
  out.locations.resize(m, 2);
  out.covariates.resize(m, covariates.cols());
  out.response.resize(m);
  if (exposure) out.exposure = Vector(m);
  out.ids.reserve(rows.size());
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    out.locations.row(r) = locations.row(i);
    out.covariates.row(r) = covariates.row(i);
    out.response(r) = response(i);
    if (exposure) (*out.exposure)(r) = (*exposure)(i);
    out.ids.push_back(ids[static_cast<std::size_t>(i)]);
  }
  out.covariate_names = covariate_names;
  return out;
}

SpatialDataset make_dataset(const Matrix& locations, const Matrix& raw_covariates,
                            const Vector& response, std::optional<Vector> exposure,
                            std::vector<std::string> ids,
                            std::vector<std::string> covariate_names) {
  const Index n = response.size();
  if (raw_covariates.rows() != n && raw_covariates.size() != 0)
    throw DataError("covariate row count differs from response length");
  SpatialDataset data;
  data.locations = locations;
  data.covariates.resize(n, raw_covariates.cols() + 1);
  data.covariates.col(0).setOnes();
  if (raw_covariates.cols() > 0) data.covariates.rightCols(raw_covariates.cols()) = raw_covariates;
  data.response = response;
  data.exposure = std::move(exposure);
  if (ids.empty()) {
    ids.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
  }
  data.ids = std::move(ids);
  if (covariate_names.empty()) {
    for (Index k = 0; k < raw_covariates.cols(); ++k)
      covariate_names.push_back("x" + std::to_string(k + 1));
  }
  covariate_names.insert(covariate_names.begin(), "(Intercept)");
  data.covariate_names = std::move(covariate_names);
  data.validate();
  return data;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

double parse_cell(std::string_view cell, const std::string& column, std::size_t row) {
  double value = 0.0;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
    throw DataError("parse error: row " + std::to_string(row) + ", column '" + column +
                    "': '" + std::string(cell) + "' is not numeric");
  return value;
}

}  // namespace

SpatialDataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema,
                            bool has_exposure) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError(path.string() + ": missing header row");
  std::vector<std::string> header;
  for (auto h : split(header_line, schema.delimiter)) header.emplace_back(h);

  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) column_of.emplace(header[c], c);
  auto require = [&](const std::string& name) {
    const auto it = column_of.find(name);
    if (it == column_of.end()) throw DataError("schema error: missing column '" + name + "'");
    return it->second;
  };

  const std::size_t id_col = require(schema.id);
  const std::size_t s1_col = require(schema.s1);
  const std::size_t s2_col = require(schema.s2);
  const bool has_response = !schema.response.empty();
  const std::size_t y_col = has_response ? require(schema.response) : 0;
  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty()) {
    for (const auto& h : header)
      if (!h.empty() && h.front() == 'x') cov_names.push_back(h);
  }
  std::vector<std::size_t> cov_cols;
  for (const auto& name : cov_names) cov_cols.push_back(require(name));
  const std::size_t a_col = has_exposure ? require(schema.exposure) : 0;

  std::vector<std::string> ids;
  std::vector<double> s1, s2, y, a, x;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split(line, schema.delimiter);
    if (cells.size() != header.size())
      throw DataError("parse error: row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " fields, header has " +
                      std::to_string(header.size()));
    ids.emplace_back(cells[id_col]);
    s1.push_back(parse_cell(cells[s1_col], header[s1_col], row));
    s2.push_back(parse_cell(cells[s2_col], header[s2_col], row));
    y.push_back(has_response ? parse_cell(cells[y_col], header[y_col], row) : 0.0);
    for (auto c : cov_cols) x.push_back(parse_cell(cells[c], header[c], row));
    if (has_exposure) {
      const double av = parse_cell(cells[a_col], header[a_col], row);
      if (!(av > 0.0))
        throw DataError("validation error: nonpositive exposure at row " + std::to_string(row));
      a.push_back(av);
    }
  }
  if (row == 0) throw DataError(path.string() + ": no data rows");

  const Index n = static_cast<Index>(row);
  const Index q = static_cast<Index>(cov_cols.size());
  Matrix locations(n, 2);
  Matrix raw(n, q);
  Vector response(n);
  for (Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    locations(i, 0) = s1[u];
    locations(i, 1) = s2[u];
    response(i) = y[u];
    for (Index k = 0; k < q; ++k) raw(i, k) = x[u * cov_cols.size() + static_cast<std::size_t>(k)];
  }
  std::optional<Vector> exposure;
  if (has_exposure) exposure = Eigen::Map<const Vector>(a.data(), n);
  return make_dataset(locations, raw, response, std::move(exposure), std::move(ids),
                      std::move(cov_names));
}

SpatialWeights::SpatialWeights(SparseMatrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) throw ArgumentError("weight matrix must be square");
  matrix_.makeCompressed();
  for (Index i = 0; i < matrix_.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(matrix_, i); it; ++it) {
      const double w = it.value();
      if (!(w >= 0.0 && w <= 1.0)) throw ArgumentError("weight outside [0, 1]");
      if (it.col() == i && w != 0.0) throw ArgumentError("nonzero diagonal weight");
      if (matrix_.coeff(it.col(), i) != w) throw ArgumentError("weight matrix is not symmetric");
    }
  }
  matrix_.prune(0.0);
}

double SpatialWeights::upper_sum() const {
  double total = 0.0;
  for (Index i = 0; i < matrix_.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(matrix_, i); it; ++it)
      if (it.col() > i) total += it.value();
  return total;
}

namespace {

// Exact k-d tree over the rows of a point matrix.  Candidates are ranked by
// (squared distance, index) so that results match a brute-force scan with
// smaller-index tie breaking.
class KdTree {
 public:
  explicit KdTree(const Matrix& points) : points_(points), order_(points.rows()) {
    std::iota(order_.begin(), order_.end(), Index{0});
    if (!order_.empty()) root_ = build(0, static_cast<Index>(order_.size()));
  }

  std::vector<Index> query(const Eigen::Ref<const Eigen::RowVectorXd>& q, int k,
                           Index skip) const {
    Heap heap;
    if (root_ >= 0) search(root_, q, static_cast<std::size_t>(k), skip, heap);
    std::vector<Index> out(heap.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      *it = heap.top().second;
      heap.pop();
    }
    return out;
  }

 private:
  using Candidate = std::pair<double, Index>;
  using Heap = std::priority_queue<Candidate>;  // worst candidate on top

  struct Node {
    Index begin, end;
    int dim = -1;  // -1 for leaves
    double split = 0.0;
    Index left = -1, right = -1;
  };

  static constexpr Index kLeafSize = 16;

  Index build(Index begin, Index end) {
    Node node{begin, end};
    if (end - begin > kLeafSize && points_.cols() > 0) {
      Eigen::RowVectorXd lo = points_.row(order_[begin]);
      Eigen::RowVectorXd hi = lo;
      for (Index t = begin; t < end; ++t) {
        lo = lo.cwiseMin(points_.row(order_[t]));
        hi = hi.cwiseMax(points_.row(order_[t]));
      }
      Index dim;
      const double spread = (hi - lo).maxCoeff(&dim);
      if (spread > 0.0) {
        const Index mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](Index a, Index b) { return points_(a, dim) < points_(b, dim); });
        node.dim = static_cast<int>(dim);
        node.split = points_(order_[mid], dim);
        const Index self = static_cast<Index>(nodes_.size());
        nodes_.push_back(node);
        const Index left = build(begin, mid);
        const Index right = build(mid, end);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
      }
    }
    nodes_.push_back(node);
    return static_cast<Index>(nodes_.size()) - 1;
  }

  void search(Index id, const Eigen::Ref<const Eigen::RowVectorXd>& q, std::size_t k, Index skip,
              Heap& heap) const {
    const Node& node = nodes_[id];
    if (node.dim < 0) {
      for (Index t = node.begin; t < node.end; ++t) {
        const Index j = order_[t];
        if (j == skip) continue;
        const Candidate c{(points_.row(j) - q).squaredNorm(), j};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double diff = q(node.dim) - node.split;
    const Index near = diff < 0.0 ? node.left : node.right;
    const Index far = diff < 0.0 ? node.right : node.left;
    search(near, q, k, skip, heap);
    // Points equal to the split value can sit on either side, so only prune
    // when the slab is strictly farther than the current worst.
    if (heap.size() < k || diff * diff <= heap.top().first) search(far, q, k, skip, heap);
  }

  const Matrix& points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  Index root_ = -1;
};

SpatialWeights symmetrized_knn(const Matrix& points, int k) {
  const Index n = points.rows();
  if (k < 1) throw ArgumentError("k must be positive");
  if (k >= n) throw ArgumentError("k must be smaller than the number of locations");
  const auto neighbors = nearest_neighbors(points, points, k, true);
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * n * k));
  for (Index i = 0; i < n; ++i) {
    for (Index j : neighbors[static_cast<std::size_t>(i)]) {
      triplets.emplace_back(i, j, 1.0);
      triplets.emplace_back(j, i, 1.0);
    }
  }
  SparseMatrix w(n, n);
  w.setFromTriplets(triplets.begin(), triplets.end(),
                    [](double a, double b) { return std::max(a, b); });
  return SpatialWeights(std::move(w));
}

}  // namespace

std::vector<std::vector<Index>> nearest_neighbors(const Matrix& queries, const Matrix& references,
                                                  int k, bool exclude_self) {
  if (queries.cols() != references.cols())
    throw ArgumentError("query and reference dimensions differ");
  const KdTree tree(references);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(queries.rows()));
  for (Index i = 0; i < queries.rows(); ++i)
    out[static_cast<std::size_t>(i)] = tree.query(queries.row(i), k, exclude_self ? i : -1);
  return out;
}

SpatialWeights knn_weights(const SpatialDataset& data, int k) {
  return symmetrized_knn(data.locations, k);
}

SpatialWeights covariate_knn_weights(const SpatialDataset& data, int k) {
  return symmetrized_knn(data.raw_covariates(), k);
}

SpatialWeights exp_weights(const SpatialDataset& data, double bandwidth, double cutoff) {
  if (!(bandwidth > 0.0)) throw ArgumentError("bandwidth must be positive");
  if (!(cutoff >= 0.0)) throw ArgumentError("cutoff must be nonnegative");
  const Index n = data.size();
  const double inv_bw2 = 1.0 / (bandwidth * bandwidth);
  std::vector<Triplet> triplets;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (data.locations.row(i) - data.locations.row(j)).squaredNorm();
      const double w = std::exp(-d2 * inv_bw2);
      if (w < cutoff || w == 0.0) continue;
      triplets.emplace_back(i, j, w);
      triplets.emplace_back(j, i, w);
    }
  }
  SparseMatrix w(n, n);
  w.setFromTriplets(triplets.begin(), triplets.end());
  return SpatialWeights(std::move(w));
}

SpatialWeights blend_weights(const SpatialWeights& w1, const SpatialWeights& w2) {
  if (w1.size() != w2.size()) throw ArgumentError("weight matrices differ in dimension");
  SparseMatrix blended = 0.5 * (w1.matrix() + w2.matrix());
  return SpatialWeights(std::move(blended));
}

void write_weight_triplets(const SpatialWeights& weights, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "i,j,w\n";
  const auto& m = weights.matrix();
  for (Index i = 0; i < m.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(m, i); it; ++it)
      out << i + 1 << ',' << it.col() + 1 << ',' << it.value() << '\n';
}

}  // namespace scr
