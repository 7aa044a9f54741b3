#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "scr/errors.hpp"

using namespace scr;
using scr::testing::random_dataset;
using scr::testing::temp_dir;
using scr::testing::write_file;

namespace {

std::set<std::pair<int, int>> nonzero_pairs(const SpatialWeights& w) {
  std::set<std::pair<int, int>> out;
  for (Eigen::Index i = 0; i < w.matrix().outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(w.matrix(), i); it; ++it)
      if (it.value() != 0.0) out.emplace(static_cast<int>(i) + 1, static_cast<int>(it.col()) + 1);
  return out;
}

SpatialDataset points_on_line(std::vector<double> xs) {
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  Matrix locs = Matrix::Zero(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) locs(i, 0) = xs[static_cast<std::size_t>(i)];
  return make_dataset(locs, Matrix(n, 0), Vector::Zero(n));
}

// Brute-force directed kNN with (distance, index) ordering.
Matrix brute_knn(const Matrix& pts, int k) {
  const Eigen::Index n = pts.rows();
  Matrix w = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> d;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) d.emplace_back((pts.row(i) - pts.row(j)).squaredNorm(), j);
    std::sort(d.begin(), d.end());
    for (int t = 0; t < k; ++t) {
      w(i, d[static_cast<std::size_t>(t)].second) = 1.0;
      w(d[static_cast<std::size_t>(t)].second, i) = 1.0;
    }
  }
  return w;
}

void check_invariants(const SpatialWeights& w) {
  const Matrix d = Matrix(w.matrix());
  CHECK(d == d.transpose());
  CHECK(d.minCoeff() >= 0.0);
  CHECK(d.maxCoeff() <= 1.0);
  CHECK(d.diagonal().isZero(0.0));
}

}  // namespace

TEST_CASE("load_dataset reads rows and prepends the intercept") {
  const auto dir = temp_dir("load");
  const auto path = write_file(dir / "d.csv", "id,s1,s2,y,x1\nA,0,0,1.5,2\nB,1,0,2.5,3\nC,0,1,3.5,4\n");
  const auto data = load_dataset(path);
  CHECK(data.size() == 3);
  CHECK(data.num_covariates() == 2);
  CHECK(data.covariates.col(0).isOnes());
  CHECK(data.covariates(2, 1) == 4.0);
  CHECK(data.response(1) == 2.5);
  CHECK(data.ids[0] == "A");
  CHECK_FALSE(data.exposure.has_value());
}

TEST_CASE("load_dataset exposure column") {
  const auto dir = temp_dir("exposure");
  const auto path =
      write_file(dir / "d.csv", "id,s1,s2,y,x1,a\n1,0,0,1,2,1\n2,1,0,2,3,1\n3,0,1,3,4,1\n");
  const auto data = load_dataset(path, {}, true);
  REQUIRE(data.exposure.has_value());
  CHECK(*data.exposure == Vector::Ones(3));

  const auto bad = write_file(dir / "bad.csv", "id,s1,s2,y,x1,a\n1,0,0,1,2,1\n2,1,0,2,3,0\n3,0,1,3,4,1\n");
  try {
    load_dataset(bad, {}, true);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("load_dataset schema and parse errors") {
  const auto dir = temp_dir("errors");
  const auto missing = write_file(dir / "m.csv", "id,s1,y,x1\n1,0,1,2\n");
  try {
    load_dataset(missing);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("'s2'") != std::string::npos);
  }
  const auto junk = write_file(dir / "j.csv", "id,s1,s2,y,x1\n1,0,0,1,2\n2,0,0,abc,2\n");
  try {
    load_dataset(junk);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CsvSchema schema;
  schema.covariates = {"x1", "x9"};
  const auto ok = write_file(dir / "ok.csv", "id,s1,s2,y,x1\n1,0,0,1,2\n");
  CHECK_THROWS_AS(load_dataset(ok, schema), DataError);
}

TEST_CASE("knn_weights on collinear points") {
  const auto data = points_on_line({0.0, 1.0, 3.0});
  const auto w = knn_weights(data, 1);
  CHECK(nonzero_pairs(w) == std::set<std::pair<int, int>>{{1, 2}, {2, 1}, {2, 3}, {3, 2}});

  const auto two = points_on_line({0.0, 5.0});
  CHECK(nonzero_pairs(knn_weights(two, 1)) == std::set<std::pair<int, int>>{{1, 2}, {2, 1}});
  CHECK_THROWS_AS(knn_weights(data, 3), ArgumentError);
  CHECK_THROWS_AS(knn_weights(data, 0), ArgumentError);
}

TEST_CASE("knn_weights matches brute force, including distance ties") {
  // A lattice has many exactly tied distances.
  Matrix grid(36, 2);
  for (int i = 0; i < 36; ++i) grid.row(i) << i % 6, i / 6;
  const auto lattice = make_dataset(grid, Matrix(36, 0), Vector::Zero(36));
  for (int k : {1, 3, 4, 5, 8}) {
    const auto w = knn_weights(lattice, k);
    CHECK(Matrix(w.matrix()) == brute_knn(grid, k));
    check_invariants(w);
  }
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto data = random_dataset(200, 1, seed);
    const auto w = knn_weights(data, 5);
    CHECK(Matrix(w.matrix()) == brute_knn(data.locations, 5));
    // every row keeps at least its own k neighbours
    for (Eigen::Index i = 0; i < data.size(); ++i) CHECK(w.matrix().row(i).nonZeros() >= 5);
  }
}

TEST_CASE("knn_weights is permutation equivariant") {
  const auto data = random_dataset(80, 1, 7);
  std::vector<Eigen::Index> perm(80);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  const auto permuted = data.subset(perm);
  const Matrix w = Matrix(knn_weights(data, 5).matrix());
  const Matrix wp = Matrix(knn_weights(permuted, 5).matrix());
  for (Eigen::Index a = 0; a < 80; ++a)
    for (Eigen::Index b = 0; b < 80; ++b)
      CHECK(wp(a, b) == w(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]));
}

TEST_CASE("exp_weights") {
  const auto data = points_on_line({0.0, 0.1, 0.1, 100.0});
  const auto w = exp_weights(data, 0.1, 1e-12);
  CHECK(w.matrix().coeff(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(w.matrix().coeff(0, 1) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(w.matrix().coeff(1, 2) == 1.0);
  CHECK(w.matrix().coeff(1, 1) == 0.0);
  CHECK(w.matrix().coeff(0, 3) == 0.0);
  check_invariants(w);
  CHECK_THROWS_AS(exp_weights(data, 0.0), ArgumentError);
  CHECK_THROWS_AS(exp_weights(data, -1.0), ArgumentError);

  // monotone in distance
  const auto random = random_dataset(60, 1, 11);
  const auto we = exp_weights(random, 0.3, 0.0);
  check_invariants(we);
  std::vector<std::pair<double, double>> dw;
  for (Eigen::Index i = 0; i < 60; ++i)
    for (Eigen::Index j = i + 1; j < 60; ++j)
      dw.emplace_back((random.locations.row(i) - random.locations.row(j)).norm(),
                      we.matrix().coeff(i, j));
  std::sort(dw.begin(), dw.end());
  for (std::size_t t = 1; t < dw.size(); ++t) CHECK(dw[t].second <= dw[t - 1].second);
}

TEST_CASE("covariate_knn_weights") {
  Matrix locs(3, 2);
  locs << 0, 0, 5, 5, 9, 1;
  Matrix x(3, 1);
  x << 0, 1, 10;
  const auto data = make_dataset(locs, x, Vector::Zero(3));
  CHECK(nonzero_pairs(covariate_knn_weights(data, 1)) ==
        std::set<std::pair<int, int>>{{1, 2}, {2, 1}, {2, 3}, {3, 2}});

  Matrix same(3, 1);
  same << 2.0, 2.0, 7.0;
  const auto twins = make_dataset(locs, same, Vector::Zero(3));
  CHECK(covariate_knn_weights(twins, 1).matrix().coeff(0, 1) == 1.0);

  const auto random = random_dataset(50, 0, 5);
  const auto mirrored = make_dataset(random.locations, random.locations, random.response);
  CHECK(Matrix(covariate_knn_weights(mirrored, 5).matrix()) ==
        Matrix(knn_weights(random, 5).matrix()));
}

TEST_CASE("blend_weights") {
  const auto data = points_on_line({0.0, 1.0, 3.0});
  const auto w1 = knn_weights(data, 1);
  const auto w2 = SpatialWeights(SparseMatrix(3, 3));
  const auto b = blend_weights(w1, w2);
  CHECK(b.matrix().coeff(0, 1) == 0.5);
  CHECK(b.matrix().coeff(0, 2) == 0.0);
  CHECK(Matrix(blend_weights(w1, w1).matrix()) == Matrix(w1.matrix()));
  check_invariants(b);
  CHECK_THROWS_AS(blend_weights(w1, knn_weights(points_on_line({0, 1}), 1)), ArgumentError);
}

TEST_CASE("SpatialWeights rejects invalid matrices") {
  SparseMatrix asym(2, 2);
  asym.insert(0, 1) = 1.0;
  CHECK_THROWS_AS(SpatialWeights{asym}, ArgumentError);
  SparseMatrix diag(2, 2);
  diag.insert(0, 0) = 1.0;
  CHECK_THROWS_AS(SpatialWeights{diag}, ArgumentError);
  SparseMatrix big(2, 2);
  big.insert(0, 1) = 2.0;
  big.insert(1, 0) = 2.0;
  CHECK_THROWS_AS(SpatialWeights{big}, ArgumentError);
}

TEST_CASE("weight triplet export") {
  const auto dir = temp_dir("triplets");
  write_weight_triplets(knn_weights(points_on_line({0.0, 1.0, 3.0}), 1), dir / "w.csv");
  std::ifstream in(dir / "w.csv");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  CHECK(all == "i,j,w\n1,2,1\n2,1,1\n2,3,1\n3,2,1\n");
}
