#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "scr/data.hpp"
#include "scr/fit.hpp"
#include "scr/simulate.hpp"

namespace scr::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("scr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path,
                                        const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

/// Random Gaussian dataset with uniform locations in the unit square.
inline SpatialDataset random_dataset(Eigen::Index n, Eigen::Index q, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix locs(n, 2), x(n, q);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    locs(i, 0) = unit(rng);
    locs(i, 1) = unit(rng);
    for (Eigen::Index k = 0; k < q; ++k) x(i, k) = normal(rng);
    y(i) = normal(rng);
  }
  return make_dataset(locs, x, y);
}

/// Scenario-1 dataset (n locations, covariate range eta) with its truth.
struct Scenario {
  SpatialDataset data;
  ScenarioTruth truth;
};

inline Scenario scenario1(Eigen::Index n, double eta, Seed seed, double noise_scale = 1.0) {
  const Matrix locs = gen_locations(n, seed);
  ScenarioTruth truth = scenario1_truth(locs);
  truth.sigma *= noise_scale;
  const Matrix x = gen_covariates(locs, eta, 0.75, seed + 1000);
  const Vector y = gen_response(truth, x, seed + 2000);
  return {make_dataset(locs, x, y), std::move(truth)};
}

/// Two-group labelling equivalence up to permutation.
inline bool same_partition(const Labels& a, const Labels& b) {
  return adjusted_rand_index(a, b) > 1.0 - 1e-12;
}

}  // namespace scr::testing
