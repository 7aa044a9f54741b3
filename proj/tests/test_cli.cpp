#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "helpers.hpp"
#include "scr/io.hpp"

using namespace scr;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string command = std::string(SCR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("cli simulate") {
  const auto dir = scr::testing::temp_dir("cli_sim");
  const std::string a = (dir / "a").string(), b = (dir / "b").string(), one = (dir / "one").string();
  CHECK(run("simulate --scenario 1 --n 1000 --eta 0.2 --seed 4 --out-dir " + a) == 0);
  CHECK(run("simulate --scenario 1 --n 1000 --eta 0.2 --seed 4 --out-dir " + b) == 0);
  CHECK(slurp(dir / "a" / "data.csv") == slurp(dir / "b" / "data.csv"));
  CHECK(slurp(dir / "a" / "truth.csv") == slurp(dir / "b" / "truth.csv"));
  CHECK(fs::exists(dir / "a" / "manifest.json"));

  const auto truth = read_csv(dir / "a" / "truth.csv");
  CHECK(truth.size() == 1001);
  std::set<std::string> tuples;
  for (std::size_t r = 1; r < truth.size(); ++r)
    tuples.insert(truth[r][3] + truth[r][4] + truth[r][5] + truth[r][6]);
  CHECK(tuples.size() == 6);

  CHECK(run("simulate --scenario 1 --n 1 --out-dir " + one) == 0);
  CHECK(read_csv(dir / "one" / "data.csv").size() == 2);
  CHECK(read_csv(dir / "one" / "truth.csv").size() == 2);

  CHECK(run("simulate --scenario 3 --out-dir " + (dir / "bad").string()) == 2);
  CHECK(run("simulate --scenario 2 --n 50 --out-dir " + (dir / "two").string()) == 0);
  // never overwrite without --force
  CHECK(run("simulate --scenario 1 --n 10 --out-dir " + a) == 2);
  CHECK(run("simulate --scenario 1 --n 10 --out-dir " + a + " --force") == 0);
}

TEST_CASE("cli fit") {
  const auto dir = scr::testing::temp_dir("cli_fit");
  const auto s = scr::testing::scenario1(300, 0.2, 6);
  write_dataset_csv(s.data, dir / "d.csv");
  const std::string data = (dir / "d.csv").string();

  SUBCASE("pooled reduction") {
    CHECK(run("fit --data " + data + " --G 1 --phi 0 --restarts 1 --out-dir " +
              (dir / "pooled").string()) == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "pooled" / "fit.json"));
    const auto pooled = weighted_mle(Family::Gaussian, s.data, Vector::Ones(300));
    for (const auto& row : doc.at("locations"))
      for (int k = 0; k < 3; ++k)
        CHECK(std::abs(row.at("coefficients").at(k).get<double>() - pooled.coefficients(k)) <
              1e-10);
    CHECK(fs::exists(dir / "pooled" / "locations.csv"));
    CHECK(fs::exists(dir / "pooled" / "coefficients_long.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "pooled" / "manifest.json"));
    CHECK(manifest.at("command") == "fit");
    CHECK(manifest.at("config").at("phi") == 0.0);
    CHECK(manifest.at("inputs").at("data").at("digest").get<std::string>().rfind("fnv1a64:", 0) ==
          0);
  }
  SUBCASE("byte-identical reruns across job counts") {
    const std::string flags = "fit --data " + data + " --G 4 --restarts 4 --seed 9 --out-dir ";
    CHECK(run(flags + (dir / "r1").string() + " --jobs 1") == 0);
    CHECK(run(flags + (dir / "r2").string() + " --jobs 4") == 0);
    CHECK(slurp(dir / "r1" / "fit.json") == slurp(dir / "r2" / "fit.json"));
    CHECK(slurp(dir / "r1" / "locations.csv") == slurp(dir / "r2" / "locations.csv"));
  }
  SUBCASE("group grid") {
    CHECK(run("fit --data " + data + " --G-grid 5:30:5 --restarts 2 --out-dir " +
              (dir / "grid").string()) == 0);
    const auto table = read_csv(dir / "grid" / "ic_table.csv");
    REQUIRE(table.size() == 7);
    for (int r = 1; r <= 6; ++r) CHECK(table[static_cast<std::size_t>(r)][0] == std::to_string(5 * r));
    const auto doc = nlohmann::json::parse(slurp(dir / "grid" / "fit.json"));
    CHECK(doc.at("ic_table").size() == 6);
  }
  SUBCASE("exit codes") {
    CHECK(run("fit --data " + data + " --G 4 --max-iter 1 --restarts 1 --out-dir " +
              (dir / "short").string()) == 3);
    CHECK(fs::exists(dir / "short" / "fit.json"));
    CHECK(run("fit --data " + data + " --G 4 --weights bogus --out-dir " + (dir / "w").string()) ==
          2);
    CHECK(run("fit --data " + data + " --out-dir " + (dir / "nog").string()) == 2);
    CHECK(run("fit --data " + data + " --G 2 --family negbin --out-dir " +
              (dir / "nb").string()) == 1);
    CHECK(run("fit --data " + (dir / "none.csv").string() + " --G 2 --out-dir " +
              (dir / "none").string()) == 1);
    CHECK(run("fit --data " + data + " --G 2 --x-cols x1,x7 --out-dir " +
              (dir / "schema").string()) == 1);
    CHECK(run("fit --bogus") == 2);
  }
}

TEST_CASE("cli predict") {
  const auto dir = scr::testing::temp_dir("cli_predict");
  // Fitted sites on a line: labels 1,1,2 (1-based) at x = 0, 1, 2.
  Matrix locs(3, 2);
  locs << 0, 0, 1, 0, 2, 0;
  const auto fitted = make_dataset(locs, Matrix::Zero(3, 1), Vector::Zero(3));
  FitResult fit;
  fit.assignment = GroupAssignment{(Labels(3) << 0, 0, 1).finished(), 2};
  fit.params = {{(Vector(2) << 1.0, 2.0).finished(), 1.0}, {(Vector(2) << -1.0, 0.0).finished(), 1.0}};
  fit.group_sizes = {2, 1};
  fit.per_location_coefficients = Matrix(3, 2);
  for (Eigen::Index i = 0; i < 3; ++i)
    fit.per_location_coefficients.row(i) =
        fit.params[static_cast<std::size_t>(fit.assignment.labels(i))].coefficients.transpose();
  fit.converged = true;
  std::ofstream(dir / "fit.json") << fit_to_json(fit, fitted).dump();
  scr::testing::write_file(dir / "new.csv", "id,s1,s2,x1\nA,0.9,0,3\nB,2.1,0,1\n");
  const std::string base = "predict --fit " + (dir / "fit.json").string() + " --new-locations " +
                           (dir / "new.csv").string();

  CHECK(run(base + " --weights knn:1 --out-dir " + (dir / "hard").string()) == 0);
  auto rows = read_csv(dir / "hard" / "predictions.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].back() == "yhat");
  CHECK(rows[1][3] == "1");
  CHECK(std::stod(rows[1].back()) == 7.0);  // (1, 2) . (1, 3)
  CHECK(rows[2][3] == "2");

  CHECK(run(base + " --weights knn:3 --mode fuzzy --phi 1 --delta 1 --out-dir " +
            (dir / "fuzzy").string()) == 0);
  rows = read_csv(dir / "fuzzy" / "predictions.csv");
  CHECK(std::stod(rows[1][4]) == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(std::stod(rows[1][5]) == doctest::Approx(0.2689).epsilon(1e-4));

  CHECK(run(base + " --weights knn:3 --mode fuzzy --phi 0 --out-dir " + (dir / "flat").string()) ==
        0);
  rows = read_csv(dir / "flat" / "predictions.csv");
  CHECK(std::stod(rows[1][4]) == 0.5);
  CHECK(std::stod(rows[2][5]) == 0.5);

  scr::testing::write_file(dir / "wide.csv", "id,s1,s2,x1,x2\nA,0.9,0,3,1\n");
  CHECK(run("predict --fit " + (dir / "fit.json").string() + " --new-locations " +
            (dir / "wide.csv").string() + " --out-dir " + (dir / "wide").string()) == 1);
  CHECK(run(base + " --mode lukewarm --out-dir " + (dir / "mode").string()) == 2);
}

TEST_CASE("cli bootstrap") {
  const auto dir = scr::testing::temp_dir("cli_boot");
  const auto s = scr::testing::scenario1(150, 0.2, 2);
  write_dataset_csv(s.data, dir / "d.csv");
  const std::string data = (dir / "d.csv").string();
  REQUIRE(run("fit --data " + data + " --G 3 --restarts 2 --out-dir " + (dir / "fit").string()) ==
          0);
  const std::string base =
      "bootstrap --fit " + (dir / "fit" / "fit.json").string() + " --data " + data;
  CHECK(run(base + " --B 2 --out-dir " + (dir / "b2").string()) == 0);
  CHECK(fs::exists(dir / "b2" / "se_plugin.json"));
  CHECK(run(base + " --B 6 --seed 3 --jobs 1 --out-dir " + (dir / "j1").string()) == 0);
  CHECK(run(base + " --B 6 --seed 3 --jobs 8 --out-dir " + (dir / "j8").string()) == 0);
  CHECK(slurp(dir / "j1" / "se_bootstrap.json") == slurp(dir / "j8" / "se_bootstrap.json"));
  const auto doc = nlohmann::json::parse(slurp(dir / "j1" / "se_bootstrap.json"));
  CHECK(doc.at("method") == "bootstrap");
  CHECK(doc.at("replicates") == 6);
  CHECK(run(base + " --B 1 --out-dir " + (dir / "b1").string()) == 2);

  // every replicate stops at the iteration cap
  REQUIRE(run("fit --data " + data + " --G 3 --restarts 1 --max-iter 1 --out-dir " +
              (dir / "capped").string()) == 3);
  CHECK(run("bootstrap --fit " + (dir / "capped" / "fit.json").string() + " --data " + data +
            " --B 4 --out-dir " + (dir / "fail").string()) == 4);
}
