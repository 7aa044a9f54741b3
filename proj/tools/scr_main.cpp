// Command-line driver: fit, predict, simulate, bootstrap.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "scr/data.hpp"
#include "scr/errors.hpp"
#include "scr/fit.hpp"
#include "scr/io.hpp"
#include "scr/parallel.hpp"
#include "scr/predict.hpp"
#include "scr/simulate.hpp"

#ifndef SCR_VERSION
#define SCR_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scr;

namespace {

enum Exit { kOk = 0, kDataError = 1, kUsage = 2, kNotConverged = 3, kBootstrapFailed = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a over the file bytes; a reproducibility fingerprint, not a security hash.
std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw UsageError(dir.string() + " is not empty; pass --force to overwrite");
  }
  fs::create_directories(dir);
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) out.push_back(part);
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("bad " + what + " '" + text + "'");
  }
}

int parse_count(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (v != std::floor(v) || v < 1) throw UsageError("bad " + what + " '" + text + "'");
  return static_cast<int>(v);
}

// knn:K, exp:BW[:CUTOFF], cknn:K, blend:SPEC+SPEC
SpatialWeights build_weights(const std::string& spec, const SpatialDataset& data) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("bad weight spec '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "blend") {
    const auto parts = split_on(rest, '+');
    if (parts.size() != 2) throw UsageError("blend needs two specs joined by '+'");
    return blend_weights(build_weights(parts[0], data), build_weights(parts[1], data));
  }
  const auto args = split_on(rest, ':');
  if (kind == "knn" && args.size() == 1) return knn_weights(data, parse_count(args[0], "k"));
  if (kind == "cknn" && args.size() == 1)
    return covariate_knn_weights(data, parse_count(args[0], "k"));
  if (kind == "exp" && (args.size() == 1 || args.size() == 2))
    return exp_weights(data, parse_number(args[0], "bandwidth"),
                       args.size() == 2 ? parse_number(args[1], "cutoff") : 1e-8);
  throw UsageError("bad weight spec '" + spec + "'");
}

CrossWeights build_cross_weights(const std::string& spec, const SpatialDataset& fresh,
                                 const SpatialDataset& fitted) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("bad weight spec '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "blend") {
    const auto parts = split_on(rest, '+');
    if (parts.size() != 2) throw UsageError("blend needs two specs joined by '+'");
    return cross_blend_weights(build_cross_weights(parts[0], fresh, fitted),
                               build_cross_weights(parts[1], fresh, fitted));
  }
  const auto args = split_on(rest, ':');
  if (kind == "knn" && args.size() == 1)
    return cross_knn_weights(fresh.locations, fitted.locations, parse_count(args[0], "k"));
  if (kind == "cknn" && args.size() == 1) {
    if (fresh.num_covariates() != fitted.num_covariates())
      throw DataError("new locations and fit differ in covariates");
    return cross_knn_weights(fresh.raw_covariates(), fitted.raw_covariates(),
                             parse_count(args[0], "k"));
  }
  if (kind == "exp" && (args.size() == 1 || args.size() == 2))
    return cross_exp_weights(fresh.locations, fitted.locations,
                             parse_number(args[0], "bandwidth"),
                             args.size() == 2 ? parse_number(args[1], "cutoff") : 1e-8);
  throw UsageError("bad weight spec '" + spec + "'");
}

struct SchemaOptions {
  std::string id = "id", s1 = "s1", s2 = "s2", y = "y", x, exposure;

  void add(CLI::App* app) {
    app->add_option("--id-col", id, "identifier column")->capture_default_str();
    app->add_option("--s1-col", s1, "first coordinate column")->capture_default_str();
    app->add_option("--s2-col", s2, "second coordinate column")->capture_default_str();
    app->add_option("--y-col", y, "response column")->capture_default_str();
    app->add_option("--x-cols", x, "comma-separated covariate columns (default: every x* column)");
    app->add_option("--exposure-col", exposure, "exposure column (negative binomial offset)");
  }
  CsvSchema schema() const {
    CsvSchema s;
    s.id = id;
    s.s1 = s1;
    s.s2 = s2;
    s.response = y;
    if (!x.empty()) s.covariates = split_on(x, ',');
    if (!exposure.empty()) s.exposure = exposure;
    return s;
  }
  json to_json() const {
    return json{{"id", id}, {"s1", s1}, {"s2", s2}, {"y", y}, {"x", x}, {"exposure", exposure}};
  }
};

bool header_has(const fs::path& path, const std::string& column) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  for (const auto& c : split_on(header, ',')) {
    std::string t = c;
    while (!t.empty() && (t.back() == '\r' || t.back() == ' ')) t.pop_back();
    if (t == column) return true;
  }
  return false;
}

json manifest(const std::string& command, json config, json inputs, Seed seed,
              std::chrono::steady_clock::time_point start) {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return json{{"command", command},
              {"version", SCR_VERSION},
              {"schema_version", kSchemaVersion},
              {"config", std::move(config)},
              {"inputs", std::move(inputs)},
              {"seed", seed},
              {"duration_seconds", seconds}};
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  fs::path data, out_dir;
  std::string family = "gaussian", weights = "knn:5", grid, mode = "scr", init = "coordinate-kmeans",
              sweep = "sequential";
  int groups = 0;
  FitConfig config;
  bool force = false;
  SchemaOptions schema;
};

int run_fit(const FitOptions& o, const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  if ((o.groups > 0) == !o.grid.empty()) throw UsageError("give exactly one of --G and --G-grid");
  const Family family = parse_family(o.family);
  const Method method = parse_method(o.mode);
  FitConfig config = o.config;
  config.init = parse_init_strategy(o.init);
  config.sweep = parse_sweep_mode(o.sweep);
  config.validate();

  prepare_out_dir(o.out_dir, o.force);
  const auto data = load_dataset(o.data, o.schema.schema(), !o.schema.exposure.empty());
  validate_family(family, data);
  const auto weights = build_weights(o.weights, data);

  FitResult fit;
  if (!o.grid.empty()) {
    const auto candidates = parse_group_grid(o.grid);
    fit = select_groups(data, family, weights, candidates, config);
    if (method == Method::Fuzzy) {
      auto table = fit.ic_table;
      fit = sfcr_fit(data, family, weights, fit.groups(), config);
      fit.ic_table = std::move(table);
    }
  } else if (method == Method::Hard) {
    fit = scr_fit(data, family, weights, o.groups, config);
  } else {
    fit = sfcr_fit(data, family, weights, o.groups, config);
  }

  json doc = fit_to_json(fit, data);
  doc["weights"] = o.weights;
  doc["schema"] = o.schema.to_json();
  write_json(doc, o.out_dir / "fit.json");
  write_locations_csv(fit, data, o.out_dir / "locations.csv");
  write_long_csv(fit, data, o.out_dir / "coefficients_long.csv");
  if (!fit.ic_table.empty()) {
    std::ofstream ic(o.out_dir / "ic_table.csv");
    ic << "G,ic\n";
    for (const auto& [g, value] : fit.ic_table) ic << g << ',' << format_double(value) << '\n';
  }

  json resolved = config_to_json(config);
  resolved["jobs"] = config.jobs;
  resolved["family"] = o.family;
  resolved["mode"] = o.mode;
  resolved["weights"] = o.weights;
  resolved["G"] = o.groups > 0 ? json(o.groups) : json(nullptr);
  resolved["G_grid"] = o.grid.empty() ? json(nullptr) : json(o.grid);
  resolved["schema"] = o.schema.to_json();
  resolved["argv"] = argv;
  write_json(manifest("fit", resolved, json{{"data", {{"path", o.data.string()},
                                                      {"digest", file_digest(o.data)}}}},
                      config.seed, start),
             o.out_dir / "manifest.json");

  std::cout << "G=" << fit.groups() << " loglik=" << format_double(fit.loglik)
            << " ic=" << format_double(fit.ic) << " iterations=" << fit.iterations
            << (fit.converged ? " converged" : " NOT converged") << '\n';
  if (!fit.converged) {
    std::cerr << "warning: maximum iterations reached without convergence\n";
    return kNotConverged;
  }
  return kOk;
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
  fs::path fit, locations, out_dir;
  std::string mode = "hard", weights = "knn:5";
  double phi = std::nan(""), delta = std::nan("");
  bool force = false;
  SchemaOptions schema;
};

int run_predict(const PredictOptions& o, const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  if (o.mode != "hard" && o.mode != "fuzzy") throw UsageError("--mode must be hard or fuzzy");
  prepare_out_dir(o.out_dir, o.force);
  const StoredFit stored = fit_from_json(read_json(o.fit));
  const FitResult& fit = stored.fit;

  CsvSchema schema = o.schema.schema();
  const bool has_response = header_has(o.locations, schema.response);
  if (!has_response) schema.response.clear();
  const bool has_exposure = !o.schema.exposure.empty();
  const auto fresh = load_dataset(o.locations, schema, has_exposure);
  if (fresh.num_covariates() != stored.data.num_covariates())
    throw DataError("new locations have " + std::to_string(fresh.num_covariates() - 1) +
                    " covariates, the fit has " +
                    std::to_string(stored.data.num_covariates() - 1));
  const auto cross = build_cross_weights(o.weights, fresh, stored.data);

  const double phi = std::isnan(o.phi) ? fit.config.phi : o.phi;
  const double delta = std::isnan(o.delta) ? fit.config.delta : o.delta;
  const Method mode = o.mode == "hard" ? Method::Hard : Method::Fuzzy;
  const Labels labels = predict_assignment(fit, cross);
  Matrix coefficients;
  std::optional<FuzzyPrediction> fuzzy;
  if (mode == Method::Hard) {
    coefficients.resize(fresh.size(), fresh.num_covariates());
    for (Eigen::Index r = 0; r < fresh.size(); ++r)
      coefficients.row(r) = fit.params[static_cast<std::size_t>(labels(r))].coefficients.transpose();
  } else {
    fuzzy = predict_fuzzy(fit, cross, phi, delta);
    coefficients = fuzzy->coefficients;
  }
  if (fit.family == Family::NegativeBinomial && !fresh.exposure)
    throw ArgumentError("negative binomial prediction requires --exposure-col");
  const Vector a = fresh.exposure_or_ones();
  Vector yhat(fresh.size());
  for (Eigen::Index r = 0; r < fresh.size(); ++r)
    yhat(r) = conditional_mean(fit.family, fresh.covariates.row(r).transpose(), a(r),
                               coefficients.row(r).transpose());

  std::ofstream out(o.out_dir / "predictions.csv");
  out << "id,s1,s2,label";
  if (fuzzy)
    for (int g = 0; g < fit.groups(); ++g) out << ",pi_" << g + 1;
  for (const auto& name : stored.data.covariate_names) out << ",beta_" << name;
  out << ",yhat\n";
  for (Eigen::Index r = 0; r < fresh.size(); ++r) {
    out << fresh.ids[static_cast<std::size_t>(r)] << ',' << format_double(fresh.locations(r, 0))
        << ',' << format_double(fresh.locations(r, 1)) << ',' << labels(r) + 1;
    if (fuzzy)
      for (int g = 0; g < fit.groups(); ++g)
        out << ',' << format_double(fuzzy->memberships.probabilities(r, g));
    for (Eigen::Index k = 0; k < coefficients.cols(); ++k)
      out << ',' << format_double(coefficients(r, k));
    out << ',' << format_double(yhat(r)) << '\n';
  }
  out.close();

  json resolved{{"mode", o.mode}, {"weights", o.weights}, {"phi", phi}, {"delta", delta},
                {"schema", o.schema.to_json()}, {"argv", argv}};
  if (has_response) {
    const auto errors = mape_rmse(yhat, fresh.response);
    json metrics{{"mape", errors.mape}, {"rmse", errors.rmse}, {"m", fresh.size()}};
    write_json(metrics, o.out_dir / "metrics.json");
    std::cout << "MAPE=" << format_double(errors.mape) << " RMSE=" << format_double(errors.rmse)
              << '\n';
  }
  write_json(manifest("predict", resolved,
                      json{{"fit", {{"path", o.fit.string()}, {"digest", file_digest(o.fit)}}},
                           {"locations",
                            {{"path", o.locations.string()},
                             {"digest", file_digest(o.locations)}}}},
                      fit.config.seed, start),
             o.out_dir / "manifest.json");
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  int scenario = 1;
  int n = 1000;
  double eta = 0.2, r = 0.75, tau2 = 2.0;
  Seed seed = 0;
  fs::path out_dir;
  bool force = false;
};

int run_simulate(const SimulateOptions& o, const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  if (o.scenario != 1 && o.scenario != 2) throw UsageError("--scenario must be 1 or 2");
  if (o.n < 1) throw UsageError("--n must be positive");
  prepare_out_dir(o.out_dir, o.force);
  const Matrix locs = gen_locations(o.n, mix_seed(o.seed, 0));
  const ScenarioTruth truth =
      o.scenario == 1 ? scenario1_truth(locs) : scenario2_truth(locs, o.tau2, mix_seed(o.seed, 1));
  const Matrix x = gen_covariates(locs, o.eta, o.r, mix_seed(o.seed, 2));
  const Vector y = gen_response(truth, x, mix_seed(o.seed, 3));
  const auto data = make_dataset(locs, x, y);
  write_dataset_csv(data, o.out_dir / "data.csv");
  write_truth_csv(truth, data.ids, o.out_dir / "truth.csv");
  json resolved{{"scenario", o.scenario}, {"n", o.n},       {"eta", o.eta},
                {"r", o.r},               {"tau2", o.tau2}, {"argv", argv}};
  write_json(manifest("simulate", resolved, json::object(), o.seed, start),
             o.out_dir / "manifest.json");
  return kOk;
}

// ---------------------------------------------------------------- bootstrap

struct BootstrapOptions {
  fs::path fit, data, out_dir;
  std::string weights;
  int replicates = 100;
  Seed seed = 0;
  int jobs = 1;
  bool force = false;
  SchemaOptions schema;
};

int run_bootstrap(const BootstrapOptions& o, const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  if (o.replicates < 2) throw UsageError("--B must be at least 2");
  prepare_out_dir(o.out_dir, o.force);
  const json doc = read_json(o.fit);
  const StoredFit stored = fit_from_json(doc);
  const auto data = load_dataset(o.data, o.schema.schema(), !o.schema.exposure.empty());
  if (data.size() != stored.data.size() || data.locations != stored.data.locations ||
      data.covariates != stored.data.covariates)
    throw DataError("data file does not match the fitted locations and covariates");
  const std::string spec =
      !o.weights.empty() ? o.weights : doc.value("weights", std::string("knn:5"));
  const auto weights = build_weights(spec, data);

  // the stored fit carries no responses, so plug-in errors use the data file
  const auto plug = plug_in_se(stored.fit, data, stored.fit.family);
  write_json(standard_errors_to_json(plug, data.covariate_names), o.out_dir / "se_plugin.json");

  json resolved{{"B", o.replicates},          {"jobs", o.jobs}, {"weights", spec},
                {"schema", o.schema.to_json()}, {"argv", argv}};
  json inputs{{"fit", {{"path", o.fit.string()}, {"digest", file_digest(o.fit)}}},
              {"data", {{"path", o.data.string()}, {"digest", file_digest(o.data)}}}};
  try {
    const auto se = bootstrap_se(stored.fit, data, stored.fit.family, weights, o.replicates,
                                 o.seed, o.jobs);
    write_json(standard_errors_to_json(se, data.covariate_names), o.out_dir / "se_bootstrap.json");
    write_json(manifest("bootstrap", resolved, inputs, o.seed, start), o.out_dir / "manifest.json");
    std::cout << "replicates=" << se.replicates << " dropped=" << se.dropped << '\n';
    return kOk;
  } catch (const BootstrapError& e) {
    resolved["dropped"] = e.dropped();
    write_json(manifest("bootstrap", resolved, inputs, o.seed, start), o.out_dir / "manifest.json");
    std::cerr << "error: " << e.what() << '\n';
    return kBootstrapFailed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatially clustered regression"};
  app.set_version_flag("--version", SCR_VERSION);
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  FitOptions fit;
  fit.config.jobs = default_jobs();
  auto* fit_cmd = app.add_subcommand("fit", "fit SCR or SFCR to a dataset");
  fit_cmd->add_option("--data", fit.data, "input CSV")->required();
  fit_cmd->add_option("--family", fit.family, "gaussian | negbin")->capture_default_str();
  fit_cmd->add_option("--weights", fit.weights, "knn:K | exp:BW[:CUTOFF] | cknn:K | blend:A+B")
      ->capture_default_str();
  fit_cmd->add_option("--G", fit.groups, "number of groups");
  fit_cmd->add_option("--G-grid", fit.grid, "candidate G values, lo:hi:step or a,b,c");
  fit_cmd->add_option("--phi", fit.config.phi, "penalty strength")->capture_default_str();
  fit_cmd->add_option("--delta", fit.config.delta, "fuzziness (sfcr)")->capture_default_str();
  fit_cmd->add_option("--mode", fit.mode, "scr | sfcr")->capture_default_str();
  fit_cmd->add_option("--restarts", fit.config.restarts, "random restarts")->capture_default_str();
  fit_cmd->add_option("--seed", fit.config.seed, "random seed")->capture_default_str();
  fit_cmd->add_option("--tol", fit.config.tol, "convergence tolerance")->capture_default_str();
  fit_cmd->add_option("--max-iter", fit.config.max_iterations, "iteration cap")
      ->capture_default_str();
  fit_cmd->add_option("--init", fit.init, "coordinate-kmeans | random")->capture_default_str();
  fit_cmd->add_option("--sweep", fit.sweep, "sequential | synchronous")->capture_default_str();
  fit_cmd->add_option("--jobs", fit.config.jobs, "worker threads (default $SCR_JOBS or 1)");
  fit_cmd->add_option("--out-dir", fit.out_dir, "output directory")->required();
  fit_cmd->add_flag("--force", fit.force, "overwrite a non-empty output directory");
  fit.schema.add(fit_cmd);

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "interpolate a fit to new locations");
  pred_cmd->add_option("--fit", pred.fit, "fit.json from the fit command")->required();
  pred_cmd->add_option("--new-locations", pred.locations, "CSV of new sites")->required();
  pred_cmd->add_option("--mode", pred.mode, "hard | fuzzy")->capture_default_str();
  pred_cmd->add_option("--weights", pred.weights, "cross-weight spec")->capture_default_str();
  pred_cmd->add_option("--phi", pred.phi, "fuzzy penalty (default: the fit's)");
  pred_cmd->add_option("--delta", pred.delta, "fuzziness (default: the fit's)");
  pred_cmd->add_option("--out-dir", pred.out_dir, "output directory")->required();
  pred_cmd->add_flag("--force", pred.force, "overwrite a non-empty output directory");
  pred.schema.add(pred_cmd);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a simulation scenario");
  sim_cmd->add_option("--scenario", sim.scenario, "1 (clustered) | 2 (smooth)")
      ->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "number of locations")->capture_default_str();
  sim_cmd->add_option("--eta", sim.eta, "covariate GP range (0 = independent)")
      ->capture_default_str();
  sim_cmd->add_option("--r", sim.r, "covariate correlation")->capture_default_str();
  sim_cmd->add_option("--tau2", sim.tau2, "coefficient GP variance (scenario 2)")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  sim_cmd->add_option("--out-dir", sim.out_dir, "output directory")->required();
  sim_cmd->add_flag("--force", sim.force, "overwrite a non-empty output directory");

  BootstrapOptions boot;
  boot.jobs = default_jobs();
  auto* boot_cmd = app.add_subcommand("bootstrap", "parametric bootstrap standard errors");
  boot_cmd->add_option("--fit", boot.fit, "fit.json from the fit command")->required();
  boot_cmd->add_option("--data", boot.data, "the CSV the fit was made from")->required();
  boot_cmd->add_option("--B", boot.replicates, "replicates")->capture_default_str();
  boot_cmd->add_option("--seed", boot.seed, "random seed")->capture_default_str();
  boot_cmd->add_option("--jobs", boot.jobs, "worker threads (default $SCR_JOBS or 1)");
  boot_cmd->add_option("--weights", boot.weights, "weight spec (default: the fit's)");
  boot_cmd->add_option("--out-dir", boot.out_dir, "output directory")->required();
  boot_cmd->add_flag("--force", boot.force, "overwrite a non-empty output directory");
  boot.schema.add(boot_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit, args);
    if (pred_cmd->parsed()) return run_predict(pred, args);
    if (sim_cmd->parsed()) return run_simulate(sim, args);
    if (boot_cmd->parsed()) return run_bootstrap(boot, args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const BootstrapError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBootstrapFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
