#include "scr/io.hpp"

#include <charconv>
#include <fstream>

#include "scr/errors.hpp"

namespace scr {

using Eigen::Index;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

json vector_json(const Eigen::Ref<const Vector>& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from(const json& a) {
  Vector v(static_cast<Index>(a.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = a.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

json config_to_json(const FitConfig& c) {
  return json{{"phi", c.phi},
              {"delta", c.delta},
              {"tol", c.tol},
              {"max_iterations", c.max_iterations},
              {"restarts", c.restarts},
              {"seed", c.seed},
              {"init", std::string(init_strategy_name(c.init))},
              {"sweep", std::string(sweep_mode_name(c.sweep))}};
}

FitConfig config_from_json(const json& doc) {
  FitConfig c;
  c.phi = doc.at("phi").get<double>();
  c.delta = doc.at("delta").get<double>();
  c.tol = doc.at("tol").get<double>();
  c.max_iterations = doc.at("max_iterations").get<int>();
  c.restarts = doc.at("restarts").get<int>();
  c.seed = doc.at("seed").get<Seed>();
  c.init = parse_init_strategy(doc.at("init").get<std::string>());
  c.sweep = parse_sweep_mode(doc.at("sweep").get<std::string>());
  return c;
}

json fit_to_json(const FitResult& fit, const SpatialDataset& data) {
  json groups = json::array();
  for (int g = 0; g < fit.groups(); ++g) {
    const auto& gp = fit.params[static_cast<std::size_t>(g)];
    groups.push_back({{"group", g + 1},
                      {"size", fit.group_sizes[static_cast<std::size_t>(g)]},
                      {"coefficients", vector_json(gp.coefficients)},
                      {fit.family == Family::Gaussian ? "variance" : "dispersion", gp.scale}});
  }
  json locations = json::array();
  for (Index i = 0; i < data.size(); ++i) {
    json row{{"id", data.ids[static_cast<std::size_t>(i)]},
             {"s1", data.locations(i, 0)},
             {"s2", data.locations(i, 1)},
             {"covariates", vector_json(data.raw_covariates().row(i).transpose())},
             {"label", fit.assignment.labels(i) + 1},
             {"coefficients", vector_json(fit.per_location_coefficients.row(i).transpose())}};
    if (data.exposure) row["exposure"] = (*data.exposure)(i);
    if (fit.fuzzy) row["pi"] = vector_json(fit.fuzzy->probabilities.row(i).transpose());
    locations.push_back(std::move(row));
  }
  json ic_table = json::array();
  for (const auto& [g, ic] : fit.ic_table) ic_table.push_back({{"G", g}, {"ic", ic}});
  return json{{"schema_version", kSchemaVersion},
              {"method", std::string(method_name(fit.method))},
              {"family", std::string(family_name(fit.family))},
              {"G", fit.groups()},
              {"n", data.size()},
              {"covariate_names", data.covariate_names},
              {"has_exposure", data.exposure.has_value()},
              {"config", config_to_json(fit.config)},
              {"seed", fit.config.seed},
              {"restart", fit.restart},
              {"loglik", fit.loglik},
              {"objective", fit.objective},
              {"ic", fit.ic},
              {"ic_table", ic_table},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"objective_trace", fit.objective_trace},
              {"groups", groups},
              {"locations", locations}};
}

StoredFit fit_from_json(const json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kSchemaVersion)
      throw DataError("unsupported fit schema version");
    StoredFit out;
    FitResult& fit = out.fit;
    fit.method = parse_method(doc.at("method").get<std::string>());
    fit.family = parse_family(doc.at("family").get<std::string>());
    fit.config = config_from_json(doc.at("config"));
    fit.restart = doc.at("restart").get<int>();
    fit.loglik = doc.at("loglik").get<double>();
    fit.objective = doc.at("objective").get<double>();
    fit.ic = doc.at("ic").get<double>();
    fit.iterations = doc.at("iterations").get<int>();
    fit.converged = doc.at("converged").get<bool>();
    fit.objective_trace = doc.at("objective_trace").get<std::vector<double>>();
    for (const auto& row : doc.at("ic_table"))
      fit.ic_table.emplace_back(row.at("G").get<int>(), row.at("ic").get<double>());

    const int groups = doc.at("G").get<int>();
    const char* scale_key = fit.family == Family::Gaussian ? "variance" : "dispersion";
    for (const auto& g : doc.at("groups")) {
      fit.params.push_back({vector_from(g.at("coefficients")), g.at(scale_key).get<double>()});
      fit.group_sizes.push_back(g.at("size").get<int>());
    }
    if (static_cast<int>(fit.params.size()) != groups)
      throw DataError("fit document group table does not match G");

    const auto& rows = doc.at("locations");
    const Index n = static_cast<Index>(rows.size());
    const bool has_exposure = doc.at("has_exposure").get<bool>();
    Matrix locs(n, 2), raw;
    Vector exposure(n);
    std::vector<std::string> ids;
    fit.assignment = GroupAssignment{Labels(n), groups};
    Matrix pi;
    for (Index i = 0; i < n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      ids.push_back(row.at("id").get<std::string>());
      locs(i, 0) = row.at("s1").get<double>();
      locs(i, 1) = row.at("s2").get<double>();
      const Vector x = vector_from(row.at("covariates"));
      if (i == 0) raw.resize(n, x.size());
      raw.row(i) = x.transpose();
      fit.assignment.labels(i) = row.at("label").get<int>() - 1;
      if (has_exposure) exposure(i) = row.at("exposure").get<double>();
      const Vector coef = vector_from(row.at("coefficients"));
      if (i == 0) fit.per_location_coefficients.resize(n, coef.size());
      fit.per_location_coefficients.row(i) = coef.transpose();
      if (row.contains("pi")) {
        if (i == 0) pi.resize(n, groups);
        pi.row(i) = vector_from(row.at("pi")).transpose();
      }
    }
    fit.assignment.validate();
    if (pi.size() > 0) fit.fuzzy = FuzzyMembership{pi};
    auto names = doc.at("covariate_names").get<std::vector<std::string>>();
    names.erase(names.begin());
    out.data = make_dataset(locs, raw, Vector::Zero(n),
                            has_exposure ? std::optional<Vector>(exposure) : std::nullopt,
                            std::move(ids), std::move(names));
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit document: ") + e.what());
  }
}

json standard_errors_to_json(const StandardErrors& se,
                             const std::vector<std::string>& covariate_names) {
  json groups = json::array();
  for (Index g = 0; g < se.se.rows(); ++g) {
    json coefs = json::object();
    const bool ok = se.available[static_cast<std::size_t>(g)];
    for (Index k = 0; k < se.se.cols(); ++k) {
      const std::string& name = covariate_names[static_cast<std::size_t>(k)];
      coefs[name] = ok ? json(se.se(g, k)) : json(nullptr);
    }
    groups.push_back({{"group", g + 1}, {"available", ok}, {"se", coefs}});
  }
  json out{{"schema_version", kSchemaVersion},
           {"method", se.method == SeMethod::PlugIn ? "plug-in" : "bootstrap"},
           {"groups", groups}};
  if (se.method == SeMethod::Bootstrap) {
    out["replicates"] = se.replicates;
    out["dropped"] = se.dropped;
  }
  return out;
}

void write_locations_csv(const FitResult& fit, const SpatialDataset& data,
                         const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id,s1,s2,label";
  for (const auto& name : data.covariate_names) out << ",beta_" << name;
  if (fit.fuzzy)
    for (int g = 0; g < fit.groups(); ++g) out << ",pi_" << g + 1;
  out << '\n';
  for (Index i = 0; i < data.size(); ++i) {
    out << data.ids[static_cast<std::size_t>(i)] << ',' << format_double(data.locations(i, 0))
        << ',' << format_double(data.locations(i, 1)) << ',' << fit.assignment.labels(i) + 1;
    for (Index k = 0; k < fit.per_location_coefficients.cols(); ++k)
      out << ',' << format_double(fit.per_location_coefficients(i, k));
    if (fit.fuzzy)
      for (int g = 0; g < fit.groups(); ++g)
        out << ',' << format_double(fit.fuzzy->probabilities(i, g));
    out << '\n';
  }
}

void write_long_csv(const FitResult& fit, const SpatialDataset& data,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "location,quantity,value\n";
  for (Index i = 0; i < data.size(); ++i) {
    const auto& id = data.ids[static_cast<std::size_t>(i)];
    out << id << ",s1," << format_double(data.locations(i, 0)) << '\n';
    out << id << ",s2," << format_double(data.locations(i, 1)) << '\n';
    out << id << ",label," << fit.assignment.labels(i) + 1 << '\n';
    for (Index k = 0; k < fit.per_location_coefficients.cols(); ++k)
      out << id << ",beta_" << data.covariate_names[static_cast<std::size_t>(k)] << ','
          << format_double(fit.per_location_coefficients(i, k)) << '\n';
  }
}

void write_dataset_csv(const SpatialDataset& data, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id,s1,s2,y";
  for (std::size_t k = 1; k < data.covariate_names.size(); ++k) out << ',' << data.covariate_names[k];
  if (data.exposure) out << ",a";
  out << '\n';
  for (Index i = 0; i < data.size(); ++i) {
    out << data.ids[static_cast<std::size_t>(i)] << ',' << format_double(data.locations(i, 0))
        << ',' << format_double(data.locations(i, 1)) << ',' << format_double(data.response(i));
    for (Index k = 1; k < data.covariates.cols(); ++k)
      out << ',' << format_double(data.covariates(i, k));
    if (data.exposure) out << ',' << format_double((*data.exposure)(i));
    out << '\n';
  }
}

void write_truth_csv(const ScenarioTruth& truth, const std::vector<std::string>& ids,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id,s1,s2,beta0,beta1,beta2,sigma";
  if (truth.regions) out << ",region";
  out << '\n';
  for (Index i = 0; i < truth.coefficients.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)] << ',' << format_double(truth.locations(i, 0)) << ','
        << format_double(truth.locations(i, 1));
    for (Index k = 0; k < 3; ++k) out << ',' << format_double(truth.coefficients(i, k));
    out << ',' << format_double(truth.sigma(i));
    if (truth.regions) out << ',' << (*truth.regions)(i) + 1;
    out << '\n';
  }
}

}  // namespace scr
