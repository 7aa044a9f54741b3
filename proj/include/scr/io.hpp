#pragma once

#include <filesystem>

#include "json.hpp"
#include "scr/data.hpp"
#include "scr/fit.hpp"
#include "scr/predict.hpp"
#include "scr/simulate.hpp"

namespace scr {

inline constexpr int kSchemaVersion = 1;

/// Fit result document: group parameter table, per-location rows (id,
/// coordinates, covariates, label, pi row, coefficients), IC, objective
/// trace and the full config echo.  Labels are written 1-based.
nlohmann::json fit_to_json(const FitResult& fit, const SpatialDataset& data);

/// A fit read back from fit_to_json output together with the fitted
/// locations and covariates it carries (responses are not stored).
struct StoredFit {
  FitResult fit;
  SpatialDataset data;
};
StoredFit fit_from_json(const nlohmann::json& doc);

nlohmann::json config_to_json(const FitConfig& config);
FitConfig config_from_json(const nlohmann::json& doc);

nlohmann::json standard_errors_to_json(const StandardErrors& se,
                                       const std::vector<std::string>& covariate_names);

/// id,s1,s2,label,coefficients... and pi columns for fuzzy fits.
void write_locations_csv(const FitResult& fit, const SpatialDataset& data,
                         const std::filesystem::path& path);

/// Long format "location,quantity,value" for plotting coefficient maps.
void write_long_csv(const FitResult& fit, const SpatialDataset& data,
                    const std::filesystem::path& path);

/// Writes a dataset in the layout load_dataset reads (id,s1,s2,y,x1..,[a]).
void write_dataset_csv(const SpatialDataset& data, const std::filesystem::path& path);

/// id,s1,s2,beta0,beta1,beta2,sigma[,region] with 1-based regions.
void write_truth_csv(const ScenarioTruth& truth, const std::vector<std::string>& ids,
                     const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace scr
