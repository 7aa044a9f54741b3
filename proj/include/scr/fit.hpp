#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "scr/data.hpp"
#include "scr/likelihoods.hpp"
#include "scr/types.hpp"

namespace scr {

enum class InitStrategy { CoordinateKMeans, Random };
enum class SweepMode { Sequential, Synchronous };
enum class Method { Hard, Fuzzy };  // SCR and SFCR

std::string_view init_strategy_name(InitStrategy s);
InitStrategy parse_init_strategy(std::string_view name);
std::string_view sweep_mode_name(SweepMode m);
SweepMode parse_sweep_mode(std::string_view name);
std::string_view method_name(Method m);
Method parse_method(std::string_view name);

struct FitConfig {
  double phi = 1.0;     // Potts penalty strength
  double delta = 1.0;   // fuzziness exponent (SFCR only)
  double tol = 1e-6;
  int max_iterations = 500;
  int restarts = 10;
  Seed seed = 0;
  InitStrategy init = InitStrategy::CoordinateKMeans;
  // Sequential sweeps update g_i against the most recent neighbour labels,
  // which makes every relabel a coordinate ascent step on Q.  Synchronous
  // sweeps use the labels from the previous iteration throughout.
  SweepMode sweep = SweepMode::Sequential;
  int jobs = 1;  // worker threads for restarts; never changes results

  void validate() const;
};

/// Hard group labels g_i in {0, ..., G-1}.
struct GroupAssignment {
  Labels labels;
  int groups = 1;

  Eigen::Index size() const { return labels.size(); }
  /// Number of members of each group.
  std::vector<int> group_sizes() const;
  void validate() const;
};

/// Soft memberships pi_ig; rows sum to one.
struct FuzzyMembership {
  Matrix probabilities;  // n x G

  /// Row-wise argmax with ties to the smallest group index.
  GroupAssignment argmax() const;
};

struct FitResult {
  Method method = Method::Hard;
  Family family = Family::Gaussian;
  std::vector<GroupParameters> params;
  GroupAssignment assignment;
  std::optional<FuzzyMembership> fuzzy;
  // Q after every half step: the initial parameter fit, then alternating
  // membership sweeps and parameter updates.
  std::vector<double> objective_trace;
  double objective = 0.0;  // final Q
  double loglik = 0.0;     // sum_i log f(y_i | x_i; theta_{g_i})
  double ic = 0.0;
  int iterations = 0;
  bool converged = false;
  Matrix per_location_coefficients;  // n x p
  std::vector<int> group_sizes;      // zero marks a group empty at the end
  FitConfig config;
  int restart = 0;  // index of the winning restart
  // (G, IC) for every candidate when produced by select_groups.
  std::vector<std::pair<int, double>> ic_table;

  int groups() const { return assignment.groups; }
};

/// phi * sum_{i<j} w_ij I(g_i = g_j).
double potts_penalty(const GroupAssignment& assignment, const SpatialWeights& weights, double phi);

/// Q(theta, g) = sum_i log f(y_i | x_i; theta_{g_i}) + potts_penalty.
double penalized_objective(const SpatialDataset& data, Family family,
                           std::span<const GroupParameters> params,
                           const GroupAssignment& assignment, const SpatialWeights& weights,
                           double phi);

/// sum_{j != i} w_ij I(g_j = g) for every g.
Vector neighbor_label_weights(const SpatialWeights& weights, const Labels& labels, Eigen::Index i,
                              int groups);

/// One ICM sweep over i = 0..n-1: g_i = argmax_g {log f(y_i|x_i;theta_g) +
/// phi sum_j w_ij I(g = g_j)}, ties to the smallest index.
GroupAssignment update_memberships(const SpatialDataset& data, Family family,
                                   std::span<const GroupParameters> params,
                                   const GroupAssignment& assignment,
                                   const SpatialWeights& weights, double phi,
                                   SweepMode mode = SweepMode::Sequential);

/// pi_ig proportional to [f(y_i|x_i;theta_g) exp{phi sum_j w_ij I(g = g_j)}]^delta,
/// evaluated in log space against the given labels.
FuzzyMembership fuzzy_probs(const SpatialDataset& data, Family family,
                            std::span<const GroupParameters> params,
                            const GroupAssignment& assignment, const SpatialWeights& weights,
                            double phi, double delta);

/// Initial labels: k-means on standardized coordinates or uniform random,
/// deterministic in `seed`, with empty groups repaired from the largest one.
GroupAssignment init_assignment(const SpatialDataset& data, int groups, InitStrategy strategy,
                                Seed seed);

/// One SCR run (Algorithm-1 style alternation) from the given labels.
FitResult scr_fit_from(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                       const GroupAssignment& initial, const FitConfig& config);

/// One SFCR run from the given labels.
FitResult sfcr_fit_from(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                        const GroupAssignment& initial, const FitConfig& config);

/// Best-of-restarts SCR fit (highest final Q).
FitResult scr_fit(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                  int groups, const FitConfig& config);

/// Best-of-restarts SFCR fit; smoothed coefficients are sum_g pi_ig theta_g.
FitResult sfcr_fit(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                   int groups, const FitConfig& config);

/// -2 sum_i log f(y_i|x_i; theta_{g_i}) + log(n) * G * (p + 1).
double information_criterion(const FitResult& fit, const SpatialDataset& data, Family family);

/// SCR fit for every candidate G; returns the one with the smallest IC (ties
/// to the smaller G) with `ic_table` filled in.
FitResult select_groups(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                        std::span<const int> candidates, const FitConfig& config);

/// Parses "lo:hi:step" or a comma list into candidate group counts.
std::vector<int> parse_group_grid(std::string_view text);

}  // namespace scr
