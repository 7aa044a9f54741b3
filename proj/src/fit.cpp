#include "scr/fit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "scr/errors.hpp"
#include "scr/parallel.hpp"

namespace scr {

using Eigen::Index;

std::string_view init_strategy_name(InitStrategy s) {
  return s == InitStrategy::CoordinateKMeans ? "coordinate-kmeans" : "random";
}

InitStrategy parse_init_strategy(std::string_view name) {
  if (name == "coordinate-kmeans" || name == "kmeans") return InitStrategy::CoordinateKMeans;
  if (name == "random") return InitStrategy::Random;
  throw ArgumentError("unknown init strategy '" + std::string(name) + "'");
}

std::string_view sweep_mode_name(SweepMode m) {
  return m == SweepMode::Sequential ? "sequential" : "synchronous";
}

SweepMode parse_sweep_mode(std::string_view name) {
  if (name == "sequential") return SweepMode::Sequential;
  if (name == "synchronous") return SweepMode::Synchronous;
  throw ArgumentError("unknown sweep mode '" + std::string(name) + "'");
}

std::string_view method_name(Method m) { return m == Method::Hard ? "scr" : "sfcr"; }

Method parse_method(std::string_view name) {
  if (name == "scr") return Method::Hard;
  if (name == "sfcr") return Method::Fuzzy;
  throw ArgumentError("unknown mode '" + std::string(name) + "'");
}

void FitConfig::validate() const {
  if (!(phi >= 0.0) || !std::isfinite(phi)) throw ArgumentError("phi must be nonnegative");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ArgumentError("delta must be positive");
  if (!(tol > 0.0)) throw ArgumentError("tol must be positive");
  if (max_iterations < 1) throw ArgumentError("max_iterations must be positive");
  if (restarts < 1) throw ArgumentError("restarts must be at least 1");
}

std::vector<int> GroupAssignment::group_sizes() const {
  std::vector<int> sizes(static_cast<std::size_t>(groups), 0);
  for (Index i = 0; i < labels.size(); ++i) ++sizes[static_cast<std::size_t>(labels(i))];
  return sizes;
}

void GroupAssignment::validate() const {
  if (groups < 1) throw ArgumentError("number of groups must be positive");
  for (Index i = 0; i < labels.size(); ++i)
    if (labels(i) < 0 || labels(i) >= groups) throw ArgumentError("group label out of range");
}

namespace {

// First index of the maximum; ties go to the smallest group.
Index argmax_first(const Eigen::Ref<const Vector>& v) {
  Index best = 0;
  for (Index g = 1; g < v.size(); ++g)
    if (v(g) > v(best)) best = g;
  return best;
}

// Normalizes delta * scores with log-sum-exp.
void softmax_row(const Eigen::Ref<const Vector>& scores, double delta, Eigen::Ref<Vector> out) {
  const double top = scores.maxCoeff();
  out = ((scores.array() - top) * delta).exp().matrix();
  out /= out.sum();
}

}  // namespace

GroupAssignment FuzzyMembership::argmax() const {
  GroupAssignment out;
  out.groups = static_cast<int>(probabilities.cols());
  out.labels.resize(probabilities.rows());
  for (Index i = 0; i < probabilities.rows(); ++i)
    out.labels(i) = static_cast<int>(argmax_first(probabilities.row(i).transpose()));
  return out;
}

double potts_penalty(const GroupAssignment& assignment, const SpatialWeights& weights,
                     double phi) {
  if (weights.size() != assignment.size())
    throw ArgumentError("weights and assignment differ in size");
  if (phi == 0.0) return 0.0;
  const auto& w = weights.matrix();
  double total = 0.0;
  for (Index i = 0; i < w.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(w, i); it; ++it)
      if (it.col() > i && assignment.labels(i) == assignment.labels(it.col())) total += it.value();
  return phi * total;
}

namespace {

double labelled_loglik(const Matrix& ll, const Labels& labels) {
  double total = 0.0;
  for (Index i = 0; i < labels.size(); ++i) total += ll(i, labels(i));
  return total;
}

void check_params(std::span<const GroupParameters> params, const GroupAssignment& assignment,
                  Index p) {
  if (static_cast<int>(params.size()) != assignment.groups)
    throw ArgumentError("parameter count differs from number of groups");
  for (const auto& gp : params) validate_parameters(gp, p);
}

}  // namespace

double penalized_objective(const SpatialDataset& data, Family family,
                           std::span<const GroupParameters> params,
                           const GroupAssignment& assignment, const SpatialWeights& weights,
                           double phi) {
  check_params(params, assignment, data.num_covariates());
  const Matrix ll = loglik_matrix(family, data, params);
  return labelled_loglik(ll, assignment.labels) + potts_penalty(assignment, weights, phi);
}

Vector neighbor_label_weights(const SpatialWeights& weights, const Labels& labels, Index i,
                              int groups) {
  Vector sums = Vector::Zero(groups);
  for (SparseMatrix::InnerIterator it(weights.matrix(), i); it; ++it)
    if (it.col() != i) sums(labels(it.col())) += it.value();
  return sums;
}

namespace {

// One membership sweep against a precomputed n x G log-likelihood matrix.
// Returns the number of labels that changed.
Index sweep(const Matrix& ll, const SpatialWeights& weights, double phi, SweepMode mode,
            Labels& labels) {
  const Index n = labels.size();
  const int groups = static_cast<int>(ll.cols());
  const Labels previous = mode == SweepMode::Synchronous ? labels : Labels();
  const Labels& reference = mode == SweepMode::Synchronous ? previous : labels;
  Vector scores(groups);
  Index changed = 0;
  for (Index i = 0; i < n; ++i) {
    scores = ll.row(i).transpose();
    if (phi != 0.0) scores += phi * neighbor_label_weights(weights, reference, i, groups);
    const int best = static_cast<int>(argmax_first(scores));
    if (best != labels(i)) {
      labels(i) = best;
      ++changed;
    }
  }
  return changed;
}

// Fuzzy counterpart of sweep(): fills row i of pi from the current labels and
// sets g_i to its argmax.
Index fuzzy_sweep(const Matrix& ll, const SpatialWeights& weights, double phi, double delta,
                  SweepMode mode, Labels& labels, Matrix& pi) {
  const Index n = labels.size();
  const int groups = static_cast<int>(ll.cols());
  const Labels previous = mode == SweepMode::Synchronous ? labels : Labels();
  const Labels& reference = mode == SweepMode::Synchronous ? previous : labels;
  Vector scores(groups), row(groups);
  Index changed = 0;
  for (Index i = 0; i < n; ++i) {
    scores = ll.row(i).transpose();
    if (phi != 0.0) scores += phi * neighbor_label_weights(weights, reference, i, groups);
    softmax_row(scores, delta, row);
    pi.row(i) = row.transpose();
    const int best = static_cast<int>(argmax_first(row));
    if (best != labels(i)) {
      labels(i) = best;
      ++changed;
    }
  }
  return changed;
}

double param_change(const GroupParameters& a, const GroupParameters& b) {
  return std::max((a.coefficients - b.coefficients).lpNorm<Eigen::Infinity>(),
                  std::abs(a.scale - b.scale));
}

// Refits every group from its observation weights (column g of `weights`).
// A group with zero total weight keeps its parameters, as does a group whose
// refit would lower its weighted log-likelihood.  Returns the largest change.
double update_parameters(const SpatialDataset& data, Family family, const Matrix& weights,
                         std::vector<GroupParameters>& params) {
  double largest = 0.0;
  for (Index g = 0; g < weights.cols(); ++g) {
    const Vector w = weights.col(g);
    if (!(w.sum() > 0.0)) continue;
    auto& current = params[static_cast<std::size_t>(g)];
    GroupParameters next = weighted_mle(family, data, w, &current);
    if (weighted_loglik(family, data, w, next) < weighted_loglik(family, data, w, current)) continue;
    largest = std::max(largest, param_change(next, current));
    current = std::move(next);
  }
  return largest;
}

Matrix indicator_weights(const Labels& labels, int groups) {
  Matrix w = Matrix::Zero(labels.size(), groups);
  for (Index i = 0; i < labels.size(); ++i) w(i, labels(i)) = 1.0;
  return w;
}

// Parameters fitted to the initial labels.  Groups that start empty get the
// pooled fit so they can still attract members through the sweep.
std::vector<GroupParameters> initial_parameters(const SpatialDataset& data, Family family,
                                                const GroupAssignment& initial) {
  const Matrix w = indicator_weights(initial.labels, initial.groups);
  std::vector<GroupParameters> params(static_cast<std::size_t>(initial.groups));
  std::optional<GroupParameters> pooled;
  for (int g = 0; g < initial.groups; ++g) {
    const Vector wg = w.col(g);
    if (wg.sum() > 0.0) {
      params[static_cast<std::size_t>(g)] = weighted_mle(family, data, wg);
    } else {
      if (!pooled) pooled = weighted_mle(family, data, Vector::Ones(data.size()));
      params[static_cast<std::size_t>(g)] = *pooled;
    }
  }
  return params;
}

void check_fit_inputs(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                      int groups, const FitConfig& config) {
  config.validate();
  if (groups < 1) throw ArgumentError("number of groups must be positive");
  if (groups > data.size()) throw ArgumentError("number of groups exceeds number of locations");
  if (weights.size() != data.size()) throw ArgumentError("weights and dataset differ in size");
  validate_family(family, data);
}

void finalize(FitResult& fit, const SpatialDataset& data, Family family, const Matrix& ll) {
  fit.loglik = labelled_loglik(ll, fit.assignment.labels);
  fit.group_sizes = fit.assignment.group_sizes();
  if (!fit.fuzzy) {
    fit.per_location_coefficients.resize(data.size(), data.num_covariates());
    for (Index i = 0; i < data.size(); ++i)
      fit.per_location_coefficients.row(i) =
          fit.params[static_cast<std::size_t>(fit.assignment.labels(i))].coefficients.transpose();
  }
  fit.ic = information_criterion(fit, data, family);
}

}  // namespace

GroupAssignment update_memberships(const SpatialDataset& data, Family family,
                                   std::span<const GroupParameters> params,
                                   const GroupAssignment& assignment,
                                   const SpatialWeights& weights, double phi, SweepMode mode) {
  check_params(params, assignment, data.num_covariates());
  GroupAssignment out = assignment;
  sweep(loglik_matrix(family, data, params), weights, phi, mode, out.labels);
  return out;
}

FuzzyMembership fuzzy_probs(const SpatialDataset& data, Family family,
                            std::span<const GroupParameters> params,
                            const GroupAssignment& assignment, const SpatialWeights& weights,
                            double phi, double delta) {
  if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
  check_params(params, assignment, data.num_covariates());
  const Matrix ll = loglik_matrix(family, data, params);
  FuzzyMembership out{Matrix(data.size(), assignment.groups)};
  Vector scores(assignment.groups), row(assignment.groups);
  for (Index i = 0; i < data.size(); ++i) {
    scores = ll.row(i).transpose();
    if (phi != 0.0)
      scores += phi * neighbor_label_weights(weights, assignment.labels, i, assignment.groups);
    softmax_row(scores, delta, row);
    out.probabilities.row(i) = row.transpose();
  }
  return out;
}

GroupAssignment init_assignment(const SpatialDataset& data, int groups, InitStrategy strategy,
                                Seed seed) {
  const Index n = data.size();
  if (groups < 1) throw ArgumentError("number of groups must be positive");
  if (groups > n) throw ArgumentError("number of groups exceeds number of locations");
  GroupAssignment out{Labels::Zero(n), groups};
  if (groups == 1) return out;

  std::mt19937_64 rng(mix_seed(seed));
  // Distance of each point to its cluster centre; used to pick donors when
  // repairing empty groups.
  Vector spread = Vector::Zero(n);

  if (strategy == InitStrategy::Random) {
    std::uniform_int_distribution<int> pick(0, groups - 1);
    for (Index i = 0; i < n; ++i) out.labels(i) = pick(rng);
  } else {
    Matrix z = data.locations;
    for (Index c = 0; c < z.cols(); ++c) {
      const double mean = z.col(c).mean();
      const double sd = std::sqrt((z.col(c).array() - mean).square().mean());
      z.col(c) = (z.col(c).array() - mean) / (sd > 0.0 ? sd : 1.0);
    }
    // k-means++ seeding.
    Matrix centres(groups, z.cols());
    std::uniform_int_distribution<Index> first(0, n - 1);
    centres.row(0) = z.row(first(rng));
    Vector d2 = (z.rowwise() - centres.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < groups; ++c) {
      const double total = d2.sum();
      Index chosen = 0;
      if (total > 0.0) {
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        for (chosen = 0; chosen < n - 1; ++chosen) {
          u -= d2(chosen);
          if (u < 0.0) break;
        }
      } else {
        chosen = first(rng);
      }
      centres.row(c) = z.row(chosen);
      d2 = d2.cwiseMin((z.rowwise() - centres.row(c)).rowwise().squaredNorm());
    }
    // Lloyd iterations.
    for (int iter = 0; iter < 100; ++iter) {
      bool moved = false;
      for (Index i = 0; i < n; ++i) {
        const Vector dist = (centres.rowwise() - z.row(i)).rowwise().squaredNorm();
        const int best = static_cast<int>(argmax_first(-dist));
        if (best != out.labels(i) || iter == 0) {
          moved = moved || best != out.labels(i);
          out.labels(i) = best;
        }
        spread(i) = dist(best);
      }
      if (!moved && iter > 0) break;
      Matrix sums = Matrix::Zero(groups, z.cols());
      Vector counts = Vector::Zero(groups);
      for (Index i = 0; i < n; ++i) {
        sums.row(out.labels(i)) += z.row(i);
        counts(out.labels(i)) += 1.0;
      }
      for (int c = 0; c < groups; ++c)
        if (counts(c) > 0.0) centres.row(c) = sums.row(c) / counts(c);
    }
  }

  // Empty-group repair: move the most outlying member of the largest group.
  while (true) {
    auto sizes = out.group_sizes();
    const auto empty = std::find(sizes.begin(), sizes.end(), 0);
    if (empty == sizes.end()) break;
    const int target = static_cast<int>(empty - sizes.begin());
    const int donor = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    Index pick = -1;
    for (Index i = 0; i < n; ++i)
      if (out.labels(i) == donor && (pick < 0 || spread(i) > spread(pick))) pick = i;
    out.labels(pick) = target;
    spread(pick) = 0.0;
  }
  return out;
}

FitResult scr_fit_from(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                       const GroupAssignment& initial, const FitConfig& config) {
  check_fit_inputs(data, family, weights, initial.groups, config);
  initial.validate();
  if (initial.size() != data.size()) throw ArgumentError("initial labels differ in size");

  FitResult fit;
  fit.method = Method::Hard;
  fit.family = family;
  fit.config = config;
  fit.assignment = initial;
  fit.params = initial_parameters(data, family, initial);
  const int groups = initial.groups;
  Labels& labels = fit.assignment.labels;

  Matrix ll = loglik_matrix(family, data, fit.params);
  fit.objective_trace.push_back(labelled_loglik(ll, labels) +
                                potts_penalty(fit.assignment, weights, config.phi));
  double change = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    fit.iterations = iter;
    const Index relabelled = sweep(ll, weights, config.phi, config.sweep, labels);
    fit.objective_trace.push_back(labelled_loglik(ll, labels) +
                                  potts_penalty(fit.assignment, weights, config.phi));
    if (relabelled == 0 && change < config.tol) {
      fit.converged = true;
      break;
    }
    if (iter == config.max_iterations) break;
    change = update_parameters(data, family, indicator_weights(labels, groups), fit.params);
    ll = loglik_matrix(family, data, fit.params);
    fit.objective_trace.push_back(labelled_loglik(ll, labels) +
                                  potts_penalty(fit.assignment, weights, config.phi));
  }
  fit.objective = fit.objective_trace.back();
  finalize(fit, data, family, ll);
  return fit;
}

FitResult sfcr_fit_from(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                        const GroupAssignment& initial, const FitConfig& config) {
  check_fit_inputs(data, family, weights, initial.groups, config);
  initial.validate();
  if (initial.size() != data.size()) throw ArgumentError("initial labels differ in size");

  FitResult fit;
  fit.method = Method::Fuzzy;
  fit.family = family;
  fit.config = config;
  fit.assignment = initial;
  fit.params = initial_parameters(data, family, initial);
  const int groups = initial.groups;
  Labels& labels = fit.assignment.labels;

  Matrix ll = loglik_matrix(family, data, fit.params);
  fit.objective_trace.push_back(labelled_loglik(ll, labels) +
                                potts_penalty(fit.assignment, weights, config.phi));
  Matrix pi = indicator_weights(labels, groups);
  Matrix previous = pi;
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    fit.iterations = iter;
    fuzzy_sweep(ll, weights, config.phi, config.delta, config.sweep, labels, pi);
    const double change = (pi - previous).lpNorm<Eigen::Infinity>();
    previous = pi;
    update_parameters(data, family, pi, fit.params);
    ll = loglik_matrix(family, data, fit.params);
    fit.objective_trace.push_back(labelled_loglik(ll, labels) +
                                  potts_penalty(fit.assignment, weights, config.phi));
    if (iter > 1 && change < config.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.objective = fit.objective_trace.back();
  fit.fuzzy = FuzzyMembership{pi};
  Matrix coefficients(groups, data.num_covariates());
  for (int g = 0; g < groups; ++g)
    coefficients.row(g) = fit.params[static_cast<std::size_t>(g)].coefficients.transpose();
  fit.per_location_coefficients = pi * coefficients;
  finalize(fit, data, family, ll);
  return fit;
}

namespace {

template <typename RunFn>
FitResult best_of_restarts(const SpatialDataset& data, int groups, const FitConfig& config,
                           RunFn&& run) {
  std::vector<std::optional<FitResult>> runs(static_cast<std::size_t>(config.restarts));
  parallel_for(config.restarts, config.jobs, [&](int r) {
    const GroupAssignment init =
        init_assignment(data, groups, config.init, mix_seed(config.seed, static_cast<Seed>(r)));
    runs[static_cast<std::size_t>(r)] = run(init);
    runs[static_cast<std::size_t>(r)]->restart = r;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r]->objective > runs[best]->objective) best = r;
  return std::move(*runs[best]);
}

}  // namespace

FitResult scr_fit(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                  int groups, const FitConfig& config) {
  check_fit_inputs(data, family, weights, groups, config);
  return best_of_restarts(data, groups, config, [&](const GroupAssignment& init) {
    return scr_fit_from(data, family, weights, init, config);
  });
}

FitResult sfcr_fit(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                   int groups, const FitConfig& config) {
  check_fit_inputs(data, family, weights, groups, config);
  return best_of_restarts(data, groups, config, [&](const GroupAssignment& init) {
    return sfcr_fit_from(data, family, weights, init, config);
  });
}

double information_criterion(const FitResult& fit, const SpatialDataset& data, Family family) {
  const Matrix ll = loglik_matrix(family, data, fit.params);
  const double n = static_cast<double>(data.size());
  const double dim = static_cast<double>(fit.groups()) *
                     static_cast<double>(parameters_per_group(data.num_covariates()));
  return -2.0 * labelled_loglik(ll, fit.assignment.labels) + std::log(n) * dim;
}

FitResult select_groups(const SpatialDataset& data, Family family, const SpatialWeights& weights,
                        std::span<const int> candidates, const FitConfig& config) {
  if (candidates.empty()) throw ArgumentError("candidate list is empty");
  std::vector<int> grid(candidates.begin(), candidates.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (int g : grid) check_fit_inputs(data, family, weights, g, config);

  std::optional<FitResult> best;
  std::vector<std::pair<int, double>> table;
  for (int g : grid) {
    FitResult fit = scr_fit(data, family, weights, g, config);
    table.emplace_back(g, fit.ic);
    if (!best || fit.ic < best->ic) best = std::move(fit);
  }
  best->ic_table = std::move(table);
  return std::move(*best);
}

std::vector<int> parse_group_grid(std::string_view text) {
  auto to_int = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1)
      throw ArgumentError("bad group grid '" + std::string(text) + "'");
    return v;
  };
  std::vector<int> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    const int lo = to_int(text.substr(0, a));
    const int hi = to_int(text.substr(a + 1, b == std::string_view::npos ? b : b - a - 1));
    const int step = b == std::string_view::npos ? 1 : to_int(text.substr(b + 1));
    if (hi < lo) throw ArgumentError("bad group grid '" + std::string(text) + "'");
    for (int g = lo; g <= hi; g += step) out.push_back(g);
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      out.push_back(to_int(text.substr(start, comma == std::string_view::npos ? comma : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

}  // namespace scr
