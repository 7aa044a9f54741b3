#include "scr/predict.hpp"

#include <Eigen/Cholesky>
#include <unsupported/Eigen/SpecialFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "scr/errors.hpp"
#include "scr/parallel.hpp"

namespace scr {

using Eigen::Index;

CrossWeights::CrossWeights(SparseMatrix matrix) : matrix_(std::move(matrix)) {
  matrix_.makeCompressed();
  for (Index r = 0; r < matrix_.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(matrix_, r); it; ++it)
      if (!(it.value() >= 0.0 && it.value() <= 1.0))
        throw ArgumentError("cross weight outside [0, 1]");
  matrix_.prune(0.0);
}

CrossWeights cross_knn_weights(const Matrix& new_points, const Matrix& fitted_points, int k) {
  if (k < 1) throw ArgumentError("k must be positive");
  if (k > fitted_points.rows()) throw ArgumentError("k exceeds the number of fitted locations");
  const auto neighbors = nearest_neighbors(new_points, fitted_points, k, false);
  std::vector<Triplet> triplets;
  for (Index r = 0; r < new_points.rows(); ++r)
    for (Index i : neighbors[static_cast<std::size_t>(r)]) triplets.emplace_back(r, i, 1.0);
  SparseMatrix w(new_points.rows(), fitted_points.rows());
  w.setFromTriplets(triplets.begin(), triplets.end());
  return CrossWeights(std::move(w));
}

CrossWeights cross_exp_weights(const Matrix& new_locations, const Matrix& fitted_locations,
                               double bandwidth, double cutoff) {
  if (!(bandwidth > 0.0)) throw ArgumentError("bandwidth must be positive");
  const double inv_bw2 = 1.0 / (bandwidth * bandwidth);
  std::vector<Triplet> triplets;
  for (Index r = 0; r < new_locations.rows(); ++r) {
    for (Index i = 0; i < fitted_locations.rows(); ++i) {
      const double d2 = (new_locations.row(r) - fitted_locations.row(i)).squaredNorm();
      const double w = std::exp(-d2 * inv_bw2);
      if (w > 0.0 && w >= cutoff) triplets.emplace_back(r, i, w);
    }
  }
  SparseMatrix w(new_locations.rows(), fitted_locations.rows());
  w.setFromTriplets(triplets.begin(), triplets.end());
  return CrossWeights(std::move(w));
}

CrossWeights cross_blend_weights(const CrossWeights& a, const CrossWeights& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("cross-weight matrices differ in dimension");
  SparseMatrix blended = 0.5 * (a.matrix() + b.matrix());
  return CrossWeights(std::move(blended));
}

namespace {

// Weighted group votes sum_i w_ri I(g = g_i) for every new location.
Matrix group_votes(const FitResult& fit, const CrossWeights& cross) {
  if (cross.cols() != fit.assignment.size())
    throw ArgumentError("cross weights do not match the fitted locations");
  const auto& w = cross.matrix();
  Matrix votes = Matrix::Zero(cross.rows(), fit.groups());
  for (Index r = 0; r < w.outerSize(); ++r) {
    bool any = false;
    for (SparseMatrix::InnerIterator it(w, r); it; ++it) {
      if (it.value() <= 0.0) continue;
      votes(r, fit.assignment.labels(it.col())) += it.value();
      any = true;
    }
    if (!any)
      throw ArgumentError("cross-weight row " + std::to_string(r + 1) +
                          " has no positive weight");
  }
  return votes;
}

Matrix coefficient_table(const FitResult& fit) {
  Matrix table(fit.groups(), fit.params.front().coefficients.size());
  for (int g = 0; g < fit.groups(); ++g)
    table.row(g) = fit.params[static_cast<std::size_t>(g)].coefficients.transpose();
  return table;
}

}  // namespace

Labels predict_assignment(const FitResult& fit, const CrossWeights& cross) {
  const Matrix votes = group_votes(fit, cross);
  Labels out(votes.rows());
  for (Index r = 0; r < votes.rows(); ++r) {
    Index best = 0;
    for (Index g = 1; g < votes.cols(); ++g)
      if (votes(r, g) > votes(r, best)) best = g;
    out(r) = static_cast<int>(best);
  }
  return out;
}

FuzzyPrediction predict_fuzzy(const FitResult& fit, const CrossWeights& cross, double phi,
                              double delta) {
  if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
  const Matrix votes = group_votes(fit, cross);
  Matrix pi(votes.rows(), votes.cols());
  for (Index r = 0; r < votes.rows(); ++r) {
    const Eigen::RowVectorXd scores = (delta * phi) * votes.row(r);
    pi.row(r) = (scores.array() - scores.maxCoeff()).exp().matrix();
    pi.row(r) /= pi.row(r).sum();
  }
  Matrix coefficients = pi * coefficient_table(fit);
  return FuzzyPrediction{FuzzyMembership{std::move(pi)}, std::move(coefficients)};
}

Matrix interpolate_coefficients(const FitResult& fit, const CrossWeights& cross, Method mode) {
  if (mode == Method::Fuzzy)
    return predict_fuzzy(fit, cross, fit.config.phi, fit.config.delta).coefficients;
  const Labels labels = predict_assignment(fit, cross);
  const Matrix table = coefficient_table(fit);
  Matrix out(labels.size(), table.cols());
  for (Index r = 0; r < labels.size(); ++r) out.row(r) = table.row(labels(r));
  return out;
}

Vector predict_response(const FitResult& fit, const CrossWeights& cross,
                        const Matrix& new_covariates, const std::optional<Vector>& new_exposure,
                        Method mode) {
  const Index p = fit.params.front().coefficients.size();
  if (new_covariates.cols() != p)
    throw ArgumentError("new covariates have " + std::to_string(new_covariates.cols()) +
                        " columns, fit has " + std::to_string(p));
  if (new_covariates.rows() != cross.rows())
    throw ArgumentError("new covariates and cross weights differ in row count");
  if (fit.family == Family::NegativeBinomial && !new_exposure)
    throw ArgumentError("negative binomial prediction requires exposure");
  if (new_exposure && new_exposure->size() != cross.rows())
    throw ArgumentError("exposure length differs from number of new locations");
  const Matrix beta = interpolate_coefficients(fit, cross, mode);
  Vector out(cross.rows());
  for (Index r = 0; r < out.size(); ++r) {
    const double a = new_exposure ? (*new_exposure)(r) : 1.0;
    out(r) = conditional_mean(fit.family, new_covariates.row(r).transpose(), a,
                              beta.row(r).transpose());
  }
  return out;
}

namespace {

std::optional<Vector> gaussian_plug_in(const Matrix& X, const Vector& y,
                                       const GroupParameters& params) {
  const Index m = X.rows(), p = X.cols();
  const Matrix xtx = X.transpose() * X;
  Eigen::LLT<Matrix> llt(xtx);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) return std::nullopt;
  const Vector resid = y - X * params.coefficients;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(m - p);
  const Matrix inv = llt.solve(Matrix::Identity(p, p));
  return (sigma2 * inv.diagonal()).cwiseSqrt();
}

std::optional<Vector> negbin_plug_in(const Matrix& X, const Vector& y, const Vector& a,
                                     const GroupParameters& params) {
  const Index m = X.rows(), p = X.cols();
  const double nu = params.scale;
  Matrix info = Matrix::Zero(p + 1, p + 1);
  for (Index i = 0; i < m; ++i) {
    const double mu = a(i) * std::exp(X.row(i).dot(params.coefficients));
    const double denom = nu + mu;
    const auto xi = X.row(i).transpose();
    info.topLeftCorner(p, p).noalias() +=
        (mu * nu * (y(i) + nu) / (denom * denom)) * xi * xi.transpose();
    info.col(p).head(p) -= (mu * (y(i) - mu) / (denom * denom)) * xi;
    info(p, p) -= Eigen::numext::polygamma(1.0, y(i) + nu) - Eigen::numext::polygamma(1.0, nu) +
                  1.0 / nu - 2.0 / denom + (y(i) + nu) / (denom * denom);
  }
  info.row(p).head(p) = info.col(p).head(p).transpose();
  Eigen::LDLT<Matrix> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
  const Matrix inv = ldlt.solve(Matrix::Identity(p + 1, p + 1));
  const Vector var = inv.diagonal().head(p);
  if ((var.array() < 0.0).any() || !var.allFinite()) return std::nullopt;
  return var.cwiseSqrt();
}

}  // namespace

StandardErrors plug_in_se(const FitResult& fit, const SpatialDataset& data, Family family) {
  const int groups = fit.groups();
  const Index p = data.num_covariates();
  StandardErrors out;
  out.method = SeMethod::PlugIn;
  out.se = Matrix::Constant(groups, p, std::numeric_limits<double>::quiet_NaN());
  out.available.assign(static_cast<std::size_t>(groups), false);
  const Vector a = data.exposure_or_ones();
  for (int g = 0; g < groups; ++g) {
    std::vector<Index> members;
    for (Index i = 0; i < data.size(); ++i)
      if (fit.assignment.labels(i) == g) members.push_back(i);
    const Index m = static_cast<Index>(members.size());
    if (m <= p) continue;
    Matrix X(m, p);
    Vector y(m), am(m);
    for (Index r = 0; r < m; ++r) {
      X.row(r) = data.covariates.row(members[static_cast<std::size_t>(r)]);
      y(r) = data.response(members[static_cast<std::size_t>(r)]);
      am(r) = a(members[static_cast<std::size_t>(r)]);
    }
    const auto& params = fit.params[static_cast<std::size_t>(g)];
    const auto se = family == Family::Gaussian ? gaussian_plug_in(X, y, params)
                                               : negbin_plug_in(X, y, am, params);
    if (!se) continue;
    out.se.row(g) = se->transpose();
    out.available[static_cast<std::size_t>(g)] = true;
  }
  return out;
}

Vector simulate_response(const FitResult& fit, const SpatialDataset& data, Family family,
                         Seed seed) {
  std::mt19937_64 rng(mix_seed(seed));
  const Vector a = data.exposure_or_ones();
  Vector y(data.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < data.size(); ++i) {
    const auto& params = fit.params[static_cast<std::size_t>(fit.assignment.labels(i))];
    const double mean =
        conditional_mean(family, data.covariates.row(i).transpose(), a(i), params.coefficients);
    if (family == Family::Gaussian) {
      y(i) = mean + std::sqrt(params.scale) * normal(rng);
    } else {
      const double nu = params.scale;
      const double lambda = std::gamma_distribution<double>(nu, mean / nu)(rng);
      y(i) = lambda > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(lambda)(rng))
                          : 0.0;
    }
  }
  return y;
}

std::vector<int> align_labels(const Labels& original, const Labels& replicate, int groups) {
  if (original.size() != replicate.size()) throw ArgumentError("label vectors differ in size");
  // confusion(r, o) = #{i : replicate_i = r, original_i = o}
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(groups, groups);
  for (Index i = 0; i < original.size(); ++i) ++confusion(replicate(i), original(i));

  std::vector<int> perm(static_cast<std::size_t>(groups));
  std::iota(perm.begin(), perm.end(), 0);
  if (groups <= 8) {
    std::vector<int> best = perm;
    long best_agree = -1;
    do {
      long agree = 0;
      for (int r = 0; r < groups; ++r) agree += confusion(r, perm[static_cast<std::size_t>(r)]);
      if (agree > best_agree) {
        best_agree = agree;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<bool> used_r(static_cast<std::size_t>(groups), false);
  std::vector<bool> used_o(static_cast<std::size_t>(groups), false);
  for (int step = 0; step < groups; ++step) {
    int br = -1, bo = -1;
    for (int r = 0; r < groups; ++r) {
      if (used_r[static_cast<std::size_t>(r)]) continue;
      for (int o = 0; o < groups; ++o) {
        if (used_o[static_cast<std::size_t>(o)]) continue;
        if (br < 0 || confusion(r, o) > confusion(br, bo)) {
          br = r;
          bo = o;
        }
      }
    }
    perm[static_cast<std::size_t>(br)] = bo;
    used_r[static_cast<std::size_t>(br)] = true;
    used_o[static_cast<std::size_t>(bo)] = true;
  }
  return perm;
}

StandardErrors bootstrap_se(const FitResult& fit, const SpatialDataset& data, Family family,
                            const SpatialWeights& weights, int replicates, Seed seed, int jobs) {
  if (replicates < 2) throw ArgumentError("bootstrap needs at least 2 replicates");
  const int groups = fit.groups();
  const Index p = data.num_covariates();

  // aligned[b] is G x p, empty when the replicate was dropped.
  std::vector<Matrix> aligned(static_cast<std::size_t>(replicates));
  parallel_for(replicates, jobs, [&](int b) {
    const Seed replicate_seed = seed + static_cast<Seed>(b);
    SpatialDataset resampled = data;
    resampled.response = simulate_response(fit, data, family, replicate_seed);
    FitConfig config = fit.config;
    config.seed = replicate_seed;
    config.jobs = 1;
    const FitResult refit = fit.method == Method::Hard
                                ? scr_fit(resampled, family, weights, groups, config)
                                : sfcr_fit(resampled, family, weights, groups, config);
    if (!refit.converged) return;
    const auto perm = align_labels(fit.assignment.labels, refit.assignment.labels, groups);
    Matrix table(groups, p);
    for (int r = 0; r < groups; ++r)
      table.row(perm[static_cast<std::size_t>(r)]) =
          refit.params[static_cast<std::size_t>(r)].coefficients.transpose();
    aligned[static_cast<std::size_t>(b)] = std::move(table);
  });

  StandardErrors out;
  out.method = SeMethod::Bootstrap;
  out.replicates = replicates;
  std::vector<const Matrix*> kept;
  for (const auto& m : aligned)
    if (m.size() > 0) kept.push_back(&m);
  out.dropped = replicates - static_cast<int>(kept.size());
  if (out.dropped * 5 > replicates || kept.size() < 2)
    throw BootstrapError("bootstrap: " + std::to_string(out.dropped) + " of " +
                             std::to_string(replicates) + " replicates did not converge",
                         out.dropped, replicates);

  Matrix mean = Matrix::Zero(groups, p);
  for (const Matrix* m : kept) mean += *m;
  mean /= static_cast<double>(kept.size());
  Matrix ss = Matrix::Zero(groups, p);
  for (const Matrix* m : kept) ss += (*m - mean).cwiseAbs2();
  out.se = (ss / static_cast<double>(kept.size() - 1)).cwiseSqrt();
  out.available.assign(static_cast<std::size_t>(groups), true);
  return out;
}

}  // namespace scr
