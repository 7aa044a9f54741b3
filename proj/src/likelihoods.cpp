#include "scr/likelihoods.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <unsupported/Eigen/SpecialFunctions>

#include <algorithm>
#include <cmath>
#include <string>

#include "scr/errors.hpp"

namespace scr {

using Eigen::Index;

std::string_view family_name(Family family) {
  return family == Family::Gaussian ? "gaussian" : "negbin";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "negbin") return Family::NegativeBinomial;
  throw ArgumentError("unknown family '" + std::string(name) + "'");
}

void validate_parameters(const GroupParameters& params, Index p) {
  if (params.coefficients.size() != p)
    throw ArgumentError("coefficient vector length differs from covariate width");
  if (!params.coefficients.allFinite()) throw ArgumentError("non-finite coefficient");
  if (!(params.scale > 0.0) || !std::isfinite(params.scale))
    throw ArgumentError("group scale must be positive and finite");
}

void validate_family(Family family, const SpatialDataset& data) {
  if (family != Family::NegativeBinomial) return;
  for (Index i = 0; i < data.size(); ++i) {
    const double y = data.response(i);
    if (y < 0.0 || std::floor(y) != y)
      throw DataError("negative binomial response must be a nonnegative integer: row " +
                      std::to_string(i + 1));
  }
}

namespace {

// Keeps exp() of the linear predictor finite.
constexpr double kMaxEta = 700.0;

double safe_exp(double eta) { return std::exp(std::min(eta, kMaxEta)); }

}  // namespace

double conditional_mean(Family family, const Eigen::Ref<const Vector>& x, double a,
                        const Eigen::Ref<const Vector>& coefficients) {
  const double eta = x.dot(coefficients);
  return family == Family::Gaussian ? eta : a * safe_exp(eta);
}

double loglik(Family family, double y, const Eigen::Ref<const Vector>& x, double a,
              const GroupParameters& params) {
  if (family == Family::Gaussian)
    return gaussian_loglik(y, x.dot(params.coefficients), params.scale);
  return negbin_loglik(y, a * safe_exp(x.dot(params.coefficients)), params.scale);
}

Vector loglik_vector(Family family, const SpatialDataset& data, const GroupParameters& params) {
  const Vector eta = data.covariates * params.coefficients;
  const Index n = data.size();
  Vector out(n);
  if (family == Family::Gaussian) {
    const double c = -0.5 * std::log(2.0 * std::numbers::pi * params.scale);
    const double inv2s = 0.5 / params.scale;
    out = c - (data.response - eta).array().square() * inv2s;
  } else {
    const Vector a = data.exposure_or_ones();
    for (Index i = 0; i < n; ++i)
      out(i) = negbin_loglik(data.response(i), a(i) * safe_exp(eta(i)), params.scale);
  }
  return out;
}

Matrix loglik_matrix(Family family, const SpatialDataset& data,
                     std::span<const GroupParameters> params) {
  Matrix out(data.size(), static_cast<Index>(params.size()));
  for (std::size_t g = 0; g < params.size(); ++g)
    out.col(static_cast<Index>(g)) = loglik_vector(family, data, params[g]);
  return out;
}

double weighted_loglik(Family family, const SpatialDataset& data, const Vector& obs_weights,
                       const GroupParameters& params) {
  const Vector ll = loglik_vector(family, data, params);
  double total = 0.0;
  for (Index i = 0; i < ll.size(); ++i)
    if (obs_weights(i) != 0.0) total += obs_weights(i) * ll(i);
  return total;
}

namespace {

GroupParameters gaussian_wls(const SpatialDataset& data, const Vector& w) {
  const Matrix& X = data.covariates;
  const Matrix Xw = X.array().colwise() * w.array();
  const Matrix xtwx = Xw.transpose() * X;

  GroupParameters out;
  Eigen::LLT<Matrix> llt(xtwx);
  if (llt.info() == Eigen::Success && llt.rcond() >= 1e-13) {
    out.coefficients = llt.solve(Xw.transpose() * data.response);
  } else {
    // Fewer effective rows than columns: minimum-norm weighted least squares.
    const Vector root = w.cwiseSqrt();
    const Matrix design = X.array().colwise() * root.array();
    out.coefficients = design.completeOrthogonalDecomposition().solve(
        data.response.cwiseProduct(root));
  }
  const Vector resid = data.response - X * out.coefficients;
  out.scale = std::max(kVarianceFloor, w.dot(resid.cwiseAbs2()) / w.sum());
  return out;
}

// Weighted NB log-likelihood over rows with positive weight.
double negbin_objective(const SpatialDataset& data, const Vector& a, const Vector& w,
                        const std::vector<Index>& active, const Vector& beta, double nu,
                        Vector* mu_out = nullptr) {
  double total = 0.0;
  if (mu_out) mu_out->resize(data.size());
  for (Index i : active) {
    const double mu = a(i) * safe_exp(data.covariates.row(i).dot(beta));
    if (mu_out) (*mu_out)(i) = mu;
    total += w(i) * negbin_loglik(data.response(i), mu, nu);
  }
  return total;
}

GroupParameters negbin_mle(const SpatialDataset& data, const Vector& w,
                           const GroupParameters* start) {
  const Matrix& X = data.covariates;
  const Index p = X.cols();
  const Vector a = data.exposure_or_ones();
  std::vector<Index> active;
  for (Index i = 0; i < data.size(); ++i)
    if (w(i) > 0.0) active.push_back(i);

  Vector beta;
  double log_nu;
  if (start) {
    beta = start->coefficients;
    log_nu = std::log(std::clamp(start->scale, kMinDispersion, kMaxDispersion));
  } else {
    double wy = 0.0, wa = 0.0;
    for (Index i : active) {
      wy += w(i) * data.response(i);
      wa += w(i) * a(i);
    }
    beta = Vector::Zero(p);
    beta(0) = std::log(std::max(wy, 1e-3 * w.sum()) / wa);
    log_nu = 0.0;
  }
  const double log_lo = std::log(kMinDispersion), log_hi = std::log(kMaxDispersion);

  Vector mu;
  double value = negbin_objective(data, a, w, active, beta, std::exp(log_nu), &mu);

  for (int iter = 0; iter < 100; ++iter) {
    const double nu = std::exp(log_nu);
    // Score and observed information for beta at fixed nu.
    Vector grad_beta = Vector::Zero(p);
    Matrix hess_beta = Matrix::Zero(p, p);
    double grad_nu = 0.0;
    const double dg_nu = Eigen::numext::digamma(nu);
    for (Index i : active) {
      const double y = data.response(i);
      const double m = mu(i);
      const double denom = nu + m;
      const auto xi = X.row(i).transpose();
      grad_beta.noalias() += (w(i) * nu * (y - m) / denom) * xi;
      hess_beta.noalias() -= (w(i) * m * nu * (y + nu) / (denom * denom)) * xi * xi.transpose();
      grad_nu += w(i) * (Eigen::numext::digamma(y + nu) - dg_nu + std::log(nu / denom) +
                         (m - y) / denom);
    }
    const double grad_log = nu * grad_nu;
    const bool at_lower = log_nu <= log_lo && grad_log < 0.0;
    const bool at_upper = log_nu >= log_hi && grad_log > 0.0;
    const double free_nu_grad = (at_lower || at_upper) ? 0.0 : std::max(std::abs(grad_nu),
                                                                        std::abs(grad_log));
    if (grad_beta.lpNorm<Eigen::Infinity>() <= 1e-8 && free_nu_grad <= 1e-8) break;

    // Newton step on beta with halving.
    Eigen::LDLT<Matrix> ldlt(-hess_beta);
    Vector step = ldlt.solve(grad_beta);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = grad_beta;
    for (double t = 1.0; t > 1e-10; t *= 0.5) {
      const Vector trial = beta + t * step;
      Vector trial_mu;
      const double v = negbin_objective(data, a, w, active, trial, nu, &trial_mu);
      if (v >= value) {
        beta = trial;
        mu = std::move(trial_mu);
        value = v;
        break;
      }
    }

    // Newton step on log(nu), projected onto the search interval.
    {
      const double nu_now = std::exp(log_nu);
      double g = 0.0, h = 0.0;
      const double dg = Eigen::numext::digamma(nu_now);
      const double tg = Eigen::numext::polygamma(1.0, nu_now);
      for (Index i : active) {
        const double y = data.response(i);
        const double denom = nu_now + mu(i);
        g += w(i) * (Eigen::numext::digamma(y + nu_now) - dg + std::log(nu_now / denom) +
                     (mu(i) - y) / denom);
        h += w(i) * (Eigen::numext::polygamma(1.0, y + nu_now) - tg + 1.0 / nu_now -
                     2.0 / denom + (y + nu_now) / (denom * denom));
      }
      const double gl = nu_now * g;
      const double hl = nu_now * nu_now * h + nu_now * g;
      double delta = hl < 0.0 ? -gl / hl : (gl > 0.0 ? 1.0 : -1.0);
      delta = std::clamp(delta, -5.0, 5.0);
      for (double t = 1.0; t > 1e-10; t *= 0.5) {
        const double trial = std::clamp(log_nu + t * delta, log_lo, log_hi);
        if (trial == log_nu) break;
        const double v = negbin_objective(data, a, w, active, beta, std::exp(trial));
        if (v >= value) {
          log_nu = trial;
          value = v;
          break;
        }
      }
    }
  }
  return GroupParameters{beta, std::exp(log_nu)};
}

}  // namespace

GroupParameters weighted_mle(Family family, const SpatialDataset& data, const Vector& obs_weights,
                             const GroupParameters* start) {
  if (obs_weights.size() != data.size())
    throw ArgumentError("observation weight count differs from dataset size");
  if ((obs_weights.array() < 0.0).any()) throw ArgumentError("negative observation weight");
  if (!(obs_weights.sum() > 0.0)) throw DegenerateGroupError("observation weights sum to zero");
  if (family == Family::Gaussian) return gaussian_wls(data, obs_weights);
  return negbin_mle(data, obs_weights, start);
}

}  // namespace scr
