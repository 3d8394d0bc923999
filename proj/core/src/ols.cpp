#include "talkmoves/ols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/distributions/students_t.hpp>

#include "talkmoves/errors.hpp"

namespace talkmoves {

OlsFit fit_ols(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& outcome,
               const std::vector<std::string>& names) {
  const Eigen::Index n = regressors.rows();
  const Eigen::Index p = regressors.cols();
  if (outcome.size() != n) {
    throw DimensionMismatchError("design has " + std::to_string(n) + " rows but outcome has " +
                                 std::to_string(outcome.size()));
  }
  if (static_cast<Eigen::Index>(names.size()) != p) {
    throw DimensionMismatchError("expected " + std::to_string(p) + " column names, got " +
                                 std::to_string(names.size()));
  }
  const Eigen::Index k = p + 1;
  if (n <= k) {
    throw DimensionMismatchError("need more rows than columns: " + std::to_string(n) + " rows, " +
                                 std::to_string(k) + " columns with intercept");
  }
  if (!regressors.allFinite() || !outcome.allFinite()) {
    throw ValidationError("design or outcome contains non-finite values");
  }

  OlsFit fit;
  fit.terms = names;
  fit.terms.emplace_back(kInterceptName);
  fit.design.resize(n, k);
  fit.design.leftCols(p) = regressors;
  fit.design.col(p).setOnes();
  fit.outcome = outcome;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fit.design);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::vector<std::string> dropped;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < k; ++i) dropped.push_back(fit.terms[perm(i)]);
    std::sort(dropped.begin(), dropped.end());
    std::string list;
    for (const auto& d : dropped) list += (list.empty() ? "" : ", ") + d;
    throw RankDeficientError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                             " of " + std::to_string(k) + "); collinear columns: " + list);
  }
  fit.coefficients = qr.solve(outcome);
  fit.fitted = fit.design * fit.coefficients;
  fit.residuals = outcome - fit.fitted;

  // X P = Q R, so (X'X)^-1 = P R^-1 R^-T P'.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto perm = qr.colsPermutation();
  fit.xtx_inverse = perm * inner * perm.transpose();
  return fit;
}

namespace {

double covariance_scale(std::size_t g, std::size_t n, std::size_t k) {
  return (static_cast<double>(g) / static_cast<double>(g - 1)) *
         (static_cast<double>(n - 1) / static_cast<double>(n - k));
}

// Residuals at rounding-noise level of an exact fit are treated as zero.
Eigen::VectorXd effective_residuals(const OlsFit& fit) {
  const double scale = std::max(1.0, fit.outcome.cwiseAbs().maxCoeff());
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  if (fit.residuals.cwiseAbs().maxCoeff() <= tol) {
    return Eigen::VectorXd::Zero(fit.residuals.size());
  }
  return fit.residuals;
}

}  // namespace

ClusterRobust cluster_robust_se(const OlsFit& fit, std::span<const std::string> cluster_ids) {
  const std::size_t n = fit.n_obs();
  const std::size_t k = fit.n_params();
  if (cluster_ids.size() != n) {
    throw DimensionMismatchError("got " + std::to_string(cluster_ids.size()) +
                                 " cluster ids for " + std::to_string(n) + " observations");
  }
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    if (cluster_ids[i].empty()) {
      throw ValidationError("observation " + std::to_string(i) + " has no cluster id");
    }
    groups[cluster_ids[i]].push_back(static_cast<Eigen::Index>(i));
  }
  const std::size_t g = groups.size();
  if (g < 2) {
    throw TooFewClustersError("clustered standard errors need at least 2 clusters, got " +
                              std::to_string(g));
  }

  const Eigen::VectorXd e = effective_residuals(fit);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (const auto& [id, rows] : groups) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (Eigen::Index i : rows) score.noalias() += fit.design.row(i).transpose() * e(i);
    meat.noalias() += score * score.transpose();
  }

  ClusterRobust out;
  out.n_clusters = g;
  out.degrees_of_freedom = static_cast<double>(g - 1);
  out.covariance = covariance_scale(g, n, k) * fit.xtx_inverse * meat * fit.xtx_inverse;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  const auto kk = static_cast<Eigen::Index>(k);
  out.standard_errors.resize(kk);
  out.t_stats.resize(kk);
  out.p_values.resize(kk);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index j = 0; j < kk; ++j) {
    const double se = std::sqrt(std::max(0.0, out.covariance(j, j)));
    out.standard_errors(j) = se;
    if (se > 0.0) {
      out.t_stats(j) = fit.coefficients(j) / se;
      out.p_values(j) = two_sided_p_value(out.t_stats(j), out.degrees_of_freedom);
    } else {
      out.t_stats(j) = nan;
      out.p_values(j) = nan;
      out.p_values_defined = false;
    }
  }
  return out;
}

Eigen::MatrixXd hc1_covariance(const OlsFit& fit) {
  const std::size_t n = fit.n_obs();
  const std::size_t k = fit.n_params();
  const Eigen::VectorXd e = effective_residuals(fit);
  const Eigen::MatrixXd weighted = fit.design.array().colwise() * e.array();
  const Eigen::MatrixXd meat = weighted.transpose() * weighted;
  Eigen::MatrixXd v = (static_cast<double>(n) / static_cast<double>(n - k)) * fit.xtx_inverse *
                      meat * fit.xtx_inverse;
  return 0.5 * (v + v.transpose());
}

double two_sided_p_value(double t, double dof) {
  if (!(dof > 0.0)) throw DomainError("degrees of freedom must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

std::string significance_stars(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p-value outside [0, 1]");
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace talkmoves
