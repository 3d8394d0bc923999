#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace talkmoves {

inline constexpr const char* kInterceptName = "intercept";

// Least-squares fit via column-pivoted Householder QR. The design matrix
// stored here includes the intercept as its last column.
struct OlsFit {
  std::vector<std::string> terms;
  Eigen::MatrixXd design;
  Eigen::VectorXd outcome;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted;
  // (X'X)^-1 recovered from the QR factors.
  Eigen::MatrixXd xtx_inverse;

  std::size_t n_obs() const { return static_cast<std::size_t>(design.rows()); }
  std::size_t n_params() const { return static_cast<std::size_t>(design.cols()); }
};

// Appends an intercept column to `regressors` and solves. Throws
// DimensionMismatchError (shape) or RankDeficientError naming the columns
// that are linear combinations of the others.
OlsFit fit_ols(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& outcome,
               const std::vector<std::string>& names);

struct ClusterRobust {
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;  // NaN where the SE is zero
  Eigen::MatrixXd covariance;
  std::size_t n_clusters = 0;
  double degrees_of_freedom = 0.0;
  bool p_values_defined = true;
};

// CR1 sandwich: c * B (sum_g X_g' e_g e_g' X_g) B with B = (X'X)^-1 and
// c = G/(G-1) * (N-1)/(N-k). Two-sided p-values from t(G-1).
// Throws TooFewClustersError (G < 2) or DimensionMismatchError.
ClusterRobust cluster_robust_se(const OlsFit& fit, std::span<const std::string> cluster_ids);

// HC1: N/(N-k) * B (sum_i x_i x_i' e_i^2) B, normal p-values are not
// computed. Equals CR1 with singleton clusters.
Eigen::MatrixXd hc1_covariance(const OlsFit& fit);

// Two-sided p-value of |t| under Student-t with `dof` degrees of freedom.
double two_sided_p_value(double t, double dof);

// "**" for p < 0.01, "*" for p < 0.05, "" otherwise. Throws DomainError
// outside [0, 1] (NaN included).
std::string significance_stars(double p);

}  // namespace talkmoves
