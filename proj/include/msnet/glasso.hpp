#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "msnet/timeseries.hpp"

namespace msnet {

// Coefficients of one target's restricted VAR, grouped by source node: group
// g holds the p lag coefficients of the g-th non-target node.
class GroupCoefficients {
 public:
  GroupCoefficients() = default;
  GroupCoefficients(Eigen::VectorXd theta, std::size_t group_size);
  static GroupCoefficients zeros(std::size_t groups, std::size_t group_size);

  const Eigen::VectorXd& theta() const { return theta_; }
  std::size_t group_size() const { return group_size_; }
  std::size_t groups() const { return norms_.size(); }
  double norm(std::size_t g) const { return norms_[g]; }
  const std::vector<double>& norms() const { return norms_; }
  bool active(std::size_t g) const { return norms_[g] > 0.0; }
  auto group(std::size_t g) const {
    return theta_.segment(static_cast<Eigen::Index>(g * group_size_), static_cast<Eigen::Index>(group_size_));
  }
  double penalty_sum() const;

  void set_group(std::size_t g, const double* values);

 private:
  void refresh_norms();

  Eigen::VectorXd theta_;
  std::size_t group_size_ = 1;
  std::vector<double> norms_;
};

struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 10000;
  double kkt_tol = 1e-6;

  void validate() const;
};

// Sufficient statistics of a least-squares problem on n rows:
// xtx = X'X (d x d), xty = X'y, yty = y'y.
struct GramSystem {
  Eigen::MatrixXd xtx;
  Eigen::VectorXd xty;
  double yty = 0.0;
  std::size_t n = 0;
  std::size_t group_size = 1;

  std::size_t dim() const { return static_cast<std::size_t>(xty.size()); }
  std::size_t groups() const { return dim() / group_size; }
};

// Builds the Gram system with the active SIMD kernels. With center = true the
// response and every design column are mean-centred first.
GramSystem make_gram(const Eigen::VectorXd& y, const LaggedDesign& X, bool center = false);

struct GroupLassoFit {
  GroupCoefficients coeffs;
  double objective = 0.0;
  double kkt_violation = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimises (1/n)||y - X theta||^2 + lambda * sum_g ||theta_g||_2 by cyclic
// block coordinate descent. Each group step is an exact block minimisation;
// inactive groups come out exactly zero.
GroupLassoFit fit_group_lasso(const Eigen::VectorXd& y, const LaggedDesign& X, double lambda,
                              const SolverConfig& cfg = {}, const GroupCoefficients* warm_start = nullptr);

// Reusable solver: keeps its scratch buffers between calls.
class GroupLassoSolver {
 public:
  // objective_trace, when given, receives the objective after every sweep.
  GroupLassoFit solve(const GramSystem& gram, double lambda, const SolverConfig& cfg,
                      const GroupCoefficients* warm_start = nullptr, std::vector<double>* objective_trace = nullptr);

 private:
  void prepare(const GramSystem& gram);
  void update_group(const GramSystem& gram, std::size_t g, double lambda);

  std::size_t d_ = 0, p_ = 0, groups_ = 0;
  std::vector<double> theta_, q_, eigvec_, eigval_, scratch_;
};

double group_lasso_objective(const GramSystem& gram, const GroupCoefficients& theta, double lambda);
double group_lasso_objective(const Eigen::VectorXd& y, const LaggedDesign& X, const GroupCoefficients& theta,
                             double lambda);

// Largest violation of the group-lasso optimality conditions, with
// G_g = -(2/n) X_g'(y - X theta): ||G_g + lambda theta_g/||theta_g|| || for
// active groups and max(0, ||G_g|| - lambda) for zero groups.
double kkt_check(const GroupCoefficients& theta, const Eigen::VectorXd& y, const LaggedDesign& X, double lambda);
double kkt_check(const GramSystem& gram, const GroupCoefficients& theta, double lambda);

// max_g ||(2/n) X_g'y||: every lambda at or above this zeroes all groups.
double inactivity_bound(const GramSystem& gram);

// Regularised lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
// Upper tail Q(a, x) = 1 - P(a, x), computed without cancellation.
double regularized_gamma_q(double a, double x);
double chi2_cdf(double x, double dof);
// Inverse chi-square CDF, accurate to 1e-10 absolute.
double chi2_quantile(double q, double dof);

// Type-I-error calibrated penalty 2 sigma sqrt(p Q(1 - alpha / (N(N-1)))),
// Q the chi-square(p) quantile function.
double lambda_alpha(double sigma_hat, std::size_t lags, std::size_t nodes, double alpha);

// Solves the small eigenproblem A = V diag(w) V' for symmetric A (n x n,
// row-major) by cyclic Jacobi rotations. V is returned row-major with
// eigenvectors in columns.
void symmetric_eigen(const double* a, std::size_t n, double* eigvals, double* eigvecs, double* work);

}  // namespace msnet
