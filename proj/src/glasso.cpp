#include "msnet/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "msnet/simd.hpp"

namespace msnet {

GroupCoefficients::GroupCoefficients(Eigen::VectorXd theta, std::size_t group_size)
    : theta_(std::move(theta)), group_size_(group_size) {
  if (group_size_ == 0 || static_cast<std::size_t>(theta_.size()) % group_size_ != 0) {
    throw std::invalid_argument("coefficient length is not a multiple of the group size");
  }
  refresh_norms();
}

GroupCoefficients GroupCoefficients::zeros(std::size_t groups, std::size_t group_size) {
  return GroupCoefficients(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups * group_size)), group_size);
}

void GroupCoefficients::refresh_norms() {
  const std::size_t g = static_cast<std::size_t>(theta_.size()) / group_size_;
  norms_.assign(g, 0.0);
  for (std::size_t i = 0; i < g; ++i) norms_[i] = group(i).norm();
}

void GroupCoefficients::set_group(std::size_t g, const double* values) {
  for (std::size_t k = 0; k < group_size_; ++k) theta_[static_cast<Eigen::Index>(g * group_size_ + k)] = values[k];
  norms_[g] = group(g).norm();
}

double GroupCoefficients::penalty_sum() const {
  double s = 0.0;
  for (double n : norms_) s += n;
  return s;
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("solver tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("solver max_iter must be at least 1");
  if (!(kkt_tol > 0.0)) throw std::invalid_argument("solver kkt_tol must be positive");
}

GramSystem make_gram(const Eigen::VectorXd& y, const LaggedDesign& X, bool center) {
  const auto n = static_cast<std::size_t>(X.matrix.rows());
  if (static_cast<std::size_t>(y.size()) != n) throw std::invalid_argument("response length does not match design rows");
  const std::size_t d = X.cols();
  GramSystem gram;
  gram.n = n;
  gram.group_size = X.lags;
  gram.xtx.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  gram.xty.resize(static_cast<Eigen::Index>(d));

  Eigen::MatrixXd Xc;
  Eigen::VectorXd yc;
  const Eigen::MatrixXd* Xp = &X.matrix;
  const Eigen::VectorXd* yp = &y;
  if (center) {
    Xc = X.matrix.rowwise() - X.matrix.colwise().mean();
    yc = y.array() - y.mean();
    Xp = &Xc;
    yp = &yc;
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double* cj = Xp->col(static_cast<Eigen::Index>(j)).data();
    gram.xty[static_cast<Eigen::Index>(j)] = simd::dot(cj, yp->data(), n);
    for (std::size_t k = j; k < d; ++k) {
      const double v = simd::dot(cj, Xp->col(static_cast<Eigen::Index>(k)).data(), n);
      gram.xtx(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v;
      gram.xtx(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v;
    }
  }
  gram.yty = simd::dot(yp->data(), yp->data(), n);
  return gram;
}

void symmetric_eigen(const double* a, std::size_t n, double* w, double* v, double* work) {
  double* m = work;
  std::copy(a, a + n * n, m);
  std::fill(v, v + n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += m[i * n + i] * m[i * n + i];
      for (std::size_t j = i + 1; j < n; ++j) off += m[i * n + j] * m[i * n + j];
    }
    if (off <= 1e-30 * diag || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m[k * n + p], mkq = m[k * n + q];
          m[k * n + p] = c * mkp - s * mkq;
          m[k * n + q] = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m[p * n + k], mqk = m[q * n + k];
          m[p * n + k] = c * mpk - s * mqk;
          m[q * n + k] = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) w[i] = m[i * n + i];
}

namespace {

double rss_from_gram(const GramSystem& gram, const double* theta, const double* q) {
  const std::size_t d = gram.dim();
  double cross = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    cross += theta[i] * gram.xty[static_cast<Eigen::Index>(i)];
    quad += theta[i] * q[i];
  }
  return std::max(0.0, gram.yty - 2.0 * cross + quad);
}

double group_norm(const double* x, std::size_t p) {
  double s = 0.0;
  for (std::size_t k = 0; k < p; ++k) s += x[k] * x[k];
  return std::sqrt(s);
}

// KKT violation given q = X'X theta.
double kkt_from_q(const GramSystem& gram, const double* theta, const double* q, double lambda) {
  const std::size_t p = gram.group_size;
  const double scale = 2.0 / static_cast<double>(gram.n);
  double worst = 0.0;
  for (std::size_t g = 0; g < gram.groups(); ++g) {
    const double* tg = theta + g * p;
    const double nrm = group_norm(tg, p);
    double acc = 0.0;
    if (nrm > 0.0) {
      for (std::size_t k = 0; k < p; ++k) {
        const std::size_t i = g * p + k;
        const double grad = -scale * (gram.xty[static_cast<Eigen::Index>(i)] - q[i]);
        const double r = grad + lambda * tg[k] / nrm;
        acc += r * r;
      }
      worst = std::max(worst, std::sqrt(acc));
    } else {
      for (std::size_t k = 0; k < p; ++k) {
        const std::size_t i = g * p + k;
        const double grad = -scale * (gram.xty[static_cast<Eigen::Index>(i)] - q[i]);
        acc += grad * grad;
      }
      worst = std::max(worst, std::sqrt(acc) - lambda);
    }
  }
  return std::max(0.0, worst);
}

void check_gram(const GramSystem& gram) {
  if (gram.group_size == 0 || gram.dim() % gram.group_size != 0) {
    throw std::invalid_argument("design width is not a multiple of the lag order");
  }
  if (static_cast<std::size_t>(gram.xtx.rows()) != gram.dim() ||
      static_cast<std::size_t>(gram.xtx.cols()) != gram.dim()) {
    throw std::invalid_argument("Gram matrix dimension mismatch");
  }
  if (gram.n == 0) throw std::invalid_argument("empty least-squares problem");
}

}  // namespace

void GroupLassoSolver::prepare(const GramSystem& gram) {
  d_ = gram.dim();
  p_ = gram.group_size;
  groups_ = d_ / p_;
  theta_.assign(d_, 0.0);
  q_.assign(d_, 0.0);
  eigvec_.resize(groups_ * p_ * p_);
  eigval_.resize(groups_ * p_);
  scratch_.resize(4 * p_ * p_ + 4 * p_);
  double* block = scratch_.data();
  double* work = block + p_ * p_;
  for (std::size_t g = 0; g < groups_; ++g) {
    for (std::size_t i = 0; i < p_; ++i) {
      for (std::size_t j = 0; j < p_; ++j) {
        block[i * p_ + j] = gram.xtx(static_cast<Eigen::Index>(g * p_ + i), static_cast<Eigen::Index>(g * p_ + j));
      }
    }
    symmetric_eigen(block, p_, eigval_.data() + g * p_, eigvec_.data() + g * p_ * p_, work);
  }
}

// Exact minimiser over group g of (1/2) t'A t - r't + kappa ||t||, kappa = n lambda / 2,
// where A is the diagonal block and r the partial-residual correlation.
void GroupLassoSolver::update_group(const GramSystem& gram, std::size_t g, double lambda) {
  const std::size_t p = p_;
  const std::size_t off = g * p;
  double* r = scratch_.data();
  double* c = r + p;
  double* next = c + p;
  double* delta = next + p;
  const double* V = eigvec_.data() + g * p * p;
  const double* w = eigval_.data() + g * p;

  for (std::size_t k = 0; k < p; ++k) {
    double diag_part = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      diag_part += gram.xtx(static_cast<Eigen::Index>(off + k), static_cast<Eigen::Index>(off + j)) * theta_[off + j];
    }
    r[k] = gram.xty[static_cast<Eigen::Index>(off + k)] - q_[off + k] + diag_part;
  }
  const double kappa = 0.5 * static_cast<double>(gram.n) * lambda;
  double wmax = 0.0;
  for (std::size_t k = 0; k < p; ++k) wmax = std::max(wmax, w[k]);
  const double wfloor = 1e-12 * std::max(wmax, 1e-300);

  // coordinates of r in the eigenbasis; null-space components are dropped
  double cnorm2 = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += V[j * p + k] * r[j];
    c[k] = w[k] > wfloor ? s : 0.0;
    cnorm2 += c[k] * c[k];
  }

  if (std::sqrt(cnorm2) <= kappa || cnorm2 == 0.0) {
    std::fill(next, next + p, 0.0);
  } else {
    // ||theta|| = s solves F(s) = sum c_k^2 / (w_k s + kappa)^2 - 1 = 0; F is
    // convex and decreasing, so Newton from s = 0 climbs monotonically.
    double s = 0.0;
    if (kappa > 0.0) {
      for (int it = 0; it < 200; ++it) {
        double f = -1.0, df = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
          if (c[k] == 0.0) continue;
          const double den = w[k] * s + kappa;
          f += c[k] * c[k] / (den * den);
          df -= 2.0 * c[k] * c[k] * w[k] / (den * den * den);
        }
        if (f <= 0.0 || df >= 0.0) break;
        const double step = -f / df;
        const double ns = s + step;
        if (!(ns > s)) break;
        s = ns;
        if (step <= 1e-15 * s) break;
      }
    }
    for (std::size_t k = 0; k < p; ++k) {
      double coef = 0.0;
      if (c[k] != 0.0) coef = kappa > 0.0 ? c[k] * s / (w[k] * s + kappa) : c[k] / w[k];
      c[k] = coef;
    }
    for (std::size_t j = 0; j < p; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < p; ++k) v += V[j * p + k] * c[k];
      next[j] = v;
    }
  }

  bool changed = false;
  for (std::size_t k = 0; k < p; ++k) {
    delta[k] = next[k] - theta_[off + k];
    changed = changed || delta[k] != 0.0;
  }
  if (!changed) return;
  for (std::size_t k = 0; k < p; ++k) {
    theta_[off + k] = next[k];
    if (delta[k] == 0.0) continue;
    // q += A[:, off + k] * delta_k; xtx is symmetric, so the row is contiguous
    simd::axpy(delta[k], gram.xtx.col(static_cast<Eigen::Index>(off + k)).data(), q_.data(), d_);
  }
}

GroupLassoFit GroupLassoSolver::solve(const GramSystem& gram, double lambda, const SolverConfig& cfg,
                                      const GroupCoefficients* warm_start, std::vector<double>* trace) {
  check_gram(gram);
  cfg.validate();
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  prepare(gram);
  if (warm_start && warm_start->theta().size() > 0) {
    if (static_cast<std::size_t>(warm_start->theta().size()) != d_ || warm_start->group_size() != p_) {
      throw std::invalid_argument("warm start dimension mismatch");
    }
    std::copy(warm_start->theta().data(), warm_start->theta().data() + d_, theta_.begin());
    for (std::size_t j = 0; j < d_; ++j) {
      if (theta_[j] != 0.0) simd::axpy(theta_[j], gram.xtx.col(static_cast<Eigen::Index>(j)).data(), q_.data(), d_);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(gram.n);
  auto objective = [&] {
    double pen = 0.0;
    for (std::size_t g = 0; g < groups_; ++g) pen += group_norm(theta_.data() + g * p_, p_);
    return rss_from_gram(gram, theta_.data(), q_.data()) * inv_n + lambda * pen;
  };

  GroupLassoFit fit;
  double prev = objective();
  double kkt = kkt_from_q(gram, theta_.data(), q_.data(), lambda);
  int it = 0;
  bool converged = false;
  while (it < cfg.max_iter) {
    ++it;
    for (std::size_t g = 0; g < groups_; ++g) update_group(gram, g, lambda);
    const double cur = objective();
    if (trace) trace->push_back(cur);
    kkt = kkt_from_q(gram, theta_.data(), q_.data(), lambda);
    const double rel = std::abs(prev - cur) / std::max(std::abs(cur), std::numeric_limits<double>::min());
    prev = cur;
    if (rel < cfg.tol && kkt <= cfg.kkt_tol) {
      converged = true;
      break;
    }
  }
  // recompute q from scratch so the reported objective does not carry the
  // drift of incremental updates
  Eigen::Map<const Eigen::VectorXd> th(theta_.data(), static_cast<Eigen::Index>(d_));
  Eigen::VectorXd qfresh = gram.xtx * th;
  std::copy(qfresh.data(), qfresh.data() + d_, q_.begin());

  fit.coeffs = GroupCoefficients(Eigen::VectorXd(th), p_);
  fit.objective = objective();
  fit.kkt_violation = kkt_from_q(gram, theta_.data(), q_.data(), lambda);
  fit.iterations = it;
  fit.converged = converged || fit.kkt_violation <= cfg.kkt_tol;
  return fit;
}

GroupLassoFit fit_group_lasso(const Eigen::VectorXd& y, const LaggedDesign& X, double lambda, const SolverConfig& cfg,
                              const GroupCoefficients* warm_start) {
  GroupLassoSolver solver;
  return solver.solve(make_gram(y, X), lambda, cfg, warm_start);
}

double group_lasso_objective(const GramSystem& gram, const GroupCoefficients& theta, double lambda) {
  check_gram(gram);
  const Eigen::VectorXd q = gram.xtx * theta.theta();
  return rss_from_gram(gram, theta.theta().data(), q.data()) / static_cast<double>(gram.n) +
         lambda * theta.penalty_sum();
}

double group_lasso_objective(const Eigen::VectorXd& y, const LaggedDesign& X, const GroupCoefficients& theta,
                             double lambda) {
  if (static_cast<std::size_t>(y.size()) != X.rows() || static_cast<std::size_t>(theta.theta().size()) != X.cols()) {
    throw std::invalid_argument("dimension mismatch");
  }
  const Eigen::VectorXd resid = y - X.matrix * theta.theta();
  return resid.squaredNorm() / static_cast<double>(y.size()) + lambda * theta.penalty_sum();
}

double kkt_check(const GramSystem& gram, const GroupCoefficients& theta, double lambda) {
  check_gram(gram);
  if (static_cast<std::size_t>(theta.theta().size()) != gram.dim() || theta.group_size() != gram.group_size) {
    throw std::invalid_argument("coefficient dimension mismatch");
  }
  const Eigen::VectorXd q = gram.xtx * theta.theta();
  return kkt_from_q(gram, theta.theta().data(), q.data(), lambda);
}

double kkt_check(const GroupCoefficients& theta, const Eigen::VectorXd& y, const LaggedDesign& X, double lambda) {
  if (static_cast<std::size_t>(y.size()) != X.rows() || static_cast<std::size_t>(theta.theta().size()) != X.cols() ||
      theta.group_size() != X.lags) {
    throw std::invalid_argument("dimension mismatch");
  }
  const std::size_t p = X.lags;
  const Eigen::VectorXd grad = -2.0 / static_cast<double>(y.size()) * (X.matrix.transpose() * (y - X.matrix * theta.theta()));
  double worst = 0.0;
  for (std::size_t g = 0; g < theta.groups(); ++g) {
    const auto G = grad.segment(static_cast<Eigen::Index>(g * p), static_cast<Eigen::Index>(p));
    if (theta.active(g)) {
      worst = std::max(worst, (G + lambda * theta.group(g) / theta.norm(g)).norm());
    } else {
      worst = std::max(worst, G.norm() - lambda);
    }
  }
  return std::max(0.0, worst);
}

double inactivity_bound(const GramSystem& gram) {
  check_gram(gram);
  const std::size_t p = gram.group_size;
  double best = 0.0;
  for (std::size_t g = 0; g < gram.groups(); ++g) {
    best = std::max(best, gram.xty.segment(static_cast<Eigen::Index>(g * p), static_cast<Eigen::Index>(p)).norm());
  }
  return 2.0 * best / static_cast<double>(gram.n);
}

double lambda_alpha(double sigma_hat, std::size_t lags, std::size_t nodes, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (nodes < 2) throw std::invalid_argument("lambda_alpha needs at least two nodes");
  if (lags < 1) throw std::invalid_argument("lag order must be positive");
  if (!(sigma_hat >= 0.0)) throw std::invalid_argument("sigma_hat must be non-negative");
  const double pairs = static_cast<double>(nodes) * static_cast<double>(nodes - 1);
  const double q = chi2_quantile(1.0 - alpha / pairs, static_cast<double>(lags));
  return 2.0 * sigma_hat * std::sqrt(static_cast<double>(lags) * q);
}

}  // namespace msnet
