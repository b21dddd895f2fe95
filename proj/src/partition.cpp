#include "msnet/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "msnet/simd.hpp"

namespace msnet {

std::string to_string(Method m) { return m == Method::RDP ? "rdp" : "rp"; }

Method parse_method(const std::string& s) {
  if (s == "rdp" || s == "RDP") return Method::RDP;
  if (s == "rp" || s == "RP") return Method::RP;
  throw std::invalid_argument("unknown method '" + s + "' (expected rdp or rp)");
}

double PenaltyConfig::c3_for(Method m) const {
  if (c3) return *c3;
  return m == Method::RDP ? 0.5 : 1.5;
}

double PenaltyConfig::kappa_for(Method m, std::size_t T, std::size_t N) const {
  if (kappa) return *kappa;
  const double per_node = per_node_count ? static_cast<double>(N - 1) : 1.0;
  return 2.0 * c3_for(m) * std::log(static_cast<double>(T)) * per_node;
}

std::size_t PenaltyConfig::min_segment_for(std::size_t lags) const { return min_segment ? *min_segment : lags + 1; }

void InferenceConfig::validate(std::size_t N) const {
  if (lags < 1) throw std::invalid_argument("lag order p must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (N < 2) throw std::invalid_argument("at least two nodes are required");
  solver.validate();
  if (penalty.c3 && !(*penalty.c3 >= 0.0)) throw std::invalid_argument("c3 must be non-negative");
  if (penalty.kappa && !(*penalty.kappa >= 0.0)) throw std::invalid_argument("kappa must be non-negative");
  if (penalty.min_segment && *penalty.min_segment < 1) throw std::invalid_argument("min_segment must be at least 1");
  if (lambda_override && !(*lambda_override >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
}

bool PartitionResult::converged() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const BlockFit& b) { return b.converged; });
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double interval_lambda(const InferenceConfig& cfg, double sigma_hat, std::size_t length, std::size_t N) {
  if (cfg.lambda_override) return *cfg.lambda_override;
  const double lam = lambda_alpha(sigma_hat, cfg.lags, N, cfg.alpha);
  return cfg.lambda_scale == LambdaScale::RootN ? lam / std::sqrt(static_cast<double>(length)) : lam;
}

namespace {

// Running sufficient statistics of an interval that grows one row at a time.
class GramAccumulator {
 public:
  GramAccumulator(std::size_t d, std::size_t p) : d_(d), p_(p), xtx_(d * d, 0.0), xty_(d, 0.0), sx_(d, 0.0), row_(d) {}

  void add(const MultivariateSeries& series, std::size_t target, std::size_t t) {
    lagged_row(series, target, p_, t, row_.data());
    const double y = series.at(static_cast<std::ptrdiff_t>(t), target);
    simd::rank1_update(xtx_.data(), row_.data(), d_);
    simd::axpy(y, row_.data(), xty_.data(), d_);
    for (std::size_t k = 0; k < d_; ++k) sx_[k] += row_[k];
    yty_ += y * y;
    sy_ += y;
    ++n_;
  }

  std::size_t n() const { return n_; }
  double yty() const { return yty_; }

  void export_to(GramSystem& gram, bool center) const {
    const auto d = static_cast<Eigen::Index>(d_);
    gram.n = n_;
    gram.group_size = p_;
    gram.xtx.resize(d, d);
    gram.xty.resize(d);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < d_; ++i) {
      gram.xty[static_cast<Eigen::Index>(i)] = center ? xty_[i] - sx_[i] * sy_ * inv_n : xty_[i];
      for (std::size_t j = 0; j < d_; ++j) {
        const double v = xtx_[i * d_ + j];
        gram.xtx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = center ? v - sx_[i] * sx_[j] * inv_n : v;
      }
    }
    gram.yty = center ? yty_ - sy_ * sy_ * inv_n : yty_;
  }

 private:
  std::size_t d_, p_;
  std::vector<double> xtx_, xty_, sx_, row_;
  double yty_ = 0.0, sy_ = 0.0;
  std::size_t n_ = 0;
};

BlockFit short_block(const Interval& interval, double yty) {
  BlockFit b;
  b.interval = interval;
  b.pl = yty;
  b.objective = yty / static_cast<double>(interval.length());
  b.sigma_hat = std::sqrt(b.objective);
  return b;
}

// Least-squares RSS over the active groups only.
double refit_rss(const GramSystem& gram, const GroupCoefficients& coeffs) {
  std::vector<Eigen::Index> idx;
  for (std::size_t g = 0; g < coeffs.groups(); ++g) {
    if (!coeffs.active(g)) continue;
    for (std::size_t l = 0; l < coeffs.group_size(); ++l) {
      idx.push_back(static_cast<Eigen::Index>(g * coeffs.group_size() + l));
    }
  }
  if (idx.empty()) return gram.yty;
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd a(k, k);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    b[i] = gram.xty[idx[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = gram.xtx(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd c = a.ldlt().solve(b);
  return std::max(0.0, gram.yty - b.dot(c));
}

// sigma_hat for an interval whose raw response sum of squares is yty.
double sigma_for(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg, double yty,
                 std::size_t n) {
  if (cfg.sigma_scope == SigmaScope::Series) {
    const double* x = series.column(target);
    return std::sqrt(simd::dot(x, x, series.T()) / static_cast<double>(series.T()));
  }
  return std::sqrt(yty / static_cast<double>(n));
}

BlockFit fitted_block(const Interval& interval, const GramSystem& gram, double sigma_hat, std::size_t N,
                      const InferenceConfig& cfg, GroupLassoSolver& solver,
                      const GroupCoefficients* warm) {
  BlockFit b;
  b.interval = interval;
  const double n = static_cast<double>(interval.length());
  b.sigma_hat = sigma_hat;
  b.lambda_used = interval_lambda(cfg, b.sigma_hat, interval.length(), N);
  GroupLassoFit fit = solver.solve(gram, b.lambda_used, cfg.solver, warm);
  b.objective = fit.objective;
  switch (cfg.score) {
    case BlockScore::Penalized:
      b.pl = n * fit.objective;
      break;
    case BlockScore::LassoRss:
      b.pl = std::max(0.0, n * fit.objective - n * b.lambda_used * fit.coeffs.penalty_sum());
      break;
    case BlockScore::Refit:
      b.pl = refit_rss(gram, fit.coeffs);
      break;
  }
  b.kkt_violation = fit.kkt_violation;
  b.iterations = fit.iterations;
  b.converged = fit.converged;
  b.coeffs = std::move(fit.coeffs);
  return b;
}

BlockFit score_interval(const MultivariateSeries& series, std::size_t target, const Interval& interval,
                        const InferenceConfig& cfg, GroupLassoSolver& solver) {
  const Eigen::VectorXd y = target_values(series, target, interval);
  const double yty = simd::dot(y.data(), y.data(), static_cast<std::size_t>(y.size()));
  if (interval.length() < cfg.lags + 1) return short_block(interval, yty);
  const LaggedDesign X = build_lagged_design(series, target, cfg.lags, interval);
  return fitted_block(interval, make_gram(y, X, cfg.center), sigma_for(series, target, cfg, yty, interval.length()),
                      series.N(), cfg, solver, nullptr);
}

void check_inputs(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg) {
  cfg.validate(series.N());
  if (target >= series.N()) throw std::invalid_argument("target node out of range");
}

PartitionResult assemble(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg,
                         const std::vector<Interval>& blocks, double kappa, std::size_t fits) {
  PartitionResult result;
  result.method = cfg.method;
  result.T = series.T();
  result.kappa = kappa;
  result.fits = fits;
  GroupLassoSolver solver;
  for (const Interval& I : blocks) {
    result.blocks.push_back(score_interval(series, target, I, cfg, solver));
    if (I.end < series.T()) result.change_points.push_back(I.end);
  }
  result.total_objective = partition_objective(result.blocks, kappa);
  return result;
}

}  // namespace

BlockFit block_score(const MultivariateSeries& series, std::size_t target, const Interval& interval,
                     const InferenceConfig& cfg) {
  check_inputs(series, target, cfg);
  validate_interval(interval, series.T());
  GroupLassoSolver solver;
  return score_interval(series, target, interval, cfg, solver);
}

double partition_objective(const std::vector<BlockFit>& blocks, double kappa) {
  double total = 0.0;
  for (const BlockFit& b : blocks) total += b.pl;
  if (!blocks.empty()) total += kappa * static_cast<double>(blocks.size() - 1);
  return total;
}

PartitionResult rp_search(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg) {
  check_inputs(series, target, cfg);
  const std::size_t T = series.T();
  const std::size_t N = series.N();
  const std::size_t p = cfg.lags;
  const std::size_t d = (N - 1) * p;
  const std::size_t min_seg = cfg.penalty.min_segment_for(p);
  const double kappa = cfg.penalty.kappa_for(Method::RP, T, N);
  constexpr double inf = std::numeric_limits<double>::infinity();

  // score[(i-1) * T + (j-1)] for interval [i, j]
  std::vector<double> score(T * T, inf);
  std::size_t fits = 0;
  GroupLassoSolver solver;
  GramSystem gram;
  for (std::size_t i = 1; i <= T; ++i) {
    GramAccumulator acc(d, p);
    std::optional<GroupCoefficients> warm;
    for (std::size_t j = i; j <= T; ++j) {
      acc.add(series, target, j);
      const std::size_t len = j - i + 1;
      const bool whole = (i == 1 && j == T);
      if (len < min_seg && !whole) continue;
      const Interval I{i, j};
      if (len < p + 1) {
        score[(i - 1) * T + (j - 1)] = short_block(I, acc.yty()).pl;
        continue;
      }
      acc.export_to(gram, cfg.center);
      const double sigma = sigma_for(series, target, cfg, acc.yty(), len);
      BlockFit b = fitted_block(I, gram, sigma, N, cfg, solver, warm ? &*warm : nullptr);
      ++fits;
      score[(i - 1) * T + (j - 1)] = b.pl;
      warm = std::move(b.coeffs);
    }
  }

  // opt over [i, j]: min(score, min_s opt[i, s] + opt[s + 1, j] + kappa);
  // strict improvement keeps "no split" on ties, then the smallest s.
  std::vector<double> opt(T * T, inf);
  std::vector<std::uint32_t> split(T * T, 0);
  for (std::size_t len = 1; len <= T; ++len) {
    for (std::size_t i = 1; i + len - 1 <= T; ++i) {
      const std::size_t j = i + len - 1;
      const std::size_t ij = (i - 1) * T + (j - 1);
      double best = score[ij];
      std::uint32_t best_split = 0;
      if (len >= 2 * min_seg) {
        const double* left_row = &opt[(i - 1) * T];
        for (std::size_t s = i + min_seg - 1; s + min_seg <= j; ++s) {
          const double cand = left_row[s - 1] + opt[s * T + (j - 1)] + kappa;
          if (cand < best) {
            best = cand;
            best_split = static_cast<std::uint32_t>(s);
          }
        }
      }
      opt[ij] = best;
      split[ij] = best_split;
    }
  }

  std::vector<Interval> blocks;
  std::vector<Interval> stack{{1, T}};
  while (!stack.empty()) {
    const Interval I = stack.back();
    stack.pop_back();
    const std::uint32_t s = split[(I.start - 1) * T + (I.end - 1)];
    if (s == 0) {
      blocks.push_back(I);
    } else {
      stack.push_back({s + 1, I.end});
      stack.push_back({I.start, s});
    }
  }
  return assemble(series, target, cfg, blocks, kappa, fits);
}

PartitionResult rdp_search(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg) {
  check_inputs(series, target, cfg);
  const std::size_t T = series.T();
  if (!is_power_of_two(T) || T < 2) {
    throw std::invalid_argument("RDP requires T to be a power of two (T = 2^J, J >= 1); got T = " + std::to_string(T));
  }
  const std::size_t N = series.N();
  const std::size_t p = cfg.lags;
  const std::size_t min_seg = cfg.penalty.min_segment_for(p);
  const double kappa = cfg.penalty.kappa_for(Method::RDP, T, N);

  // leaf length: smallest 2^j with 2^j > p + 1 and 2^j >= min_segment
  std::size_t leaf = 1;
  while (leaf <= p + 1 || leaf < min_seg) leaf *= 2;

  GroupLassoSolver solver;
  std::size_t fits = 0;
  if (leaf >= T) {
    std::vector<Interval> one{{1, T}};
    return assemble(series, target, cfg, one, kappa, 1);
  }

  // per level, opt value and whether the node keeps itself (no split)
  struct Node {
    double opt;
    bool split;
  };
  std::vector<std::vector<Node>> levels;
  for (std::size_t len = leaf; len <= T; len *= 2) {
    const std::size_t count = T / len;
    std::vector<Node> nodes(count);
    for (std::size_t k = 0; k < count; ++k) {
      const Interval I{k * len + 1, (k + 1) * len};
      const double s = score_interval(series, target, I, cfg, solver).pl;
      ++fits;
      nodes[k] = {s, false};
      if (!levels.empty()) {
        const auto& child = levels.back();
        const double cand = child[2 * k].opt + child[2 * k + 1].opt + kappa;
        if (cand < s) nodes[k] = {cand, true};
      }
    }
    levels.push_back(std::move(nodes));
  }

  std::vector<Interval> blocks;
  struct Pending {
    std::size_t level, index;
  };
  std::vector<Pending> stack{{levels.size() - 1, 0}};
  while (!stack.empty()) {
    const Pending node = stack.back();
    stack.pop_back();
    const std::size_t len = leaf << node.level;
    if (!levels[node.level][node.index].split) {
      blocks.push_back({node.index * len + 1, (node.index + 1) * len});
    } else {
      stack.push_back({node.level - 1, 2 * node.index + 1});
      stack.push_back({node.level - 1, 2 * node.index});
    }
  }
  return assemble(series, target, cfg, blocks, kappa, fits);
}

PartitionResult partition_search(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg) {
  return cfg.method == Method::RDP ? rdp_search(series, target, cfg) : rp_search(series, target, cfg);
}

double total_penalty(const PartitionResult& result, const InferenceConfig& cfg) {
  double pen = cfg.penalty.c3_for(result.method) * std::log(static_cast<double>(result.T)) *
               static_cast<double>(result.blocks.size());
  for (const BlockFit& b : result.blocks) {
    if (b.coeffs) pen += b.lambda_used * b.coeffs->penalty_sum();
  }
  return pen;
}

}  // namespace msnet
