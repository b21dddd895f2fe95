#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "msnet/glasso.hpp"
#include "msnet/timeseries.hpp"

namespace msnet {

enum class Method { RDP, RP };

std::string to_string(Method m);
Method parse_method(const std::string& s);

// How the calibrated lambda(alpha) enters an interval fit.
enum class LambdaScale {
  // lambda_I = lambda(alpha; sigma_I) used as is in the 1/|I|-normalised objective
  Literal,
  // lambda_I = lambda(alpha; sigma_I) / sqrt(|I|)
  RootN,
};

// What the partition search compares for a fitted interval.
enum class BlockScore {
  // |I| times the group-lasso objective: RSS plus |I| lambda sum ||theta_g||
  Penalized,
  // RSS of the group-lasso fit, penalty term dropped
  LassoRss,
  // RSS of a least-squares refit restricted to the groups the lasso kept
  Refit,
};

// Which observations sigma_hat(u) in lambda(alpha) is computed from.
enum class SigmaScope {
  // sigma_I^2 = ||X_I(u)||^2 / |I| on each interval
  Interval,
  // sigma^2 = ||X(u)||^2 / T once for the whole series
  Series,
};

struct PenaltyConfig {
  // Count-penalty constant; unset means 1/2 for RDP and 3/2 for RP.
  std::optional<double> c3;
  // Per-split penalty; unset means 2 * c3 * log T (times N - 1 when per_node_count is set).
  std::optional<double> kappa;
  // Minimum block length; unset means p + 1.
  std::optional<std::size_t> min_segment;
  // Charge the count penalty once per non-target node.
  bool per_node_count = true;

  double c3_for(Method m) const;
  double kappa_for(Method m, std::size_t T, std::size_t N) const;
  std::size_t min_segment_for(std::size_t lags) const;
};

struct InferenceConfig {
  std::size_t lags = 2;
  double alpha = 0.05;
  Method method = Method::RDP;
  SolverConfig solver;
  PenaltyConfig penalty;
  // Replaces the calibrated lambda on every interval.
  std::optional<double> lambda_override;
  LambdaScale lambda_scale = LambdaScale::RootN;
  BlockScore score = BlockScore::LassoRss;
  SigmaScope sigma_scope = SigmaScope::Interval;
  // Mean-centre response and design within each interval before fitting.
  bool center = false;
  // Worker threads for per-node fan-out; 0 = default_thread_count().
  std::size_t threads = 0;

  void validate(std::size_t N) const;
};

struct BlockFit {
  Interval interval;
  // Absent for intervals shorter than p + 1.
  std::optional<GroupCoefficients> coeffs;
  // Score compared by the partition search (see BlockScore); the plain sum
  // of squares for intervals shorter than p + 1.
  double pl = 0.0;
  // The 1/|I|-normalised group-lasso objective at the fitted coefficients.
  double objective = 0.0;
  double lambda_used = 0.0;
  double sigma_hat = 0.0;
  double kkt_violation = 0.0;
  int iterations = 0;
  bool converged = true;

  bool modeled() const { return coeffs.has_value(); }
};

struct PartitionResult {
  // Interior boundaries: tau means blocks [.., tau] and [tau + 1, ..].
  std::vector<std::size_t> change_points;
  std::vector<BlockFit> blocks;
  double total_objective = 0.0;
  double kappa = 0.0;
  Method method = Method::RDP;
  std::size_t T = 0;
  // Number of interval fits performed by the search.
  std::size_t fits = 0;

  bool converged() const;
};

// lambda for an interval with the given sigma_hat and length, honouring the
// override and the configured scaling.
double interval_lambda(const InferenceConfig& cfg, double sigma_hat, std::size_t length, std::size_t N);

BlockFit block_score(const MultivariateSeries& series, std::size_t target, const Interval& interval,
                     const InferenceConfig& cfg);

PartitionResult rp_search(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg);
PartitionResult rdp_search(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg);
// Dispatches on cfg.method.
PartitionResult partition_search(const MultivariateSeries& series, std::size_t target, const InferenceConfig& cfg);

// c3 log T * (#blocks) + sum_I lambda_I sum_v ||theta_I(u, v)||.
double total_penalty(const PartitionResult& result, const InferenceConfig& cfg);

// sum of block pl (left to right) + kappa * (#blocks - 1).
double partition_objective(const std::vector<BlockFit>& blocks, double kappa);

bool is_power_of_two(std::size_t n);

}  // namespace msnet
