#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msnet/network.hpp"
#include "msnet/partition.hpp"
#include "msnet/timeseries.hpp"

namespace msnet {

// X_t(target) += value * X_{t-lag}(source); nodes are 1-based here.
struct Coefficient {
  std::size_t target = 1;
  std::size_t source = 1;
  std::size_t lag = 1;
  double value = 0.0;
};

struct Regime {
  Interval interval;
  std::vector<Coefficient> coefficients;
};

struct GeneratorSpec {
  std::string name;
  std::size_t N = 0;
  std::size_t T = 0;
  std::vector<Regime> schedule;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument unless the schedule tiles [1, T] in order,
  // references nodes in 1..N only and has no self-lags.
  void validate() const;
  // Last time point of every regime but the final one.
  std::vector<std::size_t> change_points() const;
  // True when some coefficient on source -> target (0-based) is nonzero in a
  // regime overlapping the interval.
  bool drives(std::size_t source, std::size_t target, const Interval& interval) const;
  std::size_t max_lag() const;
};

// Noise for node v (0-based) at time t is noise_sd * standard_normal(seed, v, t).
MultivariateSeries simulate(const GeneratorSpec& spec);

GeneratorSpec model_a(std::uint64_t seed, std::size_t T = 1024);
GeneratorSpec model_b(std::uint64_t seed);
GeneratorSpec model_c(std::uint64_t seed);
// Model B coefficients on nodes 1..3, white noise on nodes 4..n_nodes; the
// change points sit at T/2 and 3T/4 (T divisible by 4).
GeneratorSpec model_b_scaled(std::size_t n_nodes, std::uint64_t seed, std::size_t T = 1024);

std::string spec_to_json(const GeneratorSpec& spec, int indent = 2);

struct TrialScore {
  std::size_t cp_count = 0;
  std::size_t exact_count = 0;
  std::size_t false_edge_count = 0;
  bool converged = true;
};

// Change points of the result's target are matched one-to-one and greedily
// (estimates in ascending order, each to the nearest free truth within the
// tolerance) against the truth's change points.
TrialScore score_trial(const NeighborhoodModel& result, const GeneratorSpec& truth, std::size_t tolerance);

// Size of a greedy matching between two change-point lists.
std::size_t match_change_points(std::vector<std::size_t> estimates, const std::vector<std::size_t>& truth,
                                std::size_t tolerance);

// Default exactness window: 0 for RDP, 5 for RP.
std::size_t default_tolerance(Method m);

using Histogram = std::map<std::size_t, std::size_t>;

struct TrialReport {
  std::string model;
  Method method = Method::RDP;
  std::size_t trials = 0;
  std::uint64_t base_seed = 0;
  std::size_t tolerance = 0;
  std::size_t true_change_points = 0;
  Histogram cp_count_histogram;
  Histogram exact_detection_histogram;
  Histogram false_edge_histogram;
  // Per-trial scores in trial order.
  std::vector<TrialScore> scores;

  // Trials with exactly the true number of change points, all matched.
  std::size_t full_recoveries() const;
  bool converged() const;
};

struct StudyOptions {
  std::size_t trials = 100;
  std::uint64_t base_seed = 1;
  // Unset means default_tolerance(cfg.method).
  std::optional<std::size_t> tolerance;
  // Node whose neighborhood is scored (0-based).
  std::size_t target = 0;
};

using ModelFactory = std::function<GeneratorSpec(std::uint64_t seed)>;

// Trial i simulates factory(base_seed + i) and infers the target's
// neighborhood. Trials run on cfg.threads workers; each trial is sequential.
TrialReport run_study(const std::string& model_name, const ModelFactory& factory, const InferenceConfig& cfg,
                      const StudyOptions& options);

// Table layout: rows "category,value", one column per report.
std::string reports_to_csv(const std::vector<TrialReport>& reports);
std::string report_to_json(const TrialReport& report, int indent = 2);

}  // namespace msnet
