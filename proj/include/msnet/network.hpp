#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "msnet/partition.hpp"
#include "msnet/timeseries.hpp"

namespace msnet {

struct Edge {
  std::size_t from = 0;  // source node v, 0-based
  std::size_t to = 0;    // target node u, 0-based
  double norm = 0.0;
  std::vector<double> coeffs;  // lags 1..p

  bool operator<(const Edge& o) const { return from != o.from ? from < o.from : to < o.to; }
};

struct BlockEdges {
  Interval interval;
  // False for blocks shorter than p + 1, which carry no fitted model.
  bool modeled = true;
  std::vector<Edge> edges;
};

struct NeighborhoodModel {
  std::size_t target = 0;
  PartitionResult partition;
  std::vector<BlockEdges> blocks;

  const BlockEdges& block_at(std::size_t t) const;
};

class DynamicNetwork {
 public:
  DynamicNetwork() = default;
  DynamicNetwork(std::vector<std::string> labels, std::size_t T, std::size_t lags, double alpha, Method method,
                 std::vector<NeighborhoodModel> neighborhoods);

  std::size_t N() const { return labels_.size(); }
  std::size_t T() const { return T_; }
  std::size_t lags() const { return lags_; }
  double alpha() const { return alpha_; }
  Method method() const { return method_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<NeighborhoodModel>& neighborhoods() const { return neighborhoods_; }

  // Edge set E_t sorted by (from, to). Throws std::out_of_range unless 1 <= t <= T.
  std::vector<Edge> edges_at(std::size_t t) const;
  // Sorted union of every node's change points.
  std::vector<std::size_t> merged_change_points() const;
  bool converged() const;

 private:
  std::vector<std::string> labels_;
  std::size_t T_ = 0, lags_ = 0;
  double alpha_ = 0.0;
  Method method_ = Method::RDP;
  std::vector<NeighborhoodModel> neighborhoods_;
};

// One or more per-node inferences failed; what() lists each node's message.
class NetworkError : public std::runtime_error {
 public:
  struct Failure {
    std::size_t node;
    std::string message;
  };
  explicit NetworkError(std::vector<Failure> failures);
  const std::vector<Failure>& failures() const { return failures_; }

 private:
  std::vector<Failure> failures_;
};

NeighborhoodModel infer_neighborhood(const MultivariateSeries& series, std::size_t target,
                                     const InferenceConfig& cfg);

// Neighborhoods for every node, fanned out over cfg.threads workers.
DynamicNetwork infer_network(const MultivariateSeries& series, const InferenceConfig& cfg);

// Only the listed targets are inferred; the rest of the document is unchanged.
DynamicNetwork infer_network(const MultivariateSeries& series, const InferenceConfig& cfg,
                             const std::vector<std::size_t>& targets);

inline constexpr int kFormatVersion = 1;

std::string network_to_json(const DynamicNetwork& network, int indent = 2);

// Long-format CSV: t,from,to,norm for every ordered pair (v, u) of an
// inferred neighborhood, with norm = ||theta_t(u, v)|| (0 when absent).
std::string norms_to_csv(const DynamicNetwork& network);

}  // namespace msnet
