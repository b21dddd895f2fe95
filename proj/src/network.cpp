#include "msnet/network.hpp"

#include <algorithm>
#include <exception>
#include <sstream>

#include "json.hpp"

#include "msnet/parallel.hpp"

namespace msnet {

const BlockEdges& NeighborhoodModel::block_at(std::size_t t) const {
  auto it = std::upper_bound(blocks.begin(), blocks.end(), t,
                             [](std::size_t v, const BlockEdges& b) { return v < b.interval.start; });
  if (it == blocks.begin() || !std::prev(it)->interval.contains(t)) {
    throw std::out_of_range("time " + std::to_string(t) + " outside the fitted range");
  }
  return *std::prev(it);
}

DynamicNetwork::DynamicNetwork(std::vector<std::string> labels, std::size_t T, std::size_t lags, double alpha,
                               Method method, std::vector<NeighborhoodModel> neighborhoods)
    : labels_(std::move(labels)),
      T_(T),
      lags_(lags),
      alpha_(alpha),
      method_(method),
      neighborhoods_(std::move(neighborhoods)) {}

std::vector<Edge> DynamicNetwork::edges_at(std::size_t t) const {
  if (t < 1 || t > T_) {
    throw std::out_of_range("time " + std::to_string(t) + " outside [1, " + std::to_string(T_) + "]");
  }
  std::vector<Edge> out;
  for (const NeighborhoodModel& nb : neighborhoods_) {
    const BlockEdges& b = nb.block_at(t);
    out.insert(out.end(), b.edges.begin(), b.edges.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> DynamicNetwork::merged_change_points() const {
  std::vector<std::size_t> all;
  for (const NeighborhoodModel& nb : neighborhoods_) {
    all.insert(all.end(), nb.partition.change_points.begin(), nb.partition.change_points.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

bool DynamicNetwork::converged() const {
  return std::all_of(neighborhoods_.begin(), neighborhoods_.end(),
                     [](const NeighborhoodModel& nb) { return nb.partition.converged(); });
}

namespace {

std::string describe(const std::vector<NetworkError::Failure>& failures) {
  std::ostringstream os;
  os << "inference failed for " << failures.size() << " node(s)";
  for (const auto& f : failures) os << "; node " << f.node + 1 << ": " << f.message;
  return os.str();
}

}  // namespace

NetworkError::NetworkError(std::vector<Failure> failures)
    : std::runtime_error(describe(failures)), failures_(std::move(failures)) {}

NeighborhoodModel infer_neighborhood(const MultivariateSeries& series, std::size_t target,
                                     const InferenceConfig& cfg) {
  NeighborhoodModel nb;
  nb.target = target;
  nb.partition = partition_search(series, target, cfg);
  const std::size_t p = cfg.lags;
  for (const BlockFit& fit : nb.partition.blocks) {
    BlockEdges be;
    be.interval = fit.interval;
    be.modeled = fit.modeled();
    if (fit.coeffs) {
      const GroupCoefficients& c = *fit.coeffs;
      for (std::size_t g = 0; g < c.groups(); ++g) {
        if (!c.active(g)) continue;
        Edge e;
        e.from = g < target ? g : g + 1;
        e.to = target;
        e.norm = c.norm(g);
        const auto grp = c.group(g);
        e.coeffs.assign(grp.data(), grp.data() + p);
        be.edges.push_back(std::move(e));
      }
    }
    nb.blocks.push_back(std::move(be));
  }
  return nb;
}

DynamicNetwork infer_network(const MultivariateSeries& series, const InferenceConfig& cfg,
                             const std::vector<std::size_t>& targets) {
  cfg.validate(series.N());
  for (std::size_t u : targets) {
    if (u >= series.N()) throw std::invalid_argument("target node out of range");
  }
  std::vector<NeighborhoodModel> models(targets.size());
  std::vector<std::exception_ptr> errors(targets.size());
  parallel_for(targets.size(), cfg.threads, [&](std::size_t i) {
    try {
      models[i] = infer_neighborhood(series, targets[i], cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  std::vector<NetworkError::Failure> failures;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      failures.push_back({targets[i], e.what()});
    }
  }
  if (failures.size() == 1 && targets.size() == 1) std::rethrow_exception(errors[0]);
  if (!failures.empty()) throw NetworkError(std::move(failures));
  return DynamicNetwork(series.labels(), series.T(), cfg.lags, cfg.alpha, cfg.method, std::move(models));
}

DynamicNetwork infer_network(const MultivariateSeries& series, const InferenceConfig& cfg) {
  std::vector<std::size_t> all(series.N());
  for (std::size_t u = 0; u < all.size(); ++u) all[u] = u;
  return infer_network(series, cfg, all);
}

std::string network_to_json(const DynamicNetwork& network, int indent) {
  using nlohmann::json;
  const auto& labels = network.labels();
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["nodes"] = labels;
  doc["p"] = network.lags();
  doc["alpha"] = network.alpha();
  doc["method"] = to_string(network.method());
  doc["T"] = network.T();
  doc["converged"] = network.converged();
  json hoods = json::array();
  for (const NeighborhoodModel& nb : network.neighborhoods()) {
    json h;
    h["target"] = labels[nb.target];
    h["change_points"] = nb.partition.change_points;
    json blocks = json::array();
    for (std::size_t k = 0; k < nb.blocks.size(); ++k) {
      const BlockEdges& be = nb.blocks[k];
      const BlockFit& fit = nb.partition.blocks[k];
      json b;
      b["start"] = be.interval.start;
      b["end"] = be.interval.end;
      b["lambda"] = fit.lambda_used;
      b["pl"] = fit.pl;
      if (!be.modeled) b["unmodeled"] = true;
      json edges = json::array();
      for (const Edge& e : be.edges) {
        edges.push_back({{"from", labels[e.from]}, {"norm", e.norm}, {"coeffs", e.coeffs}});
      }
      b["edges"] = std::move(edges);
      blocks.push_back(std::move(b));
    }
    h["blocks"] = std::move(blocks);
    hoods.push_back(std::move(h));
  }
  doc["neighborhoods"] = std::move(hoods);
  return doc.dump(indent) + "\n";
}

std::string norms_to_csv(const DynamicNetwork& network) {
  const auto& labels = network.labels();
  std::ostringstream os;
  os.precision(17);
  os << "t,from,to,norm\n";
  for (std::size_t t = 1; t <= network.T(); ++t) {
    for (const NeighborhoodModel& nb : network.neighborhoods()) {
      const BlockEdges& b = nb.block_at(t);
      for (std::size_t v = 0; v < network.N(); ++v) {
        if (v == nb.target) continue;
        double norm = 0.0;
        for (const Edge& e : b.edges) {
          if (e.from == v) norm = e.norm;
        }
        os << t << ',' << labels[v] << ',' << labels[nb.target] << ',' << norm << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace msnet
