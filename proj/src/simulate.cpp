#include "msnet/simulate.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "msnet/parallel.hpp"
#include "msnet/rng.hpp"

namespace msnet {

void GeneratorSpec::validate() const {
  if (N < 1) throw std::invalid_argument("generator needs at least one node");
  if (T < 1) throw std::invalid_argument("generator needs T >= 1");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be non-negative");
  std::size_t next = 1;
  for (const Regime& r : schedule) {
    if (r.interval.start != next || r.interval.end < r.interval.start) {
      throw std::invalid_argument("schedule intervals must tile [1, T] in order");
    }
    next = r.interval.end + 1;
    for (const Coefficient& c : r.coefficients) {
      if (c.target < 1 || c.target > N || c.source < 1 || c.source > N) {
        throw std::invalid_argument("schedule references node outside 1.." + std::to_string(N));
      }
      if (c.target == c.source) throw std::invalid_argument("schedule contains a self-lag");
      if (c.lag < 1) throw std::invalid_argument("schedule lag must be at least 1");
    }
  }
  if (!schedule.empty() && next != T + 1) throw std::invalid_argument("schedule intervals must tile [1, T] in order");
}

std::vector<std::size_t> GeneratorSpec::change_points() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k + 1 < schedule.size(); ++k) out.push_back(schedule[k].interval.end);
  return out;
}

bool GeneratorSpec::drives(std::size_t source, std::size_t target, const Interval& interval) const {
  for (const Regime& r : schedule) {
    if (r.interval.end < interval.start || r.interval.start > interval.end) continue;
    for (const Coefficient& c : r.coefficients) {
      if (c.source == source + 1 && c.target == target + 1 && c.value != 0.0) return true;
    }
  }
  return false;
}

std::size_t GeneratorSpec::max_lag() const {
  std::size_t p = 0;
  for (const Regime& r : schedule) {
    for (const Coefficient& c : r.coefficients) p = std::max(p, c.lag);
  }
  return p;
}

MultivariateSeries simulate(const GeneratorSpec& spec) {
  spec.validate();
  const auto T = static_cast<Eigen::Index>(spec.T);
  const auto N = static_cast<Eigen::Index>(spec.N);
  Eigen::MatrixXd x(T, N);
  for (Eigen::Index v = 0; v < N; ++v) {
    for (Eigen::Index t = 0; t < T; ++t) {
      x(t, v) = spec.noise_sd * standard_normal(spec.seed, static_cast<std::uint64_t>(v),
                                                static_cast<std::uint64_t>(t + 1));
    }
  }
  for (const Regime& r : spec.schedule) {
    for (std::size_t t = r.interval.start; t <= r.interval.end; ++t) {
      for (const Coefficient& c : r.coefficients) {
        if (t <= c.lag) continue;
        x(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(c.target - 1)) +=
            c.value * x(static_cast<Eigen::Index>(t - 1 - c.lag), static_cast<Eigen::Index>(c.source - 1));
      }
    }
  }
  return MultivariateSeries(std::move(x));
}

namespace {

std::vector<Coefficient> ar2(std::size_t source, double a1, double a2) {
  std::vector<Coefficient> out{{1, source, 1, a1}};
  if (a2 != 0.0) out.push_back({1, source, 2, a2});
  return out;
}

std::vector<Coefficient> concat(std::vector<Coefficient> a, const std::vector<Coefficient>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

GeneratorSpec model_a(std::uint64_t seed, std::size_t T) {
  if (T < 1) throw std::invalid_argument("T must be at least 1");
  GeneratorSpec s;
  s.name = "A";
  s.N = 3;
  s.T = T;
  s.seed = seed;
  s.schedule = {{{1, T}, concat(ar2(2, 0.5, 0.25), ar2(3, 0.5, 0.25))}};
  return s;
}

GeneratorSpec model_b(std::uint64_t seed) { return model_b_scaled(3, seed, 1024); }

GeneratorSpec model_c(std::uint64_t seed) {
  GeneratorSpec s;
  s.name = "C";
  s.N = 3;
  s.T = 1024;
  s.seed = seed;
  s.schedule = {{{1, 128}, ar2(2, 0.5, 0.25)}, {{129, 1024}, ar2(3, 0.5, 0.25)}};
  return s;
}

GeneratorSpec model_b_scaled(std::size_t n_nodes, std::uint64_t seed, std::size_t T) {
  if (n_nodes < 3) throw std::invalid_argument("scaled Model B needs at least 3 nodes");
  if (T < 4 || T % 4 != 0) throw std::invalid_argument("scaled Model B needs T divisible by 4");
  GeneratorSpec s;
  s.name = n_nodes == 3 ? "B" : "B" + std::to_string(n_nodes);
  s.N = n_nodes;
  s.T = T;
  s.seed = seed;
  const std::size_t c1 = T / 2, c2 = 3 * T / 4;
  s.schedule = {{{1, c1}, ar2(2, 0.5, 0.25)},
                {{c1 + 1, c2}, ar2(3, 0.5, 0.25)},
                {{c2 + 1, T}, concat(ar2(2, 0.5, 0.0), ar2(3, -0.5, 0.0))}};
  return s;
}

std::string spec_to_json(const GeneratorSpec& spec, int indent) {
  using nlohmann::json;
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["model"] = spec.name;
  doc["N"] = spec.N;
  doc["T"] = spec.T;
  doc["noise_sd"] = spec.noise_sd;
  doc["seed"] = spec.seed;
  json sched = json::array();
  for (const Regime& r : spec.schedule) {
    json coeffs = json::array();
    for (const Coefficient& c : r.coefficients) {
      coeffs.push_back({{"target", c.target}, {"source", c.source}, {"lag", c.lag}, {"value", c.value}});
    }
    sched.push_back({{"start", r.interval.start}, {"end", r.interval.end}, {"coefficients", coeffs}});
  }
  doc["schedule"] = std::move(sched);
  return doc.dump(indent) + "\n";
}

std::size_t match_change_points(std::vector<std::size_t> estimates, const std::vector<std::size_t>& truth,
                                std::size_t tolerance) {
  std::sort(estimates.begin(), estimates.end());
  std::vector<bool> used(truth.size(), false);
  std::size_t matched = 0;
  for (std::size_t e : estimates) {
    std::size_t best = truth.size();
    std::size_t best_gap = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      if (used[k]) continue;
      const std::size_t gap = e > truth[k] ? e - truth[k] : truth[k] - e;
      if (gap > tolerance) continue;
      if (best == truth.size() || gap < best_gap || (gap == best_gap && truth[k] < truth[best])) {
        best = k;
        best_gap = gap;
      }
    }
    if (best != truth.size()) {
      used[best] = true;
      ++matched;
    }
  }
  return matched;
}

std::size_t default_tolerance(Method m) { return m == Method::RDP ? 0 : 5; }

TrialScore score_trial(const NeighborhoodModel& result, const GeneratorSpec& truth, std::size_t tolerance) {
  if (result.partition.T != truth.T) throw std::invalid_argument("result and truth cover different lengths");
  TrialScore s;
  s.cp_count = result.partition.change_points.size();
  s.exact_count = match_change_points(result.partition.change_points, truth.change_points(), tolerance);
  for (const BlockEdges& b : result.blocks) {
    for (const Edge& e : b.edges) {
      if (!truth.drives(e.from, e.to, b.interval)) ++s.false_edge_count;
    }
  }
  s.converged = result.partition.converged();
  return s;
}

std::size_t TrialReport::full_recoveries() const {
  return static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [&](const TrialScore& s) {
    return s.cp_count == true_change_points && s.exact_count == true_change_points;
  }));
}

bool TrialReport::converged() const {
  return std::all_of(scores.begin(), scores.end(), [](const TrialScore& s) { return s.converged; });
}

TrialReport run_study(const std::string& model_name, const ModelFactory& factory, const InferenceConfig& cfg,
                      const StudyOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be at least 1");
  TrialReport report;
  report.model = model_name;
  report.method = cfg.method;
  report.trials = options.trials;
  report.base_seed = options.base_seed;
  report.tolerance = options.tolerance.value_or(default_tolerance(cfg.method));
  report.true_change_points = factory(options.base_seed).change_points().size();
  report.scores.resize(options.trials);

  InferenceConfig inner = cfg;
  inner.threads = 1;
  parallel_for(options.trials, cfg.threads, [&](std::size_t i) {
    const GeneratorSpec spec = factory(options.base_seed + i);
    const MultivariateSeries series = simulate(spec);
    const NeighborhoodModel nb = infer_neighborhood(series, options.target, inner);
    report.scores[i] = score_trial(nb, spec, report.tolerance);
  });
  for (const TrialScore& s : report.scores) {
    ++report.cp_count_histogram[s.cp_count];
    ++report.exact_detection_histogram[s.exact_count];
    ++report.false_edge_histogram[s.false_edge_count];
  }
  return report;
}

namespace {

std::size_t histogram_top(const std::vector<TrialReport>& reports, Histogram TrialReport::*field) {
  std::size_t top = 2;
  for (const TrialReport& r : reports) {
    if (!(r.*field).empty()) top = std::max(top, (r.*field).rbegin()->first);
  }
  return top;
}

}  // namespace

std::string reports_to_csv(const std::vector<TrialReport>& reports) {
  std::ostringstream os;
  os << "category,value";
  for (const TrialReport& r : reports) os << ',' << r.model << '_' << to_string(r.method);
  os << '\n';
  const std::pair<const char*, Histogram TrialReport::*> panels[] = {
      {"change_points", &TrialReport::cp_count_histogram},
      {"exact_detection", &TrialReport::exact_detection_histogram},
      {"false_edge_detection", &TrialReport::false_edge_histogram},
  };
  for (const auto& [name, field] : panels) {
    const std::size_t top = histogram_top(reports, field);
    for (std::size_t v = 0; v <= top; ++v) {
      os << name << ',' << v;
      for (const TrialReport& r : reports) {
        auto it = (r.*field).find(v);
        os << ',' << (it == (r.*field).end() ? 0 : it->second);
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string report_to_json(const TrialReport& report, int indent) {
  using nlohmann::json;
  auto hist = [](const Histogram& h) {
    json o = json::object();
    for (const auto& [k, v] : h) o[std::to_string(k)] = v;
    return o;
  };
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["model"] = report.model;
  doc["method"] = to_string(report.method);
  doc["trials"] = report.trials;
  doc["base_seed"] = report.base_seed;
  doc["tolerance"] = report.tolerance;
  doc["true_change_points"] = report.true_change_points;
  doc["full_recoveries"] = report.full_recoveries();
  doc["converged"] = report.converged();
  doc["cp_count_histogram"] = hist(report.cp_count_histogram);
  doc["exact_detection_histogram"] = hist(report.exact_detection_histogram);
  doc["false_edge_histogram"] = hist(report.false_edge_histogram);
  json per = json::array();
  for (const TrialScore& s : report.scores) {
    per.push_back({{"cp_count", s.cp_count}, {"exact_count", s.exact_count},
                   {"false_edge_count", s.false_edge_count}, {"converged", s.converged}});
  }
  doc["per_trial"] = std::move(per);
  return doc.dump(indent) + "\n";
}

}  // namespace msnet
