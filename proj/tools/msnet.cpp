// msnet: simulate benchmark series, infer dynamic networks, reproduce studies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "msnet/network.hpp"
#include "msnet/simulate.hpp"
#include "msnet/timeseries.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNoConvergence = 3 };

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

struct ModelFlags {
  std::string model = "b";
  std::size_t nodes = 5;
  std::optional<std::size_t> T;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Benchmark process")
        ->check(CLI::IsMember({"a", "b", "c", "b-scaled"}))
        ->capture_default_str();
    app->add_option("--nodes", nodes, "Vertex count for b-scaled")->capture_default_str();
    app->add_option("--T", T, "Series length (models a, b, b-scaled)");
  }

  msnet::ModelFactory factory() const {
    if (model == "c" && T && *T != 1024) throw UsageError("model c has a fixed length of 1024");
    if (model == "b-scaled" && nodes < 3) throw UsageError("--nodes must be at least 3");
    const std::size_t len = T.value_or(1024);
    if ((model == "b" || model == "b-scaled") && (len < 4 || len % 4 != 0)) {
      throw UsageError("--T must be a positive multiple of 4 for model " + model);
    }
    if (len < 1) throw UsageError("--T must be positive");
    if (model == "a") return [len](std::uint64_t s) { return msnet::model_a(s, len); };
    if (model == "b") return [len](std::uint64_t s) { return msnet::model_b_scaled(3, s, len); };
    if (model == "c") return [](std::uint64_t s) { return msnet::model_c(s); };
    const std::size_t n = nodes;
    return [n, len](std::uint64_t s) { return msnet::model_b_scaled(n, s, len); };
  }
};

struct InferFlags {
  std::string method = "rdp";
  std::size_t lags = 2;
  double alpha = 0.05;
  std::optional<double> lambda, c3, kappa;
  std::optional<std::size_t> min_segment;
  std::string score = "lasso-rss";
  std::string sigma = "interval";
  std::size_t threads = 0;

  void add(CLI::App* app) {
    app->add_option("--method", method, "Partition class")->check(CLI::IsMember({"rdp", "rp"}))->capture_default_str();
    app->add_option("-p,--lags", lags, "VAR order p")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--alpha", alpha, "Level for the calibrated lambda")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--lambda", lambda, "Fixed group-lasso lambda on every interval")->check(CLI::NonNegativeNumber);
    app->add_option("--c3", c3, "Count-penalty constant (default 0.5 rdp, 1.5 rp)")->check(CLI::NonNegativeNumber);
    app->add_option("--kappa", kappa, "Per-split penalty, overrides --c3")->check(CLI::NonNegativeNumber);
    app->add_option("--min-segment", min_segment, "Shortest block (default p + 1)")->check(CLI::PositiveNumber);
    app->add_option("--score", score, "Interval score")
        ->check(CLI::IsMember({"penalized", "lasso-rss", "refit"}))
        ->capture_default_str();
    app->add_option("--sigma", sigma, "Noise scale in lambda: per interval or whole series")
        ->check(CLI::IsMember({"interval", "series"}))
        ->capture_default_str();
    app->add_option("--threads", threads, "Worker threads (default MSNET_THREADS or all cores)");
  }

  msnet::InferenceConfig config() const {
    msnet::InferenceConfig cfg;
    cfg.method = msnet::parse_method(method);
    cfg.lags = lags;
    cfg.alpha = alpha;
    cfg.lambda_override = lambda;
    cfg.penalty.c3 = c3;
    cfg.penalty.kappa = kappa;
    cfg.penalty.min_segment = min_segment;
    cfg.score = score == "penalized" ? msnet::BlockScore::Penalized
                : score == "refit"   ? msnet::BlockScore::Refit
                                     : msnet::BlockScore::LassoRss;
    cfg.sigma_scope = sigma == "series" ? msnet::SigmaScope::Series : msnet::SigmaScope::Interval;
    cfg.threads = threads;
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie strictly between 0 and 1");
    return cfg;
  }
};

void check_rdp_length(const msnet::InferenceConfig& cfg, std::size_t T) {
  if (cfg.method == msnet::Method::RDP && (!msnet::is_power_of_two(T) || T < 2)) {
    throw UsageError("--method rdp requires T to be a power of two, got T = " + std::to_string(T));
  }
}

int cmd_simulate(const ModelFlags& model, std::uint64_t seed, const std::string& out) {
  const msnet::GeneratorSpec spec = model.factory()(seed);
  const msnet::MultivariateSeries series = msnet::simulate(spec);
  write_file(out, msnet::to_csv(series));
  std::cerr << msnet::spec_to_json(spec);
  return kOk;
}

int cmd_infer(const InferFlags& flags, const std::string& input, const std::vector<std::string>& targets,
              const std::string& preprocess, const std::string& out, const std::string& norms_out) {
  const msnet::InferenceConfig cfg = flags.config();
  msnet::MultivariateSeries series = msnet::load_csv(input);
  if (preprocess == "diff") series = msnet::first_difference(series);
  check_rdp_length(cfg, series.T());
  cfg.validate(series.N());

  msnet::DynamicNetwork net;
  if (targets.empty()) {
    net = msnet::infer_network(series, cfg);
  } else {
    std::vector<std::size_t> idx;
    for (const std::string& t : targets) {
      try {
        idx.push_back(series.node_index(t));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    net = msnet::infer_network(series, cfg, idx);
  }
  write_file(out, msnet::network_to_json(net));
  if (!norms_out.empty()) write_file(norms_out, msnet::norms_to_csv(net));
  if (!net.converged()) {
    std::cerr << "warning: group-lasso solver did not converge on every interval; results flagged\n";
    return kNoConvergence;
  }
  return kOk;
}

void print_summary(const msnet::TrialReport& r) {
  std::printf("model %s, method %s, %zu trials, seed %llu, tolerance %zu\n", r.model.c_str(),
              msnet::to_string(r.method).c_str(), r.trials, static_cast<unsigned long long>(r.base_seed),
              r.tolerance);
  const std::pair<const char*, const msnet::Histogram*> rows[] = {
      {"# change point", &r.cp_count_histogram},
      {"# exact detection", &r.exact_detection_histogram},
      {"# false edge detection", &r.false_edge_histogram},
  };
  for (const auto& [name, h] : rows) {
    std::printf("  %-24s", name);
    for (const auto& [k, v] : *h) std::printf(" %zu:%zu", k, v);
    std::printf("\n");
  }
  std::printf("  full recoveries          %zu/%zu\n", r.full_recoveries(), r.trials);
}

int cmd_study(const ModelFlags& model, const InferFlags& flags, std::size_t trials, std::uint64_t seed,
              std::optional<std::size_t> tolerance, const std::string& out, std::string json_out) {
  const msnet::InferenceConfig cfg = flags.config();
  const msnet::ModelFactory factory = model.factory();
  const msnet::GeneratorSpec probe = factory(seed);
  check_rdp_length(cfg, probe.T);
  cfg.validate(probe.N);
  if (trials < 1) throw UsageError("--trials must be at least 1");

  msnet::StudyOptions opts;
  opts.trials = trials;
  opts.base_seed = seed;
  opts.tolerance = tolerance;
  const msnet::TrialReport report = msnet::run_study(probe.name, factory, cfg, opts);
  if (json_out.empty() && !out.empty() && out != "-") {
    json_out = std::filesystem::path(out).replace_extension(".json").string();
  }
  if (!out.empty()) write_file(out, msnet::reports_to_csv({report}));
  if (!json_out.empty()) write_file(json_out, msnet::report_to_json(report));
  print_summary(report);
  if (!report.converged()) {
    std::cerr << "warning: group-lasso solver did not converge in every trial; report flagged\n";
    return kNoConvergence;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale dynamic network inference for multivariate time series"};
  app.require_subcommand(1);

  ModelFlags sim_model;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  CLI::App* sim = app.add_subcommand("simulate", "Write a benchmark series as CSV");
  sim_model.add(sim);
  sim->add_option("--seed", sim_seed, "Generator seed")->capture_default_str();
  sim->add_option("-o,--out", sim_out, "Output CSV (default standard output)");

  InferFlags inf_flags;
  std::string inf_input, inf_out, inf_norms, inf_pre = "none";
  std::vector<std::string> inf_targets;
  bool inf_all = false;
  CLI::App* inf = app.add_subcommand("infer", "Infer a dynamic network from a CSV series");
  inf->add_option("-i,--input", inf_input, "Input CSV")->required();
  auto* target_opt = inf->add_option("--target", inf_targets, "Target node label or 1-based index (repeatable)");
  inf->add_flag("--all", inf_all, "Infer every neighborhood (default)")->excludes(target_opt);
  inf_flags.add(inf);
  inf->add_option("--preprocess", inf_pre, "Input transform")
      ->check(CLI::IsMember({"none", "diff"}))
      ->capture_default_str();
  inf->add_option("-o,--out", inf_out, "Output JSON (default standard output)");
  inf->add_option("--emit-norms", inf_norms, "Also write per-time edge norms as CSV");

  ModelFlags st_model;
  InferFlags st_flags;
  std::size_t st_trials = 100;
  std::uint64_t st_seed = 1;
  std::optional<std::size_t> st_tol;
  std::string st_out, st_json;
  CLI::App* st = app.add_subcommand("study", "Repeat simulate + infer and tabulate detection counts");
  st_model.add(st);
  st_flags.add(st);
  st->add_option("--trials", st_trials, "Number of simulated datasets")->capture_default_str();
  st->add_option("--seed", st_seed, "Seed of the first trial; trial i uses seed + i")->capture_default_str();
  st->add_option("--tolerance", st_tol, "Exactness window (default 0 rdp, 5 rp)");
  st->add_option("-o,--out", st_out, "Report CSV");
  st->add_option("--json", st_json, "Report JSON (default: --out with .json extension)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_model, sim_seed, sim_out);
    if (*inf) return cmd_infer(inf_flags, inf_input, inf_all ? std::vector<std::string>{} : inf_targets, inf_pre,
                               inf_out, inf_norms);
    if (*st) return cmd_study(st_model, st_flags, st_trials, st_seed, st_tol, st_out, st_json);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const msnet::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
