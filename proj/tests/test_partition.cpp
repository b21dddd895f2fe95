#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "doctest.h"
#include "msnet/partition.hpp"
#include "msnet/simulate.hpp"
#include "oracles.hpp"

using namespace msnet;

namespace {

MultivariateSeries piecewise_series(std::mt19937_64& rng, std::size_t T, std::size_t N) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(N));
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = z(rng);
  std::uniform_int_distribution<std::size_t> cut(1, T);
  const std::size_t tau = cut(rng);
  for (std::size_t t = 2; t <= T; ++t) {
    const auto src = static_cast<Eigen::Index>(t <= tau ? 1 : N - 1);
    v(static_cast<Eigen::Index>(t - 1), 0) += 0.9 * v(static_cast<Eigen::Index>(t - 2), src);
  }
  return MultivariateSeries(v);
}

std::vector<std::size_t> change_points_of(const std::vector<Interval>& blocks, std::size_t T) {
  std::vector<std::size_t> out;
  for (const Interval& I : blocks) {
    if (I.end < T) out.push_back(I.end);
  }
  return out;
}

}  // namespace

TEST_SUITE("partition") {
  TEST_CASE("penalty defaults") {
    PenaltyConfig pc;
    CHECK(pc.c3_for(Method::RDP) == 0.5);
    CHECK(pc.c3_for(Method::RP) == 1.5);
    CHECK(pc.kappa_for(Method::RP, 1024, 3) == doctest::Approx(2.0 * 1.5 * std::log(1024.0) * 2.0));
    pc.per_node_count = false;
    CHECK(pc.kappa_for(Method::RDP, 1024, 7) == doctest::Approx(std::log(1024.0)));
    pc.kappa = 3.0;
    CHECK(pc.kappa_for(Method::RDP, 1024, 7) == 3.0);
    CHECK(pc.min_segment_for(2) == 3);
    CHECK(parse_method("rp") == Method::RP);
    CHECK(parse_method("RDP") == Method::RDP);
    CHECK_THROWS_AS(parse_method("dyadic"), std::invalid_argument);
  }

  TEST_CASE("rp search equals exhaustive enumeration") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> pickT(2, 12), pickN(2, 4), pickp(1, 2);
    std::uniform_real_distribution<double> pickk(0.1, 4.0);
    for (int k = 0; k < 40; ++k) {
      CAPTURE(k);
      const auto s = piecewise_series(rng, pickT(rng), pickN(rng));
      InferenceConfig cfg;
      cfg.method = Method::RP;
      cfg.lags = pickp(rng);
      cfg.penalty.min_segment = 1;
      cfg.penalty.kappa = pickk(rng);
      if (k % 3 == 0) cfg.score = BlockScore::Penalized;
      if (k % 3 == 1) cfg.score = BlockScore::Refit;
      const auto res = rp_search(s, 0, cfg);
      const auto ref = oracle::best_segmentation(s, 0, cfg, *cfg.penalty.kappa);
      CHECK(res.total_objective == ref.best);
      CHECK(res.change_points == change_points_of(ref.blocks, s.T()));
    }
  }

  TEST_CASE("rdp search equals exhaustive dyadic enumeration") {
    std::mt19937_64 rng(78);
    std::uniform_int_distribution<int> pickJ(1, 5);
    std::uniform_int_distribution<std::size_t> pickp(1, 3);
    std::uniform_real_distribution<double> pickk(0.0, 3.0);
    for (int k = 0; k < 30; ++k) {
      CAPTURE(k);
      const std::size_t T = std::size_t{1} << pickJ(rng);
      const auto s = piecewise_series(rng, T, 3);
      InferenceConfig cfg;
      cfg.lags = pickp(rng);
      cfg.penalty.kappa = pickk(rng);
      std::size_t leaf = 1;
      while (leaf <= cfg.lags + 1) leaf *= 2;
      const auto ref = oracle::best_dyadic(s, 0, cfg, *cfg.penalty.kappa, leaf);
      const auto res = rdp_search(s, 0, cfg);
      CHECK(res.total_objective == ref.best);
      CHECK(res.change_points == change_points_of(ref.blocks, T));
    }
  }

  TEST_CASE("rdp rejects lengths that are not powers of two") {
    std::mt19937_64 rng(1);
    const auto s = piecewise_series(rng, 100, 3);
    InferenceConfig cfg;
    CHECK_THROWS_WITH_AS(rdp_search(s, 0, cfg), doctest::Contains("power of two"), std::invalid_argument);
    cfg.method = Method::RP;
    CHECK_NOTHROW(partition_search(s, 0, cfg));
  }

  TEST_CASE("rdp on a series shorter than two leaves is one block") {
    std::mt19937_64 rng(2);
    const auto s = piecewise_series(rng, 4, 3);
    InferenceConfig cfg;
    const auto res = rdp_search(s, 0, cfg);
    CHECK(res.blocks.size() == 1);
    CHECK(res.change_points.empty());
  }

  TEST_CASE("rp honours the minimum segment length") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
      const auto s = piecewise_series(rng, 40, 3);
      InferenceConfig cfg;
      cfg.method = Method::RP;
      cfg.penalty.kappa = 0.0;
      cfg.penalty.min_segment = 6;
      const auto res = rp_search(s, 0, cfg);
      for (const BlockFit& b : res.blocks) CHECK(b.interval.length() >= 6);
    }
  }

  TEST_CASE("blocks tile the series and change points mark their ends") {
    std::mt19937_64 rng(4);
    for (Method m : {Method::RDP, Method::RP}) {
      const auto s = piecewise_series(rng, 64, 4);
      InferenceConfig cfg;
      cfg.method = m;
      cfg.penalty.kappa = 1.0;
      const auto res = partition_search(s, 0, cfg);
      std::size_t next = 1;
      for (const BlockFit& b : res.blocks) {
        CHECK(b.interval.start == next);
        next = b.interval.end + 1;
      }
      CHECK(next == 65);
      CHECK(res.change_points.size() + 1 == res.blocks.size());
      CHECK(res.total_objective == partition_objective(res.blocks, res.kappa));
      CHECK(res.converged());
    }
  }

  TEST_CASE("huge kappa never splits") {
    std::mt19937_64 rng(5);
    const auto s = piecewise_series(rng, 64, 3);
    for (Method m : {Method::RDP, Method::RP}) {
      InferenceConfig cfg;
      cfg.method = m;
      cfg.penalty.kappa = 1e12;
      CHECK(partition_search(s, 0, cfg).change_points.empty());
    }
  }

  TEST_CASE("search optimum is no worse than the true partition") {
    const auto spec = model_b(3);
    const auto s = simulate(spec);
    for (Method m : {Method::RDP, Method::RP}) {
      InferenceConfig cfg;
      cfg.method = m;
      const auto res = partition_search(s, 0, cfg);
      std::vector<BlockFit> truth;
      for (const Regime& r : spec.schedule) truth.push_back(block_score(s, 0, r.interval, cfg));
      CHECK(res.total_objective <= partition_objective(truth, res.kappa) + 1e-9);
      std::vector<BlockFit> whole{block_score(s, 0, {1, 1024}, cfg)};
      CHECK(res.total_objective <= partition_objective(whole, res.kappa) + 1e-9);
    }
  }

  TEST_CASE("block scores") {
    std::mt19937_64 rng(6);
    const auto s = piecewise_series(rng, 50, 4);
    InferenceConfig cfg;
    cfg.lambda_override = 0.05;
    const Interval I{5, 44};
    cfg.score = BlockScore::Penalized;
    const auto pen = block_score(s, 0, I, cfg);
    CHECK(pen.pl == doctest::Approx(40.0 * pen.objective));
    cfg.score = BlockScore::LassoRss;
    const auto rss = block_score(s, 0, I, cfg);
    CHECK(rss.pl == doctest::Approx(40.0 * (pen.objective - 0.05 * pen.coeffs->penalty_sum())));
    cfg.score = BlockScore::Refit;
    const auto refit = block_score(s, 0, I, cfg);
    CHECK(refit.pl <= rss.pl + 1e-9);

    const auto short_fit = block_score(s, 0, {7, 8}, cfg);
    CHECK_FALSE(short_fit.modeled());
    CHECK(short_fit.pl == doctest::Approx(s.at(7, 0) * s.at(7, 0) + s.at(8, 0) * s.at(8, 0)));
  }

  TEST_CASE("interval lambda scaling") {
    InferenceConfig cfg;
    const double base = lambda_alpha(1.5, cfg.lags, 4, cfg.alpha);
    CHECK(interval_lambda(cfg, 1.5, 100, 4) == doctest::Approx(base / 10.0));
    cfg.lambda_scale = LambdaScale::Literal;
    CHECK(interval_lambda(cfg, 1.5, 100, 4) == base);
    cfg.lambda_override = 0.3;
    CHECK(interval_lambda(cfg, 1.5, 100, 4) == 0.3);
  }

  TEST_CASE("sigma scope") {
    std::mt19937_64 rng(9);
    const auto s = piecewise_series(rng, 64, 3);
    InferenceConfig cfg;
    const Interval I{10, 40};
    const auto local = block_score(s, 0, I, cfg);
    const Eigen::VectorXd y = s.values().col(0).segment(9, 31);
    CHECK(local.sigma_hat == doctest::Approx(std::sqrt(y.squaredNorm() / 31.0)));
    cfg.sigma_scope = SigmaScope::Series;
    const auto global = block_score(s, 0, I, cfg);
    CHECK(global.sigma_hat == doctest::Approx(std::sqrt(s.values().col(0).squaredNorm() / 64.0)));
    CHECK(global.lambda_used ==
          doctest::Approx(lambda_alpha(global.sigma_hat, cfg.lags, 3, cfg.alpha) / std::sqrt(31.0)));
  }

  TEST_CASE("invalid configurations") {
    std::mt19937_64 rng(8);
    const auto s = piecewise_series(rng, 32, 3);
    InferenceConfig cfg;
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(partition_search(s, 0, cfg), std::invalid_argument);
    cfg = {};
    cfg.lags = 0;
    CHECK_THROWS_AS(partition_search(s, 0, cfg), std::invalid_argument);
    cfg = {};
    CHECK_THROWS_AS(partition_search(s, 3, cfg), std::invalid_argument);
    cfg.penalty.kappa = -1.0;
    CHECK_THROWS_AS(partition_search(s, 0, cfg), std::invalid_argument);
  }
}
