#include <cmath>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "msnet/glasso.hpp"
#include "oracles.hpp"

using namespace msnet;

TEST_SUITE("glasso") {
  TEST_CASE("matches the proximal-gradient oracle and satisfies KKT") {
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 30; ++k) {
      CAPTURE(k);
      const auto inst = oracle::random_instance(rng);
      const auto fit = fit_group_lasso(inst.y, inst.X, inst.lambda);
      CHECK(fit.converged);
      CHECK(fit.kkt_violation <= 1e-6);
      CHECK(kkt_check(fit.coeffs, inst.y, inst.X, inst.lambda) <= 1e-6);
      const Eigen::VectorXd ref = oracle::proximal_gradient(inst.y, inst.X.matrix, inst.X.lags, inst.lambda);
      const double f_ref = oracle::objective(inst.y, inst.X.matrix, ref, inst.X.lags, inst.lambda);
      const double f = oracle::objective(inst.y, inst.X.matrix, fit.coeffs.theta(), inst.X.lags, inst.lambda);
      CHECK(f == doctest::Approx(f_ref).epsilon(1e-8));
      CHECK(fit.objective == doctest::Approx(f).epsilon(1e-10));
      CHECK(f <= f_ref * (1.0 + 1e-8));
    }
  }

  TEST_CASE("inactive groups are exactly zero and active groups are not") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 20; ++k) {
      const auto inst = oracle::random_instance(rng);
      const auto fit = fit_group_lasso(inst.y, inst.X, inst.lambda);
      const auto gram = make_gram(inst.y, inst.X);
      const Eigen::VectorXd resid = inst.y - inst.X.matrix * fit.coeffs.theta();
      const double n = static_cast<double>(inst.y.size());
      for (std::size_t g = 0; g < fit.coeffs.groups(); ++g) {
        const auto Xg = inst.X.matrix.middleCols(static_cast<Eigen::Index>(g * inst.X.lags),
                                                 static_cast<Eigen::Index>(inst.X.lags));
        const double grad = (2.0 / n * Xg.transpose() * resid).norm();
        if (!fit.coeffs.active(g)) {
          CHECK(fit.coeffs.group(g).norm() == 0.0);
          CHECK(grad <= inst.lambda + 1e-6);
        } else {
          CHECK(grad == doctest::Approx(inst.lambda).epsilon(1e-5));
        }
      }
      (void)gram;
    }
  }

  TEST_CASE("lambda at the inactivity bound zeroes every group") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 10; ++k) {
      const auto inst = oracle::random_instance(rng);
      const double bound = inactivity_bound(make_gram(inst.y, inst.X));
      const auto fit = fit_group_lasso(inst.y, inst.X, bound * (1.0 + 1e-12));
      CHECK(fit.coeffs.penalty_sum() == 0.0);
      CHECK(fit.objective == doctest::Approx(inst.y.squaredNorm() / static_cast<double>(inst.y.size())));
      const auto below = fit_group_lasso(inst.y, inst.X, bound * 0.95);
      CHECK(below.coeffs.penalty_sum() > 0.0);
    }
  }

  TEST_CASE("lambda zero gives least squares") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
      const auto inst = oracle::random_instance(rng);
      const auto fit = fit_group_lasso(inst.y, inst.X, 0.0);
      const Eigen::VectorXd ols = inst.X.matrix.colPivHouseholderQr().solve(inst.y);
      const double rss_ols = (inst.y - inst.X.matrix * ols).squaredNorm();
      const double rss = (inst.y - inst.X.matrix * fit.coeffs.theta()).squaredNorm();
      CHECK(rss == doctest::Approx(rss_ols).epsilon(1e-8));
    }
  }

  TEST_CASE("objective is non-increasing across sweeps") {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 20; ++k) {
      const auto inst = oracle::random_instance(rng);
      GroupLassoSolver solver;
      std::vector<double> trace;
      solver.solve(make_gram(inst.y, inst.X), inst.lambda, {}, nullptr, &trace);
      REQUIRE(!trace.empty());
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-12) + 1e-15);
    }
  }

  TEST_CASE("warm start reaches the same optimum") {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 10; ++k) {
      const auto inst = oracle::random_instance(rng);
      const auto cold = fit_group_lasso(inst.y, inst.X, inst.lambda);
      const auto other = fit_group_lasso(inst.y, inst.X, inst.lambda * 0.5);
      const auto warm = fit_group_lasso(inst.y, inst.X, inst.lambda, {}, &other.coeffs);
      CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
    }
  }

  TEST_CASE("orthogonal design reduces to group soft thresholding") {
    // X'X = n I: theta_g = (1 - n lambda / (2 ||b_g||))_+ b_g / n, b = X'y
    std::mt19937_64 rng(29);
    std::normal_distribution<double> z;
    const std::size_t n = 50, p = 3, groups = 6;
    GramSystem gram;
    gram.n = n;
    gram.group_size = p;
    gram.xtx = Eigen::MatrixXd::Identity(groups * p, groups * p) * static_cast<double>(n);
    gram.xty.resize(groups * p);
    for (Eigen::Index i = 0; i < gram.xty.size(); ++i) gram.xty[i] = 10.0 * z(rng);
    gram.yty = gram.xty.squaredNorm() / static_cast<double>(n) + 7.0;
    std::size_t last = groups + 1;
    for (double lam : {0.0, 0.1, 0.3, 0.6, 1.0, 1.5, 3.0}) {
      GroupLassoSolver solver;
      const auto fit = solver.solve(gram, lam, {});
      std::size_t active = 0;
      for (std::size_t g = 0; g < groups; ++g) {
        const auto bg = gram.xty.segment(static_cast<Eigen::Index>(g * p), static_cast<Eigen::Index>(p));
        const double shrink = std::max(0.0, 1.0 - static_cast<double>(n) * lam / (2.0 * bg.norm()));
        const Eigen::VectorXd want = shrink * bg / static_cast<double>(n);
        CHECK((fit.coeffs.group(g) - want).norm() <= 1e-12);
        active += fit.coeffs.active(g);
      }
      CHECK(active <= last);
      last = active;
    }
  }

  TEST_CASE("solver is deterministic") {
    std::mt19937_64 rng(17);
    const auto inst = oracle::random_instance(rng);
    const auto a = fit_group_lasso(inst.y, inst.X, inst.lambda);
    const auto b = fit_group_lasso(inst.y, inst.X, inst.lambda);
    CHECK(a.coeffs.theta() == b.coeffs.theta());
    CHECK(a.objective == b.objective);
  }

  TEST_CASE("invalid solver input") {
    std::mt19937_64 rng(19);
    const auto inst = oracle::random_instance(rng);
    CHECK_THROWS_AS(fit_group_lasso(inst.y, inst.X, -1.0), std::invalid_argument);
    SolverConfig bad;
    bad.tol = 0.0;
    CHECK_THROWS_AS(fit_group_lasso(inst.y, inst.X, 0.1, bad), std::invalid_argument);
    const Eigen::VectorXd short_y = inst.y.head(inst.y.size() - 1);
    CHECK_THROWS_AS(fit_group_lasso(short_y, inst.X, 0.1), std::invalid_argument);
  }

  TEST_CASE("symmetric eigen decomposition reconstructs the matrix") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> z;
    for (std::size_t n : {1u, 2u, 3u, 5u}) {
      Eigen::MatrixXd B(n, n);
      for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = z(rng);
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> A = B * B.transpose();
      std::vector<double> w(n), V(n * n), work(n * n);
      symmetric_eigen(A.data(), n, w.data(), V.data(), work.data());
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Vm(V.data(), n, n);
      Eigen::Map<Eigen::VectorXd> wm(w.data(), n);
      const Eigen::MatrixXd back = Vm * wm.asDiagonal() * Vm.transpose();
      CHECK((back - Eigen::MatrixXd(A)).norm() <= 1e-10 * std::max(1.0, A.norm()));
    }
  }

  TEST_CASE("chi-square quantiles agree with boost") {
    for (double dof : {1.0, 2.0, 3.0, 5.0, 7.0, 14.0}) {
      boost::math::chi_squared dist(dof);
      for (double q : {1e-6, 0.01, 0.3, 0.5, 0.95, 0.99, 0.9983333, 1.0 - 1e-9}) {
        CAPTURE(dof);
        CAPTURE(q);
        const double want = boost::math::quantile(dist, q);
        CHECK(chi2_quantile(q, dof) == doctest::Approx(want).epsilon(1e-10));
        CHECK(chi2_cdf(want, dof) == doctest::Approx(q).epsilon(1e-12));
      }
    }
    CHECK(chi2_quantile(0.0, 2.0) == 0.0);
    CHECK_THROWS_AS(chi2_quantile(1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(chi2_quantile(-0.1, 2.0), std::invalid_argument);
  }

  TEST_CASE("closed forms of the calibrated lambda") {
    // chi-square(2) has quantile -2 ln(1 - q)
    CHECK(std::abs(chi2_quantile(0.95, 2) + 2.0 * std::log(0.05)) <= 1e-10);
    CHECK(std::abs(lambda_alpha(1.0, 2, 6, 0.05) - 2.0 * std::sqrt(-4.0 * std::log(0.05 / 30.0))) <= 1e-6);
    CHECK(lambda_alpha(1.0, 2, 6, 0.05) == doctest::Approx(10.1168).epsilon(1e-5));
    CHECK(lambda_alpha(1.0, 1, 2, 0.05) == doctest::Approx(2.0 * std::sqrt(5.0238861873)).epsilon(1e-9));
    CHECK(lambda_alpha(2.0, 2, 6, 0.05) == doctest::Approx(2.0 * lambda_alpha(1.0, 2, 6, 0.05)));
    CHECK(lambda_alpha(0.0, 2, 6, 0.05) == 0.0);
  }

  TEST_CASE("calibrated lambda grows with N and shrinks with alpha") {
    double prev = 0.0;
    for (std::size_t N = 2; N <= 30; ++N) {
      const double l = lambda_alpha(1.0, 2, N, 0.05);
      CHECK(l > prev);
      prev = l;
    }
    CHECK(lambda_alpha(1.0, 2, 5, 0.01) > lambda_alpha(1.0, 2, 5, 0.1));
    CHECK_THROWS_AS(lambda_alpha(1.0, 2, 5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(lambda_alpha(1.0, 2, 1, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(lambda_alpha(1.0, 0, 5, 0.05), std::invalid_argument);
  }
}
