#include <cmath>
#include <limits>
#include <stdexcept>

#include "msnet/glasso.hpp"

namespace msnet {
namespace {

// Series expansion, valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma shape must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma shape must be positive");
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi2_cdf(double x, double dof) { return regularized_gamma_p(0.5 * dof, 0.5 * x); }

double chi2_quantile(double q, double dof) {
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("chi-square quantile needs 0 <= q < 1");
  if (!(dof >= 1.0)) throw std::invalid_argument("chi-square degrees of freedom must be at least 1");
  if (q == 0.0) return 0.0;

  // Upper quantiles are solved on the survival function, which keeps full
  // relative precision where 1 - q is tiny.
  const bool upper = q > 0.5;
  const double target = upper ? 1.0 - q : q;
  const double a = 0.5 * dof;
  auto g = [&](double x) {
    return upper ? target - regularized_gamma_q(a, 0.5 * x) : regularized_gamma_p(a, 0.5 * x) - target;
  };

  // bracket, then safeguarded Newton; g is increasing in x
  double lo = 0.0;
  double hi = std::max(1.0, dof);
  while (g(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  const double log_norm = std::lgamma(a) + a * std::log(2.0);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    const double f = g(x);
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;
    const double pdf = std::exp((a - 1.0) * std::log(x) - 0.5 * x - log_norm);
    double next = x - f / pdf;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, x) || hi - lo <= 1e-15 * std::max(1.0, x)) return next;
    x = next;
  }
  return x;
}

}  // namespace msnet
