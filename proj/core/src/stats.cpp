#include "sfa/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sfa {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrtPi = 0.56418958354775628695;
}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrtTwoPi; }

double norm_logpdf(double x) { return -0.5 * x * x - 0.5 * kLogTwoPi; }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x >= 0.0) {
    if (x <= 20.0) {
      // exp(x^2) stays below 5e173 and erfc(x) above 5e-176 here, so the
      // direct product neither overflows nor hits subnormals.
      return std::exp(x * x) * std::erfc(x);
    }
    // Asymptotic expansion erfcx(x) ~ 1/(x sqrt(pi)) * sum (-1)^k (2k-1)!!/(2x^2)^k.
    const double z = 0.5 / (x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
      term *= -z * static_cast<double>(2 * k - 1);
      sum += term;
      if (std::fabs(term) < 1e-18 * sum) break;
    }
    return kInvSqrtPi * sum / x;
  }
  // erfcx(-x) = 2 exp(x^2) - erfcx(x); overflows (correctly, to +inf) for
  // arguments below about -26.6.
  const double e = std::exp(x * x);
  if (std::isinf(e)) return e;
  return 2.0 * e - erfcx(-x);
}

double log_norm_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x > -1.0) {
    // Phi(x) >= Phi(-1) ~ 0.159: no cancellation concerns.
    return std::log(norm_cdf(x));
  }
  // Phi(x) = 0.5 * erfcx(-x/sqrt(2)) * exp(-x^2/2)
  return std::log(0.5 * erfcx(-x * kInvSqrt2)) - 0.5 * x * x;
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("norm_quantile: p outside [0,1]");
  }
  // Acklam's rational approximation, then one Halley refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = norm_cdf(x) - p;
  const double u = e * kSqrtTwoPi * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // Series representation.
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Continued fraction for Q(a,x) = 1 - P(a,x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

double chi2_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(double p, double df) {
  if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("chi2_quantile: p outside [0,1)");
  if (p == 0.0) return 0.0;
  // Bracket then bisect; a handful of calls per test, so robustness wins.
  double lo = 0.0;
  double hi = df + 10.0;
  while (chi2_cdf(hi, df) < p) {
    hi *= 2.0;
    if (hi > 1e10) break;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, df) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-(std::fabs(a - b))));
}

}  // namespace sfa
