#pragma once

// Scalar distribution functions used throughout the estimator.  Everything
// here is tail-safe: log_norm_cdf stays accurate far beyond the point where
// Phi underflows (|x| ~ 38), which the likelihood needs for large residuals.

namespace sfa {

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kSqrtTwoPi = 2.5066282746310005024;

double norm_pdf(double x);
double norm_logpdf(double x);
double norm_cdf(double x);

// exp(x^2) * erfc(x), valid on the whole real line (overflows for x < -26.6).
double erfcx(double x);

// log Phi(x), accurate for all finite x (asymptotic regime handled via erfcx).
double log_norm_cdf(double x);

// Inverse of norm_cdf; p in (0,1).
double norm_quantile(double p);

// Regularized lower incomplete gamma P(a,x), a > 0, x >= 0.
double gamma_p(double a, double x);

double chi2_cdf(double x, double df);
double chi2_quantile(double p, double df);

// log(exp(a) + exp(b)) keyed on the larger argument; -inf inputs allowed.
double log_sum_exp(double a, double b);

}  // namespace sfa
