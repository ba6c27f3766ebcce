#pragma once

namespace screenkit {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper tail of the chi-square distribution, Q(df / 2, x / 2). Throws
// ValidationError for x < 0 or df < 1.
double chi2_sf(double x, int df);

// Standard normal CDF and its inverse (p in (0, 1)).
double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace screenkit
