#pragma once

#include <functional>
#include <span>

namespace dceseg {

// Regularized lower incomplete gamma P(a, x) = gamma(a,x)/Gamma(a).
double gamma_p(double a, double x);

// Central chi-squared CDF with (possibly fractional) dof.
double chisq_cdf(double x, double dof);

// Standard normal CDF.
double normal_cdf(double x);

// Kolmogorov-Smirnov distance between a sample and a reference CDF.
// `sorted` must be ascending. Returns sup_i max(F(x_i)-(i)/n, (i+1)/n-F(x_i)).
double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf);

// Asymptotic Kolmogorov distribution: P(sqrt(n)*D > t).
double kolmogorov_sf(double t);

// Approximate p-value of a KS distance for sample size n.
double ks_pvalue(double d, std::size_t n);

}  // namespace dceseg
