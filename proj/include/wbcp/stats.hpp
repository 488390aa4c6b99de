#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace wbcp {

// Standard normal quantile function. Rational approximation (Acklam)
// polished with one Halley step against erfc; absolute error is well below
// 1e-8 on (1e-8, 1 - 1e-8).
double normal_quantile(double p);

// Standard normal CDF via erfc.
double normal_cdf(double x);

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation (Lentz).
double reg_inc_beta(double a, double b, double x);

// CDF of Beta(a, b) at x.
double beta_cdf(double a, double b, double x);

// Two-sided Kolmogorov-Smirnov statistic of a sample against a continuous
// CDF. `sorted` must be ascending.
double ks_statistic(const std::vector<double>& sorted,
                    const std::function<double(double)>& cdf);

// Critical value c(level)/sqrt(n) of the two-sided KS test.
double ks_critical_value(std::size_t n, double level);

double pearson_correlation(const std::vector<double>& x,
                           const std::vector<double>& y);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

// Ordinary least squares y = a + b*x.
SlopeFit least_squares_slope(const std::vector<double>& x,
                             const std::vector<double>& y);

double mean(const std::vector<double>& v);

// Sample standard deviation (n-1 divisor); 0 for fewer than two values.
double sample_stddev(const std::vector<double>& v);

// Shortest round-trip decimal formatting (std::to_chars); the single number
// formatter used for every emitted file.
std::string format_double(double v);

}  // namespace wbcp
