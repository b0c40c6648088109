#pragma once

#include <span>
#include <vector>

namespace rrl {

// Standard normal density, CDF and log-CDF.  The CDF is computed through
// erfc (absolute error well below 1e-12); the log-CDF switches to the
// asymptotic expansion deep in the lower tail where erfc underflows.
double norm_pdf(double x);
double norm_cdf(double x);
double norm_logcdf(double x);

double digamma(double x);

// Regularized incomplete beta function I_x(a, b).
double inc_beta(double a, double b, double x);

// Upper tail probability of the F distribution with (d1, d2) dof.
double f_sf(double f, double d1, double d2);

// One-sample Kolmogorov-Smirnov test against U(0,1): returns (D, p).
struct KsResult {
    double d;
    double p;
};
KsResult ks_uniform(std::span<const double> xs);

// Solves A x = b in place for a small dense system (partial pivoting).
// Throws std::runtime_error on a singular matrix.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n);

double mean_of(std::span<const double> xs);
double sample_sd(std::span<const double> xs);

}  // namespace rrl
