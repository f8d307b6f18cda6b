#pragma once

namespace abpipe::stats {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
///
/// Evaluated with the modified Lentz continued fraction; the x^a (1-x)^b / B(a, b)
/// prefactor uses a Stirling-corrected log-beta so the result keeps full relative
/// precision for the large shape parameters that long-running tests produce.
double incomplete_beta(double a, double b, double x);

/// Student-t distribution with `df` > 0 (non-integer allowed).
double student_t_cdf(double t, double df);
/// P(T >= t), computed without cancellation for large t.
double student_t_upper_tail(double t, double df);

double normal_cdf(double z);
double normal_upper_tail(double z);

}  // namespace abpipe::stats
