#pragma once

namespace claimcomb {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation (modified Lentz), accurate to ~1e-14 for moderate a, b.
double incomplete_beta(double a, double b, double x);

// CDF of Student's t with nu degrees of freedom.
double student_t_cdf(double t, double nu);

// Two-sided p-value for an observed t statistic.
double student_t_two_sided_p(double t, double nu);

} // namespace claimcomb
