#pragma once

namespace latentpath {

/// P(|Z| > |z|) for a standard normal Z.
double normal_two_sided_p(double z);

/// P(X > x) for a chi-square variable with df degrees of freedom.
double chi_square_upper_tail(double x, double df);

/// Standard normal quantile.
double normal_quantile(double p);

}  // namespace latentpath
