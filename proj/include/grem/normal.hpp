#pragma once

namespace grem {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrt3 = 1.73205080756887729353;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

double norm_pdf(double z);
// P(N(0,1) <= z)
double norm_cdf(double z);
// P(N(0,1) > z), accurate in the upper tail.
double norm_sf(double z);
// Inverse of norm_cdf on (0,1); uses the upper tail for u > 1/2.
double norm_quantile(double u);

}  // namespace grem
