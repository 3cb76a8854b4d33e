#include "grem/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace grem {

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrt2Pi; }

double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double norm_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double norm_quantile(double u) {
  if (u < 0.5) return -kSqrt2 * boost::math::erfc_inv(2.0 * u);
  return kSqrt2 * boost::math::erfc_inv(2.0 * (1.0 - u));
}

}  // namespace grem
