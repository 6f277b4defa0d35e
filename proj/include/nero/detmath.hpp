#pragma once

#include <bit>
#include <cstdint>

namespace nero::detmath {

// Fixed software log/cos used by the Gaussian sampler. Every operation
// below is exactly-rounded IEEE double arithmetic with fixed constants,
// so results are bit-identical across platforms and compilers (unlike
// libm, whose transcendentals may differ in the last ulp). Accuracy is
// a few ulps, which is all the sampler needs.

/// Natural log for finite x > 0. No domain checks beyond that.
inline double det_log(double x) {
  // Decompose x = m * 2^e with m in [2^-0.5, 2^0.5).
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  int e = static_cast<int>((bits >> 52) & 0x7FF);
  if (e == 0) {  // subnormal: scale up by 2^54
    bits = std::bit_cast<std::uint64_t>(x * 0x1.0p54);
    e = static_cast<int>((bits >> 52) & 0x7FF) - 54;
  }
  e -= 1023;
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) |
                                   0x3FF0000000000000ULL);  // [1, 2)
  if (m > 1.4142135623730951) {
    m *= 0.5;
    e += 1;
  }
  // log(m) = 2 atanh(s), s = (m-1)/(m+1), |s| <= 0.1716.
  const double s = (m - 1.0) / (m + 1.0);
  const double z = s * s;
  double p = 1.0 / 27.0;
  p = p * z + 1.0 / 25.0;
  p = p * z + 1.0 / 23.0;
  p = p * z + 1.0 / 21.0;
  p = p * z + 1.0 / 19.0;
  p = p * z + 1.0 / 17.0;
  p = p * z + 1.0 / 15.0;
  p = p * z + 1.0 / 13.0;
  p = p * z + 1.0 / 11.0;
  p = p * z + 1.0 / 9.0;
  p = p * z + 1.0 / 7.0;
  p = p * z + 1.0 / 5.0;
  p = p * z + 1.0 / 3.0;
  p = p * z + 1.0;
  // ln2 split for an exact-ish e*ln2 contribution.
  const double ln2_hi = 0x1.62e42fefa38p-1;
  const double ln2_lo = 0x1.ef35793c7673p-45;
  const double de = static_cast<double>(e);
  return de * ln2_hi + (2.0 * s * p + de * ln2_lo);
}

namespace detail {
/// sin on [-pi/4, pi/4] by Taylor series (terms through x^17).
inline double sin_poly(double x) {
  const double z = x * x;
  double p = -1.0 / 355687428096000.0;        // -1/17!
  p = p * z + 1.0 / 1307674368000.0;          //  1/15!
  p = p * z - 1.0 / 6227020800.0;             // -1/13!
  p = p * z + 1.0 / 39916800.0;               //  1/11!
  p = p * z - 1.0 / 362880.0;                 // -1/9!
  p = p * z + 1.0 / 5040.0;                   //  1/7!
  p = p * z - 1.0 / 120.0;                    // -1/5!
  p = p * z + 1.0 / 6.0;                      //  1/3!
  return x - x * z * p;
}

/// cos on [-pi/4, pi/4] by Taylor series (terms through x^18).
inline double cos_poly(double x) {
  const double z = x * x;
  double p = 1.0 / 6402373705728000.0;        //  1/18!
  p = p * z - 1.0 / 20922789888000.0;         // -1/16!
  p = p * z + 1.0 / 87178291200.0;            //  1/14!
  p = p * z - 1.0 / 479001600.0;              // -1/12!
  p = p * z + 1.0 / 3628800.0;                //  1/10!
  p = p * z - 1.0 / 40320.0;                  // -1/8!
  p = p * z + 1.0 / 720.0;                    //  1/6!
  p = p * z - 1.0 / 24.0;                     // -1/4!
  p = p * z + 1.0 / 2.0;                      //  1/2!
  return 1.0 - z * p;
}
}  // namespace detail

/// Cosine for x in [0, 4*pi). Cody-Waite reduction by pi/2 quadrants.
inline double det_cos(double x) {
  const double pio2_hi = 0x1.921fb54442d18p+0;
  const double pio2_lo = 0x1.1a62633145c07p-54;
  const double inv_pio2 = 0x1.45f306dc9c883p-1;
  const int q = static_cast<int>(x * inv_pio2 + 0.5);
  const double dq = static_cast<double>(q);
  double r = (x - dq * pio2_hi) - dq * pio2_lo;
  switch (q & 3) {
    case 0: return detail::cos_poly(r);
    case 1: return -detail::sin_poly(r);
    case 2: return -detail::cos_poly(r);
    default: return detail::sin_poly(r);
  }
}

}  // namespace nero::detmath
