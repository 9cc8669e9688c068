#pragma once

// Branch-free sine/cosine over contiguous arrays so the loops auto-vectorize.
// Range reduction by pi/2 in three Cody-Waite parts, then minimax polynomials
// on [-pi/4, pi/4] (Cephes coefficients). Error stays within a few ulp of
// std::sin for |x| < 2^20; larger inputs fall back to the libm routine.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace groklens::fastmath {

namespace detail {

inline constexpr double kLargeArgument = 1048576.0;  // 2^20

inline void sincos_quadrant(const double* __restrict x, double* __restrict out, std::size_t n, std::uint64_t shift) {
  constexpr double two_over_pi = 0.63661977236758134308;
  constexpr double round_magic = 6755399441055744.0;  // 1.5 * 2^52
  constexpr double p1 = 1.57079625129699707031E0;
  constexpr double p2 = 7.54978941586159635335E-8;
  constexpr double p3 = 5.39030285815811905290E-15;
  constexpr double s0 = 1.58962301576546568060E-10, s1 = -2.50507477628578072866E-8,
                   s2 = 2.75573136213857245213E-6, s3 = -1.98412698295895385996E-4,
                   s4 = 8.33333333332211858878E-3, s5 = -1.66666666666666307295E-1;
  constexpr double c0 = -1.13585365213876817300E-11, c1 = 2.08757008419747316778E-9,
                   c2 = -2.75573141792967388112E-7, c3 = 2.48015872888517045348E-5,
                   c4 = -1.38888888888730564116E-3, c5 = 4.16666666666665929218E-2;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    // the low mantissa bits of t hold the nearest quadrant index
    const double t = v * two_over_pi + round_magic;
    const double y = t - round_magic;
    const double r = ((v - y * p1) - y * p2) - y * p3;
    const double r2 = r * r;
    const double sin_r = r + r * r2 * (((((s0 * r2 + s1) * r2 + s2) * r2 + s3) * r2 + s4) * r2 + s5);
    const double cos_r = 1.0 - 0.5 * r2 + r2 * r2 * (((((c0 * r2 + c1) * r2 + c2) * r2 + c3) * r2 + c4) * r2 + c5);
    const std::uint64_t q = std::bit_cast<std::uint64_t>(t) + shift;
    const std::uint64_t odd_mask = ~std::uint64_t{0} * (q & 1);
    const std::uint64_t sign_bit = ((q >> 1) & 1) << 63;
    const std::uint64_t picked =
        (std::bit_cast<std::uint64_t>(sin_r) & ~odd_mask) | (std::bit_cast<std::uint64_t>(cos_r) & odd_mask);
    out[i] = std::bit_cast<double>(picked ^ sign_bit);
  }
}

inline bool has_large(const double* x, std::size_t n) {
  std::int64_t large = 0;
  for (std::size_t i = 0; i < n; ++i) large += std::abs(x[i]) < kLargeArgument ? 0 : 1;
  return large != 0;
}

}  // namespace detail

/// out[i] = sin(x[i]); x and out must not overlap unless equal.
inline void sin(const double* x, double* out, std::size_t n) {
  if (detail::has_large(x, n)) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(x[i]);
    return;
  }
  detail::sincos_quadrant(x, out, n, 0);
}

/// out[i] = cos(x[i]); same aliasing rule as sin().
inline void cos(const double* x, double* out, std::size_t n) {
  if (detail::has_large(x, n)) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::cos(x[i]);
    return;
  }
  detail::sincos_quadrant(x, out, n, 1);
}

}  // namespace groklens::fastmath
