// Compiled with -mavx2 (no FMA: products and sums must round exactly like
// the scalar reference).

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "forge/simd/kernels.hpp"

namespace forge::simd {

namespace {

inline bool valid(float v, float nodata) { return !std::isnan(v) && v != nodata; }

// All-ones lanes where x is neither NaN nor the sentinel.
inline __m256 valid_mask(__m256 x, __m256 nodata, bool nodata_is_nan) {
  const __m256 ord = _mm256_cmp_ps(x, x, _CMP_ORD_Q);
  if (nodata_is_nan) return ord;
  return _mm256_and_ps(ord, _mm256_cmp_ps(x, nodata, _CMP_NEQ_OQ));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

Moments moments(std::span<const float> x, float nodata) {
  const bool nan_nd = std::isnan(nodata);
  const __m256 nd = _mm256_set1_ps(nodata);
  const __m256 pinf = _mm256_set1_ps(std::numeric_limits<float>::infinity());
  const __m256 ninf = _mm256_set1_ps(-std::numeric_limits<float>::infinity());
  __m256 vmin = pinf, vmax = ninf;
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::uint64_t count = 0;
  std::size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    const __m256 v = _mm256_loadu_ps(x.data() + i);
    const __m256 m = valid_mask(v, nd, nan_nd);
    count += static_cast<unsigned>(std::popcount(static_cast<unsigned>(_mm256_movemask_ps(m))));
    vmin = _mm256_min_ps(vmin, _mm256_blendv_ps(pinf, v, m));
    vmax = _mm256_max_ps(vmax, _mm256_blendv_ps(ninf, v, m));
    const __m256 z = _mm256_and_ps(v, m);
    s0 = _mm256_add_pd(s0, _mm256_cvtps_pd(_mm256_castps256_ps128(z)));
    s1 = _mm256_add_pd(s1, _mm256_cvtps_pd(_mm256_extractf128_ps(z, 1)));
  }
  alignas(32) float mn[8], mx[8];
  _mm256_store_ps(mn, vmin);
  _mm256_store_ps(mx, vmax);
  Moments m{count, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            hsum(_mm256_add_pd(s0, s1))};
  for (int k = 0; k < 8; ++k) {
    m.min = mn[k] < m.min ? mn[k] : m.min;
    m.max = mx[k] > m.max ? mx[k] : m.max;
  }
  for (; i < x.size(); ++i) {
    const float v = x[i];
    if (!valid(v, nodata)) continue;
    ++m.count;
    m.min = v < m.min ? v : m.min;
    m.max = v > m.max ? v : m.max;
    m.sum += v;
  }
  return m;
}

double centered_sumsq(std::span<const float> x, float nodata, double mean) {
  const bool nan_nd = std::isnan(nodata);
  const __m256 nd = _mm256_set1_ps(nodata);
  const __m256d mu = _mm256_set1_pd(mean);
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    const __m256 v = _mm256_loadu_ps(x.data() + i);
    const __m256i m = _mm256_castps_si256(valid_mask(v, nd, nan_nd));
    const __m256d m0 = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(_mm256_castsi256_si128(m)));
    const __m256d m1 = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(_mm256_extracti128_si256(m, 1)));
    const __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(v)), mu);
    const __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)), mu);
    a0 = _mm256_add_pd(a0, _mm256_and_pd(_mm256_mul_pd(d0, d0), m0));
    a1 = _mm256_add_pd(a1, _mm256_and_pd(_mm256_mul_pd(d1, d1), m1));
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < x.size(); ++i) {
    if (!valid(x[i], nodata)) continue;
    const double d = static_cast<double>(x[i]) - mean;
    acc += d * d;
  }
  return acc;
}

void affine(std::span<const float> in, std::span<float> out, float nodata, double offset,
            double divisor) {
  const bool nan_nd = std::isnan(nodata);
  const __m256 nd = _mm256_set1_ps(nodata);
  const __m256d off = _mm256_set1_pd(offset);
  const __m256d div = _mm256_set1_pd(divisor);
  std::size_t i = 0;
  for (; i + 8 <= in.size(); i += 8) {
    const __m256 v = _mm256_loadu_ps(in.data() + i);
    const __m256 m = valid_mask(v, nd, nan_nd);
    const __m128 y0 = _mm256_cvtpd_ps(_mm256_div_pd(_mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(v)), off), div));
    const __m128 y1 = _mm256_cvtpd_ps(_mm256_div_pd(_mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)), off), div));
    const __m256 y = _mm256_insertf128_ps(_mm256_castps128_ps256(y0), y1, 1);
    _mm256_storeu_ps(out.data() + i, _mm256_blendv_ps(v, y, m));
  }
  for (; i < in.size(); ++i) {
    const float v = in[i];
    out[i] = valid(v, nodata) ? static_cast<float>((static_cast<double>(v) - offset) / divisor) : v;
  }
}

inline __m128i quantize4(__m128 v, __m256d off, __m256d div, __m256d lo, __m256d hi, __m256d span) {
  __m256d y = _mm256_div_pd(_mm256_sub_pd(_mm256_cvtps_pd(v), off), div);
  y = _mm256_max_pd(y, lo);
  y = _mm256_min_pd(y, hi);
  const __m256d s = _mm256_mul_pd(_mm256_div_pd(_mm256_sub_pd(y, lo), span), _mm256_set1_pd(255.0));
  __m256d r = _mm256_round_pd(s, _MM_FROUND_TO_ZERO | _MM_FROUND_NO_EXC);
  const __m256d up = _mm256_cmp_pd(_mm256_sub_pd(s, r), _mm256_set1_pd(0.5), _CMP_GE_OQ);
  r = _mm256_add_pd(r, _mm256_and_pd(up, _mm256_set1_pd(1.0)));
  return _mm256_cvttpd_epi32(r);
}

void quantize(std::span<const float> in, std::span<std::uint8_t> out, float nodata,
              const QuantizeParams& p) {
  const bool nan_nd = std::isnan(nodata);
  const __m256 nd = _mm256_set1_ps(nodata);
  const __m256d off = _mm256_set1_pd(p.offset);
  const __m256d div = _mm256_set1_pd(p.divisor);
  const __m256d lo = _mm256_set1_pd(p.lo);
  const __m256d hi = _mm256_set1_pd(p.hi);
  const __m256d span = _mm256_set1_pd(p.hi - p.lo);
  std::size_t i = 0;
  for (; i + 8 <= in.size(); i += 8) {
    const __m256 v = _mm256_loadu_ps(in.data() + i);
    const __m256i m = _mm256_castps_si256(valid_mask(v, nd, nan_nd));
    const __m128i q0 = quantize4(_mm256_castps256_ps128(v), off, div, lo, hi, span);
    const __m128i q1 = quantize4(_mm256_extractf128_ps(v, 1), off, div, lo, hi, span);
    __m256i q = _mm256_and_si256(_mm256_set_m128i(q1, q0), m);
    // 8 x i32 in [0,255] -> 8 bytes
    const __m128i w = _mm_packus_epi32(_mm256_castsi256_si128(q), _mm256_extracti128_si256(q, 1));
    const __m128i b = _mm_packus_epi16(w, w);
    _mm_storel_epi64(reinterpret_cast<__m128i*>(out.data() + i), b);
  }
  const double span_s = p.hi - p.lo;
  for (; i < in.size(); ++i) {
    const float v = in[i];
    if (!valid(v, nodata)) {
      out[i] = 0;
      continue;
    }
    double y = (static_cast<double>(v) - p.offset) / p.divisor;
    y = y > p.lo ? y : p.lo;
    y = y < p.hi ? y : p.hi;
    const double s = (y - p.lo) / span_s * 255.0;
    double r = std::trunc(s);
    if (s - r >= 0.5) r += 1.0;
    out[i] = static_cast<std::uint8_t>(r);
  }
}

std::uint64_t count_bits(std::span<const float> x, std::uint32_t mask) {
  const __m256i vm = _mm256_set1_epi32(static_cast<int>(mask));
  const __m256i zero = _mm256_setzero_si256();
  std::uint64_t n = 0;
  std::size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    const __m256i v = _mm256_cvttps_epi32(_mm256_loadu_ps(x.data() + i));
    const __m256i hit = _mm256_cmpeq_epi32(_mm256_and_si256(v, vm), zero);
    n += 8 - static_cast<unsigned>(std::popcount(static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(hit)))));
  }
  for (; i < x.size(); ++i) {
    const float v = x[i];
    const std::int32_t t = (std::isnan(v) || v >= 2147483648.0f || v < -2147483648.0f)
                               ? std::numeric_limits<std::int32_t>::min()
                               : static_cast<std::int32_t>(v);
    n += (static_cast<std::uint32_t>(t) & mask) != 0;
  }
  return n;
}

// flags[0..8) &= lane mask (all-ones lane -> 1)
inline void and_flags8(std::uint8_t* f, __m256 m) {
  const __m256i mi = _mm256_castps_si256(m);
  const __m128i w = _mm_packs_epi32(_mm256_castsi256_si128(mi), _mm256_extracti128_si256(mi, 1));
  const __m128i b = _mm_and_si128(_mm_packs_epi16(w, w), _mm_set1_epi8(1));
  const __m128i cur = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(f));
  _mm_storel_epi64(reinterpret_cast<__m128i*>(f), _mm_and_si128(cur, b));
}

void and_nodata(std::span<const float> x, float nodata, std::span<std::uint8_t> flags) {
  const bool nan_nd = std::isnan(nodata);
  const __m256 nd = _mm256_set1_ps(nodata);
  const __m256 ones = _mm256_castsi256_ps(_mm256_set1_epi32(-1));
  std::size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    const __m256 v = _mm256_loadu_ps(x.data() + i);
    and_flags8(flags.data() + i, _mm256_xor_ps(valid_mask(v, nd, nan_nd), ones));
  }
  for (; i < x.size(); ++i) flags[i] &= valid(x[i], nodata) ? 0 : 1;
}

void and_below(std::span<const float> x, float threshold, std::span<std::uint8_t> flags) {
  const __m256 t = _mm256_set1_ps(threshold);
  std::size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    and_flags8(flags.data() + i, _mm256_cmp_ps(_mm256_loadu_ps(x.data() + i), t, _CMP_LT_OQ));
  }
  for (; i < x.size(); ++i) flags[i] &= x[i] < threshold ? 1 : 0;
}

void and_above(std::span<const float> x, float threshold, std::span<std::uint8_t> flags) {
  const __m256 t = _mm256_set1_ps(threshold);
  std::size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    and_flags8(flags.data() + i, _mm256_cmp_ps(_mm256_loadu_ps(x.data() + i), t, _CMP_GT_OQ));
  }
  for (; i < x.size(); ++i) flags[i] &= x[i] > threshold ? 1 : 0;
}

std::uint64_t count_nonzero(std::span<const std::uint8_t> flags) {
  const __m256i zero = _mm256_setzero_si256();
  std::uint64_t n = 0;
  std::size_t i = 0;
  for (; i + 32 <= flags.size(); i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(flags.data() + i));
    const auto is_zero = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
    n += 32 - static_cast<unsigned>(std::popcount(is_zero));
  }
  for (; i < flags.size(); ++i) n += flags[i] != 0;
  return n;
}

}  // namespace

const KernelTable* avx2_kernels_impl() {
  static const KernelTable table{"avx2",     moments,    centered_sumsq, affine,
                                 quantize,   count_bits, and_nodata,     and_below,
                                 and_above,  count_nonzero};
  return &table;
}

}  // namespace forge::simd
