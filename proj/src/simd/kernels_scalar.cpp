#include <cmath>
#include <cstdint>
#include <limits>

#include "forge/simd/kernels.hpp"

namespace forge::simd {

namespace {

inline bool valid(float v, float nodata) { return !std::isnan(v) && v != nodata; }

Moments moments(std::span<const float> x, float nodata) {
  Moments m{0, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0.0};
  for (float v : x) {
    if (!valid(v, nodata)) continue;
    ++m.count;
    const double d = v;
    m.min = d < m.min ? d : m.min;
    m.max = d > m.max ? d : m.max;
    m.sum += d;
  }
  return m;
}

double centered_sumsq(std::span<const float> x, float nodata, double mean) {
  double acc = 0.0;
  for (float v : x) {
    if (!valid(v, nodata)) continue;
    const double d = static_cast<double>(v) - mean;
    acc += d * d;
  }
  return acc;
}

void affine(std::span<const float> in, std::span<float> out, float nodata, double offset,
            double divisor) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    const float v = in[i];
    out[i] = valid(v, nodata) ? static_cast<float>((static_cast<double>(v) - offset) / divisor) : v;
  }
}

void quantize(std::span<const float> in, std::span<std::uint8_t> out, float nodata,
              const QuantizeParams& p) {
  const double span = p.hi - p.lo;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const float v = in[i];
    if (!valid(v, nodata)) {
      out[i] = 0;
      continue;
    }
    double y = (static_cast<double>(v) - p.offset) / p.divisor;
    y = y > p.lo ? y : p.lo;  // matches maxpd/minpd operand order (NaN -> bound)
    y = y < p.hi ? y : p.hi;
    const double s = (y - p.lo) / span * 255.0;
    double r = std::trunc(s);
    if (s - r >= 0.5) r += 1.0;
    out[i] = static_cast<std::uint8_t>(r);
  }
}

inline std::int32_t cvtt(float v) {
  if (std::isnan(v) || v >= 2147483648.0f || v < -2147483648.0f) {
    return std::numeric_limits<std::int32_t>::min();
  }
  return static_cast<std::int32_t>(v);
}

std::uint64_t count_bits(std::span<const float> x, std::uint32_t mask) {
  std::uint64_t n = 0;
  for (float v : x) n += (static_cast<std::uint32_t>(cvtt(v)) & mask) != 0;
  return n;
}

void and_nodata(std::span<const float> x, float nodata, std::span<std::uint8_t> flags) {
  for (std::size_t i = 0; i < x.size(); ++i) flags[i] &= valid(x[i], nodata) ? 0 : 1;
}

void and_below(std::span<const float> x, float threshold, std::span<std::uint8_t> flags) {
  for (std::size_t i = 0; i < x.size(); ++i) flags[i] &= x[i] < threshold ? 1 : 0;
}

void and_above(std::span<const float> x, float threshold, std::span<std::uint8_t> flags) {
  for (std::size_t i = 0; i < x.size(); ++i) flags[i] &= x[i] > threshold ? 1 : 0;
}

std::uint64_t count_nonzero(std::span<const std::uint8_t> flags) {
  std::uint64_t n = 0;
  for (auto f : flags) n += f != 0;
  return n;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",    moments,   centered_sumsq, affine,
                                 quantize,    count_bits, and_nodata,    and_below,
                                 and_above,   count_nonzero};
  return table;
}

}  // namespace forge::simd
