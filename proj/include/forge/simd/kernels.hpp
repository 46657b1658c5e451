#pragma once

// Raster inner loops. Every kernel has a scalar reference implementation;
// vector variants must produce bit-identical results except for the
// floating-point sums in `moments`/`centered_sumsq`, whose association
// order differs (tests bound the difference).

#include <cstdint>
#include <span>
#include <string_view>

namespace forge::simd {

struct Moments {
  std::uint64_t count = 0;  // valid (non-nodata) samples
  double min = 0.0;         // +inf / -inf when count == 0
  double max = 0.0;
  double sum = 0.0;
};

/// y = (x - offset) / divisor, clamped to [lo, hi], mapped to [0,1] via
/// (y - lo) / (hi - lo), scaled by 255 and rounded half away from zero.
struct QuantizeParams {
  double offset = 0.0;
  double divisor = 1.0;
  double lo = 0.0;
  double hi = 1.0;
};

struct KernelTable {
  std::string_view name;

  /// A sample is valid unless NaN or equal to `nodata`.
  Moments (*moments)(std::span<const float> x, float nodata);
  double (*centered_sumsq)(std::span<const float> x, float nodata, double mean);

  /// out = float((double(x) - offset) / divisor); nodata samples copied through.
  void (*affine)(std::span<const float> in, std::span<float> out, float nodata, double offset,
                 double divisor);

  /// Fused normalize + quantize; nodata samples map to 0.
  void (*quantize)(std::span<const float> in, std::span<std::uint8_t> out, float nodata,
                   const QuantizeParams& p);

  /// Samples whose truncated int32 value has any bit of `mask` set
  /// (NaN and out-of-range convert to INT32_MIN, as cvttps does).
  std::uint64_t (*count_bits)(std::span<const float> x, std::uint32_t mask);

  /// flags[i] &= predicate(x[i])
  void (*and_nodata)(std::span<const float> x, float nodata, std::span<std::uint8_t> flags);
  void (*and_below)(std::span<const float> x, float threshold, std::span<std::uint8_t> flags);
  void (*and_above)(std::span<const float> x, float threshold, std::span<std::uint8_t> flags);

  std::uint64_t (*count_nonzero)(std::span<const std::uint8_t> flags);
};

const KernelTable& scalar_kernels();
/// nullptr when not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Selected once: AVX2 when available, overridable with FORGE_SIMD=scalar.
const KernelTable& active();
/// Force a variant by name ("scalar", "avx2"); returns false if unavailable.
bool select(std::string_view name);

}  // namespace forge::simd
