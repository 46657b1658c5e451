#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forge/catalog.hpp"

namespace forge::catalog {

/// How an injected missing region is filled.
enum class MissingFill { Nodata, Black, Gray };

/// One injected defect. Unset selectors match everything; `candidate`
/// selects the catalog product index within the month (index 0 is the
/// product the default ranking puts first).
struct MockDefect {
  std::optional<Satellite> satellite;
  std::optional<std::uint32_t> scene;
  std::optional<YearMonth> month;
  std::optional<std::uint32_t> candidate;

  double cloud_fraction = 0.0;
  double missing_fraction = 0.0;
  MissingFill fill = MissingFill::Nodata;
  bool absent = false;                   // month (or product) not in the catalog
  std::optional<double> cloud_pct_meta;  // overrides the catalog metadata

  bool matches(Satellite sat, std::optional<std::uint32_t> scene_id, YearMonth ym,
               std::optional<std::uint32_t> index) const;
};

struct MockScenario {
  std::uint32_t products_per_month = 3;
  std::vector<MockDefect> defects;

  /// {"products_per_month": 3, "defects": [{"satellite": "S2", "scene": 0,
  ///   "month": "2020-03", "candidate": 1, "cloud_fraction": 0.9,
  ///   "missing_fraction": 0.25, "fill": "nodata|black|gray",
  ///   "absent": false, "cloud_pct_meta": 12.5}]}
  static MockScenario from_json(const std::string& text);
  static MockScenario load(const std::filesystem::path& path);
};

/// Deterministic synthetic catalog. Pixel values are a hash-based field of
/// (seed, product_id, band, x, y); clouds are bright blobs mirrored in QA60
/// bit 10; missing regions are top-left rectangles.
class MockProvider : public Provider {
 public:
  static constexpr double kS1FullScale = 1.0;
  static constexpr double kS2FullScale = 10'000.0;

  MockProvider(std::uint64_t seed, MockScenario scenario);

  std::string name() const override { return "mock"; }
  std::vector<ProductDescriptor> search(const ProductQuery& q) override;
  Raster fetch(const ProductDescriptor& d, std::span<const std::string> bands,
               const geo::SceneFootprint& footprint) override;

  // Test instrumentation.
  void fail_next_searches(std::uint32_t n) { search_failures_ = n; }
  void fail_next_fetches(std::uint32_t n) { fetch_failures_ = n; }
  void set_latency(std::chrono::milliseconds l) { latency_ = l; }
  std::uint64_t fetch_calls() const { return fetch_calls_; }
  std::uint64_t search_calls() const { return search_calls_; }
  std::uint32_t max_in_flight() const { return max_in_flight_; }

 private:
  struct Parsed {
    Satellite satellite;
    std::optional<std::uint32_t> scene;
    YearMonth month;
    std::uint32_t index;
  };
  static std::optional<Parsed> parse_id(const std::string& id);

  std::vector<const MockDefect*> defects_for(const Parsed& p) const;
  void enter();
  void leave();

  std::uint64_t seed_;
  MockScenario scenario_;
  std::atomic<std::uint32_t> search_failures_{0};
  std::atomic<std::uint32_t> fetch_failures_{0};
  std::atomic<std::uint64_t> fetch_calls_{0};
  std::atomic<std::uint64_t> search_calls_{0};
  std::atomic<std::uint32_t> in_flight_{0};
  std::atomic<std::uint32_t> max_in_flight_{0};
  std::chrono::milliseconds latency_{0};
};

}  // namespace forge::catalog
