#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "forge/config.hpp"
#include "forge/raster.hpp"

namespace forge::test {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "forge") {
    std::string tmpl = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline fs::path data_dir() { return FORGE_TEST_DATA_DIR; }

inline Raster random_raster(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h,
                            std::initializer_list<const char*> bands, double lo = 0.0, double hi = 10'000.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Raster r(w, h);
  for (const char* b : bands) {
    std::vector<float> px(static_cast<std::size_t>(w) * h);
    for (auto& v : px) v = static_cast<float>(u(rng));
    r.add_band(b, std::move(px));
  }
  return r;
}

/// Small, fast pipeline settings rooted at `root`.
inline PipelineConfig small_config(const fs::path& root, std::uint64_t n_points = 1, std::uint32_t months = 2) {
  PipelineConfig cfg;
  cfg.root = root.string();
  cfg.mask = (data_dir() / "water_mask_1deg.wmsk").string();
  cfg.sampler.n_points = n_points;
  cfg.sampler.seed = 7;
  cfg.sampler.scene_size_px = 120;
  cfg.download.months = months;
  cfg.extract.patch_px = 40;
  cfg.provider.workers = 2;
  cfg.clean.workers = 2;
  cfg.retry.initial_backoff = std::chrono::milliseconds(1);
  return cfg;
}

}  // namespace forge::test
