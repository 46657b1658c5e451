#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/catalog.hpp"
#include "forge/cleaner.hpp"
#include "forge/converter.hpp"
#include "forge/geo.hpp"

namespace forge {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string ui_dir;  // static files served at /, empty = none
};

struct ExtractConfig {
  std::uint32_t patch_px = 250;
  std::uint32_t stride_px = 0;  // 0 = same as patch_px

  std::uint32_t stride() const { return stride_px == 0 ? patch_px : stride_px; }
};

struct ProviderConfig {
  std::string provider = "mock";  // "mock" or an http(s) base URL
  std::uint64_t mock_seed = 0;
  std::string scenario;           // mock scenario JSON file, empty = healthy catalog
  unsigned workers = 4;
  std::uint32_t timeout_s = 30;
};

/// Every tunable of the pipeline. Keys are addressed as "section.key" in
/// the INI file, CLI overrides and the HTTP API.
struct PipelineConfig {
  geo::SamplerConfig sampler;
  std::string mask;  // water mask path, empty = bundled mask
  catalog::DownloadConfig download;
  catalog::RetryPolicy retry;
  ProviderConfig provider;
  convert::ConvertOptions convert;
  clean::CleanerConfig clean;
  ExtractConfig extract;
  ServiceConfig service;
  std::string root = "dataset";

  PipelineConfig();

  /// Throws Error(ConfigError) for an unknown key or unparsable value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Throws Error(ConfigError) describing the first invalid field.
  void validate() const;

  std::filesystem::path mask_path() const;
};

/// INI text: `[section]` headers, `key = value` lines, `#`/`;` comments.
/// Values not present keep their defaults.
PipelineConfig parse_config(const std::string& ini_text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
std::string to_ini(const PipelineConfig& cfg);

/// {"section": {"key": value, ...}, ...}; values are strings, numbers or
/// booleans. apply_json accepts the same shape with any subset of keys.
std::string to_json(const PipelineConfig& cfg);
void apply_json(PipelineConfig& cfg, const std::string& json_text);

/// Bundled mask shipped with the sources, overridable via FORGE_DATA_DIR.
std::filesystem::path default_mask_path();

}  // namespace forge
