#include "forge/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "forge/error.hpp"
#include "json.hpp"

#ifndef FORGE_DEFAULT_DATA_DIR
#define FORGE_DEFAULT_DATA_DIR "data"
#endif

namespace forge {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::ConfigError, key + " = '" + value + "': " + why);
}

template <class T>
T parse_num(const std::string& key, const std::string& v) {
  T out{};
  const char* b = v.data();
  const char* e = v.data() + v.size();
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    out = static_cast<T>(std::strtod(v.c_str(), &end));
    if (v.empty() || end != v.c_str() + v.size()) bad(key, v, "expected a number");
  } else {
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e) bad(key, v, "expected an integer");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "expected true or false");
}

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

struct Field {
  std::function<void(PipelineConfig&, const std::string& key, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <class T, class Member>
Field num(Member member) {
  return {[member](PipelineConfig& c, const std::string& k, const std::string& v) {
            std::invoke(member, c) = parse_num<T>(k, v);
          },
          [member](const PipelineConfig& cc) {
            auto& c = const_cast<PipelineConfig&>(cc);
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(std::invoke(member, c));
            } else {
              return std::to_string(std::invoke(member, c));
            }
          }};
}

Field str(std::function<std::string&(PipelineConfig&)> member) {
  return {[member](PipelineConfig& c, const std::string&, const std::string& v) { member(c) = v; },
          [member](const PipelineConfig& c) { return member(const_cast<PipelineConfig&>(c)); }};
}

// Ordered registry of every key; the order drives INI/JSON output.
const std::vector<std::pair<std::string, Field>>& registry() {
  static const std::vector<std::pair<std::string, Field>> fields = [] {
    std::vector<std::pair<std::string, Field>> f;
    f.emplace_back("sampler.n_points", num<std::uint64_t>([](PipelineConfig& c) -> auto& { return c.sampler.n_points; }));
    f.emplace_back("sampler.seed", num<std::uint64_t>([](PipelineConfig& c) -> auto& { return c.sampler.seed; }));
    f.emplace_back("sampler.lat_min", num<double>([](PipelineConfig& c) -> auto& { return c.sampler.lat_min; }));
    f.emplace_back("sampler.lat_max", num<double>([](PipelineConfig& c) -> auto& { return c.sampler.lat_max; }));
    f.emplace_back("sampler.lon_min", num<double>([](PipelineConfig& c) -> auto& { return c.sampler.lon_min; }));
    f.emplace_back("sampler.lon_max", num<double>([](PipelineConfig& c) -> auto& { return c.sampler.lon_max; }));
    f.emplace_back("sampler.max_rejections",
                   num<std::uint64_t>([](PipelineConfig& c) -> auto& { return c.sampler.max_rejections; }));
    f.emplace_back("sampler.scene_px", num<std::uint32_t>([](PipelineConfig& c) -> auto& { return c.sampler.scene_size_px; }));
    f.emplace_back("sampler.gsd_m", num<double>([](PipelineConfig& c) -> auto& { return c.sampler.gsd_m; }));
    f.emplace_back("sampler.mask", str([](PipelineConfig& c) -> auto& { return c.mask; }));

    f.emplace_back("download.provider", str([](PipelineConfig& c) -> auto& { return c.provider.provider; }));
    f.emplace_back("download.mock_seed", num<std::uint64_t>([](PipelineConfig& c) -> auto& { return c.provider.mock_seed; }));
    f.emplace_back("download.scenario", str([](PipelineConfig& c) -> auto& { return c.provider.scenario; }));
    f.emplace_back("download.from",
                   Field{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           const auto ym = YearMonth::parse(v);
                           if (!ym) bad(k, v, "expected YYYY-MM");
                           c.download.from = *ym;
                         },
                         [](const PipelineConfig& c) { return c.download.from.str(); }});
    f.emplace_back("download.months", num<std::uint32_t>([](PipelineConfig& c) -> auto& { return c.download.months; }));
    f.emplace_back("download.satellites",
                   Field{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           std::vector<Satellite> sats;
                           for (const auto& s : split_list(v)) {
                             const auto sat = parse_satellite(s);
                             if (!sat) bad(k, v, "unknown satellite " + s);
                             if (std::find(sats.begin(), sats.end(), *sat) == sats.end()) sats.push_back(*sat);
                           }
                           c.download.satellites = sats;
                         },
                         [](const PipelineConfig& c) {
                           std::vector<std::string> names;
                           for (auto s : c.download.satellites) names.push_back(s == Satellite::S1 ? "s1" : "s2");
                           return join(names);
                         }});
    f.emplace_back("download.candidates", num<std::uint32_t>([](PipelineConfig& c) -> auto& { return c.download.candidates; }));
    f.emplace_back("download.s1_bands",
                   Field{[](PipelineConfig& c, const std::string&, const std::string& v) { c.download.s1_bands = split_list(v); },
                         [](const PipelineConfig& c) { return join(c.download.s1_bands); }});
    f.emplace_back("download.s2_bands",
                   Field{[](PipelineConfig& c, const std::string&, const std::string& v) { c.download.s2_bands = split_list(v); },
                         [](const PipelineConfig& c) { return join(c.download.s2_bands); }});
    f.emplace_back("download.workers", num<unsigned>([](PipelineConfig& c) -> auto& { return c.provider.workers; }));
    f.emplace_back("download.timeout_s", num<std::uint32_t>([](PipelineConfig& c) -> auto& { return c.provider.timeout_s; }));
    f.emplace_back("download.max_attempts", num<std::uint32_t>([](PipelineConfig& c) -> auto& { return c.retry.max_attempts; }));
    f.emplace_back("download.backoff_ms",
                   Field{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           c.retry.initial_backoff = std::chrono::milliseconds(parse_num<std::int64_t>(k, v));
                         },
                         [](const PipelineConfig& c) { return std::to_string(c.retry.initial_backoff.count()); }});
    f.emplace_back("download.backoff_multiplier", num<double>([](PipelineConfig& c) -> auto& { return c.retry.multiplier; }));
    f.emplace_back("download.rate_limit", num<std::uint32_t>([](PipelineConfig& c) -> auto& { return c.retry.rate_limit; }));

    f.emplace_back("convert.mode",
                   Field{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           const auto m = convert::parse_mode(v);
                           if (!m) bad(k, v, "expected minmax, std, max or tiff");
                           c.convert.mode = *m;
                         },
                         [](const PipelineConfig& c) { return std::string(convert::to_string(c.convert.mode)); }});
    f.emplace_back("convert.stats_scope",
                   Field{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           if (v == "auto") {
                             c.convert.scope.reset();
                             return;
                           }
                           const auto s = convert::parse_scope(v);
                           if (!s) bad(k, v, "expected auto, image or band");
                           c.convert.scope = *s;
                         },
                         [](const PipelineConfig& c) {
                           return c.convert.scope ? std::string(convert::to_string(*c.convert.scope)) : "auto";
                         }});

    f.emplace_back("clean.missing_max", num<double>([](PipelineConfig& c) -> auto& { return c.clean.thresholds.missing_max; }));
    f.emplace_back("clean.cloud_max", num<double>([](PipelineConfig& c) -> auto& { return c.clean.thresholds.cloud_max; }));
    f.emplace_back("clean.black_threshold", num<double>([](PipelineConfig& c) -> auto& { return c.clean.black_threshold; }));
    f.emplace_back("clean.gray_min_area", num<double>([](PipelineConfig& c) -> auto& { return c.clean.gray_min_area; }));
    f.emplace_back("clean.bright_threshold", num<double>([](PipelineConfig& c) -> auto& { return c.clean.bright_threshold; }));
    f.emplace_back("clean.s1_full_scale", num<double>([](PipelineConfig& c) -> auto& { return c.clean.s1_full_scale; }));
    f.emplace_back("clean.s2_full_scale", num<double>([](PipelineConfig& c) -> auto& { return c.clean.s2_full_scale; }));
    f.emplace_back("clean.manual",
                   Field{[](PipelineConfig& c, const std::string& k, const std::string& v) { c.clean.manual = parse_bool(k, v); },
                         [](const PipelineConfig& c) { return std::string(c.clean.manual ? "true" : "false"); }});
    f.emplace_back("clean.workers", num<unsigned>([](PipelineConfig& c) -> auto& { return c.clean.workers; }));

    f.emplace_back("extract.patch", num<std::uint32_t>([](PipelineConfig& c) -> auto& { return c.extract.patch_px; }));
    f.emplace_back("extract.stride", num<std::uint32_t>([](PipelineConfig& c) -> auto& { return c.extract.stride_px; }));

    f.emplace_back("service.host", str([](PipelineConfig& c) -> auto& { return c.service.host; }));
    f.emplace_back("service.port", num<int>([](PipelineConfig& c) -> auto& { return c.service.port; }));
    f.emplace_back("service.ui_dir", str([](PipelineConfig& c) -> auto& { return c.service.ui_dir; }));

    f.emplace_back("output.root", str([](PipelineConfig& c) -> auto& { return c.root; }));
    return f;
  }();
  return fields;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : registry()) {
    if (k == key) return f;
  }
  throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
}

}  // namespace

PipelineConfig::PipelineConfig() { sampler.n_points = 10; }

void PipelineConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, value); }

std::string PipelineConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : registry()) out.push_back(name);
    return out;
  }();
  return k;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  try {
    sampler.validate();
    retry.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (sampler.scene_size_px == 0) fail("sampler.scene_px must be >= 1");
  if (!(sampler.gsd_m > 0)) fail("sampler.gsd_m must be positive");
  if (download.months == 0) fail("download.months must be >= 1");
  if (download.candidates == 0) fail("download.candidates must be >= 1");
  if (download.satellites.empty()) fail("download.satellites is empty");
  if (download.s1_bands.empty() || download.s2_bands.empty()) fail("download band lists must be non-empty");
  for (auto sat : download.satellites) {
    for (const auto& b : convert::render_bands(sat)) {
      const auto& bands = download.bands(sat);
      if (std::find(bands.begin(), bands.end(), b) == bands.end()) {
        fail("download." + std::string(sat == Satellite::S1 ? "s1" : "s2") + "_bands must include " + b);
      }
    }
  }
  if (provider.provider.empty()) fail("download.provider is empty");
  if (provider.provider != "mock" && provider.provider.rfind("http://", 0) != 0 &&
      provider.provider.rfind("https://", 0) != 0) {
    fail("download.provider must be 'mock' or an http(s) URL");
  }
  if (provider.workers == 0) fail("download.workers must be >= 1");
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) fail(std::string(name) + " must lie in [0, 1]");
  };
  unit(clean.thresholds.missing_max, "clean.missing_max");
  unit(clean.thresholds.cloud_max, "clean.cloud_max");
  unit(clean.black_threshold, "clean.black_threshold");
  unit(clean.gray_min_area, "clean.gray_min_area");
  unit(clean.bright_threshold, "clean.bright_threshold");
  if (!(clean.s1_full_scale > 0) || !(clean.s2_full_scale > 0)) fail("full scale values must be positive");
  if (extract.patch_px == 0) fail("extract.patch must be >= 1");
  if (extract.patch_px > sampler.scene_size_px) fail("extract.patch exceeds sampler.scene_px");
  if (service.port < 0 || service.port > 65535) fail("service.port out of range");
  if (root.empty()) fail("output.root is empty");
}

std::filesystem::path PipelineConfig::mask_path() const { return mask.empty() ? default_mask_path() : std::filesystem::path(mask); }

std::filesystem::path default_mask_path() {
  const char* env = std::getenv("FORGE_DATA_DIR");
  const std::filesystem::path dir = env && *env ? env : FORGE_DEFAULT_DATA_DIR;
  return dir / "water_mask_025deg.wmsk";
}

PipelineConfig parse_config(const std::string& ini_text, PipelineConfig base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorCode::ConfigError, "config key '" + section + "' outside a section");
    }
    const auto& keys = PipelineConfig::keys();
    if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return k.rfind(section + ".", 0) == 0; })) {
      throw Error(ErrorCode::ConfigError, "unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : body) base.set(section + "." + key, value.data());
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_ini(const PipelineConfig& cfg) {
  std::string out, section;
  for (const auto& key : PipelineConfig::keys()) {
    const auto dot = key.find('.');
    const auto sec = key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + cfg.get(key) + "\n";
  }
  return out;
}

std::string to_json(const PipelineConfig& cfg) {
  json j = json::object();
  for (const auto& key : PipelineConfig::keys()) {
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = cfg.get(key);
  }
  return j.dump();
}

void apply_json(PipelineConfig& cfg, const std::string& json_text) {
  const json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  PipelineConfig next = cfg;
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw Error(ErrorCode::ConfigError, "config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      std::string text;
      if (value.is_string()) {
        text = value.get<std::string>();
      } else if (value.is_boolean()) {
        text = value.get<bool>() ? "true" : "false";
      } else if (value.is_number_integer() || value.is_number_unsigned()) {
        text = value.dump();
      } else if (value.is_number_float()) {
        text = fmt_double(value.get<double>());
      } else {
        throw Error(ErrorCode::ConfigError, "config value for " + section + "." + key + " must be a scalar");
      }
      next.set(section + "." + key, text);
    }
  }
  cfg = std::move(next);
}

}  // namespace forge
