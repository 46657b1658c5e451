#include "forge/store.hpp"

#include <charconv>
#include <cstdio>
#include <mutex>
#include "json.hpp"

#include "forge/error.hpp"
#include "forge/io.hpp"

namespace forge::store {

using nlohmann::json;

namespace {

bool parse_u32(std::string_view s, std::uint32_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

std::string scene_dir(std::uint32_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04u", id);
  return buf;
}

}  // namespace

std::string layout_relpath(const LayoutKey& k) {
  std::string name;
  switch (k.kind) {
    case Kind::Raw: name = "raw_" + std::to_string(k.rank) + ".tif"; break;
    case Kind::Converted: name = "img_" + std::to_string(k.rank) + ".png"; break;
    case Kind::ConvertedTiff: name = "img_" + std::to_string(k.rank) + ".tif"; break;
  }
  return std::string(folder_name(k.satellite)) + "/" + scene_dir(k.scene_id) + "/" + k.month.str() +
         "/" + name;
}

fs::path layout_path(const fs::path& root, const LayoutKey& key) {
  return root / fs::path(layout_relpath(key));
}

fs::path layout_path(const fs::path& root, Satellite sat, std::uint32_t scene_id, YearMonth month,
                     std::uint32_t rank, Kind kind) {
  return layout_path(root, LayoutKey{sat, scene_id, month, rank, kind});
}

std::optional<LayoutKey> parse_layout(std::string_view rel) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= rel.size()) {
    const auto slash = rel.find('/', start);
    const auto end = slash == std::string_view::npos ? rel.size() : slash;
    parts.push_back(rel.substr(start, end - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  if (parts.size() != 4) return std::nullopt;
  LayoutKey k;
  if (parts[0] == "Sentinel-1") {
    k.satellite = Satellite::S1;
  } else if (parts[0] == "Sentinel-2") {
    k.satellite = Satellite::S2;
  } else {
    return std::nullopt;
  }
  if (parts[1].substr(0, 6) != "scene_" || !parse_u32(parts[1].substr(6), k.scene_id)) {
    return std::nullopt;
  }
  const auto ym = YearMonth::parse(parts[2]);
  if (!ym) return std::nullopt;
  k.month = *ym;
  const auto file = parts[3];
  const auto dot = file.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto stem = file.substr(0, dot);
  const auto ext = file.substr(dot + 1);
  if (stem.substr(0, 4) == "raw_" && ext == "tif") {
    k.kind = Kind::Raw;
  } else if (stem.substr(0, 4) == "img_" && ext == "png") {
    k.kind = Kind::Converted;
  } else if (stem.substr(0, 4) == "img_" && ext == "tif") {
    k.kind = Kind::ConvertedTiff;
  } else {
    return std::nullopt;
  }
  if (!parse_u32(stem.substr(4), k.rank)) return std::nullopt;
  // canonical spelling only (no extra zero padding, no '+')
  if (layout_relpath(k) != rel) return std::nullopt;
  return k;
}

std::string discarded_relpath(std::string_view rel) {
  const auto slash = rel.rfind('/');
  if (slash == std::string_view::npos) return "discarded/" + std::string(rel);
  return std::string(rel.substr(0, slash)) + "/discarded" + std::string(rel.substr(slash));
}

// ---------------------------------------------------------------------------

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Generate: return "generate";
    case Stage::Download: return "download";
    case Stage::Convert: return "convert";
    case Stage::Clean: return "clean";
    case Stage::Extract: return "extract";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view t) {
  for (auto s : kStages) {
    if (to_string(s) == t) return s;
  }
  return std::nullopt;
}

std::string_view to_string(StageStatus s) {
  switch (s) {
    case StageStatus::NotRun: return "NotRun";
    case StageStatus::Running: return "Running";
    case StageStatus::Done: return "Done";
    case StageStatus::Failed: return "Failed";
  }
  return "?";
}

std::optional<StageStatus> parse_stage_status(std::string_view t) {
  for (auto s : {StageStatus::NotRun, StageStatus::Running, StageStatus::Done, StageStatus::Failed}) {
    if (to_string(s) == t) return s;
  }
  return std::nullopt;
}

MonthEntry* Region::find_month(YearMonth ym) {
  for (auto& m : months) {
    if (m.month == ym) return &m;
  }
  return nullptr;
}

DatasetManifest::DatasetManifest() {
  for (auto s : kStages) stage_status[s] = StageStatus::NotRun;
}

Region* DatasetManifest::find_region(std::uint32_t id) {
  for (auto& r : regions) {
    if (r.scene_id == id) return &r;
  }
  return nullptr;
}

const Region* DatasetManifest::find_region(std::uint32_t id) const {
  for (const auto& r : regions) {
    if (r.scene_id == id) return &r;
  }
  return nullptr;
}

std::size_t DatasetManifest::selected_count() const {
  return selected_count(Satellite::S1) + selected_count(Satellite::S2);
}

std::size_t DatasetManifest::selected_count(Satellite sat) const {
  std::size_t n = 0;
  for (const auto& r : regions) {
    for (const auto& m : r.months) {
      auto it = m.per_satellite.find(sat);
      if (it != m.per_satellite.end() && it->second.selected) ++n;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json report_json(const QualityReport& r) {
  return {{"missing_fraction", r.missing_fraction},
          {"cloud_fraction", r.cloud_fraction},
          {"score", r.score},
          {"verdict", to_string(r.verdict)},
          {"thresholds_used", {{"missing_max", r.thresholds_used.missing_max},
                               {"cloud_max", r.thresholds_used.cloud_max}}},
          {"cloud_low_confidence", r.cloud_low_confidence}};
}

[[noreturn]] void corrupt(const std::string& m) { throw Error(ErrorCode::CorruptManifest, m); }

template <typename T, typename Parse>
T enum_field(const json& j, const char* key, Parse parse) {
  const auto v = parse(j.at(key).get<std::string>());
  if (!v) corrupt(std::string("bad value for ") + key);
  return *v;
}

QualityReport report_from(const json& j) {
  QualityReport r;
  r.missing_fraction = j.at("missing_fraction").get<double>();
  r.cloud_fraction = j.at("cloud_fraction").get<double>();
  r.score = j.at("score").get<double>();
  r.verdict = enum_field<Verdict>(j, "verdict", parse_verdict);
  r.thresholds_used.missing_max = j.at("thresholds_used").at("missing_max").get<double>();
  r.thresholds_used.cloud_max = j.at("thresholds_used").at("cloud_max").get<double>();
  r.cloud_low_confidence = j.value("cloud_low_confidence", false);
  return r;
}

}  // namespace

std::string to_json(const DatasetManifest& m) {
  json regions = json::array();
  for (const auto& r : m.regions) {
    json months = json::array();
    for (const auto& me : r.months) {
      json per = json::object();
      for (const auto& [sat, sm] : me.per_satellite) {
        json cands = json::array();
        for (const auto& c : sm.candidates) {
          cands.push_back({{"rank", c.rank},
                           {"product_id", c.product_id},
                           {"acquired_at", c.acquired_at},
                           {"raw_path", c.raw_path},
                           {"image_path", c.image_path ? json(*c.image_path) : json(nullptr)},
                           {"report", c.report ? report_json(*c.report) : json(nullptr)},
                           {"decision", to_string(c.decision)},
                           {"decided_by", to_string(c.decided_by)}});
        }
        per[std::string(to_string(sat))] = {
            {"candidates", cands},
            {"selected", sm.selected ? json(*sm.selected) : json(nullptr)},
            {"unfavorable", sm.unfavorable}};
      }
      months.push_back({{"month", me.month.str()}, {"satellites", per}});
    }
    regions.push_back({{"scene_id", r.scene_id},
                       {"center", {{"lat", r.center.lat}, {"lon", r.center.lon}}},
                       {"months", months}});
  }
  json status = json::object();
  for (const auto& [s, st] : m.stage_status) status[std::string(to_string(s))] = to_string(st);
  json doc = {{"version", m.version}, {"regions", regions}, {"stage_status", status}};
  return doc.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) corrupt("not a JSON object");
  if (!doc.contains("version") || !doc["version"].is_number_integer()) corrupt("missing version");
  if (doc["version"].get<int>() != kManifestVersion) {
    throw Error(ErrorCode::SchemaMismatch, "manifest version " + doc["version"].dump() +
                                               ", expected " + std::to_string(kManifestVersion));
  }
  DatasetManifest m;
  try {
    for (const auto& [k, v] : doc.at("stage_status").items()) {
      const auto s = parse_stage(k);
      if (!s) corrupt("unknown stage " + k);
      m.stage_status[*s] = enum_field<StageStatus>(doc["stage_status"], k.c_str(), parse_stage_status);
    }
    for (const auto& jr : doc.at("regions")) {
      Region r;
      r.scene_id = jr.at("scene_id").get<std::uint32_t>();
      r.center = {jr.at("center").at("lat").get<double>(), jr.at("center").at("lon").get<double>()};
      for (const auto& jm : jr.at("months")) {
        MonthEntry me;
        const auto ym = YearMonth::parse(jm.at("month").get<std::string>());
        if (!ym) corrupt("bad month");
        me.month = *ym;
        for (const auto& [sk, js] : jm.at("satellites").items()) {
          const auto sat = parse_satellite(sk);
          if (!sat) corrupt("unknown satellite " + sk);
          SatelliteMonth sm;
          for (const auto& jc : js.at("candidates")) {
            Candidate c;
            c.rank = jc.at("rank").get<std::uint32_t>();
            c.product_id = jc.at("product_id").get<std::string>();
            c.acquired_at = jc.at("acquired_at").get<std::string>();
            c.raw_path = jc.at("raw_path").get<std::string>();
            if (!jc.at("image_path").is_null()) c.image_path = jc["image_path"].get<std::string>();
            if (!jc.at("report").is_null()) c.report = report_from(jc["report"]);
            c.decision = enum_field<Decision>(jc, "decision", parse_decision);
            c.decided_by = enum_field<DecidedBy>(jc, "decided_by", parse_decided_by);
            sm.candidates.push_back(std::move(c));
          }
          if (!js.at("selected").is_null()) sm.selected = js["selected"].get<std::string>();
          sm.unfavorable = js.at("unfavorable").get<bool>();
          me.per_satellite[*sat] = std::move(sm);
        }
        r.months.push_back(std::move(me));
      }
      m.regions.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  return m;
}

void validate(const DatasetManifest& m, const fs::path& root) {
  for (const auto& r : m.regions) {
    for (const auto& me : r.months) {
      for (const auto& [sat, sm] : me.per_satellite) {
        const std::string where = std::string(to_string(sat)) + " scene " +
                                  std::to_string(r.scene_id) + " " + me.month.str();
        if (!sm.selected) continue;
        const Candidate* hit = nullptr;
        for (const auto& c : sm.candidates) {
          if (c.best_path() == *sm.selected) hit = &c;
        }
        if (hit == nullptr) corrupt(where + ": selected path is not a candidate");
        if (hit->decision != Decision::Keep) corrupt(where + ": selected candidate is not Keep");
        if (!fs::exists(root / fs::path(*sm.selected))) {
          corrupt(where + ": selected file missing: " + *sm.selected);
        }
      }
    }
  }
}

void commit_manifest(const fs::path& root, const DatasetManifest& m) {
  io::write_file_atomic(root / kManifestName, to_json(m));
}

DatasetManifest load_manifest(const fs::path& root) {
  auto m = manifest_from_json(io::read_text(root / kManifestName));
  validate(m, root);
  return m;
}

bool manifest_exists(const fs::path& root) { return fs::exists(root / kManifestName); }

DatasetManifest load_or_empty(const fs::path& root) {
  return manifest_exists(root) ? load_manifest(root) : DatasetManifest{};
}

namespace {

std::mutex& root_lock(const fs::path& root) {
  static std::mutex registry_mu;
  static std::map<std::string, std::unique_ptr<std::mutex>> locks;
  std::error_code ec;
  auto key = fs::weakly_canonical(root, ec).string();
  if (ec) key = root.string();
  std::lock_guard g(registry_mu);
  auto& slot = locks[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

}  // namespace

DatasetManifest update_manifest(const fs::path& root,
                                const std::function<void(DatasetManifest&)>& mutate) {
  std::lock_guard g(root_lock(root));
  auto m = load_or_empty(root);
  mutate(m);
  commit_manifest(root, m);
  return m;
}

// ---------------------------------------------------------------------------

std::size_t months_done(const Region& r) {
  std::size_t n = 0;
  for (const auto& me : r.months) {
    bool any = false;
    for (const auto& [sat, sm] : me.per_satellite) any = any || sm.selected.has_value();
    n += any;
  }
  return n;
}

std::size_t unfavorable_count(const Region& r) {
  std::size_t n = 0;
  for (const auto& me : r.months) {
    for (const auto& [sat, sm] : me.per_satellite) n += sm.unfavorable;
  }
  return n;
}

std::string export_points_geojson(const DatasetManifest& m) {
  std::string out = R"({"type":"FeatureCollection","features":[)";
  char coords[96];
  for (std::size_t i = 0; i < m.regions.size(); ++i) {
    const auto& r = m.regions[i];
    std::snprintf(coords, sizeof coords, "[%.6f,%.6f]", r.center.lon, r.center.lat);
    if (i) out += ',';
    out += R"({"type":"Feature","geometry":{"type":"Point","coordinates":)";
    out += coords;
    out += R"(},"properties":)";
    out += json{{"scene_id", r.scene_id},
                {"months_done", months_done(r)},
                {"unfavorable_count", unfavorable_count(r)}}
               .dump();
    out += '}';
  }
  out += "]}";
  return out;
}

std::string item_id(Satellite sat, std::uint32_t scene_id, YearMonth month, std::uint32_t rank) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%04u-%s-%u", std::string(to_string(sat)).c_str(), scene_id,
                month.str().c_str(), rank);
  return buf;
}

std::optional<ItemRef> parse_item_id(std::string_view id) {
  // S2-0003-2020-01-1
  if (id.size() < 3 || id[2] != '-') return std::nullopt;
  const auto sat = parse_satellite(id.substr(0, 2));
  if (!sat) return std::nullopt;
  const auto rest = id.substr(3);
  const auto d1 = rest.find('-');
  if (d1 == std::string_view::npos || rest.size() < d1 + 1 + 7 + 2) return std::nullopt;
  ItemRef ref{*sat, 0, {}, 0};
  if (!parse_u32(rest.substr(0, d1), ref.scene_id)) return std::nullopt;
  const auto ym = YearMonth::parse(rest.substr(d1 + 1, 7));
  if (!ym || rest[d1 + 8] != '-') return std::nullopt;
  ref.month = *ym;
  if (!parse_u32(rest.substr(d1 + 9), ref.rank)) return std::nullopt;
  if (item_id(ref.satellite, ref.scene_id, ref.month, ref.rank) != id) return std::nullopt;
  return ref;
}

}  // namespace forge::store
