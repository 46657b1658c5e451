#include "forge/mock_provider.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include "json.hpp"
#include <thread>

#include "forge/error.hpp"
#include "forge/io.hpp"

namespace forge::catalog {

using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Bilinear value noise on a lattice of `cell` pixels, in [0, 1).
class ValueNoise {
 public:
  ValueNoise(std::uint64_t key, std::uint32_t cell) : key_(key), cell_(cell) {}
  double at(std::uint32_t x, std::uint32_t y) const {
    const std::uint32_t gx = x / cell_, gy = y / cell_;
    const double fx = static_cast<double>(x % cell_) / cell_;
    const double fy = static_cast<double>(y % cell_) / cell_;
    const double a = lattice(gx, gy), b = lattice(gx + 1, gy);
    const double c = lattice(gx, gy + 1), d = lattice(gx + 1, gy + 1);
    const double top = a + (b - a) * fx;
    const double bot = c + (d - c) * fx;
    return top + (bot - top) * fy;
  }

 private:
  double lattice(std::uint32_t gx, std::uint32_t gy) const {
    return unit(splitmix(key_ ^ splitmix((static_cast<std::uint64_t>(gx) << 32) | gy)));
  }
  std::uint64_t key_;
  std::uint32_t cell_;
};

std::optional<MissingFill> parse_fill(std::string_view t) {
  if (t == "nodata") return MissingFill::Nodata;
  if (t == "black") return MissingFill::Black;
  if (t == "gray") return MissingFill::Gray;
  return std::nullopt;
}

std::vector<std::string> offered_bands(Satellite s) {
  if (s == Satellite::S1) return {"VV", "VH"};
  return {"B2", "B3", "B4", "B8", "B11", "B12", "QA60"};
}

}  // namespace

bool MockDefect::matches(Satellite sat, std::optional<std::uint32_t> scene_id, YearMonth ym,
                         std::optional<std::uint32_t> index) const {
  if (satellite && *satellite != sat) return false;
  if (scene && scene_id && *scene != *scene_id) return false;
  if (scene && !scene_id) return false;
  if (month && *month != ym) return false;
  if (candidate && index && *candidate != *index) return false;
  return true;
}

MockScenario MockScenario::from_json(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidArgument, "scenario is not a JSON object");
  MockScenario s;
  try {
    s.products_per_month = j.value("products_per_month", 3u);
    for (const auto& jd : j.value("defects", json::array())) {
      MockDefect d;
      if (jd.contains("satellite")) {
        d.satellite = parse_satellite(jd["satellite"].get<std::string>());
        if (!d.satellite) throw Error(ErrorCode::InvalidArgument, "bad satellite in scenario");
      }
      if (jd.contains("scene")) d.scene = jd["scene"].get<std::uint32_t>();
      if (jd.contains("month")) {
        d.month = YearMonth::parse(jd["month"].get<std::string>());
        if (!d.month) throw Error(ErrorCode::InvalidArgument, "bad month in scenario");
      }
      if (jd.contains("candidate")) d.candidate = jd["candidate"].get<std::uint32_t>();
      d.cloud_fraction = jd.value("cloud_fraction", 0.0);
      d.missing_fraction = jd.value("missing_fraction", 0.0);
      if (jd.contains("fill")) {
        auto f = parse_fill(jd["fill"].get<std::string>());
        if (!f) throw Error(ErrorCode::InvalidArgument, "bad fill in scenario");
        d.fill = *f;
      }
      d.absent = jd.value("absent", false);
      if (jd.contains("cloud_pct_meta")) d.cloud_pct_meta = jd["cloud_pct_meta"].get<double>();
      if (d.cloud_fraction < 0 || d.cloud_fraction > 1 || d.missing_fraction < 0 || d.missing_fraction > 1) {
        throw Error(ErrorCode::InvalidArgument, "defect fractions must lie in [0, 1]");
      }
      s.defects.push_back(d);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("scenario: ") + e.what());
  }
  return s;
}

MockScenario MockScenario::load(const std::filesystem::path& path) {
  return from_json(io::read_text(path));
}

MockProvider::MockProvider(std::uint64_t seed, MockScenario scenario)
    : seed_(seed), scenario_(std::move(scenario)) {}

void MockProvider::enter() {
  const auto now = in_flight_.fetch_add(1) + 1;
  auto prev = max_in_flight_.load();
  while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
}

void MockProvider::leave() { in_flight_.fetch_sub(1); }

std::vector<const MockDefect*> MockProvider::defects_for(const Parsed& p) const {
  std::vector<const MockDefect*> out;
  for (const auto& d : scenario_.defects) {
    if (d.matches(p.satellite, p.scene, p.month, p.index)) out.push_back(&d);
  }
  return out;
}

// MOCK_S2_0003_2020-01_1 (scene "x" when the query carried no scene hint)
std::optional<MockProvider::Parsed> MockProvider::parse_id(const std::string& id) {
  char sat[4] = {0};
  char scene[16] = {0};
  int year = 0, month = 0;
  unsigned index = 0;
  if (std::sscanf(id.c_str(), "MOCK_%2s_%15[^_]_%d-%d_%u", sat, scene, &year, &month, &index) != 5) {
    return std::nullopt;
  }
  Parsed p{};
  const auto s = parse_satellite(sat);
  if (!s || month < 1 || month > 12) return std::nullopt;
  p.satellite = *s;
  if (std::string_view(scene) != "x") p.scene = static_cast<std::uint32_t>(std::strtoul(scene, nullptr, 10));
  p.month = {year, month};
  p.index = index;
  return p;
}

std::vector<ProductDescriptor> MockProvider::search(const ProductQuery& q) {
  ++search_calls_;
  enter();
  struct Leave {
    MockProvider* self;
    ~Leave() { self->leave(); }
  } guard{this};
  if (search_failures_.load() > 0) {
    search_failures_.fetch_sub(1);
    throw Error(ErrorCode::ProviderUnavailable, "mock: injected search failure");
  }

  std::vector<ProductDescriptor> out;
  for (YearMonth ym = q.start.year_month(); ym <= q.end.year_month(); ym = ym.plus_months(1)) {
    for (std::uint32_t k = 0; k < scenario_.products_per_month; ++k) {
      Parsed p{q.satellite, q.scene_id, ym, k};
      const auto defects = defects_for(p);
      if (std::any_of(defects.begin(), defects.end(), [](auto* d) { return d->absent; })) continue;

      char id[96];
      const std::string scene = q.scene_id ? std::to_string(*q.scene_id) : "x";
      std::snprintf(id, sizeof id, "MOCK_%s_%s_%s_%u", std::string(to_string(q.satellite)).c_str(),
                    scene.c_str(), ym.str().c_str(), k);
      ProductDescriptor d;
      d.product_id = id;
      d.satellite = q.satellite;
      // acquisitions fan out from mid-month: 0, +3, -6, +9, ... days
      const int mid_day = ym.days_in_month() / 2 + 1;
      int day = mid_day + (k % 2 == 1 ? 1 : -1) * 3 * static_cast<int>(k);
      day = std::clamp(day, 1, ym.days_in_month());
      d.acquired_at = {ym.year, ym.month, day, q.satellite == Satellite::S1 ? 5 * 3600 + 45 * 60 : 10 * 3600 + 30 * 60};
      if (q.satellite == Satellite::S2) {
        d.cloud_pct_meta = 2.0 * k + unit(splitmix(seed_ ^ hash_str(d.product_id)));
        for (auto* def : defects) {
          if (def->cloud_pct_meta) d.cloud_pct_meta = def->cloud_pct_meta;
        }
      }
      d.available_bands = offered_bands(q.satellite);
      if (d.acquired_at < q.start || q.end < d.acquired_at) continue;
      out.push_back(std::move(d));
    }
  }
  return out;
}

Raster MockProvider::fetch(const ProductDescriptor& d, std::span<const std::string> bands,
                           const geo::SceneFootprint& fp) {
  ++fetch_calls_;
  enter();
  struct Leave {
    MockProvider* self;
    ~Leave() { self->leave(); }
  } guard{this};
  if (fetch_failures_.load() > 0) {
    fetch_failures_.fetch_sub(1);
    throw Error(ErrorCode::ProviderUnavailable, "mock: injected fetch failure");
  }
  const auto parsed = parse_id(d.product_id);
  if (!parsed) throw Error(ErrorCode::MalformedResponse, "unknown mock product " + d.product_id);
  for (const auto& b : bands) {
    const auto offered = offered_bands(parsed->satellite);
    if (std::find(offered.begin(), offered.end(), b) == offered.end()) {
      throw Error(ErrorCode::BandUnavailable, b);
    }
  }

  const std::uint32_t n = fp.size_px;
  const std::size_t count = static_cast<std::size_t>(n) * n;
  const bool s1 = parsed->satellite == Satellite::S1;
  const double full = s1 ? kS1FullScale : kS2FullScale;
  const std::uint64_t product_key = splitmix(seed_ ^ hash_str(d.product_id));

  double cloud = 0.0, missing = 0.0;
  MissingFill fill = MissingFill::Nodata;
  for (auto* def : defects_for(*parsed)) {
    cloud = std::max(cloud, def->cloud_fraction);
    if (def->missing_fraction > missing) {
      missing = def->missing_fraction;
      fill = def->fill;
    }
  }
  if (s1) cloud = 0.0;

  // cloud blobs: the top `cloud * count` pixels of a low-frequency field
  std::vector<std::uint8_t> cloudy(count, 0);
  const auto n_cloud = static_cast<std::size_t>(std::llround(cloud * static_cast<double>(count)));
  if (n_cloud > 0) {
    const ValueNoise field(splitmix(product_key ^ 0xc10dULL), std::max(8u, n / 6));
    std::vector<double> v(count);
    for (std::uint32_t y = 0; y < n; ++y) {
      for (std::uint32_t x = 0; x < n; ++x) {
        // tiny per-pixel jitter breaks lattice ties
        v[static_cast<std::size_t>(y) * n + x] =
            field.at(x, y) + 1e-9 * unit(splitmix(product_key ^ (static_cast<std::uint64_t>(y) * n + x)));
      }
    }
    std::vector<double> sorted = v;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(count - n_cloud), sorted.end());
    const double cut = sorted[count - n_cloud];
    for (std::size_t i = 0; i < count; ++i) cloudy[i] = v[i] >= cut;
  }

  // missing rectangle anchored at the top-left corner
  std::uint32_t miss_w = 0, miss_h = 0;
  if (missing > 0.0 && n > 0) {
    const double area = missing * static_cast<double>(count);
    miss_w = static_cast<std::uint32_t>(std::clamp<double>(std::round(std::sqrt(area)), 1.0, n));
    miss_h = static_cast<std::uint32_t>(std::clamp<double>(std::round(area / miss_w), 0.0, n));
  }

  Raster r(n, n);
  r.set_geo(transform_for(fp));
  for (const auto& band : bands) {
    std::vector<float> px(count);
    const std::uint64_t band_key = splitmix(product_key ^ hash_str(band));
    const ValueNoise smooth(band_key, std::max(4u, n / 16));
    const bool qa = band == "QA60";
    for (std::uint32_t y = 0; y < n; ++y) {
      for (std::uint32_t x = 0; x < n; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * n + x;
        const double noise = unit(splitmix(band_key ^ i));
        float value;
        if (qa) {
          value = cloudy[i] ? 1024.0f : 0.0f;
        } else if (cloudy[i]) {
          value = static_cast<float>(full * (0.92 + 0.08 * noise));
        } else if (s1) {
          value = static_cast<float>(0.02 + 0.3 * (0.7 * smooth.at(x, y) + 0.3 * noise));
        } else {
          value = static_cast<float>(300.0 + 2700.0 * (0.7 * smooth.at(x, y) + 0.3 * noise));
        }
        if (!qa && x < miss_w && y < miss_h) {
          switch (fill) {
            case MissingFill::Nodata: value = r.nodata(); break;
            case MissingFill::Black: value = 0.0f; break;
            case MissingFill::Gray: value = static_cast<float>(0.5 * full); break;
          }
        }
        px[i] = value;
      }
    }
    r.add_band(band, std::move(px));
  }
  return r;
}

}  // namespace forge::catalog
