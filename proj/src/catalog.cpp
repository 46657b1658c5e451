#include "forge/catalog.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include "json.hpp"
#include <semaphore>
#include <thread>

#include "forge/error.hpp"
#include "forge/geotiff.hpp"
#include "forge/store.hpp"

namespace forge::catalog {

namespace fs = std::filesystem;
using nlohmann::json;

void ProductQuery::validate() const {
  if (end < start) throw Error(ErrorCode::InvalidArgument, "query window is not ordered");
  if (bands.empty()) throw Error(ErrorCode::InvalidArgument, "query has no bands");
  if (max_candidates == 0) throw Error(ErrorCode::InvalidArgument, "max_candidates must be >= 1");
}

std::string to_json(const ProductDescriptor& d) {
  json j = {{"product_id", d.product_id},
            {"satellite", to_string(d.satellite)},
            {"acquired_at", d.acquired_at.iso()},
            {"cloud_pct_meta", d.cloud_pct_meta ? json(*d.cloud_pct_meta) : json(nullptr)},
            {"available_bands", d.available_bands}};
  return j.dump();
}

namespace {

ProductDescriptor descriptor_from(const json& j) {
  ProductDescriptor d;
  try {
    d.product_id = j.at("product_id").get<std::string>();
    const auto sat = parse_satellite(j.at("satellite").get<std::string>());
    if (!sat) throw Error(ErrorCode::MalformedResponse, "unknown satellite");
    d.satellite = *sat;
    const auto t = UtcTime::parse_iso(j.at("acquired_at").get<std::string>());
    if (!t) throw Error(ErrorCode::MalformedResponse, "bad acquired_at");
    d.acquired_at = *t;
    if (j.contains("cloud_pct_meta") && !j["cloud_pct_meta"].is_null()) {
      d.cloud_pct_meta = j["cloud_pct_meta"].get<double>();
      if (*d.cloud_pct_meta < 0.0 || *d.cloud_pct_meta > 100.0) {
        throw Error(ErrorCode::MalformedResponse, "cloud_pct_meta outside [0, 100]");
      }
    }
    d.available_bands = j.at("available_bands").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, e.what());
  }
  if (d.product_id.empty()) throw Error(ErrorCode::MalformedResponse, "empty product_id");
  return d;
}

}  // namespace

ProductDescriptor descriptor_from_json(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedResponse, "descriptor is not an object");
  return descriptor_from(j);
}

void rank_candidates(std::vector<ProductDescriptor>& products, Satellite sat, YearMonth month) {
  const std::int64_t mid = mid_month_epoch(month);
  auto distance = [mid](const ProductDescriptor& d) {
    const auto t = d.acquired_at.epoch_seconds();
    return t > mid ? t - mid : mid - t;
  };
  std::stable_sort(products.begin(), products.end(), [&](const auto& a, const auto& b) {
    if (sat == Satellite::S2) {
      const double ca = a.cloud_pct_meta.value_or(1e9);
      const double cb = b.cloud_pct_meta.value_or(1e9);
      if (ca != cb) return ca < cb;
    }
    const auto da = distance(a), db = distance(b);
    if (da != db) return da < db;
    return a.product_id < b.product_id;
  });
}

std::vector<ProductDescriptor> query(Provider& provider, const ProductQuery& q) {
  q.validate();
  auto found = provider.search(q);
  std::vector<ProductDescriptor> in_window;
  for (auto& d : found) {
    if (d.satellite != q.satellite) {
      throw Error(ErrorCode::MalformedResponse, "catalog returned " + std::string(to_string(d.satellite)) +
                                                    " product for a " +
                                                    std::string(to_string(q.satellite)) + " query");
    }
    if (d.acquired_at < q.start || q.end < d.acquired_at) continue;
    in_window.push_back(std::move(d));
  }
  rank_candidates(in_window, q.satellite, q.reference_month());
  if (in_window.size() > q.max_candidates) in_window.resize(q.max_candidates);
  return in_window;
}

GeoTransform transform_for(const geo::SceneFootprint& fp) {
  GeoTransform g;
  g.origin_lat = fp.bbox.lat_max;
  g.origin_lon = fp.bbox.lon_min;
  const double n = fp.size_px == 0 ? 1.0 : static_cast<double>(fp.size_px);
  g.pixel_lat = (fp.bbox.lat_max - fp.bbox.lat_min) / n;
  g.pixel_lon = (fp.bbox.lon_max - fp.bbox.lon_min) / n;
  return g;
}

Raster fetch(Provider& provider, const ProductDescriptor& d, std::span<const std::string> bands,
             const geo::SceneFootprint& footprint) {
  for (const auto& b : bands) {
    if (std::find(d.available_bands.begin(), d.available_bands.end(), b) == d.available_bands.end()) {
      throw Error(ErrorCode::BandUnavailable, b + " not offered by " + d.product_id);
    }
  }
  Raster r = provider.fetch(d, bands, footprint);
  if (r.width() != footprint.size_px || r.height() != footprint.size_px || r.band_count() != bands.size()) {
    throw Error(ErrorCode::TruncatedPayload, d.product_id + ": expected " + std::to_string(bands.size()) +
                                                 " band(s) of " + std::to_string(footprint.size_px) + "^2");
  }
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (r.band(i).name != bands[i]) throw Error(ErrorCode::MalformedResponse, "band order mismatch");
  }
  return r;
}

std::vector<std::string> default_bands(Satellite sat) {
  if (sat == Satellite::S1) return {"VV"};
  return {"B4", "B3", "B2", "QA60"};
}

DownloadPlan plan_downloads(std::span<const geo::GeoPoint> points, const DownloadConfig& cfg) {
  if (cfg.months == 0) throw Error(ErrorCode::EmptyDateRange, "download window has zero months");
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "no points to plan");
  if (cfg.candidates == 0) throw Error(ErrorCode::InvalidArgument, "candidates must be >= 1");
  if (cfg.satellites.empty()) throw Error(ErrorCode::InvalidArgument, "no satellites selected");
  DownloadPlan plan;
  plan.months = cfg.months;
  plan.tasks.reserve(points.size() * cfg.satellites.size() * cfg.months * cfg.candidates);
  for (std::uint32_t scene = 0; scene < points.size(); ++scene) {
    const auto fp = geo::footprint_of(points[scene], cfg.scene_px, cfg.gsd_m);
    for (const auto sat : cfg.satellites) {
      if (cfg.bands(sat).empty()) throw Error(ErrorCode::InvalidArgument, "empty band list");
      for (std::uint32_t slot = 0; slot < cfg.months; ++slot) {
        const YearMonth ym = cfg.from.plus_months(static_cast<int>(slot));
        ProductQuery q;
        q.footprint = fp;
        q.satellite = sat;
        q.start = {ym.year, ym.month, 1, 0};
        q.end = {ym.year, ym.month, ym.days_in_month(), 86399};
        q.bands = cfg.bands(sat);
        q.max_candidates = cfg.candidates;
        q.scene_id = scene;
        for (std::uint32_t rank = 0; rank < cfg.candidates; ++rank) {
          plan.tasks.push_back({scene, sat, slot, ym, rank, q});
        }
      }
    }
  }
  return plan;
}

void RetryPolicy::validate() const {
  if (max_attempts == 0) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
  if (initial_backoff.count() < 0 || !(multiplier > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "backoff must be positive");
  }
  if (rate_limit == 0) throw Error(ErrorCode::InvalidArgument, "rate_limit must be >= 1");
}

std::string_view to_string(TaskOutcome o) {
  switch (o) {
    case TaskOutcome::Ok: return "ok";
    case TaskOutcome::Skipped: return "skipped";
    case TaskOutcome::Empty: return "empty";
    case TaskOutcome::Failed: return "failed";
  }
  return "?";
}

std::size_t DownloadReport::count(TaskOutcome o) const {
  return static_cast<std::size_t>(std::count_if(results.begin(), results.end(),
                                                [o](const auto& r) { return r.outcome == o; }));
}

namespace {

bool transient(const Error& e) {
  return e.code() == ErrorCode::ProviderUnavailable || e.code() == ErrorCode::TruncatedPayload;
}

// Runs fn under the rate limiter, retrying transient failures with
// exponential backoff. `attempts` counts calls made.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, std::counting_semaphore<>& limiter, std::uint32_t& attempts,
                Fn&& fn) {
  auto delay = policy.initial_backoff;
  for (;;) {
    ++attempts;
    try {
      limiter.acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{limiter};
      return fn();
    } catch (const Error& e) {
      if (!transient(e) || attempts >= policy.max_attempts) throw;
    }
    std::this_thread::sleep_for(delay);
    delay = std::chrono::milliseconds(
        static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy.multiplier));
  }
}

}  // namespace

DownloadReport run_plan(const DownloadPlan& plan, Provider& provider, const fs::path& root,
                        const RetryPolicy& policy, unsigned workers, const Progress& progress) {
  policy.validate();
  DownloadReport report;
  report.results.resize(plan.tasks.size());

  // one query per (scene, satellite, month) cell
  std::vector<std::vector<std::size_t>> cells;
  {
    std::map<std::tuple<std::uint32_t, int, std::uint32_t>, std::size_t> index;
    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
      const auto& t = plan.tasks[i];
      auto key = std::make_tuple(t.scene_id, static_cast<int>(t.satellite), t.month_slot);
      auto [it, fresh] = index.try_emplace(key, cells.size());
      if (fresh) cells.emplace_back();
      cells[it->second].push_back(i);
    }
  }

  std::counting_semaphore<> limiter(static_cast<std::ptrdiff_t>(policy.rate_limit));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;

  auto run_cell = [&](const std::vector<std::size_t>& cell) {
    std::vector<std::size_t> todo;
    for (auto i : cell) {
      const auto& t = plan.tasks[i];
      const auto path = store::layout_path(root, t.satellite, t.scene_id, t.month, t.candidate_rank,
                                           store::Kind::Raw);
      if (fs::exists(path)) {
        report.results[i].outcome = TaskOutcome::Skipped;
      } else {
        todo.push_back(i);
      }
    }
    if (!todo.empty()) {
      const auto& q = plan.tasks[todo.front()].query;
      std::vector<ProductDescriptor> found;
      std::uint32_t query_attempts = 0;
      bool query_ok = true;
      try {
        found = with_retry(policy, limiter, query_attempts, [&] { return query(provider, q); });
      } catch (const std::exception& e) {
        query_ok = false;
        for (auto i : todo) report.results[i] = {TaskOutcome::Failed, 0, e.what(), std::nullopt};
      }
      if (query_ok) {
        for (auto i : todo) {
          const auto& t = plan.tasks[i];
          auto& res = report.results[i];
          if (t.candidate_rank >= found.size()) {
            res.outcome = TaskOutcome::Empty;
            continue;
          }
          const auto& d = found[t.candidate_rank];
          res.descriptor = d;
          try {
            Raster r = with_retry(policy, limiter, res.attempts,
                                  [&] { return fetch(provider, d, t.query.bands, t.query.footprint); });
            r.set_metadata(to_json(d));
            write_geotiff(r, store::layout_path(root, t.satellite, t.scene_id, t.month,
                                                t.candidate_rank, store::Kind::Raw));
            res.outcome = TaskOutcome::Ok;
          } catch (const std::exception& e) {
            res.outcome = TaskOutcome::Failed;
            res.error = e.what();
          }
        }
      }
    }
    if (progress) {
      const auto d = done.fetch_add(cell.size()) + cell.size();
      std::lock_guard g(progress_mu);
      progress(d, plan.tasks.size());
    }
  };

  auto body = [&] {
    for (std::size_t c; (c = next.fetch_add(1)) < cells.size();) run_cell(cells[c]);
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1))));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  return report;
}

}  // namespace forge::catalog
