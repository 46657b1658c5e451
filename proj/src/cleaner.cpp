#include "forge/cleaner.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <deque>
#include <mutex>
#include <thread>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/geotiff.hpp"
#include "forge/simd/kernels.hpp"
#include "forge/store.hpp"

namespace forge::clean {

namespace fs = std::filesystem;

namespace {

// Enumerates every rectangle of the binary `cells` grid (w x h) that is
// maximal in width for its height at some bottom row, via the histogram
// stack method, and calls emit(x0, y0, x1, y1) inclusive.
template <typename Emit>
void enumerate_rectangles(const std::vector<std::uint8_t>& cells, std::size_t w, std::size_t h,
                          Emit&& emit) {
  std::vector<std::size_t> heights(w + 1, 0);
  std::vector<std::size_t> stack;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) heights[x] = cells[y * w + x] ? heights[x] + 1 : 0;
    heights[w] = 0;
    stack.clear();
    for (std::size_t x = 0; x <= w; ++x) {
      while (!stack.empty() && heights[stack.back()] >= heights[x]) {
        const std::size_t top = stack.back();
        stack.pop_back();
        const std::size_t hgt = heights[top];
        if (hgt == 0) continue;
        // equal heights are emitted by the last bar of the run only
        if (heights[x] == hgt) continue;
        const std::size_t left = stack.empty() ? 0 : stack.back() + 1;
        emit(left, y + 1 - hgt, x - 1, y);
      }
      stack.push_back(x);
    }
  }
}

}  // namespace

std::vector<std::uint8_t> gray_fill_mask(const Raster& r, double min_area_frac) {
  const std::size_t w = r.width();
  const std::size_t h = r.height();
  const std::size_t n = w * h;
  std::vector<std::uint8_t> out(n, 0);
  if (n == 0 || r.band_count() == 0) return out;
  const auto min_area = static_cast<std::size_t>(std::ceil(min_area_frac * static_cast<double>(n)));

  const std::size_t nb = r.band_count();
  auto same = [&](std::size_t a, std::size_t b) {
    for (std::size_t k = 0; k < nb; ++k) {
      const auto p = r.plane(k);
      if (std::isnan(p[a]) || std::bit_cast<std::uint32_t>(p[a]) != std::bit_cast<std::uint32_t>(p[b])) {
        return false;
      }
    }
    return true;
  };

  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> comp;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    seen[start] = 1;
    comp.clear();
    queue.assign(1, start);
    std::size_t x0 = w, y0 = h, x1 = 0, y1 = 0;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      comp.push_back(p);
      const std::size_t x = p % w, y = p / w;
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
      auto visit = [&](std::size_t q) {
        if (!seen[q] && same(p, q)) {
          seen[q] = 1;
          queue.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    if (comp.size() < min_area) continue;
    if (x0 != 0 && y0 != 0 && x1 != w - 1 && y1 != h - 1) continue;

    const std::size_t bw = x1 - x0 + 1, bh = y1 - y0 + 1;
    std::vector<std::uint8_t> cells(bw * bh, 0);
    for (auto p : comp) cells[(p / w - y0) * bw + (p % w - x0)] = 1;
    // 2-D difference array marks the union of qualifying rectangles
    std::vector<std::int32_t> diff((bw + 1) * (bh + 1), 0);
    bool any = false;
    enumerate_rectangles(cells, bw, bh, [&](std::size_t a0, std::size_t b0, std::size_t a1, std::size_t b1) {
      const std::size_t area = (a1 - a0 + 1) * (b1 - b0 + 1);
      if (area < min_area) return;
      const bool touches = x0 + a0 == 0 || y0 + b0 == 0 || x0 + a1 == w - 1 || y0 + b1 == h - 1;
      if (!touches) return;
      any = true;
      diff[b0 * (bw + 1) + a0] += 1;
      diff[b0 * (bw + 1) + a1 + 1] -= 1;
      diff[(b1 + 1) * (bw + 1) + a0] -= 1;
      diff[(b1 + 1) * (bw + 1) + a1 + 1] += 1;
    });
    if (!any) continue;
    for (std::size_t b = 0; b < bh; ++b) {
      for (std::size_t a = 0; a < bw; ++a) {
        std::int32_t v = diff[b * (bw + 1) + a];
        if (a > 0) v += diff[b * (bw + 1) + a - 1];
        if (b > 0) v += diff[(b - 1) * (bw + 1) + a];
        if (a > 0 && b > 0) v -= diff[(b - 1) * (bw + 1) + a - 1];
        diff[b * (bw + 1) + a] = v;
        if (v > 0) out[(y0 + b) * w + (x0 + a)] = 1;
      }
    }
  }
  return out;
}

double missing_fraction(const Raster& r, double black_abs, double gray_min_area) {
  const std::size_t n = r.pixel_count();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty raster");
  if (r.band_count() == 0) return 1.0;
  const auto& k = simd::active();
  std::vector<std::uint8_t> all_nodata(n, 1);
  std::vector<std::uint8_t> all_black(n, 1);
  for (std::size_t b = 0; b < r.band_count(); ++b) {
    k.and_nodata(r.plane(b), r.nodata(), all_nodata);
    k.and_below(r.plane(b), static_cast<float>(black_abs), all_black);
  }
  auto gray = gray_fill_mask(r, gray_min_area);
  for (std::size_t i = 0; i < n; ++i) gray[i] |= all_nodata[i] | all_black[i];
  return static_cast<double>(k.count_nonzero(gray)) / static_cast<double>(n);
}

double missing_fraction(const Raster& r, Satellite sat, const CleanerConfig& cfg) {
  // QA60 is a bit field, not radiometry: exclude it from the black/gray tests
  if (sat == Satellite::S2 && r.index_of("QA60")) {
    Raster radiometric(r.width(), r.height(), r.nodata());
    for (std::size_t b = 0; b < r.band_count(); ++b) {
      if (r.band(b).name != "QA60") radiometric.add_band(r.band(b).name, r.band(b).samples);
    }
    return missing_fraction(radiometric, cfg.black_threshold * cfg.full_scale(sat), cfg.gray_min_area);
  }
  return missing_fraction(r, cfg.black_threshold * cfg.full_scale(sat), cfg.gray_min_area);
}

double cloud_fraction(std::span<const float> qa60) {
  if (qa60.empty()) return 0.0;
  return static_cast<double>(simd::active().count_bits(qa60, kQa60CloudBits)) /
         static_cast<double>(qa60.size());
}

CloudEstimate estimate_cloud(const Raster& r, const CleanerConfig& cfg) {
  if (auto qa = r.index_of("QA60")) return {cloud_fraction(r.plane(*qa)), false};
  const auto& k = simd::active();
  std::vector<std::uint8_t> bright(r.pixel_count(), 1);
  bool have_rgb = true;
  for (const char* name : {"B4", "B3", "B2"}) {
    auto i = r.index_of(name);
    if (!i) {
      have_rgb = false;
      break;
    }
    k.and_above(r.plane(*i), static_cast<float>(cfg.bright_threshold * cfg.s2_full_scale), bright);
  }
  if (!have_rgb || r.pixel_count() == 0) return {0.0, true};
  return {static_cast<double>(k.count_nonzero(bright)) / static_cast<double>(r.pixel_count()), true};
}

QualityReport score_candidate(const Raster& r, Satellite sat, const CleanerConfig& cfg) {
  const double missing = missing_fraction(r, sat, cfg);
  if (sat == Satellite::S1) return make_report(missing, 0.0, cfg.thresholds);
  const auto cloud = estimate_cloud(r, cfg);
  return make_report(missing, cloud.fraction, cfg.thresholds, cloud.low_confidence);
}

std::optional<std::size_t> select_best(std::span<const QualityReport> reports,
                                       std::span<const std::int64_t> acquired_at) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].verdict != Verdict::Pass) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& a = reports[i];
    const auto& b = reports[*best];
    if (a.score < b.score) {
      best = i;
    } else if (a.score == b.score && !acquired_at.empty() && acquired_at[i] < acquired_at[*best]) {
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t acquired_epoch(const store::Candidate& c) {
  auto t = UtcTime::parse_iso(c.acquired_at);
  return t ? t->epoch_seconds() : 0;
}

std::string canonical_image_path(const std::string& rel) {
  const std::string marker = "/discarded/";
  const auto at = rel.find(marker);
  if (at == std::string::npos) return rel;
  return rel.substr(0, at) + "/" + rel.substr(at + marker.size());
}

// Places the candidate's converted image where its decision says it lives.
void place_image(const fs::path& root, store::Candidate& c) {
  if (!c.image_path) return;
  const std::string home = canonical_image_path(*c.image_path);
  const std::string want =
      c.decision == Decision::Discard ? store::discarded_relpath(home) : home;
  if (*c.image_path == want) return;
  const fs::path from = root / fs::path(*c.image_path);
  const fs::path to = root / fs::path(want);
  std::error_code ec;
  if (fs::exists(from)) {
    fs::create_directories(to.parent_path(), ec);
    fs::rename(from, to, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot move " + from.string() + " -> " + to.string());
  }
  c.image_path = want;
}

struct Job {
  store::Candidate* cand;
  Satellite sat;
};

}  // namespace

CleanReport clean_auto(const fs::path& root, const CleanerConfig& cfg, const Progress& progress) {
  CleanReport report;
  store::update_manifest(root, [&](store::DatasetManifest& m) {
    std::vector<Job> jobs;
    for (auto& r : m.regions) {
      for (auto& me : r.months) {
        for (auto& [sat, sm] : me.per_satellite) {
          for (auto& c : sm.candidates) jobs.push_back({&c, sat});
        }
      }
    }
    std::mutex mu;
    std::atomic<std::size_t> done{0};
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
      auto& job = jobs[i];
      try {
        const Raster raster = read_geotiff(root / fs::path(job.cand->raw_path));
        job.cand->report = score_candidate(raster, job.sat, cfg);
      } catch (const std::exception& e) {
        job.cand->report.reset();
        std::lock_guard g(mu);
        report.errors.push_back(job.cand->raw_path + ": " + e.what());
      }
      const auto d = done.fetch_add(1) + 1;
      if (progress) progress(d, jobs.size());
    });
    report.scored = jobs.size() - report.errors.size();

    for (auto& r : m.regions) {
      for (auto& me : r.months) {
        for (auto& [sat, sm] : me.per_satellite) {
          const store::Candidate* human_keep = nullptr;
          for (const auto& c : sm.candidates) {
            if (c.decided_by == DecidedBy::Human && c.decision == Decision::Keep) human_keep = &c;
          }
          std::vector<std::size_t> eligible;
          std::vector<QualityReport> reports;
          std::vector<std::int64_t> times;
          for (std::size_t i = 0; i < sm.candidates.size(); ++i) {
            const auto& c = sm.candidates[i];
            if (c.decided_by == DecidedBy::Human || !c.report) continue;
            eligible.push_back(i);
            reports.push_back(*c.report);
            times.push_back(acquired_epoch(c));
          }
          const auto pick = select_best(reports, times);
          for (std::size_t i = 0; i < sm.candidates.size(); ++i) {
            auto& c = sm.candidates[i];
            if (c.decided_by == DecidedBy::Human) continue;
            if (cfg.manual) {
              c.decision = Decision::Pending;
            } else if (human_keep == nullptr && pick && eligible[*pick] == i) {
              c.decision = Decision::Keep;
            } else {
              c.decision = Decision::Discard;
            }
            c.decided_by = DecidedBy::Auto;
          }
          sm.selected.reset();
          for (auto& c : sm.candidates) {
            place_image(root, c);
            if (c.decision == Decision::Keep) sm.selected = c.best_path();
            report.kept += c.decision == Decision::Keep;
            report.discarded += c.decision == Decision::Discard;
            report.pending += c.decision == Decision::Pending;
          }
          const bool any_pending = std::any_of(sm.candidates.begin(), sm.candidates.end(),
                                               [](const auto& c) { return c.decision == Decision::Pending; });
          sm.unfavorable = !sm.selected && !any_pending;
          report.unfavorable += sm.unfavorable;
        }
      }
    }
  });
  return report;
}

std::vector<ReviewItem> list_pending(const fs::path& root, bool manual_enabled) {
  if (!manual_enabled) throw Error(ErrorCode::ManualModeDisabled, "manual cleaner mode is off");
  const auto m = store::load_or_empty(root);
  std::vector<ReviewItem> items;
  for (const auto& r : m.regions) {
    for (const auto& me : r.months) {
      for (const auto& [sat, sm] : me.per_satellite) {
        for (const auto& c : sm.candidates) {
          if (c.decision != Decision::Pending) continue;
          items.push_back({store::item_id(sat, r.scene_id, me.month, c.rank), sat, r.scene_id, me.month,
                           c.rank, c.best_path(), c.report, c.decision, c.decided_by});
        }
      }
    }
  }
  return items;
}

ReviewItem resolve_review(const fs::path& root, const std::string& id, Decision decision,
                          bool manual_enabled) {
  if (!manual_enabled) throw Error(ErrorCode::ManualModeDisabled, "manual cleaner mode is off");
  if (decision == Decision::Pending) throw Error(ErrorCode::InvalidArgument, "decision must be Keep or Discard");
  const auto ref = store::parse_item_id(id);
  if (!ref) throw Error(ErrorCode::UnknownItem, id);
  ReviewItem out;
  store::update_manifest(root, [&](store::DatasetManifest& m) {
    auto* region = m.find_region(ref->scene_id);
    auto* me = region ? region->find_month(ref->month) : nullptr;
    if (me == nullptr || !me->per_satellite.count(ref->satellite)) throw Error(ErrorCode::UnknownItem, id);
    auto& sm = me->per_satellite[ref->satellite];
    auto it = std::find_if(sm.candidates.begin(), sm.candidates.end(),
                           [&](const auto& c) { return c.rank == ref->rank; });
    if (it == sm.candidates.end()) throw Error(ErrorCode::UnknownItem, id);
    if (it->decided_by == DecidedBy::Human) throw Error(ErrorCode::AlreadyResolved, id);

    it->decision = decision;
    it->decided_by = DecidedBy::Human;
    if (decision == Decision::Keep) {
      for (auto& c : sm.candidates) {
        if (&c != &*it && c.decision == Decision::Keep) {
          c.decision = Decision::Discard;
          c.decided_by = DecidedBy::Human;
        }
      }
    }
    sm.selected.reset();
    for (auto& c : sm.candidates) {
      place_image(root, c);
      if (c.decision == Decision::Keep) sm.selected = c.best_path();
    }
    const bool any_pending = std::any_of(sm.candidates.begin(), sm.candidates.end(),
                                         [](const auto& c) { return c.decision == Decision::Pending; });
    sm.unfavorable = !sm.selected && !any_pending;
    out = {id, ref->satellite, ref->scene_id, ref->month, it->rank, it->best_path(),
           it->report, it->decision, it->decided_by};
  });
  return out;
}

}  // namespace forge::clean
