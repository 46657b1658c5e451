#include "forge/http_provider.hpp"

#include <cstdio>
#include <cmath>

#include "forge/error.hpp"
#include "forge/geotiff.hpp"
#include "httplib.h"
#include "json.hpp"

namespace forge::catalog {

using nlohmann::json;

namespace {

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

[[noreturn]] void transport_error(httplib::Error e, const std::string& what) {
  throw Error(ErrorCode::ProviderUnavailable, what + ": " + httplib::to_string(e));
}

void check_status(const httplib::Result& res, const std::string& what) {
  if (!res) transport_error(res.error(), what);
  if (res->status >= 500 || res->status == 429) {
    throw Error(ErrorCode::ProviderUnavailable, what + ": HTTP " + std::to_string(res->status));
  }
  if (res->status == 404 && what.rfind("band", 0) == 0) {
    throw Error(ErrorCode::BandUnavailable, what + ": HTTP 404");
  }
  if (res->status != 200) {
    throw Error(ErrorCode::MalformedResponse, what + ": HTTP " + std::to_string(res->status));
  }
}

std::optional<geo::BBox> parse_bbox(const std::string& s) {
  geo::BBox b;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf,%lf", &b.lon_min, &b.lat_min, &b.lon_max, &b.lat_max) != 4) {
    return std::nullopt;
  }
  if (!(b.lat_min < b.lat_max) || !(b.lon_min < b.lon_max)) return std::nullopt;
  return b;
}

}  // namespace

std::string collection_name(Satellite s) { return s == Satellite::S1 ? "sentinel-1" : "sentinel-2"; }

std::string bbox_param(const geo::BBox& b) {
  return fmt_coord(b.lon_min) + "," + fmt_coord(b.lat_min) + "," + fmt_coord(b.lon_max) + "," +
         fmt_coord(b.lat_max);
}

HttpProvider::HttpProvider(std::string base, std::chrono::seconds timeout)
    : base_(std::move(base)), timeout_(timeout) {
  const auto scheme_end = base_.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "provider URL needs a scheme: " + base_);
  const auto scheme = base_.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(ErrorCode::ConfigError, "unsupported scheme: " + scheme);
  const auto path_start = base_.find('/', scheme_end + 3);
  origin_ = base_.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : base_.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (origin_.size() <= scheme_end + 3) throw Error(ErrorCode::ConfigError, "provider URL has no host: " + base_);
}

std::vector<ProductDescriptor> HttpProvider::search(const ProductQuery& q) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  const auto& b = q.footprint.bbox;
  json body = {{"bbox", {b.lon_min, b.lat_min, b.lon_max, b.lat_max}},
               {"datetime", q.start.iso() + "/" + q.end.iso()},
               {"collection", collection_name(q.satellite)},
               {"limit", q.max_candidates}};
  if (q.scene_id) body["scene_id"] = *q.scene_id;
  auto res = cli.Post(prefix_ + "/search", body.dump(), "application/json");
  check_status(res, "search");

  const json j = json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw Error(ErrorCode::MalformedResponse, "search: expected a JSON array");
  std::vector<ProductDescriptor> out;
  for (const auto& item : j) {
    auto d = descriptor_from_json(item.dump());
    if (d.satellite != q.satellite) throw Error(ErrorCode::MalformedResponse, "search: wrong collection in reply");
    out.push_back(std::move(d));
  }
  return out;
}

Raster HttpProvider::fetch(const ProductDescriptor& d, std::span<const std::string> bands,
                           const geo::SceneFootprint& fp) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  Raster out(fp.size_px, fp.size_px);
  out.set_geo(transform_for(fp));
  for (const auto& band : bands) {
    const std::string path = prefix_ + "/products/" + httplib::detail::encode_url(d.product_id) + "/bands/" +
                             httplib::detail::encode_url(band) + "?bbox=" + bbox_param(fp.bbox) +
                             "&size=" + std::to_string(fp.size_px);
    auto res = cli.Get(path);
    check_status(res, "band " + band);
    Raster part(0, 0);
    try {
      const auto* p = reinterpret_cast<const std::uint8_t*>(res->body.data());
      part = decode_geotiff({p, res->body.size()});
    } catch (const Error& e) {
      throw Error(ErrorCode::TruncatedPayload, "band " + band + ": " + e.what());
    }
    if (part.width() != fp.size_px || part.height() != fp.size_px || part.band_count() != 1) {
      throw Error(ErrorCode::TruncatedPayload, "band " + band + ": unexpected raster shape");
    }
    const auto plane = part.plane(std::size_t{0});
    std::vector<float> px(plane.begin(), plane.end());
    // carry nodata over in the output raster's convention
    if (!std::isnan(part.nodata())) {
      for (auto& v : px) {
        if (v == part.nodata()) v = out.nodata();
      }
    }
    out.add_band(band, std::move(px));
  }
  return out;
}

CatalogServer::CatalogServer(Provider& provider)
    : provider_(provider), server_(std::make_unique<httplib::Server>()) {
  install();
}

CatalogServer::~CatalogServer() { stop(); }

void CatalogServer::install() {
  server_->Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
    const json j = json::parse(req.body, nullptr, false);
    try {
      if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
      const auto& jb = j.at("bbox");
      if (!jb.is_array() || jb.size() != 4) throw Error(ErrorCode::InvalidArgument, "bbox must have 4 numbers");
      ProductQuery q;
      q.footprint.bbox = {jb[1].get<double>(), jb[0].get<double>(), jb[3].get<double>(), jb[2].get<double>()};
      const auto collection = j.at("collection").get<std::string>();
      if (collection == "sentinel-1") {
        q.satellite = Satellite::S1;
      } else if (collection == "sentinel-2") {
        q.satellite = Satellite::S2;
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown collection " + collection);
      }
      const auto dt = j.at("datetime").get<std::string>();
      const auto slash = dt.find('/');
      const auto start = UtcTime::parse_iso(dt.substr(0, slash));
      const auto end = slash == std::string::npos ? std::nullopt : UtcTime::parse_iso(dt.substr(slash + 1));
      if (!start || !end) throw Error(ErrorCode::InvalidArgument, "bad datetime interval");
      q.start = *start;
      q.end = *end;
      q.max_candidates = j.value("limit", 3u);
      if (j.contains("scene_id")) q.scene_id = j["scene_id"].get<std::uint32_t>();
      json out = json::array();
      for (const auto& d : provider_.search(q)) out.push_back(json::parse(to_json(d)));
      res.set_content(out.dump(), "application/json");
    } catch (const Error& e) {
      res.status = e.code() == ErrorCode::ProviderUnavailable ? 503 : 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  server_->Get(R"(/products/([^/]+)/bands/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      ProductDescriptor d;
      d.product_id = httplib::detail::decode_url(req.matches[1], false);
      const std::string band = httplib::detail::decode_url(req.matches[2], false);
      const auto bbox = parse_bbox(req.get_param_value("bbox"));
      const auto size = std::strtoul(req.get_param_value("size").c_str(), nullptr, 10);
      if (!bbox || size == 0 || size > 20000) throw Error(ErrorCode::InvalidArgument, "bad bbox or size");
      geo::SceneFootprint fp;
      fp.bbox = *bbox;
      fp.size_px = static_cast<std::uint32_t>(size);
      fp.center = {(bbox->lat_min + bbox->lat_max) / 2, (bbox->lon_min + bbox->lon_max) / 2};
      const std::string bands[] = {band};
      const Raster r = provider_.fetch(d, bands, fp);
      const auto bytes = encode_geotiff(r);
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/tiff");
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::BandUnavailable: res.status = 404; break;
        case ErrorCode::ProviderUnavailable: res.status = 503; break;
        default: res.status = 400; break;
      }
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

int CatalogServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void CatalogServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

void CatalogServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace forge::catalog
