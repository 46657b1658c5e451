#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "forge/catalog.hpp"

namespace httplib {
class Server;
}

namespace forge::catalog {

/// Client for a JSON catalog service:
///   POST {base}/search  {"bbox":[lon_min,lat_min,lon_max,lat_max],
///                        "datetime":"<start>/<end>", "collection":"sentinel-1|sentinel-2",
///                        "limit":N, "scene_id":N?}  -> [descriptor, ...]
///   GET  {base}/products/{id}/bands/{band}?bbox=...&size=N  -> single-band GeoTIFF
class HttpProvider : public Provider {
 public:
  /// `base` like "http://host:port/prefix". Throws Error(ConfigError).
  explicit HttpProvider(std::string base, std::chrono::seconds timeout = std::chrono::seconds(30));

  std::string name() const override { return base_; }
  std::vector<ProductDescriptor> search(const ProductQuery& q) override;
  Raster fetch(const ProductDescriptor& d, std::span<const std::string> bands,
               const geo::SceneFootprint& footprint) override;

 private:
  std::string base_;
  std::string origin_;  // scheme://host:port
  std::string prefix_;  // path prefix without trailing slash
  std::chrono::seconds timeout_;
};

std::string collection_name(Satellite s);
std::string bbox_param(const geo::BBox& b);

/// Serves any Provider over the protocol HttpProvider speaks.
class CatalogServer {
 public:
  explicit CatalogServer(Provider& provider);
  ~CatalogServer();
  CatalogServer(const CatalogServer&) = delete;
  CatalogServer& operator=(const CatalogServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port. Throws Error(Io) if binding fails.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks until stop() is called from another thread.
  void run(const std::string& host, int port);
  void stop();

 private:
  void install();
  Provider& provider_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace forge::catalog
