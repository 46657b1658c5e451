#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "forge/config.hpp"
#include "forge/pipeline.hpp"

namespace httplib {
class Server;
}

namespace forge::service {

enum class JobState { Queued, Running, Done, Failed };
std::string_view to_string(JobState s);

struct StageProgress {
  std::size_t done = 0;
  std::size_t total = 0;
};

struct Job {
  std::string id;
  /// Empty means the full automatic run.
  std::vector<pipeline::Stage> stages;
  JobState state = JobState::Queued;
  std::map<pipeline::Stage, StageProgress> progress;
  std::deque<std::string> log;  // newest last, bounded
  std::optional<pipeline::Stage> failed_stage;
  std::string error;
  PipelineConfig config;
};

std::string to_json(const Job& j);

/// FIFO queue drained by a single worker thread.
class JobQueue {
 public:
  static constexpr std::size_t kLogTail = 50;

  explicit JobQueue(pipeline::Hooks base = {});
  ~JobQueue();
  JobQueue(const JobQueue&) = delete;
  JobQueue& operator=(const JobQueue&) = delete;

  /// Validates the config (Error(ConfigError)) and enqueues.
  std::string submit(std::vector<pipeline::Stage> stages, const PipelineConfig& cfg);
  std::optional<Job> get(const std::string& id) const;
  std::vector<Job> list() const;
  /// Blocks until the queue is empty and the worker idle.
  void wait_idle();
  void shutdown();

 private:
  void worker();
  void run(const std::string& id);
  Job* find(const std::string& id);

  pipeline::Hooks base_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> pending_;
  std::map<std::string, Job> jobs_;
  std::vector<std::string> order_;
  std::uint64_t next_id_ = 1;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread thread_;
};

/// Parses "all", a stage name, or a JSON array of stage names.
std::vector<pipeline::Stage> parse_stage_spec(const std::string& json_value);

/// HTTP JSON API under /api plus optional static UI files.
class Service {
 public:
  explicit Service(PipelineConfig cfg, pipeline::Hooks hooks = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds (port 0 = any free port) and serves on a background thread.
  /// Throws Error(Io) when the port is taken.
  int start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

  PipelineConfig config() const;
  JobQueue& jobs() { return *jobs_; }

 private:
  void install();

  mutable std::mutex cfg_mu_;
  PipelineConfig cfg_;
  std::unique_ptr<JobQueue> jobs_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

/// Published response schemas, keyed by name (job, job_ref, config, scenes,
/// scene, geojson, review_items, review_item, error).
const std::map<std::string, std::string>& api_schemas();

}  // namespace forge::service
