#pragma once

// On-disk project store and the HTTP adapter over it.
//
//   <root>/sequences/<id>/manifest.json
//   <root>/sequences/<id>/annotations/<i>.json   {"version", "labels"}
//   <root>/sequences/<id>/status.json
//   <root>/sequences/<id>/labels.jsonl
//
// Relative frame paths in a stored manifest resolve against <root>.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "loopkit/pipeline.hpp"

namespace httplib {
class Server;
}

namespace loopkit {

struct Annotation {
  std::uint64_t version = 0;
  std::vector<OrientedLabel> labels;
};

struct JobStatus {
  std::string state = "idle";  // idle | queued | running | done | broken | failed
  std::optional<std::size_t> from_frame;
  std::optional<std::size_t> broken_at;
  std::string error;
};

Json status_to_json(const JobStatus& s);
JobStatus status_from_json(const Json& j);

class ProjectStore {
 public:
  explicit ProjectStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::vector<std::string> list() const;
  bool exists(const std::string& id) const;
  /// Registers a sequence; generates an id when `id` is empty. Throws
  /// InvalidArgument on a malformed or duplicate id.
  std::string create(const Manifest& manifest, const std::string& id = {});

  Manifest manifest(const std::string& id) const;
  std::filesystem::path frame_path(const std::string& id, std::size_t index) const;

  Annotation annotation(const std::string& id, std::size_t frame) const;
  /// Writes when `expected_version` matches; returns the new version or
  /// nullopt on a stale version.
  std::optional<std::uint64_t> write_annotation(const std::string& id, std::size_t frame,
                                                std::uint64_t expected_version,
                                                const std::vector<OrientedLabel>& labels);

  JobStatus status(const std::string& id) const;
  void write_status(const std::string& id, const JobStatus& status);

  std::optional<std::string> labels(const std::string& id) const;
  void write_labels(const std::string& id, const std::string& text);

  std::filesystem::path sequence_dir(const std::string& id) const;
  /// Serializes writes to one sequence.
  std::mutex& lock_for(const std::string& id);

 private:
  std::filesystem::path root_;
  mutable std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

/// Builds the request that both `loopkit propagate` and the service run.
PropagateRequest make_store_request(const ProjectStore& store, const std::string& id,
                                    std::size_t from_frame, const PropagationSettings& settings);

class Service {
 public:
  explicit Service(std::filesystem::path root, std::string cors_origin = "*");
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();
  /// Waits for all background jobs.
  void wait_jobs();

  ProjectStore& store() { return store_; }

 private:
  void routes();
  void start_job(const std::string& id, std::size_t from_frame, PropagationSettings settings);

  ProjectStore store_;
  std::string cors_origin_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex jobs_mutex_;
  std::vector<std::thread> jobs_;
};

}  // namespace loopkit
