#include "loopkit/service.hpp"

#include <algorithm>
#include <regex>

#include "httplib.h"
#include "loopkit/errors.hpp"

namespace loopkit {

namespace fs = std::filesystem;

Json status_to_json(const JobStatus& s) {
  Json j{{"state", s.state}};
  j["from_frame"] = s.from_frame ? Json(*s.from_frame) : Json(nullptr);
  j["broken_at"] = s.broken_at ? Json(*s.broken_at) : Json(nullptr);
  j["error"] = s.error;
  return j;
}

JobStatus status_from_json(const Json& j) {
  JobStatus s;
  s.state = j.value("state", std::string("idle"));
  if (j.contains("from_frame") && !j["from_frame"].is_null())
    s.from_frame = j["from_frame"].get<std::size_t>();
  if (j.contains("broken_at") && !j["broken_at"].is_null())
    s.broken_at = j["broken_at"].get<std::size_t>();
  s.error = j.value("error", std::string{});
  return s;
}

namespace {

bool valid_id(const std::string& id) {
  static const std::regex re("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, re);
}

/// Write-then-rename so readers never see a torn file.
void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_text(tmp, text);
  fs::rename(tmp, path);
}

}  // namespace

ProjectStore::ProjectStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "sequences");
}

fs::path ProjectStore::sequence_dir(const std::string& id) const {
  return root_ / "sequences" / id;
}

std::vector<std::string> ProjectStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "sequences"))
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json"))
      ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool ProjectStore::exists(const std::string& id) const {
  return valid_id(id) && fs::exists(sequence_dir(id) / "manifest.json");
}

std::string ProjectStore::create(const Manifest& manifest, const std::string& requested) {
  if (manifest.frames.empty()) throw InvalidArgument("manifest lists no frames");
  std::lock_guard lk(locks_mutex_);
  std::string id = requested;
  if (id.empty()) {
    for (std::size_t n = 1;; ++n) {
      id = "seq-" + std::to_string(n);
      if (!fs::exists(sequence_dir(id))) break;
    }
  } else if (!valid_id(id)) {
    throw InvalidArgument("sequence id must match [A-Za-z0-9_-]{1,64}");
  } else if (fs::exists(sequence_dir(id))) {
    throw InvalidArgument("sequence '" + id + "' already exists");
  }
  fs::create_directories(sequence_dir(id) / "annotations");
  write_atomic(sequence_dir(id) / "status.json", status_to_json({}).dump() + "\n");
  write_atomic(sequence_dir(id) / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  return id;
}

Manifest ProjectStore::manifest(const std::string& id) const {
  return read_manifest(sequence_dir(id) / "manifest.json");
}

fs::path ProjectStore::frame_path(const std::string& id, std::size_t index) const {
  const Manifest m = manifest(id);
  if (index >= m.frames.size()) throw InvalidArgument("frame index out of range");
  const fs::path p = m.frames[index];
  return p.is_absolute() ? p : root_ / p;
}

Annotation ProjectStore::annotation(const std::string& id, std::size_t frame) const {
  const fs::path path = sequence_dir(id) / "annotations" / (std::to_string(frame) + ".json");
  Annotation a;
  if (!fs::exists(path)) return a;
  const Json j = Json::parse(read_text(path));
  a.version = j.at("version").get<std::uint64_t>();
  for (const auto& l : j.at("labels")) a.labels.push_back(label_from_json(l));
  return a;
}

std::optional<std::uint64_t> ProjectStore::write_annotation(
    const std::string& id, std::size_t frame, std::uint64_t expected_version,
    const std::vector<OrientedLabel>& labels) {
  std::lock_guard lk(lock_for(id));
  if (annotation(id, frame).version != expected_version) return std::nullopt;
  Json arr = Json::array();
  for (const auto& l : labels) arr.push_back(label_to_json(l));
  const std::uint64_t next = expected_version + 1;
  write_atomic(sequence_dir(id) / "annotations" / (std::to_string(frame) + ".json"),
               Json{{"version", next}, {"labels", arr}}.dump() + "\n");
  return next;
}

JobStatus ProjectStore::status(const std::string& id) const {
  const fs::path path = sequence_dir(id) / "status.json";
  if (!fs::exists(path)) return {};
  return status_from_json(Json::parse(read_text(path)));
}

void ProjectStore::write_status(const std::string& id, const JobStatus& s) {
  write_atomic(sequence_dir(id) / "status.json", status_to_json(s).dump() + "\n");
}

std::optional<std::string> ProjectStore::labels(const std::string& id) const {
  const fs::path path = sequence_dir(id) / "labels.jsonl";
  if (!fs::exists(path)) return std::nullopt;
  return read_text(path);
}

void ProjectStore::write_labels(const std::string& id, const std::string& text) {
  write_atomic(sequence_dir(id) / "labels.jsonl", text);
}

std::mutex& ProjectStore::lock_for(const std::string& id) {
  std::lock_guard lk(locks_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

PropagateRequest make_store_request(const ProjectStore& store, const std::string& id,
                                    std::size_t from_frame, const PropagationSettings& settings) {
  PropagateRequest req;
  req.manifest = store.manifest(id);
  req.base_dir = store.root();
  req.from_frame = from_frame;
  req.settings = settings;
  if (from_frame >= req.manifest.frames.size())
    throw InvalidArgument("from_frame is past the last frame");

  if (const auto text = store.labels(id)) {
    std::istringstream in(*text);
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) req.previous.push_back(labels_from_line(line));
  }
  const Annotation seed = store.annotation(id, from_frame);
  if (seed.version > 0) {
    req.seed = seed.labels;
  } else {
    for (const auto& f : req.previous)
      if (f.frame == from_frame) req.seed = f.labels;
  }
  if (req.seed.empty()) throw InvalidArgument("no labels to propagate from this frame");
  return req;
}

// ---------------------------------------------------------------------------

namespace {

void send_json(httplib::Response& res, int code, const Json& body) {
  res.status = code;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int code, const std::string& kind,
                const std::string& message) {
  send_json(res, code, {{"error", kind}, {"message", message}});
}

Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("request body is not JSON: ") + e.what());
  }
}

bool is_count(const Json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

std::size_t parse_index(const std::string& s) {
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (const std::exception&) {
    throw InvalidArgument("bad frame index");
  }
}

}  // namespace

Service::Service(fs::path root, std::string cors_origin)
    : store_(std::move(root)),
      cors_origin_(std::move(cors_origin)),
      server_(std::make_unique<httplib::Server>()) {
  // Jobs do not survive a restart.
  for (const auto& id : store_.list()) {
    JobStatus s = store_.status(id);
    if (s.state == "queued" || s.state == "running") {
      s.state = "failed";
      s.error = "interrupted by service restart";
      store_.write_status(id, s);
    }
  }
  routes();
}

Service::~Service() {
  stop();
  wait_jobs();
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) throw IoError("cannot bind port " + std::to_string(port));
  return port;
}

void Service::listen() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::wait_jobs() {
  std::vector<std::thread> jobs;
  {
    std::lock_guard lk(jobs_mutex_);
    jobs.swap(jobs_);
  }
  for (auto& t : jobs)
    if (t.joinable()) t.join();
}

void Service::start_job(const std::string& id, std::size_t from_frame,
                        PropagationSettings settings) {
  std::lock_guard lk(jobs_mutex_);
  jobs_.emplace_back([this, id, from_frame, settings] {
    JobStatus s;
    s.from_frame = from_frame;
    {
      std::lock_guard w(store_.lock_for(id));
      s.state = "running";
      store_.write_status(id, s);
    }
    try {
      const PropagateRequest req = make_store_request(store_, id, from_frame, settings);
      const PropagateOutcome out = run_propagation(req);
      std::lock_guard w(store_.lock_for(id));
      store_.write_labels(id, labels_jsonl(out.frames));
      s.state = out.broken_at ? "broken" : "done";
      s.broken_at = out.broken_at;
      s.error = out.error;
      store_.write_status(id, s);
    } catch (const std::exception& e) {
      std::lock_guard w(store_.lock_for(id));
      s.state = "failed";
      s.error = e.what();
      store_.write_status(id, s);
    }
  });
}

void Service::routes() {
  auto& srv = *server_;
  const std::string origin = cors_origin_;

  srv.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      const bool client = e.kind() == "FormatError" || e.kind() == "InvalidArgument" ||
                          e.kind() == "DegenerateBox" || e.kind() == "UnknownClass";
      send_error(res, client ? 400 : 500, e.kind(), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  });

  // Wraps a handler that takes the sequence id as its first capture.
  auto with_sequence = [this](auto handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!store_.exists(id)) return send_error(res, 404, "NotFound", "unknown sequence " + id);
      handler(id, req, res);
    };
  };
  auto frame_in_range = [this](const std::string& id, std::size_t i, httplib::Response& res) {
    if (i < store_.manifest(id).frames.size()) return true;
    send_error(res, 404, "NotFound", "unknown frame " + std::to_string(i));
    return false;
  };

  srv.Get("/sequences", [this](const httplib::Request&, httplib::Response& res) {
    Json arr = Json::array();
    for (const auto& id : store_.list())
      arr.push_back({{"id", id},
                     {"frames", store_.manifest(id).frames.size()},
                     {"state", store_.status(id).state}});
    send_json(res, 200, arr);
  });

  srv.Post("/sequences", [this](const httplib::Request& req, httplib::Response& res) {
    const Json body = parse_body(req);
    const Json manifest_json = body.contains("manifest") ? body["manifest"] : body;
    const Manifest m = manifest_from_json(manifest_json);
    std::string id;
    if (body.contains("id")) {
      if (!body["id"].is_string()) throw FormatError("id must be a string");
      id = body["id"].get<std::string>();
      if (store_.exists(id)) return send_error(res, 409, "Conflict", "sequence exists: " + id);
    }
    id = store_.create(m, id);
    send_json(res, 201, {{"id", id}, {"frames", m.frames.size()}});
  });

  srv.Get(R"(/sequences/([^/]+))",
          with_sequence([this](const std::string& id, const httplib::Request&,
                               httplib::Response& res) {
            send_json(res, 200,
                      {{"id", id},
                       {"manifest", manifest_to_json(store_.manifest(id))},
                       {"status", status_to_json(store_.status(id))}});
          }));

  srv.Get(R"(/sequences/([^/]+)/frames/(\d+))",
          with_sequence([this, frame_in_range](const std::string& id, const httplib::Request& req,
                                               httplib::Response& res) {
            const std::size_t i = parse_index(req.matches[2]);
            if (!frame_in_range(id, i, res)) return;
            const fs::path path = store_.frame_path(id, i);
            if (!fs::exists(path)) return send_error(res, 404, "NotFound", "frame file missing");
            res.set_content(read_text(path), "image/png");
          }));

  srv.Get(R"(/sequences/([^/]+)/annotations/(\d+))",
          with_sequence([this, frame_in_range](const std::string& id, const httplib::Request& req,
                                               httplib::Response& res) {
            const std::size_t i = parse_index(req.matches[2]);
            if (!frame_in_range(id, i, res)) return;
            const Annotation a = store_.annotation(id, i);
            Json arr = Json::array();
            for (const auto& l : a.labels) arr.push_back(label_to_json(l));
            send_json(res, 200, {{"frame", i}, {"version", a.version}, {"labels", arr}});
          }));

  srv.Post(R"(/sequences/([^/]+)/annotations/(\d+))",
           with_sequence([this, frame_in_range](const std::string& id, const httplib::Request& req,
                                                httplib::Response& res) {
             const std::size_t i = parse_index(req.matches[2]);
             if (!frame_in_range(id, i, res)) return;
             const Json body = parse_body(req);
             if (!body.is_object() || !body.contains("version") ||
                 !is_count(body["version"]) || !body.contains("labels") ||
                 !body["labels"].is_array())
               throw FormatError("annotation needs an unsigned 'version' and a 'labels' array");
             std::vector<OrientedLabel> labels;
             for (const auto& l : body["labels"]) labels.push_back(label_from_json(l));
             const auto version = body["version"].get<std::uint64_t>();
             const auto next = store_.write_annotation(id, i, version, labels);
             if (!next) {
               Json err{{"error", "StaleVersion"},
                        {"message", "annotation was modified"},
                        {"current_version", store_.annotation(id, i).version}};
               return send_json(res, 409, err);
             }
             send_json(res, 200, {{"frame", i}, {"version", *next}});
           }));

  srv.Post(R"(/sequences/([^/]+)/propagate)",
           with_sequence([this](const std::string& id, const httplib::Request& req,
                                httplib::Response& res) {
             const Json body = parse_body(req);
             if (!body.is_object()) throw FormatError("propagate body must be an object");
             const auto from = body.value("from_frame", Json(0));
             if (!is_count(from)) throw FormatError("from_frame must be a non-negative integer");
             const PropagationSettings settings =
                 settings_from_json(body.value("config", Json(nullptr)));
             const std::size_t from_frame = from.get<std::size_t>();
             // Validates the seed before queuing.
             make_store_request(store_, id, from_frame, settings);
             {
               std::lock_guard w(store_.lock_for(id));
               const JobStatus current = store_.status(id);
               if (current.state == "queued" || current.state == "running")
                 return send_error(res, 409, "Busy", "a propagation job is already active");
               JobStatus s;
               s.state = "queued";
               s.from_frame = from_frame;
               store_.write_status(id, s);
             }
             start_job(id, from_frame, settings);
             send_json(res, 202, {{"state", "queued"}, {"from_frame", from_frame}});
           }));

  srv.Get(R"(/sequences/([^/]+)/status)",
          with_sequence([this](const std::string& id, const httplib::Request&,
                               httplib::Response& res) {
            send_json(res, 200, status_to_json(store_.status(id)));
          }));

  srv.Get(R"(/sequences/([^/]+)/labels\.jsonl)",
          with_sequence([this](const std::string& id, const httplib::Request&,
                               httplib::Response& res) {
            const auto text = store_.labels(id);
            if (!text) return send_error(res, 404, "NotFound", "no labels yet");
            res.set_content(*text, "application/x-ndjson");
          }));
}

}  // namespace loopkit
