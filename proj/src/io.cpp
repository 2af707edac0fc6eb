#include "loopkit/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "loopkit/errors.hpp"

namespace loopkit {

namespace {

template <typename F>
auto guarded(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

Json parse(const std::string& text, const std::string& what) {
  return guarded(what, [&] { return Json::parse(text); });
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

std::string fmt(double v) { return fmt_opt(v); }

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Catalog

Json catalog_to_json(const ObjectCatalog& catalog) {
  Json arr = Json::array();
  for (const auto& e : catalog.entries()) {
    Json j{{"id", e.class_id}, {"name", e.name}, {"ratio", e.nominal_ratio},
           {"symmetric", e.symmetric}};
    if (!e.group.empty()) j["group"] = e.group;
    arr.push_back(j);
  }
  return arr;
}

ObjectCatalog catalog_from_json(const Json& j) {
  return guarded("catalog", [&] {
    if (!j.is_array()) throw FormatError("catalog must be a JSON array");
    std::vector<CatalogEntry> entries;
    for (const auto& e : j)
      entries.push_back({e.at("id").get<int>(), e.at("name").get<std::string>(),
                         e.at("ratio").get<double>(), e.value("symmetric", false),
                         e.value("group", std::string{})});
    return ObjectCatalog(std::move(entries));
  });
}

ObjectCatalog read_catalog(const std::filesystem::path& path) {
  return catalog_from_json(parse(read_text(path), path.string()));
}

// ---------------------------------------------------------------------------
// Labels and predictions

Json label_to_json(const OrientedLabel& label, bool with_confidence) {
  Json verts = Json::array();
  for (const Vec2& p : label.obb.vertices()) verts.push_back({p.x, p.y});
  Json j{{"class_id", label.class_id}, {"vertices", verts}, {"theta_deg", rad_to_deg(label.theta)}};
  if (with_confidence) j["confidence"] = label.confidence;
  return j;
}

OrientedLabel label_from_json(const Json& j) {
  return guarded("label", [&] {
    const auto& v = j.at("vertices");
    if (!v.is_array() || v.size() != 4) throw FormatError("label needs exactly 4 vertices");
    std::array<Vec2, 4> pts;
    for (std::size_t i = 0; i < 4; ++i) pts[i] = {v[i].at(0).get<double>(), v[i].at(1).get<double>()};
    const Obb obb = Obb::from_vertices(pts);
    return OrientedLabel::from_obb(obb, j.at("class_id").get<int>(), j.value("confidence", 1.0));
  });
}

Json unoriented_to_json(const UnorientedLabel& p) {
  return {{"cx", p.aabb.x},
          {"cy", p.aabb.y},
          {"w", p.aabb.w},
          {"h", p.aabb.h},
          {"expanded_class", p.expanded_class},
          {"confidence", p.confidence}};
}

UnorientedLabel unoriented_from_json(const Json& j) {
  return guarded("prediction", [&] {
    UnorientedLabel p;
    p.aabb = {j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("w").get<double>(),
              j.at("h").get<double>()};
    p.expanded_class = j.at("expanded_class").get<std::int64_t>();
    p.confidence = j.value("confidence", 1.0);
    if (!(p.aabb.w > 0.0) || !(p.aabb.h > 0.0))
      throw FormatError("prediction box must have positive extents");
    if (p.expanded_class < 0) throw FormatError("expanded_class must be non-negative");
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0))
      throw FormatError("confidence must be in [0, 1]");
    return p;
  });
}

std::string labels_line(const LabelFrame& frame, bool with_confidence) {
  Json arr = Json::array();
  for (const auto& l : frame.labels) arr.push_back(label_to_json(l, with_confidence));
  return Json{{"frame", frame.frame}, {"labels", arr}}.dump();
}

LabelFrame labels_from_line(const std::string& line) {
  const Json j = parse(line, "labels line");
  return guarded("labels line", [&] {
    LabelFrame f;
    f.frame = j.at("frame").get<std::size_t>();
    for (const auto& l : j.at("labels")) f.labels.push_back(label_from_json(l));
    return f;
  });
}

std::vector<LabelFrame> read_labels_jsonl(const std::filesystem::path& path) {
  std::vector<LabelFrame> out;
  for (const auto& line : read_lines(path)) out.push_back(labels_from_line(line));
  return out;
}

void write_labels_jsonl(const std::filesystem::path& path, const std::vector<LabelFrame>& frames,
                        bool with_confidence) {
  std::string text;
  for (const auto& f : frames) text += labels_line(f, with_confidence) + "\n";
  write_text(path, text);
}

std::string preds_line(const PredFrame& frame) {
  Json arr = Json::array();
  for (const auto& p : frame.preds) arr.push_back(unoriented_to_json(p));
  return Json{{"frame", frame.frame}, {"preds", arr}}.dump();
}

PredFrame preds_from_line(const std::string& line) {
  const Json j = parse(line, "preds line");
  return guarded("preds line", [&] {
    PredFrame f;
    f.frame = j.at("frame").get<std::size_t>();
    for (const auto& p : j.at("preds")) f.preds.push_back(unoriented_from_json(p));
    return f;
  });
}

std::vector<PredFrame> read_preds_jsonl(const std::filesystem::path& path) {
  std::vector<PredFrame> out;
  for (const auto& line : read_lines(path)) out.push_back(preds_from_line(line));
  return out;
}

void write_preds_jsonl(const std::filesystem::path& path, const std::vector<PredFrame>& frames) {
  std::string text;
  for (const auto& f : frames) text += preds_line(f) + "\n";
  write_text(path, text);
}

// ---------------------------------------------------------------------------
// Manifest and matches

Json manifest_to_json(const Manifest& m) {
  Json j{{"frames", m.frames}, {"fps", m.fps}};
  if (m.camera_height_mm) j["camera_height_mm"] = *m.camera_height_mm;
  return j;
}

Manifest manifest_from_json(const Json& j) {
  return guarded("manifest", [&] {
    Manifest m;
    m.frames = j.at("frames").get<std::vector<std::string>>();
    m.fps = j.value("fps", 0.0);
    if (j.contains("camera_height_mm") && !j["camera_height_mm"].is_null())
      m.camera_height_mm = j["camera_height_mm"].get<double>();
    return m;
  });
}

Manifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_json(parse(read_text(path), path.string()));
}

std::vector<std::vector<Correspondence>> read_matches_jsonl(const std::filesystem::path& path) {
  std::vector<std::vector<Correspondence>> pairs;
  for (const auto& line : read_lines(path)) {
    const Json j = parse(line, "matches line");
    guarded("matches line", [&] {
      const auto from = j.at("from").get<std::size_t>();
      if (j.at("to").get<std::size_t>() != from + 1)
        throw FormatError("matches record must link consecutive frames");
      if (pairs.size() <= from) pairs.resize(from + 1);
      for (const auto& m : j.at("matches")) {
        if (m.size() != 4) throw FormatError("match must be [sx, sy, dx, dy]");
        pairs[from].push_back({{m[0].get<double>(), m[1].get<double>()},
                               {m[2].get<double>(), m[3].get<double>()}});
      }
      return 0;
    });
  }
  return pairs;
}

std::string matches_line(std::size_t from, const std::vector<Correspondence>& matches) {
  Json arr = Json::array();
  for (const auto& m : matches) arr.push_back({m.src.x, m.src.y, m.dst.x, m.dst.y});
  return Json{{"from", from}, {"to", from + 1}, {"matches", arr}}.dump();
}

// ---------------------------------------------------------------------------
// Reports

Json report_to_json(const EvalReport& r) {
  auto aggregate = [](const AggregateReport& a) {
    return Json{{"name", a.name},          {"precision", a.precision}, {"recall", a.recall},
                {"fscore", a.fscore},      {"mean_iou", opt(a.mean_iou)},
                {"mean_oiou", opt(a.mean_oiou)}, {"ap", a.ap}};
  };
  Json classes = Json::array();
  for (const auto& c : r.classes) {
    classes.push_back({{"class_id", c.class_id},
                       {"name", c.name},
                       {"group", c.group},
                       {"gt_count", c.gt_count},
                       {"tp", c.tp},
                       {"fp", c.fp},
                       {"fn", c.fn},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"fscore", c.fscore},
                       {"mean_iou", opt(c.mean_iou)},
                       {"mean_oiou", opt(c.mean_oiou)},
                       {"ap", c.ap},
                       {"pr_curve",
                        {{"thresholds", c.curve.thresholds},
                         {"precision", c.curve.precision},
                         {"recall", c.curve.recall}}}});
  }
  Json groups = Json::array();
  for (const auto& g : r.groups) groups.push_back(aggregate(g));
  return {{"theta_hat_deg", rad_to_deg(r.theta_hat)},
          {"operating_threshold", r.operating_threshold},
          {"classes", classes},
          {"groups", groups},
          {"global", aggregate(r.global)},
          {"map", r.map}};
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "Index,Precision,Recall,FScore,IOU,OIOU,AP\n";
  auto row = [&](const std::string& name, double p, double rc, double f,
                 const std::optional<double>& iou, const std::optional<double>& oiou, double ap) {
    os << name << ',' << fmt(p) << ',' << fmt(rc) << ',' << fmt(f) << ',' << fmt_opt(iou) << ','
       << fmt_opt(oiou) << ',' << fmt(ap) << '\n';
  };
  auto class_row = [&](const ClassReport& c) {
    row(c.name, c.precision, c.recall, c.fscore, c.mean_iou, c.mean_oiou, c.ap);
  };
  for (const auto& c : r.classes)
    if (c.gt_count > 0 && c.group.empty()) class_row(c);
  for (const auto& g : r.groups) {
    for (const auto& c : r.classes)
      if (c.gt_count > 0 && c.group == g.name) class_row(c);
    row(g.name, g.precision, g.recall, g.fscore, g.mean_iou, g.mean_oiou, g.ap);
  }
  row("global", r.global.precision, r.global.recall, r.global.fscore, r.global.mean_iou,
      r.global.mean_oiou, r.global.ap);
  return os.str();
}

}  // namespace loopkit
