#pragma once

// On-disk formats. Coordinates are pixels; every angle on disk is in degrees.
//
//   catalog.json   [{"id", "name", "ratio", "symmetric", "group"?}, ...]
//   labels.jsonl   {"frame": i, "labels": [{"class_id", "vertices": [[x,y] x4],
//                   "theta_deg", "confidence"?}]}            one frame per line
//   preds.jsonl    {"frame": i, "preds": [{"cx","cy","w","h","expanded_class",
//                   "confidence"}]}                           one frame per line
//   manifest.json  {"frames": [paths], "fps", "camera_height_mm"?}
//   matches.jsonl  {"from": i, "to": i+1, "matches": [[sx,sy,dx,dy], ...]}

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "loopkit/encoding.hpp"
#include "loopkit/eval.hpp"
#include "loopkit/propagation.hpp"

namespace loopkit {

using Json = nlohmann::json;

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
/// Non-empty lines of a file.
std::vector<std::string> read_lines(const std::filesystem::path& path);

Json catalog_to_json(const ObjectCatalog& catalog);
ObjectCatalog catalog_from_json(const Json& j);
ObjectCatalog read_catalog(const std::filesystem::path& path);

Json label_to_json(const OrientedLabel& label, bool with_confidence = false);
/// Validates the vertices as a clockwise rectangle; theta is recomputed from
/// the vertices.
OrientedLabel label_from_json(const Json& j);

Json unoriented_to_json(const UnorientedLabel& pred);
UnorientedLabel unoriented_from_json(const Json& j);

/// One frame of labels, as stored on one labels.jsonl line.
struct LabelFrame {
  std::size_t frame = 0;
  std::vector<OrientedLabel> labels;
};

struct PredFrame {
  std::size_t frame = 0;
  std::vector<UnorientedLabel> preds;
};

std::string labels_line(const LabelFrame& frame, bool with_confidence = false);
LabelFrame labels_from_line(const std::string& line);
std::vector<LabelFrame> read_labels_jsonl(const std::filesystem::path& path);
void write_labels_jsonl(const std::filesystem::path& path, const std::vector<LabelFrame>& frames,
                        bool with_confidence = false);

std::string preds_line(const PredFrame& frame);
PredFrame preds_from_line(const std::string& line);
std::vector<PredFrame> read_preds_jsonl(const std::filesystem::path& path);
void write_preds_jsonl(const std::filesystem::path& path, const std::vector<PredFrame>& frames);

struct Manifest {
  std::vector<std::string> frames;
  double fps = 0.0;
  std::optional<double> camera_height_mm;
};

Json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const Json& j);
Manifest read_manifest(const std::filesystem::path& path);

/// Reads matches.jsonl into per-pair lists indexed by "from". Records must
/// have to == from + 1.
std::vector<std::vector<Correspondence>> read_matches_jsonl(const std::filesystem::path& path);
std::string matches_line(std::size_t from, const std::vector<Correspondence>& matches);

Json report_to_json(const EvalReport& report);
/// Index, Precision, Recall, FScore, IOU, OIOU, AP rows: classes of each
/// group followed by the group row, then the global row.
std::string report_to_csv(const EvalReport& report);

}  // namespace loopkit
