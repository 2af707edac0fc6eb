#pragma once

// Whole-sequence operations shared by the CLI and the HTTP service.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "loopkit/dataset.hpp"
#include "loopkit/io.hpp"
#include "loopkit/propagation.hpp"

namespace loopkit {

/// Tunables accepted by `propagate` on the command line and over HTTP.
struct PropagationSettings {
  RansacConfig ransac;
  MatcherConfig matcher;
  int threads = 0;
};

Json settings_to_json(const PropagationSettings& s);
/// Missing keys keep their defaults; unknown keys are rejected.
PropagationSettings settings_from_json(const Json& j);

struct PropagateRequest {
  Manifest manifest;
  /// Directory that relative frame paths are resolved against.
  std::filesystem::path base_dir;
  /// Labels of frame `from_frame`.
  std::vector<OrientedLabel> seed;
  std::size_t from_frame = 0;
  /// Existing labels; frames before `from_frame` are carried over verbatim.
  std::vector<LabelFrame> previous;
  /// Precomputed matches indexed by pair start frame; the built-in matcher
  /// runs on the frame images when absent.
  std::optional<std::vector<std::vector<Correspondence>>> matches;
  PropagationSettings settings;
};

struct PropagateOutcome {
  std::vector<LabelFrame> frames;
  std::vector<DroppedLabel> dropped;
  /// Set when estimation failed between broken_at and broken_at + 1; frames
  /// holds the valid prefix.
  std::optional<std::size_t> broken_at;
  std::string error;
};

std::filesystem::path resolve_frame(const PropagateRequest& req, std::size_t index);

/// Propagates `seed` from `from_frame` to the end of the sequence.
PropagateOutcome run_propagation(const PropagateRequest& req);

std::string labels_jsonl(const std::vector<LabelFrame>& frames);

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::size_t frames = 100;
  int width = 640;
  int height = 480;
  double rotation_deg = 0.5;   // per frame
  double scale = 0.999;        // per frame
  double jitter = 1.0;         // px, per frame
  std::size_t objects = 12;
  int sprite_length = 70;
  double arrangement_radius = 170.0;
  std::uint64_t seed = 7;
  bool write_images = true;
  // Oracle detector output written next to the ground truth.
  double theta_hat_deg = 10.0;
  NoiseModel noise;
  std::uint64_t detector_seed = 11;
};

struct SynthResult {
  ObjectCatalog catalog;
  std::vector<Similarity2> chain;
  std::vector<FrameRecord> frames;  // images dropped after writing
  std::vector<PredFrame> preds;
};

/// Generates a camera-motion sequence over a random desk arrangement and
/// writes frames/, manifest.json, catalog.json, labels.jsonl (ground truth),
/// seed.jsonl (frame 0) and preds.jsonl (oracle detector) into `out_dir`.
SynthResult synthesize(const std::filesystem::path& out_dir, const SynthOptions& options);

/// Builds the scene for `options` (sprites + arrangement + background)
/// without rendering; useful for in-memory tests.
struct SynthScene {
  ObjectCatalog catalog;
  std::vector<Sprite> sprites;
  std::vector<Placement> placements;
  Image background;
  std::vector<Similarity2> motions;
};
/// Placements point into `scene.sprites`; do not copy the scene.
void build_scene(const SynthOptions& options, SynthScene& scene);

}  // namespace loopkit
