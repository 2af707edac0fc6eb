#include "loopkit/pipeline.hpp"

#include <cstdio>
#include <set>

#include "loopkit/errors.hpp"

namespace loopkit {

namespace fs = std::filesystem;

Json settings_to_json(const PropagationSettings& s) {
  return {{"iterations", s.ransac.iterations},
          {"inlier_threshold", s.ransac.inlier_threshold},
          {"ransac_seed", s.ransac.seed},
          {"max_corners", s.matcher.max_corners},
          {"min_corners", s.matcher.min_corners},
          {"search_radius", s.matcher.search_radius},
          {"min_ncc", s.matcher.min_ncc},
          {"ratio", s.matcher.ratio},
          {"threads", s.threads}};
}

PropagationSettings settings_from_json(const Json& j) {
  PropagationSettings s;
  if (j.is_null()) return s;
  if (!j.is_object()) throw FormatError("propagation config must be an object");
  static const std::set<std::string> known{"iterations", "inlier_threshold", "ransac_seed",
                                           "max_corners", "min_corners",      "search_radius",
                                           "min_ncc",     "ratio",            "threads"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw FormatError("unknown propagation setting '" + key + "'");
  try {
    s.ransac.iterations = j.value("iterations", s.ransac.iterations);
    s.ransac.inlier_threshold = j.value("inlier_threshold", s.ransac.inlier_threshold);
    s.ransac.seed = j.value("ransac_seed", s.ransac.seed);
    s.matcher.max_corners = j.value("max_corners", s.matcher.max_corners);
    s.matcher.min_corners = j.value("min_corners", s.matcher.min_corners);
    s.matcher.search_radius = j.value("search_radius", s.matcher.search_radius);
    s.matcher.min_ncc = j.value("min_ncc", s.matcher.min_ncc);
    s.matcher.ratio = j.value("ratio", s.matcher.ratio);
    s.threads = j.value("threads", s.threads);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("propagation config: ") + e.what());
  }
  if (s.ransac.iterations < 1) throw FormatError("iterations must be >= 1");
  if (!(s.ransac.inlier_threshold > 0.0)) throw FormatError("inlier_threshold must be > 0");
  return s;
}

fs::path resolve_frame(const PropagateRequest& req, std::size_t index) {
  const fs::path p = req.manifest.frames.at(index);
  return p.is_absolute() ? p : req.base_dir / p;
}

namespace {

/// Shifts pair indices so the propagation core always starts at 0.
class OffsetProvider : public CorrespondenceProvider {
 public:
  OffsetProvider(const CorrespondenceProvider& inner, std::size_t offset)
      : inner_(inner), offset_(offset) {}
  std::vector<Correspondence> matches(std::size_t from) const override {
    return inner_.matches(from + offset_);
  }

 private:
  const CorrespondenceProvider& inner_;
  std::size_t offset_;
};

}  // namespace

PropagateOutcome run_propagation(const PropagateRequest& req) {
  const std::size_t n = req.manifest.frames.size();
  if (n == 0) throw InvalidArgument("manifest lists no frames");
  if (req.from_frame >= n) throw InvalidArgument("from_frame is past the last frame");
  if (req.seed.empty()) throw InvalidArgument("seed annotation is empty");

  PropagateOutcome out;
  for (const auto& f : req.previous)
    if (f.frame < req.from_frame) out.frames.push_back(f);
  std::sort(out.frames.begin(), out.frames.end(),
            [](const LabelFrame& a, const LabelFrame& b) { return a.frame < b.frame; });

  std::unique_ptr<CorrespondenceProvider> provider;
  if (req.matches) {
    provider = std::make_unique<FixedMatchProvider>(*req.matches);
  } else {
    provider = std::make_unique<ImageMatchProvider>(
        [&req](std::size_t i) { return read_png(resolve_frame(req, i)); }, req.settings.matcher);
  }
  const OffsetProvider shifted(*provider, req.from_frame);

  PropagationConfig config;
  config.ransac = req.settings.ransac;
  config.threads = req.settings.threads;
  const fs::path first = resolve_frame(req, req.from_frame);
  if (!req.matches || fs::exists(first)) {
    const Image img = read_png(first);
    config.frame_width = img.width;
    config.frame_height = img.height;
  }

  auto emit = [&](const SequenceLabels& labels) {
    for (std::size_t i = 0; i < labels.frames.size(); ++i)
      out.frames.push_back({req.from_frame + i, labels.frames[i]});
    for (auto d : labels.dropped) {
      d.frame += req.from_frame;
      out.dropped.push_back(d);
    }
  };
  try {
    emit(propagate_labels(n - req.from_frame, req.seed, shifted, config));
  } catch (const PropagationBroken& e) {
    emit(e.partial());
    out.broken_at = req.from_frame + e.frame();
    out.error = e.what();
  }
  return out;
}

std::string labels_jsonl(const std::vector<LabelFrame>& frames) {
  std::string text;
  for (const auto& f : frames) text += labels_line(f) + "\n";
  return text;
}

// ---------------------------------------------------------------------------

void build_scene(const SynthOptions& o, SynthScene& scene) {
  if (o.frames == 0) throw InvalidArgument("need at least one frame");
  scene.catalog = default_catalog();
  const std::size_t count = std::min(o.objects, scene.catalog.size());
  scene.sprites.clear();
  for (std::size_t c = 0; c < count; ++c)
    scene.sprites.push_back(make_object_sprite(scene.catalog.entries()[c], o.sprite_length, o.seed));
  const Vec2 center{0.5 * (o.width - 1), 0.5 * (o.height - 1)};
  scene.placements = random_arrangement(scene.sprites, center, o.arrangement_radius, o.seed + 1);
  scene.background = make_background(o.width, o.height, o.seed + 2);
  scene.motions = camera_motions(o.frames - 1, center, deg_to_rad(o.rotation_deg), o.scale,
                                 o.jitter, o.seed + 3);
}

SynthResult synthesize(const fs::path& out_dir, const SynthOptions& o) {
  SynthScene scene;
  build_scene(o, scene);

  fs::create_directories(o.write_images ? out_dir / "frames" : out_dir);
  SynthResult result;
  result.catalog = scene.catalog;
  result.chain = chain_motions(scene.motions);

  const AngleQuantizer q = AngleQuantizer::from_degrees(o.theta_hat_deg);
  Manifest manifest;
  manifest.fps = 30.0;
  std::vector<LabelFrame> labels;
  for (std::size_t i = 0; i < result.chain.size(); ++i) {
    FrameRecord rec = render_sequence_frame(scene.placements, result.chain[i], scene.background);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.png", i);
    rec.path = (fs::path("frames") / name).string();
    if (o.write_images) write_png(out_dir / rec.path, rec.image);
    manifest.frames.push_back(rec.path);
    labels.push_back({i, rec.labels});
    result.preds.push_back({i, oracle_detector(rec, q, scene.catalog, o.noise, o.detector_seed + i)});
    rec.image = Image{};
    result.frames.push_back(std::move(rec));
  }

  write_text(out_dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  write_text(out_dir / "catalog.json", catalog_to_json(scene.catalog).dump(2) + "\n");
  write_labels_jsonl(out_dir / "labels.jsonl", labels);
  write_labels_jsonl(out_dir / "seed.jsonl", {labels.front()});
  write_preds_jsonl(out_dir / "preds.jsonl", result.preds);
  return result;
}

}  // namespace loopkit
