#pragma once

#include <vector>

#include "loopkit/dataset.hpp"
#include "loopkit/eval.hpp"
#include "loopkit/pipeline.hpp"

namespace fixtures {

using namespace loopkit;

/// Ground-truth-only frames of a camera-motion sequence (no rasters).
inline std::vector<FrameRecord> label_frames(const SynthOptions& o) {
  SynthScene scene;
  build_scene(o, scene);
  const Aabb region = frame_region(o.width, o.height);
  std::vector<FrameRecord> out;
  for (const auto& chain : chain_motions(scene.motions)) {
    FrameRecord rec;
    rec.width = o.width;
    rec.height = o.height;
    for (const auto& p : scene.placements) {
      const Obb box = transform_obb(chain * p.pose, p.sprite->anchor);
      if (area_inside(box, region) > 0.0)
        rec.labels.push_back(OrientedLabel::from_obb(box, p.sprite->class_id));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<EvalFrame> oracle_frames(const std::vector<FrameRecord>& frames,
                                            const AngleQuantizer& q, const ObjectCatalog& catalog,
                                            const NoiseModel& noise, std::uint64_t seed) {
  std::vector<EvalFrame> out;
  for (std::size_t i = 0; i < frames.size(); ++i)
    out.push_back({oracle_detector(frames[i], q, catalog, noise, seed + i), frames[i].labels});
  return out;
}

}  // namespace fixtures
