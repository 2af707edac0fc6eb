#pragma once

// Synthetic desk scenes: procedural object sprites composited on textured
// backgrounds, camera-motion sequences with analytic ground truth, and an
// oracle detector that stands in for a trained network.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "loopkit/encoding.hpp"
#include "loopkit/geometry.hpp"
#include "loopkit/image.hpp"

namespace loopkit {

struct Sprite {
  int class_id = 0;
  Image image;  // RGBA
  /// Label box in sprite pixel coordinates (pixel centers on integers).
  Obb anchor = Obb::from_center({}, 1.0, 1.0, 0.0);
};

struct Placement {
  const Sprite* sprite = nullptr;
  /// Maps sprite coordinates to frame coordinates.
  Similarity2 pose;
};

struct FrameRecord {
  Image image;  // RGB; may be empty for label-only records
  int width = 0;
  int height = 0;
  std::string path;
  std::vector<OrientedLabel> labels;
};

/// Detector error model for oracle_detector. Confidence of a detection is
///   exp(-0.5 * (|dc| / (0.05 * sqrt(W * H)))^2) * exp(-|ln(W'/W)| - |ln(H'/H)|)
/// halved again for an angle flip, so it is 1 for an unperturbed detection
/// and falls with the perturbation. Clutter boxes draw confidence from
/// U[0, clutter_max_confidence).
struct NoiseModel {
  double center_sigma = 0.0;       // px
  double size_sigma = 0.0;         // relative
  double angle_flip_prob = 0.0;
  double miss_prob = 0.0;
  double clutter_rate = 0.0;       // expected false positives per frame
  double clutter_max_confidence = 0.5;

  void validate() const;
};

/// Sprite of the catalog entry's nominal aspect ratio. `length` is the pixel
/// size of the long side. Textured classes get a random pattern; every sprite
/// carries an arrow glyph along +x so its orientation is unambiguous.
Sprite make_object_sprite(const CatalogEntry& entry, int length, std::uint64_t seed);

/// Textured RGB background rich in corners.
Image make_background(int width, int height, std::uint64_t seed);

/// Pose that rotates the sprite by `theta` about its anchor center, scales it
/// and moves that center to `center`.
Similarity2 place_sprite(const Sprite& sprite, Vec2 center, double theta, double scale = 1.0);

/// Alpha-composites the placements over `background` in order. Labels are
/// the transformed anchors. Throws PlacementOutOfFrame if an anchor ends up
/// entirely outside the frame.
FrameRecord render_synthetic_frame(const Image& background, std::span<const Placement> placements);

/// Frame-to-frame camera motions; motions[i] maps frame i to frame i + 1.
/// Returns the chain frame 0 -> frame i for i in [0, motions.size()].
std::vector<Similarity2> chain_motions(std::span<const Similarity2> motions);

/// Renders the scene as seen after each chained motion: the background and
/// every placement move together. Ground truth is computed analytically from
/// the chain. Objects that leave the frame are omitted from that frame;
/// throws PlacementOutOfFrame if a frame loses every object.
std::vector<FrameRecord> generate_sequence(std::span<const Placement> scene,
                                           std::span<const Similarity2> motions,
                                           const Image& background);

/// Renders the scene seen through one chained camera motion (an element of
/// chain_motions). Same rules as generate_sequence.
FrameRecord render_sequence_frame(std::span<const Placement> scene, const Similarity2& chain,
                                  const Image& background);

/// Simulated detector output for one frame, deterministic per seed.
std::vector<UnorientedLabel> oracle_detector(const FrameRecord& frame, const AngleQuantizer& q,
                                             const ObjectCatalog& catalog,
                                             const NoiseModel& noise, std::uint64_t seed);

/// The twelve desk objects (six untextured, six textured) used for the
/// default synthetic scenes.
ObjectCatalog default_catalog();

/// Motion of a camera rotating about and lifting along its optical axis:
/// per-frame rotation and scale about the image center plus a uniform
/// translation jitter in [-jitter, jitter]^2.
std::vector<Similarity2> camera_motions(std::size_t count, Vec2 image_center, double rotation,
                                        double scale, double jitter, std::uint64_t seed);

/// Random non-overlapping arrangement of one sprite per entry (or as many as
/// fit) inside a centered disc of `radius`.
std::vector<Placement> random_arrangement(std::span<const Sprite> sprites, Vec2 center,
                                          double radius, std::uint64_t seed);

}  // namespace loopkit
