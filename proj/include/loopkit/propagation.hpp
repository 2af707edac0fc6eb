#pragma once

// Label propagation across a video: estimate the similarity transform between
// consecutive frames from point correspondences and carry first-frame labels
// forward through the chain.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loopkit/encoding.hpp"
#include "loopkit/errors.hpp"
#include "loopkit/geometry.hpp"
#include "loopkit/image.hpp"

namespace loopkit {

struct Correspondence {
  Vec2 src;  // frame i
  Vec2 dst;  // frame i + 1
};

struct Keypoint {
  Vec2 position;
  double response = 0.0;
  std::vector<float> descriptor;  // zero-mean unit-norm patch
};

struct SimilarityEstimate {
  Similarity2 transform;
  std::size_t inlier_count = 0;
  double inlier_rms = 0.0;
  std::vector<bool> inlier_mask;
};

/// Closed-form least-squares similarity (Umeyama without reflection).
/// Throws InsufficientMatches for fewer than 2 matches and
/// DegenerateConfiguration when all source points coincide.
Similarity2 estimate_similarity_lsq(std::span<const Correspondence> matches);

/// Sum of squared residuals |t(src) - dst|^2.
double similarity_sse(const Similarity2& t, std::span<const Correspondence> matches);

struct RansacConfig {
  int iterations = 1000;
  double inlier_threshold = 2.0;  // px
  std::uint64_t seed = 0;
};

/// 2-point RANSAC; the winning consensus set is refit with
/// estimate_similarity_lsq and the final mask is recomputed against the
/// refit model. Deterministic for a fixed seed. Throws InsufficientMatches or
/// NoConsensus (fewer than 2 inliers).
SimilarityEstimate estimate_similarity_ransac(std::span<const Correspondence> matches,
                                              const RansacConfig& config = {});

struct MatcherConfig {
  int max_corners = 400;
  int min_corners = 8;
  int min_distance = 8;          // px between retained corners
  double harris_k = 0.04;
  double quality = 0.01;         // fraction of the strongest response
  int patch_radius = 5;          // NCC patch is (2r+1)^2
  double search_radius = 24.0;   // px, max displacement between frames
  double min_ncc = 0.8;
  double ratio = 0.9;            // second-best NCC must be below ratio * best
  int refine_radius = 2;         // px, max sub-pixel refinement travel
};

/// Harris corners with non-maximum suppression and a minimum spacing,
/// strongest first. Each carries its NCC patch descriptor.
std::vector<Keypoint> detect_corners(const GrayImage& img, const MatcherConfig& config = {});

/// Corner + NCC matcher: mutual-best matches within the search radius that
/// pass the ratio test. The destination is refined to sub-pixel precision by
/// translational Lucas-Kanade on the source patch. Reentrant.
/// Throws NoFeatures if either image has fewer than min_corners corners.
std::vector<Correspondence> detect_and_match(const GrayImage& a, const GrayImage& b,
                                             const MatcherConfig& config = {});
std::vector<Correspondence> detect_and_match(const Image& a, const Image& b,
                                             const MatcherConfig& config = {});

/// Source of correspondences for consecutive frame pairs (from, from + 1).
/// All built-in providers are reentrant.
class CorrespondenceProvider {
 public:
  virtual ~CorrespondenceProvider() = default;
  virtual std::vector<Correspondence> matches(std::size_t from) const = 0;
};

/// Matches rendered frames loaded on demand through `load_frame`.
class ImageMatchProvider : public CorrespondenceProvider {
 public:
  ImageMatchProvider(std::function<Image(std::size_t)> load_frame, MatcherConfig config = {})
      : load_frame_(std::move(load_frame)), config_(config) {}
  std::vector<Correspondence> matches(std::size_t from) const override;

 private:
  std::function<Image(std::size_t)> load_frame_;
  MatcherConfig config_;
};

/// Precomputed matches, e.g. from an external matcher file; entry i holds
/// the matches for the pair (i, i + 1).
class FixedMatchProvider : public CorrespondenceProvider {
 public:
  explicit FixedMatchProvider(std::vector<std::vector<Correspondence>> pairs)
      : pairs_(std::move(pairs)) {}
  std::vector<Correspondence> matches(std::size_t from) const override;

 private:
  std::vector<std::vector<Correspondence>> pairs_;
};

struct DroppedLabel {
  std::size_t frame = 0;
  std::size_t seed_index = 0;
};

struct SequenceLabels {
  std::vector<std::vector<OrientedLabel>> frames;
  /// Index of the seed label each entry of `frames[i]` descends from.
  std::vector<std::vector<std::size_t>> seed_index;
  /// pairwise[i] maps frame i to frame i + 1.
  std::vector<Similarity2> pairwise;
  /// chained[i] maps frame 0 to frame i; chained[0] is the identity.
  std::vector<Similarity2> chained;
  std::vector<SimilarityEstimate> estimates;
  std::vector<DroppedLabel> dropped;
};

/// Estimation failed between frames `frame` and `frame + 1`. The labels for
/// frames 0..frame are available in `partial`.
class PropagationBroken : public Error {
 public:
  PropagationBroken(std::size_t frame, const std::string& reason, SequenceLabels partial)
      : Error("PropagationBroken",
              "propagation broken between frames " + std::to_string(frame) + " and " +
                  std::to_string(frame + 1) + ": " + reason),
        frame_(frame),
        partial_(std::move(partial)) {}

  std::size_t frame() const { return frame_; }
  const SequenceLabels& partial() const { return partial_; }

 private:
  std::size_t frame_;
  SequenceLabels partial_;
};

struct PropagationConfig {
  RansacConfig ransac;
  /// Frame extent used to drop labels that leave the image entirely; a
  /// non-positive size disables the check.
  int frame_width = 0;
  int frame_height = 0;
  /// Workers for pairwise estimation; 0 uses the hardware concurrency.
  int threads = 0;
  /// Called for every dropped label, if set.
  std::function<void(const DroppedLabel&)> on_drop;
};

/// Carries `seed` (the labels of frame 0) through `frame_count` frames.
/// Throws PropagationBroken when a pair fails to estimate.
SequenceLabels propagate_labels(std::size_t frame_count, std::span<const OrientedLabel> seed,
                                const CorrespondenceProvider& provider,
                                const PropagationConfig& config = {});

}  // namespace loopkit
