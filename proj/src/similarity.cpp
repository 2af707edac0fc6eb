#include <cmath>
#include <random>

#include "loopkit/errors.hpp"
#include "loopkit/propagation.hpp"

namespace loopkit {

Similarity2 estimate_similarity_lsq(std::span<const Correspondence> matches) {
  if (matches.size() < 2) throw InsufficientMatches("need at least 2 correspondences");

  const double n = static_cast<double>(matches.size());
  Vec2 mean_src{}, mean_dst{};
  for (const auto& m : matches) {
    mean_src = mean_src + m.src;
    mean_dst = mean_dst + m.dst;
  }
  mean_src = (1.0 / n) * mean_src;
  mean_dst = (1.0 / n) * mean_dst;

  // With points as complex numbers the optimum is a = sum(conj(s) d) / sum(|s|^2)
  // over centered coordinates; |a| is the scale and arg(a) the rotation.
  double spread = 0.0, re = 0.0, im = 0.0;
  for (const auto& m : matches) {
    const Vec2 s = m.src - mean_src;
    const Vec2 d = m.dst - mean_dst;
    spread += dot(s, s);
    re += dot(s, d);
    im += cross(s, d);
  }
  if (spread <= 1e-18 * (1.0 + dot(mean_src, mean_src)))
    throw DegenerateConfiguration("all source points coincide");

  const double scale = std::hypot(re, im) / spread;
  if (!(scale > 1e-12)) throw DegenerateConfiguration("destination points coincide");
  Similarity2 t{scale, std::atan2(im, re), {}};
  t.translation = mean_dst - scale * rotate(mean_src, t.rotation);
  return t;
}

double similarity_sse(const Similarity2& t, std::span<const Correspondence> matches) {
  double sse = 0.0;
  for (const auto& m : matches) {
    const Vec2 r = t(m.src) - m.dst;
    sse += dot(r, r);
  }
  return sse;
}

namespace {

std::size_t mark_inliers(const Similarity2& t, std::span<const Correspondence> matches,
                         double threshold_sq, std::vector<bool>& mask) {
  mask.assign(matches.size(), false);
  std::size_t count = 0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Vec2 r = t(matches[i].src) - matches[i].dst;
    if (dot(r, r) < threshold_sq) {
      mask[i] = true;
      ++count;
    }
  }
  return count;
}

std::vector<Correspondence> select(std::span<const Correspondence> matches,
                                   const std::vector<bool>& mask) {
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < matches.size(); ++i)
    if (mask[i]) out.push_back(matches[i]);
  return out;
}

}  // namespace

SimilarityEstimate estimate_similarity_ransac(std::span<const Correspondence> matches,
                                              const RansacConfig& config) {
  if (matches.size() < 2) throw InsufficientMatches("need at least 2 correspondences");
  if (config.iterations < 1) throw InvalidArgument("ransac needs at least one iteration");
  if (!(config.inlier_threshold > 0.0)) throw InvalidArgument("inlier threshold must be positive");

  const double threshold_sq = config.inlier_threshold * config.inlier_threshold;
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, matches.size() - 1);

  std::vector<bool> mask, best_mask;
  std::size_t best_count = 0;
  for (int it = 0; it < config.iterations; ++it) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    if (i == j) continue;
    const Correspondence sample[2] = {matches[i], matches[j]};
    if ((sample[0].src - sample[1].src).norm() < 1e-9) continue;
    Similarity2 model;
    try {
      model = estimate_similarity_lsq(sample);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    const std::size_t count = mark_inliers(model, matches, threshold_sq, mask);
    if (count > best_count) {
      best_count = count;
      best_mask.swap(mask);
    }
  }
  if (best_count < 2) throw NoConsensus("fewer than 2 inliers for every sampled model");

  // Refit on the consensus set until the set stops changing.
  SimilarityEstimate est;
  est.inlier_mask = best_mask;
  for (int round = 0; round < 5; ++round) {
    const auto inliers = select(matches, est.inlier_mask);
    if (inliers.size() < 2) throw NoConsensus("refit left fewer than 2 inliers");
    est.transform = estimate_similarity_lsq(inliers);
    std::vector<bool> next;
    est.inlier_count = mark_inliers(est.transform, matches, threshold_sq, next);
    const bool stable = next == est.inlier_mask;
    est.inlier_mask.swap(next);
    if (stable) break;
  }
  if (est.inlier_count < 2) throw NoConsensus("refit left fewer than 2 inliers");
  const auto inliers = select(matches, est.inlier_mask);
  est.inlier_rms = std::sqrt(similarity_sse(est.transform, inliers) / double(inliers.size()));
  return est;
}

}  // namespace loopkit
