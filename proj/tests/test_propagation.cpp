#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "loopkit/dataset.hpp"
#include "loopkit/errors.hpp"
#include "loopkit/pipeline.hpp"
#include "loopkit/propagation.hpp"

using namespace loopkit;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Correspondence> synth_matches(const Similarity2& t, std::size_t n, std::uint64_t seed,
                                          Vec2 origin = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-100, 100);
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = origin + Vec2{u(rng), u(rng)};
    out.push_back({p, t(p)});
  }
  return out;
}

Image crop(const Image& src, int x0, int y0, int w, int h) {
  Image out(w, h, src.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      std::copy_n(src.px(x0 + x, y0 + y), src.channels, out.px(x, y));
  return out;
}

Image textured_frame(int w, int h, std::uint64_t seed) {
  SynthOptions o;
  o.width = w;
  o.height = h;
  o.objects = 6;
  o.arrangement_radius = std::min(w, h) / 3.0;
  o.seed = seed;
  o.frames = 1;
  SynthScene scene;
  build_scene(o, scene);
  return render_synthetic_frame(scene.background, scene.placements).image;
}

}  // namespace

TEST(SimilarityLsq, Identity) {
  const auto m = synth_matches(Similarity2::identity(), 5, 1);
  const Similarity2 t = estimate_similarity_lsq(m);
  EXPECT_NEAR(t.scale, 1.0, 1e-12);
  EXPECT_NEAR(t.rotation, 0.0, 1e-12);
  EXPECT_NEAR(t.translation.norm(), 0.0, 1e-10);
}

TEST(SimilarityLsq, Translation) {
  const auto m = synth_matches({1.0, 0.0, {5, -3}}, 2, 2);
  const Similarity2 t = estimate_similarity_lsq(m);
  EXPECT_NEAR(t.scale, 1.0, 1e-12);
  EXPECT_NEAR(t.rotation, 0.0, 1e-12);
  EXPECT_NEAR(t.translation.x, 5.0, 1e-10);
  EXPECT_NEAR(t.translation.y, -3.0, 1e-10);
}

TEST(SimilarityLsq, RecoversParameters) {
  const Similarity2 truth{1.1, kPi / 6, {2, 1}};
  const Similarity2 t = estimate_similarity_lsq(synth_matches(truth, 50, 3));
  EXPECT_NEAR(t.scale, 1.1, 1e-9);
  EXPECT_NEAR(t.rotation, kPi / 6, 1e-9);
  EXPECT_NEAR(t.translation.x, 2, 1e-9);
  EXPECT_NEAR(t.translation.y, 1, 1e-9);
  EXPECT_NEAR(similarity_sse(t, synth_matches(truth, 50, 3)), 0.0, 1e-12);
}

TEST(SimilarityLsq, Errors) {
  EXPECT_THROW(estimate_similarity_lsq(synth_matches(Similarity2::identity(), 1, 4)),
               InsufficientMatches);
  const std::vector<Correspondence> same{{{1, 1}, {2, 2}}, {{1, 1}, {3, 3}}};
  EXPECT_THROW(estimate_similarity_lsq(same), DegenerateConfiguration);
}

TEST(Ransac, CleanDataMatchesLsq) {
  const auto m = synth_matches({0.9, 2.0, {10, -4}}, 60, 5);
  const SimilarityEstimate est = estimate_similarity_ransac(m);
  const Similarity2 lsq = estimate_similarity_lsq(m);
  EXPECT_EQ(est.inlier_count, m.size());
  EXPECT_NEAR(est.transform.scale, lsq.scale, 1e-9);
  EXPECT_NEAR(est.transform.rotation, lsq.rotation, 1e-9);
  EXPECT_NEAR(est.transform.translation.x, lsq.translation.x, 1e-7);
  EXPECT_NEAR(est.transform.translation.y, lsq.translation.y, 1e-7);
  EXPECT_NEAR(est.inlier_rms, 0.0, 1e-9);
}

TEST(Ransac, RejectsOutliers) {
  const Similarity2 truth{1.05, 0.4, {12, -7}};
  auto m = synth_matches(truth, 200, 6);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-150, 150);
  std::vector<bool> outlier(m.size(), false);
  for (std::size_t i = 0; i < 60; ++i) {
    m[i].dst = {u(rng), u(rng)};
    outlier[i] = true;
  }
  RansacConfig cfg;
  cfg.inlier_threshold = 1.0;
  const SimilarityEstimate est = estimate_similarity_ransac(m, cfg);
  EXPECT_NEAR(est.transform.rotation, 0.4, 1e-3);
  EXPECT_NEAR(est.transform.scale, 1.05, 1.05e-3);
  EXPECT_NEAR(est.transform.translation.x, 12, 0.1);
  EXPECT_NEAR(est.transform.translation.y, -7, 0.1);
  ASSERT_EQ(est.inlier_mask.size(), m.size());
  for (std::size_t i = 60; i < m.size(); ++i) EXPECT_TRUE(est.inlier_mask[i]);
}

TEST(Ransac, DeterministicForSeed) {
  auto m = synth_matches({1.0, 0.1, {1, 1}}, 50, 8);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-100, 100);
  for (std::size_t i = 0; i < 20; ++i) m[i].dst = {u(rng), u(rng)};
  const auto a = estimate_similarity_ransac(m, {200, 1.0, 42});
  const auto b = estimate_similarity_ransac(m, {200, 1.0, 42});
  EXPECT_EQ(a.transform.scale, b.transform.scale);
  EXPECT_EQ(a.transform.rotation, b.transform.rotation);
  EXPECT_EQ(a.transform.translation, b.transform.translation);
  EXPECT_EQ(a.inlier_mask, b.inlier_mask);
}

TEST(Ransac, Errors) {
  EXPECT_THROW(estimate_similarity_ransac(synth_matches(Similarity2::identity(), 1, 1)),
               InsufficientMatches);
  // Coincident sources make every 2-point sample degenerate.
  const std::vector<Correspondence> bad{{{3, 3}, {0, 0}}, {{3, 3}, {50, 0}}, {{3, 3}, {0, -80}}};
  EXPECT_THROW(estimate_similarity_ransac(bad, {100, 1.0, 0}), NoConsensus);
}

TEST(Matcher, IdenticalImages) {
  const Image img = textured_frame(320, 240, 11);
  const auto m = detect_and_match(img, img);
  ASSERT_GE(m.size(), 20u);
  for (const auto& c : m) EXPECT_EQ(c.src, c.dst);
}

TEST(Matcher, IntegerShift) {
  const Image big = textured_frame(400, 320, 12);
  const int dx = 7, dy = -4;
  const Image a = crop(big, 40, 40, 320, 240);
  const Image b = crop(big, 40 - dx, 40 - dy, 320, 240);
  const auto m = detect_and_match(a, b);
  ASSERT_GE(m.size(), 20u);
  std::size_t good = 0;
  for (const auto& c : m)
    if ((c.dst - c.src - Vec2{double(dx), double(dy)}).norm() <= 0.5) ++good;
  EXPECT_GE(double(good) / double(m.size()), 0.9);
}

TEST(Matcher, BlankFramesHaveNoFeatures) {
  const Image blank(200, 150, 3, 128);
  EXPECT_THROW(detect_and_match(blank, blank), NoFeatures);
}

TEST(Propagate, IdentityChainKeepsLabels) {
  std::vector<std::vector<Correspondence>> pairs(9, synth_matches(Similarity2::identity(), 20, 3));
  const std::vector<OrientedLabel> seed{
      OrientedLabel::from_obb(Obb::from_center({50, 60}, 40, 20, 0.3), 2),
      OrientedLabel::from_obb(Obb::from_center({150, 90}, 30, 30, 4.0), 0)};
  const SequenceLabels out = propagate_labels(10, seed, FixedMatchProvider(pairs));
  ASSERT_EQ(out.frames.size(), 10u);
  for (const auto& f : out.frames) {
    ASSERT_EQ(f.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_EQ(f[i].class_id, seed[i].class_id);
      for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(f[i].obb[k].x, seed[i].obb[k].x, 1e-9);
        EXPECT_NEAR(f[i].obb[k].y, seed[i].obb[k].y, 1e-9);
      }
    }
  }
}

TEST(Propagate, ExactCorrespondencesHundredFrames) {
  const Vec2 center{319.5, 239.5};
  const auto motions = camera_motions(100, center, deg_to_rad(0.5), 0.999, 1.0, 21);
  const auto chain = chain_motions(motions);
  std::vector<std::vector<Correspondence>> pairs;
  for (std::size_t i = 0; i < motions.size(); ++i)
    pairs.push_back(synth_matches(motions[i], 40, i, center));
  const std::vector<OrientedLabel> seed{
      OrientedLabel::from_obb(Obb::from_center({300, 200}, 80, 32, 1.0), 5),
      OrientedLabel::from_obb(Obb::from_center({380, 260}, 50, 40, 2.5), 1)};
  const SequenceLabels out = propagate_labels(101, seed, FixedMatchProvider(pairs));
  ASSERT_EQ(out.frames.size(), 101u);
  for (std::size_t f = 0; f <= 100; ++f) {
    for (std::size_t i = 0; i < seed.size(); ++i) {
      const Obb truth = transform_obb(chain[f], seed[i].obb);
      for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(out.frames[f][i].obb[k].x, truth[k].x, 1e-6);
        EXPECT_NEAR(out.frames[f][i].obb[k].y, truth[k].y, 1e-6);
      }
    }
  }
}

TEST(Propagate, BrokenPairReturnsPrefix) {
  std::vector<std::vector<Correspondence>> pairs(6, synth_matches({1, 0, {1, 0}}, 20, 4));
  pairs[3].resize(1);
  const std::vector<OrientedLabel> seed{
      OrientedLabel::from_obb(Obb::from_center({50, 60}, 40, 20, 0.3), 2)};
  try {
    propagate_labels(7, seed, FixedMatchProvider(pairs));
    FAIL() << "expected PropagationBroken";
  } catch (const PropagationBroken& e) {
    EXPECT_EQ(e.frame(), 3u);
    ASSERT_EQ(e.partial().frames.size(), 4u);
    EXPECT_NEAR(e.partial().frames[3][0].obb.center().x, 53.0, 1e-9);
    EXPECT_NE(std::string(e.what()).find("InsufficientMatches"), std::string::npos);
  }
}

TEST(Propagate, DropsLabelsThatLeaveTheFrame) {
  std::vector<std::vector<Correspondence>> pairs(4, synth_matches({1, 0, {40, 0}}, 20, 4));
  const std::vector<OrientedLabel> seed{
      OrientedLabel::from_obb(Obb::from_center({150, 50}, 20, 10, 0.0), 0),
      OrientedLabel::from_obb(Obb::from_center({20, 50}, 20, 10, 0.0), 1)};
  PropagationConfig cfg;
  cfg.frame_width = 200;
  cfg.frame_height = 100;
  std::vector<DroppedLabel> seen;
  cfg.on_drop = [&](const DroppedLabel& d) { seen.push_back(d); };
  const SequenceLabels out = propagate_labels(5, seed, FixedMatchProvider(pairs), cfg);
  // Seed 0 leaves at frame 2 (center 230, box spans 220..240 beyond 199.5).
  ASSERT_EQ(out.dropped.size(), 1u);
  EXPECT_EQ(out.dropped[0].frame, 2u);
  EXPECT_EQ(out.dropped[0].seed_index, 0u);
  EXPECT_EQ(seen.size(), 1u);
  EXPECT_EQ(out.frames[1].size(), 2u);
  ASSERT_EQ(out.frames[2].size(), 1u);
  EXPECT_EQ(out.seed_index[2][0], 1u);
  EXPECT_EQ(out.frames[4][0].class_id, 1);
}

TEST(Propagate, RenderedFramesStayOnTarget) {
  SynthOptions o;
  o.frames = 31;
  SynthScene scene;
  build_scene(o, scene);
  const auto chain = chain_motions(scene.motions);
  std::vector<Image> images;
  for (const auto& c : chain)
    images.push_back(render_sequence_frame(scene.placements, c, scene.background).image);
  const FrameRecord first = render_sequence_frame(scene.placements, chain[0], scene.background);
  const ImageMatchProvider provider([&](std::size_t i) { return images[i]; });
  const SequenceLabels out = propagate_labels(images.size(), first.labels, provider);
  const FrameRecord last = render_sequence_frame(scene.placements, chain.back(), scene.background);
  ASSERT_EQ(out.frames.back().size(), last.labels.size());
  double err = 0.0;
  for (std::size_t i = 0; i < last.labels.size(); ++i)
    for (int k = 0; k < 4; ++k) err += (out.frames.back()[i].obb[k] - last.labels[i].obb[k]).norm();
  EXPECT_LE(err / (4.0 * last.labels.size()), 1.0);
}
