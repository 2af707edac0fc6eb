#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "loopkit/dataset.hpp"
#include "loopkit/errors.hpp"

using namespace loopkit;

namespace {

constexpr double kPi = std::numbers::pi;

struct Fixture {
  ObjectCatalog catalog = default_catalog();
  std::vector<Sprite> sprites;
  Image background = make_background(320, 240, 4);

  Fixture() {
    for (int c : {5, 8, 2}) sprites.push_back(make_object_sprite(catalog.at(c), 60, 9));
  }
};

}  // namespace

TEST(Catalog, DefaultObjects) {
  const ObjectCatalog cat = default_catalog();
  ASSERT_EQ(cat.size(), 12u);
  EXPECT_EQ(cat.at(0).name, "artifact_black");
  EXPECT_EQ(cat.at(8).name, "box_brown");
  EXPECT_TRUE(cat.at(8).symmetric);
  EXPECT_TRUE(cat.at(2).symmetric);
  EXPECT_FALSE(cat.at(5).symmetric);
  EXPECT_EQ(cat.at(0).group, "Untextured");
  EXPECT_EQ(cat.at(11).group, "Textured");
}

TEST(Sprite, AnchorHasNominalRatio) {
  Fixture f;
  for (const Sprite& s : f.sprites) {
    EXPECT_DOUBLE_EQ(obb_aspect_ratio(s.anchor), f.catalog.at(s.class_id).nominal_ratio);
    EXPECT_DOUBLE_EQ(s.anchor.width(), 60.0);
    EXPECT_DOUBLE_EQ(obb_angle(s.anchor), 0.0);
    ASSERT_EQ(s.image.channels, 4);
    const Vec2 c = s.anchor.center();
    EXPECT_EQ(s.image.px(int(c.x), int(c.y))[3], 255);
    EXPECT_EQ(s.image.width, int(std::ceil(s.anchor.width())));
    EXPECT_EQ(s.image.height, int(std::ceil(s.anchor.height())));
    // Fractional last row carries partial coverage.
    const double frac = s.anchor.height() - std::floor(s.anchor.height());
    if (frac > 0.01) EXPECT_LT(s.image.px(int(c.x), s.image.height - 1)[3], 255);
  }
}

TEST(Sprite, Deterministic) {
  const ObjectCatalog cat = default_catalog();
  EXPECT_EQ(make_object_sprite(cat.at(7), 50, 3).image, make_object_sprite(cat.at(7), 50, 3).image);
  EXPECT_EQ(make_background(64, 48, 1), make_background(64, 48, 1));
  EXPECT_FALSE(make_background(64, 48, 1) == make_background(64, 48, 2));
}

TEST(Render, EmptyPlacementsKeepBackground) {
  Fixture f;
  const FrameRecord rec = render_synthetic_frame(f.background, {});
  EXPECT_EQ(rec.image, f.background);
  EXPECT_TRUE(rec.labels.empty());
  EXPECT_EQ(rec.width, 320);
  EXPECT_EQ(rec.height, 240);
}

TEST(Render, IdentityPlacementLabelIsAnchor) {
  Fixture f;
  const Placement p{&f.sprites[0], Similarity2::identity()};
  const FrameRecord rec = render_synthetic_frame(f.background, {&p, 1});
  ASSERT_EQ(rec.labels.size(), 1u);
  EXPECT_EQ(rec.labels[0].obb, f.sprites[0].anchor);
  EXPECT_EQ(rec.labels[0].class_id, f.sprites[0].class_id);
  EXPECT_DOUBLE_EQ(rec.labels[0].confidence, 1.0);
}

TEST(Render, RotatedPlacement) {
  Fixture f;
  const Placement p{&f.sprites[1], place_sprite(f.sprites[1], {160, 120}, deg_to_rad(30))};
  const FrameRecord rec = render_synthetic_frame(f.background, {&p, 1});
  ASSERT_EQ(rec.labels.size(), 1u);
  EXPECT_NEAR(angle_distance(rec.labels[0].theta, obb_angle(f.sprites[1].anchor) + deg_to_rad(30)),
              0.0, 1e-12);
  EXPECT_NEAR(rec.labels[0].obb.center().x, 160, 1e-9);
  EXPECT_NEAR(rec.labels[0].obb.center().y, 120, 1e-9);
  // Sprite pixels replace the background at the label center.
  EXPECT_FALSE(std::equal(rec.image.px(160, 120), rec.image.px(160, 120) + 3,
                          f.background.px(160, 120)) &&
               std::equal(rec.image.px(150, 118), rec.image.px(150, 118) + 3,
                          f.background.px(150, 118)));
}

TEST(Render, OutOfFrameIsRejected) {
  Fixture f;
  const Placement p{&f.sprites[0], place_sprite(f.sprites[0], {2000, 120}, 0.0)};
  EXPECT_THROW(render_synthetic_frame(f.background, {&p, 1}), PlacementOutOfFrame);
}

TEST(Sequence, IdentityMotionsRepeatFrames) {
  Fixture f;
  const std::vector<Placement> scene{
      {&f.sprites[0], place_sprite(f.sprites[0], {100, 100}, 0.4)},
      {&f.sprites[1], place_sprite(f.sprites[1], {220, 140}, 2.0)}};
  const std::vector<Similarity2> motions(4, Similarity2::identity());
  const auto frames = generate_sequence(scene, motions, f.background);
  ASSERT_EQ(frames.size(), 5u);
  for (const auto& fr : frames) {
    EXPECT_EQ(fr.image, frames[0].image);
    ASSERT_EQ(fr.labels.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(fr.labels[i].obb, frames[0].labels[i].obb);
  }
}

TEST(Sequence, PureRotationAccumulates) {
  Fixture f;
  const Vec2 center{159.5, 119.5};
  const std::vector<Placement> scene{
      {&f.sprites[0], place_sprite(f.sprites[0], {170, 110}, 0.2)},
      {&f.sprites[2], place_sprite(f.sprites[2], {140, 130}, 1.3)}};
  const std::vector<Similarity2> motions(89, Similarity2::about(center, 1.0, deg_to_rad(1.0)));
  const auto chain = chain_motions(motions);
  const FrameRecord first = render_sequence_frame(scene, chain.front(), f.background);
  const FrameRecord last = render_sequence_frame(scene, chain.back(), f.background);
  ASSERT_EQ(last.labels.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_NEAR(angle_distance(last.labels[i].theta, first.labels[i].theta + deg_to_rad(89)), 0.0,
                1e-9);
}

TEST(Sequence, LiftShrinksGeometrically) {
  Fixture f;
  const Vec2 center{159.5, 119.5};
  const std::vector<Placement> scene{{&f.sprites[1], place_sprite(f.sprites[1], center, 0.7)}};
  const std::vector<Similarity2> motions(20, Similarity2::about(center, 0.995, 0.0));
  const auto frames = generate_sequence(scene, motions, f.background);
  const double w0 = frames[0].labels[0].obb.width(), h0 = frames[0].labels[0].obb.height();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_NEAR(frames[i].labels[0].obb.width(), w0 * std::pow(0.995, double(i)), 1e-9);
    EXPECT_NEAR(frames[i].labels[0].obb.height(), h0 * std::pow(0.995, double(i)), 1e-9);
  }
}

TEST(Sequence, ObjectsLeavingTheFrameAreDropped) {
  Fixture f;
  const std::vector<Placement> scene{
      {&f.sprites[0], place_sprite(f.sprites[0], {40, 120}, 0.0)},
      {&f.sprites[1], place_sprite(f.sprites[1], {200, 120}, 0.0)}};
  const std::vector<Similarity2> motions(3, Similarity2{1.0, 0.0, {-50, 0}});
  const auto frames = generate_sequence(scene, motions, f.background);
  EXPECT_EQ(frames[0].labels.size(), 2u);
  EXPECT_EQ(frames[3].labels.size(), 1u);
  const std::vector<Similarity2> away(1, Similarity2{1.0, 0.0, {-1000, 0}});
  EXPECT_THROW(generate_sequence(scene, away, f.background), PlacementOutOfFrame);
}

TEST(Oracle, ZeroNoiseIsExactEncoding) {
  Fixture f;
  const std::vector<Placement> scene{
      {&f.sprites[0], place_sprite(f.sprites[0], {100, 100}, 0.4)},
      {&f.sprites[1], place_sprite(f.sprites[1], {220, 140}, 2.0)}};
  const FrameRecord rec = render_synthetic_frame(f.background, scene);
  const auto q = AngleQuantizer::from_degrees(10);
  const auto preds = oracle_detector(rec, q, f.catalog, {}, 77);
  ASSERT_EQ(preds.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const UnorientedLabel e = encode_label(q, rec.labels[i]);
    EXPECT_EQ(preds[i].expanded_class, e.expanded_class);
    EXPECT_EQ(preds[i].aabb.x, e.aabb.x);
    EXPECT_EQ(preds[i].aabb.y, e.aabb.y);
    EXPECT_EQ(preds[i].aabb.w, e.aabb.w);
    EXPECT_EQ(preds[i].aabb.h, e.aabb.h);
    EXPECT_EQ(preds[i].confidence, 1.0);
  }
}

TEST(Oracle, MissEverything) {
  Fixture f;
  const Placement p{&f.sprites[0], place_sprite(f.sprites[0], {100, 100}, 0.4)};
  const FrameRecord rec = render_synthetic_frame(f.background, {&p, 1});
  NoiseModel noise;
  noise.miss_prob = 1.0;
  EXPECT_TRUE(oracle_detector(rec, AngleQuantizer::from_degrees(10), f.catalog, noise, 1).empty());
}

TEST(Oracle, SeededNoiseIsReproducible) {
  Fixture f;
  const Placement p{&f.sprites[0], place_sprite(f.sprites[0], {100, 100}, 0.4)};
  const FrameRecord rec = render_synthetic_frame(f.background, {&p, 1});
  NoiseModel noise;
  noise.center_sigma = 2.0;
  noise.clutter_rate = 3.0;
  const auto q = AngleQuantizer::from_degrees(10);
  const auto a = oracle_detector(rec, q, f.catalog, noise, 5);
  const auto b = oracle_detector(rec, q, f.catalog, noise, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].aabb.x, b[i].aabb.x);
    EXPECT_EQ(a[i].expanded_class, b[i].expanded_class);
    EXPECT_EQ(a[i].confidence, b[i].confidence);
  }
  EXPECT_LT(a[0].confidence, 1.0);
}

TEST(Oracle, FlipChangesBinNotClass) {
  Fixture f;
  const Placement p{&f.sprites[0], place_sprite(f.sprites[0], {100, 100}, 0.4)};
  const FrameRecord rec = render_synthetic_frame(f.background, {&p, 1});
  NoiseModel noise;
  noise.angle_flip_prob = 1.0;
  const auto q = AngleQuantizer::from_degrees(10);
  const auto e = encode_label(q, rec.labels[0]);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto preds = oracle_detector(rec, q, f.catalog, noise, seed);
    ASSERT_EQ(preds.size(), 1u);
    EXPECT_EQ(preds[0].expanded_class / q.k(), e.expanded_class / q.k());
    EXPECT_NE(preds[0].expanded_class, e.expanded_class);
    EXPECT_DOUBLE_EQ(preds[0].confidence, 0.5);
  }
}

TEST(Oracle, ClutterRateIsMean) {
  Fixture f;
  const FrameRecord rec = render_synthetic_frame(f.background, {});
  NoiseModel noise;
  noise.clutter_rate = 0.5;
  const auto q = AngleQuantizer::from_degrees(10);
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    const auto preds = oracle_detector(rec, q, f.catalog, noise, seed);
    for (const auto& p : preds) {
      EXPECT_LT(p.confidence, 0.5);
      EXPECT_LT(p.expanded_class, q.expanded_count(12));
    }
    total += preds.size();
  }
  EXPECT_NEAR(double(total) / 4000.0, 0.5, 0.05);
}

TEST(Oracle, NoiseValidation) {
  NoiseModel n;
  n.miss_prob = 1.5;
  EXPECT_THROW(n.validate(), InvalidArgument);
  n = {};
  n.center_sigma = -1;
  EXPECT_THROW(n.validate(), InvalidArgument);
}

TEST(Motions, ChainComposesInOrder) {
  const auto motions = camera_motions(5, {10, 10}, 0.1, 0.99, 0.5, 3);
  const auto chain = chain_motions(motions);
  ASSERT_EQ(chain.size(), 6u);
  const Vec2 p{4, 7};
  Vec2 q = p;
  for (const auto& m : motions) q = m(q);
  EXPECT_NEAR((chain.back()(p) - q).norm(), 0.0, 1e-12);
  for (const auto& m : motions) {
    EXPECT_DOUBLE_EQ(m.scale, 0.99);
    EXPECT_NEAR(m.rotation, 0.1, 1e-15);
  }
}
