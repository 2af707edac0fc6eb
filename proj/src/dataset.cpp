#include "loopkit/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "loopkit/errors.hpp"

namespace loopkit {

namespace {

using Rgb = std::array<double, 3>;

Rgb random_color(std::mt19937_64& rng, double lo = 20.0, double hi = 235.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Premultiplied RGBA sample with transparent outside the raster.
std::array<double, 4> sample_premultiplied(const Image& rgba, Vec2 p) {
  const int x0 = static_cast<int>(std::floor(p.x));
  const int y0 = static_cast<int>(std::floor(p.y));
  const double fx = p.x - x0;
  const double fy = p.y - y0;
  std::array<double, 4> acc{};
  const int xs[2] = {x0, x0 + 1};
  const int ys[2] = {y0, y0 + 1};
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      const int x = xs[i];
      const int y = ys[j];
      if (x < 0 || y < 0 || x >= rgba.width || y >= rgba.height) continue;
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      const std::uint8_t* px = rgba.px(x, y);
      const double a = px[3] / 255.0;
      acc[0] += w * px[0] * a;
      acc[1] += w * px[1] * a;
      acc[2] += w * px[2] * a;
      acc[3] += w * a;
    }
  return acc;
}

/// Bilinear RGB sample; points outside the raster read as black.
Rgb sample_rgb(const Image& rgb, Vec2 p) {
  const int x0 = static_cast<int>(std::floor(p.x));
  const int y0 = static_cast<int>(std::floor(p.y));
  const double fx = p.x - x0;
  const double fy = p.y - y0;
  Rgb acc{};
  const int xs[2] = {x0, x0 + 1};
  const int ys[2] = {y0, y0 + 1};
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      const int x = xs[i];
      const int y = ys[j];
      if (x < 0 || y < 0 || x >= rgb.width || y >= rgb.height) continue;
      const double w = wx[i] * wy[j];
      const std::uint8_t* px = rgb.px(x, y);
      for (int c = 0; c < 3; ++c) acc[c] += w * px[c];
    }
  return acc;
}

/// Pixel bounds of the transformed rectangle, clipped to the frame.
struct PixelRect {
  int x0, y0, x1, y1;  // inclusive
};

PixelRect pixel_bounds(const std::array<Vec2, 4>& corners, int width, int height) {
  double lo_x = corners[0].x, hi_x = lo_x, lo_y = corners[0].y, hi_y = lo_y;
  for (const Vec2& c : corners) {
    lo_x = std::min(lo_x, c.x);
    hi_x = std::max(hi_x, c.x);
    lo_y = std::min(lo_y, c.y);
    hi_y = std::max(hi_y, c.y);
  }
  return {std::max(0, static_cast<int>(std::floor(lo_x)) - 1),
          std::max(0, static_cast<int>(std::floor(lo_y)) - 1),
          std::min(width - 1, static_cast<int>(std::ceil(hi_x)) + 1),
          std::min(height - 1, static_cast<int>(std::ceil(hi_y)) + 1)};
}

void composite(Image& frame, const Sprite& sprite, const Similarity2& pose) {
  const Similarity2 inv = pose.inverse();
  const double w = sprite.image.width;
  const double h = sprite.image.height;
  const std::array<Vec2, 4> corners{pose({-1.0, -1.0}), pose({w, -1.0}), pose({w, h}),
                                    pose({-1.0, h})};
  const PixelRect r = pixel_bounds(corners, frame.width, frame.height);
  for (int y = r.y0; y <= r.y1; ++y)
    for (int x = r.x0; x <= r.x1; ++x) {
      const auto s = sample_premultiplied(sprite.image, inv({double(x), double(y)}));
      if (s[3] <= 0.0) continue;
      std::uint8_t* px = frame.px(x, y);
      for (int c = 0; c < 3; ++c) px[c] = to_byte(s[c] + (1.0 - s[3]) * px[c]);
    }
}

Image warp_background(const Image& background, const Similarity2& chain) {
  Image out(background.width, background.height, 3);
  const Similarity2 inv = chain.inverse();
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const Rgb c = sample_rgb(background, inv({double(x), double(y)}));
      std::uint8_t* px = out.px(x, y);
      for (int k = 0; k < 3; ++k) px[k] = to_byte(c[k]);
    }
  return out;
}

void fill_disc(Image& img, Vec2 c, double radius, const Rgb& color, double alpha = 1.0) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(c.x + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(c.y + radius)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if ((Vec2{double(x), double(y)} - c).norm() > radius) continue;
      std::uint8_t* px = img.px(x, y);
      for (int k = 0; k < 3; ++k) px[k] = to_byte(alpha * color[k] + (1.0 - alpha) * px[k]);
    }
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, const Rgb& color) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width - 1);
  y1 = std::min(y1, img.height - 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      std::uint8_t* px = img.px(x, y);
      for (int k = 0; k < 3; ++k) px[k] = to_byte(color[k]);
    }
}

/// Fills the triangle (a, b, c) on an RGB(A) image, leaving alpha untouched.
void fill_triangle(Image& img, Vec2 a, Vec2 b, Vec2 c, const Rgb& color) {
  const double lo_x = std::min({a.x, b.x, c.x}), hi_x = std::max({a.x, b.x, c.x});
  const double lo_y = std::min({a.y, b.y, c.y}), hi_y = std::max({a.y, b.y, c.y});
  const double area = cross(b - a, c - a);
  if (std::abs(area) < 1e-9) return;
  for (int y = std::max(0, int(std::floor(lo_y))); y <= std::min(img.height - 1, int(hi_y)); ++y)
    for (int x = std::max(0, int(std::floor(lo_x))); x <= std::min(img.width - 1, int(hi_x));
         ++x) {
      const Vec2 p{double(x), double(y)};
      const double w0 = cross(b - a, p - a) / area;
      const double w1 = cross(c - b, p - b) / area;
      const double w2 = cross(a - c, p - c) / area;
      if (w0 < 0 || w1 < 0 || w2 < 0) continue;
      std::uint8_t* px = img.px(x, y);
      for (int k = 0; k < 3; ++k) px[k] = to_byte(color[k]);
    }
}

double coverage_1d(double pixel_center, double lo, double hi) {
  return std::clamp(std::min(pixel_center + 0.5, hi) - std::max(pixel_center - 0.5, lo), 0.0, 1.0);
}

}  // namespace

void NoiseModel::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!(center_sigma >= 0.0) || !(size_sigma >= 0.0))
    throw InvalidArgument("noise sigmas must be non-negative");
  if (!prob(angle_flip_prob) || !prob(miss_prob))
    throw InvalidArgument("noise probabilities must be in [0, 1]");
  if (!(clutter_rate >= 0.0)) throw InvalidArgument("clutter rate must be non-negative");
  if (!prob(clutter_max_confidence))
    throw InvalidArgument("clutter confidence bound must be in [0, 1]");
}

Sprite make_object_sprite(const CatalogEntry& entry, int length, std::uint64_t seed) {
  if (length < 8) throw InvalidArgument("sprite length must be at least 8 px");
  const double ratio = entry.nominal_ratio;
  const double w = ratio >= 1.0 ? double(length) : length * ratio;
  const double h = ratio >= 1.0 ? length / ratio : double(length);
  const int pw = static_cast<int>(std::ceil(w));
  const int ph = static_cast<int>(std::ceil(h));

  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (entry.class_id + 1)));
  Image img(pw, ph, 4);
  const Rgb body = random_color(rng, 40.0, 215.0);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) {
      std::uint8_t* px = img.px(x, y);
      const double shade = 0.85 + 0.15 * double(x) / pw;
      for (int k = 0; k < 3; ++k) px[k] = to_byte(body[k] * shade);
      const double cov = coverage_1d(x, -0.5, w - 0.5) * coverage_1d(y, -0.5, h - 0.5);
      px[3] = to_byte(255.0 * cov);
    }

  if (entry.group != "Untextured") {
    std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h), us(2.0, std::max(3.0, h / 3));
    for (int i = 0; i < 12; ++i) {
      const double cx = ux(rng), cy = uy(rng), s = us(rng);
      fill_rect(img, int(cx - s), int(cy - s / 2), int(cx + s), int(cy + s / 2),
                random_color(rng));
    }
  }
  // Arrow along +x and a ring on the tail end break every symmetry.
  const Vec2 c{0.5 * (w - 1.0), 0.5 * (h - 1.0)};
  const double m = std::min(w, h);
  const Rgb ink{20.0, 20.0, 20.0};
  fill_rect(img, int(c.x - 0.30 * w), int(c.y - 0.08 * m), int(c.x + 0.15 * w),
            int(c.y + 0.08 * m), ink);
  fill_triangle(img, {c.x + 0.15 * w, c.y - 0.25 * m}, {c.x + 0.42 * w, c.y},
                {c.x + 0.15 * w, c.y + 0.25 * m}, ink);
  fill_disc(img, {c.x - 0.36 * w, c.y}, 0.18 * m, {245.0, 245.0, 245.0});
  fill_disc(img, {c.x - 0.36 * w, c.y}, 0.09 * m, ink);

  return {entry.class_id, std::move(img), Obb::from_center(c, w, h, 0.0)};
}

Image make_background(int width, int height, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw InvalidArgument("background size must be positive");
  std::mt19937_64 rng(seed);
  Image img(width, height, 3);
  const Rgb a = random_color(rng, 60, 200), b = random_color(rng, 60, 200);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double t = (double(x) / width + double(y) / height) * 0.5;
      std::uint8_t* px = img.px(x, y);
      for (int k = 0; k < 3; ++k) px[k] = to_byte((1 - t) * a[k] + t * b[k]);
    }
  const int shapes = std::max(50, width * height / 600);
  std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height), us(3.0, 18.0),
      coin(0.0, 1.0);
  for (int i = 0; i < shapes; ++i) {
    const double cx = ux(rng), cy = uy(rng), s = us(rng);
    const Rgb color = random_color(rng);
    if (coin(rng) < 0.6)
      fill_rect(img, int(cx - s), int(cy - 0.6 * s), int(cx + s), int(cy + 0.6 * s), color);
    else
      fill_disc(img, {cx, cy}, 0.7 * s, color, 0.9);
  }
  return img;
}

Similarity2 place_sprite(const Sprite& sprite, Vec2 center, double theta, double scale) {
  const Vec2 c = sprite.anchor.center();
  const Similarity2 to_origin{1.0, 0.0, -1.0 * c};
  const Similarity2 pose{scale, wrap_angle_signed(theta), center};
  return pose * to_origin;
}

FrameRecord render_synthetic_frame(const Image& background,
                                   std::span<const Placement> placements) {
  if (background.channels != 3) throw InvalidArgument("background must be RGB");
  FrameRecord rec;
  rec.image = background;
  rec.width = background.width;
  rec.height = background.height;
  const Aabb region = frame_region(rec.width, rec.height);
  for (const auto& p : placements) {
    if (!p.sprite) throw InvalidArgument("placement without sprite");
    const Obb label = transform_obb(p.pose, p.sprite->anchor);
    if (area_inside(label, region) <= 0.0)
      throw PlacementOutOfFrame("sprite of class " + std::to_string(p.sprite->class_id) +
                                " placed outside the frame");
    composite(rec.image, *p.sprite, p.pose);
    rec.labels.push_back(OrientedLabel::from_obb(label, p.sprite->class_id));
  }
  return rec;
}

std::vector<Similarity2> chain_motions(std::span<const Similarity2> motions) {
  std::vector<Similarity2> chain{Similarity2::identity()};
  for (const auto& m : motions) chain.push_back(m * chain.back());
  return chain;
}

FrameRecord render_sequence_frame(std::span<const Placement> scene, const Similarity2& chain,
                                  const Image& background) {
  const Aabb region = frame_region(background.width, background.height);
  std::vector<Placement> visible;
  for (const auto& p : scene) {
    const Placement moved{p.sprite, chain * p.pose};
    if (area_inside(transform_obb(moved.pose, p.sprite->anchor), region) > 0.0)
      visible.push_back(moved);
  }
  if (visible.empty() && !scene.empty())
    throw PlacementOutOfFrame("camera motion moved every object out of the frame");
  return render_synthetic_frame(warp_background(background, chain), visible);
}

std::vector<FrameRecord> generate_sequence(std::span<const Placement> scene,
                                           std::span<const Similarity2> motions,
                                           const Image& background) {
  std::vector<FrameRecord> frames;
  for (const auto& chain : chain_motions(motions))
    frames.push_back(render_sequence_frame(scene, chain, background));
  return frames;
}

std::vector<UnorientedLabel> oracle_detector(const FrameRecord& frame, const AngleQuantizer& q,
                                             const ObjectCatalog& catalog,
                                             const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<UnorientedLabel> out;
  for (const auto& gt : frame.labels) {
    // Draw every variate even when unused so one label's noise does not
    // depend on the flags that applied to the previous one.
    const double miss = unit(rng);
    const double dx = gauss(rng), dy = gauss(rng), dw = gauss(rng), dh = gauss(rng);
    const double flip = unit(rng);
    const double flip_bin = unit(rng);
    if (miss < noise.miss_prob) continue;

    UnorientedLabel det = encode_label(q, gt);
    const Aabb truth = det.aabb;
    det.aabb.x += noise.center_sigma * dx;
    det.aabb.y += noise.center_sigma * dy;
    det.aabb.w = std::max(1.0, truth.w * (1.0 + noise.size_sigma * dw));
    det.aabb.h = std::max(1.0, truth.h * (1.0 + noise.size_sigma * dh));

    double confidence = 1.0;
    const double shift = std::hypot(det.aabb.x - truth.x, det.aabb.y - truth.y);
    const double ref = 0.05 * std::sqrt(truth.w * truth.h);
    confidence *= std::exp(-0.5 * (shift / ref) * (shift / ref));
    confidence *= std::exp(-std::abs(std::log(det.aabb.w / truth.w)) -
                           std::abs(std::log(det.aabb.h / truth.h)));
    if (flip < noise.angle_flip_prob && q.k() > 1) {
      const std::int64_t base = (det.expanded_class / q.k()) * q.k();
      const std::int64_t bin = det.expanded_class % q.k();
      const auto offset = 1 + static_cast<std::int64_t>(flip_bin * (q.k() - 1)) % (q.k() - 1);
      det.expanded_class = base + (bin + offset) % q.k();
      confidence *= 0.5;
    }
    det.confidence = std::clamp(confidence, 0.0, 1.0);
    out.push_back(det);
  }

  if (noise.clutter_rate > 0.0 && frame.width > 0 && frame.height > 0 && catalog.size() > 0) {
    std::poisson_distribution<int> count(noise.clutter_rate);
    const int n = count(rng);
    const auto classes = q.expanded_count(static_cast<std::int64_t>(catalog.size()));
    for (int i = 0; i < n; ++i) {
      UnorientedLabel c;
      c.aabb.x = unit(rng) * frame.width;
      c.aabb.y = unit(rng) * frame.height;
      c.aabb.w = 20.0 + 100.0 * unit(rng);
      c.aabb.h = 20.0 + 100.0 * unit(rng);
      c.expanded_class = std::min<std::int64_t>(classes - 1,
                                                static_cast<std::int64_t>(unit(rng) * classes));
      c.confidence = unit(rng) * noise.clutter_max_confidence;
      out.push_back(c);
    }
  }
  return out;
}

ObjectCatalog default_catalog() {
  const std::array<std::pair<const char*, double>, 12> objects{{
      {"artifact_black", 1.6},
      {"artifact_metal", 1.3},
      {"artifact_orange", 1.1},
      {"artifact_white", 1.8},
      {"clip", 2.2},
      {"screwdriver", 2.5},
      {"battery_black", 2.0},
      {"battery_green", 1.9},
      {"box_brown", 1.2},
      {"box_yellow", 1.5},
      {"glue", 2.3},
      {"pendrive", 1.7},
  }};
  std::vector<CatalogEntry> entries;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const bool textured = i >= 6;
    const std::string name = objects[i].first;
    entries.push_back({static_cast<int>(i), name, objects[i].second,
                       name == "artifact_orange" || name == "box_brown",
                       textured ? "Textured" : "Untextured"});
  }
  return ObjectCatalog(std::move(entries));
}

std::vector<Similarity2> camera_motions(std::size_t count, Vec2 image_center, double rotation,
                                        double scale, double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Similarity2> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec2 shift{jitter * u(rng), jitter * u(rng)};
    out.push_back(Similarity2::about(image_center, scale, rotation, shift));
  }
  return out;
}

std::vector<Placement> random_arrangement(std::span<const Sprite> sprites, Vec2 center,
                                          double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Placement> out;
  std::vector<Obb> taken;
  for (const auto& sprite : sprites) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double r = radius * std::sqrt(unit(rng));
      const double phi = kTwoPi * unit(rng);
      const double theta = kTwoPi * unit(rng);
      const Vec2 c = center + Vec2{r * std::cos(phi), r * std::sin(phi)};
      const Similarity2 pose = place_sprite(sprite, c, theta);
      const Obb box = transform_obb(pose, sprite.anchor);
      // Inflated copy keeps a gap between objects.
      const Obb padded = Obb::from_center(box.center(), box.width() + 6, box.height() + 6,
                                          obb_angle(box));
      const bool overlaps = std::any_of(taken.begin(), taken.end(), [&](const Obb& o) {
        return intersection_area(padded, o) > 0.0;
      });
      if (overlaps) continue;
      taken.push_back(box);
      out.push_back({&sprite, pose});
      break;
    }
  }
  return out;
}

}  // namespace loopkit
