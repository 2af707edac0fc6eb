#include "loopkit/geometry.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "loopkit/errors.hpp"

namespace loopkit {

namespace {

constexpr double kRectTol = 1e-6;
constexpr double kMinSide = 1e-9;

bool all_finite(const std::array<Vec2, 4>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); });
}

}  // namespace

double wrap_angle(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative value can round back up to exactly 2*pi.
  if (a >= kTwoPi) a = 0.0;
  return a + 0.0;
}

double wrap_angle_signed(double angle) {
  double a = wrap_angle(angle + std::numbers::pi) - std::numbers::pi;
  return a;
}

double angle_distance(double a, double b) {
  return std::abs(wrap_angle_signed(a - b));
}

// ---------------------------------------------------------------------------
// Obb

Obb Obb::from_vertices(const std::array<Vec2, 4>& v) {
  if (!all_finite(v)) throw InvalidArgument("obb vertices must be finite");
  const Vec2 e01 = v[1] - v[0];
  const Vec2 e03 = v[3] - v[0];
  const Vec2 e32 = v[2] - v[3];
  const Vec2 e12 = v[2] - v[1];
  const double w = e01.norm();
  const double h = e03.norm();
  if (w < kMinSide || h < kMinSide) throw DegenerateBox("obb has a zero-length edge");
  const double scale = std::max(w, h);
  if (std::abs(e32.norm() - w) > kRectTol * scale || std::abs(e12.norm() - h) > kRectTol * scale)
    throw InvalidArgument("obb opposite sides differ in length");
  if (std::abs(dot(e01, e03)) > kRectTol * w * h)
    throw InvalidArgument("obb adjacent sides are not orthogonal");
  if ((v[2] - (v[1] + e03)).norm() > kRectTol * scale)
    throw InvalidArgument("obb vertices do not close a rectangle");
  if (cross(e01, e03) <= 0.0) throw InvalidArgument("obb vertices are not in clockwise order");
  return Obb(v);
}

Obb Obb::from_center(Vec2 center, double width, double height, double theta) {
  if (!(width >= kMinSide) || !(height >= kMinSide))
    throw DegenerateBox("obb width and height must be positive");
  const double hw = 0.5 * width;
  const double hh = 0.5 * height;
  return Obb({center + rotate({-hw, -hh}, theta), center + rotate({hw, -hh}, theta),
              center + rotate({hw, hh}, theta), center + rotate({-hw, hh}, theta)});
}

Vec2 Obb::center() const { return 0.5 * (vertices_[0] + vertices_[2]); }

Vec2 Obb::x_axis() const {
  const Vec2 d = vertices_[1] - vertices_[0];
  return (1.0 / d.norm()) * d;
}

Obb Obb::flipped() const {
  return Obb({vertices_[2], vertices_[3], vertices_[0], vertices_[1]});
}

// ---------------------------------------------------------------------------
// Similarity2

Similarity2 Similarity2::about(Vec2 pivot, double scale, double rotation, Vec2 shift) {
  Similarity2 t{scale, wrap_angle_signed(rotation), {}};
  t.translation = pivot - scale * rotate(pivot, rotation) + shift;
  return t;
}

Similarity2 Similarity2::inverse() const {
  const double inv_scale = 1.0 / scale;
  return {inv_scale, wrap_angle_signed(-rotation),
          -inv_scale * rotate(translation, -rotation)};
}

Similarity2 operator*(const Similarity2& a, const Similarity2& b) {
  return {a.scale * b.scale, wrap_angle_signed(a.rotation + b.rotation),
          a.scale * rotate(b.translation, a.rotation) + a.translation};
}

// ---------------------------------------------------------------------------
// Box operations

double obb_angle(const Obb& obb) {
  const Vec2 v = obb[1] - obb[0];
  if (v.norm() < kMinSide) throw DegenerateBox("obb has a zero-length first edge");
  const double a = std::atan2(v.y, v.x);
  if (v.y >= 0.0) return a + 0.0;
  const double wrapped = kTwoPi + a;
  return wrapped >= kTwoPi ? 0.0 : wrapped;
}

Aabb aabb_of_obb(const Obb& obb) {
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (const Vec2& p : obb.vertices()) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  return {0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y), hi_x - lo_x, hi_y - lo_y};
}

double obb_aspect_ratio(const Obb& obb) {
  const double w = obb.width();
  const double h = obb.height();
  if (w < kMinSide || h < kMinSide) throw DegenerateBox("obb side shorter than 1e-9");
  return w / h;
}

Obb reconstruct_obb(const Aabb& aabb, double theta, double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw InvalidArgument("aspect ratio must be positive");
  if (!(aabb.w > 0.0) || !(aabb.h > 0.0)) throw InvalidArgument("aabb extents must be positive");

  // Unit-width seed centered on the origin; ties on the leftmost x keep the
  // lowest vertex index.
  const Obb seed = Obb::from_center({}, 1.0, 1.0 / ratio, theta);
  std::size_t leftmost = 0;
  for (std::size_t i = 1; i < 4; ++i)
    if (seed[i].x < seed[leftmost].x) leftmost = i;
  const double lm_x = seed[leftmost].x;
  if (std::abs(lm_x) < 1e-9)
    throw DegenerateReconstruction("leftmost seed vertex lies on the center column");

  const double s = -aabb.w / (2.0 * lm_x);
  const Vec2 c{aabb.x, aabb.y};
  std::array<Vec2, 4> v;
  for (std::size_t i = 0; i < 4; ++i) v[i] = c + s * seed[i];
  return Obb::from_vertices(v);
}

Obb transform_obb(const Similarity2& t, const Obb& obb) {
  std::array<Vec2, 4> v;
  for (std::size_t i = 0; i < 4; ++i) v[i] = t(obb[i]);
  return Obb::from_vertices(v);
}

// ---------------------------------------------------------------------------
// Polygon clipping

double polygon_signed_area(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) acc += cross(poly[j], poly[i]);
  return 0.5 * acc;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  std::vector<Vec2> in;
  const std::size_t m = clip.size();
  for (std::size_t e1 = m - 1, e2 = 0; e2 < m && !out.empty(); e1 = e2++) {
    in.swap(out);
    out.clear();
    const Vec2 a = clip[e1];
    const Vec2 edge = clip[e2] - a;
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 cur = in[i];
      const Vec2 prev = in[(i + n - 1) % n];
      const double d_cur = cross(edge, cur - a);
      const double d_prev = cross(edge, prev - a);
      const bool cur_in = d_cur >= 0.0;
      const bool prev_in = d_prev >= 0.0;
      if (cur_in != prev_in) {
        const double t = d_prev / (d_prev - d_cur);
        out.push_back(prev + t * (cur - prev));
      }
      if (cur_in) out.push_back(cur);
    }
  }
  return out;
}

double intersection_area(const Obb& a, const Obb& b) {
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  const auto poly = clip_convex(va, vb);
  return std::max(0.0, polygon_signed_area(poly));
}

double polygon_iou(const Obb& a, const Obb& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double oriented_iou(const Obb& pred, const Obb& gt) {
  const double cosine = dot(pred.x_axis(), gt.x_axis());
  return polygon_iou(pred, gt) * std::clamp(cosine, 0.0, 1.0);
}

double area_inside(const Obb& obb, const Aabb& region) {
  const std::array<Vec2, 4> rect{Vec2{region.min_x(), region.min_y()},
                                 Vec2{region.max_x(), region.min_y()},
                                 Vec2{region.max_x(), region.max_y()},
                                 Vec2{region.min_x(), region.max_y()}};
  return std::max(0.0, polygon_signed_area(clip_convex(obb.vertices(), rect)));
}

}  // namespace loopkit
