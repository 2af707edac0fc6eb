#pragma once

// Planar box geometry in image coordinates (x right, y down). Angles are
// radians, positive clockwise on screen, normalized to [0, 2*pi) where an
// angle is reported.

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace loopkit {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Rotates `v` by `angle` (clockwise on screen, counter-clockwise in the
/// usual y-up reading of the same formula).
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into [0, 2*pi).
double wrap_angle(double angle);
/// Wraps an angle into [-pi, pi).
double wrap_angle_signed(double angle);
/// Smallest absolute difference between two angles, in [0, pi].
double angle_distance(double a, double b);

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Axis-aligned box given by its center and full extents.
struct Aabb {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double min_x() const { return x - 0.5 * w; }
  double max_x() const { return x + 0.5 * w; }
  double min_y() const { return y - 0.5 * h; }
  double max_y() const { return y + 0.5 * h; }
  bool contains(Vec2 p, double tol = 0.0) const {
    return p.x >= min_x() - tol && p.x <= max_x() + tol && p.y >= min_y() - tol &&
           p.y <= max_y() + tol;
  }
};

/// Oriented box stored as four vertices p0..p3, clockwise on screen, so that
/// p1 - p0 is the box's x direction and p3 - p0 its y direction.
///
/// Instances are always valid rectangles: the only way in is through the
/// validating factories.
class Obb {
 public:
  /// Checks the rectangle invariants (opposite sides equal and adjacent sides
  /// orthogonal within 1e-6 relative, clockwise order). Throws DegenerateBox
  /// for a zero-length edge and InvalidArgument for a non-rectangle.
  static Obb from_vertices(const std::array<Vec2, 4>& vertices);
  /// Box of size width x height (width along p1 - p0) centered at `center`
  /// and rotated by `theta`.
  static Obb from_center(Vec2 center, double width, double height, double theta);

  const std::array<Vec2, 4>& vertices() const { return vertices_; }
  const Vec2& operator[](std::size_t i) const { return vertices_[i]; }

  Vec2 center() const;
  double width() const { return (vertices_[1] - vertices_[0]).norm(); }
  double height() const { return (vertices_[3] - vertices_[0]).norm(); }
  double area() const { return width() * height(); }
  /// Unit vector along p1 - p0.
  Vec2 x_axis() const;

  /// Same rectangle relabeled to start from the opposite corner (a 180 degree
  /// flip of the orientation).
  Obb flipped() const;

  friend bool operator==(const Obb&, const Obb&) = default;

 private:
  explicit Obb(const std::array<Vec2, 4>& v) : vertices_(v) {}
  std::array<Vec2, 4> vertices_;
};

/// 4-DoF planar similarity: p -> scale * R(rotation) * p + translation.
struct Similarity2 {
  double scale = 1.0;
  double rotation = 0.0;
  Vec2 translation{};

  static Similarity2 identity() { return {}; }
  /// Rotation and scaling about `pivot`, followed by `shift`.
  static Similarity2 about(Vec2 pivot, double scale, double rotation, Vec2 shift = {});

  Vec2 apply(Vec2 p) const { return scale * rotate(p, rotation) + translation; }
  Vec2 operator()(Vec2 p) const { return apply(p); }
  Similarity2 inverse() const;
};

/// Composition: (a * b)(p) == a(b(p)). Rotation is kept in [-pi, pi).
Similarity2 operator*(const Similarity2& a, const Similarity2& b);

/// Angle of p1 - p0 with the image x axis, in [0, 2*pi).
double obb_angle(const Obb& obb);
/// Tightest axis-aligned box around the four vertices.
Aabb aabb_of_obb(const Obb& obb);
/// |p1 - p0| / |p3 - p0|. Throws DegenerateBox if either side is below 1e-9.
double obb_aspect_ratio(const Obb& obb);

/// Rebuilds an oriented box from an axis-aligned one, an angle and an aspect
/// ratio. A unit-width seed box with the requested ratio is rotated by
/// `theta` about the aabb center, then scaled uniformly so that its leftmost
/// vertex lands on the aabb's left edge. Only the left-edge constraint is
/// enforced; the aabb height does not enter the result.
///
/// Throws DegenerateReconstruction when the seed's leftmost vertex sits on
/// the center column (|x| < 1e-9), InvalidArgument for ratio <= 0 or a
/// non-positive aabb extent.
Obb reconstruct_obb(const Aabb& aabb, double theta, double ratio);

Obb transform_obb(const Similarity2& t, const Obb& obb);

/// Signed shoelace area; positive for clockwise-on-screen vertex order.
double polygon_signed_area(std::span<const Vec2> poly);

/// Clips `subject` against the convex polygon `clip` (Sutherland-Hodgman).
/// `clip` must have positive signed area.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

double intersection_area(const Obb& a, const Obb& b);
double polygon_iou(const Obb& a, const Obb& b);
/// IoU scaled by max(cos(angle between the two x axes), 0).
double oriented_iou(const Obb& pred, const Obb& gt);

/// Area of `obb` that lies inside the axis-aligned `region`.
double area_inside(const Obb& obb, const Aabb& region);

/// Region covered by a width x height raster whose pixel centers sit on
/// integer coordinates.
inline Aabb frame_region(int width, int height) {
  return {0.5 * (width - 1), 0.5 * (height - 1), double(width), double(height)};
}

}  // namespace loopkit
