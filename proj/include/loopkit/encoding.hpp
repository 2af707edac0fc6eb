#pragma once

// Orientation-as-class codec. An oriented label (box, angle, class c) is
// turned into an axis-aligned detector label whose class jointly encodes c
// and the quantized angle, and back.

#include <cstdint>
#include <string>
#include <vector>

#include "loopkit/geometry.hpp"

namespace loopkit {

/// Uniform angle binning with step theta_hat and k = ceil(2*pi / theta_hat)
/// bins.
class AngleQuantizer {
 public:
  explicit AngleQuantizer(double theta_hat_rad);
  static AngleQuantizer from_degrees(double theta_hat_deg);

  double theta_hat() const { return theta_hat_; }
  int k() const { return k_; }
  /// Number of expanded classes for a catalog of `classes` objects.
  std::int64_t expanded_count(std::int64_t classes) const { return classes * k_; }

 private:
  double theta_hat_;
  int k_;
};

/// Bin index of `theta` (radians in [0, 2*pi)): round half up of
/// theta / theta_hat, then mod k so the top boundary folds onto bin 0.
int quantize_angle(const AngleQuantizer& q, double theta);

struct ClassAngle {
  int class_id = 0;
  double theta = 0.0;
};

/// c * k + quantize_angle(theta).
std::int64_t o2u_class(const AngleQuantizer& q, int class_id, double theta);
/// {floor(c_hat / k), theta_hat * (c_hat mod k)}.
ClassAngle u2o_class(const AngleQuantizer& q, std::int64_t expanded_class);

struct CatalogEntry {
  int class_id = 0;
  std::string name;
  double nominal_ratio = 1.0;
  bool symmetric = false;
  std::string group;
};

class ObjectCatalog {
 public:
  ObjectCatalog() = default;
  /// Validates contiguous ids 0..C-1 (in order) and positive ratios.
  explicit ObjectCatalog(std::vector<CatalogEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool contains(std::int64_t class_id) const {
    return class_id >= 0 && static_cast<std::size_t>(class_id) < entries_.size();
  }
  /// Throws UnknownClass.
  const CatalogEntry& at(std::int64_t class_id) const;
  const std::vector<CatalogEntry>& entries() const { return entries_; }

  /// Group names in order of first appearance; empty groups are skipped.
  std::vector<std::string> groups() const;

 private:
  std::vector<CatalogEntry> entries_;
};

/// Ground-truth or decoded oriented label. Ground truth carries confidence 1.
struct OrientedLabel {
  Obb obb;
  double theta = 0.0;
  int class_id = 0;
  double confidence = 1.0;

  /// Label whose theta is derived from the box.
  static OrientedLabel from_obb(const Obb& obb, int class_id, double confidence = 1.0);
};

struct UnorientedLabel {
  Aabb aabb;
  std::int64_t expanded_class = 0;
  double confidence = 1.0;
};

UnorientedLabel encode_label(const AngleQuantizer& q, const OrientedLabel& label);

/// Throws UnknownClass when floor(c_hat / k) is not in the catalog, and
/// propagates DegenerateReconstruction.
OrientedLabel decode_prediction(const AngleQuantizer& q, const ObjectCatalog& catalog,
                                const UnorientedLabel& pred);

}  // namespace loopkit
