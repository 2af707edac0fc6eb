#include "loopkit/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loopkit/errors.hpp"

namespace loopkit {

namespace {

// Absorbs representation error when theta_hat is given in degrees, so that
// e.g. 2*pi / deg_to_rad(10) gives 36 bins and 45 deg / 10 deg rounds up.
constexpr double kBinSlack = 1e-9;

}  // namespace

AngleQuantizer::AngleQuantizer(double theta_hat_rad) : theta_hat_(theta_hat_rad) {
  if (!(theta_hat_rad > 0.0) || theta_hat_rad > kTwoPi * (1.0 + kBinSlack))
    throw InvalidArgument("theta_hat must be in (0, 2*pi]");
  k_ = std::max(1, static_cast<int>(std::ceil(kTwoPi / theta_hat_rad - kBinSlack)));
}

AngleQuantizer AngleQuantizer::from_degrees(double theta_hat_deg) {
  return AngleQuantizer(deg_to_rad(theta_hat_deg));
}

int quantize_angle(const AngleQuantizer& q, double theta) {
  const double bins = std::floor(theta / q.theta_hat() + 0.5 + kBinSlack);
  const auto bin = static_cast<std::int64_t>(bins) % q.k();
  return static_cast<int>(bin < 0 ? bin + q.k() : bin);
}

std::int64_t o2u_class(const AngleQuantizer& q, int class_id, double theta) {
  return static_cast<std::int64_t>(class_id) * q.k() + quantize_angle(q, theta);
}

ClassAngle u2o_class(const AngleQuantizer& q, std::int64_t expanded_class) {
  if (expanded_class < 0) throw InvalidArgument("expanded class must be non-negative");
  return {static_cast<int>(expanded_class / q.k()),
          q.theta_hat() * static_cast<double>(expanded_class % q.k())};
}

// ---------------------------------------------------------------------------

ObjectCatalog::ObjectCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].class_id != static_cast<int>(i))
      throw FormatError("catalog ids must be contiguous from 0, got " +
                        std::to_string(entries_[i].class_id) + " at position " +
                        std::to_string(i));
    if (!(entries_[i].nominal_ratio > 0.0) || !std::isfinite(entries_[i].nominal_ratio))
      throw FormatError("catalog ratio must be positive for '" + entries_[i].name + "'");
  }
}

const CatalogEntry& ObjectCatalog::at(std::int64_t class_id) const {
  if (!contains(class_id)) throw UnknownClass("class " + std::to_string(class_id) + " not in catalog");
  return entries_[static_cast<std::size_t>(class_id)];
}

std::vector<std::string> ObjectCatalog::groups() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (!e.group.empty() && std::find(out.begin(), out.end(), e.group) == out.end())
      out.push_back(e.group);
  return out;
}

// ---------------------------------------------------------------------------

OrientedLabel OrientedLabel::from_obb(const Obb& obb, int class_id, double confidence) {
  return {obb, obb_angle(obb), class_id, confidence};
}

UnorientedLabel encode_label(const AngleQuantizer& q, const OrientedLabel& label) {
  return {aabb_of_obb(label.obb), o2u_class(q, label.class_id, obb_angle(label.obb)), 1.0};
}

OrientedLabel decode_prediction(const AngleQuantizer& q, const ObjectCatalog& catalog,
                                const UnorientedLabel& pred) {
  const ClassAngle ca = u2o_class(q, pred.expanded_class);
  const CatalogEntry& entry = catalog.at(ca.class_id);
  Obb obb = reconstruct_obb(pred.aabb, ca.theta, entry.nominal_ratio);
  return {obb, ca.theta, ca.class_id, pred.confidence};
}

}  // namespace loopkit
