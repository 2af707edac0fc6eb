#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "loopkit/errors.hpp"
#include "loopkit/propagation.hpp"

namespace loopkit {

namespace {

// Extra margin so Lucas-Kanade refinement can move a patch by up to
// refine_radius and still sample inside the image.
int border_for(const MatcherConfig& c) { return c.patch_radius + c.refine_radius + 2; }

float bilinear(const GrayImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
  const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

/// Zero-mean, unit-norm patch; empty if the patch is flat.
std::vector<float> patch_descriptor(const GrayImage& img, int cx, int cy, int r) {
  const int side = 2 * r + 1;
  std::vector<float> d(std::size_t(side) * side);
  double mean = 0.0;
  std::size_t k = 0;
  for (int y = cy - r; y <= cy + r; ++y)
    for (int x = cx - r; x <= cx + r; ++x) {
      d[k++] = img.at(x, y);
      mean += img.at(x, y);
    }
  mean /= double(d.size());
  double norm = 0.0;
  for (float& v : d) {
    v = static_cast<float>(v - mean);
    norm += double(v) * v;
  }
  if (norm < 1e-6) return {};
  const float inv = static_cast<float>(1.0 / std::sqrt(norm));
  for (float& v : d) v *= inv;
  return d;
}

double ncc(const std::vector<float>& a, const std::vector<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * b[i];
  return acc;
}

/// Translational Lucas-Kanade (inverse compositional): finds d such that
/// b(p + x + d) ~ a(p + x) over the patch, starting from `start`.
/// Returns nullopt if the iteration leaves the allowed window.
std::optional<Vec2> refine_offset(const GrayImage& a, const GrayImage& b, Vec2 p, Vec2 start,
                                  const MatcherConfig& c) {
  const int r = c.patch_radius;
  const int px = static_cast<int>(p.x);
  const int py = static_cast<int>(p.y);

  double gxx = 0.0, gxy = 0.0, gyy = 0.0;
  std::vector<double> gx, gy;
  for (int y = py - r; y <= py + r; ++y)
    for (int x = px - r; x <= px + r; ++x) {
      const double dx = 0.5 * (a.at(x + 1, y) - a.at(x - 1, y));
      const double dy = 0.5 * (a.at(x, y + 1) - a.at(x, y - 1));
      gx.push_back(dx);
      gy.push_back(dy);
      gxx += dx * dx;
      gxy += dx * dy;
      gyy += dy * dy;
    }
  const double det = gxx * gyy - gxy * gxy;
  if (det < 1e-9 * (gxx + gyy) * (gxx + gyy) || det <= 0.0) return std::nullopt;

  Vec2 d = start;
  const double limit = c.refine_radius;
  for (int it = 0; it < 20; ++it) {
    double bx = 0.0, by = 0.0;
    std::size_t k = 0;
    for (int y = py - r; y <= py + r; ++y)
      for (int x = px - r; x <= px + r; ++x, ++k) {
        const double err = bilinear(b, x + d.x, y + d.y) - a.at(x, y);
        bx += gx[k] * err;
        by += gy[k] * err;
      }
    const Vec2 step{-(gyy * bx - gxy * by) / det, -(gxx * by - gxy * bx) / det};
    d = d + step;
    if ((d - start).norm() > limit) return std::nullopt;
    if (step.norm() < 1e-4) break;
  }
  return d;
}

}  // namespace

std::vector<Keypoint> detect_corners(const GrayImage& img, const MatcherConfig& config) {
  const int w = img.width;
  const int h = img.height;
  const int border = border_for(config);
  if (w <= 2 * border || h <= 2 * border) return {};

  // Sobel gradients and box-filtered structure tensor.
  GrayImage ixx(w, h), iyy(w, h), ixy(w, h);
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      const float gx = (img.at(x + 1, y - 1) + 2 * img.at(x + 1, y) + img.at(x + 1, y + 1)) -
                       (img.at(x - 1, y - 1) + 2 * img.at(x - 1, y) + img.at(x - 1, y + 1));
      const float gy = (img.at(x - 1, y + 1) + 2 * img.at(x, y + 1) + img.at(x + 1, y + 1)) -
                       (img.at(x - 1, y - 1) + 2 * img.at(x, y - 1) + img.at(x + 1, y - 1));
      ixx.at(x, y) = gx * gx;
      iyy.at(x, y) = gy * gy;
      ixy.at(x, y) = gx * gy;
    }

  GrayImage response(w, h);
  float max_response = 0.0f;
  constexpr int kWin = 2;
  for (int y = border; y < h - border; ++y)
    for (int x = border; x < w - border; ++x) {
      double sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int v = -kWin; v <= kWin; ++v)
        for (int u = -kWin; u <= kWin; ++u) {
          sxx += ixx.at(x + u, y + v);
          syy += iyy.at(x + u, y + v);
          sxy += ixy.at(x + u, y + v);
        }
      const double r = sxx * syy - sxy * sxy - config.harris_k * (sxx + syy) * (sxx + syy);
      response.at(x, y) = static_cast<float>(r);
      max_response = std::max(max_response, response.at(x, y));
    }
  if (max_response <= 0.0f) return {};

  struct Candidate {
    float r;
    int x, y;
  };
  std::vector<Candidate> candidates;
  const float floor_r = static_cast<float>(config.quality) * max_response;
  for (int y = border; y < h - border; ++y)
    for (int x = border; x < w - border; ++x) {
      const float r = response.at(x, y);
      if (r <= floor_r) continue;
      bool is_max = true;
      for (int v = -1; v <= 1 && is_max; ++v)
        for (int u = -1; u <= 1; ++u) {
          if (u == 0 && v == 0) continue;
          const float other = response.at(x + u, y + v);
          // Strict on one side so plateaus keep exactly one point.
          if (other > r || (other == r && (v < 0 || (v == 0 && u < 0)))) {
            is_max = false;
            break;
          }
        }
      if (is_max) candidates.push_back({r, x, y});
    }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.r > b.r; });

  // Greedy minimum-distance selection on a coarse grid.
  const int cell = std::max(1, config.min_distance);
  const int gw = w / cell + 1;
  const int gh = h / cell + 1;
  std::vector<std::vector<Vec2>> grid(std::size_t(gw) * gh);
  const double min_d2 = double(config.min_distance) * config.min_distance;

  std::vector<Keypoint> out;
  for (const auto& c : candidates) {
    if (static_cast<int>(out.size()) >= config.max_corners) break;
    const int gx = c.x / cell;
    const int gy = c.y / cell;
    bool crowded = false;
    for (int v = std::max(0, gy - 1); v <= std::min(gh - 1, gy + 1) && !crowded; ++v)
      for (int u = std::max(0, gx - 1); u <= std::min(gw - 1, gx + 1) && !crowded; ++u)
        for (const Vec2& q : grid[std::size_t(v) * gw + u]) {
          const Vec2 d = q - Vec2{double(c.x), double(c.y)};
          if (dot(d, d) < min_d2) {
            crowded = true;
            break;
          }
        }
    if (crowded) continue;
    auto desc = patch_descriptor(img, c.x, c.y, config.patch_radius);
    if (desc.empty()) continue;
    grid[std::size_t(gy) * gw + gx].push_back({double(c.x), double(c.y)});
    out.push_back({{double(c.x), double(c.y)}, double(c.r), std::move(desc)});
  }
  return out;
}

std::vector<Correspondence> detect_and_match(const GrayImage& a, const GrayImage& b,
                                             const MatcherConfig& config) {
  if (a.width != b.width || a.height != b.height)
    throw InvalidArgument("detect_and_match needs equal-size images");
  const auto ka = detect_corners(a, config);
  const auto kb = detect_corners(b, config);
  if (static_cast<int>(ka.size()) < config.min_corners ||
      static_cast<int>(kb.size()) < config.min_corners)
    throw NoFeatures("found " + std::to_string(ka.size()) + " and " + std::to_string(kb.size()) +
                     " corners, need " + std::to_string(config.min_corners));

  const double r2 = config.search_radius * config.search_radius;
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Best {
    std::size_t index = kNone;
    double score = -2.0;
    double second = -2.0;
  };
  std::vector<Best> best_a(ka.size()), best_b(kb.size());
  for (std::size_t i = 0; i < ka.size(); ++i)
    for (std::size_t j = 0; j < kb.size(); ++j) {
      const Vec2 d = kb[j].position - ka[i].position;
      if (dot(d, d) > r2) continue;
      const double s = ncc(ka[i].descriptor, kb[j].descriptor);
      auto update = [s](Best& best, std::size_t idx) {
        if (s > best.score) {
          best.second = best.score;
          best.score = s;
          best.index = idx;
        } else if (s > best.second) {
          best.second = s;
        }
      };
      update(best_a[i], j);
      update(best_b[j], i);
    }

  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < ka.size(); ++i) {
    const Best& ba = best_a[i];
    if (ba.index == kNone || best_b[ba.index].index != i) continue;
    if (ba.score < config.min_ncc) continue;
    if (ba.second > config.ratio * ba.score) continue;
    const Vec2 src = ka[i].position;
    const auto offset = refine_offset(a, b, src, kb[ba.index].position - src, config);
    if (!offset) continue;
    out.push_back({src, src + *offset});
  }
  return out;
}

std::vector<Correspondence> detect_and_match(const Image& a, const Image& b,
                                             const MatcherConfig& config) {
  return detect_and_match(to_gray(a), to_gray(b), config);
}

}  // namespace loopkit
