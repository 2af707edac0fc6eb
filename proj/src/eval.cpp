#include "loopkit/eval.hpp"

#include <algorithm>
#include <numeric>

#include "loopkit/errors.hpp"

namespace loopkit {

std::size_t MatchResult::true_positives() const {
  return static_cast<std::size_t>(std::count_if(matches.begin(), matches.end(), [](const auto& m) {
    return m.verdict == Verdict::TruePositive;
  }));
}

std::size_t MatchResult::false_positives() const { return matches.size() - true_positives(); }

MatchResult match_predictions(std::span<const OrientedLabel> preds,
                              std::span<const OrientedLabel> gts, double iou_threshold) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });

  MatchResult result;
  result.gt_matched.assign(gts.size(), false);
  for (std::size_t idx : order) {
    const OrientedLabel& p = preds[idx];
    PredictionMatch m;
    m.pred_index = idx;
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (result.gt_matched[g] || gts[g].class_id != p.class_id) continue;
      const double iou = polygon_iou(p.obb, gts[g].obb);
      if (iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best) m.iou = best_iou;
    if (best && best_iou > iou_threshold) {
      m.gt_index = best;
      m.verdict = Verdict::TruePositive;
      m.oiou = oriented_iou(p.obb, gts[*best].obb);
      result.gt_matched[*best] = true;
    }
    result.matches.push_back(m);
  }
  result.false_negatives = static_cast<std::size_t>(
      std::count(result.gt_matched.begin(), result.gt_matched.end(), false));
  return result;
}

std::optional<IouStats> oiou_stats(const MatchResult& match) {
  IouStats s;
  std::size_t n = 0;
  for (const auto& m : match.matches) {
    if (m.verdict != Verdict::TruePositive) continue;
    s.mean_iou += m.iou;
    s.mean_oiou += m.oiou;
    ++n;
  }
  if (n == 0) return std::nullopt;
  s.mean_iou /= double(n);
  s.mean_oiou /= double(n);
  return s;
}

std::vector<double> sweep_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 20; ++i) t.push_back(i / 20.0);
  return t;
}

double average_precision(const PrCurve& curve) {
  const std::size_t n = curve.thresholds.size();
  if (n == 0 || curve.precision.size() != n || curve.recall.size() != n)
    throw InvalidArgument("malformed precision-recall curve");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Highest threshold first, then by recall so the walk is monotone.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return curve.thresholds[a] > curve.thresholds[b];
  });
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return curve.recall[a] < curve.recall[b];
  });

  const auto top = std::max_element(curve.thresholds.begin(), curve.thresholds.end());
  double prev_r = 0.0;
  double prev_p = curve.precision[std::size_t(top - curve.thresholds.begin())];
  double area = 0.0;
  for (std::size_t i : order) {
    area += (curve.recall[i] - prev_r) * 0.5 * (curve.precision[i] + prev_p);
    prev_r = curve.recall[i];
    prev_p = curve.precision[i];
  }
  return area;
}

namespace {

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  double iou_sum = 0.0, oiou_sum = 0.0;
};

struct DecodedFrame {
  std::vector<OrientedLabel> preds;
  const std::vector<OrientedLabel>* gts = nullptr;
};

std::vector<DecodedFrame> decode_frames(std::span<const EvalFrame> frames, const AngleQuantizer& q,
                                        const ObjectCatalog& catalog) {
  std::vector<DecodedFrame> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    DecodedFrame d;
    d.gts = &f.ground_truth;
    for (const auto& p : f.predictions) d.preds.push_back(decode_prediction(q, catalog, p));
    out.push_back(std::move(d));
  }
  return out;
}

/// Per-class counts over all frames at one confidence threshold.
std::vector<Counts> count_at(const std::vector<DecodedFrame>& frames, std::size_t classes,
                             double threshold) {
  std::vector<Counts> counts(classes);
  std::vector<OrientedLabel> kept;
  for (const auto& f : frames) {
    kept.clear();
    for (const auto& p : f.preds)
      if (p.confidence >= threshold) kept.push_back(p);
    const MatchResult m = match_predictions(kept, *f.gts);
    for (const auto& pm : m.matches) {
      Counts& c = counts[static_cast<std::size_t>(kept[pm.pred_index].class_id)];
      if (pm.verdict == Verdict::TruePositive) {
        ++c.tp;
        c.iou_sum += pm.iou;
        c.oiou_sum += pm.oiou;
      } else {
        ++c.fp;
      }
    }
    for (std::size_t g = 0; g < f.gts->size(); ++g)
      if (!m.gt_matched[g]) ++counts[static_cast<std::size_t>((*f.gts)[g].class_id)].fn;
  }
  return counts;
}

double precision_of(const Counts& c) {
  return c.tp + c.fp == 0 ? 1.0 : double(c.tp) / double(c.tp + c.fp);
}
double recall_of(const Counts& c) {
  return c.tp + c.fn == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fn);
}

void check_gt_classes(std::span<const EvalFrame> frames, const ObjectCatalog& catalog) {
  for (const auto& f : frames)
    for (const auto& g : f.ground_truth) catalog.at(g.class_id);
}

AggregateReport aggregate(const std::string& name, const std::vector<const ClassReport*>& members) {
  AggregateReport a;
  a.name = name;
  if (members.empty()) return a;
  double iou = 0.0, oiou = 0.0;
  std::size_t with_tp = 0;
  for (const ClassReport* c : members) {
    a.precision += c->precision;
    a.recall += c->recall;
    a.fscore += c->fscore;
    a.ap += c->ap;
    if (c->mean_iou) {
      iou += *c->mean_iou;
      oiou += *c->mean_oiou;
      ++with_tp;
    }
  }
  const double n = double(members.size());
  a.precision /= n;
  a.recall /= n;
  a.fscore /= n;
  a.ap /= n;
  if (with_tp > 0) {
    a.mean_iou = iou / double(with_tp);
    a.mean_oiou = oiou / double(with_tp);
  }
  return a;
}

}  // namespace

std::vector<PrCurve> pr_curves(std::span<const EvalFrame> frames, const AngleQuantizer& q,
                               const ObjectCatalog& catalog) {
  check_gt_classes(frames, catalog);
  const auto decoded = decode_frames(frames, q, catalog);
  std::vector<PrCurve> curves(catalog.size());
  for (double t : sweep_thresholds()) {
    const auto counts = count_at(decoded, catalog.size(), t);
    for (std::size_t c = 0; c < catalog.size(); ++c) {
      curves[c].thresholds.push_back(t);
      curves[c].precision.push_back(precision_of(counts[c]));
      curves[c].recall.push_back(recall_of(counts[c]));
    }
  }
  return curves;
}

EvalReport evaluate(std::span<const EvalFrame> frames, const AngleQuantizer& q,
                    const ObjectCatalog& catalog, const EvalOptions& options) {
  EvalReport report;
  report.operating_threshold = options.operating_threshold;
  report.theta_hat = q.theta_hat();

  const auto curves = pr_curves(frames, q, catalog);
  const auto decoded = decode_frames(frames, q, catalog);
  const auto counts = count_at(decoded, catalog.size(), options.operating_threshold);

  std::vector<std::size_t> gt_count(catalog.size(), 0);
  for (const auto& f : frames)
    for (const auto& g : f.ground_truth) ++gt_count[static_cast<std::size_t>(g.class_id)];

  for (std::size_t c = 0; c < catalog.size(); ++c) {
    const CatalogEntry& e = catalog.entries()[c];
    ClassReport r;
    r.class_id = e.class_id;
    r.name = e.name;
    r.group = e.group;
    r.gt_count = gt_count[c];
    r.tp = counts[c].tp;
    r.fp = counts[c].fp;
    r.fn = counts[c].fn;
    r.precision = precision_of(counts[c]);
    r.recall = recall_of(counts[c]);
    r.fscore = r.precision + r.recall > 0.0
                   ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                   : 0.0;
    if (counts[c].tp > 0) {
      r.mean_iou = counts[c].iou_sum / double(counts[c].tp);
      r.mean_oiou = counts[c].oiou_sum / double(counts[c].tp);
    }
    r.curve = curves[c];
    r.ap = average_precision(r.curve);
    report.classes.push_back(std::move(r));
  }

  std::vector<const ClassReport*> all;
  for (const auto& r : report.classes)
    if (r.gt_count > 0) all.push_back(&r);
  for (const auto& g : catalog.groups()) {
    std::vector<const ClassReport*> members;
    for (const ClassReport* r : all)
      if (r->group == g) members.push_back(r);
    if (!members.empty()) report.groups.push_back(aggregate(g, members));
  }
  report.global = aggregate("global", all);
  report.map = mean_average_precision(report);
  return report;
}

double mean_average_precision(const EvalReport& report) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : report.classes) {
    if (c.gt_count == 0) continue;
    sum += c.ap;
    ++n;
  }
  return n == 0 ? 0.0 : sum / double(n);
}

}  // namespace loopkit
