#pragma once

// Oriented-detection evaluation: greedy prediction/ground-truth matching,
// precision-recall sweeps over detector confidence, AP/mAP, and mean IoU /
// oriented IoU per class, per group and overall.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loopkit/encoding.hpp"

namespace loopkit {

inline constexpr double kTpIouThreshold = 0.5;

enum class Verdict { TruePositive, FalsePositive };

struct PredictionMatch {
  std::size_t pred_index = 0;
  std::optional<std::size_t> gt_index;
  double iou = 0.0;   // IoU with the matched GT, or best same-class IoU for an FP
  double oiou = 0.0;  // only meaningful for true positives
  Verdict verdict = Verdict::FalsePositive;
};

struct MatchResult {
  /// In processing order (descending confidence, ties by input index).
  std::vector<PredictionMatch> matches;
  std::vector<bool> gt_matched;
  std::size_t false_negatives = 0;

  std::size_t true_positives() const;
  std::size_t false_positives() const;
};

/// Greedy matching: predictions in descending confidence (stable on input
/// order) each claim the unmatched same-class GT with the highest IoU, when
/// that IoU exceeds `iou_threshold`; otherwise they are false positives.
MatchResult match_predictions(std::span<const OrientedLabel> preds,
                              std::span<const OrientedLabel> gts,
                              double iou_threshold = kTpIouThreshold);

struct IouStats {
  double mean_iou = 0.0;
  double mean_oiou = 0.0;
};

/// Means over true-positive pairs; nullopt when there are none.
std::optional<IouStats> oiou_stats(const MatchResult& match);

/// Confidence thresholds 0.00, 0.05, ..., 1.00.
std::vector<double> sweep_thresholds();

struct PrCurve {
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
};

/// One evaluated frame: raw detector output and oriented ground truth.
struct EvalFrame {
  std::vector<UnorientedLabel> predictions;
  std::vector<OrientedLabel> ground_truth;
};

/// Per-class PR curves over the threshold sweep. Precision is 1 when a class
/// has no predictions at a threshold; recall is 0 when it has no GT.
std::vector<PrCurve> pr_curves(std::span<const EvalFrame> frames, const AngleQuantizer& q,
                               const ObjectCatalog& catalog);

/// Trapezoidal area under precision(recall). Points are ordered from the
/// highest threshold to the lowest and padded on the left with
/// (recall 0, precision at the highest threshold).
double average_precision(const PrCurve& curve);

struct ClassReport {
  int class_id = 0;
  std::string name;
  std::string group;
  std::size_t gt_count = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 1.0;
  double recall = 0.0;
  double fscore = 0.0;
  std::optional<double> mean_iou;
  std::optional<double> mean_oiou;
  double ap = 0.0;
  PrCurve curve;
};

/// Unweighted mean over member classes; IoU means skip classes without
/// true positives and are absent if no member has any.
struct AggregateReport {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  std::optional<double> mean_iou;
  std::optional<double> mean_oiou;
  double ap = 0.0;
};

struct EvalReport {
  double operating_threshold = 0.5;
  double theta_hat = 0.0;
  std::vector<ClassReport> classes;
  std::vector<AggregateReport> groups;
  AggregateReport global;
  /// Mean AP over classes that have ground truth.
  double map = 0.0;
};

struct EvalOptions {
  /// Confidence threshold for the single-point precision/recall/IoU columns.
  double operating_threshold = 0.5;
};

/// Classes without any ground truth are listed but left out of every
/// aggregate and of mAP.
EvalReport evaluate(std::span<const EvalFrame> frames, const AngleQuantizer& q,
                    const ObjectCatalog& catalog, const EvalOptions& options = {});

/// Unweighted mean of per-class AP.
double mean_average_precision(const EvalReport& report);

}  // namespace loopkit
