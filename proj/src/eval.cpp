#include "pseudolidar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "pseudolidar/error.hpp"

namespace pseudolidar {
namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct DifficultyLimits {
  double min_height;
  int max_occlusion;
  double max_truncation;
};

constexpr DifficultyLimits kLimits[3] = {{40.0, 0, 0.15}, {25.0, 1, 0.30}, {25.0, 2, 0.50}};

double overlap_2d_over_first(const LabelRecord& a, const LabelRecord& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double area = (a.x2 - a.x1) * (a.y2 - a.y1);
  if (iw <= 0.0 || ih <= 0.0 || area <= 0.0) return 0.0;
  return iw * ih / area;
}

}  // namespace

// ---------------------------------------------------------------- depth

std::string DepthMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["rmse_mm"] = rmse_mm;
  j["mae_mm"] = mae_mm;
  j["irmse"] = irmse;
  j["imae"] = imae;
  j["count"] = count;
  return j.dump(2) + "\n";
}

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw ShapeError("depth_metrics: prediction " + std::to_string(pred.width()) + "x" +
                     std::to_string(pred.height()) + " vs ground truth " + std::to_string(gt.width()) +
                     "x" + std::to_string(gt.height()));
  }
  double se = 0.0, ae = 0.0, ise = 0.0, iae = 0.0;
  std::size_t n = 0;
  for (int v = 0; v < gt.height(); ++v) {
    for (int u = 0; u < gt.width(); ++u) {
      if (!gt.valid(u, v)) continue;
      const double g = gt.at(u, v);
      if (g < kEvalDepthMin || g > kEvalDepthMax) continue;
      if (!pred.valid(u, v) || !(pred.at(u, v) > 0.0)) {
        throw DomainError("depth_metrics: prediction missing or non-positive at pixel (" +
                          std::to_string(u) + ", " + std::to_string(v) + ")");
      }
      const double p = pred.at(u, v);
      const double e = (p - g) * 1000.0;
      const double ie = 1000.0 / p - 1000.0 / g;
      se += e * e;
      ae += std::abs(e);
      ise += ie * ie;
      iae += std::abs(ie);
      ++n;
    }
  }
  if (n == 0) throw EmptySetError("depth_metrics: no ground-truth pixel in [1, 80] m");
  const double inv = 1.0 / static_cast<double>(n);
  return {std::sqrt(se * inv), ae * inv, std::sqrt(ise * inv), iae * inv, n};
}

// ---------------------------------------------------------------- boxes

Box3D Box3D::from_label(const LabelRecord& label) {
  return {label.x, label.y, label.z, label.h, label.w, label.l, label.rotation_y};
}

void Box3D::validate() const {
  for (double d : {h, w, l}) {
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("box: dimensions must be positive");
  }
}

std::array<Point2, 4> bev_corners(const Box3D& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double xs[4] = {box.l / 2, box.l / 2, -box.l / 2, -box.l / 2};
  const double zs[4] = {box.w / 2, -box.w / 2, -box.w / 2, box.w / 2};
  std::array<Point2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {box.x + c * xs[i] + s * zs[i], box.z - s * xs[i] + c * zs[i]};
  }
  if (polygon_area(out) < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

double polygon_area(std::span<const Point2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * twice;
}

std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip) {
  std::vector<Point2> out(subject.begin(), subject.end());
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Point2 a = clip[e];
    const Point2 edge = clip[(e + 1) % clip.size()] - a;
    std::vector<Point2> in;
    in.swap(out);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Point2& p = in[i];
      const Point2& q = in[(i + 1) % in.size()];
      const double sp = cross(edge, p - a);
      const double sq = cross(edge, q - a);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const auto poly = clip_convex(ca, cb);
  if (poly.size() < 3) return 0.0;
  return std::max(0.0, polygon_area(poly));
}

double bev_iou(const Box3D& a, const Box3D& b) {
  a.validate();
  b.validate();
  const double inter = bev_intersection_area(a, b);
  const double uni = a.l * a.w + b.l * b.w - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  a.validate();
  b.validate();
  const double overlap = std::min(a.y, b.y) - std::max(a.y - a.h, b.y - b.h);
  if (overlap <= 0.0) return 0.0;
  const double inter = bev_intersection_area(a, b) * overlap;
  const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// ---------------------------------------------------------------- difficulty

std::string to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kModerate: return "moderate";
    case Difficulty::kHard: return "hard";
    case Difficulty::kIgnored: return "ignored";
  }
  return "ignored";
}

std::string to_string(EvalTask t) { return t == EvalTask::kBev ? "bev" : "3d"; }

Difficulty parse_difficulty(const std::string& name) {
  if (name == "easy") return Difficulty::kEasy;
  if (name == "moderate") return Difficulty::kModerate;
  if (name == "hard") return Difficulty::kHard;
  throw ParseError("unknown difficulty '" + name + "' (expected easy, moderate or hard)");
}

EvalTask parse_task(const std::string& name) {
  if (name == "bev") return EvalTask::kBev;
  if (name == "3d") return EvalTask::k3d;
  throw ParseError("unknown task '" + name + "' (expected bev or 3d)");
}

Difficulty assign_difficulty(const LabelRecord& label) {
  const double height = label.bbox_height();
  for (int level = 0; level < 3; ++level) {
    const auto& lim = kLimits[level];
    if (height >= lim.min_height && label.occlusion <= lim.max_occlusion &&
        label.truncation <= lim.max_truncation) {
      return static_cast<Difficulty>(level);
    }
  }
  return Difficulty::kIgnored;
}

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw DomainError("eval config: IoU threshold must be in (0, 1]");
  }
  if (difficulty == Difficulty::kIgnored) throw DomainError("eval config: difficulty must be easy/moderate/hard");
}

// ---------------------------------------------------------------- AP

std::string ApResult::to_json(const EvalConfig& cfg) const {
  nlohmann::ordered_json j;
  j["task"] = to_string(cfg.task);
  j["iou"] = cfg.iou_threshold;
  j["difficulty"] = to_string(cfg.difficulty);
  j["AP"] = ap;
  j["class"] = cfg.class_name;
  j["precision"] = precision;
  j["true_positives"] = true_positives;
  j["false_positives"] = false_positives;
  j["ground_truths"] = ground_truths;
  return j.dump(2) + "\n";
}

std::vector<ScoredOutcome> match_frame(std::span<const LabelRecord> detections,
                                       std::span<const LabelRecord> ground_truth,
                                       const EvalConfig& cfg, std::size_t* counted_gt) {
  auto overlap = [&](const LabelRecord& a, const LabelRecord& b) {
    const Box3D ba = Box3D::from_label(a), bb = Box3D::from_label(b);
    return cfg.task == EvalTask::kBev ? bev_iou(ba, bb) : iou_3d(ba, bb);
  };
  std::vector<int> care, ignored, dont_care;
  for (int i = 0; i < static_cast<int>(ground_truth.size()); ++i) {
    const LabelRecord& g = ground_truth[i];
    if (g.is_dont_care()) {
      dont_care.push_back(i);
    } else if (g.type == cfg.class_name) {
      const Difficulty d = assign_difficulty(g);
      (d != Difficulty::kIgnored && d <= cfg.difficulty ? care : ignored).push_back(i);
    }
  }
  if (counted_gt) *counted_gt = care.size();

  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(detections.size()); ++i) {
    if (detections[i].type != cfg.class_name) continue;
    if (!detections[i].score) throw DomainError("average precision: detection without a score");
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return *detections[a].score > *detections[b].score; });

  std::vector<bool> used(ground_truth.size(), false);
  std::vector<ScoredOutcome> out;
  out.reserve(order.size());
  for (int di : order) {
    const LabelRecord& det = detections[di];
    int best = -1;
    double best_iou = cfg.iou_threshold;
    for (int gi : care) {
      if (used[gi]) continue;
      const double iou = overlap(det, ground_truth[gi]);
      if (iou >= best_iou && (best < 0 || iou > best_iou)) {
        best = gi;
        best_iou = iou;
      }
    }
    ScoredOutcome o{*det.score, MatchOutcome::kFalsePositive};
    if (best >= 0) {
      used[best] = true;
      o.outcome = MatchOutcome::kTruePositive;
    } else if (std::any_of(ignored.begin(), ignored.end(),
                           [&](int gi) { return overlap(det, ground_truth[gi]) >= cfg.iou_threshold; }) ||
               std::any_of(dont_care.begin(), dont_care.end(), [&](int gi) {
                 return overlap_2d_over_first(det, ground_truth[gi]) > 0.5;
               })) {
      o.outcome = MatchOutcome::kIgnored;
    }
    out.push_back(o);
  }
  return out;
}

ApResult average_precision_11(std::span<const std::vector<LabelRecord>> detections,
                              std::span<const std::vector<LabelRecord>> ground_truth,
                              const EvalConfig& cfg) {
  cfg.validate();
  if (detections.size() != ground_truth.size()) {
    throw ShapeError("average precision: " + std::to_string(detections.size()) + " detection frames vs " +
                     std::to_string(ground_truth.size()) + " ground-truth frames");
  }
  ApResult result;
  std::vector<ScoredOutcome> all;
  for (std::size_t f = 0; f < detections.size(); ++f) {
    std::size_t counted = 0;
    for (const auto& o : match_frame(detections[f], ground_truth[f], cfg, &counted)) {
      if (o.outcome != MatchOutcome::kIgnored) all.push_back(o);
    }
    result.ground_truths += counted;
  }
  if (result.ground_truths == 0) {
    throw EmptySetError("average precision: no " + cfg.class_name + " ground truth at difficulty " +
                      to_string(cfg.difficulty));
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });

  std::vector<double> recall, precision;
  std::size_t tp = 0, fp = 0;
  for (const auto& o : all) {
    (o.outcome == MatchOutcome::kTruePositive ? tp : fp) += 1;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(result.ground_truths));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  result.true_positives = tp;
  result.false_positives = fp;
  double sum = 0.0;
  for (int r = 0; r <= 10; ++r) {
    const double level = r / 10.0;
    double best = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= level) best = std::max(best, precision[i]);
    }
    result.precision[r] = best;
    sum += best;
  }
  result.ap = sum / 11.0;
  return result;
}

}  // namespace pseudolidar
