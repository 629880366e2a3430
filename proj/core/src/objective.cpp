#include "millimamba/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "millimamba/error.hpp"
#include "millimamba/ops.hpp"

namespace millimamba::objective {

namespace ops = tensor;

std::string scale_mode_name(ScaleMode m) {
  switch (m) {
    case ScaleMode::kBboxDiagonal: return "bbox_diagonal";
    case ScaleMode::kBboxArea: return "bbox_area";
    case ScaleMode::kFixed: return "fixed";
  }
  return "?";
}

ScaleMode parse_scale_mode(const std::string& s) {
  if (s == "bbox_diagonal") return ScaleMode::kBboxDiagonal;
  if (s == "bbox_area") return ScaleMode::kBboxArea;
  if (s == "fixed") return ScaleMode::kFixed;
  fail("unknown OKS scale mode '" + s + "' (expected bbox_diagonal, bbox_area or fixed)");
}

std::vector<double> default_falloffs(std::size_t joints) {
  // COCO sigmas: nose .026, shoulders .079, elbows .072, wrists .062, hips .107,
  // knees .087, ankles .089; cocoeval uses k = 2 sigma.
  static constexpr double kSigma[kDefaultJoints] = {0.026, 0.079, 0.079, 0.072, 0.062, 0.079, 0.072,
                                                    0.062, 0.107, 0.087, 0.089, 0.107, 0.087, 0.089};
  std::vector<double> k(joints);
  for (std::size_t j = 0; j < joints; ++j) k[j] = 2.0 * kSigma[j % kDefaultJoints];
  return k;
}

OksParams OksParams::defaults(std::size_t joints) {
  OksParams p;
  p.k = default_falloffs(joints);
  return p;
}

void OksParams::validate(std::size_t joints) const {
  require(k.size() == joints, "oks: falloff count " + std::to_string(k.size()) + " does not match " +
                                  std::to_string(joints) + " joints");
  for (double v : k) require(std::isfinite(v) && v > 0.0, "oks: falloff constants must be positive");
  if (scale_mode == ScaleMode::kFixed)
    require(std::isfinite(fixed_scale) && fixed_scale > 0.0, "oks: fixed scale must be positive");
}

double oks_scale(const PoseWindow& gt, std::size_t f, const OksParams& params) {
  if (params.scale_mode == ScaleMode::kFixed) return params.fixed_scale;
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (std::size_t j = 0; j < gt.joints; ++j) {
    if (!gt.is_visible(f, j)) continue;
    x0 = std::min(x0, gt.x(f, j));
    x1 = std::max(x1, gt.x(f, j));
    y0 = std::min(y0, gt.y(f, j));
    y1 = std::max(y1, gt.y(f, j));
  }
  const double w = x1 - x0, h = y1 - y0;
  const double s = params.scale_mode == ScaleMode::kBboxDiagonal ? std::hypot(w, h) : std::sqrt(w * h);
  if (!(s > 0.0) || !std::isfinite(s))
    throw ValidationError("oks: degenerate ground-truth box in frame " + std::to_string(f));
  return s;
}

namespace {

void check_pair(const PoseWindow& pred, const PoseWindow& gt, const OksParams& params) {
  require(pred.joints == gt.joints, "oks: joint count mismatch");
  params.validate(gt.joints);
}

double keypoint_term(const PoseWindow& pred, std::size_t pf, const PoseWindow& gt, std::size_t gf, std::size_t j,
                     double s, double k) {
  const double dx = pred.x(pf, j) - gt.x(gf, j), dy = pred.y(pf, j) - gt.y(gf, j);
  return std::exp(-(dx * dx + dy * dy) / (2.0 * s * s * k * k));
}

std::size_t visible_count(const PoseWindow& gt, std::size_t f) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < gt.joints; ++j) n += gt.is_visible(f, j);
  return n;
}

void check_same_shape(const Tensor& pred, const PoseWindow& gt) {
  require(pred.rank() == 3 && pred.dim(2) == 2, "loss: prediction must be [T][J][2]");
  require(pred.dim(0) == gt.frames && pred.dim(1) == gt.joints,
          "loss: prediction " + tensor::to_string(pred.shape()) + " does not match ground truth [" +
              std::to_string(gt.frames) + "][" + std::to_string(gt.joints) + "]");
}

}  // namespace

double oks(const PoseWindow& pred, std::size_t pf, const PoseWindow& gt, std::size_t gf, const OksParams& params) {
  check_pair(pred, gt, params);
  const std::size_t n = visible_count(gt, gf);
  if (n == 0) throw ValidationError("oks: frame " + std::to_string(gf) + " has no visible joints");
  const double s = oks_scale(gt, gf, params);
  double acc = 0.0;
  for (std::size_t j = 0; j < gt.joints; ++j)
    if (gt.is_visible(gf, j)) acc += keypoint_term(pred, pf, gt, gf, j, s, params.k[j]);
  return acc / static_cast<double>(n);
}

double joint_oks(const PoseWindow& pred, std::size_t pf, const PoseWindow& gt, std::size_t gf, std::size_t j,
                 const OksParams& params) {
  check_pair(pred, gt, params);
  if (!gt.is_visible(gf, j)) throw ValidationError("joint_oks: joint is not visible");
  return keypoint_term(pred, pf, gt, gf, j, oks_scale(gt, gf, params), params.k[j]);
}

double loss_oks(const PoseWindow& pred, const PoseWindow& gt, const OksParams& params) {
  require(pred.frames == gt.frames && pred.joints == gt.joints, "loss_oks: shape mismatch");
  require(gt.frames >= 1, "loss_oks: empty window");
  double acc = 0.0;
  for (std::size_t f = 0; f < gt.frames; ++f) acc += oks(pred, f, gt, f, params);
  return 1.0 - acc / static_cast<double>(gt.frames);
}

double loss_vel(const PoseWindow& pred, const PoseWindow& gt) {
  require(pred.frames == gt.frames && pred.joints == gt.joints, "loss_vel: shape mismatch");
  if (gt.frames < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t f = 0; f + 1 < gt.frames; ++f) {
    for (std::size_t j = 0; j < gt.joints; ++j) {
      const double dx = (pred.x(f + 1, j) - pred.x(f, j)) - (gt.x(f + 1, j) - gt.x(f, j));
      const double dy = (pred.y(f + 1, j) - pred.y(f, j)) - (gt.y(f + 1, j) - gt.y(f, j));
      acc += dx * dx + dy * dy;
    }
  }
  return acc / static_cast<double>((gt.frames - 1) * gt.joints);
}

Tensor loss_oks(const Tensor& pred, const PoseWindow& gt, const OksParams& params) {
  check_same_shape(pred, gt);
  params.validate(gt.joints);
  const std::size_t t = gt.frames, j = gt.joints;
  std::vector<double> coef(t * j, 0.0), weight(t * j, 0.0);
  for (std::size_t f = 0; f < t; ++f) {
    const std::size_t n = visible_count(gt, f);
    if (n == 0) throw ValidationError("loss_oks: frame " + std::to_string(f) + " has no visible joints");
    const double s = oks_scale(gt, f, params);
    for (std::size_t q = 0; q < j; ++q) {
      if (!gt.is_visible(f, q)) continue;
      coef[f * j + q] = -1.0 / (2.0 * s * s * params.k[q] * params.k[q]);
      weight[f * j + q] = 1.0 / (static_cast<double>(n) * static_cast<double>(t));
    }
  }
  Tensor target({t, j, 2}, gt.coords);
  Tensor d2 = ops::sum_axis(ops::square(ops::sub(pred, target)), 2);
  Tensor sim = ops::exp(ops::mul(d2, Tensor({t, j}, std::move(coef))));
  Tensor mean_oks = ops::sum(ops::mul(sim, Tensor({t, j}, std::move(weight))));
  return ops::add_scalar(ops::scale(mean_oks, -1.0), 1.0);
}

Tensor loss_vel(const Tensor& pred, const PoseWindow& gt) {
  check_same_shape(pred, gt);
  const std::size_t t = gt.frames, j = gt.joints;
  if (t < 2) return Tensor::scalar(0.0);
  std::vector<double> v(static_cast<std::size_t>((t - 1) * j * 2));
  for (std::size_t f = 0; f + 1 < t; ++f)
    for (std::size_t q = 0; q < j; ++q) {
      v[(f * j + q) * 2] = gt.x(f + 1, q) - gt.x(f, q);
      v[(f * j + q) * 2 + 1] = gt.y(f + 1, q) - gt.y(f, q);
    }
  Tensor vhat = ops::sub(ops::slice(pred, 0, 1, t), ops::slice(pred, 0, 0, t - 1));
  Tensor err = ops::sum(ops::square(ops::sub(vhat, Tensor({t - 1, j, 2}, std::move(v)))));
  return ops::scale(err, 1.0 / static_cast<double>((t - 1) * j));
}

LossTerms total_loss(const Tensor& pred, const PoseWindow& gt, double lambda_vel, const OksParams& params) {
  require(std::isfinite(lambda_vel) && lambda_vel >= 0.0, "total_loss: lambda_vel must be finite and >= 0");
  LossTerms terms;
  terms.oks = loss_oks(pred, gt, params);
  terms.vel = loss_vel(pred, gt);
  terms.total = lambda_vel == 0.0 ? terms.oks : ops::add(terms.oks, ops::scale(terms.vel, lambda_vel));
  return terms;
}

std::array<double, kThresholdCount> oks_thresholds() {
  std::array<double, kThresholdCount> t{};
  for (std::size_t i = 0; i < kThresholdCount; ++i) t[i] = static_cast<double>(50 + 5 * i) / 100.0;
  return t;
}

namespace {

// Thresholds are decimal fractions; a score within rounding distance of one
// counts as reaching it.
constexpr double kThresholdSlack = 1e-12;

double recall_at(const std::vector<double>& scores, double t) {
  std::size_t hit = 0;
  for (double s : scores) hit += s >= t - kThresholdSlack;
  return static_cast<double>(hit) / static_cast<double>(scores.size());
}

// Mean over thresholds of the fraction of scores reaching each threshold.
double average_recall(const std::vector<double>& scores) {
  double acc = 0.0;
  for (double t : oks_thresholds()) acc += recall_at(scores, t);
  return acc / static_cast<double>(kThresholdCount);
}

}  // namespace

ApReport evaluate_ap(const PoseWindow& pred, const PoseWindow& gt, const OksParams& params) {
  require(gt.frames >= 1, "evaluate_ap: empty frame set");
  require(pred.frames == gt.frames, "evaluate_ap: prediction and ground-truth frame counts differ");
  check_pair(pred, gt, params);
  ApReport r;
  r.frames = gt.frames;
  std::vector<double> scores(gt.frames);
  std::vector<std::vector<double>> per_joint(gt.joints);
  for (std::size_t f = 0; f < gt.frames; ++f) {
    scores[f] = oks(pred, f, gt, f, params);
    const double s = oks_scale(gt, f, params);
    for (std::size_t j = 0; j < gt.joints; ++j)
      if (gt.is_visible(f, j)) per_joint[j].push_back(keypoint_term(pred, f, gt, f, j, s, params.k[j]));
  }
  r.ap = average_recall(scores);
  r.ap50 = recall_at(scores, oks_thresholds()[0]);
  r.ap75 = recall_at(scores, oks_thresholds()[5]);
  double total = 0.0;
  for (double s : scores) total += s;
  r.mean_oks = total / static_cast<double>(scores.size());
  for (const auto& js : per_joint)
    r.per_joint.push_back(js.empty() ? std::nullopt : std::optional<double>(average_recall(js)));

  if (gt.joints == kDefaultJoints) {
    const std::pair<const char*, std::vector<std::size_t>> layout[] = {
        {"Head", {kHead}},
        {"Neck", {kNeck}},
        {"Shoulder", {kRightShoulder, kLeftShoulder}},
        {"Elbow", {kRightElbow, kLeftElbow}},
        {"Wrist", {kRightWrist, kLeftWrist}},
        {"Hip", {kRightHip, kLeftHip}},
        {"Knee", {kRightKnee, kLeftKnee}},
        {"Ankle", {kRightAnkle, kLeftAnkle}},
    };
    for (const auto& [name, joints] : layout) {
      double acc = 0.0;
      std::size_t n = 0;
      for (std::size_t j : joints)
        if (r.per_joint[j]) acc += *r.per_joint[j], ++n;
      r.groups.emplace_back(name, n ? std::optional<double>(acc / static_cast<double>(n)) : std::nullopt);
    }
  }
  return r;
}

std::string ApReport::to_json() const {
  auto pct = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(100.0 * *v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["frames"] = frames;
  j["AP"] = 100.0 * ap;
  j["AP50"] = 100.0 * ap50;
  j["AP75"] = 100.0 * ap75;
  j["mean_oks"] = mean_oks;
  nlohmann::json joints = nlohmann::json::array();
  for (const auto& v : per_joint) joints.push_back(pct(v));
  j["per_joint_AP"] = joints;
  nlohmann::json grouped = nlohmann::json::object();
  for (const auto& [name, v] : groups) grouped[name] = pct(v);
  j["per_group_AP"] = grouped;
  return j.dump(2) + "\n";
}

}  // namespace millimamba::objective
