#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "millimamba/pose.hpp"
#include "millimamba/tensor.hpp"

namespace millimamba::objective {

using tensor::Tensor;

enum class ScaleMode { kBboxDiagonal, kBboxArea, kFixed };

std::string scale_mode_name(ScaleMode m);
ScaleMode parse_scale_mode(const std::string& s);

// Per-joint falloff k_j for the 14-joint layout: twice the COCO sigmas, with
// head taking the nose value and neck the shoulder value. Other joint counts
// cycle through the same table.
std::vector<double> default_falloffs(std::size_t joints);

struct OksParams {
  std::vector<double> k;
  ScaleMode scale_mode = ScaleMode::kBboxDiagonal;
  double fixed_scale = 1.0;

  static OksParams defaults(std::size_t joints = kDefaultJoints);
  void validate(std::size_t joints) const;
};

// Object scale s of frame `f` of the ground truth: bounding-box diagonal
// (default), sqrt of box area, or the fixed value. Throws when degenerate.
double oks_scale(const PoseWindow& gt, std::size_t f, const OksParams& params);

// OKS of frame `pf` of pred against frame `gf` of gt, averaged over the
// visible ground-truth joints.
double oks(const PoseWindow& pred, std::size_t pf, const PoseWindow& gt, std::size_t gf, const OksParams& params);
// Single-keypoint OKS of joint j.
double joint_oks(const PoseWindow& pred, std::size_t pf, const PoseWindow& gt, std::size_t gf, std::size_t j,
                 const OksParams& params);

// Plain-value losses; pred and gt must have equal T and J.
double loss_oks(const PoseWindow& pred, const PoseWindow& gt, const OksParams& params);
double loss_vel(const PoseWindow& pred, const PoseWindow& gt);

// Differentiable forms; pred is [T][J][2] and gt supplies the same T and J.
Tensor loss_oks(const Tensor& pred, const PoseWindow& gt, const OksParams& params);
Tensor loss_vel(const Tensor& pred, const PoseWindow& gt);

struct LossTerms {
  Tensor total;
  Tensor oks;
  Tensor vel;
};
LossTerms total_loss(const Tensor& pred, const PoseWindow& gt, double lambda_vel, const OksParams& params);

inline constexpr std::size_t kThresholdCount = 10;
// 0.50, 0.55, ..., 0.95.
std::array<double, kThresholdCount> oks_thresholds();

struct ApReport {
  std::size_t frames = 0;
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double mean_oks = 0.0;
  std::vector<std::optional<double>> per_joint;  // empty slot: joint never visible
  // Table layout: Head, Neck, Shoulder, Elbow, Wrist, Hip, Knee, Ankle (14-joint
  // layout only; left/right averaged).
  std::vector<std::pair<std::string, std::optional<double>>> groups;

  // Values as fractions in [0,1]; the JSON form reports percent.
  std::string to_json() const;
};

// pred and gt hold one row per evaluated frame (frames >= 1).
ApReport evaluate_ap(const PoseWindow& pred, const PoseWindow& gt, const OksParams& params);

}  // namespace millimamba::objective
