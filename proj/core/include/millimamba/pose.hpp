#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace millimamba {

inline constexpr std::size_t kDefaultJoints = 14;

// Keypoint layout used throughout: head, neck, then right/left arm chains and
// right/left leg chains.
enum Joint : std::size_t {
  kHead = 0,
  kNeck,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kRightHip,
  kRightKnee,
  kRightAnkle,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
};

// T x J keypoints in normalized image coordinates ([0,1]^2) plus visibility.
struct PoseWindow {
  std::size_t frames = 0;
  std::size_t joints = 0;
  std::vector<double> coords;          // [frames][joints][2]
  std::vector<std::uint8_t> visible;   // [frames][joints]
  std::vector<std::uint64_t> frame_ids;  // absolute frame index per row, optional

  PoseWindow() = default;
  PoseWindow(std::size_t t, std::size_t j)
      : frames(t), joints(j), coords(t * j * 2, 0.0), visible(t * j, 1) {}

  double& x(std::size_t f, std::size_t j) { return coords[(f * joints + j) * 2]; }
  double& y(std::size_t f, std::size_t j) { return coords[(f * joints + j) * 2 + 1]; }
  double x(std::size_t f, std::size_t j) const { return coords[(f * joints + j) * 2]; }
  double y(std::size_t f, std::size_t j) const { return coords[(f * joints + j) * 2 + 1]; }
  bool is_visible(std::size_t f, std::size_t j) const { return visible[f * joints + j] != 0; }

  // Copy of a single frame as a 1 x J window.
  PoseWindow frame(std::size_t f) const;

  bool operator==(const PoseWindow&) const = default;
};

}  // namespace millimamba
