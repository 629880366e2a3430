#pragma once

#include <string>
#include <vector>

#include "millimamba/pose.hpp"
#include "millimamba/radar_sim.hpp"

namespace millimamba::io {

// SceneScript: {"frame_count", "joint_count", "image_width", "image_height",
//   "joints": [[{"x", "y", "depth", "velocity"} per frame] per joint]}
std::string scene_to_json(const radar::SceneScript& script);
radar::SceneScript scene_from_json(const std::string& text);

// Poses: {"image_width", "image_height", "joints",
//   "frames": [{"frame", "window"?, "keypoints": [[x, y] px ...], "visible": [0|1 ...]}]}
// Coordinates are stored in pixels and normalized on read.
std::string poses_to_json(const PoseWindow& poses, double image_width, double image_height,
                          const std::vector<std::size_t>& windows = {});
PoseWindow poses_from_json(const std::string& text);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace millimamba::io
