#include "millimamba/json_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "millimamba/error.hpp"

namespace millimamba::io {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string(what) + ": invalid JSON: " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, const char* what) {
  if (!j.contains(key)) fail(std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(std::string(what) + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string scene_to_json(const radar::SceneScript& script) {
  json j;
  j["frame_count"] = script.frame_count;
  j["joint_count"] = script.joint_count;
  j["image_width"] = script.image_width;
  j["image_height"] = script.image_height;
  json joints = json::array();
  for (const auto& traj : script.joints) {
    json frames = json::array();
    for (const auto& s : traj)
      frames.push_back({{"x", s.image_x}, {"y", s.image_y}, {"depth", s.depth}, {"velocity", s.radial_velocity}});
    joints.push_back(std::move(frames));
  }
  j["joints"] = std::move(joints);
  return j.dump() + "\n";
}

radar::SceneScript scene_from_json(const std::string& text) {
  const json j = parse(text, "scene");
  radar::SceneScript s;
  s.frame_count = field<std::size_t>(j, "frame_count", "scene");
  s.joint_count = field<std::size_t>(j, "joint_count", "scene");
  s.image_width = field<double>(j, "image_width", "scene");
  s.image_height = field<double>(j, "image_height", "scene");
  const auto& joints = j.at("joints");
  require(joints.is_array(), "scene: 'joints' must be an array");
  for (const auto& traj : joints) {
    std::vector<radar::JointState> states;
    for (const auto& f : traj)
      states.push_back({field<double>(f, "x", "scene"), field<double>(f, "y", "scene"),
                        field<double>(f, "depth", "scene"), field<double>(f, "velocity", "scene")});
    s.joints.push_back(std::move(states));
  }
  s.validate();
  return s;
}

std::string poses_to_json(const PoseWindow& poses, double image_width, double image_height,
                          const std::vector<std::size_t>& windows) {
  json j;
  j["image_width"] = image_width;
  j["image_height"] = image_height;
  j["joints"] = poses.joints;
  json frames = json::array();
  for (std::size_t f = 0; f < poses.frames; ++f) {
    json row;
    row["frame"] = f < poses.frame_ids.size() ? poses.frame_ids[f] : f;
    if (f < windows.size()) row["window"] = windows[f];
    json kps = json::array(), vis = json::array();
    for (std::size_t k = 0; k < poses.joints; ++k) {
      kps.push_back({poses.x(f, k) * image_width, poses.y(f, k) * image_height});
      vis.push_back(poses.is_visible(f, k) ? 1 : 0);
    }
    row["keypoints"] = std::move(kps);
    row["visible"] = std::move(vis);
    frames.push_back(std::move(row));
  }
  j["frames"] = std::move(frames);
  return j.dump() + "\n";
}

PoseWindow poses_from_json(const std::string& text) {
  const json j = parse(text, "poses");
  const double w = field<double>(j, "image_width", "poses");
  const double h = field<double>(j, "image_height", "poses");
  require(w > 0.0 && h > 0.0, "poses: image size must be positive");
  const auto joints = field<std::size_t>(j, "joints", "poses");
  const auto& frames = j.at("frames");
  require(frames.is_array(), "poses: 'frames' must be an array");
  PoseWindow p(frames.size(), joints);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& row = frames[f];
    p.frame_ids.push_back(field<std::uint64_t>(row, "frame", "poses"));
    const auto kps = field<std::vector<std::vector<double>>>(row, "keypoints", "poses");
    require(kps.size() == joints, "poses: frame " + std::to_string(f) + " has the wrong keypoint count");
    for (std::size_t k = 0; k < joints; ++k) {
      require(kps[k].size() == 2, "poses: keypoints must be [x, y] pairs");
      p.x(f, k) = kps[k][0] / w;
      p.y(f, k) = kps[k][1] / h;
    }
    if (row.contains("visible")) {
      const auto vis = field<std::vector<int>>(row, "visible", "poses");
      require(vis.size() == joints, "poses: visibility list has the wrong length");
      for (std::size_t k = 0; k < joints; ++k) p.visible[f * joints + k] = vis[k] != 0;
    }
  }
  return p;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

}  // namespace millimamba::io
