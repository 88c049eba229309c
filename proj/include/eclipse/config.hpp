#pragma once
// JSON schemas: scene configs, trajectory files, and the ground-truth sidecar
// written next to generated streams (schemas documented in the README).

#include <optional>
#include <string>
#include <vector>

#include "eclipse/scene.hpp"
#include "eclipse/stream.hpp"

namespace eclipse {

Scene scene_from_json_text(const std::string& text);
Scene load_scene(const std::string& path);
std::string scene_to_json_text(const Scene& scene);
void save_scene(const Scene& scene, const std::string& path);

Trajectory trajectory_from_json_text(const std::string& text);
Trajectory load_trajectory(const std::string& path);
std::string trajectory_to_json_text(const Trajectory& traj);
void save_trajectory(const Trajectory& traj, const std::string& path);

// Per-composite ground truth for a generated stream, plus the scene used.
struct StreamTruth {
    Scene scene;
    std::vector<GroundTruth> frames;
};

void save_truth(const StreamTruth& truth, const std::string& path);
StreamTruth load_truth(const std::string& path);

// Example configs for the scaffold command.
std::string example_scene_json();
std::string example_trajectory_json(int steps);

}  // namespace eclipse
