#pragma once
// Frozen synthetic benchmark: 6 materials x 2 ambient setups, seeded finger
// trajectories with a touch/hover mixture, scene-level train/test split.

#include <filesystem>
#include <string>
#include <vector>

#include "eclipse/config.hpp"
#include "eclipse/patches.hpp"

namespace eclipse {

struct SuiteConfig {
    std::filesystem::path dir;
    int frames_per_scene = 110;
    uint64_t seed = 20250810;
    bool noise = true;
};

struct SuiteScene {
    int id = 0;
    std::string stream_file;  // relative to the suite dir
    std::string truth_file;
    double albedo = 0.6;
    bool textured = false;
    int ambient_setup = 0;    // 0 = floor only, 1 = two shadow-casting lights
    bool test_split = false;
};

struct SuiteManifest {
    std::vector<SuiteScene> scenes;
    int frames_per_scene = 0;
    uint64_t seed = 0;
    std::filesystem::path dir;

    void save() const;
    static SuiteManifest load(const std::filesystem::path& dir);
};

// Builds scene `id` of the suite (deterministic; no files touched).
Scene make_suite_scene(int id, uint64_t seed, bool noise);
Trajectory make_suite_trajectory(const Scene& scene, int id, int frames, uint64_t seed);

// Renders any missing streams and writes the manifest; idempotent.
SuiteManifest build_suite(const SuiteConfig& cfg);

enum class SuiteSplit { train, test, all };

// Patches + labels from one decoded stream and its truth sidecar.
void append_dataset_from_stream(PatchDataset& ds, const std::vector<RawSubframe>& raw,
                                const StreamTruth& truth, const std::vector<int>& leds,
                                bool single_channel, double jitter_sigma_px, uint64_t seed,
                                uint32_t scene_id, const PatchConfig& patch_cfg = {});

// `replicas` re-extracts each frame with fresh keypoint jitter; cheap
// augmentation that multiplies the dataset without re-rendering.
PatchDataset build_dataset_from_suite(const SuiteManifest& manifest,
                                      const std::vector<int>& leds, bool single_channel,
                                      SuiteSplit split, double jitter_sigma_px, uint64_t seed,
                                      const PatchConfig& patch_cfg = {}, int replicas = 1);

}  // namespace eclipse
