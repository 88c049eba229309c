#pragma once
// End-to-end stream processing: demux -> suppress -> patches -> estimator ->
// smoothing -> event segmentation, with per-stage timing for the bench command.

#include <optional>

#include "eclipse/config.hpp"
#include "eclipse/estimate.hpp"
#include "eclipse/model.hpp"
#include "eclipse/stream.hpp"

namespace eclipse {

enum class EstimatorKind { learned, geometric };

struct PipelineConfig {
    std::vector<int> leds{3, 4};
    bool single_channel = false;
    EstimatorKind estimator = EstimatorKind::learned;
    int geometric_led = 3;          // channel used by the analytic estimator
    double jitter_sigma_px = 0.0;   // tracker-noise stand-in on keypoints
    uint64_t seed = 1;
    int smooth_window = 30;
    Hysteresis hysteresis;
    double geo_touch_mm = 1.5;      // geometric probability mapping
    double geo_softness_mm = 0.75;
    PatchConfig patch;
    DetectParams detect;
    bool collect_timings = false;
};

struct StageStats {
    std::vector<double> suppress_ms, patch_ms, infer_ms, smooth_ms, total_ms;
    uint64_t patch_count = 0;
    double infer_total_ms = 0.0;

    struct Summary {
        double mean = 0, p50 = 0, p95 = 0, p99 = 0;
    };
    static Summary summarize(std::vector<double> samples);
};

struct ProcessResult {
    std::vector<TouchEstimate> estimates;
    std::vector<TouchEvent> events;
    DropReport drops;
    std::optional<Metrics> metrics;
    StageStats stages;
    uint64_t composites = 0;
};

// `truth` supplies keypoints and (optionally) labels; the geometric estimator
// additionally needs its scene for the camera/LED/plane geometry.
ProcessResult run_pipeline(const std::vector<RawSubframe>& raw, const StreamTruth* truth,
                           const Model* model, const PipelineConfig& cfg);

std::string events_to_jsonl(const std::vector<TouchEvent>& events);

}  // namespace eclipse
