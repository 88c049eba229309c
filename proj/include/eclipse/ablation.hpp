#pragma once
// Illuminator-geometry ablation: the 26 configurations (15 multi-channel
// subsets + 11 single-channel averaged groups), trained and scored on the
// frozen benchmark suite.

#include <string>
#include <vector>

#include "eclipse/bench_suite.hpp"
#include "eclipse/estimate.hpp"

namespace eclipse {

struct IlluminatorConfig {
    bool multi_channel = true;     // false: averaged into one channel
    std::vector<int> leds;         // sorted, non-empty

    std::string name() const;
    int channel_count() const { return multi_channel ? int(leds.size()) : 1; }
};

// 15 multi-channel subsets, then the 11 single-channel groups (|set| >= 2),
// deterministic order.
std::vector<IlluminatorConfig> enumerate_configs();

struct AblationRow {
    IlluminatorConfig config;
    double accuracy = 0.0;
    double hover_mae_mm = 0.0;
    uint64_t train_samples = 0, test_samples = 0;
};

struct AblationReport {
    std::vector<AblationRow> rows;  // config enumeration order
    uint64_t seed = 0;

    const AblationRow* find(const IlluminatorConfig& cfg) const;
    std::string to_text() const;    // sorted by accuracy, best first
    std::string to_json() const;
};

struct AblationOptions {
    TrainConfig train;
    double jitter_sigma_px = 1.5;
    PatchConfig patch;
};

AblationReport run_ablation(const SuiteManifest& manifest, const AblationOptions& opts,
                            uint64_t seed);

}  // namespace eclipse
