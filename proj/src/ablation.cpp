#include "eclipse/ablation.hpp"

#include <algorithm>
#include <sstream>

#include "eclipse/rng.hpp"

namespace eclipse {

std::string IlluminatorConfig::name() const {
    std::string out = multi_channel ? "multi:" : "single:";
    for (size_t i = 0; i < leds.size(); ++i) {
        if (i) out += "+";
        out += std::to_string(leds[i]);
    }
    return out;
}

std::vector<IlluminatorConfig> enumerate_configs() {
    std::vector<IlluminatorConfig> out;
    auto leds_of = [](unsigned mask) {
        std::vector<int> leds;
        for (int k = 1; k <= 4; ++k)
            if (mask & (1u << k)) leds.push_back(k);
        return leds;
    };
    for (unsigned mask = 2; mask < 32; mask += 2) {  // bits 1..4, non-empty
        out.push_back({true, leds_of(mask)});
    }
    for (unsigned mask = 2; mask < 32; mask += 2) {
        auto leds = leds_of(mask);
        if (leds.size() >= 2) out.push_back({false, leds});
    }
    return out;
}

const AblationRow* AblationReport::find(const IlluminatorConfig& cfg) const {
    for (const auto& row : rows)
        if (row.config.multi_channel == cfg.multi_channel && row.config.leds == cfg.leds)
            return &row;
    return nullptr;
}

std::string AblationReport::to_text() const {
    std::vector<const AblationRow*> sorted;
    for (const auto& r : rows) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const AblationRow* a, const AblationRow* b) {
        return a->accuracy > b->accuracy;
    });

    std::ostringstream os;
    os << "illuminator ablation (" << rows.size() << " configurations, seed " << seed << ")\n";
    os << "rank  config          mode            accuracy  hover MAE (mm)\n";
    int rank = 1;
    for (const AblationRow* r : sorted) {
        char line[160];
        std::snprintf(line, sizeof(line), "%4d  %-14s  %-14s  %7.2f%%  %10.2f\n", rank++,
                      r->config.name().c_str(),
                      r->config.multi_channel ? "multi-channel" : "single-channel",
                      r->accuracy * 100.0, r->hover_mae_mm);
        os << line;
    }
    return os.str();
}

std::string AblationReport::to_json() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << "{\"seed\":" << seed << ",\"rows\":[";
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (i) os << ",";
        os << "{\"config\":\"" << r.config.name() << "\",\"mode\":\""
           << (r.config.multi_channel ? "multi" : "single") << "\",\"leds\":[";
        for (size_t k = 0; k < r.config.leds.size(); ++k) {
            if (k) os << ",";
            os << r.config.leds[k];
        }
        os << "],\"accuracy\":" << r.accuracy << ",\"hover_mae_mm\":" << r.hover_mae_mm
           << ",\"train_samples\":" << r.train_samples << ",\"test_samples\":" << r.test_samples
           << "}";
    }
    os << "]}";
    return os.str();
}

AblationReport run_ablation(const SuiteManifest& manifest, const AblationOptions& opts,
                            uint64_t seed) {
    AblationReport report;
    report.seed = seed;

    auto configs = enumerate_configs();
    for (size_t ci = 0; ci < configs.size(); ++ci) {
        const IlluminatorConfig& cfg = configs[ci];
        uint64_t cfg_seed = derive_seed(seed, ci);

        PatchDataset train_ds =
            build_dataset_from_suite(manifest, cfg.leds, !cfg.multi_channel, SuiteSplit::train,
                                     opts.jitter_sigma_px, derive_seed(cfg_seed, 1), opts.patch);
        PatchDataset test_ds =
            build_dataset_from_suite(manifest, cfg.leds, !cfg.multi_channel, SuiteSplit::test,
                                     opts.jitter_sigma_px, derive_seed(cfg_seed, 2), opts.patch);

        Model model;
        model.cfg.channels = cfg.channel_count();
        model.init(derive_seed(cfg_seed, 3));
        TrainConfig tc = opts.train;
        tc.seed = derive_seed(cfg_seed, 4);
        train(model, train_ds, tc);

        Metrics metrics = evaluate(model, test_ds);
        AblationRow row;
        row.config = cfg;
        row.accuracy = metrics.accuracy();
        row.hover_mae_mm = metrics.hover_all.mae();
        row.train_samples = train_ds.records.size();
        row.test_samples = test_ds.records.size();
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace eclipse
