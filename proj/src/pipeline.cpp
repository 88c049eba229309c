#include "eclipse/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "eclipse/rng.hpp"
#include "eclipse/suppress.hpp"

namespace eclipse {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

HandKeypoints keypoints_from_truth(const GroundTruth& gt, double sigma, uint64_t seed) {
    HandKeypoints kp;
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
    auto jit = [&](Vec2 p) {
        if (sigma <= 0) return p;
        return Vec2{p.x + noise(rng), p.y + noise(rng)};
    };
    bool wrist_done = false;
    for (const auto& f : gt.fingers) {
        FingerKeypoints2 k;
        k.tip = jit(f.tip_px);
        k.pip = jit(f.pip_px);
        k.mcp = jit(f.mcp_px);
        k.in_view = f.in_view;
        kp.fingers[f.finger_id] = k;
        if (!wrist_done) {
            kp.wrist = jit(f.wrist_px);
            kp.wrist_in_view = f.in_view;
            wrist_done = true;
        }
    }
    return kp;
}

struct FingerState {
    MeanFilter prob_filter;
    MeanFilter hover_filter;
    std::vector<double> smoothed_series;
    uint64_t first_frame = 0;
    bool seen = false;

    explicit FingerState(int window) : prob_filter(window), hover_filter(window) {}
};

}  // namespace

StageStats::Summary StageStats::summarize(std::vector<double> samples) {
    Summary s;
    if (samples.empty()) return s;
    double sum = 0;
    for (double v : samples) sum += v;
    s.mean = sum / double(samples.size());
    std::sort(samples.begin(), samples.end());
    auto q = [&](double p) {
        double pos = p * double(samples.size() - 1);
        size_t i = size_t(pos);
        double f = pos - double(i);
        return i + 1 < samples.size() ? samples[i] * (1 - f) + samples[i + 1] * f : samples[i];
    };
    s.p50 = q(0.50);
    s.p95 = q(0.95);
    s.p99 = q(0.99);
    return s;
}

ProcessResult run_pipeline(const std::vector<RawSubframe>& raw, const StreamTruth* truth,
                           const Model* model, const PipelineConfig& cfg) {
    if (cfg.estimator == EstimatorKind::learned && !model)
        raise(ErrorKind::invalid_argument, "learned estimator needs a model");
    if (cfg.estimator == EstimatorKind::geometric && !truth)
        raise(ErrorKind::invalid_argument, "geometric estimator needs a truth sidecar");
    if (cfg.leds.empty()) raise(ErrorKind::invalid_argument, "empty LED set");

    ProcessResult out;
    std::vector<CompositeFrame> composites = demux(raw, out.drops);
    out.composites = composites.size();
    if (truth) out.metrics = Metrics{};

    int geo_channel = -1;
    if (cfg.estimator == EstimatorKind::geometric) {
        for (size_t i = 0; i < cfg.leds.size(); ++i)
            if (cfg.leds[i] == cfg.geometric_led) geo_channel = int(i);
        if (geo_channel < 0 || cfg.single_channel)
            raise(ErrorKind::invalid_argument,
                  "geometric estimator needs its LED as a dedicated channel");
        if (truth && !truth->scene.find_led(cfg.geometric_led))
            raise(ErrorKind::invalid_argument, "geometric LED not present in the scene");
    }

    double tau = model ? model->tau : 0.5;
    std::map<int, FingerState> states;

    for (const auto& comp : composites) {
        auto t_total = Clock::now();

        auto t0 = Clock::now();
        SuppressedFrame sup = suppress_for_config(comp, cfg.leds, cfg.single_channel);
        double suppress_ms = ms_since(t0);

        const GroundTruth* gt = nullptr;
        if (truth && comp.frame_index < truth->frames.size())
            gt = &truth->frames[comp.frame_index];
        if (!gt) continue;  // keypoints come from the tracker stand-in

        HandKeypoints kp = keypoints_from_truth(*gt, cfg.jitter_sigma_px,
                                                derive_seed(cfg.seed, comp.frame_index));

        double patch_ms = 0, infer_ms = 0, smooth_ms = 0;
        for (const auto& ft : gt->fingers) {
            if (!kp.finger_usable(ft.finger_id)) continue;

            t0 = Clock::now();
            Similarity2 tf = patch_transform(kp, ft.finger_id, cfg.patch);
            FingerPatch patch = extract_patch(sup, tf, ft.finger_id, cfg.patch);
            patch_ms += ms_since(t0);
            ++out.stages.patch_count;

            TouchEstimate est;
            est.frame_index = comp.frame_index;
            est.finger_id = ft.finger_id;

            t0 = Clock::now();
            double p_raw = 0.0, hover_raw = 0.0;
            if (cfg.estimator == EstimatorKind::learned) {
                Inference inf = infer(*model, patch);
                est.raw_logit = inf.logit;
                p_raw = inf.probability;
                hover_raw = inf.hover_mm;
            } else {
                const FingerKeypoints2& fk = kp.fingers.at(ft.finger_id);
                Vec2 pointing = (fk.tip - fk.pip).normalized();
                ShadowTip tip = detect_shadow_tip(sup.channels[size_t(geo_channel)], fk.tip,
                                                  pointing, cfg.detect);
                if (tip.found()) {
                    const HeadsetLed* led = truth->scene.find_led(cfg.geometric_led);
                    hover_raw = geometric_hover_capsule(
                        tip.tip_px, fk.tip, fk.pip, truth->scene.camera, led->light.position,
                        truth->scene.surface.plane, ft.radius_mm, 0.45 * ft.length_mm);
                } else if (tip.status == ShadowTip::Status::collapsed) {
                    hover_raw = 0.0;  // gap collapsed: contact
                } else {
                    est.valid = false;  // clipped: no usable measurement
                }
                if (est.valid)
                    p_raw = sigmoid((cfg.geo_touch_mm - hover_raw) / cfg.geo_softness_mm);
            }
            infer_ms += ms_since(t0);

            t0 = Clock::now();
            auto [it, inserted] =
                states.try_emplace(ft.finger_id, FingerState(cfg.smooth_window));
            FingerState& st = it->second;
            if (!st.seen) {
                st.first_frame = comp.frame_index;
                st.seen = true;
            }
            if (est.valid) {
                est.smoothed_probability = st.prob_filter.push(p_raw);
                est.hover_mm = st.hover_filter.push(hover_raw);
            } else {
                est.smoothed_probability = st.prob_filter.value();
                est.hover_mm = st.hover_filter.value();
            }
            est.raw_probability = p_raw;
            st.smoothed_series.push_back(est.smoothed_probability);
            smooth_ms += ms_since(t0);

            if (out.metrics)
                out.metrics->add(ft.finger_id, est.smoothed_probability > tau, ft.touch,
                                 est.hover_mm, ft.hover_mm);
            out.estimates.push_back(est);
        }

        if (cfg.collect_timings) {
            out.stages.suppress_ms.push_back(suppress_ms);
            out.stages.patch_ms.push_back(patch_ms);
            out.stages.infer_ms.push_back(infer_ms);
            out.stages.smooth_ms.push_back(smooth_ms);
            out.stages.total_ms.push_back(ms_since(t_total));
            out.stages.infer_total_ms += infer_ms;
        }
    }

    for (auto& [finger_id, st] : states) {
        auto events = segment_events(st.smoothed_series, finger_id, cfg.hysteresis,
                                     st.first_frame);
        out.events.insert(out.events.end(), events.begin(), events.end());
    }
    std::sort(out.events.begin(), out.events.end(), [](const TouchEvent& a, const TouchEvent& b) {
        return a.down_frame == b.down_frame ? a.finger_id < b.finger_id
                                            : a.down_frame < b.down_frame;
    });
    return out;
}

std::string events_to_jsonl(const std::vector<TouchEvent>& events) {
    std::string out;
    char buf[160];
    for (const auto& e : events) {
        if (e.up_frame) {
            std::snprintf(buf, sizeof(buf),
                          "{\"finger\":%d,\"down_frame\":%llu,\"up_frame\":%llu,\"peak_p\":%.6g}\n",
                          e.finger_id, (unsigned long long)e.down_frame,
                          (unsigned long long)*e.up_frame, e.peak_probability);
        } else {
            std::snprintf(buf, sizeof(buf),
                          "{\"finger\":%d,\"down_frame\":%llu,\"up_frame\":null,\"peak_p\":%.6g}\n",
                          e.finger_id, (unsigned long long)e.down_frame, e.peak_probability);
        }
        out += buf;
    }
    return out;
}

}  // namespace eclipse
