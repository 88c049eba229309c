// eclipse — CLI for the synthetic shadow-casting touch pipeline:
// stream generation, dataset building, training, evaluation, processing,
// illuminator ablation, and throughput benchmarking.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eclipse/ablation.hpp"
#include "eclipse/bench_suite.hpp"
#include "eclipse/config.hpp"
#include "eclipse/pipeline.hpp"
#include "eclipse/render.hpp"
#include "eclipse/rng.hpp"

namespace fs = std::filesystem;
using namespace eclipse;

namespace {

// exit codes (sysexits-flavored): 65 data format, 66 missing/unreadable
// input, 68 model shape, 70 other library errors
int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::io:
            return 66;
        case ErrorKind::bad_magic:
        case ErrorKind::version_mismatch:
        case ErrorKind::truncated:
        case ErrorKind::format:
            return 65;
        case ErrorKind::shape_mismatch:
            return 68;
        default:
            return 70;
    }
}

int log_level() {
    const char* env = std::getenv("ECLIPSE_LOG");
    if (!env) return 1;
    std::string v(env);
    if (v == "off" || v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "eclipse: " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "eclipse[debug]: " << msg << "\n";
}

std::vector<int> parse_leds(const std::string& spec) {
    std::vector<int> leds;
    std::string token;
    std::stringstream ss(spec);
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        int v = std::stoi(token);
        if (v < 1 || v > 4) raise(ErrorKind::invalid_argument, "LED index outside 1..4");
        leds.push_back(v);
    }
    std::sort(leds.begin(), leds.end());
    leds.erase(std::unique(leds.begin(), leds.end()), leds.end());
    if (leds.empty()) raise(ErrorKind::invalid_argument, "empty LED set");
    return leds;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) raise(ErrorKind::io, "cannot open for write: " + path);
    os << text;
    if (!os) raise(ErrorKind::io, "write failed: " + path);
}

// Binary PGM (P5), the documented raster for --dump-suppressed.
void write_pgm(const std::string& path, const ImageF& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) raise(ErrorKind::io, "cannot open for write: " + path);
    os << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(size_t(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            row[size_t(x)] = (unsigned char)std::clamp(img.at(x, y) * 255.0 + 0.5, 0.0, 255.0);
        os.write(reinterpret_cast<const char*>(row.data()), img.width);
    }
}

StreamTruth load_truth_for(const std::string& stream_path, std::string truth_path) {
    if (truth_path.empty()) truth_path = stream_path + ".truth.json";
    if (!fs::exists(truth_path))
        raise(ErrorKind::io, "no truth sidecar at " + truth_path +
                                 " (keypoints come from the sidecar; pass --truth)");
    return load_truth(truth_path);
}

SuiteManifest ensure_suite(const std::string& dir, int frames, uint64_t seed) {
    if (fs::exists(fs::path(dir) / "manifest.json")) {
        log_debug("using existing suite at " + dir);
        return SuiteManifest::load(dir);
    }
    log_info("building benchmark suite in " + dir + " (" + std::to_string(frames) +
             " frames/scene, one-time cost)");
    SuiteConfig cfg;
    cfg.dir = dir;
    cfg.frames_per_scene = frames;
    cfg.seed = seed;
    return build_suite(cfg);
}

// --- commands ------------------------------------------------------------

struct GenArgs {
    std::string scene, trajectory, out, truth;
    int tap_frames = 0;
    uint64_t seed = 1;
    bool auto_gain = false;
};

int cmd_gen(const GenArgs& a) {
    Scene scene = load_scene(a.scene);
    Trajectory traj;
    if (!a.trajectory.empty()) {
        traj = load_trajectory(a.trajectory);
    } else if (a.tap_frames > 0) {
        traj = trajectory_from_json_text(example_trajectory_json(a.tap_frames));
    } else {
        raise(ErrorKind::invalid_argument, "need --trajectory or --tap-frames");
    }
    if (traj.steps.empty()) raise(ErrorKind::format, "trajectory has no steps");

    if (a.auto_gain) {
        Scene posed = scene.with_finger_poses(traj.steps.front().fingers);
        scene.render.exposure_gain = suggest_exposure_gain(posed);
        log_debug("auto exposure gain " + std::to_string(scene.render.exposure_gain));
    }

    StreamTruth truth;
    truth.scene = scene;
    auto raw = synthesize_raw_stream(scene, traj, a.seed, &truth.frames);
    uint64_t bytes = encode_stream_file(raw, a.out);
    std::string truth_path = a.truth.empty() ? a.out + ".truth.json" : a.truth;
    save_truth(truth, truth_path);

    log_info("wrote " + std::to_string(raw.size()) + " subframes (" + std::to_string(bytes) +
             " bytes) to " + a.out + ", truth to " + truth_path);
    return 0;
}

struct GenDatasetArgs {
    std::string stream, truth, suite_dir, split = "all", out, leds = "3,4";
    bool single_channel = false;
    double jitter = 1.5;
    uint64_t seed = 1;
    int suite_frames = 110;
    int replicas = 1;
};

int cmd_gen_dataset(const GenDatasetArgs& a) {
    auto leds = parse_leds(a.leds);
    PatchDataset ds;
    if (!a.suite_dir.empty()) {
        SuiteManifest manifest = ensure_suite(a.suite_dir, a.suite_frames, a.seed);
        SuiteSplit split = a.split == "train"  ? SuiteSplit::train
                           : a.split == "test" ? SuiteSplit::test
                                               : SuiteSplit::all;
        ds = build_dataset_from_suite(manifest, leds, a.single_channel, split, a.jitter,
                                      a.seed, PatchConfig{}, a.replicas);
    } else if (!a.stream.empty()) {
        auto raw = decode_stream_file(a.stream);
        StreamTruth truth = load_truth_for(a.stream, a.truth);
        ds.patch = PatchConfig{}.size;
        ds.channels = a.single_channel ? 1 : int(leds.size());
        ds.led_mask = led_mask_of(leds);
        ds.single_channel = a.single_channel;
        append_dataset_from_stream(ds, raw, truth, leds, a.single_channel, a.jitter, a.seed, 0);
    } else {
        raise(ErrorKind::invalid_argument, "need --suite-dir or --stream");
    }
    ds.save(a.out);
    uint64_t touching = 0;
    for (const auto& r : ds.records) touching += r.touch ? 1 : 0;
    log_info("wrote " + std::to_string(ds.records.size()) + " records (" +
             std::to_string(touching) + " touching) to " + a.out);
    return 0;
}

struct TrainArgs {
    std::string data, out;
    uint64_t seed = 1;
    int epochs1 = 10, epochs2 = 10, batch = 128;
    double lr = 2e-3, tau = 0.5;
};

int cmd_train(const TrainArgs& a) {
    PatchDataset ds = PatchDataset::load(a.data);
    Model model;
    model.cfg.channels = ds.channels;
    model.cfg.patch = ds.patch;
    model.tau = a.tau;
    model.init(derive_seed(a.seed, 0x696e6974ULL));

    TrainConfig cfg;
    cfg.epochs_stage1 = a.epochs1;
    cfg.epochs_stage2 = a.epochs2;
    cfg.batch = a.batch;
    cfg.lr = a.lr;
    cfg.seed = a.seed;
    TrainReport report = train(model, ds, cfg);
    model.save(a.out);

    Metrics metrics = evaluate(model, ds);
    std::printf("trained on %zu records (%d channels)\n", ds.records.size(), ds.channels);
    if (!report.stage1_epoch_loss.empty())
        std::printf("stage 1 loss: %.4f -> %.4f over %zu epochs\n",
                    report.stage1_epoch_loss.front(), report.stage1_epoch_loss.back(),
                    report.stage1_epoch_loss.size());
    if (!report.stage2_epoch_loss.empty())
        std::printf("stage 2 loss: %.4f -> %.4f over %zu epochs\n",
                    report.stage2_epoch_loss.front(), report.stage2_epoch_loss.back(),
                    report.stage2_epoch_loss.size());
    std::printf("training-set accuracy %.2f%%, hover MAE %.2f mm, kappa %.3f\n",
                metrics.accuracy() * 100.0, metrics.hover_all.mae(), model.kappa);
    log_info("model written to " + a.out);
    return 0;
}

struct EvalArgs {
    std::string model, data, json;
};

int cmd_eval(const EvalArgs& a) {
    Model model = Model::load(a.model);
    PatchDataset ds = PatchDataset::load(a.data);
    Metrics metrics = evaluate(model, ds);
    std::fputs(metrics.to_text().c_str(), stdout);
    if (!a.json.empty()) write_text(a.json, metrics.to_json() + "\n");
    return 0;
}

struct ProcessArgs {
    std::string in, truth, model, events, metrics, dump_dir, leds = "3,4";
    bool geometric = false;
    int geometric_led = 3;
    double jitter = 0.0, tau = -1.0;
    uint64_t seed = 1;
    int window = 30;
};

int cmd_process(const ProcessArgs& a, bool bench, const std::string& report_path) {
    auto raw = decode_stream_file(a.in);
    StreamTruth truth = load_truth_for(a.in, a.truth);

    PipelineConfig cfg;
    cfg.leds = parse_leds(a.leds);
    cfg.estimator = a.geometric ? EstimatorKind::geometric : EstimatorKind::learned;
    cfg.geometric_led = a.geometric_led;
    cfg.jitter_sigma_px = a.jitter;
    cfg.seed = a.seed;
    cfg.smooth_window = a.window;
    cfg.collect_timings = bench;

    Model model;
    if (!a.geometric) {
        if (a.model.empty()) raise(ErrorKind::invalid_argument, "need --model or --geometric");
        model = Model::load(a.model);
        if (a.tau > 0.0) model.tau = a.tau;
        if (model.cfg.channels != int(cfg.leds.size()))
            raise(ErrorKind::shape_mismatch,
                  "model expects " + std::to_string(model.cfg.channels) +
                      " channels but the LED set has " + std::to_string(cfg.leds.size()));
    }

    ProcessResult result =
        run_pipeline(raw, &truth, a.geometric ? nullptr : &model, cfg);

    log_info(std::to_string(result.composites) + " composites, " +
             std::to_string(result.drops.dropped_sequences) + " dropped sequences, " +
             std::to_string(result.events.size()) + " events");

    if (!a.events.empty())
        write_text(a.events, events_to_jsonl(result.events));
    else if (!bench)
        std::fputs(events_to_jsonl(result.events).c_str(), stdout);

    if (result.metrics && !a.metrics.empty())
        write_text(a.metrics, result.metrics->to_json() + "\n");
    if (result.metrics && !bench && log_level() >= 1)
        std::fputs(result.metrics->to_text().c_str(), stdout);

    if (!a.dump_dir.empty()) {
        fs::create_directories(a.dump_dir);
        DropReport drops;
        auto composites = demux(raw, drops);
        for (const auto& comp : composites) {
            SuppressedFrame sup = suppress_for_config(comp, cfg.leds, false);
            for (size_t c = 0; c < sup.channels.size(); ++c) {
                char name[64];
                std::snprintf(name, sizeof(name), "frame_%05llu_led%d.pgm",
                              (unsigned long long)comp.frame_index, cfg.leds[c]);
                write_pgm((fs::path(a.dump_dir) / name).string(), sup.channels[c]);
            }
        }
        log_info("suppressed dumps written to " + a.dump_dir);
    }

    if (bench) {
        auto total = StageStats::summarize(result.stages.total_ms);
        auto sup = StageStats::summarize(result.stages.suppress_ms);
        auto pat = StageStats::summarize(result.stages.patch_ms);
        auto inf = StageStats::summarize(result.stages.infer_ms);
        auto smo = StageStats::summarize(result.stages.smooth_ms);
        double per_patch_ms = result.stages.patch_count
                                  ? result.stages.infer_total_ms / double(result.stages.patch_count)
                                  : 0.0;
        double throughput =
            total.mean > 0.0 ? 1000.0 / total.mean : 0.0;

        std::string report;
        char line[256];
        auto add = [&](const char* stage, const StageStats::Summary& s) {
            std::snprintf(line, sizeof(line),
                          "%-10s mean %7.3f ms   p50 %7.3f   p95 %7.3f   p99 %7.3f\n", stage,
                          s.mean, s.p50, s.p95, s.p99);
            report += line;
        };
        std::snprintf(line, sizeof(line), "composites processed: %llu\n",
                      (unsigned long long)result.composites);
        report += line;
        add("suppress", sup);
        add("patch", pat);
        add("infer", inf);
        add("smooth", smo);
        add("total", total);
        std::snprintf(line, sizeof(line),
                      "sustained throughput: %.1f composites/s (80 required)\n", throughput);
        report += line;
        std::snprintf(line, sizeof(line),
                      "per-patch inference: %.4f ms (reference point: 0.47 ms on an M2)\n",
                      per_patch_ms);
        report += line;
        bool ok = total.mean <= 12.5 && throughput >= 80.0;
        std::snprintf(line, sizeof(line), "real-time budget 12.5 ms/composite: %s\n",
                      ok ? "PASS" : "FAIL");
        report += line;

        std::fputs(report.c_str(), stdout);
        if (!report_path.empty()) write_text(report_path, report);
        return ok ? 0 : 1;
    }
    return 0;
}

struct AblateArgs {
    std::string suite_dir = "eclipse_bench_suite", out = "ablation_report";
    uint64_t seed = 20250810;
    int frames = 110, epochs1 = 10, batch = 128;
    double lr = 2e-3, jitter = 1.5;
};

int cmd_ablate(const AblateArgs& a) {
    SuiteManifest manifest = ensure_suite(a.suite_dir, a.frames, a.seed);

    AblationOptions opts;
    opts.train.epochs_stage1 = a.epochs1;
    opts.train.epochs_stage2 = 0;  // accuracy ablation
    opts.train.batch = a.batch;
    opts.train.lr = a.lr;
    opts.jitter_sigma_px = a.jitter;

    AblationReport report = run_ablation(manifest, opts, a.seed);
    std::fputs(report.to_text().c_str(), stdout);
    write_text(a.out + ".txt", report.to_text());
    write_text(a.out + ".json", report.to_json() + "\n");
    log_info("report written to " + a.out + ".txt / .json");
    return 0;
}

int cmd_scaffold(const std::string& dir) {
    fs::create_directories(dir);
    write_text((fs::path(dir) / "scene.json").string(), example_scene_json());
    write_text((fs::path(dir) / "trajectory.json").string(), example_trajectory_json(120));
    std::printf("wrote %s/scene.json and %s/trajectory.json\n", dir.c_str(), dir.c_str());
    std::printf("next: eclipse gen --scene %s/scene.json --trajectory %s/trajectory.json "
                "--out tap.eclt --seed 1\n",
                dir.c_str(), dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EclipseTouch-style synthetic shadow-casting touch pipeline"};
    app.require_subcommand(1);

    auto* scaffold = app.add_subcommand("scaffold", "write example scene/trajectory configs");
    std::string scaffold_dir = "example";
    scaffold->add_option("--dir", scaffold_dir, "output directory");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "render a synthetic raw stream + truth sidecar");
    gen_cmd->add_option("--scene", gen.scene, "scene config (JSON)")->required();
    gen_cmd->add_option("--trajectory", gen.trajectory, "trajectory file (JSON)");
    gen_cmd->add_option("--tap-frames", gen.tap_frames, "use a built-in tap trajectory");
    gen_cmd->add_option("--out", gen.out, "output .eclt stream")->required();
    gen_cmd->add_option("--truth", gen.truth, "truth sidecar path (default <out>.truth.json)");
    gen_cmd->add_option("--seed", gen.seed, "RNG seed");
    gen_cmd->add_flag("--auto-gain", gen.auto_gain, "calibrate exposure from the first pose");

    GenDatasetArgs gds;
    auto* gds_cmd = app.add_subcommand("gen-dataset", "extract labeled fingertip patches");
    gds_cmd->add_option("--stream", gds.stream, "input .eclt stream");
    gds_cmd->add_option("--truth", gds.truth, "truth sidecar (default <stream>.truth.json)");
    gds_cmd->add_option("--suite-dir", gds.suite_dir, "benchmark suite directory");
    gds_cmd->add_option("--split", gds.split, "train|test|all (suite mode)");
    gds_cmd->add_option("--suite-frames", gds.suite_frames, "frames/scene when building");
    gds_cmd->add_option("--leds", gds.leds, "LED channels, e.g. 3,4");
    gds_cmd->add_flag("--single-channel", gds.single_channel, "average LEDs into one channel");
    gds_cmd->add_option("--jitter", gds.jitter, "keypoint jitter sigma in px");
    gds_cmd->add_option("--replicas", gds.replicas, "jittered re-extractions per frame");
    gds_cmd->add_option("--seed", gds.seed, "RNG seed");
    gds_cmd->add_option("--out", gds.out, "output .ecld dataset")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train the touch/hover model");
    train_cmd->add_option("--data", tr.data, "training dataset (.ecld)")->required();
    train_cmd->add_option("--out", tr.out, "output model (.eclm)")->required();
    train_cmd->add_option("--seed", tr.seed, "RNG seed");
    train_cmd->add_option("--epochs1", tr.epochs1, "stage-1 (touch) epochs");
    train_cmd->add_option("--epochs2", tr.epochs2, "stage-2 (hover) epochs");
    train_cmd->add_option("--batch", tr.batch, "batch size");
    train_cmd->add_option("--lr", tr.lr, "learning rate");
    train_cmd->add_option("--tau", tr.tau, "touch threshold on sigmoid(logit)");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a labeled dataset");
    eval_cmd->add_option("--model", ev.model, "model file (.eclm)")->required();
    eval_cmd->add_option("--data", ev.data, "dataset (.ecld)")->required();
    eval_cmd->add_option("--json", ev.json, "also write a JSON summary here");

    ProcessArgs pr;
    auto* proc_cmd = app.add_subcommand("process", "run the touch pipeline over a stream");
    proc_cmd->add_option("--in", pr.in, "input .eclt stream")->required();
    proc_cmd->add_option("--truth", pr.truth, "truth sidecar (default <in>.truth.json)");
    proc_cmd->add_option("--model", pr.model, "model file for the learned estimator");
    proc_cmd->add_flag("--geometric", pr.geometric, "use the analytic shadow-geometry path");
    proc_cmd->add_option("--led", pr.geometric_led, "LED used by the geometric estimator");
    proc_cmd->add_option("--leds", pr.leds, "LED channel set, e.g. 3,4");
    proc_cmd->add_option("--events", pr.events, "write JSONL events here (default stdout)");
    proc_cmd->add_option("--metrics", pr.metrics, "write a JSON metrics summary here");
    proc_cmd->add_option("--dump-suppressed", pr.dump_dir, "dump suppressed channels as PGM");
    proc_cmd->add_option("--jitter", pr.jitter, "keypoint jitter sigma in px");
    proc_cmd->add_option("--tau", pr.tau, "override the model touch threshold");
    proc_cmd->add_option("--window", pr.window, "mean-filter window (frames)");
    proc_cmd->add_option("--seed", pr.seed, "RNG seed");

    AblateArgs ab;
    auto* ablate_cmd = app.add_subcommand("ablate", "run the 26-configuration illuminator study");
    ablate_cmd->add_option("--suite-dir", ab.suite_dir, "benchmark suite directory");
    ablate_cmd->add_option("--frames", ab.frames, "frames/scene when building the suite");
    ablate_cmd->add_option("--seed", ab.seed, "RNG seed");
    ablate_cmd->add_option("--out", ab.out, "report path prefix");
    ablate_cmd->add_option("--epochs1", ab.epochs1, "training epochs per configuration");
    ablate_cmd->add_option("--batch", ab.batch, "batch size");
    ablate_cmd->add_option("--lr", ab.lr, "learning rate");
    ablate_cmd->add_option("--jitter", ab.jitter, "keypoint jitter sigma in px");

    ProcessArgs be;
    std::string bench_report;
    auto* bench_cmd = app.add_subcommand("bench", "measure per-stage latency and throughput");
    bench_cmd->add_option("--in", be.in, "input .eclt stream")->required();
    bench_cmd->add_option("--truth", be.truth, "truth sidecar (default <in>.truth.json)");
    bench_cmd->add_option("--model", be.model, "model file for the learned estimator");
    bench_cmd->add_flag("--geometric", be.geometric, "bench the analytic path instead");
    bench_cmd->add_option("--led", be.geometric_led, "LED used by the geometric estimator");
    bench_cmd->add_option("--leds", be.leds, "LED channel set, e.g. 3,4");
    bench_cmd->add_option("--seed", be.seed, "RNG seed");
    bench_cmd->add_option("--report", bench_report, "also write the report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scaffold->parsed()) return cmd_scaffold(scaffold_dir);
        if (gen_cmd->parsed()) return cmd_gen(gen);
        if (gds_cmd->parsed()) return cmd_gen_dataset(gds);
        if (train_cmd->parsed()) return cmd_train(tr);
        if (eval_cmd->parsed()) return cmd_eval(ev);
        if (proc_cmd->parsed()) return cmd_process(pr, false, "");
        if (ablate_cmd->parsed()) return cmd_ablate(ab);
        if (bench_cmd->parsed()) return cmd_process(be, true, bench_report);
    } catch (const Error& e) {
        std::cerr << "eclipse: error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "eclipse: error: " << e.what() << "\n";
        return 70;
    }
    return 0;
}
