#include "eclipse/bench_suite.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "eclipse/render.hpp"
#include "eclipse/rng.hpp"
#include "eclipse/suppress.hpp"

namespace eclipse {

namespace {

using json = nlohmann::ordered_json;

constexpr int kSuiteScenes = 12;
constexpr double kAlbedos[6] = {0.15, 0.3, 0.45, 0.6, 0.75, 0.9};

// Finger proportions by id (thumb stubby, pinky slim).
constexpr double kFingerLength[6] = {0, 40, 50, 55, 50, 40};
constexpr double kFingerRadius[6] = {0, 9.5, 8.0, 8.0, 7.5, 6.5};

Scene::FingerPose sample_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    Scene::FingerPose p;
    double r = u01(rng);
    p.finger_id = r < 0.1 ? 1 : r < 0.6 ? 2 : r < 0.8 ? 3 : r < 0.9 ? 4 : 5;
    p.length = kFingerLength[p.finger_id];
    p.radius = kFingerRadius[p.finger_id];

    double h;
    if (u01(rng) < 0.5) {
        h = u01(rng) * 0.45;  // touching
    } else {
        // hover heights log-uniform above a 4 mm floor; below that the gap is
        // sub-pixel at 640x480 and the label would be pure noise
        h = std::exp(std::log(4.0) + u01(rng) * (std::log(110.0) - std::log(4.0)));
    }
    double x = -40.0 + u01(rng) * 120.0;
    double y = 70.0 + u01(rng) * 80.0;
    p.tip = {x, y, h};

    double yaw = (-35.0 + u01(rng) * 70.0) * M_PI / 180.0;
    double pitch = (30.0 + u01(rng) * 25.0) * M_PI / 180.0;
    // pointing direction is +y-ish; the axis runs tip -> knuckle
    p.axis = Vec3{-std::sin(yaw) * std::cos(pitch), -std::cos(yaw) * std::cos(pitch),
                  std::sin(pitch)};
    return p;
}

}  // namespace

Scene make_suite_scene(int id, uint64_t seed, bool noise) {
    if (id < 0 || id >= kSuiteScenes)
        raise(ErrorKind::invalid_argument, "suite scene id outside 0..11");

    Scene s = make_default_scene();
    s.fingers.clear();
    s.surface.albedo = kAlbedos[id % 6];
    if (id % 6 == 2) {
        s.surface.texture.kind = PlaneTexture::Kind::checker;
        s.surface.texture.secondary_albedo = s.surface.albedo * 0.55;
        s.surface.texture.cell_mm = 35.0;
    }

    if (id / 6 == 1) {
        // Extraneous shadow-casting sources, deliberately stronger than the
        // headset LEDs on the surface.
        s.ambient_lights = {
            PointLight{{-500, 350, 900}, 5.5e5, Falloff::inverse_square},
            PointLight{{450, -250, 750}, 3.5e5, Falloff::inverse_square},
        };
        s.ambient_floor = 0.05;
    } else {
        s.ambient_floor = 0.02;
    }

    s.render.noise.enabled = noise;
    s.render.noise.read_sigma_lsb = 1.0;

    // Calibrate exposure on the brightest pose (finger raised toward the LEDs).
    auto rng = make_rng(derive_seed(seed, uint64_t(id), 0xca1ULL));
    Scene bright = s.with_finger_poses(
        {{2, Vec3{20, 110, 110}, Vec3{0, -0.707, 0.707}, 50.0, 8.0}});
    s.render.exposure_gain = suggest_exposure_gain(bright, 0.90);
    (void)rng;
    return s;
}

Trajectory make_suite_trajectory(const Scene& scene, int id, int frames, uint64_t seed) {
    (void)scene;
    Trajectory traj;
    auto rng = make_rng(derive_seed(seed, uint64_t(id), 0x7261ULL));
    for (int i = 0; i < frames; ++i) traj.steps.push_back({{sample_pose(rng)}});
    return traj;
}

void SuiteManifest::save() const {
    json scenes_json = json::array();
    for (const auto& sc : scenes) {
        scenes_json.push_back({{"id", sc.id},
                               {"stream", sc.stream_file},
                               {"truth", sc.truth_file},
                               {"albedo", sc.albedo},
                               {"textured", sc.textured},
                               {"ambient_setup", sc.ambient_setup},
                               {"test_split", sc.test_split}});
    }
    json j = {{"frames_per_scene", frames_per_scene}, {"seed", seed}, {"scenes", scenes_json}};
    std::ofstream os(dir / "manifest.json");
    if (!os) raise(ErrorKind::io, "cannot write suite manifest");
    os << j.dump(2) << "\n";
}

SuiteManifest SuiteManifest::load(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) raise(ErrorKind::io, "no suite manifest in " + dir.string());
    json j = json::parse(is, nullptr, false);
    if (j.is_discarded()) raise(ErrorKind::format, "invalid suite manifest");

    SuiteManifest m;
    m.dir = dir;
    m.frames_per_scene = j.at("frames_per_scene").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    for (const json& sj : j.at("scenes")) {
        SuiteScene sc;
        sc.id = sj.at("id").get<int>();
        sc.stream_file = sj.at("stream").get<std::string>();
        sc.truth_file = sj.at("truth").get<std::string>();
        sc.albedo = sj.at("albedo").get<double>();
        sc.textured = sj.at("textured").get<bool>();
        sc.ambient_setup = sj.at("ambient_setup").get<int>();
        sc.test_split = sj.at("test_split").get<bool>();
        m.scenes.push_back(sc);
    }
    return m;
}

SuiteManifest build_suite(const SuiteConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.dir);

    SuiteManifest manifest;
    manifest.dir = cfg.dir;
    manifest.frames_per_scene = cfg.frames_per_scene;
    manifest.seed = cfg.seed;

    for (int id = 0; id < kSuiteScenes; ++id) {
        SuiteScene sc;
        sc.id = id;
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%02d.eclt", id);
        sc.stream_file = name;
        sc.truth_file = std::string(name) + ".truth.json";
        sc.albedo = kAlbedos[id % 6];
        sc.textured = id % 6 == 2;
        sc.ambient_setup = id / 6;
        sc.test_split = (id % 6 == 1) || (id % 6 == 4);  // whole materials held out

        fs::path stream_path = cfg.dir / sc.stream_file;
        fs::path truth_path = cfg.dir / sc.truth_file;
        if (!fs::exists(stream_path) || !fs::exists(truth_path)) {
            Scene scene = make_suite_scene(id, cfg.seed, cfg.noise);
            Trajectory traj =
                make_suite_trajectory(scene, id, cfg.frames_per_scene, cfg.seed);
            StreamTruth truth;
            truth.scene = scene;
            auto raw = synthesize_raw_stream(scene, traj, derive_seed(cfg.seed, uint64_t(id)),
                                             &truth.frames);
            encode_stream_file(raw, stream_path.string());
            save_truth(truth, truth_path.string());
        }
        manifest.scenes.push_back(sc);
    }
    manifest.save();
    return manifest;
}

void append_dataset_from_stream(PatchDataset& ds, const std::vector<RawSubframe>& raw,
                                const StreamTruth& truth, const std::vector<int>& leds,
                                bool single_channel, double jitter_sigma_px, uint64_t seed,
                                uint32_t scene_id, const PatchConfig& patch_cfg) {
    DropReport drops;
    auto composites = demux(raw, drops);

    for (const auto& comp : composites) {
        if (comp.frame_index >= truth.frames.size()) break;
        const GroundTruth& gt = truth.frames[comp.frame_index];
        SuppressedFrame sup = suppress_for_config(comp, leds, single_channel);

        uint64_t kp_seed = derive_seed(seed, uint64_t(scene_id), comp.frame_index);
        auto rng = make_rng(kp_seed);
        std::normal_distribution<double> noise(0.0, jitter_sigma_px > 0 ? jitter_sigma_px : 1.0);
        auto jit = [&](Vec2 p) {
            if (jitter_sigma_px <= 0) return p;
            return Vec2{p.x + noise(rng), p.y + noise(rng)};
        };

        for (const auto& ft : gt.fingers) {
            if (!ft.in_view) continue;
            HandKeypoints kp;
            kp.wrist = jit(ft.wrist_px);
            FingerKeypoints2 fk;
            fk.tip = jit(ft.tip_px);
            fk.pip = jit(ft.pip_px);
            fk.mcp = jit(ft.mcp_px);
            kp.fingers[ft.finger_id] = fk;

            Similarity2 tf = patch_transform(kp, ft.finger_id, patch_cfg);
            FingerPatch patch = extract_patch(sup, tf, ft.finger_id, patch_cfg);

            PatchRecord rec;
            rec.frame_index = uint32_t(comp.frame_index);
            rec.scene_id = scene_id;
            rec.finger_id = uint8_t(ft.finger_id);
            rec.touch = ft.touch;
            rec.hover_mm = float(ft.hover_mm);
            rec.pixels = std::move(patch.pixels);
            ds.records.push_back(std::move(rec));
        }
    }
}

PatchDataset build_dataset_from_suite(const SuiteManifest& manifest,
                                      const std::vector<int>& leds, bool single_channel,
                                      SuiteSplit split, double jitter_sigma_px, uint64_t seed,
                                      const PatchConfig& patch_cfg, int replicas) {
    PatchDataset ds;
    ds.patch = patch_cfg.size;
    ds.channels = single_channel ? 1 : int(leds.size());
    ds.led_mask = led_mask_of(leds);
    ds.single_channel = single_channel;

    for (const auto& sc : manifest.scenes) {
        if (split == SuiteSplit::train && sc.test_split) continue;
        if (split == SuiteSplit::test && !sc.test_split) continue;

        auto raw = decode_stream_file((manifest.dir / sc.stream_file).string());
        StreamTruth truth = load_truth((manifest.dir / sc.truth_file).string());
        for (int rep = 0; rep < std::max(1, replicas); ++rep)
            append_dataset_from_stream(ds, raw, truth, leds, single_channel, jitter_sigma_px,
                                       derive_seed(seed, uint64_t(rep)), uint32_t(sc.id),
                                       patch_cfg);
    }
    return ds;
}

}  // namespace eclipse
