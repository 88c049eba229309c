#include <doctest.h>

#include <filesystem>
#include <set>

#include "eclipse/ablation.hpp"

using namespace eclipse;

TEST_CASE("enumerate_configs: 26 total, 15 multi + 11 single") {
    auto configs = enumerate_configs();
    REQUIRE(configs.size() == 26);

    int multi = 0, single = 0, singletons = 0;
    std::set<std::string> names;
    for (const auto& c : configs) {
        CHECK(!c.leds.empty());
        CHECK(names.insert(c.name()).second);  // unique
        for (size_t i = 1; i < c.leds.size(); ++i) CHECK(c.leds[i] > c.leds[i - 1]);
        if (c.multi_channel) {
            ++multi;
            if (c.leds.size() == 1) ++singletons;
            CHECK(c.channel_count() == int(c.leds.size()));
        } else {
            ++single;
            CHECK(c.leds.size() >= 2);  // singleton single-channel = multi singleton
            CHECK(c.channel_count() == 1);
        }
    }
    CHECK(multi == 15);
    CHECK(single == 11);  // C(4,2) + C(4,3) + C(4,4)
    CHECK(singletons == 4);
}

TEST_CASE("enumerate_configs is deterministic") {
    auto a = enumerate_configs();
    auto b = enumerate_configs();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].name() == b[i].name());
}

TEST_CASE("suite: manifest round-trip and split sizes") {
    namespace fs = std::filesystem;
    SuiteConfig cfg;
    cfg.dir = fs::temp_directory_path() / "eclipse_mini_suite";
    cfg.frames_per_scene = 4;
    cfg.seed = 77;
    fs::remove_all(cfg.dir);

    SuiteManifest manifest = build_suite(cfg);
    REQUIRE(manifest.scenes.size() == 12);
    int test_scenes = 0;
    for (const auto& sc : manifest.scenes) {
        CHECK(fs::exists(cfg.dir / sc.stream_file));
        CHECK(fs::exists(cfg.dir / sc.truth_file));
        if (sc.test_split) ++test_scenes;
    }
    CHECK(test_scenes == 4);  // two held-out materials x two ambient setups

    SuiteManifest loaded = SuiteManifest::load(cfg.dir);
    CHECK(loaded.scenes.size() == manifest.scenes.size());
    CHECK(loaded.seed == manifest.seed);
    CHECK(loaded.frames_per_scene == manifest.frames_per_scene);

    // rebuild is idempotent: stream bytes unchanged
    auto first_stream = cfg.dir / manifest.scenes[0].stream_file;
    auto before = fs::file_size(first_stream);
    build_suite(cfg);
    CHECK(fs::file_size(first_stream) == before);

    // datasets: split filtering and channel shapes
    PatchDataset train_ds =
        build_dataset_from_suite(manifest, {3, 4}, false, SuiteSplit::train, 1.0, 5);
    PatchDataset test_ds =
        build_dataset_from_suite(manifest, {3, 4}, false, SuiteSplit::test, 1.0, 5);
    CHECK(train_ds.channels == 2);
    CHECK(train_ds.records.size() >= 8u * 3u);  // most frames yield a patch
    CHECK(test_ds.records.size() >= 4u * 3u);
    std::set<uint32_t> train_scenes, test_scenes_ids;
    for (const auto& r : train_ds.records) train_scenes.insert(r.scene_id);
    for (const auto& r : test_ds.records) test_scenes_ids.insert(r.scene_id);
    for (uint32_t id : test_scenes_ids) CHECK(train_scenes.count(id) == 0);

    PatchDataset combined =
        build_dataset_from_suite(manifest, {3, 4}, true, SuiteSplit::train, 1.0, 5);
    CHECK(combined.channels == 1);
    CHECK(combined.single_channel);

    fs::remove_all(cfg.dir);
}

TEST_CASE("report: find, text and json shapes") {
    AblationReport report;
    report.seed = 9;
    for (const auto& cfg : enumerate_configs()) {
        AblationRow row;
        row.config = cfg;
        row.accuracy = 0.5 + 0.01 * double(report.rows.size());
        row.hover_mae_mm = 5.0;
        report.rows.push_back(row);
    }
    REQUIRE(report.rows.size() == 26);

    IlluminatorConfig probe{true, {3, 4}};
    const AblationRow* row = report.find(probe);
    REQUIRE(row != nullptr);
    CHECK(row->config.name() == "multi:3+4");
    CHECK(report.find({false, {1}}) == nullptr);

    std::string text = report.to_text();
    CHECK(text.find("multi:3+4") != std::string::npos);
    CHECK(text.find("single:1+2+3+4") != std::string::npos);
    std::string json = report.to_json();
    CHECK(json.find("\"config\":\"multi:1\"") != std::string::npos);
}
