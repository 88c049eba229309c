#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "eclipse/estimate.hpp"
#include "eclipse/model.hpp"

using namespace eclipse;

namespace {

// Toy dataset: two constant-intensity patch classes, linearly separable.
PatchDataset toy_dataset(int n, uint64_t seed, int patch = 16, int channels = 1) {
    PatchDataset ds;
    ds.patch = patch;
    ds.channels = channels;
    ds.led_mask = led_mask_of({3});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.02);
    std::uniform_real_distribution<double> hover(5.0, 80.0);
    for (int i = 0; i < n; ++i) {
        PatchRecord r;
        r.frame_index = uint32_t(i);
        r.finger_id = uint8_t(1 + (i % 5));
        r.touch = i % 2 == 0;
        r.hover_mm = r.touch ? 0.0f : float(hover(rng));
        double base = r.touch ? 0.75 : 0.25;
        r.pixels.resize(size_t(patch) * patch * channels);
        for (auto& v : r.pixels) v = float(std::clamp(base + noise(rng), 0.0, 1.0));
        ds.records.push_back(std::move(r));
    }
    return ds;
}

Model small_model(int channels = 1, uint64_t seed = 5) {
    Model m;
    m.cfg.channels = channels;
    m.cfg.feat_grid = 4;
    m.cfg.hidden = 8;
    m.cfg.patch = 16;
    m.init(seed);
    return m;
}

}  // namespace

TEST_CASE("features: average pooling and one-hot id") {
    std::vector<float> pixels(16 * 16, 0.5f);
    auto f = features_from_patch(pixels, 1, 16, 4, 3);
    REQUIRE(f.size() == 16 + 5);
    for (int i = 0; i < 16; ++i) CHECK(f[size_t(i)] == doctest::Approx(0.5));
    CHECK(f[16 + 2] == 1.0);  // finger 3 -> third slot
    CHECK(f[16 + 0] == 0.0);
}

TEST_CASE("infer: saturation, threshold boundary, monotone hover head") {
    Model m = small_model();
    m.kappa = 10.0;
    m.tau = 0.5;

    // craft feature vectors directly
    std::vector<double> x(m.input_dim(), 0.0);
    // force a huge positive logit by overwriting the output bias
    Model sat = m;
    sat.b2 = 10.0;
    for (auto& w : sat.w2) w = 0.0;
    Inference hi = infer_features(sat, x);
    CHECK(hi.touch);
    CHECK(hi.hover_mm == 0.0);

    Model zero = m;
    zero.b2 = 0.0;
    for (auto& w : zero.w2) w = 0.0;
    Inference mid = infer_features(zero, x);
    CHECK(mid.probability == doctest::Approx(0.5));
    CHECK_FALSE(mid.touch);  // threshold is strict
    CHECK(mid.hover_mm == doctest::Approx(0.0));

    Model negv = m;
    negv.b2 = -2.5;
    for (auto& w : negv.w2) w = 0.0;
    Inference far = infer_features(negv, x);
    CHECK_FALSE(far.touch);
    CHECK(far.hover_mm == doctest::Approx(25.0));

    // hover output never increases with the logit
    double prev_hover = 1e30;
    for (double b2 : {-8.0, -4.0, -1.0, 0.0, 1.0, 4.0}) {
        Model v = m;
        v.b2 = b2;
        for (auto& w : v.w2) w = 0.0;
        double hv = infer_features(v, x).hover_mm;
        CHECK(hv <= prev_hover);
        prev_hover = hv;
    }
}

TEST_CASE("infer: channel mismatch raises shape error") {
    Model m = small_model(2);
    FingerPatch p;
    p.size = 16;
    p.channels = 1;
    p.finger_id = 2;
    p.pixels.assign(16 * 16, 0.1f);
    CHECK_THROWS_AS(infer(m, p), Error);
}

TEST_CASE("gradients match central finite differences (stage 1 and 2)") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int trial = 0; trial < 10; ++trial) {
        Model m = small_model(1, 100 + trial);
        m.kappa = 8.0 + 4.0 * u(rng);

        const int n = 6;
        std::vector<std::vector<double>> features(n);
        std::vector<double> touch(n), hover(n);
        for (int i = 0; i < n; ++i) {
            features[size_t(i)].resize(m.input_dim());
            for (auto& v : features[size_t(i)]) v = u(rng);
            touch[size_t(i)] = i % 2 == 0 ? 1.0 : 0.0;
            hover[size_t(i)] = touch[size_t(i)] > 0.5 ? 0.0 : 5.0 + 60.0 * u(rng);
        }
        TrainBatch batch;
        batch.features = &features;
        batch.touch = &touch;
        batch.hover_mm = &hover;
        batch.indices.resize(n);
        for (int i = 0; i < n; ++i) batch.indices[size_t(i)] = size_t(i);

        TrainConfig cfg;
        for (bool stage2 : {false, true}) {
            ModelGrads grads;
            if (stage2)
                loss_stage2(m, batch, cfg, &grads);
            else
                loss_stage1(m, batch, &grads);
            auto flat = gradient_flat(grads);
            auto params = parameter_view(m);
            REQUIRE(flat.size() == params.size());

            // spot-check a deterministic subset of coordinates plus kappa
            std::vector<size_t> picks;
            for (size_t k = 0; k < params.size(); k += 17) picks.push_back(k);
            picks.push_back(params.size() - 1);  // kappa
            picks.push_back(params.size() - 2);  // b2
            for (size_t k : picks) {
                double eps = 1e-5 * std::max(1.0, std::abs(*params[k]));
                double orig = *params[k];
                *params[k] = orig + eps;
                double up = stage2 ? loss_stage2(m, batch, cfg, nullptr)
                                   : loss_stage1(m, batch, nullptr);
                *params[k] = orig - eps;
                double dn = stage2 ? loss_stage2(m, batch, cfg, nullptr)
                                   : loss_stage1(m, batch, nullptr);
                *params[k] = orig;
                double fd = (up - dn) / (2.0 * eps);
                double denom = std::max({std::abs(fd), std::abs(flat[k]), 1e-8});
                double rel = std::abs(fd - flat[k]) / denom;
                INFO("stage2=", stage2, " k=", k, " fd=", fd, " an=", flat[k]);
                CHECK(rel <= 1e-4);
            }
        }
    }
}

TEST_CASE("training: zero epochs returns the initialization") {
    PatchDataset ds = toy_dataset(64, 3);
    Model m = small_model();
    Model init = m;
    TrainConfig cfg;
    cfg.epochs_stage1 = 0;
    cfg.epochs_stage2 = 0;
    train(m, ds, cfg);
    CHECK(m.w1 == init.w1);
    CHECK(m.b1 == init.b1);
    CHECK(m.w2 == init.w2);
    CHECK(m.b2 == init.b2);
}

TEST_CASE("training: rejects empty and single-class datasets") {
    Model m = small_model();
    PatchDataset empty;
    empty.patch = 16;
    empty.channels = 1;
    CHECK_THROWS_AS(train(m, empty, {}), Error);

    PatchDataset ds = toy_dataset(32, 4);
    for (auto& r : ds.records) {
        r.touch = true;
        r.hover_mm = 0.0f;
    }
    CHECK_THROWS_AS(train(m, ds, {}), Error);
}

TEST_CASE("training: separable toy set reaches 100% accuracy, loss non-increasing") {
    PatchDataset train_ds = toy_dataset(256, 5);
    PatchDataset test_ds = toy_dataset(128, 6);

    Model m = small_model();
    TrainConfig cfg;
    cfg.epochs_stage1 = 12;
    cfg.epochs_stage2 = 0;
    cfg.batch = 32;
    cfg.lr = 0.05;
    cfg.seed = 9;
    TrainReport report = train(m, train_ds, cfg);

    Metrics metrics = evaluate(m, test_ds);
    CHECK(metrics.accuracy() == doctest::Approx(1.0));

    REQUIRE(report.stage1_epoch_loss.size() == 12);
    for (size_t e = 1; e < report.stage1_epoch_loss.size(); ++e)
        CHECK(report.stage1_epoch_loss[e] <= report.stage1_epoch_loss[e - 1] + 1e-3);
}

TEST_CASE("training: stage 2 fits hover on the toy set") {
    // hover is encoded in the patch intensity, so the regression is learnable
    PatchDataset ds;
    ds.patch = 16;
    ds.channels = 1;
    ds.led_mask = led_mask_of({3});
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> hover(10.0, 90.0);
    for (int i = 0; i < 512; ++i) {
        PatchRecord r;
        r.finger_id = 2;
        bool touch = i % 3 == 0;
        double h = touch ? 0.0 : hover(rng);
        r.touch = touch;
        r.hover_mm = float(h);
        r.pixels.assign(16 * 16, float(1.0 - h / 100.0));
        ds.records.push_back(std::move(r));
    }
    Model m = small_model();
    TrainConfig cfg;
    cfg.epochs_stage1 = 10;
    cfg.epochs_stage2 = 40;
    cfg.batch = 64;
    cfg.lr = 0.05;
    cfg.seed = 123;
    train(m, ds, cfg);
    CHECK(m.kappa > 0.0);

    Metrics metrics = evaluate(m, ds);
    CHECK(metrics.accuracy() >= 0.97);
    CHECK(metrics.hover_all.mae() <= 6.0);
}

TEST_CASE("training determinism under a fixed seed") {
    PatchDataset ds = toy_dataset(128, 7);
    TrainConfig cfg;
    cfg.epochs_stage1 = 3;
    cfg.epochs_stage2 = 2;
    cfg.seed = 77;

    Model a = small_model(1, 50);
    Model b = small_model(1, 50);
    train(a, ds, cfg);
    train(b, ds, cfg);
    CHECK(a.w1 == b.w1);
    CHECK(a.b1 == b.b1);
    CHECK(a.w2 == b.w2);
    CHECK(a.b2 == b.b2);
    CHECK(a.kappa == b.kappa);
}

TEST_CASE("model file round-trip") {
    Model m = small_model(2, 31);
    m.kappa = 12.5;
    m.tau = 0.45;
    auto path = std::filesystem::temp_directory_path() / "eclipse_test.eclm";
    m.save(path.string());
    Model back = Model::load(path.string());
    CHECK(back.cfg.channels == m.cfg.channels);
    CHECK(back.cfg.feat_grid == m.cfg.feat_grid);
    CHECK(back.cfg.hidden == m.cfg.hidden);
    CHECK(back.kappa == doctest::Approx(12.5));
    CHECK(back.tau == doctest::Approx(0.45));
    REQUIRE(back.w1.size() == m.w1.size());
    for (size_t i = 0; i < m.w1.size(); ++i)
        CHECK(back.w1[i] == doctest::Approx(m.w1[i]).epsilon(1e-6));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(size_t(m.input_dim()));
    for (auto& v : x) v = u(rng);
    CHECK(infer_features(back, x).logit ==
          doctest::Approx(infer_features(m, x).logit).epsilon(1e-5));
    std::filesystem::remove(path);
}

TEST_CASE("model file: bad magic raises") {
    auto path = std::filesystem::temp_directory_path() / "eclipse_bad.eclm";
    {
        std::ofstream os(path, std::ios::binary);
        os << "JUNKJUNKJUNK";
    }
    try {
        Model::load(path.string());
        FAIL("expected bad magic");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::bad_magic);
    }
    std::filesystem::remove(path);
}
