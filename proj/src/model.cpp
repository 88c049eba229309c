#include "eclipse/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "eclipse/rng.hpp"

namespace eclipse {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
    double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * phi;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Numerically stable binary cross-entropy on a logit.
double bce(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

struct ForwardCache {
    std::vector<double> z1, a1;
    double logit = 0.0;
};

void forward(const Model& m, const std::vector<double>& x, ForwardCache& fc) {
    int h = m.cfg.hidden, d = m.input_dim();
    fc.z1.resize(h);
    fc.a1.resize(h);
    for (int i = 0; i < h; ++i) {
        const double* row = m.w1.data() + size_t(i) * d;
        double acc = m.b1[size_t(i)];
        for (int j = 0; j < d; ++j) acc += row[j] * x[size_t(j)];
        fc.z1[size_t(i)] = acc;
        fc.a1[size_t(i)] = gelu(acc);
    }
    double z = m.b2;
    for (int i = 0; i < h; ++i) z += m.w2[size_t(i)] * fc.a1[size_t(i)];
    fc.logit = z;
}

void backward(const Model& m, const std::vector<double>& x, const ForwardCache& fc,
              double dlogit, ModelGrads& g) {
    int h = m.cfg.hidden, d = m.input_dim();
    g.b2 += dlogit;
    for (int i = 0; i < h; ++i) {
        g.w2[size_t(i)] += dlogit * fc.a1[size_t(i)];
        double dz1 = dlogit * m.w2[size_t(i)] * gelu_grad(fc.z1[size_t(i)]);
        g.b1[size_t(i)] += dz1;
        double* row = g.w1.data() + size_t(i) * d;
        for (int j = 0; j < d; ++j) row[j] += dz1 * x[size_t(j)];
    }
}

ModelGrads make_grads(const Model& m) {
    ModelGrads g;
    g.w1.assign(m.w1.size(), 0.0);
    g.b1.assign(m.b1.size(), 0.0);
    g.w2.assign(m.w2.size(), 0.0);
    return g;
}

}  // namespace

void Model::init(uint64_t seed) {
    int d = input_dim();
    w1.assign(size_t(cfg.hidden) * d, 0.0);
    b1.assign(size_t(cfg.hidden), 0.0);
    w2.assign(size_t(cfg.hidden), 0.0);
    b2 = 0.0;

    auto rng = make_rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    double s1 = std::sqrt(2.0 / double(d));
    for (auto& w : w1) w = n01(rng) * s1;
    double s2 = std::sqrt(2.0 / double(cfg.hidden));
    for (auto& w : w2) w = n01(rng) * s2;
}

double Model::logit(const std::vector<double>& features) const {
    ForwardCache fc;
    forward(*this, features, fc);
    return fc.logit;
}

std::vector<double> features_from_patch(const std::vector<float>& pixels, int channels,
                                        int patch, int feat_grid, int finger_id) {
    if (patch % feat_grid != 0)
        raise(ErrorKind::invalid_argument, "patch size not divisible by feature grid");
    int block = patch / feat_grid;
    std::vector<double> out(size_t(feat_grid) * feat_grid * channels + 5, 0.0);
    double inv = 1.0 / double(block * block);
    size_t grid_n = size_t(feat_grid) * feat_grid;
    for (int c = 0; c < channels; ++c) {
        const float* ch = pixels.data() + size_t(c) * patch * patch;
        double* grid = out.data() + size_t(c) * grid_n;
        for (int gy = 0; gy < feat_grid; ++gy) {
            for (int gx = 0; gx < feat_grid; ++gx) {
                double acc = 0.0;
                for (int y = gy * block; y < (gy + 1) * block; ++y)
                    for (int x = gx * block; x < (gx + 1) * block; ++x)
                        acc += ch[size_t(y) * patch + x];
                grid[size_t(gy) * feat_grid + gx] = acc * inv;
            }
        }
        // per-channel standardization decouples the features from surface
        // albedo and overall illumination level
        double mean = 0.0;
        for (size_t i = 0; i < grid_n; ++i) mean += grid[i];
        mean /= double(grid_n);
        double var = 0.0;
        for (size_t i = 0; i < grid_n; ++i) var += (grid[i] - mean) * (grid[i] - mean);
        double inv_sd = 1.0 / (std::sqrt(var / double(grid_n)) + 1e-6);
        for (size_t i = 0; i < grid_n; ++i) grid[i] = (grid[i] - mean) * inv_sd;
    }
    if (finger_id >= 1 && finger_id <= 5)
        out[out.size() - 5 + size_t(finger_id - 1)] = 1.0;
    return out;
}

std::vector<double> features_for_model(const Model& model, const FingerPatch& patch) {
    if (patch.channels != model.cfg.channels)
        raise(ErrorKind::shape_mismatch,
              "patch has " + std::to_string(patch.channels) + " channels, model expects " +
                  std::to_string(model.cfg.channels));
    if (patch.size != model.cfg.patch)
        raise(ErrorKind::shape_mismatch, "patch size does not match model");
    return features_from_patch(patch.pixels, patch.channels, patch.size, model.cfg.feat_grid,
                               patch.finger_id);
}

Inference infer_features(const Model& model, const std::vector<double>& features) {
    if (int(features.size()) != model.input_dim())
        raise(ErrorKind::shape_mismatch, "feature vector size does not match model");
    Inference out;
    out.logit = model.logit(features);
    out.probability = sigmoid(out.logit);
    out.touch = out.probability > model.tau;
    out.hover_mm = std::max(0.0, model.kappa * -out.logit);
    return out;
}

Inference infer(const Model& model, const FingerPatch& patch) {
    return infer_features(model, features_for_model(model, patch));
}

double loss_stage1(const Model& model, const TrainBatch& batch, ModelGrads* grads) {
    if (batch.indices.empty()) raise(ErrorKind::empty_dataset, "empty batch");
    ModelGrads local = grads ? make_grads(model) : ModelGrads{};
    double total = 0.0;
    ForwardCache fc;
    double inv = 1.0 / double(batch.indices.size());
    for (size_t idx : batch.indices) {
        const auto& x = (*batch.features)[idx];
        double y = (*batch.touch)[idx];
        forward(model, x, fc);
        total += bce(fc.logit, y);
        if (grads) backward(model, x, fc, (sigmoid(fc.logit) - y) * inv, local);
    }
    if (grads) *grads = std::move(local);
    return total * inv;
}

double loss_stage2(const Model& model, const TrainBatch& batch, const TrainConfig& cfg,
                   ModelGrads* grads) {
    if (batch.indices.empty()) raise(ErrorKind::empty_dataset, "empty batch");
    ModelGrads local = grads ? make_grads(model) : ModelGrads{};

    size_t n_dist = 0;
    for (size_t idx : batch.indices)
        if ((*batch.touch)[idx] < 0.5) ++n_dist;

    double total = 0.0;
    ForwardCache fc;
    double inv_n = 1.0 / double(batch.indices.size());
    double inv_d = n_dist > 0 ? 1.0 / double(n_dist) : 0.0;
    double s = cfg.stage2_scale_mm;

    for (size_t idx : batch.indices) {
        const auto& x = (*batch.features)[idx];
        double y = (*batch.touch)[idx];
        forward(model, x, fc);

        double dlogit = cfg.stage2_bce_weight * (sigmoid(fc.logit) - y) * inv_n;
        total += cfg.stage2_bce_weight * bce(fc.logit, y) * inv_n;

        if (y < 0.5) {
            double h = (*batch.hover_mm)[idx];
            double e = model.kappa * (-fc.logit) - h;
            double u = e / s;
            total += (std::abs(u) + u * u) * inv_d;
            double dLde = ((u > 0 ? 1.0 : (u < 0 ? -1.0 : 0.0)) / s + 2.0 * e / (s * s)) * inv_d;
            dlogit += dLde * -model.kappa;
            if (grads) local.kappa += dLde * -fc.logit;
        }
        if (grads) backward(model, x, fc, dlogit, local);
    }
    if (grads) *grads = std::move(local);
    return total;
}

namespace {

// Adam over the flat parameter view; kappa is kept positive.
class Adam {
public:
    Adam(std::vector<double*> params, const TrainConfig& cfg)
        : params_(std::move(params)), cfg_(cfg), m_(params_.size(), 0.0),
          v_(params_.size(), 0.0) {}

    void step(const std::vector<double>& grad) {
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            double mh = m_[i] / bc1;
            double vh = v_[i] / bc2;
            *params_[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.adam_eps);
        }
    }

private:
    std::vector<double*> params_;
    TrainConfig cfg_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

}  // namespace

std::vector<double*> parameter_view(Model& model) {
    std::vector<double*> out;
    out.reserve(model.w1.size() + model.b1.size() + model.w2.size() + 2);
    for (auto& w : model.w1) out.push_back(&w);
    for (auto& b : model.b1) out.push_back(&b);
    for (auto& w : model.w2) out.push_back(&w);
    out.push_back(&model.b2);
    out.push_back(&model.kappa);
    return out;
}

std::vector<double> gradient_flat(const ModelGrads& grads) {
    std::vector<double> out;
    out.reserve(grads.w1.size() + grads.b1.size() + grads.w2.size() + 2);
    out.insert(out.end(), grads.w1.begin(), grads.w1.end());
    out.insert(out.end(), grads.b1.begin(), grads.b1.end());
    out.insert(out.end(), grads.w2.begin(), grads.w2.end());
    out.push_back(grads.b2);
    out.push_back(grads.kappa);
    return out;
}

TrainReport train(Model& model, const PatchDataset& dataset, const TrainConfig& cfg) {
    if (dataset.records.empty()) raise(ErrorKind::empty_dataset, "training dataset is empty");

    size_t n = dataset.records.size();
    std::vector<std::vector<double>> features(n);
    std::vector<double> touch(n), hover(n);
    bool any_touch = false, any_hover = false;
    for (size_t i = 0; i < n; ++i) {
        const auto& r = dataset.records[i];
        features[i] = features_from_patch(r.pixels, dataset.channels, dataset.patch,
                                          model.cfg.feat_grid, r.finger_id);
        touch[i] = r.touch ? 1.0 : 0.0;
        hover[i] = r.hover_mm;
        any_touch |= r.touch;
        any_hover |= !r.touch;
    }
    if (!any_touch || !any_hover)
        raise(ErrorKind::invalid_argument, "single-class dataset: need touch and hover samples");

    TrainReport report;
    auto rng = make_rng(derive_seed(cfg.seed, 0x7261696eULL));
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));

    auto run_stage = [&](int epochs, bool stage2, std::vector<double>& losses) {
        TrainConfig stage_cfg = cfg;
        if (stage2) stage_cfg.lr *= cfg.stage2_lr_factor;
        Adam adam(parameter_view(model), stage_cfg);
        for (int epoch = 0; epoch < epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            double epoch_loss = 0.0;
            size_t batches = 0;
            for (size_t start = 0; start < n; start += size_t(cfg.batch)) {
                TrainBatch batch;
                batch.features = &features;
                batch.touch = &touch;
                batch.hover_mm = &hover;
                size_t end = std::min(n, start + size_t(cfg.batch));
                batch.indices.assign(order.begin() + start, order.begin() + end);

                ModelGrads grads;
                double loss = stage2 ? loss_stage2(model, batch, cfg, &grads)
                                     : loss_stage1(model, batch, &grads);
                adam.step(gradient_flat(grads));
                model.kappa = std::max(model.kappa, 0.01);
                epoch_loss += loss;
                ++batches;
            }
            losses.push_back(epoch_loss / double(batches));
        }
    };

    run_stage(cfg.epochs_stage1, false, report.stage1_epoch_loss);
    run_stage(cfg.epochs_stage2, true, report.stage2_epoch_loss);
    return report;
}

// --- serialization ---------------------------------------------------------
// ECLM: magic | version u16 | channels u16 | feat_grid u16 | hidden u16 |
// patch u16 | kappa f32 | tau f32 | weights f32 (w1, b1, w2, b2).

namespace {

constexpr char kModelMagic[4] = {'E', 'C', 'L', 'M'};
constexpr uint16_t kModelVersion = 1;

void put_u16(std::ostream& os, uint16_t v) {
    char b[2] = {char(v & 0xff), char(v >> 8)};
    os.write(b, 2);
}

uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    if (!is.read(reinterpret_cast<char*>(b), 2))
        raise(ErrorKind::truncated, "truncated model file");
    return uint16_t(b[0] | (b[1] << 8));
}

void put_f32(std::ostream& os, float f) {
    uint32_t u;
    std::memcpy(&u, &f, 4);
    char b[4] = {char(u & 0xff), char((u >> 8) & 0xff), char((u >> 16) & 0xff), char(u >> 24)};
    os.write(b, 4);
}

float get_f32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        raise(ErrorKind::truncated, "truncated model file");
    uint32_t u = uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
                 (uint32_t(b[3]) << 24);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace

void Model::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) raise(ErrorKind::io, "cannot open for write: " + path);
    os.write(kModelMagic, 4);
    put_u16(os, kModelVersion);
    put_u16(os, uint16_t(cfg.channels));
    put_u16(os, uint16_t(cfg.feat_grid));
    put_u16(os, uint16_t(cfg.hidden));
    put_u16(os, uint16_t(cfg.patch));
    put_f32(os, float(kappa));
    put_f32(os, float(tau));
    for (double w : w1) put_f32(os, float(w));
    for (double b : b1) put_f32(os, float(b));
    for (double w : w2) put_f32(os, float(w));
    put_f32(os, float(b2));
    if (!os) raise(ErrorKind::io, "model write failed");
}

Model Model::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) raise(ErrorKind::io, "cannot open for read: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0)
        raise(ErrorKind::bad_magic, "not an ECLM model (bad magic)");
    if (get_u16(is) != kModelVersion)
        raise(ErrorKind::version_mismatch, "unsupported model version");

    Model m;
    m.cfg.channels = get_u16(is);
    m.cfg.feat_grid = get_u16(is);
    m.cfg.hidden = get_u16(is);
    m.cfg.patch = get_u16(is);
    m.kappa = get_f32(is);
    m.tau = get_f32(is);

    size_t d = size_t(m.input_dim());
    m.w1.resize(size_t(m.cfg.hidden) * d);
    m.b1.resize(size_t(m.cfg.hidden));
    m.w2.resize(size_t(m.cfg.hidden));
    for (auto& w : m.w1) w = get_f32(is);
    for (auto& b : m.b1) b = get_f32(is);
    for (auto& w : m.w2) w = get_f32(is);
    m.b2 = get_f32(is);
    return m;
}

}  // namespace eclipse
