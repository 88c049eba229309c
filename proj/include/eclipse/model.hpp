#pragma once
// Touch/hover model: fixed average-pool feature extractor, two-layer
// perceptron with a smooth-gated nonlinearity, and a single logit that
// encodes scaled hover distance (sigmoid-thresholded for touch state).

#include <cstdint>
#include <string>
#include <vector>

#include "eclipse/patches.hpp"

namespace eclipse {

struct ModelConfig {
    int channels = 2;
    int feat_grid = 16;   // patch downsampled to feat_grid x feat_grid per channel
    int hidden = 128;
    int patch = 64;
};

struct Model {
    ModelConfig cfg;
    std::vector<double> w1;  // hidden x input, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;
    double kappa = 10.0;     // mm per logit unit; hover = max(0, kappa * -logit)
    double tau = 0.5;        // touch threshold on sigmoid(logit)

    int input_dim() const { return cfg.feat_grid * cfg.feat_grid * cfg.channels + 5; }
    void init(uint64_t seed);

    double logit(const std::vector<double>& features) const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);
};

// Average-pooled patch features with the 5-d one-hot finger id appended.
std::vector<double> features_from_patch(const std::vector<float>& pixels, int channels,
                                        int patch, int feat_grid, int finger_id);
std::vector<double> features_for_model(const Model& model, const FingerPatch& patch);

struct Inference {
    double logit = 0.0;
    double probability = 0.0;
    bool touch = false;
    double hover_mm = 0.0;
};

// Throws shape_mismatch when the patch channel count differs from the model.
Inference infer(const Model& model, const FingerPatch& patch);
Inference infer_features(const Model& model, const std::vector<double>& features);

// --- training -------------------------------------------------------------

struct TrainConfig {
    int epochs_stage1 = 10;
    int epochs_stage2 = 10;
    int batch = 128;
    double lr = 1e-3;
    double stage2_lr_factor = 0.5;    // fine-tuning runs gentler
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double stage2_bce_weight = 1.0;   // BCE stays on as an auxiliary in stage 2
    double stage2_scale_mm = 25.0;    // error normalization for MAE+MSE
    uint64_t seed = 1;
};

struct TrainReport {
    std::vector<double> stage1_epoch_loss;
    std::vector<double> stage2_epoch_loss;
};

// Stage 1 minimizes BCE on touch flags; stage 2 minimizes MAE+MSE between
// kappa*(-logit) and ground-truth hover on non-touch samples (BCE auxiliary).
// Deterministic under cfg.seed. Throws on empty or single-class datasets.
TrainReport train(Model& model, const PatchDataset& dataset, const TrainConfig& cfg);

// --- loss/gradient surface (exposed for finite-difference verification) ----

struct ModelGrads {
    std::vector<double> w1, b1, w2;
    double b2 = 0.0;
    double kappa = 0.0;
};

struct TrainBatch {
    const std::vector<std::vector<double>>* features = nullptr;
    std::vector<size_t> indices;
    const std::vector<double>* touch = nullptr;     // 0/1
    const std::vector<double>* hover_mm = nullptr;  // stage 2 only
};

double loss_stage1(const Model& model, const TrainBatch& batch, ModelGrads* grads);
double loss_stage2(const Model& model, const TrainBatch& batch, const TrainConfig& cfg,
                   ModelGrads* grads);

// Flat parameter view in a fixed order (w1, b1, w2, b2, kappa).
std::vector<double*> parameter_view(Model& model);
std::vector<double> gradient_flat(const ModelGrads& grads);

}  // namespace eclipse
