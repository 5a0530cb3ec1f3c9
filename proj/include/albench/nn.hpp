#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "albench/matrix.hpp"
#include "albench/rng.hpp"

namespace albench {

enum class Activation { relu, tanh_act };
enum class LossKind { cross_entropy, supervised_contrastive };

struct MlpConfig {
    int input_dim = 0;
    std::vector<int> hidden = {64, 64};
    int embedding_dim = 32;
    int num_classes = 0;
    double dropout = 0.2;
    Activation activation = Activation::relu;
    void validate() const;
};

struct TrainConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    int epochs = 200;
    int lr_decay_epoch = 160;  // lr is multiplied by lr_decay_factor from this epoch on
    double lr_decay_factor = 0.1;
    int batch_size = 128;
    LossKind loss = LossKind::cross_entropy;
    double temperature = 0.1;   // supervised contrastive only
    double jitter_sigma = 0.05; // second-view feature jitter
    uint64_t seed = 0;
    void validate() const;
};

// Feed-forward classifier with a linear embedding head. In contrastive mode
// embeddings are L2-normalized and the classifier head is trained on
// detached embeddings.
class Mlp {
public:
    Mlp() = default;
    static Mlp init(const MlpConfig& config, LossKind loss_kind, uint64_t seed);

    struct Outputs {
        Matrix logits;      // n x K
        Matrix embeddings;  // n x e
    };
    Outputs forward(const Matrix& x) const;                          // eval mode, deterministic
    Outputs forward_dropout(const Matrix& x, Rng& mask_rng) const;   // dropout active

    const MlpConfig& config() const { return cfg_; }
    LossKind loss_kind() const { return loss_kind_; }
    int trunk_layers() const { return static_cast<int>(weights.size()); }

    // Flat parameter view used by the optimizer tests and gradient checks.
    size_t num_params() const;
    double get_param(size_t i) const;
    void set_param(size_t i, double v);
    bool all_finite() const;

    // Trunk = hidden layers followed by the linear embedding layer.
    std::vector<Matrix> weights;             // layer l: out_l x in_l
    std::vector<std::vector<double>> biases;
    Matrix head_w;  // K x e
    std::vector<double> head_b;

private:
    MlpConfig cfg_;
    LossKind loss_kind_ = LossKind::cross_entropy;

    friend Mlp load_checkpoint(const std::string&);
};

struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    Matrix head_w;
    std::vector<double> head_b;
    static MlpGrads zeros_like(const Mlp& model);
};

struct BatchLoss {
    double primary = 0.0;  // cross-entropy, or the contrastive loss
    double head = 0.0;     // detached-head cross-entropy (contrastive mode only)
    double total() const { return primary + head; }
};

// Forward + backward for one batch. In contrastive mode `x` must already be
// the two-view batch with duplicated labels. Pass dropout_rng = nullptr for
// deterministic eval-mode gradients.
BatchLoss loss_and_grads(const Mlp& model, const Matrix& x, std::span<const int> labels, double temperature,
                         Rng* dropout_rng, MlpGrads& grads);
BatchLoss eval_loss(const Mlp& model, const Matrix& x, std::span<const int> labels, double temperature);

struct SgdState {
    MlpGrads velocity;
};
// SGD with momentum; weight decay is added to the gradient, so a zero-grad
// step scales parameters by exactly (1 - lr * weight_decay).
void sgd_step(Mlp& model, const MlpGrads& grads, SgdState& state, double lr, double momentum, double weight_decay);

struct TrainResult {
    std::vector<double> loss_trace;  // mean total loss per epoch
    std::vector<double> lr_trace;    // learning rate per epoch
};

TrainResult train(Mlp& model, const Matrix& x, std::span<const int> labels, const TrainConfig& config);

constexpr int kDefaultMcPasses = 50;

// Softmax probabilities from `passes` stochastic forward passes with
// independent dropout masks. Reproducible for any parallel schedule: pass p
// draws its masks from a stream seeded by (seed, p). Sets
// *zero_dropout_warning instead of failing when the model has no dropout.
std::vector<Matrix> mc_dropout_probs(const Mlp& model, const Matrix& x, int passes, uint64_t seed,
                                     bool* zero_dropout_warning = nullptr);

Matrix softmax(const Matrix& logits);

// Versioned binary parameter blob plus a JSON sidecar (path + ".json") that
// carries the architecture; layout documented in the README.
void save_checkpoint(const Mlp& model, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace albench
