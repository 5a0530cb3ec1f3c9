#include "albench/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "albench/kernels.hpp"
#include "albench/losses.hpp"

namespace albench {

void MlpConfig::validate() const {
    if (input_dim < 1) throw std::invalid_argument("mlp config: input_dim must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("mlp config: need at least one hidden layer");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("mlp config: hidden widths must be >= 1");
    if (embedding_dim < 2) throw std::invalid_argument("mlp config: embedding_dim must be >= 2");
    if (num_classes < 1) throw std::invalid_argument("mlp config: num_classes must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("mlp config: dropout must be in [0, 1)");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
    if (!(momentum >= 0.0)) throw std::invalid_argument("train config: momentum must be >= 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("train config: weight_decay must be >= 0");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (lr_decay_epoch < 0 || lr_decay_epoch > epochs)
        throw std::invalid_argument("train config: lr_decay_epoch must be <= epochs");
    if (!(lr_decay_factor > 0.0)) throw std::invalid_argument("train config: lr_decay_factor must be > 0");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (!(temperature > 0.0)) throw std::invalid_argument("train config: temperature must be > 0");
    if (jitter_sigma < 0.0) throw std::invalid_argument("train config: jitter_sigma must be >= 0");
}

namespace {

// C = A^T * B, where A is n x p and B is n x q. Backward-pass sizes are
// small, so these stay serial.
Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    Matrix c(a.cols, b.cols);
    for (int n = 0; n < a.rows; ++n) {
        auto arow = a.row(n);
        auto brow = b.row(n);
        for (int i = 0; i < a.cols; ++i) {
            double av = arow[i];
            if (av == 0.0) continue;
            auto crow = c.row(i);
            for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C = A * B, A is n x p, B is p x q.
Matrix matmul_nn(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        auto arow = a.row(i);
        auto crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            double av = arow[k];
            if (av == 0.0) continue;
            auto bk = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += av * bk[j];
        }
    }
    return c;
}

std::vector<double> column_sums(const Matrix& a) {
    std::vector<double> s(a.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        auto row = a.row(i);
        for (int j = 0; j < a.cols; ++j) s[j] += row[j];
    }
    return s;
}

inline double activate(double v, Activation a) { return a == Activation::relu ? (v > 0.0 ? v : 0.0) : std::tanh(v); }

inline double activate_deriv(double pre, Activation a) {
    if (a == Activation::relu) return pre > 0.0 ? 1.0 : 0.0;
    double t = std::tanh(pre);
    return 1.0 - t * t;
}

struct ForwardCache {
    std::vector<Matrix> inputs;  // input to each trunk layer
    std::vector<Matrix> pre;     // pre-activation of each trunk layer
    std::vector<Matrix> masks;   // dropout masks per hidden layer (may be empty)
    Matrix emb_raw;
    Matrix emb;  // normalized in contrastive mode
    std::vector<double> inv_norm;
    Matrix logits;
};

void trunk_forward(const Mlp& m, const Matrix& x, Rng* dropout_rng, ForwardCache& cache) {
    const int layers = m.trunk_layers();
    const double p = m.config().dropout;
    cache.inputs.resize(layers);
    cache.pre.resize(layers);
    cache.masks.assign(layers, Matrix());
    Matrix cur = x;
    for (int l = 0; l < layers; ++l) {
        cache.inputs[l] = cur;
        Matrix pre(cur.rows, m.weights[l].rows);
        kernels::matmul_nt(cur, m.weights[l], m.biases[l].data(), pre);
        cache.pre[l] = pre;
        if (l + 1 == layers) {
            cur = std::move(pre);  // embedding layer is linear
            break;
        }
        Matrix post(pre.rows, pre.cols);
        for (size_t i = 0; i < pre.data.size(); ++i) post.data[i] = activate(pre.data[i], m.config().activation);
        if (dropout_rng != nullptr && p > 0.0) {
            Matrix mask(pre.rows, pre.cols);
            const double keep_scale = 1.0 / (1.0 - p);
            for (double& v : mask.data) v = dropout_rng->next_double() < p ? 0.0 : keep_scale;
            for (size_t i = 0; i < post.data.size(); ++i) post.data[i] *= mask.data[i];
            cache.masks[l] = std::move(mask);
        }
        cur = std::move(post);
    }
    cache.emb_raw = cur;

    const bool normalize = m.loss_kind() == LossKind::supervised_contrastive;
    if (normalize) {
        cache.emb = cache.emb_raw;
        cache.inv_norm.resize(cache.emb.rows);
        for (int i = 0; i < cache.emb.rows; ++i) {
            auto row = cache.emb.row(i);
            double inv = 1.0 / std::sqrt(std::max(squared_norm(row), 1e-24));
            cache.inv_norm[i] = inv;
            for (double& v : row) v *= inv;
        }
    } else {
        cache.emb = cache.emb_raw;
    }
    cache.logits = Matrix(cache.emb.rows, m.head_w.rows);
    kernels::matmul_nt(cache.emb, m.head_w, m.head_b.data(), cache.logits);
}

void trunk_backward(const Mlp& m, const ForwardCache& cache, const Matrix& demb, MlpGrads& grads) {
    // demb is the gradient at the (possibly normalized) embedding output.
    Matrix delta;
    if (m.loss_kind() == LossKind::supervised_contrastive) {
        delta = Matrix(demb.rows, demb.cols);
        for (int i = 0; i < demb.rows; ++i) {
            auto g = demb.row(i);
            auto z = cache.emb.row(i);
            auto out = delta.row(i);
            double proj = dot(g, z);
            for (int j = 0; j < demb.cols; ++j) out[j] = cache.inv_norm[i] * (g[j] - proj * z[j]);
        }
    } else {
        delta = demb;
    }
    for (int l = m.trunk_layers() - 1; l >= 0; --l) {
        Matrix dw = matmul_tn(delta, cache.inputs[l]);
        for (size_t i = 0; i < dw.data.size(); ++i) grads.weights[l].data[i] += dw.data[i];
        auto db = column_sums(delta);
        for (size_t i = 0; i < db.size(); ++i) grads.biases[l][i] += db[i];
        if (l == 0) break;
        Matrix dpost = matmul_nn(delta, m.weights[l]);
        const Matrix& mask = cache.masks[l - 1];
        if (!mask.empty())
            for (size_t i = 0; i < dpost.data.size(); ++i) dpost.data[i] *= mask.data[i];
        const Matrix& pre = cache.pre[l - 1];
        delta = Matrix(dpost.rows, dpost.cols);
        for (size_t i = 0; i < dpost.data.size(); ++i)
            delta.data[i] = dpost.data[i] * activate_deriv(pre.data[i], m.config().activation);
    }
}

}  // namespace

Mlp Mlp::init(const MlpConfig& config, LossKind loss_kind, uint64_t seed) {
    config.validate();
    Mlp m;
    m.cfg_ = config;
    m.loss_kind_ = loss_kind;
    Rng rng(Rng::mix(seed, 0x1717));

    std::vector<int> sizes;
    sizes.push_back(config.input_dim);
    for (int h : config.hidden) sizes.push_back(h);
    sizes.push_back(config.embedding_dim);

    auto gaussian_matrix = [&](int rows, int cols, double stddev) {
        Matrix w(rows, cols);
        for (double& v : w.data) v = stddev * rng.next_gaussian();
        return w;
    };

    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        int fan_in = sizes[l];
        int fan_out = sizes[l + 1];
        double stddev = config.activation == Activation::relu ? std::sqrt(2.0 / fan_in) : std::sqrt(1.0 / fan_in);
        if (l + 2 == sizes.size()) stddev = std::sqrt(1.0 / fan_in);  // linear embedding layer
        m.weights.push_back(gaussian_matrix(fan_out, fan_in, stddev));
        m.biases.emplace_back(fan_out, 0.0);
    }
    m.head_w = gaussian_matrix(config.num_classes, config.embedding_dim, std::sqrt(1.0 / config.embedding_dim));
    m.head_b.assign(config.num_classes, 0.0);
    return m;
}

Mlp::Outputs Mlp::forward(const Matrix& x) const {
    ForwardCache cache;
    trunk_forward(*this, x, nullptr, cache);
    return {std::move(cache.logits), std::move(cache.emb)};
}

Mlp::Outputs Mlp::forward_dropout(const Matrix& x, Rng& mask_rng) const {
    ForwardCache cache;
    trunk_forward(*this, x, &mask_rng, cache);
    return {std::move(cache.logits), std::move(cache.emb)};
}

size_t Mlp::num_params() const {
    size_t n = 0;
    for (size_t l = 0; l < weights.size(); ++l) n += weights[l].data.size() + biases[l].size();
    return n + head_w.data.size() + head_b.size();
}

namespace {
double* param_ptr(Mlp& m, size_t i) {
    for (size_t l = 0; l < m.weights.size(); ++l) {
        if (i < m.weights[l].data.size()) return &m.weights[l].data[i];
        i -= m.weights[l].data.size();
        if (i < m.biases[l].size()) return &m.biases[l][i];
        i -= m.biases[l].size();
    }
    if (i < m.head_w.data.size()) return &m.head_w.data[i];
    i -= m.head_w.data.size();
    if (i < m.head_b.size()) return &m.head_b[i];
    throw std::out_of_range("mlp parameter index");
}
}  // namespace

double Mlp::get_param(size_t i) const { return *param_ptr(const_cast<Mlp&>(*this), i); }
void Mlp::set_param(size_t i, double v) { *param_ptr(*this, i) = v; }

bool Mlp::all_finite() const {
    auto ok = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    for (size_t l = 0; l < weights.size(); ++l)
        if (!ok(weights[l].data) || !ok(biases[l])) return false;
    return ok(head_w.data) && ok(head_b);
}

MlpGrads MlpGrads::zeros_like(const Mlp& m) {
    MlpGrads g;
    for (size_t l = 0; l < m.weights.size(); ++l) {
        g.weights.emplace_back(m.weights[l].rows, m.weights[l].cols);
        g.biases.emplace_back(m.biases[l].size(), 0.0);
    }
    g.head_w = Matrix(m.head_w.rows, m.head_w.cols);
    g.head_b.assign(m.head_b.size(), 0.0);
    return g;
}

BatchLoss loss_and_grads(const Mlp& model, const Matrix& x, std::span<const int> labels, double temperature,
                         Rng* dropout_rng, MlpGrads& grads) {
    ForwardCache cache;
    trunk_forward(model, x, dropout_rng, cache);

    BatchLoss out;
    if (model.loss_kind() == LossKind::cross_entropy) {
        LossGrad ce = cross_entropy_with_grad(cache.logits, labels);
        out.primary = ce.loss;
        Matrix dhw = matmul_tn(ce.grad, cache.emb);
        for (size_t i = 0; i < dhw.data.size(); ++i) grads.head_w.data[i] += dhw.data[i];
        auto dhb = column_sums(ce.grad);
        for (size_t i = 0; i < dhb.size(); ++i) grads.head_b[i] += dhb[i];
        Matrix demb = matmul_nn(ce.grad, model.head_w);
        trunk_backward(model, cache, demb, grads);
    } else {
        ContrastiveBatch batch{cache.emb, std::vector<int>(labels.begin(), labels.end()), temperature};
        SupconResult sc = supcon_loss(batch);
        out.primary = sc.loss;
        trunk_backward(model, cache, sc.grad, grads);
        // Classifier head learns on detached embeddings.
        LossGrad ce = cross_entropy_with_grad(cache.logits, labels);
        out.head = ce.loss;
        Matrix dhw = matmul_tn(ce.grad, cache.emb);
        for (size_t i = 0; i < dhw.data.size(); ++i) grads.head_w.data[i] += dhw.data[i];
        auto dhb = column_sums(ce.grad);
        for (size_t i = 0; i < dhb.size(); ++i) grads.head_b[i] += dhb[i];
    }
    return out;
}

BatchLoss eval_loss(const Mlp& model, const Matrix& x, std::span<const int> labels, double temperature) {
    ForwardCache cache;
    trunk_forward(model, x, nullptr, cache);
    BatchLoss out;
    if (model.loss_kind() == LossKind::cross_entropy) {
        out.primary = cross_entropy(cache.logits, labels);
    } else {
        ContrastiveBatch batch{cache.emb, std::vector<int>(labels.begin(), labels.end()), temperature};
        out.primary = supcon_loss(batch).loss;
        out.head = cross_entropy(cache.logits, labels);
    }
    return out;
}

void sgd_step(Mlp& model, const MlpGrads& grads, SgdState& state, double lr, double momentum, double weight_decay) {
    auto update = [&](double& p, double g, double& v) {
        g += weight_decay * p;
        v = momentum * v + g;
        p -= lr * v;
    };
    for (size_t l = 0; l < model.weights.size(); ++l) {
        for (size_t i = 0; i < model.weights[l].data.size(); ++i)
            update(model.weights[l].data[i], grads.weights[l].data[i], state.velocity.weights[l].data[i]);
        for (size_t i = 0; i < model.biases[l].size(); ++i)
            update(model.biases[l][i], grads.biases[l][i], state.velocity.biases[l][i]);
    }
    for (size_t i = 0; i < model.head_w.data.size(); ++i)
        update(model.head_w.data[i], grads.head_w.data[i], state.velocity.head_w.data[i]);
    for (size_t i = 0; i < model.head_b.size(); ++i)
        update(model.head_b[i], grads.head_b[i], state.velocity.head_b[i]);
}

TrainResult train(Mlp& model, const Matrix& x, std::span<const int> labels, const TrainConfig& config) {
    config.validate();
    if (x.rows < 1) throw std::invalid_argument("train: empty dataset");
    if (x.rows != static_cast<int>(labels.size())) throw std::invalid_argument("train: label count mismatch");
    if (model.loss_kind() != config.loss) throw std::invalid_argument("train: model/config loss kind mismatch");

    Rng shuffle_rng(Rng::mix(config.seed, 0x51));
    Rng dropout_rng(Rng::mix(config.seed, 0xD0));
    Rng jitter_rng(Rng::mix(config.seed, 0x71));

    const int n = x.rows;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    TrainResult result;
    SgdState state{MlpGrads::zeros_like(model)};
    const bool contrastive = config.loss == LossKind::supervised_contrastive;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double lr = config.learning_rate * (epoch >= config.lr_decay_epoch ? config.lr_decay_factor : 1.0);
        result.lr_trace.push_back(lr);
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(shuffle_rng.next_below(static_cast<uint64_t>(i + 1)));
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += config.batch_size) {
            const int bsize = std::min(config.batch_size, n - start);
            std::span<const int> batch_idx(order.data() + start, static_cast<size_t>(bsize));
            Matrix xb = x.select_rows(batch_idx);
            std::vector<int> yb(bsize);
            for (int i = 0; i < bsize; ++i) yb[i] = labels[batch_idx[i]];

            MlpGrads grads = MlpGrads::zeros_like(model);
            BatchLoss loss;
            if (contrastive) {
                Matrix views = make_two_view_inputs(xb, config.jitter_sigma, jitter_rng);
                std::vector<int> yv = duplicate_labels(yb);
                loss = loss_and_grads(model, views, yv, config.temperature, &dropout_rng, grads);
            } else {
                loss = loss_and_grads(model, xb, yb, config.temperature, &dropout_rng, grads);
            }
            if (!std::isfinite(loss.total()))
                throw std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batches));
            sgd_step(model, grads, state, lr, config.momentum, config.weight_decay);
            if (!model.all_finite())
                throw std::runtime_error("training diverged: non-finite parameters at epoch " +
                                         std::to_string(epoch) + ", batch " + std::to_string(batches));
            epoch_loss += loss.total();
            ++batches;
        }
        result.loss_trace.push_back(epoch_loss / batches);
    }
    return result;
}

Matrix softmax(const Matrix& logits) {
    Matrix probs;
    kernels::softmax_rows(logits, probs);
    return probs;
}

std::vector<Matrix> mc_dropout_probs(const Mlp& model, const Matrix& x, int passes, uint64_t seed,
                                     bool* zero_dropout_warning) {
    if (passes < 1) throw std::invalid_argument("mc_dropout_probs: passes must be >= 1");
    if (zero_dropout_warning != nullptr) *zero_dropout_warning = model.config().dropout == 0.0;
    std::vector<Matrix> out(passes);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < passes; ++p) {
        Rng pass_rng(Rng::mix(seed, 0x3C00 + static_cast<uint64_t>(p)));
        auto fwd = model.forward_dropout(x, pass_rng);
        out[p] = softmax(fwd.logits);
    }
    return out;
}

namespace {

constexpr uint32_t kCheckpointMagic = 0x4D424C41;  // "ALBM"
constexpr uint32_t kCheckpointVersion = 1;

void write_u32(std::ofstream& f, uint32_t v) { f.write(reinterpret_cast<const char*>(&v), sizeof(v)); }
uint32_t read_u32(std::ifstream& f) {
    uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_tensor(std::ofstream& f, const double* data, uint32_t rows, uint32_t cols) {
    write_u32(f, rows);
    write_u32(f, cols);
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(sizeof(double)) * rows * cols);
}

void read_tensor(std::ifstream& f, double* data, uint32_t rows, uint32_t cols) {
    uint32_t r = read_u32(f), c = read_u32(f);
    if (r != rows || c != cols) throw std::runtime_error("checkpoint: tensor shape mismatch");
    f.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(sizeof(double)) * rows * cols);
    if (!f) throw std::runtime_error("checkpoint: truncated tensor data");
}

}  // namespace

void save_checkpoint(const Mlp& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    write_u32(f, kCheckpointMagic);
    write_u32(f, kCheckpointVersion);
    write_u32(f, static_cast<uint32_t>(2 * model.weights.size() + 2));
    for (size_t l = 0; l < model.weights.size(); ++l) {
        write_tensor(f, model.weights[l].data.data(), model.weights[l].rows, model.weights[l].cols);
        write_tensor(f, model.biases[l].data(), 1, static_cast<uint32_t>(model.biases[l].size()));
    }
    write_tensor(f, model.head_w.data.data(), model.head_w.rows, model.head_w.cols);
    write_tensor(f, model.head_b.data(), 1, static_cast<uint32_t>(model.head_b.size()));

    nlohmann::json sidecar;
    sidecar["format"] = "albench-checkpoint";
    sidecar["version"] = kCheckpointVersion;
    sidecar["loss"] = model.loss_kind() == LossKind::cross_entropy ? "cross-entropy" : "supervised-contrastive";
    const MlpConfig& c = model.config();
    sidecar["model"] = {{"input_dim", c.input_dim},       {"hidden", c.hidden},
                        {"embedding_dim", c.embedding_dim}, {"num_classes", c.num_classes},
                        {"dropout", c.dropout},           {"activation", c.activation == Activation::relu ? "relu" : "tanh"}};
    std::ofstream sf(path + ".json");
    if (!sf) throw std::runtime_error("cannot write checkpoint sidecar: " + path + ".json");
    sf << sidecar.dump(2) << '\n';
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream sf(path + ".json");
    if (!sf) throw std::runtime_error("cannot open checkpoint sidecar: " + path + ".json");
    nlohmann::json sidecar = nlohmann::json::parse(sf);
    if (sidecar.at("format") != "albench-checkpoint") throw std::runtime_error("checkpoint: unknown sidecar format");
    if (sidecar.at("version").get<uint32_t>() != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version");

    MlpConfig cfg;
    const auto& jm = sidecar.at("model");
    cfg.input_dim = jm.at("input_dim").get<int>();
    cfg.hidden = jm.at("hidden").get<std::vector<int>>();
    cfg.embedding_dim = jm.at("embedding_dim").get<int>();
    cfg.num_classes = jm.at("num_classes").get<int>();
    cfg.dropout = jm.at("dropout").get<double>();
    std::string act = jm.at("activation").get<std::string>();
    cfg.activation = act == "relu" ? Activation::relu : Activation::tanh_act;
    LossKind kind =
        sidecar.at("loss") == "supervised-contrastive" ? LossKind::supervised_contrastive : LossKind::cross_entropy;

    Mlp model = Mlp::init(cfg, kind, 0);
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    if (read_u32(f) != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic");
    if (read_u32(f) != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
    uint32_t tensors = read_u32(f);
    if (tensors != 2 * model.weights.size() + 2) throw std::runtime_error("checkpoint: tensor count mismatch");
    for (size_t l = 0; l < model.weights.size(); ++l) {
        read_tensor(f, model.weights[l].data.data(), model.weights[l].rows, model.weights[l].cols);
        read_tensor(f, model.biases[l].data(), 1, static_cast<uint32_t>(model.biases[l].size()));
    }
    read_tensor(f, model.head_w.data.data(), model.head_w.rows, model.head_w.cols);
    read_tensor(f, model.head_b.data(), 1, static_cast<uint32_t>(model.head_b.size()));
    return model;
}

}  // namespace albench
