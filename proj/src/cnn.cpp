#include "cnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "file_util.hpp"
#include "layer_ops.hpp"
#include "rng.hpp"

namespace sardet {

using namespace layer_ops;

namespace {

// ---------------------------------------------------------------------------
// Shape plan through the layer chain.
// ---------------------------------------------------------------------------

struct StageShape {
    int h = 0, w = 0, c = 0;
    bool flat = false;
    int d = 0;

    std::int64_t numel() const {
        return flat ? d : static_cast<std::int64_t>(h) * w * c;
    }
};

std::vector<StageShape> shape_plan(const Network& net) {
    std::vector<StageShape> plan;
    StageShape cur{net.chip_size, net.chip_size, net.n_bands, false, 0};
    plan.push_back(cur);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& spec = net.layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + layer_to_string(spec) + ")";
        switch (spec.kind) {
        case LayerKind::conv2d:
            if (cur.flat) throw ValidationError(where + ": conv2d needs a spatial input");
            if (cur.c != spec.in_ch)
                throw ValidationError(where + ": expects " + std::to_string(spec.in_ch) +
                                      " channels, input has " + std::to_string(cur.c));
            cur.c = spec.out_ch;
            break;
        case LayerKind::relu:
            break;
        case LayerKind::maxpool:
            if (cur.flat) throw ValidationError(where + ": maxpool needs a spatial input");
            if (cur.h % 2 != 0 || cur.w % 2 != 0)
                throw ValidationError(where + ": maxpool needs even spatial dimensions");
            cur.h /= 2;
            cur.w /= 2;
            break;
        case LayerKind::flatten:
            if (cur.flat) throw ValidationError(where + ": input already flat");
            cur.d = cur.h * cur.w * cur.c;
            cur.flat = true;
            break;
        case LayerKind::dense:
            if (!cur.flat) throw ValidationError(where + ": dense needs a flattened input");
            if (cur.d != spec.in_dim)
                throw ValidationError(where + ": expects dimension " + std::to_string(spec.in_dim) +
                                      ", input has " + std::to_string(cur.d));
            cur.d = spec.out_dim;
            break;
        case LayerKind::softmax:
            if (!cur.flat) throw ValidationError(where + ": softmax needs a flattened input");
            break;
        }
        plan.push_back(cur);
    }
    return plan;
}

std::vector<int> weight_shape(const LayerSpec& spec) {
    if (spec.kind == LayerKind::conv2d) return {3, 3, spec.in_ch, spec.out_ch};
    if (spec.kind == LayerKind::dense) return {spec.in_dim, spec.out_dim};
    return {};
}

std::vector<int> bias_shape(const LayerSpec& spec) {
    if (spec.kind == LayerKind::conv2d) return {spec.out_ch};
    if (spec.kind == LayerKind::dense) return {spec.out_dim};
    return {};
}

struct ForwardCache {
    std::vector<Tensor> acts;                       // acts[0] = input
    std::vector<std::vector<std::int64_t>> argmax;  // per layer, maxpool only
};

Tensor forward_internal(const Network& net, const Tensor& batch, ForwardCache* cache) {
    if (batch.shape.size() != 4 || batch.shape[1] != net.chip_size ||
        batch.shape[2] != net.chip_size || batch.shape[3] != net.n_bands)
        throw ValidationError("forward: batch shape does not match the network input " +
                              std::to_string(net.chip_size) + "x" + std::to_string(net.chip_size) +
                              "x" + std::to_string(net.n_bands));
    const int n = batch.shape[0];
    const auto plan = shape_plan(net);

    Tensor cur = batch;
    if (cache) {
        cache->acts.clear();
        cache->argmax.assign(net.layers.size(), {});
        cache->acts.push_back(cur);
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& spec = net.layers[i];
        const StageShape& in_s = plan[i];
        const StageShape& out_s = plan[i + 1];
        Tensor out;
        switch (spec.kind) {
        case LayerKind::conv2d:
            out = Tensor({n, out_s.h, out_s.w, out_s.c});
            conv2d_fwd(cur.data.data(), n, in_s.h, in_s.w, in_s.c, net.weights[i].data.data(),
                       net.biases[i].data.data(), out_s.c, out.data.data());
            break;
        case LayerKind::relu:
            out = cur;
            relu_fwd(cur.data.data(), cur.data.size(), out.data.data());
            break;
        case LayerKind::maxpool: {
            out = Tensor({n, out_s.h, out_s.w, out_s.c});
            std::int64_t* am = nullptr;
            if (cache) {
                cache->argmax[i].assign(out.data.size(), 0);
                am = cache->argmax[i].data();
            }
            maxpool_fwd(cur.data.data(), n, in_s.h, in_s.w, in_s.c, out.data.data(), am);
            break;
        }
        case LayerKind::flatten:
            out = cur;
            out.shape = {n, out_s.d};
            break;
        case LayerKind::dense:
            out = Tensor({n, out_s.d});
            dense_fwd(cur.data.data(), n, in_s.d, net.weights[i].data.data(),
                      net.biases[i].data.data(), out_s.d, out.data.data());
            break;
        case LayerKind::softmax:
            out = Tensor({n, out_s.d});
            softmax_fwd(cur.data.data(), n, in_s.d, out.data.data());
            break;
        }
        cur = std::move(out);
        if (cache) cache->acts.push_back(cur);
    }
    return cur;
}

// Forward pass on a 64-bit copy of the parameters; used by grad_check only.
double shadow_loss(const Network& net, const std::vector<std::vector<double>>& weights,
                   const std::vector<std::vector<double>>& biases,
                   const std::vector<double>& input, int n, const std::vector<int>& labels) {
    const auto plan = shape_plan(net);
    std::vector<double> cur = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& spec = net.layers[i];
        const StageShape& in_s = plan[i];
        const StageShape& out_s = plan[i + 1];
        std::vector<double> out(static_cast<std::size_t>(n) * out_s.numel());
        switch (spec.kind) {
        case LayerKind::conv2d:
            conv2d_fwd(cur.data(), n, in_s.h, in_s.w, in_s.c, weights[i].data(), biases[i].data(),
                       out_s.c, out.data());
            break;
        case LayerKind::relu:
            relu_fwd(cur.data(), cur.size(), out.data());
            break;
        case LayerKind::maxpool:
            maxpool_fwd(cur.data(), n, in_s.h, in_s.w, in_s.c, out.data(),
                        static_cast<std::int64_t*>(nullptr));
            break;
        case LayerKind::flatten:
            out = cur;
            break;
        case LayerKind::dense:
            dense_fwd(cur.data(), n, in_s.d, weights[i].data(), biases[i].data(), out_s.d,
                      out.data());
            break;
        case LayerKind::softmax:
            softmax_fwd(cur.data(), n, in_s.d, out.data());
            break;
        }
        cur = std::move(out);
    }
    const int classes = net.n_classes;
    double loss = 0.0;
    for (int s = 0; s < n; ++s) {
        const double p = std::max(cur[static_cast<std::size_t>(s) * classes + labels[s]], 1e-12);
        loss -= std::log(p);
    }
    return loss / n;
}

Tensor chips_to_tensor(const Network& net, const std::vector<Chip>& chips) {
    Tensor batch({static_cast<int>(chips.size()), net.chip_size, net.chip_size, net.n_bands});
    const std::size_t per = static_cast<std::size_t>(net.chip_size) * net.chip_size * net.n_bands;
    for (std::size_t i = 0; i < chips.size(); ++i) {
        const Chip& chip = chips[i];
        if (chip.size != net.chip_size || chip.n_bands != net.n_bands ||
            chip.data.size() != per)
            throw ValidationError("chip shape does not match the network input");
        for (std::size_t k = 0; k < per; ++k) {
            const int band = static_cast<int>(k % net.n_bands);
            batch.data[i * per + k] =
                (chip.data[k] - net.norm_mean[band]) / net.norm_std[band];
        }
    }
    return batch;
}

} // namespace

std::string layer_to_string(const LayerSpec& spec) {
    switch (spec.kind) {
    case LayerKind::conv2d:
        return "conv2d(" + std::to_string(spec.in_ch) + "->" + std::to_string(spec.out_ch) + ")";
    case LayerKind::relu:
        return "relu";
    case LayerKind::maxpool:
        return "maxpool";
    case LayerKind::flatten:
        return "flatten";
    case LayerKind::dense:
        return "dense(" + std::to_string(spec.in_dim) + "->" + std::to_string(spec.out_dim) + ")";
    case LayerKind::softmax:
        return "softmax";
    }
    return "?";
}

Network Network::make_default(int chip_size, int n_bands) {
    if (chip_size < 4 || chip_size % 4 != 0)
        throw ValidationError("network: chip size must be a positive multiple of 4");
    Network net;
    net.chip_size = chip_size;
    net.n_bands = n_bands;
    const int flat = (chip_size / 4) * (chip_size / 4) * 16;
    net.layers = {
        {LayerKind::conv2d, n_bands, 8, 0, 0}, {LayerKind::relu},   {LayerKind::maxpool},
        {LayerKind::conv2d, 8, 16, 0, 0},      {LayerKind::relu},   {LayerKind::maxpool},
        {LayerKind::flatten},                  {LayerKind::dense, 0, 0, flat, 32},
        {LayerKind::relu},                     {LayerKind::dense, 0, 0, 32, 2},
        {LayerKind::softmax},
    };
    net.weights.resize(net.layers.size());
    net.biases.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto ws = weight_shape(net.layers[i]);
        if (!ws.empty()) {
            net.weights[i] = Tensor(ws);
            net.biases[i] = Tensor(bias_shape(net.layers[i]));
        }
    }
    net.norm_mean.assign(static_cast<std::size_t>(n_bands), 0.0f);
    net.norm_std.assign(static_cast<std::size_t>(n_bands), 1.0f);
    net.validate_architecture();
    return net;
}

Network Network::make_tiny(int n_bands) {
    Network net;
    net.chip_size = 8;
    net.n_bands = n_bands;
    net.layers = {
        {LayerKind::conv2d, n_bands, 4, 0, 0}, {LayerKind::relu},   {LayerKind::maxpool},
        {LayerKind::conv2d, 4, 8, 0, 0},       {LayerKind::relu},   {LayerKind::maxpool},
        {LayerKind::flatten},                  {LayerKind::dense, 0, 0, 32, 16},
        {LayerKind::relu},                     {LayerKind::dense, 0, 0, 16, 2},
        {LayerKind::softmax},
    };
    net.weights.resize(net.layers.size());
    net.biases.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto ws = weight_shape(net.layers[i]);
        if (!ws.empty()) {
            net.weights[i] = Tensor(ws);
            net.biases[i] = Tensor(bias_shape(net.layers[i]));
        }
    }
    net.norm_mean.assign(static_cast<std::size_t>(n_bands), 0.0f);
    net.norm_std.assign(static_cast<std::size_t>(n_bands), 1.0f);
    net.validate_architecture();
    return net;
}

void Network::init_params(std::uint64_t seed) {
    Rng rng(Rng::derive(seed, 11));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& spec = layers[i];
        int fan_in = 0;
        if (spec.kind == LayerKind::conv2d)
            fan_in = 9 * spec.in_ch;
        else if (spec.kind == LayerKind::dense)
            fan_in = spec.in_dim;
        else
            continue;
        const double limit = std::sqrt(6.0 / fan_in);
        for (float& x : weights[i].data) x = static_cast<float>(rng.uniform(-limit, limit));
        std::fill(biases[i].data.begin(), biases[i].data.end(), 0.0f);
    }
}

std::int64_t Network::param_count() const {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < layers.size(); ++i)
        n += static_cast<std::int64_t>(weights[i].data.size() + biases[i].data.size());
    return n;
}

void Network::validate_architecture() const {
    if (layers.empty()) throw ValidationError("network: empty layer list");
    if (layers.back().kind != LayerKind::softmax)
        throw ValidationError("network: last layer must be softmax");
    if (weights.size() != layers.size() || biases.size() != layers.size())
        throw ValidationError("network: parameter lists must parallel the layer list");
    const auto plan = shape_plan(*this);
    if (!plan.back().flat || plan.back().d != n_classes)
        throw ValidationError("network: output dimension must equal n_classes");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto ws = weight_shape(layers[i]);
        if (ws.empty()) {
            if (!weights[i].data.empty() || !biases[i].data.empty())
                throw ValidationError("network: " + layer_to_string(layers[i]) +
                                      " must not carry parameters");
            continue;
        }
        if (static_cast<std::int64_t>(weights[i].data.size()) != Tensor::numel_of(ws) ||
            static_cast<std::int64_t>(biases[i].data.size()) !=
                Tensor::numel_of(bias_shape(layers[i])))
            throw ValidationError("network: " + layer_to_string(layers[i]) +
                                  " has mis-sized parameter tensors");
    }
    if (norm_mean.size() != static_cast<std::size_t>(n_bands) ||
        norm_std.size() != static_cast<std::size_t>(n_bands))
        throw ValidationError("network: normalization stats must have one entry per band");
}

Tensor forward(const Network& net, const Tensor& batch) {
    return forward_internal(net, batch, nullptr);
}

double loss_ce(const Tensor& probs, const std::vector<int>& labels) {
    if (probs.shape.size() != 2 || probs.shape[0] != static_cast<int>(labels.size()))
        throw ValidationError("loss_ce: probs must be N x classes with one label per row");
    const int n = probs.shape[0], classes = probs.shape[1];
    double loss = 0.0;
    for (int s = 0; s < n; ++s) {
        const int y = labels[static_cast<std::size_t>(s)];
        if (y < 0 || y >= classes) throw ValidationError("loss_ce: label out of range");
        const double p =
            std::max(static_cast<double>(probs.data[static_cast<std::size_t>(s) * classes + y]),
                     1e-12);
        loss -= std::log(p);
    }
    return loss / n;
}

Gradients backward(const Network& net, const Tensor& batch, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != batch.shape.at(0))
        throw ValidationError("backward: one label per batch row required");
    ForwardCache cache;
    const Tensor probs = forward_internal(net, batch, &cache);
    const int n = batch.shape[0];
    const auto plan = shape_plan(net);

    Gradients grads;
    grads.weights.resize(net.layers.size());
    grads.biases.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.weights[i].data.empty()) {
            grads.weights[i] = Tensor(net.weights[i].shape);
            grads.biases[i] = Tensor(net.biases[i].shape);
        }
    }

    // Fused softmax + cross-entropy gradient at the softmax input.
    const int classes = net.n_classes;
    Tensor dcur({n, classes});
    for (int s = 0; s < n; ++s)
        for (int k = 0; k < classes; ++k)
            dcur.data[static_cast<std::size_t>(s) * classes + k] =
                (probs.data[static_cast<std::size_t>(s) * classes + k] -
                 (labels[static_cast<std::size_t>(s)] == k ? 1.0f : 0.0f)) /
                static_cast<float>(n);

    for (int i = static_cast<int>(net.layers.size()) - 2; i >= 0; --i) {
        const LayerSpec& spec = net.layers[static_cast<std::size_t>(i)];
        const StageShape& in_s = plan[static_cast<std::size_t>(i)];
        const Tensor& input = cache.acts[static_cast<std::size_t>(i)];
        Tensor din;
        switch (spec.kind) {
        case LayerKind::conv2d:
            din = Tensor(input.shape);
            conv2d_bwd(input.data.data(), dcur.data.data(), n, in_s.h, in_s.w, in_s.c, spec.out_ch,
                       net.weights[static_cast<std::size_t>(i)].data.data(), din.data.data(),
                       grads.weights[static_cast<std::size_t>(i)].data.data(),
                       grads.biases[static_cast<std::size_t>(i)].data.data());
            break;
        case LayerKind::relu:
            din = Tensor(input.shape);
            relu_bwd(input.data.data(), dcur.data.data(), input.data.size(), din.data.data());
            break;
        case LayerKind::maxpool:
            din = Tensor(input.shape);
            maxpool_bwd(cache.argmax[static_cast<std::size_t>(i)].data(), dcur.data.data(),
                        dcur.data.size(), din.data.data());
            break;
        case LayerKind::flatten:
            din = dcur;
            din.shape = input.shape;
            break;
        case LayerKind::dense:
            din = Tensor(input.shape);
            dense_bwd(input.data.data(), dcur.data.data(), n, spec.in_dim, spec.out_dim,
                      net.weights[static_cast<std::size_t>(i)].data.data(), din.data.data(),
                      grads.weights[static_cast<std::size_t>(i)].data.data(),
                      grads.biases[static_cast<std::size_t>(i)].data.data());
            break;
        case LayerKind::softmax:
            throw ValidationError("backward: softmax may only appear as the final layer");
        }
        dcur = std::move(din);
    }
    return grads;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    if (learning_rate < 0.0) throw ValidationError("train: learning_rate must be non-negative");
    if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("train: momentum must lie in [0, 1)");
}

std::pair<Network, TrainHistory> train(Network net, const std::vector<Chip>& train_chips,
                                       const std::vector<Chip>& val_chips, const TrainConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.validate();
    if (train_chips.empty()) throw ValidationError("train: empty training set");
    for (const auto& chips : {&train_chips, &val_chips})
        for (const Chip& chip : *chips)
            if (!chip.label) throw ValidationError("train: chip without a label");

    if (cfg.init_weights_path) {
        const Network loaded = load_weights(*cfg.init_weights_path);
        if (loaded.chip_size != net.chip_size || loaded.n_bands != net.n_bands)
            throw ValidationError("warm start: input shape mismatch, expected " +
                                  std::to_string(net.chip_size) + "x" + std::to_string(net.chip_size) +
                                  "x" + std::to_string(net.n_bands) + ", file has " +
                                  std::to_string(loaded.chip_size) + "x" +
                                  std::to_string(loaded.chip_size) + "x" +
                                  std::to_string(loaded.n_bands));
        if (loaded.layers.size() != net.layers.size())
            throw ValidationError("warm start: layer count mismatch (" +
                                  std::to_string(loaded.layers.size()) + " vs " +
                                  std::to_string(net.layers.size()) + ")");
        for (std::size_t i = 0; i < net.layers.size(); ++i)
            if (!(loaded.layers[i] == net.layers[i]))
                throw ValidationError("warm start: layer " + std::to_string(i) + " mismatch, expected " +
                                      layer_to_string(net.layers[i]) + ", file has " +
                                      layer_to_string(loaded.layers[i]));
        net.weights = loaded.weights;
        net.biases = loaded.biases;
    } else {
        net.init_params(cfg.seed);
    }

    // Per-band standardization from the training set only.
    const std::size_t per = static_cast<std::size_t>(net.chip_size) * net.chip_size * net.n_bands;
    std::vector<double> sum(static_cast<std::size_t>(net.n_bands), 0.0),
        sumsq(static_cast<std::size_t>(net.n_bands), 0.0);
    for (const Chip& chip : train_chips) {
        if (chip.data.size() != per) throw ValidationError("train: chip shape mismatch");
        for (std::size_t k = 0; k < per; ++k) {
            const auto band = k % static_cast<std::size_t>(net.n_bands);
            sum[band] += chip.data[k];
            sumsq[band] += static_cast<double>(chip.data[k]) * chip.data[k];
        }
    }
    const double count = static_cast<double>(train_chips.size()) *
                         static_cast<double>(per / static_cast<std::size_t>(net.n_bands));
    for (int b = 0; b < net.n_bands; ++b) {
        const double mean = sum[static_cast<std::size_t>(b)] / count;
        const double var = std::max(0.0, sumsq[static_cast<std::size_t>(b)] / count - mean * mean);
        net.norm_mean[static_cast<std::size_t>(b)] = static_cast<float>(mean);
        net.norm_std[static_cast<std::size_t>(b)] = static_cast<float>(std::max(std::sqrt(var), 1e-6));
    }

    const Tensor train_x = chips_to_tensor(net, train_chips);
    std::vector<int> train_y(train_chips.size());
    for (std::size_t i = 0; i < train_chips.size(); ++i)
        train_y[i] = static_cast<int>(*train_chips[i].label);
    Tensor val_x;
    std::vector<int> val_y(val_chips.size());
    if (!val_chips.empty()) {
        val_x = chips_to_tensor(net, val_chips);
        for (std::size_t i = 0; i < val_chips.size(); ++i)
            val_y[i] = static_cast<int>(*val_chips[i].label);
    }

    std::vector<Tensor> vel_w(net.layers.size()), vel_b(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.weights[i].data.empty()) {
            vel_w[i] = Tensor(net.weights[i].shape);
            vel_b[i] = Tensor(net.biases[i].shape);
        }
    }

    Rng shuffle_rng(Rng::derive(cfg.seed, 7));
    std::vector<int> order(train_chips.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    TrainHistory history;
    const int n_train = static_cast<int>(train_chips.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (int start = 0; start < n_train; start += cfg.batch_size) {
            const int bs = std::min(cfg.batch_size, n_train - start);
            Tensor batch({bs, net.chip_size, net.chip_size, net.n_bands});
            std::vector<int> labels(static_cast<std::size_t>(bs));
            for (int s = 0; s < bs; ++s) {
                const int src = order[static_cast<std::size_t>(start + s)];
                std::memcpy(batch.data.data() + static_cast<std::size_t>(s) * per,
                            train_x.data.data() + static_cast<std::size_t>(src) * per,
                            per * sizeof(float));
                labels[static_cast<std::size_t>(s)] = train_y[static_cast<std::size_t>(src)];
            }
            const Gradients grads = backward(net, batch, labels);
            epoch_loss += loss_ce(forward_internal(net, batch, nullptr), labels) * bs;
            const auto lr = static_cast<float>(cfg.learning_rate);
            const auto mu = static_cast<float>(cfg.momentum);
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                if (net.weights[i].data.empty()) continue;
                for (std::size_t k = 0; k < net.weights[i].data.size(); ++k) {
                    vel_w[i].data[k] = mu * vel_w[i].data[k] - lr * grads.weights[i].data[k];
                    net.weights[i].data[k] += vel_w[i].data[k];
                }
                for (std::size_t k = 0; k < net.biases[i].data.size(); ++k) {
                    vel_b[i].data[k] = mu * vel_b[i].data[k] - lr * grads.biases[i].data[k];
                    net.biases[i].data[k] += vel_b[i].data[k];
                }
            }
        }
        history.train_loss.push_back(epoch_loss / n_train);

        double correct = 0.0;
        if (!val_chips.empty()) {
            const Tensor probs = forward_internal(net, val_x, nullptr);
            for (std::size_t s = 0; s < val_chips.size(); ++s) {
                const float p0 = probs.data[s * 2], p1 = probs.data[s * 2 + 1];
                if ((p1 > p0 ? 1 : 0) == val_y[s]) correct += 1.0;
            }
            correct /= static_cast<double>(val_chips.size());
        }
        history.val_accuracy.push_back(correct);
    }

    history.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    return {std::move(net), std::move(history)};
}

namespace {

constexpr char kMagic[4] = {'S', 'D', 'W', '1'};

const char* kind_name(LayerKind kind) {
    switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::softmax: return "softmax";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& name) {
    if (name == "conv2d") return LayerKind::conv2d;
    if (name == "relu") return LayerKind::relu;
    if (name == "maxpool") return LayerKind::maxpool;
    if (name == "flatten") return LayerKind::flatten;
    if (name == "dense") return LayerKind::dense;
    if (name == "softmax") return LayerKind::softmax;
    throw ValidationError("weight file: unknown layer kind '" + name + "'");
}

void append_f32le(std::string& out, const float* xs, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, xs + i, 4);
        out.push_back(static_cast<char>(bits & 0xff));
        out.push_back(static_cast<char>((bits >> 8) & 0xff));
        out.push_back(static_cast<char>((bits >> 16) & 0xff));
        out.push_back(static_cast<char>((bits >> 24) & 0xff));
    }
}

} // namespace

void save_weights(const Network& net, const std::string& path) {
    net.validate_architecture();
    json arch;
    arch["chip_size"] = net.chip_size;
    arch["n_bands"] = net.n_bands;
    arch["n_classes"] = net.n_classes;
    json layers = json::array();
    for (const LayerSpec& spec : net.layers) {
        json e{{"kind", kind_name(spec.kind)}};
        if (spec.kind == LayerKind::conv2d) {
            e["in_ch"] = spec.in_ch;
            e["out_ch"] = spec.out_ch;
        } else if (spec.kind == LayerKind::dense) {
            e["in_dim"] = spec.in_dim;
            e["out_dim"] = spec.out_dim;
        }
        layers.push_back(e);
    }
    arch["layers"] = layers;
    arch["norm_mean"] = net.norm_mean;
    arch["norm_std"] = net.norm_std;
    const std::string descriptor = arch.dump();

    std::string bytes(kMagic, 4);
    const auto len = static_cast<std::uint32_t>(descriptor.size());
    bytes.push_back(static_cast<char>(len & 0xff));
    bytes.push_back(static_cast<char>((len >> 8) & 0xff));
    bytes.push_back(static_cast<char>((len >> 16) & 0xff));
    bytes.push_back(static_cast<char>((len >> 24) & 0xff));
    bytes += descriptor;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        append_f32le(bytes, net.weights[i].data.data(), net.weights[i].data.size());
        append_f32le(bytes, net.biases[i].data.data(), net.biases[i].data.size());
    }
    write_file_atomic(path, bytes);
}

Network load_weights(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ValidationError("weight file " + path + ": bad magic/version, expected SDW1");
    const auto u8 = [&](std::size_t i) { return static_cast<std::uint32_t>(
        static_cast<unsigned char>(bytes[i])); };
    const std::uint32_t len = u8(4) | (u8(5) << 8) | (u8(6) << 16) | (u8(7) << 24);
    if (bytes.size() < 8 + static_cast<std::size_t>(len))
        throw ValidationError("weight file " + path + ": truncated descriptor");
    json arch;
    try {
        arch = json::parse(bytes.substr(8, len));
    } catch (const json::exception& e) {
        throw ValidationError("weight file " + path + ": bad descriptor: " + e.what());
    }
    require_keys(arch, {"chip_size", "n_bands", "n_classes", "layers", "norm_mean", "norm_std"},
                 "weight descriptor");

    Network net;
    net.chip_size = static_cast<int>(get_int(arch, "chip_size", 0, "weight descriptor"));
    net.n_bands = static_cast<int>(get_int(arch, "n_bands", 0, "weight descriptor"));
    net.n_classes = static_cast<int>(get_int(arch, "n_classes", 2, "weight descriptor"));
    if (!arch.contains("layers") || !arch["layers"].is_array())
        throw ValidationError("weight descriptor: 'layers' must be an array");
    for (const auto& e : arch["layers"]) {
        require_keys(e, {"kind", "in_ch", "out_ch", "in_dim", "out_dim"}, "weight layer");
        LayerSpec spec;
        spec.kind = kind_from_name(get_str(e, "kind", "", "weight layer"));
        spec.in_ch = static_cast<int>(get_int(e, "in_ch", 0, "weight layer"));
        spec.out_ch = static_cast<int>(get_int(e, "out_ch", 0, "weight layer"));
        spec.in_dim = static_cast<int>(get_int(e, "in_dim", 0, "weight layer"));
        spec.out_dim = static_cast<int>(get_int(e, "out_dim", 0, "weight layer"));
        net.layers.push_back(spec);
    }
    for (const char* key : {"norm_mean", "norm_std"}) {
        if (!arch.contains(key) || !arch[key].is_array() ||
            arch[key].size() != static_cast<std::size_t>(net.n_bands))
            throw ValidationError("weight descriptor: '" + std::string(key) +
                                  "' must list one value per band");
    }
    net.norm_mean = arch["norm_mean"].get<std::vector<float>>();
    net.norm_std = arch["norm_std"].get<std::vector<float>>();

    net.weights.resize(net.layers.size());
    net.biases.resize(net.layers.size());
    std::size_t off = 8 + len;
    const auto read_tensor = [&](const std::vector<int>& shape) {
        Tensor t(shape);
        const std::size_t need = t.data.size() * 4;
        if (off + need > bytes.size())
            throw ValidationError("weight file " + path + ": truncated parameter data");
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            const std::uint32_t bits =
                u8(off) | (u8(off + 1) << 8) | (u8(off + 2) << 16) | (u8(off + 3) << 24);
            std::memcpy(&t.data[i], &bits, 4);
            off += 4;
        }
        return t;
    };
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto ws = weight_shape(net.layers[i]);
        if (ws.empty()) continue;
        net.weights[i] = read_tensor(ws);
        net.biases[i] = read_tensor(bias_shape(net.layers[i]));
    }
    if (off != bytes.size())
        throw ValidationError("weight file " + path + ": trailing bytes after parameters");
    net.validate_architecture();
    return net;
}

double grad_check(const Network& net, const Tensor& batch, const std::vector<int>& labels,
                  double step) {
    if (net.param_count() > 5000)
        throw ValidationError("grad_check: network too large (> 5e3 parameters)");
    if (step <= 0.0) throw ValidationError("grad_check: step must be positive");
    const Gradients analytic = backward(net, batch, labels);

    std::vector<std::vector<double>> wd(net.layers.size()), bd(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        wd[i].assign(net.weights[i].data.begin(), net.weights[i].data.end());
        bd[i].assign(net.biases[i].data.begin(), net.biases[i].data.end());
    }
    const std::vector<double> input(batch.data.begin(), batch.data.end());
    const int n = batch.shape[0];

    double max_rel = 0.0;
    const auto check = [&](std::vector<double>& params, const Tensor& grad) {
        for (std::size_t k = 0; k < params.size(); ++k) {
            const double orig = params[k];
            params[k] = orig + step;
            const double lp = shadow_loss(net, wd, bd, input, n, labels);
            params[k] = orig - step;
            const double lm = shadow_loss(net, wd, bd, input, n, labels);
            params[k] = orig;
            const double numeric = (lp - lm) / (2.0 * step);
            const double a = static_cast<double>(grad.data[k]);
            const double rel =
                std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    };
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.weights[i].data.empty()) continue;
        check(wd[i], analytic.weights[i]);
        check(bd[i], analytic.biases[i]);
    }
    return max_rel;
}

std::vector<int> classify(const Network& net, const std::vector<Chip>& chips) {
    const std::vector<float> scores = vessel_scores(net, chips);
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > 0.5f ? 1 : 0;
    return out;
}

std::vector<float> vessel_scores(const Network& net, const std::vector<Chip>& chips) {
    std::vector<float> out;
    out.reserve(chips.size());
    constexpr std::size_t kBatch = 256;
    for (std::size_t start = 0; start < chips.size(); start += kBatch) {
        const std::size_t stop = std::min(chips.size(), start + kBatch);
        const std::vector<Chip> slice(chips.begin() + static_cast<std::ptrdiff_t>(start),
                                      chips.begin() + static_cast<std::ptrdiff_t>(stop));
        const Tensor probs = forward_internal(net, chips_to_tensor(net, slice), nullptr);
        for (std::size_t s = 0; s < slice.size(); ++s) out.push_back(probs.data[s * 2 + 1]);
    }
    return out;
}

TrainConfig parse_train_config(const json& j) {
    const std::string ctx = "train config";
    require_keys(j, {"epochs", "batch_size", "learning_rate", "momentum", "seed",
                     "init_weights_path"},
                 ctx);
    TrainConfig cfg;
    cfg.epochs = static_cast<int>(get_int(j, "epochs", cfg.epochs, ctx));
    cfg.batch_size = static_cast<int>(get_int(j, "batch_size", cfg.batch_size, ctx));
    cfg.learning_rate = get_num(j, "learning_rate", cfg.learning_rate, ctx);
    cfg.momentum = get_num(j, "momentum", cfg.momentum, ctx);
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("init_weights_path"))
        cfg.init_weights_path = get_str(j, "init_weights_path", "", ctx);
    cfg.validate();
    return cfg;
}

} // namespace sardet
