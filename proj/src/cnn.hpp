#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scene.hpp"
#include "tensor.hpp"

namespace sardet {

enum class LayerKind { conv2d, relu, maxpool, flatten, dense, softmax };

/// Conv2d is 3x3, stride 1, zero padding 1; MaxPool is 2x2, stride 2.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int in_ch = 0, out_ch = 0;   // conv2d
    int in_dim = 0, out_dim = 0; // dense
    bool operator==(const LayerSpec&) const = default;
};

std::string layer_to_string(const LayerSpec& spec);

/// Small classifier over chips. Class index 0 is sea, 1 is vessel; the last
/// layer is always Softmax, so forward() emits per-row probabilities.
/// norm_mean/norm_std hold the per-band training-set standardization that
/// classify()/vessel_scores() apply before the raw forward pass.
struct Network {
    int chip_size = 32;
    int n_bands = 2;
    int n_classes = 2;
    std::vector<LayerSpec> layers;
    std::vector<Tensor> weights; // parallel to layers; empty tensor when parameterless
    std::vector<Tensor> biases;
    std::vector<float> norm_mean;
    std::vector<float> norm_std;

    /// Conv(bands->8)-ReLU-Pool-Conv(8->16)-ReLU-Pool-Flatten-Dense(->32)-ReLU-Dense(32->2)-Softmax.
    static Network make_default(int chip_size = 32, int n_bands = 2);
    /// Same layer pattern shrunk to an 8x8 input (~1k parameters), small
    /// enough for exhaustive finite-difference gradient checks.
    static Network make_tiny(int n_bands = 2);

    void init_params(std::uint64_t seed); // He-uniform weights, zero biases
    std::int64_t param_count() const;
    void validate_architecture() const;   // throws on incompatible layer chain
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    std::optional<std::string> init_weights_path; // warm start

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;   // one entry per epoch
    std::vector<double> val_accuracy; // fraction in [0, 1]
    double wall_time_ms = 0.0;
};

/// batch is N x H x W x C; returns N x n_classes probabilities.
Tensor forward(const Network& net, const Tensor& batch);

/// Mean over the batch of -ln(prob of true class), floored at 1e-12.
double loss_ce(const Tensor& probs, const std::vector<int>& labels);

struct Gradients {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
};

/// Reverse-mode gradients of loss_ce(forward(batch), labels) with respect to
/// every weight and bias. ReLU subgradient at 0 is 0; MaxPool routes to the
/// first maximal element in row-major window order on ties.
Gradients backward(const Network& net, const Tensor& batch, const std::vector<int>& labels);

/// SGD with momentum over seeded, per-epoch reshuffled mini-batches. Chips
/// are standardized per band with training-set statistics that are stored in
/// the returned network for inference.
std::pair<Network, TrainHistory> train(Network net, const std::vector<Chip>& train_chips,
                                       const std::vector<Chip>& val_chips, const TrainConfig& cfg);

void save_weights(const Network& net, const std::string& path);
Network load_weights(const std::string& path);

/// Compares backward() against central finite differences evaluated on a
/// 64-bit shadow of the network; returns max |a-f| / max(|a|,|f|,1e-8).
double grad_check(const Network& net, const Tensor& batch, const std::vector<int>& labels,
                  double step);

/// Standardize with the stored stats, run forward, take argmax per chip.
std::vector<int> classify(const Network& net, const std::vector<Chip>& chips);
/// Vessel-class probability per chip, same preprocessing as classify().
std::vector<float> vessel_scores(const Network& net, const std::vector<Chip>& chips);

TrainConfig parse_train_config(const json& j);

} // namespace sardet
