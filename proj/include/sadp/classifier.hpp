#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sadp/core.hpp"

namespace sadp {

struct MlpConfig {
    std::vector<std::size_t> layer_sizes = {64, 256, 10};
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Spike counts summed over time: row b, column n holds popcount(S[b, n, :]).
Eigen::MatrixXd extract_features(const SpikeTensor& spikes);

struct MlpGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Fully connected ReLU network with a softmax output.
class Mlp {
public:
    Mlp() = default;
    Mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

    /// Row-wise class probabilities.
    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;

    /// Mean categorical cross-entropy; fills `grads` when non-null.
    double loss(const Eigen::MatrixXd& x, std::span<const int> labels, MlpGradients* grads) const;

    std::vector<std::size_t> layer_sizes() const;
    std::vector<Eigen::MatrixXd>& weights() noexcept { return weights_; }
    std::vector<Eigen::VectorXd>& biases() noexcept { return biases_; }
    const std::vector<Eigen::MatrixXd>& weights() const noexcept { return weights_; }
    const std::vector<Eigen::VectorXd>& biases() const noexcept { return biases_; }

private:
    // weights_[l] is fan_in x fan_out.
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

struct TrainedMlp {
    Mlp model;
    std::vector<double> train_loss;           // per epoch
    std::vector<double> validation_accuracy;  // per epoch
    std::size_t epochs_run = 0;
};

/// Adam on mini-batches; holds out validation_fraction of the rows (chosen
/// by seed) for the per-epoch validation curve. Throws NumericError when the
/// loss becomes non-finite.
TrainedMlp train_mlp(const Eigen::MatrixXd& features, std::span<const int> labels,
                     const MlpConfig& cfg);

struct Evaluation {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
};

/// Accuracy and macro-F1 (per-class F1 = 0 when precision + recall = 0).
Evaluation score_predictions(std::span<const int> predictions, std::span<const int> truth,
                             std::size_t num_classes);
Evaluation evaluate(const Mlp& model, const Eigen::MatrixXd& features, std::span<const int> labels);

// JSON checkpoint with layer sizes, weights, seed and epoch count.
void save_checkpoint(const std::string& path, const Mlp& model, std::uint64_t seed,
                     std::size_t epoch);
Mlp load_checkpoint(const std::string& path);

}  // namespace sadp
