#include "sadp/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include <json.hpp>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"

namespace sadp {

using json = nlohmann::json;

void MlpConfig::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("mlp: need at least input and output layers");
    for (auto s : layer_sizes) {
        if (s == 0) throw ConfigError("mlp: layer sizes must be >= 1");
    }
    if (batch_size == 0) throw ConfigError("mlp: batch_size must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("mlp: learning_rate must be > 0");
    if (!(validation_fraction >= 0 && validation_fraction < 1)) {
        throw ConfigError("mlp: validation_fraction must lie in [0, 1)");
    }
}

Eigen::MatrixXd extract_features(const SpikeTensor& spikes) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(spikes.batch()),
                      static_cast<Eigen::Index>(spikes.neurons()));
    for (std::size_t b = 0; b < spikes.batch(); ++b) {
        for (std::size_t n = 0; n < spikes.neurons(); ++n) {
            f(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(n)) =
                static_cast<double>(spikes.popcount(b, n));
        }
    }
    return f;
}

Mlp::Mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw ConfigError("mlp: need at least two layer sizes");
    std::mt19937_64 gen(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(layer_sizes[l]);
        const auto fan_out = static_cast<Eigen::Index>(layer_sizes[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_in, fan_out);
        for (Eigen::Index c = 0; c < fan_out; ++c) {
            for (Eigen::Index r = 0; r < fan_in; ++r) w(r, c) = limit * (2.0 * to_unit(gen()) - 1.0);
        }
        weights_.push_back(std::move(w));
        biases_.push_back(Eigen::VectorXd::Zero(fan_out));
    }
}

std::vector<std::size_t> Mlp::layer_sizes() const {
    std::vector<std::size_t> s;
    if (weights_.empty()) return s;
    s.push_back(static_cast<std::size_t>(weights_.front().rows()));
    for (const auto& w : weights_) s.push_back(static_cast<std::size_t>(w.cols()));
    return s;
}

namespace {

void softmax_rows(Eigen::MatrixXd& z) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double m = z.row(r).maxCoeff();
        z.row(r) = (z.row(r).array() - m).exp();
        z.row(r) /= z.row(r).sum();
    }
}

}  // namespace

Eigen::MatrixXd Mlp::predict_proba(const Eigen::MatrixXd& x) const {
    if (weights_.empty()) throw ConfigError("mlp: model has no layers");
    if (x.cols() != weights_.front().rows()) {
        throw ShapeError("mlp: expected " + std::to_string(weights_.front().rows()) +
                         " features, got " + std::to_string(x.cols()));
    }
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Eigen::MatrixXd z = (a * weights_[l]).rowwise() + biases_[l].transpose();
        if (l + 1 < weights_.size()) {
            a = z.cwiseMax(0.0);
        } else {
            softmax_rows(z);
            a = std::move(z);
        }
    }
    return a;
}

std::vector<int> Mlp::predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd p = predict_proba(x);
    std::vector<int> out(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        Eigen::Index best = 0;
        p.row(r).maxCoeff(&best);
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

double Mlp::loss(const Eigen::MatrixXd& x, std::span<const int> labels, MlpGradients* grads) const {
    if (static_cast<std::size_t>(x.rows()) != labels.size()) {
        throw ShapeError("mlp: feature rows and labels differ");
    }
    if (x.cols() != weights_.front().rows()) throw ShapeError("mlp: feature width mismatch");
    const std::size_t layers = weights_.size();
    const auto n = static_cast<double>(x.rows());
    const Eigen::Index classes = weights_.back().cols();

    std::vector<Eigen::MatrixXd> acts{x};
    std::vector<Eigen::MatrixXd> pre;
    for (std::size_t l = 0; l < layers; ++l) {
        pre.push_back((acts.back() * weights_[l]).rowwise() + biases_[l].transpose());
        if (l + 1 < layers) acts.push_back(pre.back().cwiseMax(0.0));
    }
    Eigen::MatrixXd probs = pre.back();
    softmax_rows(probs);

    double total = 0.0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const int y = labels[static_cast<std::size_t>(r)];
        if (y < 0 || y >= classes) throw DomainError("mlp: label out of range");
        total -= std::log(std::max(probs(r, y), 1e-300));
    }
    if (grads) {
        grads->weights.resize(layers);
        grads->biases.resize(layers);
        Eigen::MatrixXd delta = probs;
        for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
        delta /= n;
        for (std::size_t l = layers; l-- > 0;) {
            grads->weights[l] = acts[l].transpose() * delta;
            grads->biases[l] = delta.colwise().sum().transpose();
            if (l > 0) {
                delta = (delta * weights_[l].transpose()).cwiseProduct(
                    (pre[l - 1].array() > 0.0).cast<double>().matrix());
            }
        }
    }
    return total / n;
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
    }
    return out;
}

std::vector<int> gather_labels(std::span<const int> y, std::span<const std::size_t> rows) {
    std::vector<int> out(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) out[k] = y[rows[k]];
    return out;
}

double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (truth.empty()) return 0.0;
    std::size_t ok = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) ok += pred[k] == truth[k] ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

}  // namespace

TrainedMlp train_mlp(const Eigen::MatrixXd& features, std::span<const int> labels,
                     const MlpConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(features.rows()) != labels.size() || labels.empty()) {
        throw ShapeError("train_mlp: need one label per feature row");
    }
    if (static_cast<std::size_t>(features.cols()) != cfg.layer_sizes.front()) {
        throw ShapeError("train_mlp: feature width " + std::to_string(features.cols()) +
                         " != input layer " + std::to_string(cfg.layer_sizes.front()));
    }
    if (!features.allFinite()) throw NumericError("train_mlp: non-finite features");
    const int classes = static_cast<int>(cfg.layer_sizes.back());
    for (int y : labels) {
        if (y < 0 || y >= classes) throw DomainError("train_mlp: label outside output layer");
    }

    std::mt19937_64 gen(derive_seed(cfg.seed, 0x5b1175));
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    const auto n_val = static_cast<std::size_t>(
        std::ceil(cfg.validation_fraction * static_cast<double>(labels.size())));
    std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    if (train_rows.empty()) throw ShapeError("train_mlp: validation split leaves no training rows");

    const Eigen::MatrixXd x_val = gather_rows(features, val_rows);
    const std::vector<int> y_val = gather_labels(labels, val_rows);

    TrainedMlp out;
    out.model = Mlp(cfg.layer_sizes, derive_seed(cfg.seed, 0x1417));
    auto& w = out.model.weights();
    auto& b = out.model.biases();
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    for (std::size_t l = 0; l < w.size(); ++l) {
        mw.push_back(Eigen::MatrixXd::Zero(w[l].rows(), w[l].cols()));
        vw.push_back(mw.back());
        mb.push_back(Eigen::VectorXd::Zero(b[l].size()));
        vb.push_back(mb.back());
    }

    std::size_t step = 0;
    MlpGradients g;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_rows.begin(), train_rows.end(), gen);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_rows.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(train_rows.size(), start + cfg.batch_size);
            std::span<const std::size_t> rows(train_rows.data() + start, stop - start);
            const Eigen::MatrixXd xb = gather_rows(features, rows);
            const std::vector<int> yb = gather_labels(labels, rows);
            const double l = out.model.loss(xb, yb, &g);
            if (!std::isfinite(l)) {
                throw NumericError("train_mlp: non-finite loss at epoch " + std::to_string(epoch));
            }
            epoch_loss += l * static_cast<double>(rows.size());

            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < w.size(); ++k) {
                mw[k] = cfg.beta1 * mw[k] + (1 - cfg.beta1) * g.weights[k];
                vw[k] = cfg.beta2 * vw[k] + (1 - cfg.beta2) * g.weights[k].cwiseAbs2();
                w[k].array() -= cfg.learning_rate * (mw[k].array() / c1) /
                                ((vw[k].array() / c2).sqrt() + cfg.adam_eps);
                mb[k] = cfg.beta1 * mb[k] + (1 - cfg.beta1) * g.biases[k];
                vb[k] = cfg.beta2 * vb[k] + (1 - cfg.beta2) * g.biases[k].cwiseAbs2();
                b[k].array() -= cfg.learning_rate * (mb[k].array() / c1) /
                                ((vb[k].array() / c2).sqrt() + cfg.adam_eps);
            }
        }
        out.train_loss.push_back(epoch_loss / static_cast<double>(train_rows.size()));
        if (!y_val.empty()) {
            out.validation_accuracy.push_back(accuracy_of(out.model.predict(x_val), y_val));
        } else {
            const Eigen::MatrixXd x_tr = gather_rows(features, train_rows);
            out.validation_accuracy.push_back(
                accuracy_of(out.model.predict(x_tr), gather_labels(labels, train_rows)));
        }
        out.epochs_run = epoch + 1;
    }
    return out;
}

Evaluation score_predictions(std::span<const int> predictions, std::span<const int> truth,
                             std::size_t num_classes) {
    if (predictions.size() != truth.size()) throw ShapeError("score: length mismatch");
    Evaluation e;
    e.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    std::size_t correct = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const int t = truth[k];
        const int p = predictions[k];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
            static_cast<std::size_t>(p) >= num_classes) {
            throw DomainError("score: class index out of range");
        }
        ++e.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        correct += t == p ? 1 : 0;
    }
    e.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t predicted = 0;
        std::size_t actual = 0;
        for (std::size_t k = 0; k < num_classes; ++k) {
            predicted += e.confusion[k][c];
            actual += e.confusion[c][k];
        }
        const double tp = static_cast<double>(e.confusion[c][c]);
        const double precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
        const double recall = actual ? tp / static_cast<double>(actual) : 0.0;
        if (precision + recall > 0.0) f1_sum += 2.0 * precision * recall / (precision + recall);
    }
    e.macro_f1 = num_classes ? f1_sum / static_cast<double>(num_classes) : 0.0;
    return e;
}

Evaluation evaluate(const Mlp& model, const Eigen::MatrixXd& features, std::span<const int> labels) {
    const auto pred = model.predict(features);
    return score_predictions(pred, labels, model.layer_sizes().back());
}

void save_checkpoint(const std::string& path, const Mlp& model, std::uint64_t seed,
                     std::size_t epoch) {
    json j;
    j["version"] = 1;
    j["layer_sizes"] = model.layer_sizes();
    j["seed"] = seed;
    j["epoch"] = epoch;
    json layers = json::array();
    for (std::size_t l = 0; l < model.weights().size(); ++l) {
        const auto& w = model.weights()[l];
        const auto& b = model.biases()[l];
        layers.push_back({{"weights", std::vector<double>(w.data(), w.data() + w.size())},
                          {"biases", std::vector<double>(b.data(), b.data() + b.size())}});
    }
    j["layers"] = std::move(layers);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump() << '\n';
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        const json j = json::parse(in);
        if (j.at("version").get<int>() != 1) {
            throw UnsupportedVersionError("checkpoint: unsupported version");
        }
        const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        Mlp m(sizes, 0);
        const auto& layers = j.at("layers");
        if (layers.size() + 1 != sizes.size()) throw ParseError("checkpoint: layer count mismatch");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto w = layers[l].at("weights").get<std::vector<double>>();
            const auto b = layers[l].at("biases").get<std::vector<double>>();
            auto& mw = m.weights()[l];
            auto& mb = m.biases()[l];
            if (w.size() != static_cast<std::size_t>(mw.size()) ||
                b.size() != static_cast<std::size_t>(mb.size())) {
                throw ParseError("checkpoint: layer " + std::to_string(l) + " has wrong size");
            }
            std::copy(w.begin(), w.end(), mw.data());
            std::copy(b.begin(), b.end(), mb.data());
        }
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace sadp
