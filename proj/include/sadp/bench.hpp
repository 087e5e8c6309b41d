#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sadp/classifier.hpp"
#include "sadp/core.hpp"
#include "sadp/datasets.hpp"
#include "sadp/encoding.hpp"
#include "sadp/kernels.hpp"
#include "sadp/lif.hpp"
#include "sadp/plasticity.hpp"

namespace sadp {

enum class Rule { Sadp, Stdp, Hebbian };
enum class KernelChoice { Linear, SplineDevice, SplineIdeal };

Rule parse_rule(const std::string& s);
KernelChoice parse_kernel_choice(const std::string& s);
const char* to_string(Rule r) noexcept;
const char* to_string(KernelChoice k) noexcept;

struct ExperimentConfig {
    std::string dataset = "mnist";
    std::string manifest = "data/mnist/manifest.json";
    bool verify_data = false;

    Rule rule = Rule::Sadp;
    KernelChoice kernel = KernelChoice::Linear;
    Coding coding = Coding::Rate;
    std::size_t n_features = 64;
    std::size_t timesteps = 10;
    std::size_t sadp_epochs = 10;  // plasticity epochs for every rule
    std::size_t batch = 64;        // SADP update batch and feature-extraction batch

    std::size_t n_train = 1000;  // 0 = whole split
    std::size_t n_test = 200;
    bool stratified = true;
    std::uint64_t seed = 0;

    LifConfig lif;
    double eta = 1.0;  // constant SADP learning-rate scale
    double l_max = 1.0;
    LinearKernel linear;
    StdpParams ideal;
    std::string device_kernel;  // kernel file; empty = fit from device_csv
    std::string device_csv;     // empty = built-in synthetic trace
    double s_pot = 0.1;
    double s_dep = 0.01;

    StdpBaselineConfig stdp;
    HebbianConfig hebbian;

    std::vector<std::size_t> classifier_hidden;  // empty = rule default
    std::size_t classifier_epochs = 50;
    std::size_t classifier_batch = 128;
    double classifier_lr = 1e-3;

    void validate() const;

    nlohmann::json to_json() const;
    /// Missing keys keep defaults; unknown keys raise ConfigError.
    static ExperimentConfig from_json(const nlohmann::json& j);

    /// Row label in the style "linear SADP | rate | 1layer_small".
    std::string label() const;
    /// FNV-1a over the canonical JSON dump.
    std::string hash() const;
    MlpConfig classifier_config(std::size_t n_classes) const;
};

/// Applies the desk (1000/200, 64 features) or full (whole dataset, 400
/// features) profile defaults underneath the keys already present in `j`.
nlohmann::json apply_profile(const nlohmann::json& j, const std::string& profile);

struct RunMetrics {
    std::string label;
    std::string config_hash;
    std::uint64_t seed = 0;
    double validation_accuracy = 0.0;  // held-out test split
    double macro_f1 = 0.0;
    std::vector<double> weight_norm_per_epoch;  // Frobenius norm after each plasticity epoch
    std::vector<double> accuracy_curve;         // classifier validation accuracy per epoch
    // Wall-clock fields; excluded from deterministic comparisons.
    double runtime_per_epoch_seconds = 0.0;
    double total_runtime_seconds = 0.0;

    nlohmann::json to_json() const;
    nlohmann::json deterministic_json() const;
    static RunMetrics from_json(const nlohmann::json& j);
};

struct DataBundle {
    ImageDataset train;
    ImageDataset test;
};

/// Loads the manifest's splits and draws the configured subsets.
DataBundle load_data(const ExperimentConfig& cfg);

struct RunArtifacts {
    RunMetrics metrics;
    WeightMatrix weights;
    Mlp classifier;
    std::vector<std::size_t> layer_sizes;
};

/// encode -> LIF + plasticity epochs -> spike-count features -> classifier
/// -> test evaluation. Errors are rethrown as StageError naming the stage.
RunArtifacts run_experiment_full(const ExperimentConfig& cfg, const DataBundle& data);
RunMetrics run_experiment(const ExperimentConfig& cfg, const DataBundle& data);
RunMetrics run_experiment(const ExperimentConfig& cfg);

PlasticityKernel build_kernel(const ExperimentConfig& cfg);

// Presentation streams of the feature-extraction pass.
inline constexpr std::uint64_t kTrainFeatureStream = 7;
inline constexpr std::uint64_t kTestFeatureStream = 8;

/// Spike-count features (divided by T) of every sample under trained weights.
Eigen::MatrixXd compute_features(const ImageDataset& ds, const WeightMatrix& w,
                                 const ExperimentConfig& cfg, std::uint64_t stream);

struct GridRow {
    ExperimentConfig config;
    std::optional<RunMetrics> metrics;
    std::string error;
    bool cached = false;
};

struct GridOptions {
    std::string results_path;  // line-delimited JSON, append-only; empty = no cache
    std::function<void(const GridRow&)> on_row;
};

/// Runs every config (reusing cached results by config hash), records
/// per-run failures and returns rows sorted by (dataset, rule, kernel,
/// coding, size, seed).
std::vector<GridRow> run_grid(const std::vector<ExperimentConfig>& configs,
                              const GridOptions& options = {});

/// Expands a grid file: {"base": {...}, "axes": {"kernel": [...], ...}} into
/// the cartesian product; a plain array of configs is also accepted.
std::vector<ExperimentConfig> expand_grid(const nlohmann::json& j, const std::string& profile);

std::string format_table(const std::vector<GridRow>& rows);

struct ScalingConfig {
    std::vector<std::size_t> t_values = {256, 512, 1024, 2048};
    std::vector<std::size_t> s_values = {4, 8, 16, 32, 64};
    std::size_t n_pre = 64;
    std::size_t n_post = 32;
    std::size_t batch = 4;
    double density = 0.2;
    std::size_t trials = 5;
    std::uint64_t seed = 1;
};

struct ScalingReport {
    std::vector<std::size_t> t_values;
    std::vector<double> sadp_seconds;  // best of trials
    double sadp_time_slope = 0.0;
    std::vector<std::size_t> s_values;
    std::vector<std::uint64_t> oracle_pairs;  // per synapse
    std::vector<double> oracle_seconds;
    double oracle_pair_slope = 0.0;
    double oracle_time_slope = 0.0;

    nlohmann::json to_json() const;
};

/// Counted work per synapse: one pass over T bins for the agreement rule,
/// every (pre, post) pair for pairwise STDP.
constexpr std::uint64_t sadp_ops_per_synapse(std::size_t timesteps) noexcept { return timesteps; }
constexpr std::uint64_t pairwise_ops_per_synapse(std::size_t spikes) noexcept {
    return std::uint64_t{spikes} * spikes;
}

/// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

ScalingReport run_scaling_study(const ScalingConfig& cfg);

/// Writes weight_norm.csv and validation_accuracy.csv (epoch,value,config,seed);
/// empty input leaves header-only files.
void emit_plot_data(const std::vector<RunMetrics>& results, const std::string& out_dir);

std::vector<RunMetrics> read_results(const std::string& path);

// JSON weight file: {"n_in", "n_out", "values"} with values row-major.
void save_weights(const std::string& path, const WeightMatrix& w);
WeightMatrix load_weights(const std::string& path);

}  // namespace sadp
