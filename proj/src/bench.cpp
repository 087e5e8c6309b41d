#include "sadp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "sadp/agreement.hpp"
#include "sadp/error.hpp"
#include "sadp/rng.hpp"

namespace sadp {

using nlohmann::json;

namespace {

constexpr std::size_t kNumClasses = 10;

// Sub-stream tags for derive_seed / hash_key.
constexpr std::uint64_t kStreamWeights = 1;
constexpr std::uint64_t kStreamEncode = 2;
constexpr std::uint64_t kStreamShuffle = 3;
constexpr std::uint64_t kStreamClassifier = 4;
constexpr std::uint64_t kStreamSubset = 5;
constexpr std::uint64_t kStreamEpoch = 6;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
auto in_stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

std::string size_label(std::size_t n_features) {
    if (n_features == 400) return "1layer";
    if (n_features == 64) return "1layer_small";
    return "1layer_" + std::to_string(n_features);
}

// Checks every key of `patch` exists in `tmpl` (recursing into objects).
void check_keys(const json& patch, const json& tmpl, const std::string& prefix) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string name = prefix + it.key();
        if (!tmpl.contains(it.key())) throw ConfigError("config: unknown key '" + name + "'");
        if (it->is_object() && tmpl.at(it.key()).is_object()) {
            check_keys(*it, tmpl.at(it.key()), name + ".");
        }
    }
}

template <class T>
T get_field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: field '") + key + "': " + e.what());
    }
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Contiguous [begin, end) chunks of `order` of at most `batch` rows.
template <class F>
void for_each_chunk(const std::vector<std::size_t>& order, std::size_t batch, F&& f) {
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
        const std::size_t end = std::min(order.size(), begin + batch);
        f(std::span<const std::size_t>(order.data() + begin, end - begin));
    }
}

EncoderConfig encoder_for(const ExperimentConfig& cfg) {
    EncoderConfig enc;
    enc.scheme = cfg.coding;
    enc.timesteps = cfg.timesteps;
    enc.seed = derive_seed(cfg.seed, kStreamEncode);
    return enc;
}

struct PlasticityResult {
    WeightMatrix weights;
    std::vector<double> norms;
    std::vector<double> epoch_seconds;
};

PlasticityResult train_plasticity(const ImageDataset& train, const ExperimentConfig& cfg) {
    const std::size_t pixels = train.pixels();
    const EncoderConfig enc = encoder_for(cfg);

    PlasticityResult out;
    SadpConfig sadp;
    if (cfg.rule == Rule::Sadp) {
        out.weights = init_rademacher(pixels, cfg.n_features, derive_seed(cfg.seed, kStreamWeights));
        sadp.kernel = build_kernel(cfg);
        sadp.eta = constant_eta(cfg.eta);
        sadp.eps = cfg.lif.eps;
    } else {
        const double lo = cfg.rule == Rule::Stdp ? cfg.stdp.init_lo : cfg.hebbian.init_lo;
        const double hi = cfg.rule == Rule::Stdp ? cfg.stdp.init_hi : cfg.hebbian.init_hi;
        out.weights = init_uniform(pixels, cfg.n_features, lo, hi, derive_seed(cfg.seed, kStreamWeights));
    }

    std::vector<std::size_t> order(train.size());
    std::vector<std::uint64_t> keys;
    for (std::size_t epoch = 0; epoch < cfg.sadp_epochs; ++epoch) {
        const auto t0 = Clock::now();
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 gen(hash_key({cfg.seed, kStreamShuffle, epoch}));
        std::shuffle(order.begin(), order.end(), gen);

        for_each_chunk(order, cfg.batch, [&](std::span<const std::size_t> rows) {
            keys.resize(rows.size());
            for (std::size_t k = 0; k < rows.size(); ++k) {
                keys[k] = hash_key({kStreamEpoch, epoch, rows[k]});
            }
            const SpikeTensor pre = in_stage("encode", [&] {
                return encode_batch(train.images, pixels, rows, enc, keys);
            });
            const SpikeTensor post = in_stage("lif", [&] {
                return lif_forward(pre, out.weights, cfg.lif);
            });
            in_stage("plasticity", [&] {
                switch (cfg.rule) {
                    case Rule::Sadp:
                        sadp_update_from_spikes(out.weights, pre, post, sadp, epoch);
                        break;
                    case Rule::Stdp:
                        stdp_postpre_update(out.weights, pre, post, cfg.stdp);
                        break;
                    case Rule::Hebbian:
                        hebbian_update(out.weights, pre, post, cfg.hebbian);
                        break;
                }
            });
        });

        const double norm = out.weights.frobenius_norm();
        if (!std::isfinite(norm)) {
            throw StageError("plasticity", NumericError("non-finite weight norm after epoch " +
                                                         std::to_string(epoch + 1)));
        }
        out.norms.push_back(norm);
        out.epoch_seconds.push_back(seconds_since(t0));
    }
    return out;
}

}  // namespace

// ---- enums --------------------------------------------------------------------

Rule parse_rule(const std::string& s) {
    if (s == "sadp") return Rule::Sadp;
    if (s == "stdp") return Rule::Stdp;
    if (s == "hebbian") return Rule::Hebbian;
    throw ConfigError("unknown rule '" + s + "' (expected sadp, stdp or hebbian)");
}

KernelChoice parse_kernel_choice(const std::string& s) {
    if (s == "linear") return KernelChoice::Linear;
    if (s == "spline_device") return KernelChoice::SplineDevice;
    if (s == "spline_ideal") return KernelChoice::SplineIdeal;
    throw ConfigError("unknown kernel '" + s + "' (expected linear, spline_device or spline_ideal)");
}

const char* to_string(Rule r) noexcept {
    switch (r) {
        case Rule::Sadp: return "sadp";
        case Rule::Stdp: return "stdp";
        case Rule::Hebbian: return "hebbian";
    }
    return "?";
}

const char* to_string(KernelChoice k) noexcept {
    switch (k) {
        case KernelChoice::Linear: return "linear";
        case KernelChoice::SplineDevice: return "spline_device";
        case KernelChoice::SplineIdeal: return "spline_ideal";
    }
    return "?";
}

// ---- ExperimentConfig ---------------------------------------------------------

void ExperimentConfig::validate() const {
    if (dataset.empty()) throw ConfigError("config: dataset must be named");
    if (manifest.empty()) throw ConfigError("config: manifest path is empty");
    if (n_features == 0) throw ConfigError("config: n_features must be positive");
    if (timesteps == 0) throw ConfigError("config: timesteps must be positive");
    if (sadp_epochs == 0) throw ConfigError("config: sadp_epochs must be positive");
    if (batch == 0) throw ConfigError("config: batch must be positive");
    if (!(eta > 0) || !std::isfinite(eta)) throw ConfigError("config: eta must be positive");
    if (!(l_max > 0) || !std::isfinite(l_max)) throw ConfigError("config: l_max must be positive");
    if (!(s_pot > 0) || !(s_dep > 0)) throw ConfigError("config: smoothing factors must be positive");
    if (classifier_epochs == 0 || classifier_batch == 0) {
        throw ConfigError("config: classifier epochs and batch must be positive");
    }
    if (!(classifier_lr > 0)) throw ConfigError("config: classifier lr must be positive");
    try {
        lif.validate();
        ideal.validate();
        stdp.validate();
        hebbian.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

json ExperimentConfig::to_json() const {
    json j;
    j["dataset"] = dataset;
    j["manifest"] = manifest;
    j["verify_data"] = verify_data;
    j["rule"] = sadp::to_string(rule);
    if (rule == Rule::Sadp) j["kernel"] = sadp::to_string(kernel);
    j["coding"] = sadp::to_string(coding);
    j["n_features"] = n_features;
    j["timesteps"] = timesteps;
    j["sadp_epochs"] = sadp_epochs;
    j["batch"] = batch;
    j["n_train"] = n_train;
    j["n_test"] = n_test;
    j["stratified"] = stratified;
    j["seed"] = seed;
    j["lif"] = {{"lambda", lif.lambda}, {"theta", lif.theta}, {"eps", lif.eps}};
    j["eta"] = eta;
    j["l_max"] = l_max;
    j["linear"] = {{"eta_pot", linear.eta_pot}, {"eta_dep", linear.eta_dep}};
    j["ideal"] = {{"a_plus", ideal.a_plus},
                  {"a_minus", ideal.a_minus},
                  {"tau_plus", ideal.tau_plus},
                  {"tau_minus", ideal.tau_minus}};
    j["device_kernel"] = device_kernel;
    j["device_csv"] = device_csv;
    j["s_pot"] = s_pot;
    j["s_dep"] = s_dep;
    j["stdp"] = {{"a_plus", stdp.a_plus},   {"a_minus", stdp.a_minus}, {"trace_tau", stdp.trace_tau},
                 {"init_lo", stdp.init_lo}, {"init_hi", stdp.init_hi}, {"w_min", stdp.w_min},
                 {"w_max", stdp.w_max}};
    j["hebbian"] = {{"eta", hebbian.eta},         {"decay", hebbian.decay},
                    {"init_lo", hebbian.init_lo}, {"init_hi", hebbian.init_hi},
                    {"w_min", hebbian.w_min},     {"w_max", hebbian.w_max}};
    j["classifier"] = {{"hidden", classifier_hidden},
                       {"epochs", classifier_epochs},
                       {"batch", classifier_batch},
                       {"lr", classifier_lr}};
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& in) {
    if (!in.is_object()) throw ConfigError("config: expected a JSON object");
    ExperimentConfig defaults;
    json tmpl = defaults.to_json();
    check_keys(in, tmpl, "");

    json j = tmpl;
    j.merge_patch(in);

    ExperimentConfig c;
    c.dataset = get_field<std::string>(j, "dataset");
    c.manifest = get_field<std::string>(j, "manifest");
    c.verify_data = get_field<bool>(j, "verify_data");
    c.rule = parse_rule(get_field<std::string>(j, "rule"));
    if (in.contains("kernel") && c.rule != Rule::Sadp) {
        throw ConfigError("config: 'kernel' applies only to rule 'sadp'");
    }
    c.kernel = parse_kernel_choice(get_field<std::string>(j, "kernel"));
    try {
        c.coding = parse_coding(get_field<std::string>(j, "coding"));
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.n_features = get_field<std::size_t>(j, "n_features");
    c.timesteps = get_field<std::size_t>(j, "timesteps");
    c.sadp_epochs = get_field<std::size_t>(j, "sadp_epochs");
    c.batch = get_field<std::size_t>(j, "batch");
    c.n_train = get_field<std::size_t>(j, "n_train");
    c.n_test = get_field<std::size_t>(j, "n_test");
    c.stratified = get_field<bool>(j, "stratified");
    c.seed = get_field<std::uint64_t>(j, "seed");

    const json& lif = j.at("lif");
    c.lif.lambda = get_field<double>(lif, "lambda");
    c.lif.theta = get_field<double>(lif, "theta");
    c.lif.eps = get_field<double>(lif, "eps");
    c.eta = get_field<double>(j, "eta");
    c.l_max = get_field<double>(j, "l_max");
    c.linear.eta_pot = get_field<double>(j.at("linear"), "eta_pot");
    c.linear.eta_dep = get_field<double>(j.at("linear"), "eta_dep");
    const json& ideal = j.at("ideal");
    c.ideal.a_plus = get_field<double>(ideal, "a_plus");
    c.ideal.a_minus = get_field<double>(ideal, "a_minus");
    c.ideal.tau_plus = get_field<double>(ideal, "tau_plus");
    c.ideal.tau_minus = get_field<double>(ideal, "tau_minus");
    c.device_kernel = get_field<std::string>(j, "device_kernel");
    c.device_csv = get_field<std::string>(j, "device_csv");
    c.s_pot = get_field<double>(j, "s_pot");
    c.s_dep = get_field<double>(j, "s_dep");

    const json& stdp = j.at("stdp");
    c.stdp.a_plus = get_field<double>(stdp, "a_plus");
    c.stdp.a_minus = get_field<double>(stdp, "a_minus");
    c.stdp.trace_tau = get_field<double>(stdp, "trace_tau");
    c.stdp.init_lo = get_field<double>(stdp, "init_lo");
    c.stdp.init_hi = get_field<double>(stdp, "init_hi");
    c.stdp.w_min = get_field<double>(stdp, "w_min");
    c.stdp.w_max = get_field<double>(stdp, "w_max");
    const json& heb = j.at("hebbian");
    c.hebbian.eta = get_field<double>(heb, "eta");
    c.hebbian.decay = get_field<double>(heb, "decay");
    c.hebbian.init_lo = get_field<double>(heb, "init_lo");
    c.hebbian.init_hi = get_field<double>(heb, "init_hi");
    c.hebbian.w_min = get_field<double>(heb, "w_min");
    c.hebbian.w_max = get_field<double>(heb, "w_max");

    const json& cls = j.at("classifier");
    c.classifier_hidden = get_field<std::vector<std::size_t>>(cls, "hidden");
    c.classifier_epochs = get_field<std::size_t>(cls, "epochs");
    c.classifier_batch = get_field<std::size_t>(cls, "batch");
    c.classifier_lr = get_field<double>(cls, "lr");

    c.validate();
    return c;
}

std::string ExperimentConfig::label() const {
    std::string head;
    switch (rule) {
        case Rule::Sadp: head = std::string(sadp::to_string(kernel)) + " SADP"; break;
        case Rule::Stdp: head = "STDP"; break;
        case Rule::Hebbian: head = "Hebbian"; break;
    }
    return head + " | " + sadp::to_string(coding) + " | " + size_label(n_features);
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(to_json().dump())); }

MlpConfig ExperimentConfig::classifier_config(std::size_t n_classes) const {
    MlpConfig m;
    std::vector<std::size_t> hidden = classifier_hidden;
    if (hidden.empty()) {
        hidden = rule == Rule::Sadp ? std::vector<std::size_t>{256} : std::vector<std::size_t>{256, 128};
    }
    m.layer_sizes.clear();
    m.layer_sizes.push_back(n_features);
    m.layer_sizes.insert(m.layer_sizes.end(), hidden.begin(), hidden.end());
    m.layer_sizes.push_back(n_classes);
    m.epochs = classifier_epochs;
    m.batch_size = classifier_batch;
    m.learning_rate = classifier_lr;
    m.seed = derive_seed(seed, kStreamClassifier);
    return m;
}

json apply_profile(const json& j, const std::string& profile) {
    json base;
    if (profile == "desk") {
        base = {{"n_train", 1000}, {"n_test", 200}, {"n_features", 64}};
    } else if (profile == "full") {
        base = {{"n_train", 0}, {"n_test", 0}, {"n_features", 400}};
    } else {
        throw ConfigError("unknown profile '" + profile + "' (expected desk or full)");
    }
    if (!j.is_null() && !j.is_object()) throw ConfigError("config: expected a JSON object");
    if (j.is_object()) base.update(j);
    return base;
}

// ---- RunMetrics ---------------------------------------------------------------

json RunMetrics::deterministic_json() const {
    return {{"label", label},
            {"config_hash", config_hash},
            {"seed", seed},
            {"validation_accuracy", validation_accuracy},
            {"macro_f1", macro_f1},
            {"weight_norm_per_epoch", weight_norm_per_epoch},
            {"accuracy_curve", accuracy_curve}};
}

json RunMetrics::to_json() const {
    json j = deterministic_json();
    j["runtime_per_epoch_seconds"] = runtime_per_epoch_seconds;
    j["total_runtime_seconds"] = total_runtime_seconds;
    return j;
}

RunMetrics RunMetrics::from_json(const json& j) {
    RunMetrics m;
    try {
        m.label = j.at("label").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.validation_accuracy = j.at("validation_accuracy").get<double>();
        m.macro_f1 = j.at("macro_f1").get<double>();
        m.weight_norm_per_epoch = j.at("weight_norm_per_epoch").get<std::vector<double>>();
        m.accuracy_curve = j.at("accuracy_curve").get<std::vector<double>>();
        m.runtime_per_epoch_seconds = j.value("runtime_per_epoch_seconds", 0.0);
        m.total_runtime_seconds = j.value("total_runtime_seconds", 0.0);
    } catch (const json::exception& e) {
        throw ParseError(std::string("metrics record: ") + e.what());
    }
    return m;
}

// ---- pipeline -----------------------------------------------------------------

DataBundle load_data(const ExperimentConfig& cfg) {
    return in_stage("data", [&] {
        const DatasetFiles files = read_manifest(cfg.manifest, cfg.verify_data);
        if (files.name != cfg.dataset) {
            throw DataError("manifest '" + cfg.manifest + "' describes '" + files.name +
                            "', config asks for '" + cfg.dataset + "'");
        }
        DataBundle b;
        b.train = load_idx(files.train_images, files.train_labels);
        b.test = load_idx(files.test_images, files.test_labels);
        for (auto* ds : {&b.train, &b.test}) {
            ds->name = files.name;
            for (int l : ds->labels) {
                if (l < 0 || static_cast<std::size_t>(l) >= kNumClasses) {
                    throw DataError("label " + std::to_string(l) + " outside [0, 9]");
                }
            }
        }
        b.train.split = "train";
        b.test.split = "test";
        const std::uint64_t s = derive_seed(cfg.seed, kStreamSubset);
        if (cfg.n_train != 0) b.train = sample(b.train, cfg.n_train, derive_seed(s, 1), cfg.stratified);
        if (cfg.n_test != 0) b.test = sample(b.test, cfg.n_test, derive_seed(s, 2), cfg.stratified);
        return b;
    });
}

PlasticityKernel build_kernel(const ExperimentConfig& cfg) {
    return in_stage("kernel", [&] {
        switch (cfg.kernel) {
            case KernelChoice::Linear:
                return PlasticityKernel(cfg.linear, cfg.l_max);
            case KernelChoice::SplineIdeal:
                return PlasticityKernel(IdealKernel{cfg.ideal, IdealForm::Mirrored}, cfg.l_max);
            case KernelChoice::SplineDevice:
                break;
        }
        if (!cfg.device_kernel.empty()) return load_kernel(cfg.device_kernel);
        DeviceTrace trace;
        if (cfg.device_csv.empty()) {
            trace = synthetic_device_trace(SyntheticDeviceParams{});
        } else {
            std::ifstream in(cfg.device_csv);
            if (!in) throw IoError("cannot open device trace '" + cfg.device_csv + "'");
            trace = read_device_csv(in);
        }
        return PlasticityKernel(fit_spline_kernel(extract_updates(trace, cfg.lif.eps), cfg.s_pot, cfg.s_dep),
                                cfg.l_max);
    });
}

Eigen::MatrixXd compute_features(const ImageDataset& ds, const WeightMatrix& w,
                                 const ExperimentConfig& cfg, std::uint64_t stream) {
    const EncoderConfig enc = encoder_for(cfg);
    Eigen::MatrixXd features(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(w.n_out()));
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint64_t> keys;
    const double scale = 1.0 / static_cast<double>(cfg.timesteps);
    for_each_chunk(order, cfg.batch, [&](std::span<const std::size_t> rows) {
        keys.resize(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) keys[k] = hash_key({stream, rows[k]});
        const SpikeTensor x = encode_batch(ds.images, ds.pixels(), rows, enc, keys);
        const SpikeTensor y = lif_forward(x, w, cfg.lif);
        for (std::size_t b = 0; b < rows.size(); ++b) {
            for (std::size_t j = 0; j < w.n_out(); ++j) {
                features(static_cast<Eigen::Index>(rows[b]), static_cast<Eigen::Index>(j)) =
                    static_cast<double>(y.popcount(b, j)) * scale;
            }
        }
    });
    return features;
}

RunArtifacts run_experiment_full(const ExperimentConfig& cfg, const DataBundle& data) {
    in_stage("config", [&] { cfg.validate(); });
    if (data.train.size() == 0 || data.test.size() == 0) {
        throw StageError("data", DataError("empty train or test split"));
    }
    const auto t0 = Clock::now();

    PlasticityResult plastic = train_plasticity(data.train, cfg);

    const Eigen::MatrixXd train_x = in_stage("features", [&] {
        return compute_features(data.train, plastic.weights, cfg, kTrainFeatureStream);
    });
    const Eigen::MatrixXd test_x = in_stage("features", [&] {
        return compute_features(data.test, plastic.weights, cfg, kTestFeatureStream);
    });

    const MlpConfig mcfg = cfg.classifier_config(kNumClasses);
    TrainedMlp trained = in_stage("classifier", [&] { return train_mlp(train_x, data.train.labels, mcfg); });
    const Evaluation eval = in_stage("evaluate", [&] { return evaluate(trained.model, test_x, data.test.labels); });

    RunArtifacts out;
    out.metrics.label = cfg.label();
    out.metrics.config_hash = cfg.hash();
    out.metrics.seed = cfg.seed;
    out.metrics.validation_accuracy = eval.accuracy;
    out.metrics.macro_f1 = eval.macro_f1;
    out.metrics.weight_norm_per_epoch = std::move(plastic.norms);
    out.metrics.accuracy_curve = std::move(trained.validation_accuracy);
    out.metrics.runtime_per_epoch_seconds =
        std::accumulate(plastic.epoch_seconds.begin(), plastic.epoch_seconds.end(), 0.0) /
        static_cast<double>(plastic.epoch_seconds.size());
    out.metrics.total_runtime_seconds = seconds_since(t0);
    out.weights = std::move(plastic.weights);
    out.classifier = std::move(trained.model);
    out.layer_sizes = mcfg.layer_sizes;
    return out;
}

RunMetrics run_experiment(const ExperimentConfig& cfg, const DataBundle& data) {
    return run_experiment_full(cfg, data).metrics;
}

RunMetrics run_experiment(const ExperimentConfig& cfg) {
    in_stage("config", [&] { cfg.validate(); });
    return run_experiment(cfg, load_data(cfg));
}

// ---- grid ---------------------------------------------------------------------

namespace {

auto sort_key(const ExperimentConfig& c) {
    const int kernel = c.rule == Rule::Sadp ? static_cast<int>(c.kernel) : -1;
    return std::make_tuple(c.dataset, static_cast<int>(c.rule), kernel, static_cast<int>(c.coding),
                           -static_cast<long long>(c.n_features), c.seed);
}

std::string data_key(const ExperimentConfig& c) {
    return json{{"m", c.manifest}, {"d", c.dataset}, {"v", c.verify_data}, {"a", c.n_train},
                {"b", c.n_test},   {"s", c.seed},    {"t", c.stratified}}
        .dump();
}

json grid_record(const GridRow& row) {
    json j;
    j["config_hash"] = row.config.hash();
    j["config"] = row.config.to_json();
    j["metrics"] = row.metrics ? row.metrics->to_json() : json(nullptr);
    j["error"] = row.error;
    return j;
}

}  // namespace

std::vector<GridRow> run_grid(const std::vector<ExperimentConfig>& configs, const GridOptions& options) {
    if (configs.empty()) throw ConfigError("grid: no configurations to run");

    std::map<std::string, RunMetrics> cache;
    if (!options.results_path.empty() && std::filesystem::exists(options.results_path)) {
        std::ifstream in(options.results_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error&) {
                continue;  // a torn trailing line from an interrupted run
            }
            if (j.contains("metrics") && j["metrics"].is_object() && j.value("error", "").empty()) {
                cache[j.at("config_hash").get<std::string>()] = RunMetrics::from_json(j["metrics"]);
            }
        }
    }
    std::ofstream log;
    if (!options.results_path.empty()) {
        log.open(options.results_path, std::ios::app);
        if (!log) throw IoError("grid: cannot append to '" + options.results_path + "'");
    }

    std::vector<GridRow> rows;
    rows.reserve(configs.size());
    std::string loaded_key;
    std::optional<DataBundle> data;
    for (const auto& cfg : configs) {
        GridRow row;
        row.config = cfg;
        const std::string h = cfg.hash();
        if (auto it = cache.find(h); it != cache.end()) {
            row.metrics = it->second;
            row.cached = true;
        } else {
            try {
                cfg.validate();
                const std::string key = data_key(cfg);
                if (!data || key != loaded_key) {
                    data.reset();
                    data = load_data(cfg);
                    loaded_key = key;
                }
                row.metrics = run_experiment(cfg, *data);
                cache[h] = *row.metrics;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            if (log) {
                log << grid_record(row).dump() << '\n';
                log.flush();
            }
        }
        if (options.on_row) options.on_row(row);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
        return sort_key(a.config) < sort_key(b.config);
    });
    return rows;
}

std::vector<ExperimentConfig> expand_grid(const json& j, const std::string& profile) {
    std::vector<json> points;
    if (j.is_array()) {
        for (const auto& item : j) points.push_back(item);
    } else if (j.is_object()) {
        for (const auto& [key, _] : j.items()) {
            if (key != "base" && key != "axes") throw ConfigError("grid: unknown key '" + key + "'");
        }
        const json base = j.value("base", json::object());
        points.push_back(base);
        const json axes = j.value("axes", json::object());
        if (!axes.is_object()) throw ConfigError("grid: 'axes' must be an object");
        for (const auto& [axis, values] : axes.items()) {
            if (!values.is_array() || values.empty()) {
                throw ConfigError("grid: axis '" + axis + "' must be a non-empty array");
            }
            std::vector<json> next;
            for (const auto& p : points) {
                for (const auto& v : values) {
                    json q = p;
                    q[axis] = v;
                    next.push_back(std::move(q));
                }
            }
            points = std::move(next);
        }
    } else {
        throw ConfigError("grid: expected an array of configs or {base, axes}");
    }

    std::vector<ExperimentConfig> out;
    std::vector<std::string> seen;
    for (json p : points) {
        // The kernel axis does not apply to the baselines; collapse those duplicates.
        if (p.contains("rule") && p["rule"] != "sadp") p.erase("kernel");
        ExperimentConfig c = ExperimentConfig::from_json(apply_profile(p, profile));
        const std::string h = c.hash();
        if (std::find(seen.begin(), seen.end(), h) != seen.end()) continue;
        seen.push_back(h);
        out.push_back(std::move(c));
    }
    return out;
}

std::string format_table(const std::vector<GridRow>& rows) {
    // Only deterministic fields, so a rerun served from the cache prints the
    // same table; timings live in the results file.
    std::ostringstream out;
    out << std::left << std::setw(36) << "model" << std::setw(8) << "seed" << std::setw(10) << "accuracy"
        << std::setw(10) << "macro_f1" << "status\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& r : rows) {
        out << std::setw(36) << r.config.label() << std::setw(8) << r.config.seed;
        if (r.metrics) {
            out << std::setw(10) << r.metrics->validation_accuracy << std::setw(10) << r.metrics->macro_f1
                << "ok";
        } else {
            out << std::setw(10) << "-" << std::setw(10) << "-" << "failed: " << r.error;
        }
        out << '\n';
    }
    return out.str();
}

// ---- scaling ------------------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ShapeError("loglog_slope: need >= 2 paired points");
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0) || !(y[k] > 0)) throw DomainError("loglog_slope: values must be positive");
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = std::log(x[k]) - mx;
        sxy += dx * (std::log(y[k]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0) throw DomainError("loglog_slope: x values are all equal");
    return sxy / sxx;
}

json ScalingReport::to_json() const {
    return {{"t_values", t_values},
            {"sadp_seconds", sadp_seconds},
            {"sadp_time_slope", sadp_time_slope},
            {"s_values", s_values},
            {"oracle_pairs", oracle_pairs},
            {"oracle_seconds", oracle_seconds},
            {"oracle_pair_slope", oracle_pair_slope},
            {"oracle_time_slope", oracle_time_slope}};
}

ScalingReport run_scaling_study(const ScalingConfig& cfg) {
    if (cfg.t_values.size() < 2 || cfg.s_values.size() < 2) {
        throw ConfigError("scaling: need at least two T and two S values");
    }
    if (!std::is_sorted(cfg.t_values.begin(), cfg.t_values.end()) ||
        !std::is_sorted(cfg.s_values.begin(), cfg.s_values.end())) {
        throw ConfigError("scaling: T and S values must be sorted ascending");
    }
    if (cfg.trials == 0 || cfg.batch == 0 || cfg.n_pre == 0 || cfg.n_post == 0) {
        throw ConfigError("scaling: trials, batch and layer sizes must be positive");
    }

    ScalingReport rep;
    rep.t_values = cfg.t_values;
    rep.s_values = cfg.s_values;
    const SadpConfig sadp{PlasticityKernel(LinearKernel{}), constant_eta(), kDefaultEps};

    auto random_tensor = [&](std::size_t n, std::size_t t, std::uint64_t stream) {
        SpikeTensor s(cfg.batch, n, t);
        for (std::size_t b = 0; b < cfg.batch; ++b) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < t; ++k) {
                    if (to_unit(hash_key({cfg.seed, stream, b, i, k})) < cfg.density) s.set_spike(b, i, k);
                }
            }
        }
        return s;
    };

    std::vector<double> tx;
    for (std::size_t t : cfg.t_values) {
        const SpikeTensor pre = random_tensor(cfg.n_pre, t, 1);
        const SpikeTensor post = random_tensor(cfg.n_post, t, 2);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
            WeightMatrix w = init_rademacher(cfg.n_pre, cfg.n_post, derive_seed(cfg.seed, trial));
            const auto t0 = Clock::now();
            sadp_update_from_spikes(w, pre, post, sadp, 0);
            best = std::min(best, seconds_since(t0));
        }
        rep.sadp_seconds.push_back(std::max(best, 1e-9));
        tx.push_back(static_cast<double>(t));
    }
    rep.sadp_time_slope = loglog_slope(tx, rep.sadp_seconds);

    const StdpParams stdp;
    std::vector<double> sx, pairs_d;
    volatile double sink = 0;
    for (std::size_t s : cfg.s_values) {
        std::mt19937_64 gen(derive_seed(cfg.seed, 1000 + s));
        std::uniform_int_distribution<int> when(0, static_cast<int>(4 * s));
        std::vector<double> pre(s), post(s);
        std::uint64_t pairs = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
            pairs = 0;
            double elapsed = 0;
            for (std::size_t syn = 0; syn < cfg.n_pre * cfg.n_post; ++syn) {
                for (auto& v : pre) v = when(gen);
                for (auto& v : post) v = when(gen);
                const auto t0 = Clock::now();
                sink = sink + stdp_pairwise_oracle(pre, post, stdp, &pairs);
                elapsed += seconds_since(t0);
            }
            best = std::min(best, elapsed);
        }
        const std::uint64_t per_synapse = pairs / (cfg.n_pre * cfg.n_post);
        rep.oracle_pairs.push_back(per_synapse);
        rep.oracle_seconds.push_back(std::max(best, 1e-9));
        sx.push_back(static_cast<double>(s));
        pairs_d.push_back(static_cast<double>(per_synapse));
    }
    rep.oracle_pair_slope = loglog_slope(sx, pairs_d);
    rep.oracle_time_slope = loglog_slope(sx, rep.oracle_seconds);
    return rep;
}

// ---- outputs ------------------------------------------------------------------

void emit_plot_data(const std::vector<RunMetrics>& results, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto write = [&](const char* name, auto member) {
        const auto path = (std::filesystem::path(out_dir) / name).string();
        std::ofstream out(path);
        if (!out) throw IoError("cannot write '" + path + "'");
        out << "epoch,value,config,seed\n";
        out << std::setprecision(17);
        for (const auto& r : results) {
            const auto& series = r.*member;
            for (std::size_t e = 0; e < series.size(); ++e) {
                out << e + 1 << ',' << series[e] << ",\"" << r.label << "\"," << r.seed << '\n';
            }
        }
        if (!out) throw IoError("write failed for '" + path + "'");
    };
    write("weight_norm.csv", &RunMetrics::weight_norm_per_epoch);
    write("validation_accuracy.csv", &RunMetrics::accuracy_curve);
}

std::vector<RunMetrics> read_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open results '" + path + "'");
    std::vector<RunMetrics> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (j.contains("metrics")) {
            if (j["metrics"].is_object()) out.push_back(RunMetrics::from_json(j["metrics"]));
        } else {
            out.push_back(RunMetrics::from_json(j));
        }
    }
    return out;
}

void save_weights(const std::string& path, const WeightMatrix& w) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    const json j = {{"n_in", w.n_in()}, {"n_out", w.n_out()},
                    {"values", std::vector<double>(w.values().begin(), w.values().end())}};
    out << j.dump() << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

WeightMatrix load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        const json j = json::parse(in);
        const auto n_in = j.at("n_in").get<std::size_t>();
        const auto n_out = j.at("n_out").get<std::size_t>();
        const auto values = j.at("values").get<std::vector<double>>();
        if (values.size() != n_in * n_out) {
            throw ShapeError("weights: expected " + std::to_string(n_in * n_out) + " values, found " +
                             std::to_string(values.size()));
        }
        WeightMatrix w(n_in, n_out);
        std::copy(values.begin(), values.end(), w.values().begin());
        return w;
    } catch (const json::exception& e) {
        throw ParseError("weights '" + path + "': " + e.what());
    }
}

}  // namespace sadp
