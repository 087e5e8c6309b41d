// Command-line front end for the SADP lab.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sadp/bench.hpp"
#include "sadp/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::string profile = "desk";
    std::optional<std::uint64_t> seed;
    std::string out = "out";
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sadp::IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw sadp::ParseError(path + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw sadp::IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

sadp::ExperimentConfig resolve_config(const Common& c) {
    json j = c.config.empty() ? json::object() : read_json_file(c.config);
    j = sadp::apply_profile(j, c.profile);
    if (c.seed) j["seed"] = *c.seed;
    return sadp::ExperimentConfig::from_json(j);
}

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
    if (with_config) {
        cmd->add_option("--config", c.config, "Experiment config (JSON)");
        cmd->add_option("--profile", c.profile, "desk or full")->check(CLI::IsMember({"desk", "full"}));
        cmd->add_option("--seed", c.seed, "Override the config seed");
    }
    cmd->add_option("--out", c.out, "Output directory");
}

int cmd_encode(const Common& c, const std::string& split, std::size_t first, std::size_t count) {
    const auto cfg = resolve_config(c);
    const auto data = sadp::load_data(cfg);
    const sadp::ImageDataset& ds = split == "test" ? data.test : data.train;
    if (first + count > ds.size()) throw sadp::DomainError("encode: range exceeds split size");
    std::vector<std::size_t> rows(count);
    std::vector<std::uint64_t> keys(count);
    for (std::size_t k = 0; k < count; ++k) rows[k] = keys[k] = first + k;
    sadp::EncoderConfig enc;
    enc.scheme = cfg.coding;
    enc.timesteps = cfg.timesteps;
    enc.seed = cfg.seed;
    const auto spikes = sadp::encode_batch(ds.images, ds.pixels(), rows, enc, keys);
    fs::create_directories(c.out);
    const auto path = fs::path(c.out) / "spikes.bin";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sadp::IoError("cannot write '" + path.string() + "'");
    sadp::write_spike_tensor(out, spikes);
    std::cout << "wrote " << path.string() << " (" << spikes.batch() << " x " << spikes.neurons() << " x "
              << spikes.timesteps() << ")\n";
    return 0;
}

int cmd_fit_kernel(const Common& c, const std::string& device, double s_pot, double s_dep) {
    sadp::DeviceTrace trace;
    if (device.empty()) {
        trace = sadp::synthetic_device_trace({});
    } else {
        std::ifstream in(device);
        if (!in) throw sadp::IoError("cannot open '" + device + "'");
        trace = sadp::read_device_csv(in);
    }
    const auto fit = sadp::fit_spline_kernel(sadp::extract_updates(trace), s_pot, s_dep);
    fs::create_directories(c.out);
    const auto path = (fs::path(c.out) / "kernel.json").string();
    sadp::save_kernel(path, sadp::PlasticityKernel(fit));
    std::cout << "wrote " << path << "\n"
              << "potentiation: residual " << fit.pot.diagnostics().residual << ", interior knots "
              << fit.pot.diagnostics().interior_knots << "\n"
              << "depression:   residual " << fit.dep.diagnostics().residual << ", interior knots "
              << fit.dep.diagnostics().interior_knots << "\n";
    return 0;
}

int cmd_synth_device(const std::string& out_path, std::uint64_t seed) {
    sadp::SyntheticDeviceParams p;
    p.seed = seed;
    const auto trace = sadp::synthetic_device_trace(p);
    if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
    std::ofstream out(out_path);
    if (!out) throw sadp::IoError("cannot write '" + out_path + "'");
    sadp::write_device_csv(out, trace);
    std::cout << "wrote " << out_path << " (" << trace.samples.size() << " samples)\n";
    return 0;
}

int cmd_train(const Common& c) {
    const auto cfg = resolve_config(c);
    const auto data = sadp::load_data(cfg);
    const auto run = sadp::run_experiment_full(cfg, data);
    fs::create_directories(c.out);
    const fs::path dir(c.out);
    write_json_file(dir / "config.json", cfg.to_json());
    sadp::save_weights((dir / "weights.json").string(), run.weights);
    sadp::save_checkpoint((dir / "classifier.json").string(), run.classifier, cfg.seed,
                          run.metrics.accuracy_curve.size());
    {
        std::ofstream log(dir / "metrics.jsonl", std::ios::app);
        log << run.metrics.to_json().dump() << '\n';
    }
    std::cout << run.metrics.label << "  seed " << cfg.seed << "\n"
              << "accuracy  " << run.metrics.validation_accuracy << "\n"
              << "macro_f1  " << run.metrics.macro_f1 << "\n"
              << "s/epoch   " << run.metrics.runtime_per_epoch_seconds << "\n"
              << "total s   " << run.metrics.total_runtime_seconds << "\n";
    return 0;
}

int cmd_evaluate(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const auto cfg = sadp::ExperimentConfig::from_json(read_json_file((dir / "config.json").string()));
    const auto w = sadp::load_weights((dir / "weights.json").string());
    const auto model = sadp::load_checkpoint((dir / "classifier.json").string());
    const auto data = sadp::load_data(cfg);
    const auto x = sadp::compute_features(data.test, w, cfg, sadp::kTestFeatureStream);
    const auto ev = sadp::evaluate(model, x, data.test.labels);
    std::cout << "accuracy  " << ev.accuracy << "\nmacro_f1  " << ev.macro_f1 << "\nconfusion\n";
    for (const auto& row : ev.confusion) {
        for (std::size_t k = 0; k < row.size(); ++k) std::cout << (k ? " " : "") << row[k];
        std::cout << '\n';
    }
    return 0;
}

int cmd_grid(const Common& c) {
    if (c.config.empty()) throw sadp::ConfigError("grid: --config is required");
    json j = read_json_file(c.config);
    if (c.seed && j.is_object()) {
        j["base"] = j.value("base", json::object());
        j["base"]["seed"] = *c.seed;
    }
    const auto configs = sadp::expand_grid(j, c.profile);
    fs::create_directories(c.out);
    sadp::GridOptions opt;
    opt.results_path = (fs::path(c.out) / "results.jsonl").string();
    std::size_t done = 0;
    opt.on_row = [&](const sadp::GridRow& r) {
        std::cerr << "[" << ++done << "/" << configs.size() << "] " << r.config.label() << " seed "
                  << r.config.seed << (r.cached ? " (cached)" : "") << (r.error.empty() ? "" : " FAILED") << '\n';
    };
    const auto rows = sadp::run_grid(configs, opt);
    const std::string table = sadp::format_table(rows);
    std::cout << table;
    std::ofstream(fs::path(c.out) / "table.txt") << table;
    for (const auto& r : rows) {
        if (r.metrics) return 0;
    }
    return 1;
}

int cmd_scaling(const Common& c, sadp::ScalingConfig sc) {
    const auto rep = sadp::run_scaling_study(sc);
    fs::create_directories(c.out);
    write_json_file(fs::path(c.out) / "scaling.json", rep.to_json());
    std::cout << "T       seconds\n";
    for (std::size_t k = 0; k < rep.t_values.size(); ++k) {
        std::cout << rep.t_values[k] << "  " << rep.sadp_seconds[k] << '\n';
    }
    std::cout << "SADP time slope vs T: " << rep.sadp_time_slope << "\n\nS   pairs/synapse  seconds\n";
    for (std::size_t k = 0; k < rep.s_values.size(); ++k) {
        std::cout << rep.s_values[k] << "  " << rep.oracle_pairs[k] << "  " << rep.oracle_seconds[k] << '\n';
    }
    std::cout << "pairwise op-count slope vs S: " << rep.oracle_pair_slope << "\n"
              << "pairwise time slope vs S: " << rep.oracle_time_slope << '\n';
    return 0;
}

int cmd_plot_data(const Common& c, const std::string& results) {
    sadp::emit_plot_data(sadp::read_results(results), c.out);
    std::cout << "wrote " << (fs::path(c.out) / "weight_norm.csv").string() << " and "
              << (fs::path(c.out) / "validation_accuracy.csv").string() << '\n';
    return 0;
}

int cmd_verify_data(const std::string& manifest) {
    const auto files = sadp::read_manifest(manifest, true);
    std::cout << files.name << ": all checksums match\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spike agreement-dependent plasticity lab"};
    app.require_subcommand(1);

    Common common;
    std::string split = "train";
    std::size_t first = 0, count = 1;
    auto* encode = app.add_subcommand("encode", "Encode images into a spike tensor file");
    add_common(encode, common);
    encode->add_option("--split", split)->check(CLI::IsMember({"train", "test"}));
    encode->add_option("--first", first, "First sample index");
    encode->add_option("--count", count, "Number of samples");

    std::string device;
    double s_pot = 0.1, s_dep = 0.01;
    auto* fit = app.add_subcommand("fit-kernel", "Fit spline kernels to a device P/D trace");
    add_common(fit, common, false);
    fit->add_option("--device", device, "Device CSV (pulse_index,conductance_S,phase); default synthetic");
    fit->add_option("--s-pot", s_pot, "Smoothing factor, potentiation");
    fit->add_option("--s-dep", s_dep, "Smoothing factor, depression");

    std::string synth_out = "data/device/synthetic_pd.csv";
    std::uint64_t synth_seed = 7;
    auto* synth = app.add_subcommand("synth-device", "Write a synthetic saturating P/D trace");
    synth->add_option("--out", synth_out, "Output CSV");
    synth->add_option("--seed", synth_seed, "Noise seed");

    auto* train = app.add_subcommand("train", "Run one experiment and save its artifacts");
    add_common(train, common);

    std::string run_dir;
    auto* eval = app.add_subcommand("evaluate", "Re-score a trained run on its test split");
    eval->add_option("--run", run_dir, "Directory written by train")->required();

    auto* grid = app.add_subcommand("grid", "Run a grid of experiments");
    add_common(grid, common);

    sadp::ScalingConfig sc;
    auto* scaling = app.add_subcommand("scaling", "Time SADP vs pairwise STDP");
    add_common(scaling, common, false);
    scaling->add_option("--t", sc.t_values, "Train lengths T");
    scaling->add_option("--s", sc.s_values, "Spike counts S");
    scaling->add_option("--trials", sc.trials);
    scaling->add_option("--seed", sc.seed);

    std::string results;
    auto* plot = app.add_subcommand("plot-data", "Emit weight-norm and accuracy CSV series");
    add_common(plot, common, false);
    plot->add_option("--results", results, "Line-delimited results file")->required();

    std::string manifest = "data/mnist/manifest.json";
    auto* verify = app.add_subcommand("verify-data", "Check dataset files against manifest hashes");
    verify->add_option("--manifest", manifest);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*encode) return cmd_encode(common, split, first, count);
        if (*fit) return cmd_fit_kernel(common, device, s_pot, s_dep);
        if (*synth) return cmd_synth_device(synth_out, synth_seed);
        if (*train) return cmd_train(common);
        if (*eval) return cmd_evaluate(run_dir);
        if (*grid) return cmd_grid(common);
        if (*scaling) return cmd_scaling(common, sc);
        if (*plot) return cmd_plot_data(common, results);
        if (*verify) return cmd_verify_data(manifest);
    } catch (const sadp::Error& e) {
        std::cerr << "error (" << sadp::to_string(e.kind()) << "): " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
