#include "sadp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"

namespace sadp {

using json = nlohmann::json;

void StdpParams::validate() const {
    if (!(a_plus > 0 && a_minus > 0 && tau_plus > 0 && tau_minus > 0)) {
        throw ConfigError("stdp params: amplitudes and time constants must be > 0");
    }
}

namespace {

void check_agreement(double kappa, const char* who) {
    if (!(kappa >= -1.0 && kappa <= 1.0)) {
        throw DomainError(std::string(who) + ": agreement " + std::to_string(kappa) +
                          " outside [-1, 1]");
    }
}

}  // namespace

double linear_kernel(double kappa, double eta_pot, double eta_dep) {
    check_agreement(kappa, "linear_kernel");
    if (kappa > 0.0) return eta_pot * kappa;
    if (kappa < 0.0) return eta_dep * kappa;
    return 0.0;
}

double stdp_kernel(double dt, const StdpParams& p) {
    if (dt > 0.0) return p.a_plus * std::exp(-dt / p.tau_plus);
    if (dt < 0.0) return -p.a_minus * std::exp(dt / p.tau_minus);
    throw DomainError("stdp_kernel: undefined at dt == 0");
}

double ideal_sadp_kernel(double delta, const StdpParams& p, IdealForm form) {
    check_agreement(delta, "ideal_sadp_kernel");
    if (delta == 0.0) return 0.0;
    if (form == IdealForm::Mirrored) {
        return delta > 0.0 ? p.a_plus * std::exp(-(1.0 - delta) / p.tau_plus)
                           : -p.a_minus * std::exp(-(1.0 + delta) / p.tau_minus);
    }
    // Literal shift; at delta = +-1 the argument is 0, take the one-sided limit.
    return delta > 0.0 ? -p.a_minus * std::exp((delta - 1.0) / p.tau_minus)
                       : p.a_plus * std::exp(-(delta + 1.0) / p.tau_plus);
}

// ---- device traces -----------------------------------------------------------

std::vector<double> DeviceTrace::conductances(PulsePhase phase) const {
    std::vector<double> g;
    for (const auto& s : samples) {
        if (s.phase == phase) g.push_back(s.conductance);
    }
    return g;
}

void DeviceTrace::validate() const {
    std::int64_t last[2] = {0, 0};
    bool seen[2] = {false, false};
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        if (!(s.conductance > 0.0) || !std::isfinite(s.conductance)) {
            throw DataError("device trace: non-positive conductance at sample " + std::to_string(k));
        }
        const int ph = s.phase == PulsePhase::Potentiation ? 0 : 1;
        if (seen[ph] && s.pulse_index <= last[ph]) {
            throw DataError("device trace: pulse_index not increasing at sample " + std::to_string(k));
        }
        seen[ph] = true;
        last[ph] = s.pulse_index;
    }
}

DeviceTrace read_device_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("device csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "pulse_index,conductance_S,phase") {
        throw ParseError("device csv line 1: expected header 'pulse_index,conductance_S,phase'");
    }
    DeviceTrace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string idx, cond, phase, extra;
        if (!std::getline(row, idx, ',') || !std::getline(row, cond, ',') ||
            !std::getline(row, phase, ',') || std::getline(row, extra, ',')) {
            throw ParseError("device csv line " + std::to_string(line_no) + ": expected 3 fields");
        }
        DeviceSample s;
        try {
            std::size_t used = 0;
            s.pulse_index = std::stoll(idx, &used);
            if (used != idx.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("device csv line " + std::to_string(line_no) + ": bad pulse_index");
        }
        try {
            std::size_t used = 0;
            s.conductance = std::stod(cond, &used);
            if (used != cond.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("device csv line " + std::to_string(line_no) + ": bad conductance_S");
        }
        if (phase == "P") {
            s.phase = PulsePhase::Potentiation;
        } else if (phase == "D") {
            s.phase = PulsePhase::Depression;
        } else {
            throw ParseError("device csv line " + std::to_string(line_no) + ": phase must be P or D");
        }
        trace.samples.push_back(s);
    }
    trace.validate();
    return trace;
}

void write_device_csv(std::ostream& out, const DeviceTrace& trace) {
    out << "pulse_index,conductance_S,phase\n";
    out.precision(17);
    for (const auto& s : trace.samples) {
        out << s.pulse_index << ',' << s.conductance << ','
            << (s.phase == PulsePhase::Potentiation ? 'P' : 'D') << '\n';
    }
}

DeviceTrace synthetic_device_trace(const SyntheticDeviceParams& params) {
    if (params.pulses < 2 || !(params.g_max > params.g_min) || !(params.g_min > 0) ||
        !(params.tau > 0) || !(params.read_noise >= 0)) {
        throw ConfigError("synthetic device: invalid parameters");
    }
    std::mt19937_64 gen(params.seed);
    std::normal_distribution<double> noise(0.0, params.read_noise);
    const double n = static_cast<double>(params.pulses);
    const double norm = 1.0 - std::exp(-n / params.tau);
    const double range = params.g_max - params.g_min;
    DeviceTrace trace;
    std::int64_t index = 0;
    for (std::size_t k = 1; k <= params.pulses; ++k) {
        const double frac = (1.0 - std::exp(-static_cast<double>(k) / params.tau)) / norm;
        const double g = (params.g_min + range * frac) * (1.0 + noise(gen));
        trace.samples.push_back({index++, std::max(g, 1e-3 * params.g_min), PulsePhase::Potentiation});
    }
    for (std::size_t k = 1; k <= params.pulses; ++k) {
        const double frac = (1.0 - std::exp(-static_cast<double>(k) / params.tau)) / norm;
        const double g = (params.g_max - range * frac) * (1.0 + noise(gen));
        trace.samples.push_back({index++, std::max(g, 1e-3 * params.g_min), PulsePhase::Depression});
    }
    return trace;
}

std::vector<double> normalized_updates(const std::vector<double>& conductance, double eps) {
    std::vector<double> out;
    if (conductance.size() < 2) return out;
    out.reserve(conductance.size() - 1);
    for (std::size_t t = 0; t + 1 < conductance.size(); ++t) {
        out.push_back((conductance[t + 1] - conductance[t]) / (conductance[t] + eps));
    }
    return out;
}

DeviceUpdates extract_updates(const DeviceTrace& trace, double eps) {
    trace.validate();
    const auto g_pot = trace.conductances(PulsePhase::Potentiation);
    const auto g_dep = trace.conductances(PulsePhase::Depression);
    if (g_pot.size() < 5 || g_dep.size() < 5) {
        throw FitError("extract_updates: each phase needs >= 5 samples (P=" +
                           std::to_string(g_pot.size()) + ", D=" + std::to_string(g_dep.size()) + ")",
                       0.0);
    }
    DeviceUpdates u;
    u.dg_pot = normalized_updates(g_pot, eps);
    u.dg_dep = normalized_updates(g_dep, eps);
    std::sort(u.dg_pot.begin(), u.dg_pot.end());
    std::sort(u.dg_dep.begin(), u.dg_dep.end());

    const auto np = static_cast<double>(u.dg_pot.size());
    for (std::size_t k = 0; k < u.dg_pot.size(); ++k) {
        u.delta_pot.push_back(static_cast<double>(k + 1) / np);
    }
    const auto nd = static_cast<double>(u.dg_dep.size());
    for (std::size_t k = 0; k < u.dg_dep.size(); ++k) {
        u.delta_dep.push_back(-1.0 + static_cast<double>(k) / nd);
    }
    return u;
}

SplineKernel fit_spline_kernel(const DeviceUpdates& updates, double s_pot, double s_dep,
                               const SplineFitOptions& options) {
    SplineKernel k;
    k.s_pot = s_pot;
    k.s_dep = s_dep;
    k.pot = SmoothingSpline::fit(updates.delta_pot, updates.dg_pot, s_pot, options);
    k.dep = SmoothingSpline::fit(updates.delta_dep, updates.dg_dep, s_dep, options);
    return k;
}

// ---- kernel handle -----------------------------------------------------------

const char* to_string(KernelKind kind) noexcept {
    switch (kind) {
        case KernelKind::Linear: return "linear";
        case KernelKind::Ideal: return "ideal";
        case KernelKind::Spline: return "spline";
    }
    return "unknown";
}

PlasticityKernel::PlasticityKernel(Impl impl, double l_max) : impl_(std::move(impl)), l_max_(l_max) {
    if (!(l_max_ > 0.0)) throw ConfigError("kernel: l_max must be > 0");
    if (const auto* ideal = std::get_if<IdealKernel>(&impl_)) ideal->params.validate();
    if (const auto* lin = std::get_if<LinearKernel>(&impl_)) {
        if (!(lin->eta_pot > 0 && lin->eta_dep > 0)) {
            throw ConfigError("linear kernel: learning rates must be > 0");
        }
    }
    if (const auto* sp = std::get_if<SplineKernel>(&impl_)) {
        if (sp->pot.empty() || sp->dep.empty()) throw ConfigError("spline kernel: missing branch");
    }
}

double PlasticityKernel::operator()(double kappa) const {
    check_agreement(kappa, "eval_kernel");
    if (kappa == 0.0) return 0.0;
    const double raw = std::visit(
        [kappa](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LinearKernel>) {
                return linear_kernel(kappa, k.eta_pot, k.eta_dep);
            } else if constexpr (std::is_same_v<K, IdealKernel>) {
                return ideal_sadp_kernel(kappa, k.params, k.form);
            } else {
                return kappa > 0.0 ? k.pot(kappa) : k.dep(kappa);
            }
        },
        impl_);
    return std::clamp(raw, -l_max_, l_max_);
}

double eval_kernel(const PlasticityKernel& kernel, double kappa) { return kernel(kappa); }

// ---- kernel files ------------------------------------------------------------

namespace {

json spline_to_json(const SmoothingSpline& s, double budget) {
    return {{"knots", s.knots()},
            {"coefficients", s.coefficients()},
            {"s", budget},
            {"fit_residual", s.diagnostics().residual},
            {"effective_dof", s.diagnostics().effective_dof}};
}

const json& field(const json& j, const char* name, const std::string& path) {
    if (!j.is_object() || !j.contains(name)) {
        throw ParseError("kernel file: missing field '" + path + name + "'");
    }
    return j.at(name);
}

template <typename T>
T field_as(const json& j, const char* name, const std::string& path) {
    const json& v = field(j, name, path);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ParseError("kernel file: field '" + path + name + "' has the wrong type");
    }
}

SmoothingSpline spline_from_json(const json& j, const std::string& path, double& budget) {
    auto knots = field_as<std::vector<double>>(j, "knots", path);
    auto coefs = field_as<std::vector<double>>(j, "coefficients", path);
    budget = field_as<double>(j, "s", path);
    SmoothingSpline s;
    try {
        s = SmoothingSpline(std::move(knots), std::move(coefs));
    } catch (const ShapeError& e) {
        throw ParseError("kernel file: field '" + path + "knots': " + e.what());
    }
    SplineFitDiagnostics d;
    d.residual = field_as<double>(j, "fit_residual", path);
    if (j.contains("effective_dof")) d.effective_dof = j.at("effective_dof").get<double>();
    d.interior_knots = s.knots().size() - 8;
    s.set_diagnostics(d);
    return s;
}

}  // namespace

void export_kernel(std::ostream& out, const PlasticityKernel& kernel) {
    json j;
    j["version"] = kKernelFileVersion;
    j["kind"] = to_string(kernel.kind());
    j["l_max"] = kernel.l_max();
    std::visit(
        [&j](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LinearKernel>) {
                j["params"] = {{"eta_pot", k.eta_pot}, {"eta_dep", k.eta_dep}};
            } else if constexpr (std::is_same_v<K, IdealKernel>) {
                j["params"] = {{"a_plus", k.params.a_plus},
                               {"a_minus", k.params.a_minus},
                               {"tau_plus", k.params.tau_plus},
                               {"tau_minus", k.params.tau_minus},
                               {"form", k.form == IdealForm::Mirrored ? "mirrored" : "shifted"}};
            } else {
                j["params"] = json::object();
                j["potentiation"] = spline_to_json(k.pot, k.s_pot);
                j["depression"] = spline_to_json(k.dep, k.s_dep);
            }
        },
        kernel.impl());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing kernel file");
}

PlasticityKernel import_kernel(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("kernel file: ") + e.what());
    }
    const int version = field_as<int>(j, "version", "");
    if (version != kKernelFileVersion) {
        throw UnsupportedVersionError("kernel file: version " + std::to_string(version) +
                                      " unsupported (expected " +
                                      std::to_string(kKernelFileVersion) + ")");
    }
    const auto kind = field_as<std::string>(j, "kind", "");
    const double l_max = field_as<double>(j, "l_max", "");
    const json& params = field(j, "params", "");
    if (kind == "linear") {
        return PlasticityKernel(LinearKernel{field_as<double>(params, "eta_pot", "params."),
                                             field_as<double>(params, "eta_dep", "params.")},
                                l_max);
    }
    if (kind == "ideal") {
        IdealKernel k;
        k.params.a_plus = field_as<double>(params, "a_plus", "params.");
        k.params.a_minus = field_as<double>(params, "a_minus", "params.");
        k.params.tau_plus = field_as<double>(params, "tau_plus", "params.");
        k.params.tau_minus = field_as<double>(params, "tau_minus", "params.");
        const auto form = field_as<std::string>(params, "form", "params.");
        if (form != "mirrored" && form != "shifted") {
            throw ParseError("kernel file: field 'params.form' must be mirrored|shifted");
        }
        k.form = form == "mirrored" ? IdealForm::Mirrored : IdealForm::Shifted;
        return PlasticityKernel(k, l_max);
    }
    if (kind == "spline") {
        SplineKernel k;
        k.pot = spline_from_json(field(j, "potentiation", ""), "potentiation.", k.s_pot);
        k.dep = spline_from_json(field(j, "depression", ""), "depression.", k.s_dep);
        return PlasticityKernel(std::move(k), l_max);
    }
    throw ParseError("kernel file: field 'kind' has unknown value '" + kind + "'");
}

void save_kernel(const std::string& path, const PlasticityKernel& kernel) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    export_kernel(out, kernel);
}

PlasticityKernel load_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return import_kernel(in);
}

}  // namespace sadp
