// Acceptance checks 1-8. Prints one PASS/FAIL line per criterion (6 is an
// optional full-scale report and is skipped unless SADP_FULL_SCALE=1) and
// exits non-zero when any gated criterion fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sadp/agreement.hpp"
#include "sadp/bench.hpp"
#include "sadp/classifier.hpp"
#include "sadp/error.hpp"
#include "sadp/kernels.hpp"
#include "sadp/plasticity.hpp"
#include "sadp/spline.hpp"

using namespace sadp;

namespace {

const std::string kManifest = std::string(SADP_DATA_DIR) + "/mnist/manifest.json";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- 1: kappa against a dense confusion-table loop ----------------------------

double dense_kappa(const SpikeTensor& x, std::size_t bx, std::size_t i, const SpikeTensor& y, std::size_t by,
                   std::size_t j) {
    const std::size_t t = x.timesteps();
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (std::size_t k = 0; k < t; ++k) {
        const bool a = x.spike(bx, i, k), b = y.spike(by, j, k);
        if (a && b) n11 += 1;
        else if (a) n10 += 1;
        else if (b) n01 += 1;
        else n00 += 1;
    }
    const double n = static_cast<double>(t);
    const double p0 = (n11 + n00) / n;
    const double px = (n11 + n10) / n, py = (n11 + n01) / n;
    const double pe = px * py + (1 - px) * (1 - py);
    return std::clamp((p0 - pe) / std::max(1 - pe, kDefaultEps), -1.0, 1.0);
}

Outcome criterion1() {
    std::mt19937_64 gen(101);
    std::uniform_real_distribution<double> dens(0.0, 1.0);
    std::size_t pairs = 0;
    double worst = 0;
    for (std::size_t t : {4, 10, 63, 64, 65, 1000}) {
        const std::size_t b = 4, n_in = 64, n_out = 66;
        SpikeTensor pre(b, n_in, t), post(b, n_out, t);
        for (auto* s : {&pre, &post}) {
            for (std::size_t bb = 0; bb < b; ++bb) {
                for (std::size_t n = 0; n < s->neurons(); ++n) {
                    std::bernoulli_distribution bit(dens(gen));
                    for (std::size_t k = 0; k < t; ++k)
                        if (bit(gen)) s->set_spike(bb, n, k);
                }
            }
        }
        const auto kb = kappa_batch(pre, post);
        for (std::size_t bb = 0; bb < b; ++bb)
            for (std::size_t i = 0; i < n_in; ++i)
                for (std::size_t j = 0; j < n_out; ++j) {
                    worst = std::max(worst, std::abs(kb(bb, i, j) - dense_kappa(pre, bb, i, post, bb, j)));
                    ++pairs;
                }
    }
    return {pairs >= 100000 && worst <= 1e-12,
            std::to_string(pairs) + " pairs, max |diff| " + fmt("%.3g", worst)};
}

// ---- 2: scaling ---------------------------------------------------------------

Outcome criterion2() {
    const auto rep = run_scaling_study(ScalingConfig{});
    bool quadruples = true;
    for (std::size_t k = 1; k < rep.s_values.size(); ++k) {
        if (rep.s_values[k] == 2 * rep.s_values[k - 1]) quadruples &= rep.oracle_pairs[k] == 4 * rep.oracle_pairs[k - 1];
    }
    const bool slope_ok = rep.sadp_time_slope >= 0.8 && rep.sadp_time_slope <= 1.2;
    // Not gated: the same measurement at long trains, where popcount work
    // outweighs the per-synapse kernel evaluation.
    ScalingConfig longer;
    longer.t_values = {8192, 16384, 32768, 65536};
    longer.s_values = {4, 8};
    longer.trials = 3;
    const auto tail = run_scaling_study(longer);
    return {slope_ok && quadruples, "SADP time slope vs T " + fmt("%.3f", rep.sadp_time_slope) +
                                        " (T 8192..65536: " + fmt("%.3f", tail.sadp_time_slope) + ")" +
                                        ", pairwise pairs quadruple per S doubling: " +
                                        (quadruples ? "yes" : "no") + " (pair slope " +
                                        fmt("%.3f", rep.oracle_pair_slope) + ")"};
}

// ---- 3: weight bounds -----------------------------------------------------------

Outcome criterion3() {
    std::mt19937_64 gen(303);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SadpConfig cfg;
    cfg.kernel = PlasticityKernel(LinearKernel{1.0, 1.0});
    WeightMatrix w = init_rademacher(5, 4, 3);
    AgreementMatrix k(2, 5, 4);
    std::size_t violations = 0;
    for (int step = 0; step < 100000; ++step) {
        for (double& v : k.values) v = u(gen);
        cfg.eta = constant_eta(std::exp(5.0 * u(gen)));
        sadp_update(w, k, cfg, 0);
        for (double v : w.values())
            if (!(v >= -1.0 && v <= 1.0 && std::abs(v) >= cfg.eps)) ++violations;
    }
    return {violations == 0, "100000 updates, " + std::to_string(violations) + " bound violations"};
}

// ---- 4: kernel fidelity -----------------------------------------------------------

Outcome criterion4() {
    bool ok = true;
    std::ostringstream d;
    const auto upd = extract_updates(synthetic_device_trace(SyntheticDeviceParams{}));
    for (double s : {0.1, 0.01}) {
        const auto k = fit_spline_kernel(upd, s, s);
        const double rp = k.pot.diagnostics().residual, rd = k.dep.diagnostics().residual;
        ok &= rp <= s && rd <= s;
        d << "s=" << s << " residuals " << fmt("%.2e", rp) << "/" << fmt("%.2e", rd) << "; ";
    }

    std::vector<double> x, y;
    for (int k = 0; k < 60; ++k) {
        const double v = -1.0 + 2.0 * k / 59.0;
        x.push_back(v);
        y.push_back(0.3 - 0.8 * v + 1.7 * v * v - 0.9 * v * v * v);
    }
    double cubic_err = 0;
    for (double s : {0.0, 0.1, 0.01}) {
        const auto sp = SmoothingSpline::fit(x, y, s);
        for (std::size_t k = 0; k < x.size(); ++k) cubic_err = std::max(cubic_err, std::abs(sp(x[k]) - y[k]));
    }
    ok &= cubic_err <= 1e-9;
    d << "cubic max err " << fmt("%.2e", cubic_err) << "; ";

    const StdpParams p;
    bool props = true;
    for (int k = 1; k <= 2000; ++k) {
        const double delta = k / 2000.0;
        const double f = ideal_sadp_kernel(delta, p), g = ideal_sadp_kernel(-delta, p);
        props &= f >= 0 && g <= 0 && g == -f;
        if (k > 1) {
            props &= f > ideal_sadp_kernel((k - 1) / 2000.0, p);
            props &= g < ideal_sadp_kernel(-(k - 1) / 2000.0, p);
        }
    }
    ok &= props;
    d << "ideal kernel odd/signed/monotone: " << (props ? "yes" : "no");
    return {ok, d.str()};
}

// ---- 5: desk-scale ordering ---------------------------------------------------

ExperimentConfig desk(Rule rule, KernelChoice kernel, Coding coding, std::uint64_t seed) {
    ExperimentConfig c;
    c.manifest = kManifest;
    c.rule = rule;
    c.kernel = kernel;
    c.coding = coding;
    c.n_train = 2000;
    c.n_test = 400;
    c.stratified = true;
    c.n_features = 64;
    c.sadp_epochs = 10;
    c.classifier_epochs = 50;
    c.seed = seed;
    // Shared across every rule and kernel; chosen by a sweep over eta, theta
    // and lambda (see README).
    c.eta = 3.0;
    c.lif.theta = 0.7;
    c.lif.lambda = 0.9;
    return c;
}

Outcome criterion5() {
    DataBundle data;
    int a = 0, b = 0, c = 0;
    std::ostringstream d;
    for (std::uint64_t seed : {0, 1, 2}) {
        const auto probe = desk(Rule::Sadp, KernelChoice::Linear, Coding::Rate, seed);
        data = load_data(probe);
        const double lin_rate = run_experiment(probe, data).validation_accuracy;
        const double hebb = run_experiment(desk(Rule::Hebbian, KernelChoice::Linear, Coding::Rate, seed), data)
                                .validation_accuracy;
        const double lin_ttfs =
            run_experiment(desk(Rule::Sadp, KernelChoice::Linear, Coding::Ttfs, seed), data).validation_accuracy;
        const double ideal_ttfs =
            run_experiment(desk(Rule::Sadp, KernelChoice::SplineIdeal, Coding::Ttfs, seed), data)
                .validation_accuracy;
        a += lin_rate >= 0.55;
        b += lin_rate - hebb >= 0.30;
        c += ideal_ttfs - lin_ttfs >= 0.10;
        d << "\n    seed " << seed << ": linear-rate " << fmt("%.4f", lin_rate) << ", hebbian-rate "
          << fmt("%.4f", hebb) << ", linear-ttfs " << fmt("%.4f", lin_ttfs) << ", ideal-ttfs "
          << fmt("%.4f", ideal_ttfs);
    }
    const bool pa = a >= 2, pb = b >= 2, pc = c >= 2;
    std::ostringstream head;
    head << "(a) linear-rate >= 0.55: " << a << "/3 " << (pa ? "PASS" : "FAIL")
         << "; (b) linear-rate - hebbian >= 0.30: " << b << "/3 " << (pb ? "PASS" : "FAIL")
         << "; (c) ideal-ttfs - linear-ttfs >= 0.10: " << c << "/3 " << (pc ? "PASS" : "FAIL") << d.str();
    return {pa && pb && pc, head.str()};
}

// ---- 6: optional full-scale report ----------------------------------------------

Outcome criterion6() {
    ExperimentConfig c;
    const char* alt = std::getenv("SADP_MANIFEST");
    c.manifest = alt != nullptr ? std::string(alt) : kManifest;
    c.n_train = 0;
    c.n_test = 0;
    c.n_features = 400;
    c.eta = 3.0;
    c.lif.theta = 0.7;
    c.lif.lambda = 0.9;
    const double acc = run_experiment(c).validation_accuracy;
    return {std::abs(acc - 0.9068) <= 0.05, "linear SADP | rate | 1layer accuracy " + fmt("%.4f", acc) +
                                                " (reference 0.9068 +/- 0.05; manifest " + c.manifest + ")"};
}

// ---- 7: classifier numerics ---------------------------------------------------------

Outcome criterion7() {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Mlp m({6, 9, 7, 4}, seed);
        std::mt19937_64 gen(seed + 70);
        std::normal_distribution<double> g(0.0, 1.0);
        for (auto& bias : m.biases())
            for (Eigen::Index k = 0; k < bias.size(); ++k) bias(k) = 0.1 + 0.1 * std::abs(g(gen));
        Eigen::MatrixXd x(9, 6);
        for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = g(gen);
        std::vector<int> y(9);
        for (auto& v : y) v = static_cast<int>(gen() % 4);
        MlpGradients grads;
        (void)m.loss(x, y, &grads);
        const double h = 1e-6;
        auto check = [&](double& param, double analytic) {
            const double keep = param;
            param = keep + h;
            const double up = m.loss(x, y, nullptr);
            param = keep - h;
            const double down = m.loss(x, y, nullptr);
            param = keep;
            const double fd = (up - down) / (2 * h);
            if (std::abs(fd) > 1e-7 || std::abs(analytic) > 1e-7)
                worst = std::max(worst, std::abs(fd - analytic) / std::max(std::abs(fd), std::abs(analytic)));
        };
        for (std::size_t l = 0; l < m.weights().size(); ++l) {
            for (Eigen::Index k = 0; k < m.weights()[l].size(); ++k) check(m.weights()[l].data()[k], grads.weights[l].data()[k]);
            for (Eigen::Index k = 0; k < m.biases()[l].size(); ++k) check(m.biases()[l](k), grads.biases[l](k));
        }
    }
    std::vector<int> truth, pred;
    for (int cls = 0; cls < 10; ++cls)
        for (int k = 0; k < 100; ++k) {
            truth.push_back(cls);
            pred.push_back(0);
        }
    const double f1 = score_predictions(pred, truth, 10).macro_f1;
    const bool ok = worst <= 1e-4 && std::abs(f1 - 0.1 * (0.2 / 1.1)) <= 1e-12 && std::abs(f1 - 0.0182) <= 5e-5;
    return {ok, "max gradient rel err " + fmt("%.2e", worst) + ", all-one-class macro-F1 " + fmt("%.6f", f1)};
}

// ---- 8: determinism -------------------------------------------------------------------

Outcome criterion8() {
    bool ok = true;
    std::ostringstream d;
    const std::vector<std::pair<Rule, KernelChoice>> variants = {
        {Rule::Sadp, KernelChoice::Linear},
        {Rule::Sadp, KernelChoice::SplineDevice},
        {Rule::Sadp, KernelChoice::SplineIdeal},
        {Rule::Stdp, KernelChoice::Linear},
        {Rule::Hebbian, KernelChoice::Linear},
    };
    for (const auto& [rule, kernel] : variants) {
        auto c = desk(rule, kernel, Coding::Ttfs, 17);
        c.n_train = 300;
        c.n_test = 100;
        c.sadp_epochs = 3;
        c.classifier_epochs = 5;
        const std::string first = run_experiment(c).deterministic_json().dump();
        const std::string second = run_experiment(c).deterministic_json().dump();
        ok &= first == second;
        d << c.label() << (first == second ? " identical; " : " DIFFERS; ");
    }
    return {ok, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
        {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8},
    };
    const char* full = std::getenv("SADP_FULL_SCALE");
    const bool run_full = full != nullptr && std::string(full) == "1";
    int failures = 0;
    for (const auto& [id, fn] : criteria) {
        if (id == 6 && !run_full) {
            std::printf("criterion 6: SKIP (optional full-scale report, not gated; set SADP_FULL_SCALE=1)\n");
            std::fflush(stdout);
            continue;
        }
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        // The full-scale run is a report; it never fails the suite.
        if (!o.pass && id != 6) ++failures;
        std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
