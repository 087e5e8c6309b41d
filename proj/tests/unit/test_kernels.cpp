#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "sadp/error.hpp"
#include "sadp/kernels.hpp"

using namespace sadp;

namespace {

StdpParams unit_params() {
    StdpParams p;
    p.a_plus = 1.0;
    p.a_minus = 1.0;
    p.tau_plus = 0.25;
    p.tau_minus = 0.25;
    return p;
}

DeviceTrace trace_from(const std::vector<double>& g_pot, const std::vector<double>& g_dep) {
    DeviceTrace t;
    std::int64_t k = 0;
    for (double g : g_pot) t.samples.push_back({k++, g, PulsePhase::Potentiation});
    for (double g : g_dep) t.samples.push_back({k++, g, PulsePhase::Depression});
    return t;
}

PlasticityKernel synthetic_spline_kernel() {
    const auto upd = extract_updates(synthetic_device_trace(SyntheticDeviceParams{}));
    return PlasticityKernel(fit_spline_kernel(upd, 0.1, 0.01));
}

}  // namespace

TEST_CASE("linear kernel") {
    CHECK(linear_kernel(0.0, 0.01, 0.01) == 0.0);
    CHECK(linear_kernel(0.5, 0.01, 0.01) == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(linear_kernel(-1.0, 0.01, 0.02) == doctest::Approx(-0.02).epsilon(1e-15));
    CHECK_THROWS_AS(linear_kernel(1.5, 0.01, 0.01), DomainError);
}

TEST_CASE("stdp window") {
    const auto p = unit_params();
    CHECK(stdp_kernel(0.25, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(stdp_kernel(-0.25, p) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-15));
    CHECK(stdp_kernel(1e-12, p) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(stdp_kernel(0.0, p), DomainError);
    double prev = stdp_kernel(0.01, p);
    for (double dt = 0.02; dt < 3.0; dt += 0.01) {
        REQUIRE(stdp_kernel(dt, p) < prev);
        REQUIRE(std::abs(stdp_kernel(-dt, p)) < std::abs(stdp_kernel(-(dt - 0.01), p)));
        prev = stdp_kernel(dt, p);
    }
}

TEST_CASE("ideal kernel values") {
    const auto p = unit_params();
    CHECK(ideal_sadp_kernel(1.0, p) == 1.0);
    CHECK(ideal_sadp_kernel(-1.0, p) == -1.0);
    CHECK(ideal_sadp_kernel(0.5, p) == doctest::Approx(0.1353352832366127).epsilon(1e-12));
    CHECK(ideal_sadp_kernel(0.0, p) == 0.0);
    CHECK_THROWS_AS(ideal_sadp_kernel(1.01, p), DomainError);
    // The literal shift puts the depression branch on positive agreement.
    CHECK(ideal_sadp_kernel(0.5, p, IdealForm::Shifted) < 0.0);
    CHECK(ideal_sadp_kernel(-0.5, p, IdealForm::Shifted) > 0.0);
}

TEST_CASE("ideal kernel sign, monotonicity and oddness") {
    StdpParams p;
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 100000; ++k) {
        const double d = u(gen);
        const double f = ideal_sadp_kernel(d, p);
        if (d > 0) REQUIRE(f >= 0.0);
        if (d < 0) REQUIRE(f <= 0.0);
        REQUIRE(ideal_sadp_kernel(-d, p) == -f);
    }
    for (double lo : {-1.0, 1e-6}) {
        double prev = ideal_sadp_kernel(lo, p);
        for (double d = lo + 1e-3; d < lo + 1.0 - 1e-9; d += 1e-3) {
            if (d == 0.0) continue;
            const double f = ideal_sadp_kernel(d, p);
            REQUIRE(f > prev);
            prev = f;
        }
    }
    StdpParams asym = p;
    asym.a_minus = 0.02;
    CHECK(ideal_sadp_kernel(-0.3, asym) != -ideal_sadp_kernel(0.3, asym));
}

TEST_CASE("normalized updates and extract_updates") {
    const auto u = normalized_updates({1.0, 2.0, 3.0}, kDefaultEps);
    REQUIRE(u.size() == 2);
    CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(u[1] == doctest::Approx(0.5).epsilon(1e-7));

    const auto flat = extract_updates(trace_from({2, 2, 2, 2, 2, 2}, {2, 2, 2, 2, 2}));
    for (double v : flat.dg_pot) CHECK(v == 0.0);
    for (double v : flat.dg_dep) CHECK(v == 0.0);
    CHECK(flat.delta_pot.back() == 1.0);
    CHECK(flat.delta_dep.front() == -1.0);
    for (double d : flat.delta_pot) CHECK(d > 0.0);
    for (double d : flat.delta_dep) CHECK(d < 0.0);

    std::vector<double> g;
    for (int t = 1; t <= 400; ++t) g.push_back(1.0 - std::exp(-t / 200.0));
    const auto sat = normalized_updates(g, kDefaultEps);
    for (std::size_t k = 1; k < sat.size(); ++k) REQUIRE(sat[k] < sat[k - 1]);

    std::vector<double> down(g.rbegin(), g.rend());
    const auto upd = extract_updates(trace_from(g, down));
    CHECK(upd.dg_pot.back() == *std::max_element(upd.dg_pot.begin(), upd.dg_pot.end()));
    CHECK(upd.dg_dep.front() == *std::min_element(upd.dg_dep.begin(), upd.dg_dep.end()));
    CHECK(upd.dg_dep.front() < 0.0);

    CHECK_THROWS_AS(extract_updates(trace_from({1, 2, 3, 4}, {4, 3, 2, 1, 0.5})), FitError);
    CHECK_THROWS_AS(extract_updates(trace_from({1, 2, 0, 4, 5}, {4, 3, 2, 1, 0.5})), DataError);
}

TEST_CASE("spline kernel on the synthetic device respects budgets and bounds") {
    for (double s : {0.1, 0.01}) {
        const auto upd = extract_updates(synthetic_device_trace(SyntheticDeviceParams{}));
        const auto k = fit_spline_kernel(upd, s, s);
        CHECK(k.pot.diagnostics().residual <= s);
        CHECK(k.dep.diagnostics().residual <= s);
    }
    const auto kernel = synthetic_spline_kernel();
    CHECK(kernel(0.0) == 0.0);
    const auto& sp = std::get<SplineKernel>(kernel.impl());
    CHECK(kernel(1.0) == std::clamp(sp.pot(1.0), -1.0, 1.0));
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 100000; ++k) {
        const double v = kernel(u(gen));
        REQUIRE(std::isfinite(v));
        REQUIRE(std::abs(v) <= kernel.l_max());
    }
    const PlasticityKernel tight(LinearKernel{2.0, 2.0}, 0.5);
    CHECK(tight(0.9) == 0.5);
    CHECK(tight(-0.9) == -0.5);
}

TEST_CASE("every kernel is zero at zero agreement") {
    CHECK(PlasticityKernel()(0.0) == 0.0);
    CHECK(PlasticityKernel(IdealKernel{})(0.0) == 0.0);
    CHECK(synthetic_spline_kernel()(0.0) == 0.0);
    CHECK_THROWS_AS(PlasticityKernel()(-1.2), DomainError);
}

TEST_CASE("kernel export/import round trip") {
    const std::vector<PlasticityKernel> kernels = {
        PlasticityKernel(LinearKernel{0.02, 0.03}, 0.7),
        PlasticityKernel(IdealKernel{StdpParams{}, IdealForm::Shifted}),
        synthetic_spline_kernel(),
    };
    for (const auto& k : kernels) {
        std::stringstream ss;
        export_kernel(ss, k);
        const auto back = import_kernel(ss);
        CHECK(back.kind() == k.kind());
        CHECK(back.l_max() == k.l_max());
        for (int i = 0; i <= 1000; ++i) {
            const double kappa = -1.0 + 2.0 * i / 1000.0;
            REQUIRE(std::abs(back(kappa) - k(kappa)) <= 1e-12);
        }
    }
}

TEST_CASE("kernel import errors") {
    std::stringstream ss;
    export_kernel(ss, synthetic_spline_kernel());
    const std::string text = ss.str();

    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(import_kernel(truncated), ParseError);

    auto j = nlohmann::json::parse(text);
    j["version"] = kKernelFileVersion + 1;
    std::istringstream future(j.dump());
    CHECK_THROWS_AS(import_kernel(future), UnsupportedVersionError);

    j = nlohmann::json::parse(text);
    j.erase("kind");
    std::istringstream missing(j.dump());
    try {
        (void)import_kernel(missing);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("kind") != std::string::npos);
    }
}

TEST_CASE("device csv parsing") {
    const auto trace = synthetic_device_trace(SyntheticDeviceParams{});
    std::stringstream ss;
    write_device_csv(ss, trace);
    const auto back = read_device_csv(ss);
    REQUIRE(back.samples.size() == trace.samples.size());
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        CHECK(back.samples[k].pulse_index == trace.samples[k].pulse_index);
        CHECK(back.samples[k].phase == trace.samples[k].phase);
        CHECK(back.samples[k].conductance == doctest::Approx(trace.samples[k].conductance).epsilon(1e-12));
    }

    std::istringstream bad("pulse_index,conductance_S,phase\n0,1e-6,P\n1,oops,P\n");
    try {
        (void)read_device_csv(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream phase("pulse_index,conductance_S,phase\n0,1e-6,X\n");
    CHECK_THROWS_AS(read_device_csv(phase), ParseError);
    std::istringstream header("idx,g\n");
    CHECK_THROWS_AS(read_device_csv(header), ParseError);
}
