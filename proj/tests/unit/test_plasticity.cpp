#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sadp/error.hpp"
#include "sadp/plasticity.hpp"

using namespace sadp;

namespace {

SadpConfig linear_cfg(double eta_pot = 0.01, double eta_dep = 0.01) {
    SadpConfig c;
    c.kernel = PlasticityKernel(LinearKernel{eta_pot, eta_dep});
    return c;
}

SpikeTensor random_spikes(std::mt19937_64& gen, std::size_t b, std::size_t n, std::size_t t) {
    std::uniform_real_distribution<double> dens(0.0, 1.0);
    SpikeTensor s(b, n, t);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            std::bernoulli_distribution bit(dens(gen));
            for (std::size_t u = 0; u < t; ++u)
                if (bit(gen)) s.set_spike(i, k, u);
        }
    }
    return s;
}

SpikeTensor single(std::vector<std::uint8_t> bits) {
    SpikeTensor s(1, 1, bits.size());
    s.set_train(0, 0, pack_train(bits, bits.size()));
    return s;
}

}  // namespace

TEST_CASE("bound_weight") {
    CHECK(bound_weight(1.2, 1e-8) == 1.0);
    CHECK(bound_weight(-3.0, 1e-8) == -1.0);
    CHECK(bound_weight(0.0, 1e-8) == 1e-8);
    CHECK(bound_weight(-1e-12, 1e-8) == -1e-8);
    CHECK(bound_weight(0.4, 1e-8) == 0.4);
}

TEST_CASE("sadp_update worked examples") {
    SUBCASE("zero agreement leaves weights unchanged") {
        WeightMatrix w(2, 2);
        w(0, 0) = 0.3;
        w(0, 1) = -0.7;
        w(1, 0) = 1.0;
        w(1, 1) = 0.0;
        sadp_update(w, AgreementMatrix(3, 2, 2), linear_cfg(), 0);
        CHECK(w(0, 0) == 0.3);
        CHECK(w(0, 1) == -0.7);
        CHECK(w(1, 0) == 1.0);
        CHECK(w(1, 1) == kDefaultEps);
    }
    SUBCASE("clip at +1") {
        WeightMatrix w(1, 1, 0.5);
        AgreementMatrix k(1, 1, 1);
        k(0, 0, 0) = 0.7;
        sadp_update(w, k, linear_cfg(1.0, 1.0), 0);
        CHECK(w(0, 0) == 1.0);
    }
    SUBCASE("exact cancellation floors to +eps") {
        WeightMatrix w(1, 1, 0.3);
        AgreementMatrix k(1, 1, 1);
        k(0, 0, 0) = -0.3;
        sadp_update(w, k, linear_cfg(1.0, 1.0), 0);
        CHECK(w(0, 0) == kDefaultEps);
    }
    SUBCASE("batch average") {
        WeightMatrix w(1, 1, 0.1);
        AgreementMatrix k(2, 1, 1);
        k(0, 0, 0) = 1.0;
        k(1, 0, 0) = 0.0;
        sadp_update(w, k, linear_cfg(), 0);
        CHECK(w(0, 0) - 0.1 == doctest::Approx(0.005).epsilon(1e-12));
    }
}

TEST_CASE("eta schedule scales the step") {
    WeightMatrix w(1, 1, 0.1);
    AgreementMatrix k(1, 1, 1);
    k(0, 0, 0) = 1.0;
    auto cfg = linear_cfg();
    cfg.eta = [](std::size_t epoch) { return epoch == 3 ? 2.0 : 1.0; };
    sadp_update(w, k, cfg, 3);
    CHECK(w(0, 0) == doctest::Approx(0.12).epsilon(1e-12));
    cfg.eta = constant_eta(0.0);
    CHECK_THROWS_AS(sadp_update(w, k, cfg, 0), ConfigError);
}

TEST_CASE("weights stay bounded over 10^5 random updates") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto cfg = linear_cfg(1.0, 1.0);
    WeightMatrix w = init_rademacher(4, 3, 2);
    AgreementMatrix k(2, 4, 3);
    for (int step = 0; step < 100000; ++step) {
        for (double& v : k.values) v = u(gen);
        cfg.eta = constant_eta(std::exp(4.0 * u(gen)));
        sadp_update(w, k, cfg, 0);
        for (double v : w.values()) {
            REQUIRE(v >= -1.0);
            REQUIRE(v <= 1.0);
            REQUIRE(std::abs(v) >= cfg.eps);
        }
    }
}

TEST_CASE("linear sadp is monotone in agreement") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        WeightMatrix w(2, 2);
        for (double& v : w.values()) v = u(gen);
        AgreementMatrix k(3, 2, 2);
        for (double& v : k.values) v = u(gen);
        AgreementMatrix k2 = k;
        const std::size_t idx = gen() % k.values.size();
        k2.values[idx] = std::min(1.0, k.values[idx] + std::abs(u(gen)));
        WeightMatrix a = w, b = w;
        sadp_update(a, k, linear_cfg(0.3, 0.2), 0);
        sadp_update(b, k2, linear_cfg(0.3, 0.2), 0);
        for (std::size_t m = 0; m < 4; ++m) REQUIRE(b.values()[m] >= a.values()[m]);
    }
}

TEST_CASE("fused update equals kappa_batch followed by sadp_update") {
    std::mt19937_64 gen(77);
    const std::vector<PlasticityKernel> kernels = {
        PlasticityKernel(LinearKernel{0.05, 0.03}),
        PlasticityKernel(IdealKernel{}),
    };
    // T = 10 exercises the lookup table, T = 100 the direct path.
    for (std::size_t t : {10, 100}) {
        for (const auto& kernel : kernels) {
            const auto pre = random_spikes(gen, 8, 12, t);
            const auto post = random_spikes(gen, 8, 5, t);
            SadpConfig cfg;
            cfg.kernel = kernel;
            cfg.eta = constant_eta(3.0);
            WeightMatrix a = init_rademacher(12, 5, 9), b = a;
            sadp_update(a, kappa_batch(pre, post), cfg, 0);
            sadp_update_from_spikes(b, pre, post, cfg, 0);
            for (std::size_t m = 0; m < a.values().size(); ++m)
                REQUIRE(b.values()[m] == doctest::Approx(a.values()[m]).epsilon(1e-12));
        }
    }
}

TEST_CASE("sadp shape errors") {
    WeightMatrix w(3, 2);
    CHECK_THROWS_AS(sadp_update(w, AgreementMatrix(1, 2, 2), linear_cfg(), 0), ShapeError);
    CHECK_THROWS_AS(sadp_update(w, AgreementMatrix(0, 3, 2), linear_cfg(), 0), ShapeError);
    CHECK_THROWS_AS(sadp_update_from_spikes(w, SpikeTensor(1, 3, 4), SpikeTensor(1, 3, 4), linear_cfg(), 0),
                    ShapeError);
}

TEST_CASE("stdp baseline") {
    StdpBaselineConfig cfg;
    cfg.trace_tau = 5.0;

    WeightMatrix w(1, 1, 0.2);
    stdp_postpre_update(w, SpikeTensor(1, 1, 10), SpikeTensor(1, 1, 10), cfg);
    CHECK(w(0, 0) == 0.2);

    stdp_postpre_update(w, single({0, 0, 1, 0, 0, 0, 0, 0}), single({0, 0, 0, 0, 0, 1, 0, 0}), cfg);
    CHECK(w(0, 0) - 0.2 == doctest::Approx(1e-4 * std::exp(-0.6)).epsilon(1e-9));
    CHECK(w(0, 0) - 0.2 == doctest::Approx(5.488e-5).epsilon(1e-3));

    WeightMatrix v(1, 1, 0.2);
    stdp_postpre_update(v, single({0, 0, 0, 0, 0, 1, 0, 0}), single({0, 1, 0, 0, 0, 0, 0, 0}), cfg);
    CHECK(v(0, 0) <= 0.2);

    WeightMatrix lo(1, 1, 0.0);
    stdp_postpre_update(lo, single({0, 1}), single({1, 0}), cfg);
    CHECK(lo(0, 0) == 0.0);
}

TEST_CASE("hebbian baseline") {
    HebbianConfig cfg;
    WeightMatrix w(1, 1, 0.1);
    hebbian_update(w, single({1, 0, 1}), single({1, 1, 1}), cfg);
    CHECK(w(0, 0) - 0.1 == doctest::Approx(1e-3).epsilon(1e-9));

    WeightMatrix d(1, 1, 0.5);
    hebbian_update(d, single({0, 0, 0}), single({0, 0, 0}), cfg);
    CHECK(d(0, 0) == doctest::Approx(0.5 - 1e-2 * 0.5).epsilon(1e-12));

    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t = 1 + gen() % 150;
        const auto pre = random_spikes(gen, 1, 1, t);
        const auto post = random_spikes(gen, 1, 1, t);
        std::size_t both = 0;
        for (std::size_t u = 0; u < t; ++u) both += pre.spike(0, 0, u) && post.spike(0, 0, u);
        HebbianConfig c;
        c.eta = 1e-6;
        WeightMatrix x(1, 1, 0.0);
        hebbian_update(x, pre, post, c);
        REQUIRE(x(0, 0) == doctest::Approx(1e-6 * static_cast<double>(both)).epsilon(1e-12));
    }
}

TEST_CASE("pairwise stdp oracle") {
    StdpParams p;
    p.a_plus = 1.0;
    p.tau_plus = 3.0;
    const std::vector<double> none;
    CHECK(stdp_pairwise_oracle(none, none, p) == 0.0);
    const std::vector<double> pre = {2.0}, post = {5.0};
    CHECK(stdp_pairwise_oracle(pre, post, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    for (std::size_t s : {1, 4, 8, 16, 33}) {
        std::vector<double> a(s), b(s);
        for (std::size_t k = 0; k < s; ++k) {
            a[k] = static_cast<double>(2 * k);
            b[k] = static_cast<double>(2 * k + 1);
        }
        std::uint64_t count = 0;
        (void)stdp_pairwise_oracle(a, b, p, &count);
        CHECK(count == s * s);
    }
}
