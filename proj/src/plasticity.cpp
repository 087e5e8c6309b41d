#include "sadp/plasticity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "sadp/error.hpp"

namespace sadp {

double SadpConfig::eta_at(std::size_t epoch) const {
    const double e = eta ? eta(epoch) : 1.0;
    if (!(e > 0.0) || !std::isfinite(e)) {
        throw ConfigError("sadp: learning-rate scale must be finite and > 0 (epoch " +
                          std::to_string(epoch) + ")");
    }
    return e;
}

namespace {

void apply_bounded(WeightMatrix& w, const std::vector<double>& sum_l, double scale, double eps) {
    auto values = w.values();
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double dw = scale * sum_l[k];
        if (!std::isfinite(dw)) {
            throw NumericError("sadp_update: non-finite weight change at flat index " +
                               std::to_string(k));
        }
        values[k] = bound_weight(values[k] + dw, eps);
    }
}

}  // namespace

void sadp_update(WeightMatrix& w, const AgreementMatrix& agreement, const SadpConfig& cfg,
                 std::size_t epoch) {
    if (agreement.n_in != w.n_in() || agreement.n_out != w.n_out()) {
        throw ShapeError("sadp_update: agreement is " + std::to_string(agreement.n_in) + "x" +
                         std::to_string(agreement.n_out) + ", weights are " +
                         std::to_string(w.n_in()) + "x" + std::to_string(w.n_out()));
    }
    if (agreement.batch == 0) throw ShapeError("sadp_update: empty batch");
    const double eta = cfg.eta_at(epoch);
    const std::size_t plane = w.n_in() * w.n_out();
    std::vector<double> sum_l(plane, 0.0);
    for (std::size_t b = 0; b < agreement.batch; ++b) {
        const double* k = agreement.values.data() + b * plane;
        for (std::size_t idx = 0; idx < plane; ++idx) sum_l[idx] += cfg.kernel(k[idx]);
    }
    apply_bounded(w, sum_l, eta / static_cast<double>(agreement.batch), cfg.eps);
}

void sadp_update_from_spikes(WeightMatrix& w, const SpikeTensor& pre, const SpikeTensor& post,
                             const SadpConfig& cfg, std::size_t epoch) {
    check_agreement_shapes(pre, post);
    if (pre.neurons() != w.n_in() || post.neurons() != w.n_out()) {
        throw ShapeError("sadp_update: spike tensors do not match the weight matrix");
    }
    if (pre.batch() == 0) throw ShapeError("sadp_update: empty batch");
    const double eta = cfg.eta_at(epoch);
    const std::size_t len = pre.timesteps();
    const std::size_t n_in = w.n_in();
    const std::size_t n_out = w.n_out();
    const std::size_t batch = pre.batch();
    std::vector<double> sum_l(n_in * n_out, 0.0);

    // kappa depends only on (ones in pre, ones in post, disagreements); for
    // short trains tabulate L over that cube once per call.
    const std::size_t side = len + 1;
    const bool tabulate = len <= 64 && side * side * side <= batch * n_in * n_out;
    std::vector<double> table;
    if (tabulate) {
        table.resize(side * side * side);
        for (std::size_t a = 0; a < side; ++a) {
            for (std::size_t c = 0; c < side; ++c) {
                for (std::size_t d = 0; d < side; ++d) {
                    table[(a * side + c) * side + d] =
                        cfg.kernel(kappa_from_counts(len, a, c, d, cfg.eps));
                }
            }
        }
    }

    std::vector<std::size_t> post_ones(n_out);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < n_out; ++j) post_ones[j] = post.popcount(b, j);
        for (std::size_t i = 0; i < n_in; ++i) {
            const auto x = pre.train_words(b, i);
            const std::size_t pre_ones = pre.popcount(b, i);
            double* row = sum_l.data() + i * n_out;
            if (tabulate) {
                const double* plane = table.data() + pre_ones * side * side;
                const std::uint64_t xw = x[0];
                for (std::size_t j = 0; j < n_out; ++j) {
                    const auto d = static_cast<std::size_t>(std::popcount(xw ^ post.train_words(b, j)[0]));
                    row[j] += plane[post_ones[j] * side + d];
                }
            } else {
                for (std::size_t j = 0; j < n_out; ++j) {
                    const auto y = post.train_words(b, j);
                    std::size_t d = 0;
                    for (std::size_t k = 0; k < x.size(); ++k) {
                        d += static_cast<std::size_t>(std::popcount(x[k] ^ y[k]));
                    }
                    row[j] += cfg.kernel(kappa_from_counts(len, pre_ones, post_ones[j], d, cfg.eps));
                }
            }
        }
    }
    apply_bounded(w, sum_l, eta / static_cast<double>(batch), cfg.eps);
}

// ---- baselines ----------------------------------------------------------------

void StdpBaselineConfig::validate() const {
    if (!(a_plus > 0 && a_minus > 0)) throw ConfigError("stdp baseline: amplitudes must be > 0");
    if (!(trace_tau > 0)) throw ConfigError("stdp baseline: trace_tau must be > 0");
    if (!(w_min < w_max) || !(init_lo <= init_hi)) {
        throw ConfigError("stdp baseline: bounds must be ordered");
    }
}

void HebbianConfig::validate() const {
    if (!(eta > 0 && decay > 0)) throw ConfigError("hebbian: eta and decay must be > 0");
    if (!(w_min < w_max) || !(init_lo <= init_hi)) {
        throw ConfigError("hebbian: bounds must be ordered");
    }
}

namespace {

void check_baseline_shapes(const WeightMatrix& w, const SpikeTensor& pre, const SpikeTensor& post) {
    check_agreement_shapes(pre, post);
    if (pre.neurons() != w.n_in() || post.neurons() != w.n_out()) {
        throw ShapeError("plasticity baseline: spike tensors do not match the weight matrix");
    }
}

}  // namespace

void stdp_postpre_update(WeightMatrix& w, const SpikeTensor& pre, const SpikeTensor& post,
                         const StdpBaselineConfig& cfg) {
    cfg.validate();
    check_baseline_shapes(w, pre, post);
    const std::size_t n_in = w.n_in();
    const std::size_t n_out = w.n_out();
    const double decay = std::exp(-1.0 / cfg.trace_tau);
    std::vector<double> x_pre(n_in);
    std::vector<double> x_post(n_out);
    std::vector<std::size_t> pre_fired;
    std::vector<std::size_t> post_fired;

    for (std::size_t b = 0; b < pre.batch(); ++b) {
        std::fill(x_pre.begin(), x_pre.end(), 0.0);
        std::fill(x_post.begin(), x_post.end(), 0.0);
        for (std::size_t t = 0; t < pre.timesteps(); ++t) {
            pre_fired.clear();
            post_fired.clear();
            for (std::size_t i = 0; i < n_in; ++i) {
                x_pre[i] *= decay;
                if (pre.spike(b, i, t)) {
                    x_pre[i] = 1.0;
                    pre_fired.push_back(i);
                }
            }
            for (std::size_t j = 0; j < n_out; ++j) {
                x_post[j] *= decay;
                if (post.spike(b, j, t)) {
                    x_post[j] = 1.0;
                    post_fired.push_back(j);
                }
            }
            for (std::size_t j : post_fired) {
                for (std::size_t i = 0; i < n_in; ++i) {
                    w(i, j) = std::clamp(w(i, j) + cfg.a_plus * x_pre[i], cfg.w_min, cfg.w_max);
                }
            }
            for (std::size_t i : pre_fired) {
                for (std::size_t j = 0; j < n_out; ++j) {
                    w(i, j) = std::clamp(w(i, j) - cfg.a_minus * x_post[j], cfg.w_min, cfg.w_max);
                }
            }
        }
    }
}

void hebbian_update(WeightMatrix& w, const SpikeTensor& pre, const SpikeTensor& post,
                    const HebbianConfig& cfg) {
    cfg.validate();
    check_baseline_shapes(w, pre, post);
    const std::size_t n_in = w.n_in();
    const std::size_t n_out = w.n_out();
    for (std::size_t b = 0; b < pre.batch(); ++b) {
        for (std::size_t i = 0; i < n_in; ++i) {
            const auto x = pre.train_words(b, i);
            for (std::size_t j = 0; j < n_out; ++j) {
                const auto y = post.train_words(b, j);
                std::size_t coactive = 0;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    coactive += static_cast<std::size_t>(std::popcount(x[k] & y[k]));
                }
                double& v = w(i, j);
                v += cfg.eta * static_cast<double>(coactive) - cfg.decay * v;
                v = std::clamp(v, cfg.w_min, cfg.w_max);
            }
        }
    }
}

double stdp_pairwise_oracle(std::span<const double> pre_times, std::span<const double> post_times,
                            const StdpParams& p, std::uint64_t* pair_count) {
    double total = 0.0;
    for (double tp : pre_times) {
        for (double tq : post_times) {
            if (pair_count) ++*pair_count;
            const double dt = tq - tp;
            if (dt != 0.0) total += stdp_kernel(dt, p);
        }
    }
    return total;
}

}  // namespace sadp
