#include "sadp/lif.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "sadp/error.hpp"

namespace sadp {

void LifConfig::validate() const {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ConfigError("lif: lambda must lie in [0, 1)");
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("lif: theta must lie in (0, 1)");
    if (!(eps > 0.0)) throw ConfigError("lif: eps must be > 0");
}

SpikeFrame frame_at(const SpikeTensor& x, std::size_t t) {
    if (t >= x.timesteps()) throw ShapeError("frame_at: timestep out of range");
    SpikeFrame f{x.batch(), x.neurons(), std::vector<std::uint8_t>(x.batch() * x.neurons())};
    for (std::size_t b = 0; b < x.batch(); ++b) {
        for (std::size_t n = 0; n < x.neurons(); ++n) {
            f.bits[b * x.neurons() + n] = x.spike(b, n, t) ? 1 : 0;
        }
    }
    return f;
}

namespace {

// Normalize, threshold and reset one B x N_out slice in place; writes
// spikes to `spikes` (same layout).
void fire_and_reset(std::vector<double>& v, std::vector<std::uint8_t>& spikes,
                    const LifConfig& cfg) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x : v) {
        if (!std::isfinite(x)) throw NumericError("lif: non-finite membrane potential");
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double denom = hi - lo + cfg.eps;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double normalized = (v[k] - lo) / denom;
        const bool fire = normalized >= cfg.theta;
        spikes[k] = fire ? 1 : 0;
        if (fire) v[k] = 0.0;
    }
}

void integrate_row(double* v_row, const WeightMatrix& w, std::size_t i) {
    auto wr = w.row(i);
    for (std::size_t j = 0; j < wr.size(); ++j) v_row[j] += wr[j];
}

}  // namespace

SpikeFrame lif_step(LayerState& state, const SpikeFrame& x_t, const WeightMatrix& w,
                    const LifConfig& cfg) {
    cfg.validate();
    if (x_t.batch != state.batch || x_t.neurons != w.n_in() || state.n_out != w.n_out() ||
        x_t.bits.size() != x_t.batch * x_t.neurons || state.v.size() != state.batch * state.n_out) {
        throw ShapeError("lif_step: inconsistent shapes");
    }
    for (double& x : state.v) x *= cfg.lambda;
    for (std::size_t b = 0; b < state.batch; ++b) {
        double* v_row = state.v.data() + b * state.n_out;
        for (std::size_t i = 0; i < x_t.neurons; ++i) {
            if (x_t.bits[b * x_t.neurons + i]) integrate_row(v_row, w, i);
        }
    }
    SpikeFrame s{state.batch, state.n_out, std::vector<std::uint8_t>(state.v.size())};
    fire_and_reset(state.v, s.bits, cfg);
    ++state.step;
    return s;
}

SpikeTensor lif_forward(const SpikeTensor& x, const WeightMatrix& w, const LifConfig& cfg) {
    cfg.validate();
    if (x.neurons() != w.n_in()) {
        throw ShapeError("lif_forward: input has " + std::to_string(x.neurons()) +
                         " neurons, weights expect " + std::to_string(w.n_in()));
    }
    const std::size_t batch = x.batch();
    const std::size_t steps = x.timesteps();
    const std::size_t n_out = w.n_out();

    // active[b * T + t] lists the input neurons spiking at (b, t).
    std::vector<std::vector<std::uint32_t>> active(batch * steps);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < x.neurons(); ++i) {
            auto words = x.train_words(b, i);
            for (std::size_t k = 0; k < words.size(); ++k) {
                for (std::uint64_t bits = words[k]; bits != 0; bits &= bits - 1) {
                    const std::size_t t = k * kWordBits + static_cast<std::size_t>(std::countr_zero(bits));
                    active[b * steps + t].push_back(static_cast<std::uint32_t>(i));
                }
            }
        }
    }

    SpikeTensor out(batch, n_out, steps);
    LayerState state(batch, n_out);
    std::vector<std::uint8_t> spikes(batch * n_out);
    for (std::size_t t = 0; t < steps; ++t) {
        for (double& v : state.v) v *= cfg.lambda;
        for (std::size_t b = 0; b < batch; ++b) {
            double* v_row = state.v.data() + b * n_out;
            for (std::uint32_t i : active[b * steps + t]) integrate_row(v_row, w, i);
        }
        fire_and_reset(state.v, spikes, cfg);
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t j = 0; j < n_out; ++j) {
                if (spikes[b * n_out + j]) out.set_spike(b, j, t);
            }
        }
        ++state.step;
    }
    return out;
}

}  // namespace sadp
