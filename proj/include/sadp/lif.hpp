#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sadp/core.hpp"

namespace sadp {

struct LifConfig {
    double lambda = 0.9;  // membrane decay, [0, 1); 0 disables leakage
    double theta = 0.5;   // threshold on the normalized potential, (0, 1)
    double eps = kDefaultEps;

    void validate() const;
};

/// Membrane potentials of a B x N_out layer, row-major over (b, j).
struct LayerState {
    LayerState() = default;
    LayerState(std::size_t batch, std::size_t n_out)
        : batch(batch), n_out(n_out), v(batch * n_out, 0.0) {}

    std::size_t batch = 0;
    std::size_t n_out = 0;
    std::vector<double> v;
    std::size_t step = 0;
};

/// B x N binary frame (one timestep), row-major over (b, n).
struct SpikeFrame {
    std::size_t batch = 0;
    std::size_t neurons = 0;
    std::vector<std::uint8_t> bits;
};

SpikeFrame frame_at(const SpikeTensor& x, std::size_t t);

// One timestep of the layer:
//   V <- lambda V + X_t W
//   V~ = (V - min V) / (max V - min V + eps), min/max over the whole B x N_out slice
//   S = [V~ >= theta];  V <- V (1 - S)
// Advances state.step and returns S_t.
SpikeFrame lif_step(LayerState& state, const SpikeFrame& x_t, const WeightMatrix& w,
                    const LifConfig& cfg);

// Runs lif_step for t = 0..T-1 from V = 0 and records the output trains.
SpikeTensor lif_forward(const SpikeTensor& x, const WeightMatrix& w, const LifConfig& cfg);

}  // namespace sadp
