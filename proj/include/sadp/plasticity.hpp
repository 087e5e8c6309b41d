#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "sadp/agreement.hpp"
#include "sadp/core.hpp"
#include "sadp/kernels.hpp"

namespace sadp {

// ---- SADP ---------------------------------------------------------------------

/// Per-epoch learning-rate scale eta_t.
using EtaSchedule = std::function<double(std::size_t epoch)>;

inline EtaSchedule constant_eta(double eta = 1.0) {
    return [eta](std::size_t) { return eta; };
}

struct SadpConfig {
    PlasticityKernel kernel;
    EtaSchedule eta = constant_eta();
    double eps = kDefaultEps;

    double eta_at(std::size_t epoch) const;
};

/// clip(sign(v) max(|v|, eps), -1, 1) with sign(0) = +1.
inline double bound_weight(double v, double eps) noexcept {
    const double mag = (v < 0 ? -v : v) < eps ? eps : (v < 0 ? -v : v);
    const double signed_mag = v < 0 ? -mag : mag;
    return signed_mag > 1.0 ? 1.0 : (signed_mag < -1.0 ? -1.0 : signed_mag);
}

/// dw_ij = eta_t / B * sum_b L(kappa_ij^(b)); w_ij <- bound_weight(w_ij + dw_ij).
void sadp_update(WeightMatrix& w, const AgreementMatrix& agreement, const SadpConfig& cfg,
                 std::size_t epoch);

/// Same update computed straight from the spike tensors without
/// materializing the B x N_in x N_out agreement matrix.
void sadp_update_from_spikes(WeightMatrix& w, const SpikeTensor& pre, const SpikeTensor& post,
                             const SadpConfig& cfg, std::size_t epoch);

// ---- baselines ----------------------------------------------------------------

struct StdpBaselineConfig {
    double a_plus = 1e-4;
    double a_minus = 1e-4;
    double trace_tau = 5.0;  // timesteps
    double init_lo = 0.0;
    double init_hi = 0.3;
    double w_min = 0.0;
    double w_max = 1.0;

    void validate() const;
};

/// Trace-based pair STDP, applied online sample by sample in batch order.
/// Traces decay by exp(-1/trace_tau) per step and jump to 1 on a spike;
/// a post spike adds a_plus * x_pre, a pre spike subtracts a_minus * x_post.
void stdp_postpre_update(WeightMatrix& w, const SpikeTensor& pre, const SpikeTensor& post,
                         const StdpBaselineConfig& cfg);

struct HebbianConfig {
    double eta = 1e-3;
    double decay = 1e-2;
    double init_lo = 0.0;
    double init_hi = 0.3;
    double w_min = 0.0;
    double w_max = 1.0;

    void validate() const;
};

/// Per sample: w += eta * popcount(x_i & y_j) - decay * w, then clip.
void hebbian_update(WeightMatrix& w, const SpikeTensor& pre, const SpikeTensor& post,
                    const HebbianConfig& cfg);

/// Direct all-pairs STDP for one synapse: sum of K_STDP(t_post - t_pre).
/// Coincident pairs contribute nothing. When `pair_count` is given it is
/// incremented once per compared pair.
double stdp_pairwise_oracle(std::span<const double> pre_times, std::span<const double> post_times,
                            const StdpParams& p, std::uint64_t* pair_count = nullptr);

}  // namespace sadp
