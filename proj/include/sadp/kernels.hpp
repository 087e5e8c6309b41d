#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "sadp/core.hpp"
#include "sadp/spline.hpp"

namespace sadp {

// ---- analytical kernels -----------------------------------------------------

struct StdpParams {
    double a_plus = 0.01;
    double a_minus = 0.01;
    double tau_plus = 0.25;  // in agreement units for the SADP remap
    double tau_minus = 0.25;

    void validate() const;
};

/// eta_pot * kappa for kappa > 0, eta_dep * kappa for kappa < 0.
double linear_kernel(double kappa, double eta_pot, double eta_dep);

/// Classical exponential STDP window; undefined (DomainError) at dt == 0.
double stdp_kernel(double dt, const StdpParams& p);

enum class IdealForm {
    // Potentiation grows toward delta = 1, depression toward delta = -1:
    //   A+ exp(-(1 - d)/tau+) for d > 0,  -A- exp(-(1 + d)/tau-) for d < 0.
    Mirrored,
    // K_STDP(d - 1) for d > 0 and K_STDP(d + 1) for d < 0, evaluated
    // literally. Its branches carry the opposite sign to Mirrored.
    Shifted,
};

/// Agreement-domain kernel obtained by swapping the STDP half-windows.
/// Returns 0 at delta == 0; DomainError for |delta| > 1.
double ideal_sadp_kernel(double delta, const StdpParams& p, IdealForm form = IdealForm::Mirrored);

// ---- device-derived kernels -------------------------------------------------

enum class PulsePhase { Potentiation, Depression };

struct DeviceSample {
    std::int64_t pulse_index = 0;
    double conductance = 0.0;  // siemens
    PulsePhase phase = PulsePhase::Potentiation;
};

struct DeviceTrace {
    std::vector<DeviceSample> samples;

    std::vector<double> conductances(PulsePhase phase) const;
    /// Throws DataError on non-positive conductance or non-increasing
    /// pulse indices within a phase.
    void validate() const;
};

// CSV with header `pulse_index,conductance_S,phase`, phase in {P, D}.
DeviceTrace read_device_csv(std::istream& in);
void write_device_csv(std::ostream& out, const DeviceTrace& trace);

/// Saturating P/D response standing in for a measured memtransistor:
///   G_P(k) = g_min + (g_max - g_min) (1 - e^{-k/tau}) / (1 - e^{-N/tau})
/// and the mirror image for depression, with multiplicative read noise.
struct SyntheticDeviceParams {
    std::size_t pulses = 1000;
    double g_min = 1.0e-6;
    double g_max = 4.0e-6;
    double tau = 350.0;
    double read_noise = 0.002;
    std::uint64_t seed = 7;
};
DeviceTrace synthetic_device_trace(const SyntheticDeviceParams& params);

/// (G[t+1] - G[t]) / (G[t] + eps) for consecutive samples.
std::vector<double> normalized_updates(const std::vector<double>& conductance, double eps);

struct DeviceUpdates {
    std::vector<double> delta_pot;  // ascending grid on (0, 1]
    std::vector<double> dg_pot;
    std::vector<double> delta_dep;  // ascending grid on [-1, 0)
    std::vector<double> dg_dep;
};

/// Normalized updates per phase, sorted ascending and laid on evenly spaced
/// agreement grids: the largest potentiation lands at delta = 1 and the most
/// negative depression at delta = -1. Needs >= 5 samples per phase.
DeviceUpdates extract_updates(const DeviceTrace& trace, double eps = kDefaultEps);

// ---- kernel handle -----------------------------------------------------------

struct LinearKernel {
    double eta_pot = 0.01;
    double eta_dep = 0.01;
};

struct IdealKernel {
    StdpParams params;
    IdealForm form = IdealForm::Mirrored;
};

struct SplineKernel {
    SmoothingSpline pot;  // f+ on (0, 1]
    SmoothingSpline dep;  // f- on [-1, 0)
    double s_pot = 0.1;
    double s_dep = 0.01;
};

SplineKernel fit_spline_kernel(const DeviceUpdates& updates, double s_pot = 0.1,
                               double s_dep = 0.01, const SplineFitOptions& options = {});

enum class KernelKind { Linear, Ideal, Spline };
const char* to_string(KernelKind kind) noexcept;

/// Bounded learning function L: [-1, 1] -> [-l_max, l_max] with L(0) = 0.
class PlasticityKernel {
public:
    using Impl = std::variant<LinearKernel, IdealKernel, SplineKernel>;

    PlasticityKernel() : impl_(LinearKernel{}) {}
    explicit PlasticityKernel(Impl impl, double l_max = 1.0);

    KernelKind kind() const noexcept { return static_cast<KernelKind>(impl_.index()); }
    const Impl& impl() const noexcept { return impl_; }
    double l_max() const noexcept { return l_max_; }

    double operator()(double kappa) const;

private:
    Impl impl_;
    double l_max_ = 1.0;
};

double eval_kernel(const PlasticityKernel& kernel, double kappa);

// Kernel files are JSON: version, kind, l_max, params and, for splines,
// knots / coefficients / s / fit_residual per branch.
inline constexpr int kKernelFileVersion = 1;
void export_kernel(std::ostream& out, const PlasticityKernel& kernel);
PlasticityKernel import_kernel(std::istream& in);
void save_kernel(const std::string& path, const PlasticityKernel& kernel);
PlasticityKernel load_kernel(const std::string& path);

}  // namespace sadp
