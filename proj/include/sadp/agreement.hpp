#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sadp/core.hpp"

namespace sadp {

/// Cohen's kappa from the sufficient statistics of two binary trains:
/// their length, the ones in each, and the positions where they differ.
///   p0 = 1 - disagreements / T
///   pe = mx my + (1 - mx)(1 - my),  mx = ones_x / T, my = ones_y / T
///   kappa = (p0 - pe) / max(1 - pe, eps)
inline double kappa_from_counts(std::size_t length, std::size_t ones_x, std::size_t ones_y,
                                std::size_t disagreements, double eps = kDefaultEps) noexcept {
    const double t = static_cast<double>(length);
    const double mx = static_cast<double>(ones_x) / t;
    const double my = static_cast<double>(ones_y) / t;
    const double p0 = (t - static_cast<double>(disagreements)) / t;
    const double pe = mx * my + (1.0 - mx) * (1.0 - my);
    const double denom = 1.0 - pe > eps ? 1.0 - pe : eps;
    const double k = (p0 - pe) / denom;
    return k > 1.0 ? 1.0 : (k < -1.0 ? -1.0 : k);
}

/// Bitwise kappa over packed words (pad bits must be zero in both).
double kappa_words(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y,
                   std::size_t length, double eps = kDefaultEps) noexcept;

double kappa(const SpikeTrain& x, const SpikeTrain& y, double eps = kDefaultEps);

/// kappa for every (sample, pre, post) triple, row-major over (b, i, j).
struct AgreementMatrix {
    AgreementMatrix() = default;
    AgreementMatrix(std::size_t batch, std::size_t n_in, std::size_t n_out)
        : batch(batch), n_in(n_in), n_out(n_out), values(batch * n_in * n_out, 0.0) {}

    double& operator()(std::size_t b, std::size_t i, std::size_t j) noexcept {
        return values[(b * n_in + i) * n_out + j];
    }
    double operator()(std::size_t b, std::size_t i, std::size_t j) const noexcept {
        return values[(b * n_in + i) * n_out + j];
    }

    std::size_t batch = 0;
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::vector<double> values;
};

void check_agreement_shapes(const SpikeTensor& pre, const SpikeTensor& post);

AgreementMatrix kappa_batch(const SpikeTensor& pre, const SpikeTensor& post,
                            double eps = kDefaultEps);

}  // namespace sadp
