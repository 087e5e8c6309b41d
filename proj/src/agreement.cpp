#include "sadp/agreement.hpp"

#include <bit>
#include <string>

#include "sadp/error.hpp"

namespace sadp {

namespace {

std::size_t popcount_words(std::span<const std::uint64_t> w) noexcept {
    std::size_t c = 0;
    for (auto v : w) c += static_cast<std::size_t>(std::popcount(v));
    return c;
}

std::size_t xor_popcount(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y) noexcept {
    std::size_t c = 0;
    for (std::size_t k = 0; k < x.size(); ++k) c += static_cast<std::size_t>(std::popcount(x[k] ^ y[k]));
    return c;
}

}  // namespace

double kappa_words(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y,
                   std::size_t length, double eps) noexcept {
    return kappa_from_counts(length, popcount_words(x), popcount_words(y), xor_popcount(x, y), eps);
}

double kappa(const SpikeTrain& x, const SpikeTrain& y, double eps) {
    if (x.length() != y.length()) {
        throw ShapeError("kappa: train lengths differ (" + std::to_string(x.length()) + " vs " +
                         std::to_string(y.length()) + ")");
    }
    if (x.length() == 0) throw ShapeError("kappa: trains must have T >= 1");
    return kappa_words(x.words(), y.words(), x.length(), eps);
}

void check_agreement_shapes(const SpikeTensor& pre, const SpikeTensor& post) {
    if (pre.batch() != post.batch() || pre.timesteps() != post.timesteps()) {
        throw ShapeError("agreement: pre (B=" + std::to_string(pre.batch()) +
                         ", T=" + std::to_string(pre.timesteps()) + ") and post (B=" +
                         std::to_string(post.batch()) + ", T=" + std::to_string(post.timesteps()) +
                         ") disagree");
    }
    if (pre.timesteps() == 0) throw ShapeError("agreement: T must be >= 1");
}

AgreementMatrix kappa_batch(const SpikeTensor& pre, const SpikeTensor& post, double eps) {
    check_agreement_shapes(pre, post);
    const std::size_t n_in = pre.neurons();
    const std::size_t n_out = post.neurons();
    const std::size_t len = pre.timesteps();
    AgreementMatrix out(pre.batch(), n_in, n_out);

    std::vector<std::size_t> post_ones(n_out);
    for (std::size_t b = 0; b < pre.batch(); ++b) {
        for (std::size_t j = 0; j < n_out; ++j) post_ones[j] = post.popcount(b, j);
        for (std::size_t i = 0; i < n_in; ++i) {
            auto x = pre.train_words(b, i);
            const std::size_t pre_ones = popcount_words(x);
            double* row = &out(b, i, 0);
            for (std::size_t j = 0; j < n_out; ++j) {
                row[j] = kappa_from_counts(len, pre_ones, post_ones[j],
                                           xor_popcount(x, post.train_words(b, j)), eps);
            }
        }
    }
    return out;
}

}  // namespace sadp
