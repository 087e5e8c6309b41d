#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace sadp {

// Global numerical floor: normalization denominators, kappa denominators and
// the minimum synaptic magnitude after an update.
inline constexpr double kDefaultEps = 1e-8;

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t timesteps) noexcept {
    return (timesteps + kWordBits - 1) / kWordBits;
}

// Mask selecting the valid bits of the last word of a train of `timesteps`.
constexpr std::uint64_t tail_mask(std::size_t timesteps) noexcept {
    const std::size_t rem = timesteps % kWordBits;
    return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
}

/// Binary spike train over T timesteps, packed 64 per word, LSB = earliest
/// timestep. Bits at positions >= T are always zero.
class SpikeTrain {
public:
    SpikeTrain() = default;
    explicit SpikeTrain(std::size_t length);

    /// Throws ShapeError if the word count is wrong or a pad bit is set.
    static SpikeTrain from_words(std::size_t length, std::vector<std::uint64_t> words);

    std::size_t length() const noexcept { return length_; }
    std::span<const std::uint64_t> words() const noexcept { return words_; }
    bool operator[](std::size_t t) const noexcept {
        return (words_[t / kWordBits] >> (t % kWordBits)) & 1U;
    }
    std::size_t popcount() const noexcept;

    bool operator==(const SpikeTrain&) const = default;

private:
    friend SpikeTrain pack_train(std::span<const std::uint8_t>, std::size_t);

    std::size_t length_ = 0;
    std::vector<std::uint64_t> words_;
};

SpikeTrain pack_train(std::span<const std::uint8_t> dense, std::size_t length);
std::vector<std::uint8_t> unpack_train(const SpikeTrain& train);

/// B x N x T spike record. Trains are stored contiguously, row-major over
/// (b, n), each occupying words_for(T) words.
class SpikeTensor {
public:
    SpikeTensor() = default;
    SpikeTensor(std::size_t batch, std::size_t neurons, std::size_t timesteps);

    std::size_t batch() const noexcept { return batch_; }
    std::size_t neurons() const noexcept { return neurons_; }
    std::size_t timesteps() const noexcept { return timesteps_; }
    std::size_t words_per_train() const noexcept { return stride_; }

    std::span<const std::uint64_t> train_words(std::size_t b, std::size_t n) const noexcept {
        return {data_.data() + (b * neurons_ + n) * stride_, stride_};
    }
    SpikeTrain train(std::size_t b, std::size_t n) const;
    std::size_t popcount(std::size_t b, std::size_t n) const noexcept;

    bool spike(std::size_t b, std::size_t n, std::size_t t) const noexcept {
        return (data_[(b * neurons_ + n) * stride_ + t / kWordBits] >> (t % kWordBits)) & 1U;
    }
    void set_spike(std::size_t b, std::size_t n, std::size_t t) noexcept {
        data_[(b * neurons_ + n) * stride_ + t / kWordBits] |= std::uint64_t{1} << (t % kWordBits);
    }
    void set_train(std::size_t b, std::size_t n, const SpikeTrain& train);

    std::span<const std::uint64_t> raw() const noexcept { return data_; }
    std::span<std::uint64_t> raw_mut() noexcept { return data_; }

    /// Concatenates tensors with equal (N, T) along the batch axis.
    static SpikeTensor stack(std::span<const SpikeTensor> parts);

    bool operator==(const SpikeTensor&) const = default;

private:
    std::size_t batch_ = 0;
    std::size_t neurons_ = 0;
    std::size_t timesteps_ = 0;
    std::size_t stride_ = 0;
    std::vector<std::uint64_t> data_;
};

// Binary dump: "SADPSPK1", then B, N, T as u32 little-endian, then every
// train's words as u64 little-endian, row-major over (b, n).
void write_spike_tensor(std::ostream& out, const SpikeTensor& tensor);
SpikeTensor read_spike_tensor(std::istream& in);

/// N_in x N_out synaptic weights, row-major (pre-synaptic index major).
class WeightMatrix {
public:
    WeightMatrix() = default;
    WeightMatrix(std::size_t n_in, std::size_t n_out, double fill = 0.0);

    std::size_t n_in() const noexcept { return n_in_; }
    std::size_t n_out() const noexcept { return n_out_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return w_[i * n_out_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return w_[i * n_out_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept { return {w_.data() + i * n_out_, n_out_}; }
    std::span<const double> values() const noexcept { return w_; }
    std::span<double> values() noexcept { return w_; }

    double frobenius_norm() const noexcept;

    bool operator==(const WeightMatrix&) const = default;

private:
    std::size_t n_in_ = 0;
    std::size_t n_out_ = 0;
    std::vector<double> w_;
};

/// Every entry drawn independently from Uniform{-1, +1}.
WeightMatrix init_rademacher(std::size_t n_in, std::size_t n_out, std::uint64_t seed);
/// Every entry drawn from Uniform[lo, hi).
WeightMatrix init_uniform(std::size_t n_in, std::size_t n_out, double lo, double hi,
                          std::uint64_t seed);

}  // namespace sadp
