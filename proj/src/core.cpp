#include "sadp/core.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"

namespace sadp {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Fit: return "fit";
        case ErrorKind::Data: return "data";
        case ErrorKind::Config: return "config";
        case ErrorKind::UnsupportedVersion: return "unsupported-version";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

// ---- SpikeTrain ------------------------------------------------------------

SpikeTrain::SpikeTrain(std::size_t length) : length_(length), words_(words_for(length), 0) {}

SpikeTrain SpikeTrain::from_words(std::size_t length, std::vector<std::uint64_t> words) {
    if (words.size() != words_for(length)) {
        throw ShapeError("spike train of length " + std::to_string(length) + " needs " +
                         std::to_string(words_for(length)) + " words, got " +
                         std::to_string(words.size()));
    }
    if (!words.empty() && (words.back() & ~tail_mask(length)) != 0) {
        throw ShapeError("spike train has bits set beyond its length");
    }
    SpikeTrain out;
    out.length_ = length;
    out.words_ = std::move(words);
    return out;
}

std::size_t SpikeTrain::popcount() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

SpikeTrain pack_train(std::span<const std::uint8_t> dense, std::size_t length) {
    if (dense.size() != length) {
        throw ShapeError("pack_train: dense train has " + std::to_string(dense.size()) +
                         " entries, expected " + std::to_string(length));
    }
    SpikeTrain out(length);
    for (std::size_t t = 0; t < length; ++t) {
        if (dense[t] > 1) throw DomainError("pack_train: entries must be 0 or 1");
        out.words_[t / kWordBits] |= std::uint64_t{dense[t]} << (t % kWordBits);
    }
    return out;
}

std::vector<std::uint8_t> unpack_train(const SpikeTrain& train) {
    std::vector<std::uint8_t> dense(train.length());
    for (std::size_t t = 0; t < dense.size(); ++t) dense[t] = train[t] ? 1 : 0;
    return dense;
}

// ---- SpikeTensor -----------------------------------------------------------

SpikeTensor::SpikeTensor(std::size_t batch, std::size_t neurons, std::size_t timesteps)
    : batch_(batch),
      neurons_(neurons),
      timesteps_(timesteps),
      stride_(words_for(timesteps)),
      data_(batch * neurons * words_for(timesteps), 0) {}

SpikeTrain SpikeTensor::train(std::size_t b, std::size_t n) const {
    auto w = train_words(b, n);
    return SpikeTrain::from_words(timesteps_, {w.begin(), w.end()});
}

std::size_t SpikeTensor::popcount(std::size_t b, std::size_t n) const noexcept {
    std::size_t c = 0;
    for (auto w : train_words(b, n)) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

void SpikeTensor::set_train(std::size_t b, std::size_t n, const SpikeTrain& train) {
    if (train.length() != timesteps_) {
        throw ShapeError("set_train: train length " + std::to_string(train.length()) +
                         " != tensor T " + std::to_string(timesteps_));
    }
    std::copy(train.words().begin(), train.words().end(),
              data_.begin() + static_cast<std::ptrdiff_t>((b * neurons_ + n) * stride_));
}

SpikeTensor SpikeTensor::stack(std::span<const SpikeTensor> parts) {
    if (parts.empty()) return {};
    const std::size_t n = parts.front().neurons_;
    const std::size_t t = parts.front().timesteps_;
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.neurons_ != n || p.timesteps_ != t) {
            throw ShapeError("SpikeTensor::stack: mismatched neuron count or timesteps");
        }
        total += p.batch_;
    }
    SpikeTensor out(total, n, t);
    auto dst = out.data_.begin();
    for (const auto& p : parts) dst = std::copy(p.data_.begin(), p.data_.end(), dst);
    return out;
}

namespace {

constexpr std::array<char, 8> kSpikeMagic = {'S', 'A', 'D', 'P', 'S', 'P', 'K', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFFU);
    out.write(b.data(), b.size());
}

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFFU);
    out.write(b.data(), b.size());
}

template <typename U>
U get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(U)> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) {
        throw ParseError(std::string("spike dump truncated while reading ") + what);
    }
    U v = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) v |= static_cast<U>(b[k]) << (8 * k);
    return v;
}

}  // namespace

void write_spike_tensor(std::ostream& out, const SpikeTensor& tensor) {
    out.write(kSpikeMagic.data(), kSpikeMagic.size());
    put_u32(out, static_cast<std::uint32_t>(tensor.batch()));
    put_u32(out, static_cast<std::uint32_t>(tensor.neurons()));
    put_u32(out, static_cast<std::uint32_t>(tensor.timesteps()));
    for (auto w : tensor.raw()) put_u64(out, w);
    if (!out) throw IoError("failed writing spike dump");
}

SpikeTensor read_spike_tensor(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kSpikeMagic) {
        throw ParseError("spike dump: bad magic (expected SADPSPK1)");
    }
    const auto b = get_le<std::uint32_t>(in, "B");
    const auto n = get_le<std::uint32_t>(in, "N");
    const auto t = get_le<std::uint32_t>(in, "T");
    SpikeTensor out(b, n, t);
    const std::uint64_t mask = tail_mask(t);
    auto raw = out.raw_mut();
    for (std::size_t k = 0; k < raw.size(); ++k) {
        raw[k] = get_le<std::uint64_t>(in, "packed words");
        const bool last_of_train = (k + 1) % out.words_per_train() == 0;
        if (last_of_train && (raw[k] & ~mask) != 0) {
            throw ParseError("spike dump: pad bit set in word " + std::to_string(k));
        }
    }
    return out;
}

// ---- WeightMatrix ----------------------------------------------------------

WeightMatrix::WeightMatrix(std::size_t n_in, std::size_t n_out, double fill)
    : n_in_(n_in), n_out_(n_out), w_(n_in * n_out, fill) {}

double WeightMatrix::frobenius_norm() const noexcept {
    double s = 0.0;
    for (double v : w_) s += v * v;
    return std::sqrt(s);
}

WeightMatrix init_rademacher(std::size_t n_in, std::size_t n_out, std::uint64_t seed) {
    if (n_in == 0 || n_out == 0) throw ShapeError("init_rademacher: dimensions must be >= 1");
    WeightMatrix w(n_in, n_out);
    std::mt19937_64 gen(seed);
    std::uint64_t bits = 0;
    int left = 0;
    for (double& v : w.values()) {
        if (left == 0) {
            bits = gen();
            left = 64;
        }
        v = (bits & 1U) ? 1.0 : -1.0;
        bits >>= 1;
        --left;
    }
    return w;
}

WeightMatrix init_uniform(std::size_t n_in, std::size_t n_out, double lo, double hi,
                          std::uint64_t seed) {
    if (n_in == 0 || n_out == 0) throw ShapeError("init_uniform: dimensions must be >= 1");
    if (!(lo <= hi)) throw DomainError("init_uniform: lo must not exceed hi");
    WeightMatrix w(n_in, n_out);
    std::mt19937_64 gen(seed);
    for (double& v : w.values()) v = lo + (hi - lo) * to_unit(gen());
    return w;
}

}  // namespace sadp
