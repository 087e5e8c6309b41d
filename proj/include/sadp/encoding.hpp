#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "sadp/core.hpp"

namespace sadp {

enum class Coding { Rate, Ttfs };

Coding parse_coding(const std::string& name);
const char* to_string(Coding coding) noexcept;

struct EncoderConfig {
    Coding scheme = Coding::Rate;
    std::size_t timesteps = 10;
    std::uint64_t seed = 0;
    // Intensities at or below this emit no TTFS spike.
    double ttfs_floor = 0.0;

    void validate() const;
};

// Every encoder returns a 1 x N x T slice. `sample_index` keys the random
// stream so a sample encodes identically regardless of batch position.
SpikeTensor encode_rate(std::span<const double> image, const EncoderConfig& cfg,
                        std::uint64_t sample_index);

// One spike at floor((1 - p)(T - 1)) when p > ttfs_floor, none otherwise.
SpikeTensor encode_ttfs(std::span<const double> image, const EncoderConfig& cfg);

// Dispatches on cfg.scheme.
SpikeTensor encode(std::span<const double> image, const EncoderConfig& cfg,
                   std::uint64_t sample_index);

// One-hot label trains: all ones (rate) or a single t = 0 spike (ttfs) on
// the label neuron.
SpikeTensor encode_labels(std::size_t label, std::size_t num_classes, const EncoderConfig& cfg);

// Encodes the selected rows of a row-major image matrix into a
// rows.size() x N x T tensor; row b draws from stream sample_indices[b].
SpikeTensor encode_batch(std::span<const double> images, std::size_t pixels,
                         std::span<const std::size_t> rows, const EncoderConfig& cfg,
                         std::span<const std::uint64_t> sample_indices);

}  // namespace sadp
