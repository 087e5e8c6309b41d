#include "sadp/encoding.hpp"

#include <cmath>
#include <string>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"

namespace sadp {

Coding parse_coding(const std::string& name) {
    if (name == "rate") return Coding::Rate;
    if (name == "ttfs") return Coding::Ttfs;
    throw ConfigError("unknown coding '" + name + "' (expected rate|ttfs)");
}

const char* to_string(Coding coding) noexcept {
    return coding == Coding::Rate ? "rate" : "ttfs";
}

void EncoderConfig::validate() const {
    if (timesteps < 1) throw ConfigError("encoder: T must be >= 1");
    if (!(ttfs_floor >= 0.0 && ttfs_floor < 1.0)) {
        throw ConfigError("encoder: ttfs_floor must lie in [0, 1)");
    }
}

namespace {

void check_intensities(std::span<const double> image) {
    for (std::size_t n = 0; n < image.size(); ++n) {
        if (!(image[n] >= 0.0 && image[n] <= 1.0)) {
            throw DomainError("encoder: intensity at pixel " + std::to_string(n) +
                              " outside [0, 1]");
        }
    }
}

void encode_rate_into(SpikeTensor& out, std::size_t b, std::span<const double> image,
                      const EncoderConfig& cfg, std::uint64_t sample_index) {
    for (std::size_t n = 0; n < image.size(); ++n) {
        const double p = image[n];
        if (p <= 0.0) continue;
        for (std::size_t t = 0; t < cfg.timesteps; ++t) {
            const double u = to_unit(hash_key({cfg.seed, sample_index, n, t}));
            if (u < p) out.set_spike(b, n, t);
        }
    }
}

void encode_ttfs_into(SpikeTensor& out, std::size_t b, std::span<const double> image,
                      const EncoderConfig& cfg) {
    const double span_t = static_cast<double>(cfg.timesteps - 1);
    for (std::size_t n = 0; n < image.size(); ++n) {
        const double p = image[n];
        if (!(p > cfg.ttfs_floor)) continue;
        const auto t = static_cast<std::size_t>(std::floor((1.0 - p) * span_t));
        out.set_spike(b, n, t);
    }
}

}  // namespace

SpikeTensor encode_rate(std::span<const double> image, const EncoderConfig& cfg,
                        std::uint64_t sample_index) {
    cfg.validate();
    check_intensities(image);
    SpikeTensor out(1, image.size(), cfg.timesteps);
    encode_rate_into(out, 0, image, cfg, sample_index);
    return out;
}

SpikeTensor encode_ttfs(std::span<const double> image, const EncoderConfig& cfg) {
    cfg.validate();
    check_intensities(image);
    SpikeTensor out(1, image.size(), cfg.timesteps);
    encode_ttfs_into(out, 0, image, cfg);
    return out;
}

SpikeTensor encode(std::span<const double> image, const EncoderConfig& cfg,
                   std::uint64_t sample_index) {
    return cfg.scheme == Coding::Rate ? encode_rate(image, cfg, sample_index)
                                      : encode_ttfs(image, cfg);
}

SpikeTensor encode_labels(std::size_t label, std::size_t num_classes, const EncoderConfig& cfg) {
    cfg.validate();
    if (label >= num_classes) {
        throw DomainError("encode_labels: label " + std::to_string(label) + " >= class count " +
                          std::to_string(num_classes));
    }
    SpikeTensor out(1, num_classes, cfg.timesteps);
    if (cfg.scheme == Coding::Rate) {
        for (std::size_t t = 0; t < cfg.timesteps; ++t) out.set_spike(0, label, t);
    } else {
        out.set_spike(0, label, 0);
    }
    return out;
}

SpikeTensor encode_batch(std::span<const double> images, std::size_t pixels,
                         std::span<const std::size_t> rows, const EncoderConfig& cfg,
                         std::span<const std::uint64_t> sample_indices) {
    cfg.validate();
    if (rows.size() != sample_indices.size()) {
        throw ShapeError("encode_batch: rows and sample indices differ in length");
    }
    SpikeTensor out(rows.size(), pixels, cfg.timesteps);
    for (std::size_t b = 0; b < rows.size(); ++b) {
        if ((rows[b] + 1) * pixels > images.size()) {
            throw ShapeError("encode_batch: row index out of range");
        }
        auto image = images.subspan(rows[b] * pixels, pixels);
        check_intensities(image);
        if (cfg.scheme == Coding::Rate) {
            encode_rate_into(out, b, image, cfg, sample_indices[b]);
        } else {
            encode_ttfs_into(out, b, image, cfg);
        }
    }
    return out;
}

}  // namespace sadp
