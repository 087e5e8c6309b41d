#include "sadp/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include <openssl/evp.h>
#include <zlib.h>

#include <json.hpp>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"

namespace sadp {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

// gzread passes uncompressed files through unchanged.
std::vector<std::uint8_t> read_all(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open '" + path + "'");
    std::unique_ptr<gzFile_s, int (*)(gzFile)> guard(f, gzclose);
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> buf{};
    for (;;) {
        const int got = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
        if (got < 0) throw IoError("read error in '" + path + "'");
        if (got == 0) break;
        out.insert(out.end(), buf.begin(), buf.begin() + got);
    }
    return out;
}

std::uint32_t be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::string& path) {
    if (offset + 4 > bytes.size()) {
        throw ParseError(path + ": truncated header at offset " + std::to_string(offset));
    }
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b = {static_cast<char>(v >> 24), static_cast<char>((v >> 16) & 0xFF),
                                   static_cast<char>((v >> 8) & 0xFF), static_cast<char>(v & 0xFF)};
    out.write(b.data(), 4);
}

}  // namespace

ImageDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_all(images_path);
    const auto lab = read_all(labels_path);

    if (be32(img, 0, images_path) != kImageMagic) {
        throw ParseError(images_path + ": bad image magic at offset 0");
    }
    if (be32(lab, 0, labels_path) != kLabelMagic) {
        throw ParseError(labels_path + ": bad label magic at offset 0");
    }
    const std::uint32_t count = be32(img, 4, images_path);
    const std::uint32_t rows = be32(img, 8, images_path);
    const std::uint32_t cols = be32(img, 12, images_path);
    const std::uint32_t label_count = be32(lab, 4, labels_path);
    if (count != label_count) {
        throw ParseError(labels_path + ": label count " + std::to_string(label_count) +
                         " != image count " + std::to_string(count) + " (offset 4)");
    }
    const std::size_t pixels = std::size_t{rows} * cols;
    const std::size_t need_img = 16 + std::size_t{count} * pixels;
    if (img.size() < need_img) {
        throw ParseError(images_path + ": truncated at offset " + std::to_string(img.size()) +
                         ", expected " + std::to_string(need_img) + " bytes");
    }
    if (lab.size() < 8 + std::size_t{count}) {
        throw ParseError(labels_path + ": truncated at offset " + std::to_string(lab.size()) +
                         ", expected " + std::to_string(8 + std::size_t{count}) + " bytes");
    }

    ImageDataset ds;
    ds.rows = rows;
    ds.cols = cols;
    ds.images.resize(std::size_t{count} * pixels);
    for (std::size_t k = 0; k < ds.images.size(); ++k) ds.images[k] = img[16 + k] / 255.0;
    ds.labels.resize(count);
    for (std::size_t k = 0; k < count; ++k) ds.labels[k] = lab[8 + k];
    return ds;
}

void write_idx(const ImageDataset& ds, const std::string& images_path,
               const std::string& labels_path) {
    std::ofstream img(images_path, std::ios::binary);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!img || !lab) throw IoError("write_idx: cannot open output files");
    put_be32(img, kImageMagic);
    put_be32(img, static_cast<std::uint32_t>(ds.size()));
    put_be32(img, static_cast<std::uint32_t>(ds.rows));
    put_be32(img, static_cast<std::uint32_t>(ds.cols));
    for (double v : ds.images) {
        img.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
    put_be32(lab, kLabelMagic);
    put_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (int l : ds.labels) lab.put(static_cast<char>(static_cast<std::uint8_t>(l)));
    if (!img || !lab) throw IoError("write_idx: write failed");
}

ImageDataset sample(const ImageDataset& ds, std::size_t n, std::uint64_t seed, bool stratified,
                    std::size_t num_classes) {
    if (n > ds.size()) {
        throw DomainError("subset: requested " + std::to_string(n) + " of " +
                          std::to_string(ds.size()) + " samples");
    }
    std::vector<std::size_t> picked;
    if (!stratified) {
        picked.resize(ds.size());
        std::iota(picked.begin(), picked.end(), 0);
        if (n < ds.size()) {
            std::mt19937_64 gen(seed);
            std::shuffle(picked.begin(), picked.end(), gen);
            picked.resize(n);
            std::sort(picked.begin(), picked.end());
        }
    } else {
        std::vector<std::vector<std::size_t>> by_class(num_classes);
        for (std::size_t k = 0; k < ds.size(); ++k) {
            const auto c = static_cast<std::size_t>(ds.labels[k]);
            if (c >= num_classes) throw DomainError("subset: label outside class range");
            by_class[c].push_back(k);
        }
        for (std::size_t c = 0; c < num_classes; ++c) {
            const std::size_t want = n / num_classes + (c < n % num_classes ? 1 : 0);
            auto& pool = by_class[c];
            if (want > pool.size()) {
                throw DomainError("subset: class " + std::to_string(c) + " has " +
                                  std::to_string(pool.size()) + " samples, need " +
                                  std::to_string(want));
            }
            std::mt19937_64 gen(derive_seed(seed, c));
            std::shuffle(pool.begin(), pool.end(), gen);
            picked.insert(picked.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want));
        }
        std::sort(picked.begin(), picked.end());
    }
    ImageDataset out;
    out.name = ds.name;
    out.split = ds.split;
    out.rows = ds.rows;
    out.cols = ds.cols;
    out.images.reserve(picked.size() * ds.pixels());
    for (std::size_t k : picked) {
        auto img = ds.image(k);
        out.images.insert(out.images.end(), img.begin(), img.end());
        out.labels.push_back(ds.labels[k]);
    }
    return out;
}

std::pair<ImageDataset, ImageDataset> subset(const ImageDataset& train, const ImageDataset& test,
                                             std::size_t n_train, std::size_t n_test,
                                             std::uint64_t seed, bool stratified) {
    return {sample(train, n_train, derive_seed(seed, 1), stratified),
            sample(test, n_test, derive_seed(seed, 2), stratified)};
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw IoError("sha256: digest init failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::ostringstream hex;
    hex << std::hex;
    for (unsigned k = 0; k < len; ++k) {
        hex.width(2);
        hex.fill('0');
        hex << static_cast<int>(md[k]);
    }
    return hex.str();
}

DatasetFiles read_manifest(const std::string& manifest_path, bool verify) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest '" + manifest_path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest: " + std::string(e.what()));
    }
    const auto dir = std::filesystem::path(manifest_path).parent_path();
    DatasetFiles files;
    try {
        files.name = j.at("name").get<std::string>();
        auto resolve = [&](const char* key) {
            const auto& entry = j.at("files").at(key);
            const auto path = (dir / entry.at("path").get<std::string>()).string();
            if (verify) {
                const auto expected = entry.at("sha256").get<std::string>();
                const auto actual = sha256_file(path);
                if (actual != expected) {
                    throw DataError("manifest: sha256 mismatch for '" + path + "' (expected " +
                                    expected + ", got " + actual + ")");
                }
            }
            return path;
        };
        files.train_images = resolve("train_images");
        files.train_labels = resolve("train_labels");
        files.test_images = resolve("test_images");
        files.test_labels = resolve("test_labels");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest: " + std::string(e.what()));
    }
    return files;
}

}  // namespace sadp
