#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sadp {

/// Images flattened row-major, intensities in [0, 1].
struct ImageDataset {
    std::string name;   // mnist | fmnist
    std::string split;  // train | test
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> images;  // size() x pixels()
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t pixels() const noexcept { return rows * cols; }
    std::span<const double> image(std::size_t k) const noexcept {
        return {images.data() + k * pixels(), pixels()};
    }
};

/// Reads big-endian IDX image (magic 0x00000803) and label (0x00000801)
/// files; gzip-compressed files are accepted transparently. Pixels are
/// divided by 255.
ImageDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes the dataset back as uncompressed IDX (pixel = round(255 v)).
void write_idx(const ImageDataset& ds, const std::string& images_path,
               const std::string& labels_path);

/// Deterministic sample of n rows. Stratified sampling draws n / C per
/// class (remainder to the lowest class indices); n == size() without
/// stratification keeps the original order.
ImageDataset sample(const ImageDataset& ds, std::size_t n, std::uint64_t seed, bool stratified,
                    std::size_t num_classes = 10);

/// Train and test samples drawn with independent sub-streams of `seed`.
std::pair<ImageDataset, ImageDataset> subset(const ImageDataset& train, const ImageDataset& test,
                                             std::size_t n_train, std::size_t n_test,
                                             std::uint64_t seed, bool stratified);

std::string sha256_file(const std::string& path);

/// Paths resolved against the manifest's directory.
struct DatasetFiles {
    std::string name;
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
};

/// Reads a manifest.json (name, files.{train,test}_{images,labels}.{path,sha256}).
/// With `verify`, every file's SHA-256 must match or DataError is thrown.
DatasetFiles read_manifest(const std::string& manifest_path, bool verify);

}  // namespace sadp
