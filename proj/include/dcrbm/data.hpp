#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"

namespace dcrbm {

/// Binary samples stored column-wise: patterns is m x N.
struct BinaryDataset {
    std::string name;
    Matrix patterns;

    std::size_t dim() const { return static_cast<std::size_t>(patterns.rows()); }
    std::size_t size() const { return static_cast<std::size_t>(patterns.cols()); }

    /// Throws Error if any entry is not exactly 0 or 1.
    void validate() const;
};

/// The deduplicated support of D x D Bars & Stripes, flattened row-major.
BinaryDataset gen_bars_stripes(int side);

/// The N cyclic shifts of a bar of `bar` consecutive ones.
BinaryDataset gen_shifting_bar(int length, int bar);

/// Samples each pixel once as Bernoulli(intensity). `grayscale` is m x N
/// with entries in [0, 1].
BinaryDataset binarize_statistical(const Matrix& grayscale, RngStream& rng, std::string name = "binarized");

/// Handwriting-like 28 x 28 grayscale images (m = 784, column per image):
/// ten stroke templates under random affine jitter, rendered with soft
/// anti-aliased pen strokes. Used where real digit scans are unavailable.
Matrix gen_stroke_images(int count, RngStream& rng);

enum class MatrixFormat { Idx, Csv, Json };
MatrixFormat parse_matrix_format(const std::string& text);
std::string to_string(MatrixFormat format);

/// Reads a row-per-sample file into a column-per-sample matrix.
/// IDX: unsigned-byte tensors (magic 0x00000801 or 0x00000803); values are
/// scaled by 1/255 unless every byte is 0 or 1. CSV: comma-separated
/// numbers. JSON: array of arrays. `declared_dim` (0 = infer) fixes the row
/// width and is used for empty inputs.
Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format, std::size_t declared_dim = 0);

/// load_matrix plus a {0,1} check.
BinaryDataset load_binary_dataset(const std::filesystem::path& path, MatrixFormat format,
                                  std::size_t declared_dim = 0);

/// Writes samples (columns of `data`) one per row. IDX output stores
/// values as bytes: 0/1 data verbatim, other data as round(255 x value).
void write_matrix(const std::filesystem::path& path, const Matrix& data, MatrixFormat format);

/// Writes `<path>.manifest.json` describing a dataset file.
void write_manifest(const std::filesystem::path& data_path, const BinaryDataset& dataset, MatrixFormat format);

/// Permutation of 0..count-1 fixed by (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t count, std::uint64_t seed, std::uint64_t epoch);

/// Shuffled mini-batches for one epoch. The final short batch is kept;
/// batch_size >= N (or 0) yields one full batch.
std::vector<Matrix> minibatches(const Matrix& data, std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch);

} // namespace dcrbm
