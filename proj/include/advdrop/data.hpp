#ifndef ADVDROP_DATA_HPP
#define ADVDROP_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advdrop/tensor.hpp"

namespace advdrop {

struct Dataset {
  Tensor images;            // [N, rows*cols], values in [0, 1]
  std::vector<int> labels;  // length N, values 0..9
  std::size_t rows = 28, cols = 28;

  std::size_t size() const { return labels.size(); }
};

// IDX pair loader (big-endian headers, image magic 2051, label magic 2049).
// Pixels come back scaled to [0, 1]; item counts of the two files must agree.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Inverse of the loader; pixels are quantized back to bytes.
void write_idx(const Dataset& d, const std::string& images_path, const std::string& labels_path);

// Deterministic 28x28 digit images: stroke glyphs under random rotation,
// scale, shear, shift and pixel noise. Values are byte-quantized so the
// in-memory dataset equals its write_idx/load_mnist_idx round trip.
Dataset synth_digits(std::size_t count, std::uint64_t seed);

Tensor one_hot(const std::vector<int>& labels, std::size_t classes);

}  // namespace advdrop

#endif
