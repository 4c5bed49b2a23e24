#pragma once

#include <fnorm/tensor.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fnorm {

/// Labeled examples: one row of `x` per label.
struct Dataset {
  Tensor x;
  std::vector<int> labels;
  int classes = 0;

  Index size() const { return x.rows(); }
  Index dim() const { return x.cols(); }
  Dataset subset(std::span<const Index> rows) const;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// IDX image/label pair: big-endian magic, big-endian u32 dimensions, raw
/// unsigned bytes. Pixels are scaled to [0, 1] by 1/255.
Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Isotropic Gaussian clusters: class centres ~ N(0, spread^2 I), points
/// ~ N(centre, noise^2 I); rows ordered class by class.
struct BlobSpec {
  int classes = 17;
  int per_class = 80;
  int dim = 10;
  double centre_spread = 1.0;
  double noise = 1.0;
};

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed);

/// Fisher-Yates permutation of 0..n-1.
std::vector<Index> permutation(Index n, Rng& rng);

}  // namespace fnorm
