#include <fnorm/dataset.hpp>

#include <array>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

namespace fnorm {

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.classes = classes;
  out.x.resize(static_cast<Index>(rows.size()), x.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Index>(i)) = x.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& what) {
  if (bytes.size() < offset + 4) throw FormatError(what + ": truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto image_bytes = read_file(images);
  const auto label_bytes = read_file(labels);
  const std::string iname = images.filename().string();
  const std::string lname = labels.filename().string();

  if (read_be32(image_bytes, 0, iname) != kIdxImageMagic) throw FormatError(iname + ": bad magic");
  if (read_be32(label_bytes, 0, lname) != kIdxLabelMagic) throw FormatError(lname + ": bad magic");
  const std::uint64_t n = read_be32(image_bytes, 4, iname);
  const std::uint64_t rows = read_be32(image_bytes, 8, iname);
  const std::uint64_t cols = read_be32(image_bytes, 12, iname);
  const std::uint64_t n_labels = read_be32(label_bytes, 4, lname);
  if (n != n_labels) {
    throw FormatError("image count " + std::to_string(n) + " != label count " + std::to_string(n_labels));
  }
  const std::uint64_t pixels = rows * cols;
  if (image_bytes.size() < 16 + n * pixels) throw FormatError(iname + ": truncated pixel data");
  if (label_bytes.size() < 8 + n) throw FormatError(lname + ": truncated label data");

  Dataset data;
  data.x.resize(static_cast<Index>(n), static_cast<Index>(pixels));
  data.labels.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < pixels; ++j) {
      data.x(static_cast<Index>(i), static_cast<Index>(j)) = image_bytes[16 + i * pixels + j] / 255.0;
    }
    const int label = label_bytes[8 + i];
    if (label > 9) throw FormatError(lname + ": label out of range");
    data.labels[i] = label;
  }
  data.classes = 10;
  return data;
}

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2 || spec.per_class < 1 || spec.dim < 1) throw ContractError("make_blobs: bad spec");
  Rng rng = make_rng(seed, 0xb10b);
  const Tensor centres = spec.centre_spread * standard_normal(spec.classes, spec.dim, rng);
  Dataset data;
  data.classes = spec.classes;
  data.x.resize(static_cast<Index>(spec.classes) * spec.per_class, spec.dim);
  for (int c = 0; c < spec.classes; ++c) {
    const Tensor noise = spec.noise * standard_normal(spec.per_class, spec.dim, rng);
    for (int i = 0; i < spec.per_class; ++i) {
      data.x.row(static_cast<Index>(c) * spec.per_class + i) = centres.row(c) + noise.row(i);
      data.labels.push_back(c);
    }
  }
  return data;
}

std::vector<Index> permutation(Index n, Rng& rng) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  return order;
}

}  // namespace fnorm
