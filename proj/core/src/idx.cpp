#include <array>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "bnmf/dataset.hpp"

namespace bnmf {
namespace {

using Kind = IdxError::Kind;

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path, const char* field) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4))
    throw IdxError(Kind::kTruncated, fmt::format("{}: truncated header ({})", path.string(), field));
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(Kind::kIo, fmt::format("cannot open {}", path.string()));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IdxError(Kind::kIo, fmt::format("cannot write {}", path.string()));
  return out;
}

void read_payload(std::istream& in, std::vector<std::uint8_t>& buf,
                  const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size())
    throw IdxError(Kind::kTruncated, fmt::format("{}: payload truncated ({} of {} bytes)", path.string(),
                                                 in.gcount(), buf.size()));
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::uint32_t magic = read_be32(in, path, "magic");
  if (magic != kIdxImagesMagic)
    throw IdxError(Kind::kBadMagic,
                   fmt::format("{}: bad magic 0x{:08x}, expected 0x{:08x}", path.string(), magic, kIdxImagesMagic));
  IdxImages img;
  img.count = read_be32(in, path, "count");
  img.rows = read_be32(in, path, "rows");
  img.cols = read_be32(in, path, "cols");
  if (img.rows == 0 || img.cols == 0)
    throw IdxError(Kind::kBadHeader, fmt::format("{}: zero image dimension", path.string()));
  img.pixels.resize(std::size_t{img.count} * img.rows * img.cols);
  read_payload(in, img.pixels, path);
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::uint32_t magic = read_be32(in, path, "magic");
  if (magic != kIdxLabelsMagic)
    throw IdxError(Kind::kBadMagic,
                   fmt::format("{}: bad magic 0x{:08x}, expected 0x{:08x}", path.string(), magic, kIdxLabelsMagic));
  std::vector<std::uint8_t> labels(read_be32(in, path, "count"));
  read_payload(in, labels, path);
  return labels;
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols)
    throw std::invalid_argument("IdxImages pixel buffer does not match its header");
  auto out = open_out(path);
  write_be32(out, kIdxImagesMagic);
  write_be32(out, images.count);
  write_be32(out, images.rows);
  write_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  auto out = open_out(path);
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

Eigen::MatrixXd normalize_pixels(const Eigen::MatrixXd& raw) {
  if (raw.size() > 0 && (raw.minCoeff() < 0.0 || raw.maxCoeff() > 255.0))
    throw std::domain_error(fmt::format(
        "pixel values must lie in [0, 255] (got [{}, {}]); data already normalized?", raw.minCoeff(),
        raw.maxCoeff()));
  return (raw.array() * (2.0 / 255.0) - 1.0).matrix();
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const IdxImages img = read_idx_images(images_path);
  const std::vector<std::uint8_t> labels = read_idx_labels(labels_path);
  if (labels.size() != img.count)
    throw IdxError(Kind::kCountMismatch, fmt::format("{} images but {} labels", img.count, labels.size()));

  const Eigen::Index dim = Eigen::Index{img.rows} * img.cols;
  Eigen::MatrixXd raw(dim, img.count);
  for (Eigen::Index n = 0; n < raw.cols(); ++n)
    for (Eigen::Index i = 0; i < dim; ++i) raw(i, n) = img.pixels[n * dim + i];

  Dataset data;
  data.inputs = normalize_pixels(raw);
  data.labels.assign(labels.begin(), labels.end());
  int max_label = 0;
  for (int l : data.labels) max_label = std::max(max_label, l);
  data.n_classes = labels.empty() ? 0 : max_label + 1;
  return data;
}

void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, std::uint32_t rows, std::uint32_t cols) {
  data.validate();
  if (Eigen::Index{rows} * cols != data.dim())
    throw std::invalid_argument("rows * cols must equal the dataset dimension");
  IdxImages img;
  img.count = static_cast<std::uint32_t>(data.size());
  img.rows = rows;
  img.cols = cols;
  img.pixels.resize(static_cast<std::size_t>(data.inputs.size()));
  for (Eigen::Index n = 0; n < data.size(); ++n)
    for (Eigen::Index i = 0; i < data.dim(); ++i)
      img.pixels[n * data.dim() + i] =
          static_cast<std::uint8_t>(std::lround((data.inputs(i, n) + 1.0) * 127.5));
  write_idx_images(images_path, img);
  std::vector<std::uint8_t> labels(data.labels.begin(), data.labels.end());
  write_idx_labels(labels_path, labels);
}

MnistSplit load_mnist(const std::filesystem::path& dir) {
  MnistSplit split;
  split.train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
  split.test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  split.train.n_classes = split.test.n_classes = std::max(split.train.n_classes, split.test.n_classes);
  return split;
}

bool mnist_available(const std::filesystem::path& dir) {
  for (const char* name : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                           "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"})
    if (!std::filesystem::is_regular_file(dir / name)) return false;
  return true;
}

}  // namespace bnmf
