#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include <unistd.h>

#include "bnmf/dataset.hpp"
#include "oracles.hpp"

using namespace bnmf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("bnmf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void push_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift : {24, 16, 8, 0}) out.push_back(static_cast<unsigned char>(v >> shift));
}

// Four 28x28 images whose pixel (n, r, c) is (n * 61 + r * 7 + c * 3) mod 256.
unsigned char fixture_pixel(int n, int r, int c) {
  return static_cast<unsigned char>((n * 61 + r * 7 + c * 3) % 256);
}

std::vector<unsigned char> fixture_images() {
  std::vector<unsigned char> b{0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x04,
                               0x00, 0x00, 0x00, 0x1c, 0x00, 0x00, 0x00, 0x1c};
  for (int n = 0; n < 4; ++n)
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) b.push_back(fixture_pixel(n, r, c));
  return b;
}

std::vector<unsigned char> fixture_labels() {
  return {0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x04, 7, 2, 1, 0};
}

}  // namespace

TEST_CASE("hand-built IDX fixture parses exactly") {
  TempDir tmp;
  write_bytes(tmp.path / "img", fixture_images());
  write_bytes(tmp.path / "lab", fixture_labels());

  const IdxImages raw = read_idx_images(tmp.path / "img");
  CHECK(raw.count == 4);
  CHECK(raw.rows == 28);
  CHECK(raw.cols == 28);

  const Dataset d = load_idx(tmp.path / "img", tmp.path / "lab");
  CHECK(d.size() == 4);
  CHECK(d.dim() == 784);
  CHECK(d.labels == std::vector<int>{7, 2, 1, 0});
  CHECK(d.n_classes == 8);
  for (int n = 0; n < 4; ++n)
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c)
        REQUIRE(std::lround((d.inputs(r * 28 + c, n) + 1.0) * 127.5) == fixture_pixel(n, r, c));
}

TEST_CASE("pixel endpoints map to -1 and +1") {
  Eigen::MatrixXd raw(1, 3);
  raw << 0, 255, 127.5;
  const auto x = normalize_pixels(raw);
  CHECK(x(0, 0) == -1.0);
  CHECK(x(0, 1) == 1.0);
  CHECK(x(0, 2) == 0.0);
}

TEST_CASE("normalizing twice is refused") {
  Eigen::MatrixXd raw(1, 2);
  raw << 0, 255;
  CHECK_THROWS_AS(normalize_pixels(normalize_pixels(raw)), std::domain_error);
}

TEST_CASE("IDX error kinds") {
  TempDir tmp;
  const auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const IdxError& e) {
      return e.kind();
    }
    FAIL("no IdxError thrown");
    return IdxError::Kind::kIo;
  };

  auto bad = fixture_images();
  bad[3] = 0x02;
  write_bytes(tmp.path / "magic", bad);
  CHECK(kind_of([&] { read_idx_images(tmp.path / "magic"); }) == IdxError::Kind::kBadMagic);

  auto labels_magic = fixture_labels();
  labels_magic[3] = 0x03;
  write_bytes(tmp.path / "lmagic", labels_magic);
  CHECK(kind_of([&] { read_idx_labels(tmp.path / "lmagic"); }) == IdxError::Kind::kBadMagic);

  auto cut = fixture_images();
  cut.resize(cut.size() - 5);
  write_bytes(tmp.path / "cut", cut);
  CHECK(kind_of([&] { read_idx_images(tmp.path / "cut"); }) == IdxError::Kind::kTruncated);

  write_bytes(tmp.path / "short_header", {0x00, 0x00, 0x08});
  CHECK(kind_of([&] { read_idx_images(tmp.path / "short_header"); }) == IdxError::Kind::kTruncated);

  std::vector<unsigned char> three{0x00, 0x00, 0x08, 0x01};
  push_be32(three, 3);
  three.insert(three.end(), {1, 2, 3});
  write_bytes(tmp.path / "img", fixture_images());
  write_bytes(tmp.path / "three", three);
  CHECK(kind_of([&] { load_idx(tmp.path / "img", tmp.path / "three"); }) ==
        IdxError::Kind::kCountMismatch);

  CHECK(kind_of([&] { read_idx_images(tmp.path / "missing"); }) == IdxError::Kind::kIo);
}

TEST_CASE("IDX write-then-read reproduces bytes") {
  TempDir tmp;
  write_bytes(tmp.path / "img", fixture_images());
  write_bytes(tmp.path / "lab", fixture_labels());
  const Dataset d = load_idx(tmp.path / "img", tmp.path / "lab");
  write_idx(d, tmp.path / "img2", tmp.path / "lab2", 28, 28);
  CHECK(read_bytes(tmp.path / "img2") == fixture_images());
  CHECK(read_bytes(tmp.path / "lab2") == fixture_labels());
}

TEST_CASE("mnist_available and data-dir resolution") {
  TempDir tmp;
  CHECK_FALSE(mnist_available(tmp.path));
  ::setenv(kDataDirEnv, "/from/env", 1);
  CHECK(resolve_data_dir("").value() == fs::path("/from/env"));
  CHECK(resolve_data_dir("/from/flag").value() == fs::path("/from/flag"));
  ::unsetenv(kDataDirEnv);
  CHECK_FALSE(resolve_data_dir("").has_value());
}

TEST_CASE("subsample") {
  // 10 classes of unequal size.
  Dataset d;
  d.n_classes = 10;
  std::vector<int> labels;
  for (int c = 0; c < 10; ++c)
    for (int k = 0; k < 500 + 37 * c; ++k) labels.push_back(c);
  d.labels = labels;
  d.inputs = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(labels.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) d.inputs(0, i) = static_cast<double>(i) / d.size();

  SUBCASE("fraction 1 is the identity") {
    const auto s = subsample(d, 1.0, 3);
    CHECK(s.labels == d.labels);
    CHECK(s.inputs == d.inputs);
  }
  SUBCASE("stratified within one sample per class") {
    const auto s = subsample(d, 0.25, 3);
    std::map<int, int> full, part;
    for (int l : d.labels) ++full[l];
    for (int l : s.labels) ++part[l];
    for (int c = 0; c < 10; ++c) CHECK(std::abs(part[c] - 0.25 * full[c]) <= 1.0);
    // kept samples stay in their original order
    for (Eigen::Index i = 1; i < s.size(); ++i) CHECK(s.inputs(0, i) > s.inputs(0, i - 1));
  }
  SUBCASE("deterministic in the seed") {
    CHECK(subsample(d, 0.3, 9).inputs == subsample(d, 0.3, 9).inputs);
    CHECK(subsample(d, 0.3, 9).inputs != subsample(d, 0.3, 10).inputs);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(subsample(d, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(subsample(d, 1.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(subsample(d, 1e-6, 1), std::invalid_argument);
  }
}

TEST_CASE("subsample of a 60000-sample set keeps 15000 +- 10") {
  Dataset d;
  d.n_classes = 10;
  d.inputs = Eigen::MatrixXd::Zero(1, 60000);
  for (int i = 0; i < 60000; ++i) d.labels.push_back((i * 7) % 10);
  CHECK(std::abs(subsample(d, 0.25, 0).size() - 15000) <= 10);
}

TEST_CASE("make_blobs") {
  SUBCASE("n = 2 gives one point per class") {
    const auto d = make_blobs(2, 3, 1.0, 0);
    CHECK(d.labels == std::vector<int>{0, 1});
  }
  SUBCASE("valid dataset in [-1, 1]") {
    const auto d = make_blobs(500, 4, 2.0, 1);
    CHECK_NOTHROW(d.validate());
    CHECK(d.inputs.cwiseAbs().maxCoeff() <= 1.0);
  }
  SUBCASE("d = 1, margin 1: the sign rule reaches the Bayes accuracy Phi(1)") {
    const int n = 40000;
    const auto d = make_blobs(n, 1, 1.0, 2);
    int hits = 0;
    for (int k = 0; k < n; ++k) hits += (d.inputs(0, k) > 0.0) == (d.labels[k] == 1);
    const double p = oracle::normal_cdf(1.0);
    CHECK(std::abs(hits / double(n) - p) < 5.0 * std::sqrt(p * (1 - p) / n));
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(make_blobs(1, 2, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_blobs(4, 2, 0.0, 0), std::invalid_argument);
  }
}

TEST_CASE("Dataset::validate") {
  Dataset d;
  d.n_classes = 2;
  d.inputs = Eigen::MatrixXd::Zero(2, 2);
  d.labels = {0, 2};
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d.labels = {0, 1};
  d.inputs(0, 0) = 1.5;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}
