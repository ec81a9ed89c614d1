#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "gae/data.hpp"
#include "gae/detail/binary_io.hpp"

using namespace gae;
namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> idx_header(std::uint32_t magic, std::vector<std::uint32_t> dims) {
  std::vector<unsigned char> bytes;
  const auto be32 = [&bytes](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) bytes.push_back(static_cast<unsigned char>(v >> s));
  };
  be32(magic);
  for (std::uint32_t d : dims) be32(d);
  return bytes;
}

Image disk_image(Index side) {
  Image img(side, side);
  const double c = (side - 1) / 2.0;
  for (Index r = 0; r < side; ++r)
    for (Index k = 0; k < side; ++k) {
      const double d = std::hypot(r - c, k - c);
      img(r, k) = static_cast<float>(std::exp(-d * d / 40.0) * (1.0 + 0.3 * std::sin(0.25 * r)));
    }
  return img;
}

}  // namespace

TEST_CASE("IDX decoding") {
  auto bytes = idx_header(0x00000803, {1, 2, 2});
  for (unsigned char b : {0, 255, 128, 0}) bytes.push_back(b);
  const ImageSet set = parse_idx_images(bytes, "mem");
  REQUIRE(set.size() == 1);
  CHECK(set.side() == 2);
  CHECK(set.images[0](0, 0) == 0.0f);
  CHECK(set.images[0](0, 1) == 1.0f);
  CHECK(set.images[0](1, 0) == doctest::Approx(128.0 / 255.0));
  CHECK(set.images[0](1, 1) == 0.0f);

  auto wrong = idx_header(0x12345678, {1, 2, 2});
  for (int i = 0; i < 4; ++i) wrong.push_back(0);
  CHECK_THROWS_AS(parse_idx_images(wrong, "mem"), FormatError);

  auto short_file = idx_header(0x00000803, {2, 2, 2});
  short_file.push_back(1);
  CHECK_THROWS_AS(parse_idx_images(short_file, "mem"), FormatError);
}

TEST_CASE("rotation") {
  Image img(2, 2);
  img << 1, 2, 3, 4;
  CHECK(rotate_image(img, 0) == img);

  SUBCASE("right angles are exact index permutations") {
    Image big(5, 5);
    for (Index i = 0; i < 25; ++i) big.data()[i] = static_cast<float>(i * i % 7);
    for (const Image* source : {&img, &big}) {
      const Index w = source->cols();
      Image expected(w, w);
      for (Index r = 0; r < w; ++r)
        for (Index c = 0; c < w; ++c) expected(r, c) = (*source)(c, w - 1 - r);
      CHECK(rotate_image(*source, 90) == expected);
      CHECK(rotate_image(rotate_image(*source, 90), 270) == *source);
      CHECK(rotate_image(rotate_image(*source, 180), 180) == *source);
    }
  }

  SUBCASE("rotating there and back on a disk loses little") {
    const Image disk = disk_image(16);
    for (double theta : {20.0, 37.0, 140.0}) {
      const Image back = rotate_image(rotate_image(disk, theta), -theta);
      double worst = 0.0;
      for (Index r = 0; r < 16; ++r)
        for (Index c = 0; c < 16; ++c)
          if (std::hypot(r - 7.5, c - 7.5) < 5.5) worst = std::max(worst, double(std::abs(back(r, c) - disk(r, c))));
      CHECK(worst < 0.05);
    }
  }

  SUBCASE("mask and resampling") {
    const Image masked = apply_circular_mask(Image::Ones(16, 16));
    CHECK(masked(0, 0) == 0.0f);
    CHECK(masked(8, 8) == 1.0f);
    CHECK(masked(0, 8) == 1.0f);
    const Image plain = disk_image(28);
    CHECK(crop_and_resample(plain, 28, 28).isApprox(plain));
    const Image small = crop_and_resample(Image::Constant(28, 28, 3.0f), 24, 16);
    CHECK(small.rows() == 16);
    CHECK(small.isApprox(Image::Constant(16, 16, 3.0f)));
  }
}

TEST_CASE("transformation sets") {
  const TransformationSet r20 = TransformationSet::mnist_r20();
  CHECK(r20.angles.size() == 18);
  CHECK(r20.angles.front() == -180);
  CHECK(r20.angles.back() == 160);
  const TransformationSet r20_10 = TransformationSet::from_name("mnistr20_10");
  CHECK(r20_10.angles.front() == -170);
  CHECK(r20_10.angles.back() == 170);
  for (int a : r20_10.angles) CHECK(!r20.contains(a));
  CHECK(TransformationSet::mnist_r1().angles.size() == 360);
  CHECK_THROWS_AS(TransformationSet::from_name("norb"), ConfigError);
}

TEST_CASE("rotation pairs") {
  const ImageSet images = synthetic_shapes(20, 8, 3);
  const TransformationSet r20 = TransformationSet::mnist_r20();

  SUBCASE("labels come from the set and the histogram is flat") {
    PairOptions options;
    options.pairs_per_image = 900;
    const PairDataset pairs = make_rotation_pairs(images, r20, 5, options);
    REQUIRE(pairs.size() == 18000);
    std::map<int, int> counts;
    for (int a : pairs.angle_label) {
      CHECK(r20.contains(a));
      ++counts[a];
    }
    CHECK(counts.size() == 18);
    const double sigma = std::sqrt(18000 * (1.0 / 18) * (17.0 / 18));
    for (const auto& [angle, count] : counts) CHECK(std::abs(count - 1000.0) < 3 * sigma);
  }

  SUBCASE("zero rotation yields identical images") {
    const PairDataset pairs = make_rotation_pairs(images, TransformationSet::custom({0}), 5);
    CHECK(pairs.x == pairs.y);
  }

  SUBCASE("determinism") {
    const PairDataset a = make_rotation_pairs(images, r20, 9), b = make_rotation_pairs(images, r20, 9);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.angle_label == b.angle_label);
  }
}

TEST_CASE("contrast normalization") {
  Eigen::MatrixXf rows(1, 2);
  rows << 0, 2;
  contrast_normalize_rows(rows);
  CHECK(rows(0, 0) == doctest::Approx(-1.0));
  CHECK(rows(0, 1) == doctest::Approx(1.0));

  Rng rng = make_rng(3);
  Eigen::MatrixXf random(5, 64);
  for (Index i = 0; i < random.size(); ++i) random.data()[i] = static_cast<float>(uniform(rng, -3, 7));
  contrast_normalize_rows(random);
  for (Index r = 0; r < 5; ++r) {
    const Eigen::RowVectorXd row = random.row(r).cast<double>();
    const double mean = row.mean();
    const double std = std::sqrt((row.array() - mean).square().mean());
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(std - 1.0) < 1e-6);
  }

  Eigen::MatrixXf zeros = Eigen::MatrixXf::Zero(1, 4);
  CHECK_THROWS_AS(contrast_normalize_rows(zeros), NumericalError);
}

TEST_CASE("synthetic shapes") {
  const ImageSet a = synthetic_shapes(100, 16, 7);
  REQUIRE(a.size() == 100);
  for (const Image& img : a.images) {
    CHECK(img.rows() == 16);
    CHECK((img.array() != 0).count() >= 26);
    const Eigen::ArrayXXd n = [&] {
      Eigen::ArrayXXd d = img.cast<double>().array();
      d -= d.mean();
      return (d / std::sqrt(d.square().mean())).eval();
    }();
    double closest = 1e9;
    for (double theta : {90.0, 180.0, 270.0}) {
      Eigen::ArrayXXd r = rotate_image(img, theta).cast<double>().array();
      r -= r.mean();
      r /= std::sqrt(r.square().mean());
      closest = std::min(closest, std::sqrt((n - r).square().sum()));
    }
    CHECK(closest > 0.1);
  }
  const ImageSet b = synthetic_shapes(100, 16, 7);
  for (Index i = 0; i < 100; ++i) CHECK(a.images[i] == b.images[i]);
  CHECK_THROWS_AS(synthetic_shapes(10, 4, 1), ConfigError);
}

TEST_CASE("pair files") {
  PairDataset d = contrast_normalize(make_rotation_pairs(synthetic_shapes(6, 8, 2), TransformationSet::mnist_r20(), 3));
  const fs::path path = fs::temp_directory_path() / "gae_test_pairs.gaepair";
  save_pairs(d, path);
  const PairDataset back = load_pairs(path);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  CHECK(back.angle_label == d.angle_label);
  CHECK(back.normalized);

  auto bytes = detail::read_file(path);
  bytes.resize(bytes.size() - 3);
  detail::write_file(path, bytes);
  CHECK_THROWS_AS(load_pairs(path), FormatError);
  fs::remove(path);

  CHECK(image_side(256) == 16);
  CHECK_THROWS_AS(image_side(10), ShapeError);
  const Image img = synthetic_shapes(1, 8, 1).images[0];
  CHECK(row_to_image(image_to_row(img)) == img);
  CHECK(image_to_row(img)(1) == img(0, 1));
}
