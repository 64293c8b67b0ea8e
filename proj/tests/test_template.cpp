#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "myco/image.hpp"
#include "myco/template.hpp"
#include "support.hpp"

using namespace myco;
using myco::test::grid_from;
using myco::test::scratch_dir;

namespace {

RgbImage one_pixel(Rgb px) { return RgbImage(1, 1, px); }

Mask mask_from(const std::vector<std::string>& rows) { return grid_from(rows).mask; }

Mask random_mask(int w, int h, double fill, unsigned seed) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution on(fill);
  Mask m(w, h);
  for (auto& b : m.data()) b = on(rng);
  return m;
}

// Neighbour count written out longhand, one direction at a time.
int count_k_longhand(const Mask& m, int x, int y) {
  int k = 0;
  if (x > 0 && m(x - 1, y)) ++k;
  if (x + 1 < m.width() && m(x + 1, y)) ++k;
  if (y > 0 && m(x, y - 1)) ++k;
  if (y + 1 < m.height() && m(x, y + 1)) ++k;
  return k;
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST(Binarize, ThresholdExamples) {
  EXPECT_EQ(binarize(one_pixel({10, 200, 5}))[0], 1);
  EXPECT_EQ(binarize(one_pixel({255, 255, 255}))[0], 0);
  EXPECT_EQ(binarize(one_pixel({19, 41, 19}))[0], 1);
  EXPECT_EQ(binarize(one_pixel({20, 41, 19}))[0], 0);
}

TEST(Binarize, EveryBoundaryIsStrict) {
  EXPECT_EQ(binarize(one_pixel({19, 40, 19}))[0], 0);
  EXPECT_EQ(binarize(one_pixel({19, 41, 20}))[0], 0);
  EXPECT_EQ(binarize(one_pixel({0, 255, 0}))[0], 1);
  EXPECT_EQ(binarize(one_pixel({0, 0, 0}))[0], 0);
}

TEST(Binarize, ExhaustiveOverChannelValues) {
  // Sweep each channel with the other two fixed well inside the rule.
  for (int c = 0; c < 256; ++c) {
    const auto v = static_cast<std::uint8_t>(c);
    EXPECT_EQ(binarize(one_pixel({v, 200, 0}))[0], c < 20 ? 1 : 0) << "r=" << c;
    EXPECT_EQ(binarize(one_pixel({0, v, 0}))[0], c > 40 ? 1 : 0) << "g=" << c;
    EXPECT_EQ(binarize(one_pixel({0, 200, v}))[0], c < 20 ? 1 : 0) << "b=" << c;
  }
}

TEST(Dilate, EmptyStaysEmpty) {
  const Mask m(10, 10);
  EXPECT_EQ(dilate(m), m);
}

TEST(Dilate, SingleNodeBecomesBlock) {
  Mask m(10, 10);
  m(5, 5) = 1;
  const auto d = dilate(m);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      const bool in_block = x >= 4 && x <= 6 && y >= 4 && y <= 6;
      EXPECT_EQ(d(x, y), in_block ? 1 : 0) << x << "," << y;
    }
  }
}

TEST(Dilate, CornerClipsAtBoundary) {
  Mask m(10, 10);
  m(0, 0) = 1;
  const auto d = dilate(m);
  EXPECT_EQ(count_true(d), 4u);
  EXPECT_TRUE(d(0, 0) && d(0, 1) && d(1, 0) && d(1, 1));
}

TEST(Dilate, CrossElementGivesPlus) {
  Mask m(5, 5);
  m(2, 2) = 1;
  const auto d = dilate(m, Neighborhood::von_neumann);
  EXPECT_EQ(d, mask_from({".....", "..#..", ".###.", "..#..", "....."}));
}

TEST(Dilate, CraftedFixture) {
  const auto in = mask_from({
      "........",
      ".#......",
      "........",
      ".....##.",
      "........",
  });
  const auto expected = mask_from({
      "###.....",
      "###.....",
      "###.####",
      "....####",
      "....####",
  });
  EXPECT_EQ(dilate(in), expected);
}

TEST(Dilate, NeverRemovesAndGrowsMonotonically) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto m = random_mask(23, 17, 0.1, seed);
    const auto d1 = dilate(m);
    const auto d2 = dilate(d1);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_GE(d1[i], m[i]);
      EXPECT_GE(d2[i], d1[i]);
    }
  }
}

TEST(NeighborCounts, Examples) {
  EXPECT_EQ(grid_from({"...", ".#.", "..."}).k(1, 1), 0);
  EXPECT_EQ(grid_from({"###", "###", "###"}).k(1, 1), 4);
  EXPECT_EQ(grid_from({".#.", ".##", "..."}).k(1, 1), 2);
}

TEST(NeighborCounts, ZeroOffMaskAndMatchesLonghand) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const auto m = random_mask(19, 13, 0.55, seed);
    const auto g = neighbor_counts(m);
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        EXPECT_EQ(g.k(x, y), m(x, y) ? count_k_longhand(m, x, y) : 0);
      }
    }
  }
}

TEST(KHistogram, EmptyMask) { EXPECT_TRUE(k_histogram(neighbor_counts(Mask(4, 4))).empty()); }

TEST(KHistogram, RowOfThree) {
  const auto h = k_histogram(grid_from({"###"}));
  EXPECT_EQ(h, (KHistogram{{1, 2}, {2, 1}}));
}

TEST(KHistogram, SumsToConductiveCount) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const auto g = neighbor_counts(random_mask(31, 29, 0.3 + 0.05 * seed, seed));
    std::size_t sum = 0;
    for (const auto& [k, n] : k_histogram(g)) {
      EXPECT_GE(k, 0);
      EXPECT_LE(k, 4);
      sum += n;
    }
    EXPECT_EQ(sum, g.conductive_count());
  }
}

TEST(KHistogram, CsvFormat) {
  const auto dir = scratch_dir("khist");
  write_k_histogram_csv(k_histogram(grid_from({"###"})), dir / "k.csv");
  std::ifstream in(dir / "k.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "k,count\n1,2\n2,1\n");
}

TEST(Pipeline, CraftedImageToGrid) {
  // Green strand pixels, one off-colour pixel, white background.
  RgbImage img(6, 4, Rgb{255, 255, 255});
  img(1, 1) = {0, 120, 0};
  img(2, 1) = {5, 90, 10};
  img(4, 2) = {30, 120, 0};
  const auto g = make_conductive_grid(img);
  EXPECT_EQ(g.mask, mask_from({
                        "####..",
                        "####..",
                        "####..",
                        "......",
                    }));
  EXPECT_EQ(g.k(0, 0), 2);
  EXPECT_EQ(g.k(1, 1), 4);
  EXPECT_EQ(g.k(3, 2), 2);
}

TEST(Pipeline, AllWhiteGivesEmptyGrid) {
  const auto g = make_conductive_grid(RgbImage(8, 8, Rgb{255, 255, 255}));
  EXPECT_EQ(g.conductive_count(), 0u);
}

TEST(Downsample, MajorityPerBlock) {
  const auto in = mask_from({
      "##..#.",
      "#...#.",
      "......",
      "..####",
  });
  // 2x2 blocks: need at least 2 of 4 set.
  EXPECT_EQ(downsample(in, 2), mask_from({"#.#", ".##"}));
  EXPECT_EQ(downsample(in, 1), in);
  EXPECT_THROW(downsample(in, 0), std::invalid_argument);
}

TEST(MaskFile, PgmRoundTrip) {
  const auto dir = scratch_dir("maskpgm");
  const auto m = random_mask(37, 11, 0.4, 7);
  save_mask_pgm(m, dir / "m.pgm");
  EXPECT_EQ(load_mask_pgm(dir / "m.pgm"), m);
  const auto g = neighbor_counts(m);
  EXPECT_EQ(neighbor_counts(load_mask_pgm(dir / "m.pgm")), g);
}

TEST(MaskFile, PgmBytesAreExact) {
  Mask m(2, 1);
  m(1, 0) = 1;
  const auto bytes = encode_mask_pgm(m);
  const std::string expected = std::string("P5\n2 1\n255\n") + '\0' + '\xff';
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), expected);
}

TEST(MaskFile, PngDecodesToSameMask) {
  const auto dir = scratch_dir("maskpng");
  const auto m = random_mask(9, 7, 0.5, 3);
  save_mask_png(m, dir / "m.png");
  const auto img = load_image(dir / "m.png");
  ASSERT_EQ(img.width(), 9);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(img[i].g, m[i] ? 255 : 0);
}

TEST(LoadImage, OnePixelPpm) {
  const auto dir = scratch_dir("ppm1");
  write_file(dir / "a.ppm", std::string("P6\n1 1\n255\n") + '\0' + '\xff' + '\0');
  const auto img = load_image(dir / "a.ppm");
  ASSERT_EQ(img.width(), 1);
  ASSERT_EQ(img.height(), 1);
  EXPECT_EQ(img[0], (Rgb{0, 255, 0}));
}

TEST(LoadImage, PpmWithCommentAndPngRoundTrip) {
  const auto dir = scratch_dir("ppm2");
  RgbImage img(3, 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = Rgb{static_cast<std::uint8_t>(i * 40), static_cast<std::uint8_t>(255 - i), 7};
  }
  save_ppm(img, dir / "b.ppm");
  save_png(img, dir / "b.png");
  EXPECT_EQ(load_image(dir / "b.ppm"), img);
  EXPECT_EQ(load_image(dir / "b.png"), img);
  write_file(dir / "c.ppm", std::string("P6\n# note\n1 1\n255\n") + "\x01\x02\x03");
  EXPECT_EQ(load_image(dir / "c.ppm")[0], (Rgb{1, 2, 3}));
}

TEST(LoadImage, AlphaIsIgnored) {
  const auto dir = scratch_dir("rgba");
  const std::uint8_t raster[8] = {10, 200, 5, 0, 255, 255, 255, 128};
  detail::write_bytes(dir / "a.png", detail::encode_png(raster, 2, 1, 4, "a.png"));
  const auto img = load_image(dir / "a.png");
  EXPECT_EQ(img[0], (Rgb{10, 200, 5}));
  EXPECT_EQ(img[1], (Rgb{255, 255, 255}));
}

TEST(LoadImage, ErrorsAreDistinct) {
  const auto dir = scratch_dir("imgerr");
  auto kind_of = [](const std::filesystem::path& p) {
    try {
      load_image(p);
    } catch (const ImageError& e) {
      EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
      return e.kind();
    }
    ADD_FAILURE() << "no error for " << p;
    return ImageError::Kind::write_failed;
  };
  EXPECT_EQ(kind_of(dir / "missing.png"), ImageError::Kind::unreadable);

  write_file(dir / "t.ppm", "P6\n4 4\n255\nabc");
  EXPECT_EQ(kind_of(dir / "t.ppm"), ImageError::Kind::corrupt);

  write_file(dir / "g.gif", "GIF89a....");
  EXPECT_EQ(kind_of(dir / "g.gif"), ImageError::Kind::unsupported_format);

  RgbImage img(16, 16, Rgb{1, 2, 3});
  save_png(img, dir / "full.png");
  auto bytes = detail::read_bytes(dir / "full.png");
  bytes.resize(bytes.size() / 2);
  detail::write_bytes(dir / "half.png", bytes);
  EXPECT_EQ(kind_of(dir / "half.png"), ImageError::Kind::corrupt);
}
