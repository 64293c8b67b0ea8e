#include <gtest/gtest.h>

#include <algorithm>

#include "myco/colony.hpp"
#include "myco/template.hpp"

using namespace myco;

TEST(Colony, SameSeedSameImage) {
  EXPECT_EQ(synthesize_colony(250, 240), synthesize_colony(250, 240));
  ColonyParams other;
  other.seed = 1;
  EXPECT_NE(synthesize_colony(250, 240), synthesize_colony(250, 240, other));
}

TEST(Colony, PixelsAreStrandOrBackground) {
  const auto img = synthesize_colony(200, 192);
  ASSERT_EQ(img.width(), 200);
  ASSERT_EQ(img.height(), 192);
  const ThresholdRule rule;
  std::size_t strand = 0;
  for (const auto& px : img.data()) {
    if (rule(px)) {
      ++strand;
      continue;
    }
    // Pale background or dim speckle.
    const bool pale = std::min({px.r, px.g, px.b}) >= 215;
    const bool dim = px.g < 40 && px.r < 16 && px.b < 16;
    EXPECT_TRUE(pale || dim);
  }
  EXPECT_GT(strand, 0u);
  EXPECT_LT(strand, img.size() / 2);
}

TEST(Colony, FullSizeMaskIsOneConnectedColony) {
  const auto g = make_conductive_grid(synthesize_colony(1000, 960));
  EXPECT_EQ(g.width(), 1000);
  EXPECT_EQ(g.height(), 960);
  // Flood fill from the first conductive node reaches the bulk of the mask.
  std::vector<Node> stack;
  Mask seen(g.width(), g.height());
  for (std::size_t i = 0; i < g.mask.size() && stack.empty(); ++i) {
    if (g.mask[i]) stack.push_back({static_cast<int>(i % 1000), static_cast<int>(i / 1000)});
  }
  ASSERT_FALSE(stack.empty());
  std::size_t reached = 0;
  seen(stack[0].x, stack[0].y) = 1;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    ++reached;
    for (const auto& d : kVonNeumann) {
      const int x = n.x + d[0], y = n.y + d[1];
      if (g.conductive(x, y) && !seen(x, y)) {
        seen(x, y) = 1;
        stack.push_back({x, y});
      }
    }
  }
  EXPECT_GT(reached, g.conductive_count() * 8 / 10);
}
