#include <gtest/gtest.h>

#include <cmath>

#include "privlens/heatmap.hpp"
#include "support.hpp"

using namespace privlens;

TEST(Heatmap, OraclePeaksAtLandmarks) {
  const std::vector<Landmark> points{{10.0, 5.0}, {20.0, 25.0}};
  const Heatmap m = landmark_heatmap_oracle(points, 32, 32, 2.0);
  EXPECT_NEAR(m(5, 10), 1.0, 1e-12);
  EXPECT_NEAR(m(25, 20), 1.0, 1e-12);
  EXPECT_NEAR(m(5, 12), std::exp(-4.0 / 8.0), 1e-12);
  EXPECT_LT(m(0, 31), 1e-6);
}

TEST(Heatmap, OracleRejectsOutOfBoundsLandmarks) {
  const std::vector<Landmark> points{{40.0, 5.0}};
  EXPECT_THROW(landmark_heatmap_oracle(points, 32, 32, 2.0), std::invalid_argument);
}

TEST(Heatmap, RejectsValuesOutsideUnitRange) {
  Grid<double> g(2, 2, 0.5);
  g(1, 1) = 1.5;
  EXPECT_THROW(Heatmap{g}, std::invalid_argument);
}

TEST(Heatmap, ProxyOfConstantImageIsZero) {
  const Image x(16, 16, 3, 0.7);
  const Heatmap m = lowpass_heatmap_proxy(x, 0.1);
  for (double v : m.grid().values()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Heatmap, ProxyIsNormalisedAndSized) {
  const Image x = privlens::testing::random_image(20, 24, 3, 4);
  const Heatmap m = LowpassHeatmapProxy(0.2).extract(x);
  EXPECT_EQ(m.height(), 20);
  EXPECT_EQ(m.width(), 24);
  double lo = 1.0;
  double hi = 0.0;
  for (double v : m.grid().values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_NEAR(lo, 0.0, 1e-12);
  EXPECT_NEAR(hi, 1.0, 1e-12);
  EXPECT_THROW(lowpass_heatmap_proxy(x, 0.0), std::invalid_argument);
}

TEST(Heatmap, BlurPreservesConstantsAndMass) {
  Grid<double> constant(12, 9, 0.3);
  const Grid<double> blurred = gaussian_blur(constant, 2.0);
  for (double v : blurred.values()) {
    EXPECT_NEAR(v, 0.3, 1e-12);
  }
  Grid<double> spike(31, 31, 0.0);
  spike(15, 15) = 1.0;
  const Grid<double> spread = gaussian_blur(spike, 1.5);
  double sum = 0.0;
  for (double v : spread.values()) {
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_NEAR(spread(15, 16), spread(16, 15), 1e-15);
}
