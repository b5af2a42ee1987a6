#include <gtest/gtest.h>

#include <cmath>

#include "dsmfuse/synth.hpp"
#include "test_support.hpp"

using namespace dsmfuse;
using testsupport::bit_identical;

namespace {

SceneSpec two_buildings() {
  SceneSpec s;
  s.seed = 3;
  s.width = 100;
  s.height = 100;
  s.ground_height = 2.0;
  s.buildings = {{10, 20, 15, 10, 12.0, 200.0}, {50, 50, 20, 30, 25.0, 30.0}};
  return s;
}

}  // namespace

TEST(GenScene, StampsBuildings) {
  const Scene sc = gen_scene(two_buildings());
  EXPECT_EQ(sc.truth.cols(), 100);
  EXPECT_EQ(sc.truth.at(0, 0), 2.0);
  EXPECT_EQ(sc.ortho.at(0, 0), 100.0);
  EXPECT_EQ(sc.truth.at(10, 20), 14.0);
  EXPECT_EQ(sc.truth.at(24, 29), 14.0);
  EXPECT_EQ(sc.truth.at(25, 29), 2.0);
  EXPECT_EQ(sc.ortho.at(24, 29), 200.0);
  EXPECT_EQ(sc.truth.at(69, 79), 27.0);
  EXPECT_EQ(sc.ortho.at(69, 79), 30.0);
  EXPECT_EQ(sc.truth.valid_count(), 10000u);
}

TEST(GenScene, LaterBuildingWinsAndFootprintChecked) {
  SceneSpec s;
  s.width = s.height = 10;
  s.buildings = {{0, 0, 5, 5, 10.0, 1.0}, {2, 2, 5, 5, 20.0, 2.0}};
  const Scene sc = gen_scene(s);
  EXPECT_EQ(sc.truth.at(3, 3), 20.0);
  EXPECT_EQ(sc.truth.at(1, 1), 10.0);
  s.buildings.push_back({8, 8, 5, 1, 1.0, 1.0});
  EXPECT_THROW(gen_scene(s), std::invalid_argument);
}

TEST(GenScene, IntensityTextureIsSeededAndClamped) {
  SceneSpec s = two_buildings();
  s.intensity_noise = 40.0;
  const Scene a = gen_scene(s);
  const Scene b = gen_scene(s);
  EXPECT_TRUE(bit_identical(a.ortho, b.ortho));
  for (double v : a.ortho.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 255.0);
  }
  s.seed = 4;
  EXPECT_FALSE(bit_identical(gen_scene(s).ortho, a.ortho));
}

TEST(Degrade, HoleFractionNearProbability) {
  const RasterGrid truth(testsupport::square_geometry(100), 5.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DegradeSpec d;
    d.seed = seed;
    d.hole_prob = 0.1;
    const RasterGrid out = degrade(truth, d);
    const double holes = 10000.0 - static_cast<double>(out.valid_count());
    EXPECT_NEAR(holes, 1000.0, 90.0) << "seed " << seed;
  }
}

TEST(Degrade, DeterministicPerSeed) {
  const Scene sc = gen_scene(two_buildings());
  DegradeSpec d;
  d.seed = 77;
  d.gaussian_sigma = 0.5;
  d.spike_prob = 0.05;
  d.spike_amp = 10.0;
  d.hole_prob = 0.02;
  EXPECT_TRUE(bit_identical(degrade(sc.truth, d), degrade(sc.truth, d)));
  DegradeSpec e = d;
  e.seed = 78;
  EXPECT_FALSE(bit_identical(degrade(sc.truth, d), degrade(sc.truth, e)));
}

TEST(Degrade, GaussianOnlyKeepsMaskAndMatchesSigma) {
  RasterGrid truth(testsupport::square_geometry(200), 0.0);
  truth.at(3, 3) = kDefaultNodata;
  DegradeSpec d;
  d.seed = 5;
  d.gaussian_sigma = 2.0;
  const RasterGrid out = degrade(truth, d);
  EXPECT_EQ(out.at(3, 3), kDefaultNodata);
  EXPECT_EQ(out.valid_count(), truth.valid_count());
  double sum = 0.0, sum2 = 0.0;
  for (double v : out.values()) {
    if (!out.valid(v)) continue;
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(out.valid_count());
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(std::sqrt(sum2 / n - mean * mean), 2.0, 0.05);
}

TEST(Degrade, SpikesAreExactlyAmplitude) {
  const RasterGrid truth(testsupport::square_geometry(50), 3.0);
  DegradeSpec d;
  d.seed = 9;
  d.spike_prob = 0.2;
  d.spike_amp = 10.0;
  const RasterGrid out = degrade(truth, d);
  int up = 0, down = 0;
  for (double v : out.values()) {
    if (v == 13.0) ++up;
    else if (v == -7.0) ++down;
    else EXPECT_EQ(v, 3.0);
  }
  EXPECT_NEAR(up + down, 500, 80);
  EXPECT_GT(up, 0);
  EXPECT_GT(down, 0);
}

TEST(Degrade, EffectsUseIndependentStreams) {
  // Turning on holes does not move the noise on the cells that survive.
  const RasterGrid truth(testsupport::square_geometry(30), 1.0);
  DegradeSpec a;
  a.seed = 12;
  a.gaussian_sigma = 1.0;
  DegradeSpec b = a;
  b.hole_prob = 0.3;
  const RasterGrid x = degrade(truth, a), y = degrade(truth, b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y.valid(y.values()[i])) EXPECT_EQ(x.values()[i], y.values()[i]);
  }
}

TEST(Degrade, RejectsBadProbabilities) {
  const RasterGrid truth(testsupport::square_geometry(3), 1.0);
  DegradeSpec d;
  d.hole_prob = 1.5;
  EXPECT_THROW(degrade(truth, d), std::invalid_argument);
}

TEST(QualityLadder, GeometricEndpoints) {
  const auto q = quality_ladder(5, 0.2, 3.2);
  ASSERT_EQ(q.size(), 5u);
  EXPECT_DOUBLE_EQ(q.front(), 0.2);
  EXPECT_NEAR(q.back(), 3.2, 1e-12);
  for (std::size_t i = 1; i < q.size(); ++i) EXPECT_NEAR(q[i] / q[i - 1], 2.0, 1e-12);
  EXPECT_EQ(quality_ladder(1, 0.7, 2.0), std::vector<double>{0.7});
  EXPECT_THROW(quality_ladder(0, 1, 2), std::invalid_argument);
}

TEST(SeededStream, UniformRangeAndPurposeSeparation) {
  SeededStream a(1, 1), b(1, 2);
  int same = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform(), y = b.uniform();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    if (x == y) ++same;
  }
  EXPECT_EQ(same, 0);
}

TEST(SceneSpecText, ParsesKeysAndBuildings) {
  const SceneSpec s = parse_scene_spec(
      "# test scene\n"
      "seed = 9\n"
      "width = 40\n"
      "height = 30\n"
      "cell_size = 0.5\n"
      "building = 2, 3, 10, 5, 15.5, 220\n"
      "building = 20,10,4,4,8,40\n");
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.width, 40);
  EXPECT_EQ(s.cell_size, 0.5);
  ASSERT_EQ(s.buildings.size(), 2u);
  EXPECT_EQ(s.buildings[0].height_m, 15.5);
  EXPECT_EQ(s.buildings[1].intensity, 40.0);
  EXPECT_THROW(parse_scene_spec("colour = 3\n"), std::invalid_argument);
  EXPECT_THROW(parse_scene_spec("width = 2.5\n"), std::invalid_argument);
  EXPECT_THROW(parse_scene_spec("building = 1,2,3\n"), std::invalid_argument);
}
