#include <gtest/gtest.h>

#include <cmath>

#include "dsmfuse/register.hpp"
#include "dsmfuse/synth.hpp"
#include "test_support.hpp"

using namespace dsmfuse;

namespace {

// Smooth analytic terrain, evaluated in world coordinates.
double hill(double x, double y) {
  return 30.0 * std::exp(-((x - 40.0) * (x - 40.0) + (y - 36.0) * (y - 36.0)) / (2.0 * 12.0 * 12.0)) +
         8.0 * std::sin(x / 9.0) * std::cos(y / 11.0) + 0.05 * x;
}

RasterGrid sample_surface(const GridGeometry& g, double dx, double dy, double dz) {
  RasterGrid out(g, 0.0);
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      const WorldPoint p = cell_center(g, {c, r});
      out.at(c, r) = hill(p.x - dx, p.y - dy) + dz;
    }
  }
  return out;
}

}  // namespace

TEST(Align, IdenticalGridsGiveZeroShift) {
  const RasterGrid a = sample_surface(testsupport::square_geometry(64), 0, 0, 0);
  const AlignmentResult r = align(a, a);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.dx, 0.0, 1e-6);
  EXPECT_NEAR(r.dy, 0.0, 1e-6);
  EXPECT_NEAR(r.dz, 0.0, 1e-9);
  EXPECT_NEAR(r.rmse_inliers, 0.0, 1e-9);
}

TEST(Align, RecoversSubCellShift) {
  const GridGeometry g = testsupport::square_geometry(80);
  const RasterGrid reference = sample_surface(g, 0, 0, 0);
  const RasterGrid moving = sample_surface(g, 2.3, -1.7, 0.4);
  const AlignmentResult r = align(moving, reference);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.dx, 2.3, 0.1);
  EXPECT_NEAR(r.dy, -1.7, 0.1);
  EXPECT_NEAR(r.dz, 0.4, 0.01);
  EXPECT_LT(r.rmse_inliers, 0.05);
}

TEST(Align, RecoversShiftDespiteBlunders) {
  const GridGeometry g = testsupport::square_geometry(80);
  RasterGrid reference = sample_surface(g, 0, 0, 0);
  const RasterGrid moving = sample_surface(g, 2.3, -1.7, 0.4);
  SeededStream pick(11, 99);
  std::size_t n_blunders = 0;
  for (double& v : reference.values()) {
    if (pick.uniform() < 0.05) {
      v += 20.0;
      ++n_blunders;
    }
  }
  ASSERT_GT(n_blunders, 0u);
  const AlignmentResult r = align(moving, reference);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.dx, 2.3, 0.1);
  EXPECT_NEAR(r.dy, -1.7, 0.1);
  EXPECT_NEAR(r.dz, 0.4, 0.01);
  EXPECT_LT(r.n_inliers, r.n_total);
  EXPECT_GT(r.rmse_all, r.rmse_inliers);
}

TEST(Align, WorldUnitsFollowCellSize) {
  const GridGeometry g{100.0, 200.0, 0.5, 80, 80};
  auto surf = [&](double dx, double dy) {
    RasterGrid out(g, 0.0);
    for (int r = 0; r < g.n_rows; ++r) {
      for (int c = 0; c < g.n_cols; ++c) {
        const WorldPoint p = cell_center(g, {c, r});
        out.at(c, r) = hill(2.0 * (p.x - 100.0 - dx), 2.0 * (p.y - 200.0 - dy));
      }
    }
    return out;
  };
  const AlignmentResult r = align(surf(0.6, 0.45), surf(0, 0));
  EXPECT_NEAR(r.dx, 0.6, 0.05);
  EXPECT_NEAR(r.dy, 0.45, 0.05);
}

TEST(Align, TranslationEquivariance) {
  const GridGeometry g = testsupport::square_geometry(80);
  const RasterGrid reference = sample_surface(g, 0, 0, 0);
  const RasterGrid moving = sample_surface(g, 1.2, 0.8, 0.0);
  const AlignmentResult base = align(moving, reference);
  for (int k = 0; k < 5; ++k) {
    const double tx = 0.3 * k - 0.6, ty = -0.25 * k + 0.5;
    const RasterGrid shifted = sample_surface(g, 1.2 + tx, 0.8 + ty, 0.0);
    const AlignmentResult r = align(shifted, reference);
    EXPECT_NEAR(r.dx - base.dx, tx, 0.1);
    EXPECT_NEAR(r.dy - base.dy, ty, 0.1);
  }
}

TEST(Align, InsufficientOverlapThrows) {
  const GridGeometry g = testsupport::square_geometry(64);
  RasterGrid a = sample_surface(g, 0, 0, 0);
  RasterGrid b(g);  // all nodata
  for (int c = 0; c < 5; ++c) b.at(c, 0) = a.at(c, 0);
  EXPECT_THROW(align(a, b), InsufficientOverlapError);
}

TEST(Align, FlatSurfaceKeepsCoarseShift) {
  const GridGeometry g = testsupport::square_geometry(40);
  const RasterGrid a(g, 5.0), b(g, 3.5);
  const AlignmentResult r = align(a, b);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.dx, 0.0);
  EXPECT_EQ(r.dy, 0.0);
  EXPECT_NEAR(r.dz, 1.5, 1e-12);
}

TEST(Align, JobsDoNotChangeResult) {
  const GridGeometry g = testsupport::square_geometry(80);
  const RasterGrid reference = sample_surface(g, 0, 0, 0);
  const RasterGrid moving = sample_surface(g, -0.7, 1.9, 0.2);
  AlignConfig one, four;
  one.jobs = 1;
  four.jobs = 4;
  const AlignmentResult a = align(moving, reference, one);
  const AlignmentResult b = align(moving, reference, four);
  EXPECT_EQ(a.dx, b.dx);
  EXPECT_EQ(a.dy, b.dy);
  EXPECT_EQ(a.dz, b.dz);
  EXPECT_EQ(a.rmse_all, b.rmse_all);
}

TEST(Rmse, Examples) {
  const GridGeometry g = testsupport::square_geometry(4);
  const RasterGrid zero(g, 0.0), one(g, 1.0);
  EXPECT_EQ(rmse(zero, zero, true).rmse, 0.0);
  EXPECT_DOUBLE_EQ(rmse(one, zero, true).rmse, 1.0);

  const GridGeometry g2{0, 0, 1, 2, 1};
  const RasterGrid a(g2, std::vector<double>{1.0, 2.0});
  const RasterGrid b(g2, std::vector<double>{2.0, 5.0});
  // sqrt((1 + 9) / 2)
  EXPECT_NEAR(rmse(a, b, true).rmse, 2.2360679775, 1e-10);
  EXPECT_EQ(rmse(a, b, true).count, 2u);
}

TEST(Rmse, BlunderExclusionAndNodata) {
  const GridGeometry g{0, 0, 1, 3, 1};
  const RasterGrid a(g, std::vector<double>{0.0, 0.0, 0.0});
  const RasterGrid b(g, std::vector<double>{1.0, 50.0, kDefaultNodata});
  const RmseResult all = rmse(a, b, true);
  EXPECT_EQ(all.count, 2u);
  EXPECT_NEAR(all.rmse, std::sqrt((1.0 + 2500.0) / 2.0), 1e-12);
  const RmseResult in = rmse(a, b, false, 6.0);
  EXPECT_EQ(in.count, 1u);
  EXPECT_DOUBLE_EQ(in.rmse, 1.0);
}

TEST(Rmse, SymmetricProperty) {
  const GridGeometry g = testsupport::square_geometry(16);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SeededStream s(seed, 7);
    RasterGrid a(g, 0.0), b(g, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.values()[i] = 10.0 * s.normal();
      b.values()[i] = s.uniform() < 0.1 ? kDefaultNodata : 10.0 * s.normal();
    }
    EXPECT_EQ(rmse(a, b, true).rmse, rmse(b, a, true).rmse);
    EXPECT_EQ(rmse(a, b, false).rmse, rmse(b, a, false).rmse);
  }
}

TEST(Rmse, GeometryMismatchAndEmptyOverlap) {
  const RasterGrid a(testsupport::square_geometry(4), 0.0);
  const RasterGrid b(testsupport::square_geometry(5), 0.0);
  EXPECT_THROW(rmse(a, b, true), GeometryMismatchError);
  const RasterGrid c(testsupport::square_geometry(4));
  EXPECT_THROW(rmse(a, c, true), InsufficientOverlapError);
}
