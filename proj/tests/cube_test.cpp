#include "superpoint/cube.hpp"

#include "superpoint/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <thread>

using namespace superpoint;

namespace {

CubeConfig small_config(uint32_t tracked = 0) {
  CubeConfig c;
  c.g = 512;
  c.k = 8;
  c.theta = 150;
  c.tracked_window = tracked;
  return c;
}

RrhParams small_params() { return RrhParams::from_seed(9, 8, 4, 8, 2); }

std::string snapshot(const Cube& cube) {
  std::ostringstream out;
  cube.save(out);
  return out.str();
}

// Feeds `slices` slices: one heavy host plus light background noise.
void feed(Cube& cube, uint32_t host, uint32_t per_slice, int slices,
          uint32_t seed) {
  std::mt19937 rng(seed);
  for (int s = 0; s < slices; ++s) {
    for (uint32_t i = 0; i < per_slice; ++i) {
      cube.scan_pair(host, rng());
    }
    for (int i = 0; i < 40; ++i) {
      cube.scan_pair(rng(), rng());
    }
    cube.tick();
  }
}

}  // namespace

TEST(Cube, CorrectedEstimate) {
  EXPECT_NEAR(corrected_estimate(906, 4096, 0.1), 592.402248837641, 1e-9);
  EXPECT_NEAR(corrected_estimate(906, 4096, 0.0), 1023.9589209720974, 1e-9);
  EXPECT_THROW(corrected_estimate(4096, 4096, 0.1), SaturatedError);
  EXPECT_THROW(corrected_estimate(10, 4096, 1.0), OverloadError);
}

TEST(Cube, PaperConfigurationConstructs) {
  CubeConfig c;
  Cube cube(c, RrhParams::from_seed(1, 14, 4, 6, 4));
  EXPECT_EQ(cube.vector_count(), 1u << 20);
  EXPECT_EQ(cube.tracked_window(), 300u);
}

TEST(Cube, RejectsBadConfiguration) {
  CubeConfig c = small_config(9);
  EXPECT_THROW(Cube(c, small_params()), ParameterError);
  c = small_config();
  c.scan_shards = 0;
  EXPECT_THROW(Cube(c, small_params()), ParameterError);
  EXPECT_THROW(Cube(small_config(), RrhParams::from_seed(1, 4, 2, 4, 3)),
               ParameterError);
}

TEST(Cube, EmptyCubeReportsNothing) {
  Cube cube(small_config(), small_params());
  EXPECT_TRUE(cube.detect(8).empty());
  EXPECT_EQ(cube.frame_set_probability(0, 8), 0.0);
}

TEST(Cube, DetectsAndEstimatesAHeavyHost) {
  Cube cube(small_config(), small_params());
  const uint32_t host = 0xC0A80164;
  feed(cube, host, 40, 8, 1);
  const auto reports = cube.detect(8);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].ip, host);
  EXPECT_EQ(reports[0].window_end_slice, 8u);
  EXPECT_NEAR(reports[0].estimate, 320, 320 * 0.15);
  EXPECT_FALSE(reports[0].saturated);
}

TEST(Cube, HostLeavesAfterTheWindow) {
  Cube cube(small_config(), small_params());
  const uint32_t host = 0x0A0B0C0D;
  feed(cube, host, 40, 8, 2);
  EXPECT_EQ(cube.detect(8).size(), 1u);
  EXPECT_TRUE(cube.detect(2).empty());
  feed(cube, host, 0, 8, 3);
  EXPECT_TRUE(cube.detect(8).empty());
  EXPECT_EQ(cube.nat(host, 8), 0u);
}

TEST(Cube, TickCostMatchesClosedForm) {
  Cube cube(small_config(), small_params());
  std::mt19937 rng(4);
  for (int s = 0; s < 50; ++s) {
    for (int i = 0; i < 100; ++i) {
      cube.scan_pair(rng(), rng());
    }
    const uint64_t examined = cube.tick();
    ASSERT_EQ(examined, cube.preserve_cost());
  }
}

// Tracked counts must equal a full scan of the counters.
TEST(Cube, TrackedWeightsMatchScans) {
  for (uint32_t tracked : {1u, 3u, 8u}) {
    Cube cube(small_config(tracked), small_params());
    std::mt19937 rng(tracked);
    std::vector<uint32_t> hosts(30);
    for (auto& h : hosts) {
      h = rng();
    }
    for (int s = 0; s < 60; ++s) {
      const int n = rng() % 400;
      for (int i = 0; i < n; ++i) {
        cube.scan_pair(hosts[rng() % hosts.size()], rng() % 2000);
      }
      cube.tick();
      for (uint32_t frame = 0; frame < 4; ++frame) {
        for (uint32_t row = 0; row < 4; ++row) {
          std::vector<uint32_t> expect;
          const double threshold = weight_threshold(150, 512);
          uint64_t active = 0;
          for (uint32_t x = 0; x < 256; ++x) {
            const uint32_t w = cube.weight(x, row, frame, tracked);
            active += w;
            if (w >= threshold) {
              expect.push_back(x);
            }
          }
          ASSERT_EQ(cube.super_atvs(row, frame, tracked), expect);
          ASSERT_DOUBLE_EQ(cube.row_set_probability(row, frame, tracked),
                           double(active) / (512.0 * 256));
        }
      }
    }
  }
}

TEST(Cube, SaturatedHostReportsInfinity) {
  CubeConfig c = small_config();
  c.g = 16;
  c.k = 2;
  c.theta = 8;
  Cube cube(c, small_params());
  for (uint32_t b = 0; b < 5000; ++b) {
    cube.scan_pair(77, b);
  }
  const auto reports = cube.detect(2);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_TRUE(reports[0].saturated);
  EXPECT_TRUE(std::isinf(reports[0].estimate));
}

TEST(Cube, FrameOverflow) {
  CubeConfig c = small_config();
  c.candidate_cap = 1;
  Cube cube(c, small_params());
  std::mt19937 rng(5);
  for (uint32_t h = 0; h < 40; ++h) {
    for (int i = 0; i < 400; ++i) {
      cube.scan_pair(h * 977, rng());
    }
  }
  try {
    cube.detect(8);
    FAIL() << "expected overflow";
  } catch (const FrameOverflowError& e) {
    EXPECT_GT(e.tuples(), 1u);
    EXPECT_LT(e.frame(), 4u);
  }
}

TEST(Cube, ShardedScansMatchSerial) {
  CubeConfig c = small_config();
  c.scan_shards = 4;
  Cube serial(c, small_params());
  Cube parallel(c, small_params());
  std::mt19937 rng(6);
  std::vector<std::pair<uint32_t, uint32_t>> pairs(20000);
  for (auto& p : pairs) {
    p = {rng() % 64, rng()};
  }
  for (int s = 0; s < 10; ++s) {
    for (const auto& [a, b] : pairs) {
      serial.scan_pair(a, b);
    }
    std::vector<std::thread> threads;
    for (uint32_t t = 0; t < 4; ++t) {
      threads.emplace_back([&, t] {
        for (std::size_t i = t; i < pairs.size(); i += 4) {
          parallel.scan_pair(pairs[i].first, pairs[i].second, t);
        }
      });
    }
    for (auto& th : threads) {
      th.join();
    }
    ASSERT_EQ(snapshot(serial), snapshot(parallel));
    ASSERT_EQ(serial.detect(8), parallel.detect(8));
    serial.tick();
    parallel.tick();
  }
}

TEST(Cube, SnapshotRoundTrip) {
  Cube cube(small_config(), small_params());
  feed(cube, 0x01020304, 40, 5, 7);
  const std::string bytes = snapshot(cube);
  std::istringstream in(bytes);
  Cube loaded = Cube::load(in, small_config(), small_params());
  EXPECT_EQ(snapshot(loaded), bytes);
  EXPECT_EQ(loaded.clock(), cube.clock());
  EXPECT_EQ(loaded.detect(5), cube.detect(5));

  // Both keep sliding identically.
  feed(cube, 0x01020304, 40, 6, 8);
  feed(loaded, 0x01020304, 40, 6, 8);
  EXPECT_EQ(snapshot(loaded), snapshot(cube));
  EXPECT_EQ(loaded.detect(8), cube.detect(8));
}

TEST(Cube, SnapshotRejectsMismatch) {
  Cube cube(small_config(), small_params());
  const std::string bytes = snapshot(cube);
  {
    std::istringstream in(bytes);
    CubeConfig other = small_config();
    other.g = 1024;
    EXPECT_THROW(Cube::load(in, other, small_params()), SnapshotError);
  }
  {
    std::istringstream in(bytes);
    EXPECT_THROW(Cube::load(in, small_config(), RrhParams::from_seed(9, 8, 4, 7, 2)),
                 SnapshotError);
  }
  {
    std::istringstream in("ATVX");
    EXPECT_THROW(Cube::load(in, small_config(), small_params()), SnapshotError);
  }
  {
    std::istringstream in(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(Cube::load(in, small_config(), small_params()), SnapshotError);
  }
}
