#include "superpoint/atv.hpp"

#include "superpoint/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace superpoint;

TEST(AtvLayout, RequiresOneCounterPerBlock) {
  EXPECT_THROW(AtvLayout(599, 300), ParameterError);
  EXPECT_NO_THROW(AtvLayout(600, 300));
}

TEST(AtvLayout, BlocksPartitionTheVector) {
  for (auto [g, k] : {std::pair{4096u, 300u}, {1024u, 300u}, {1200u, 300u},
                      {10u, 2u}, {7u, 1u}}) {
    AtvLayout l(g, k);
    EXPECT_EQ(l.block_size() * (l.blocks() - 1) + l.tail_size(), g);
    EXPECT_GE(l.tail_size(), l.block_size());
    uint32_t covered = 0;
    for (uint32_t b = 0; b < l.blocks(); ++b) {
      covered += l.block_end(b) - l.block_begin(b);
      for (uint32_t i = l.block_begin(b); i < l.block_end(b); ++i) {
        ASSERT_EQ(l.block_of(i), b);
      }
    }
    EXPECT_EQ(covered, g);
  }
}

TEST(AtvLayout, PaperSizing) {
  AtvLayout l(4096, 300);
  EXPECT_EQ(l.block_size(), 6u);
  EXPECT_EQ(l.tail_size(), 502u);
  EXPECT_EQ(l.field_bits(), 10u);
  EXPECT_EQ(l.per_word(), 6u);
  EXPECT_EQ(l.words(), 683u);
}

TEST(AtvLayout, PackingRoundTrips) {
  AtvLayout l(1000, 9);
  std::vector<uint64_t> words(l.words());
  std::mt19937 rng(3);
  std::vector<AtValue> ref(1000, l.window().init_at());
  for (int i = 0; i < 20000; ++i) {
    const uint32_t idx = rng() % 1000;
    const AtValue v = rng() % 19;
    l.store(words.data(), idx, v);
    ref[idx] = v;
  }
  for (uint32_t i = 0; i < 1000; ++i) {
    ASSERT_EQ(l.load(words.data(), i), ref[i]);
  }
}

TEST(AtvLayout, ZeroBufferIsInactive) {
  AtvLayout l(64, 4);
  std::vector<uint64_t> words(l.words());
  for (uint32_t i = 0; i < 64; ++i) {
    EXPECT_EQ(l.load(words.data(), i), 8u);
  }
}

TEST(AtVector, TouchStoresBlockClock) {
  AtVector v(1200, 300);
  BaseClock clock{7, 0};
  v.touch(3, clock);
  EXPECT_EQ(v.layout().block_of(3), 1u);
  EXPECT_EQ(v.at(3), 8u);
  EXPECT_THROW(v.touch(1200, clock), ParameterError);
}

TEST(AtVector, WeightCountsRecentTouches) {
  AtVector v(600, 10);
  BaseClock clock;
  const AtWindow& w = v.layout().window();
  for (uint32_t s = 0; s < 10; ++s) {
    v.touch(s * 50, clock);
    v.touch(s * 50 + 1, clock);
    EXPECT_EQ(v.weight(clock, 1), 2u);
    EXPECT_EQ(v.weight(clock, 10), 2 * (s + 1));
    clock.advance(w);
    v.slide(clock);
  }
  EXPECT_EQ(v.weight(clock, 10), 18u);
  EXPECT_EQ(v.weight(clock, 1), 0u);
  for (int s = 0; s < 10; ++s) {
    clock.advance(w);
    v.slide(clock);
  }
  EXPECT_EQ(v.weight(clock, 10), 0u);
}

TEST(AtVector, SlideExaminesTwoBlocks) {
  AtVector v(4096, 300);
  BaseClock clock;
  const AtvLayout& l = v.layout();
  for (int s = 0; s < 1200; ++s) {
    clock.advance(l.window());
    const uint32_t examined = v.slide(clock);
    const uint32_t b0 = l.block_with_clock(0, clock.c0);
    const uint32_t bk = l.block_with_clock(300, clock.c0);
    const uint32_t expect = (l.block_end(b0) - l.block_begin(b0)) +
                            (l.block_end(bk) - l.block_begin(bk));
    ASSERT_EQ(examined, expect);
    ASSERT_EQ(examined, l.preserve_cost(clock.c0));
  }
}

// Random touches against a last-touch table, all windows, many wraps.
TEST(AtVector, MatchesLastTouchTable) {
  std::mt19937_64 rng(11);
  const uint32_t g = 64;
  const uint32_t k = 5;
  AtVector v(g, k);
  BaseClock clock{3, 0};
  std::vector<int64_t> last(g, -1);
  for (int64_t slice = 0; slice < 400; ++slice) {
    for (int t = 0; t < 6; ++t) {
      const uint32_t i = rng() % g;
      v.touch(i, clock);
      last[i] = slice;
    }
    for (uint32_t kp = 1; kp <= k; ++kp) {
      uint32_t expect = 0;
      for (uint32_t i = 0; i < g; ++i) {
        expect += last[i] >= 0 && slice - last[i] <= kp - 1;
      }
      ASSERT_EQ(v.weight(clock, kp), expect) << slice << ' ' << kp;
    }
    clock.advance(v.layout().window());
    v.slide(clock);
  }
}

TEST(Estimator, LinearCountingValues) {
  EXPECT_NEAR(estimate_cardinality(2, 8), 2.301456579614247, 1e-12);
  EXPECT_NEAR(estimate_cardinality(906, 4096), 1023.9589209720974, 1e-9);
  EXPECT_EQ(estimate_cardinality(0, 4096), 0.0);
  EXPECT_THROW(estimate_cardinality(4096, 4096), SaturatedError);
  EXPECT_THROW(estimate_cardinality(4097, 4096), ParameterError);
}

TEST(Estimator, ThresholdValues) {
  EXPECT_NEAR(weight_threshold(1024, 4096), 906.0319925395256, 1e-9);
  EXPECT_NEAR(weight_threshold(1024, 1024), 647.291452240443, 1e-9);
}
