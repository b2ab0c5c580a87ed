// SPDX-License-Identifier: Apache-2.0

// The estimator cube: 2^c columns x r rows x 2^u frames of ATVs sharing one
// base clock. Each host writes one counter (chosen by its peer's hash) in r
// vectors selected by its reversible digest.
//
// Phases. Between ticks the slice is open: any number of threads may call
// scan_pair, each with its own shard id. tick, the queries and detect need
// exclusive access. Handing the cube to another thread between phases is fine
// as long as the handoff itself synchronizes (join, mutex, ...).
//
// Tracked window. For one window length K' (default k) the cube keeps an exact
// per-vector active count, so weights for K' cost O(1). A per-slice log of
// counters that changed value tells tick which counters leave the K' window.
// Weights for any other k' are computed by scanning the counters.

#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <iosfwd>
#include <memory>
#include <vector>

#include "superpoint/atv.hpp"
#include "superpoint/rrh.hpp"

namespace superpoint {

struct CubeConfig {
  uint32_t g = 4096;
  uint32_t k = 300;
  double theta = 1024;
  /// Window length with O(1) weights; 0 means k.
  uint32_t tracked_window = 0;
  /// Maximum candidate column tuples per frame before restore gives up.
  uint64_t candidate_cap = 1'000'000;
  /// Number of independent scan_pair callers.
  uint32_t scan_shards = 1;
};

struct SuperPointReport {
  uint32_t ip = 0;
  /// Bias-corrected cardinality; +inf when saturated.
  double estimate = 0;
  bool saturated = false;
  uint64_t window_end_slice = 0;
  uint32_t k_prime = 0;

  bool operator==(const SuperPointReport&) const = default;
};

/// -g * ln((g - nat) / (g * (1 - up))). Throws SaturatedError when nat == g
/// and OverloadError when up >= 1 - 1e-9.
double corrected_estimate(uint32_t nat, uint32_t g, double up);

class Cube {
 public:
  static constexpr uint32_t kMaxRows = 32;
  static constexpr uint32_t kMaxColumnBits = 24;

  Cube(const CubeConfig& config, const RrhParams& params);

  Cube(Cube&&) noexcept = default;
  Cube& operator=(Cube&&) noexcept = default;

  const CubeConfig& config() const { return config_; }
  const Rrh& rrh() const { return rrh_; }
  const AtvLayout& layout() const { return layout_; }
  const BaseClock& clock() const { return clock_; }
  uint32_t tracked_window() const { return tracked_; }

  uint64_t vector_count() const { return vectors_; }
  uint64_t vector_id(uint32_t column, uint32_t row, uint32_t frame) const {
    return ((uint64_t{frame} * rrh_.rows() + row) << rrh_.params().c) | column;
  }
  AtvView vector(uint32_t column, uint32_t row, uint32_t frame) const;

  /// Sets counter bh(bip) in each of aip's r vectors. Concurrent callers
  /// must pass distinct shard ids below config().scan_shards.
  void scan_pair(uint32_t aip, uint32_t bip, uint32_t shard = 0);

  /// Closes the current slice. Returns the counters examined by the preserve
  /// passes, which always equals preserve_cost() evaluated after the advance.
  uint64_t tick();
  /// Counters the preserve passes visit for the current base clock.
  uint64_t preserve_cost() const;

  uint32_t weight(uint32_t column, uint32_t row, uint32_t frame,
                  uint32_t k_prime) const;
  /// Columns of (row, frame) whose weight reaches g * (1 - e^{-theta/g}).
  std::vector<uint32_t> super_atvs(uint32_t row, uint32_t frame,
                                   uint32_t k_prime) const;
  /// Hosts whose column tuples pass the duplicate-position check, sorted.
  std::vector<uint32_t> restore_candidates(uint32_t k_prime) const;

  /// Counter indices active in all r vectors of aip.
  uint32_t nat(uint32_t aip, uint32_t k_prime) const;
  /// Fraction of active counters over the 2^c vectors of (row, frame).
  double row_set_probability(uint32_t row, uint32_t frame,
                             uint32_t k_prime) const;
  /// Product of row_set_probability over the rows of a frame.
  double frame_set_probability(uint32_t frame, uint32_t k_prime) const;

  double estimate_superpoint(uint32_t aip, uint32_t k_prime) const;
  /// Estimate on nat without bias correction.
  double estimate_uncorrected(uint32_t aip, uint32_t k_prime) const;

  /// Candidates whose corrected estimate reaches theta, sorted by address.
  std::vector<SuperPointReport> detect(uint32_t k_prime) const;

  /// Binary snapshot: header, parameters, clock and packed counter words.
  void save(std::ostream& out) const;
  /// Rejects snapshots whose (g, k, c, r, u, s) differ from the expected
  /// configuration. Seeds and clock come from the snapshot.
  static Cube load(std::istream& in, const CubeConfig& config,
                   const RrhParams& expected);

 private:
  struct Touch {
    uint32_t vector;
    uint32_t index;
  };
  struct FreeDeleter {
    void operator()(uint64_t* p) const { std::free(p); }
  };

  uint64_t* words_of(uint64_t id) { return words_.get() + id * stride_; }
  const uint64_t* words_of(uint64_t id) const {
    return words_.get() + id * stride_;
  }
  AtvRef mutable_vector(uint64_t id) {
    return {layout_, std::span<uint64_t>(words_of(id), stride_)};
  }
  AtvView vector_view(uint64_t id) const {
    return {layout_, std::span<const uint64_t>(words_of(id), stride_)};
  }
  uint32_t weight_of(uint64_t id, uint32_t k_prime) const;
  void rebuild_tracking();

  CubeConfig config_;
  Rrh rrh_;
  AtvLayout layout_;
  uint32_t tracked_;
  uint64_t vectors_;
  std::size_t stride_;
  std::unique_ptr<uint64_t[], FreeDeleter> words_;
  BaseClock clock_;
  std::vector<uint32_t> active_;
  std::vector<std::vector<Touch>> expiry_;
  std::vector<std::vector<Touch>> shard_log_;
};

}  // namespace superpoint
