// SPDX-License-Identifier: Apache-2.0

// Exact reference counts. Nothing here shares hashing or storage with the
// sketch; memory grows with the number of distinct pairs in the window.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "superpoint/trace.hpp"

namespace superpoint {

struct WindowTruth {
  uint64_t end_slice = 0;
  uint32_t k_prime = 0;
  /// host -> distinct peers seen in slices end - k' + 1 .. end.
  std::map<uint32_t, uint64_t> counts;
};

struct DetectionMetrics {
  double fpr = 0;
  double fnr = 0;
  double tfr = 0;
  uint64_t n = 0;
  uint64_t n_plus = 0;
  uint64_t n_minus = 0;
};

/// Brute force over a slice-sorted trace using explicit per-host peer sets.
WindowTruth exact_cardinalities(std::span<const PairEvent> trace,
                                uint64_t end_slice, uint32_t k_prime);

/// Hosts with cardinality >= theta, ascending.
std::vector<uint32_t> exact_superpoints(const WindowTruth& truth, double theta);

/// Both sets ascending. nullopt when truth_supers is empty (ratios undefined).
std::optional<DetectionMetrics> metrics(std::span<const uint32_t> detected,
                                        std::span<const uint32_t> truth_supers);

void write_truth_header(std::ostream& out);
/// Rows end_slice,ip,exact_count for hosts with count >= min_count.
void write_truth(std::ostream& out, const WindowTruth& truth,
                 uint64_t min_count = 1);

/// Incremental exact counts over a window of k' slices ending at the current
/// slice. Same results as exact_cardinalities, one pass over the trace.
class SlidingOracle {
 public:
  explicit SlidingOracle(uint32_t k_prime);

  uint32_t k_prime() const { return k_prime_; }
  uint64_t current_slice() const { return slice_; }

  void add(uint32_t aip, uint32_t bip);
  /// Closes the current slice.
  void advance();

  uint64_t cardinality(uint32_t host) const;
  WindowTruth truth() const;
  std::vector<uint32_t> superpoints(double theta) const;

 private:
  uint32_t k_prime_;
  uint64_t slice_ = 0;
  std::unordered_map<uint64_t, uint64_t> last_seen_;
  std::unordered_map<uint32_t, uint64_t> counts_;
  std::vector<std::vector<uint64_t>> seen_in_;
};

}  // namespace superpoint
