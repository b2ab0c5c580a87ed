// SPDX-License-Identifier: Apache-2.0

// Asynchronous timestamp counters.
//
// An AT holds a value in [0, 2k]. 2k means inactive; any other value is the
// clock reading of its block at the last slice the counter was set. A block
// clock (ACT) runs over [0, 2k) and advances once per slice, so the age of a
// set counter is (act - value) mod 2k. Ages up to 2k - 1 are unambiguous; the
// preserve step retires every value that could alias, and because blocks run
// staggered clocks it only needs to visit a block twice per 2k slices.

#pragma once

#include <bit>
#include <cstdint>
#include <string>

#include "superpoint/error.hpp"

namespace superpoint {

using AtValue = uint32_t;

class AtWindow {
 public:
  explicit AtWindow(uint32_t k) : k_(k) {
    if (k == 0 || k > (1u << 30)) {
      throw ParameterError("window capacity k must be in [1, 2^30], got " +
                           std::to_string(k));
    }
  }

  uint32_t k() const { return k_; }
  /// Number of distinct clock values, 2k.
  uint32_t period() const { return 2 * k_; }
  /// Bits needed to store one AT: ceil(log2(2k + 1)).
  uint32_t bits() const { return std::bit_width(2 * k_); }

  AtValue init_at() const { return 2 * k_; }

  AtValue set_at(uint32_t act) const {
    check_clock(act);
    return act;
  }

  /// True iff `at` was set within the latest k_prime slices, the current
  /// slice included.
  bool check_at(AtValue at, uint32_t act, uint32_t k_prime) const {
    check_window(k_prime);
    check_clock(act);
    return is_active(at, act, k_prime);
  }

  /// Unchecked variant of check_at for hot loops.
  bool is_active(AtValue at, uint32_t act, uint32_t k_prime) const {
    if (at == 2 * k_) {
      return false;
    }
    return age(at, act) <= k_prime - 1;
  }

  /// Retires values whose age may exceed k. Only acts when act is 0 or k.
  AtValue preserve_at(AtValue at, uint32_t act) const {
    if (act % k_ != 0) {
      return at;
    }
    if (act == 0 && at <= k_) {
      return 2 * k_;
    }
    if (act == k_ && ((at >= k_ && at <= 2 * k_ - 1) || at == 0)) {
      return 2 * k_;
    }
    return at;
  }

  /// (act + 2k - at) mod 2k; meaningless for the inactive value.
  uint32_t age(AtValue at, uint32_t act) const {
    return (act + 2 * k_ - at) % (2 * k_);
  }

  void check_window(uint32_t k_prime) const {
    if (k_prime < 1 || k_prime > k_) {
      throw ParameterError("k' must be in [1, " + std::to_string(k_) +
                           "], got " + std::to_string(k_prime));
    }
  }

  void check_clock(uint32_t act) const {
    if (act >= 2 * k_) {
      throw ParameterError("clock value " + std::to_string(act) +
                           " outside [0, " + std::to_string(2 * k_ - 1) + "]");
    }
  }

 private:
  uint32_t k_;
};

}  // namespace superpoint
