// SPDX-License-Identifier: Apache-2.0

// Asynchronous timestamp vector (ATV): g AT counters split into 2k blocks.
// Every block has its own clock, (C0 + block) mod 2k, so at each slice
// boundary only the two blocks whose clock has just become 0 or k need a
// preserve pass.
//
// Storage layout. Counters are packed at ceil(log2(2k + 1)) bits into 64-bit
// words without straddling: counter i lives in word i / per_word at bit
// offset (i % per_word) * bits, little-endian within the word, counter index
// ascending. The stored code is 0 for the inactive value 2k and value + 1
// otherwise, so an all-zero buffer is an all-inactive vector.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "superpoint/at_counter.hpp"

namespace superpoint {

/// Clock of block 0, shared by every vector that slides together.
struct BaseClock {
  uint32_t c0 = 0;
  /// Absolute slice index; diagnostics and persistence only.
  uint64_t slice = 0;

  void advance(const AtWindow& window) {
    c0 = (c0 + 1) % window.period();
    ++slice;
  }

  bool operator==(const BaseClock&) const = default;
};

class AtvLayout {
 public:
  /// Requires g >= 2k so that every block holds at least one counter.
  AtvLayout(uint32_t g, uint32_t k);

  uint32_t g() const { return g_; }
  const AtWindow& window() const { return window_; }
  uint32_t blocks() const { return window_.period(); }
  /// Size a of each of the first 2k - 1 blocks.
  uint32_t block_size() const { return a_; }
  /// Size b of the last block; a * (2k - 1) + b == g.
  uint32_t tail_size() const { return b_; }

  uint32_t block_of(uint32_t index) const {
    return std::min(index / a_, blocks() - 1);
  }
  uint32_t block_begin(uint32_t block) const { return block * a_; }
  uint32_t block_end(uint32_t block) const {
    return block + 1 == blocks() ? g_ : (block + 1) * a_;
  }
  uint32_t block_clock(uint32_t block, uint32_t c0) const {
    return (c0 + block) % blocks();
  }
  uint32_t block_with_clock(uint32_t clock, uint32_t c0) const {
    return (clock + blocks() - c0) % blocks();
  }
  uint32_t clock_of(uint32_t index, uint32_t c0) const {
    return block_clock(block_of(index), c0);
  }

  /// Counters a slide examines when the new base clock is c0.
  uint32_t preserve_cost(uint32_t c0) const;

  uint32_t field_bits() const { return bits_; }
  uint32_t per_word() const { return per_word_; }
  std::size_t words() const { return words_; }

  uint64_t encode(AtValue v) const {
    return v == window_.init_at() ? 0 : uint64_t{v} + 1;
  }
  AtValue decode(uint64_t code) const {
    return code == 0 ? window_.init_at() : static_cast<AtValue>(code - 1);
  }

  AtValue load(const uint64_t* words, uint32_t i) const {
    return decode((words[i / per_word_] >> shift(i)) & mask_);
  }
  void store(uint64_t* words, uint32_t i, AtValue v) const {
    uint64_t& w = words[i / per_word_];
    w = (w & ~(mask_ << shift(i))) | (encode(v) << shift(i));
  }
  /// Atomically stores v and returns the previous value. Safe against
  /// concurrent writers of neighbouring counters in the same word.
  AtValue exchange_shared(uint64_t* words, uint32_t i, AtValue v) const;

 private:
  uint32_t shift(uint32_t i) const { return (i % per_word_) * bits_; }

  uint32_t g_;
  AtWindow window_;
  uint32_t a_;
  uint32_t b_;
  uint32_t bits_;
  uint32_t per_word_;
  std::size_t words_;
  uint64_t mask_;
};

/// Non-owning handle on one packed vector. Word is uint64_t or const uint64_t.
template <typename Word>
class BasicAtvRef {
  static constexpr bool kMutable = !std::is_const_v<Word>;

 public:
  BasicAtvRef(const AtvLayout& layout, std::span<Word> words)
      : layout_(&layout), words_(words) {}

  template <typename Other>
    requires(std::is_const_v<Word> && !std::is_const_v<Other>)
  BasicAtvRef(BasicAtvRef<Other> other)  // NOLINT(google-explicit-constructor)
      : layout_(&other.layout()), words_(other.words()) {}

  const AtvLayout& layout() const { return *layout_; }
  std::span<Word> words() const { return words_; }

  AtValue at(uint32_t index) const { return layout_->load(words_.data(), index); }

  bool active(uint32_t index, const BaseClock& clock, uint32_t k_prime) const {
    return layout_->window().is_active(at(index),
                                       layout_->clock_of(index, clock.c0),
                                       k_prime);
  }

  /// Sets counter `index` to its block clock. Returns the previous value.
  AtValue touch(uint32_t index, const BaseClock& clock) const
    requires kMutable;
  /// As touch, but atomic with respect to other touch_shared callers.
  AtValue touch_shared(uint32_t index, const BaseClock& clock) const
    requires kMutable;
  /// Preserve pass for a freshly advanced clock. Returns counters examined.
  uint32_t slide(const BaseClock& clock) const
    requires kMutable;

  /// |ATV|^{k'}: number of counters active in the latest k' slices.
  uint32_t weight(const BaseClock& clock, uint32_t k_prime) const;

 private:
  const AtvLayout* layout_;
  std::span<Word> words_;
};

using AtvRef = BasicAtvRef<uint64_t>;
using AtvView = BasicAtvRef<const uint64_t>;

/// A standalone vector that owns its storage.
class AtVector {
 public:
  AtVector(uint32_t g, uint32_t k);

  const AtvLayout& layout() const { return layout_; }
  uint32_t g() const { return layout_.g(); }
  AtValue at(uint32_t index) const { return view().at(index); }

  void touch(uint32_t index, const BaseClock& clock);
  uint32_t slide(const BaseClock& clock);
  uint32_t weight(const BaseClock& clock, uint32_t k_prime) const;

  /// Total counters examined by all slides so far.
  uint64_t examined() const { return examined_; }

  AtvRef ref() { return {layout_, words_}; }
  AtvView view() const { return {layout_, std::span<const uint64_t>(words_)}; }

 private:
  AtvLayout layout_;
  std::vector<uint64_t> words_;
  uint64_t examined_ = 0;
};

/// Linear-counting estimate -g * ln((g - w) / g). Throws SaturatedError when
/// w == g and ParameterError when w > g.
double estimate_cardinality(uint32_t weight, uint32_t g);

/// Weight an estimator reaches at cardinality theta: g * (1 - e^{-theta/g}).
inline double weight_threshold(double theta, uint32_t g) {
  return -double(g) * std::expm1(-theta / double(g));
}

}  // namespace superpoint
