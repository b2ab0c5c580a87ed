// SPDX-License-Identifier: Apache-2.0

#include "superpoint/atv.hpp"

#include <string>

namespace superpoint {

AtvLayout::AtvLayout(uint32_t g, uint32_t k) : g_(g), window_(k) {
  const uint32_t blocks = window_.period();
  if (g < blocks) {
    throw ParameterError("g = " + std::to_string(g) +
                         " is smaller than the block count 2k = " +
                         std::to_string(blocks));
  }
  a_ = g / blocks;
  b_ = g - a_ * (blocks - 1);
  bits_ = window_.bits();
  per_word_ = 64 / bits_;
  words_ = (std::size_t{g} + per_word_ - 1) / per_word_;
  mask_ = (uint64_t{1} << bits_) - 1;
}

uint32_t AtvLayout::preserve_cost(uint32_t c0) const {
  const uint32_t zero = block_with_clock(0, c0);
  const uint32_t half = block_with_clock(window_.k(), c0);
  return (block_end(zero) - block_begin(zero)) +
         (block_end(half) - block_begin(half));
}

AtValue AtvLayout::exchange_shared(uint64_t* words, uint32_t i,
                                   AtValue v) const {
  std::atomic_ref<uint64_t> word(words[i / per_word_]);
  const uint32_t s = shift(i);
  const uint64_t code = encode(v);
  uint64_t old = word.load(std::memory_order_relaxed);
  for (;;) {
    const uint64_t prev = (old >> s) & mask_;
    if (prev == code) {
      return decode(prev);
    }
    const uint64_t next = (old & ~(mask_ << s)) | (code << s);
    if (word.compare_exchange_weak(old, next, std::memory_order_relaxed)) {
      return decode(prev);
    }
  }
}

template <typename Word>
AtValue BasicAtvRef<Word>::touch(uint32_t index, const BaseClock& clock) const
  requires kMutable
{
  if (index >= layout_->g()) {
    throw ParameterError("counter index " + std::to_string(index) +
                         " out of range for g = " +
                         std::to_string(layout_->g()));
  }
  const AtValue prev = layout_->load(words_.data(), index);
  const AtValue next =
      layout_->window().set_at(layout_->clock_of(index, clock.c0));
  if (prev != next) {
    layout_->store(words_.data(), index, next);
  }
  return prev;
}

template <typename Word>
AtValue BasicAtvRef<Word>::touch_shared(uint32_t index,
                                        const BaseClock& clock) const
  requires kMutable
{
  return layout_->exchange_shared(words_.data(), index,
                                  layout_->clock_of(index, clock.c0));
}

template <typename Word>
uint32_t BasicAtvRef<Word>::slide(const BaseClock& clock) const
  requires kMutable
{
  const AtWindow& window = layout_->window();
  uint32_t examined = 0;
  for (const uint32_t target : {0u, window.k()}) {
    const uint32_t block = layout_->block_with_clock(target, clock.c0);
    const uint32_t end = layout_->block_end(block);
    for (uint32_t i = layout_->block_begin(block); i < end; ++i) {
      const AtValue v = layout_->load(words_.data(), i);
      const AtValue kept = window.preserve_at(v, target);
      if (kept != v) {
        layout_->store(words_.data(), i, kept);
      }
    }
    examined += end - layout_->block_begin(block);
  }
  return examined;
}

template <typename Word>
uint32_t BasicAtvRef<Word>::weight(const BaseClock& clock,
                                   uint32_t k_prime) const {
  const AtWindow& window = layout_->window();
  window.check_window(k_prime);
  uint32_t active = 0;
  for (uint32_t block = 0; block < layout_->blocks(); ++block) {
    const uint32_t act = layout_->block_clock(block, clock.c0);
    const uint32_t end = layout_->block_end(block);
    for (uint32_t i = layout_->block_begin(block); i < end; ++i) {
      active += window.is_active(layout_->load(words_.data(), i), act, k_prime);
    }
  }
  return active;
}

template class BasicAtvRef<uint64_t>;
template class BasicAtvRef<const uint64_t>;

AtVector::AtVector(uint32_t g, uint32_t k) : layout_(g, k), words_(layout_.words(), 0) {}

void AtVector::touch(uint32_t index, const BaseClock& clock) {
  ref().touch(index, clock);
}

uint32_t AtVector::slide(const BaseClock& clock) {
  const uint32_t n = ref().slide(clock);
  examined_ += n;
  return n;
}

uint32_t AtVector::weight(const BaseClock& clock, uint32_t k_prime) const {
  return view().weight(clock, k_prime);
}

double estimate_cardinality(uint32_t weight, uint32_t g) {
  if (weight > g) {
    throw ParameterError("weight " + std::to_string(weight) + " exceeds g = " +
                         std::to_string(g));
  }
  if (weight == g) {
    throw SaturatedError("all " + std::to_string(g) +
                         " counters active; cardinality is at least capacity");
  }
  // -g * ln((g - w) / g) == -g * log1p(-w / g)
  return -double(g) * std::log1p(-double(weight) / double(g));
}

}  // namespace superpoint
