// SPDX-License-Identifier: Apache-2.0

#include "superpoint/oracle.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "superpoint/error.hpp"

namespace superpoint {

WindowTruth exact_cardinalities(std::span<const PairEvent> trace,
                                uint64_t end_slice, uint32_t k_prime) {
  if (k_prime == 0) {
    throw ParameterError("window length must be at least 1");
  }
  WindowTruth truth;
  truth.end_slice = end_slice;
  truth.k_prime = k_prime;
  const uint64_t first = end_slice + 1 >= k_prime ? end_slice + 1 - k_prime : 0;

  std::map<uint32_t, std::set<uint32_t>> peers;
  for (const PairEvent& e : trace) {
    if (e.slice >= first && e.slice <= end_slice) {
      peers[e.aip].insert(e.bip);
    }
  }
  for (const auto& [host, set] : peers) {
    truth.counts.emplace(host, set.size());
  }
  return truth;
}

std::vector<uint32_t> exact_superpoints(const WindowTruth& truth,
                                        double theta) {
  std::vector<uint32_t> out;
  for (const auto& [host, count] : truth.counts) {
    if (double(count) >= theta) {
      out.push_back(host);
    }
  }
  return out;
}

std::optional<DetectionMetrics> metrics(
    std::span<const uint32_t> detected,
    std::span<const uint32_t> truth_supers) {
  if (truth_supers.empty()) {
    return std::nullopt;
  }
  std::vector<uint32_t> extra;
  std::vector<uint32_t> missed;
  std::set_difference(detected.begin(), detected.end(), truth_supers.begin(),
                      truth_supers.end(), std::back_inserter(extra));
  std::set_difference(truth_supers.begin(), truth_supers.end(),
                      detected.begin(), detected.end(),
                      std::back_inserter(missed));
  DetectionMetrics m;
  m.n = truth_supers.size();
  m.n_plus = extra.size();
  m.n_minus = missed.size();
  m.fpr = double(m.n_plus) / double(m.n);
  m.fnr = double(m.n_minus) / double(m.n);
  m.tfr = m.fpr + m.fnr;
  return m;
}

void write_truth_header(std::ostream& out) {
  out << "end_slice,ip,exact_count\n";
}

void write_truth(std::ostream& out, const WindowTruth& truth,
                 uint64_t min_count) {
  for (const auto& [host, count] : truth.counts) {
    if (count >= min_count) {
      out << truth.end_slice << ',' << format_ip(host) << ',' << count << '\n';
    }
  }
}

SlidingOracle::SlidingOracle(uint32_t k_prime)
    : k_prime_(k_prime), seen_in_(k_prime) {
  if (k_prime == 0) {
    throw ParameterError("window length must be at least 1");
  }
}

void SlidingOracle::add(uint32_t aip, uint32_t bip) {
  const uint64_t key = (uint64_t{aip} << 32) | bip;
  auto [it, inserted] = last_seen_.try_emplace(key, slice_);
  if (inserted) {
    ++counts_[aip];
  } else if (it->second == slice_) {
    return;
  } else {
    it->second = slice_;
  }
  seen_in_[slice_ % k_prime_].push_back(key);
}

void SlidingOracle::advance() {
  ++slice_;
  if (slice_ < k_prime_) {
    return;
  }
  const uint64_t leaving = slice_ - k_prime_;
  auto& bucket = seen_in_[slice_ % k_prime_];
  for (const uint64_t key : bucket) {
    const auto it = last_seen_.find(key);
    if (it == last_seen_.end() || it->second != leaving) {
      continue;
    }
    last_seen_.erase(it);
    const auto host = static_cast<uint32_t>(key >> 32);
    auto c = counts_.find(host);
    if (--c->second == 0) {
      counts_.erase(c);
    }
  }
  bucket.clear();
}

uint64_t SlidingOracle::cardinality(uint32_t host) const {
  const auto it = counts_.find(host);
  return it == counts_.end() ? 0 : it->second;
}

WindowTruth SlidingOracle::truth() const {
  WindowTruth truth;
  truth.end_slice = slice_;
  truth.k_prime = k_prime_;
  truth.counts.insert(counts_.begin(), counts_.end());
  return truth;
}

std::vector<uint32_t> SlidingOracle::superpoints(double theta) const {
  std::vector<uint32_t> out;
  for (const auto& [host, count] : counts_) {
    if (double(count) >= theta) {
      out.push_back(host);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace superpoint
