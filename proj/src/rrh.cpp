// SPDX-License-Identifier: Apache-2.0

#include "superpoint/rrh.hpp"

#include <algorithm>

#include "superpoint/error.hpp"

namespace superpoint {
namespace {

__extension__ typedef unsigned __int128 u128;

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t mulmod_prime(uint64_t a, uint64_t b) {
  return static_cast<uint64_t>(static_cast<u128>(a) * b %
                               kManglePrime);
}

constexpr uint32_t kMaxColumnBits = 31;

}  // namespace

uint32_t inverse_mod_2_32(uint32_t odd) {
  // Newton iteration doubles the number of correct low bits each step.
  uint32_t x = odd;
  for (int i = 0; i < 5; ++i) {
    x *= 2u - odd * x;
  }
  return x;
}

uint32_t peer_index(uint32_t bip, uint32_t g, uint64_t seed) {
  uint64_t state = seed ^ (uint64_t{bip} * 0xd6e8feb86659fd93ull);
  const uint64_t h = splitmix64(state);
  return static_cast<uint32_t>(((h >> 32) * g) >> 32);
}

RrhParams RrhParams::from_seed(uint64_t seed, uint32_t c, uint32_t r,
                               uint32_t s, uint32_t u) {
  RrhParams p;
  p.c = c;
  p.r = r;
  p.s = s;
  p.u = u;
  uint64_t state = seed;
  const uint32_t a = static_cast<uint32_t>(splitmix64(state)) | 1u;
  p.multiplier = a;
  p.inverse = inverse_mod_2_32(a);
  p.bh_seed = splitmix64(state);
  return p;
}

std::vector<Violation> validate_params(const RrhParams& p) {
  using Kind = Violation::Kind;
  std::vector<Violation> out;

  if (p.u >= 32 || p.r == 0 || p.c == 0 || p.c > kMaxColumnBits ||
      p.c > 32 - std::min(p.u, 31u)) {
    out.push_back({Kind::kShape,
                   "need 0 <= u < 32, r >= 1 and 1 <= c <= min(" +
                       std::to_string(kMaxColumnBits) + ", 32 - u)"});
    return out;
  }
  const uint32_t n = 32 - p.u;
  if (p.s < 1 || p.s > p.c) {
    out.push_back({Kind::kStride, "stride s must satisfy 1 <= s <= c"});
  }
  if (uint64_t{p.c} + uint64_t{p.s} * (p.r - 1) < n) {
    out.push_back({Kind::kCompleteness,
                   "c + s*(r-1) = " + std::to_string(p.c + p.s * (p.r - 1)) +
                       " < 32 - u = " + std::to_string(n)});
  }

  std::vector<uint32_t> multiplicity(n, 0);
  for (uint32_t i = 0; i < p.r; ++i) {
    for (uint32_t j = 0; j < p.c; ++j) {
      ++multiplicity[(uint64_t{p.s} * i + j) % n];
    }
  }
  const auto covered = static_cast<uint32_t>(
      std::count_if(multiplicity.begin(), multiplicity.end(),
                    [](uint32_t m) { return m > 0; }));
  if (covered < n) {
    out.push_back({Kind::kCoverage, "columns cover " + std::to_string(covered) +
                                        " of " + std::to_string(n) +
                                        " left-bit positions"});
  }
  // c <= n, so a row covers each position at most once.
  const bool redundant =
      std::any_of(multiplicity.begin(), multiplicity.end(),
                  [](uint32_t m) { return m >= 2; });
  if (!redundant) {
    out.push_back({Kind::kRedundancy,
                   "no left-bit position is covered by two rows"});
  }

  if (p.mode == MangleMode::kOddMultiplier) {
    if (p.multiplier > 0xffffffffull || p.inverse > 0xffffffffull ||
        p.multiplier % 2 == 0) {
      out.push_back({Kind::kMultiplier, "multiplier must be an odd 32-bit value"});
    } else if (static_cast<uint32_t>(p.multiplier * p.inverse) != 1u) {
      out.push_back({Kind::kInverse, "multiplier * inverse != 1 mod 2^32"});
    }
  } else {
    if (p.multiplier == 0 || p.multiplier >= kManglePrime) {
      out.push_back({Kind::kMultiplier, "multiplier must lie in [1, p)"});
    } else if (p.inverse >= kManglePrime ||
               mulmod_prime(p.multiplier, p.inverse) != 1) {
      out.push_back({Kind::kInverse, "multiplier * inverse != 1 mod p"});
    } else {
      // x -> A*x mod p permutes [0, p). The 32-bit inputs map into [0, 2^32)
      // exactly when the tail [2^32, p) maps onto itself.
      for (uint64_t t = uint64_t{1} << 32; t < kManglePrime; ++t) {
        if (mulmod_prime(p.multiplier, t) < (uint64_t{1} << 32)) {
          out.push_back({Kind::kResidue,
                         "multiplier maps some address to a residue >= 2^32"});
          break;
        }
      }
    }
  }
  return out;
}

Rrh::Rrh(const RrhParams& params) : params_(params) {
  const auto violations = validate_params(params);
  if (!violations.empty()) {
    std::string msg = "invalid hash parameters:";
    for (const auto& v : violations) {
      msg += " [" + v.message + "]";
    }
    throw ParameterError(msg);
  }
  n_ = params.left_bits();
  column_mask_ = (1u << params.c) - 1;
  starts_.resize(params.r);
  coverage_.assign(n_, {});
  for (uint32_t i = 0; i < params.r; ++i) {
    starts_[i] = static_cast<uint32_t>((uint64_t{params.s} * i) % n_);
    for (uint32_t j = 0; j < params.c; ++j) {
      coverage_[(starts_[i] + j) % n_].push_back({i, j});
    }
  }
}

uint32_t Rrh::mangle(uint32_t ip) const {
  if (params_.mode == MangleMode::kOddMultiplier) {
    return static_cast<uint32_t>(params_.multiplier) * ip;
  }
  return static_cast<uint32_t>(mulmod_prime(params_.multiplier, ip));
}

uint32_t Rrh::unmangle(uint32_t h) const {
  if (params_.mode == MangleMode::kOddMultiplier) {
    return static_cast<uint32_t>(params_.inverse) * h;
  }
  return static_cast<uint32_t>(mulmod_prime(params_.inverse, h));
}

uint32_t Rrh::digest_into(uint32_t ip, std::span<uint32_t> out) const {
  const uint32_t h = mangle(ip);
  const uint32_t lbs = params_.u == 0 ? h : h >> params_.u;
  for (uint32_t i = 0; i < params_.r; ++i) {
    out[i] = column_of(lbs, i);
  }
  return h & (frames() - 1);
}

RrhDigest Rrh::digest(uint32_t ip) const {
  RrhDigest d;
  d.columns.resize(params_.r);
  d.frame = digest_into(ip, d.columns);
  return d;
}

std::optional<uint32_t> Rrh::restore_lbs(
    std::span<const uint32_t> columns) const {
  if (columns.size() != params_.r) {
    throw ParameterError("expected " + std::to_string(params_.r) +
                         " column indices, got " +
                         std::to_string(columns.size()));
  }
  uint32_t lbs = 0;
  for (uint32_t p = 0; p < n_; ++p) {
    const auto& covers = coverage_[p];
    const uint32_t bit = (columns[covers[0].row] >> covers[0].offset) & 1u;
    for (std::size_t i = 1; i < covers.size(); ++i) {
      if (((columns[covers[i].row] >> covers[i].offset) & 1u) != bit) {
        return std::nullopt;
      }
    }
    lbs |= bit << p;
  }
  return lbs;
}

uint32_t Rrh::restore_ip(uint32_t lbs, uint32_t frame) const {
  const uint32_t h = params_.u == 0 ? lbs : (lbs << params_.u) | frame;
  return unmangle(h);
}

std::vector<uint32_t> Rrh::duplicate_positions() const {
  std::vector<uint32_t> out;
  for (uint32_t p = 0; p < n_; ++p) {
    if (coverage_[p].size() >= 2) {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace superpoint
