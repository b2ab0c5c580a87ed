// SPDX-License-Identifier: Apache-2.0

// Random reversible hashing of hosts onto the estimator cube.
//
// A host address is mangled by a 32-bit bijection. The low u bits of the
// mangled value pick the frame; the remaining n = 32 - u bits (the left bit
// set, bit p being bit p of (mangled >> u)) are cut into r overlapping c-bit
// column indices, row i starting at bit s * i and wrapping modulo n. Bits
// covered by more than one row are duplicate positions; they let restore_lbs
// reject column tuples that no single host could have produced.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace superpoint {

enum class MangleMode {
  /// f(x) = A * x mod 2^32 with A odd. Default.
  kOddMultiplier,
  /// f(x) = A * x mod p with p the smallest prime above 2^32. Only usable
  /// with multipliers that keep every residue below 2^32.
  kPrimeModulus,
};

inline constexpr uint64_t kManglePrime = 4294967311ull;

struct RrhParams {
  uint32_t c = 14;
  uint32_t r = 4;
  uint32_t s = 6;
  uint32_t u = 4;
  uint64_t multiplier = 1;
  uint64_t inverse = 1;
  uint64_t bh_seed = 0;
  MangleMode mode = MangleMode::kOddMultiplier;

  /// Odd multiplier, its inverse and the peer-hash seed, all drawn from one
  /// master seed.
  static RrhParams from_seed(uint64_t seed, uint32_t c, uint32_t r, uint32_t s,
                             uint32_t u);

  uint32_t left_bits() const { return 32 - u; }

  bool operator==(const RrhParams&) const = default;
};

struct Violation {
  enum class Kind {
    kShape,
    kStride,
    kCompleteness,
    kCoverage,
    kRedundancy,
    kMultiplier,
    kInverse,
    kResidue,
  };
  Kind kind;
  std::string message;
};

/// Empty result means the parameters are usable.
std::vector<Violation> validate_params(const RrhParams& params);

/// Multiplicative inverse of an odd value modulo 2^32.
uint32_t inverse_mod_2_32(uint32_t odd);

/// Keyed peer hash onto [0, g). g must be at least 1.
uint32_t peer_index(uint32_t bip, uint32_t g, uint64_t seed);

struct RrhDigest {
  uint32_t frame = 0;
  std::vector<uint32_t> columns;

  bool operator==(const RrhDigest&) const = default;
};

class Rrh {
 public:
  struct Cover {
    uint32_t row;
    uint32_t offset;
  };

  /// Throws ParameterError listing every violation.
  explicit Rrh(const RrhParams& params);

  const RrhParams& params() const { return params_; }
  uint32_t rows() const { return params_.r; }
  uint32_t frames() const { return 1u << params_.u; }
  uint32_t columns() const { return 1u << params_.c; }

  uint32_t mangle(uint32_t ip) const;
  uint32_t unmangle(uint32_t h) const;

  RrhDigest digest(uint32_t ip) const;
  /// Frame of ip; writes the r column indices into out.
  uint32_t digest_into(uint32_t ip, std::span<uint32_t> out) const;

  /// Column index of row `row` for a given left bit set.
  uint32_t column_of(uint32_t lbs, uint32_t row) const {
    const uint64_t doubled = uint64_t{lbs} | (uint64_t{lbs} << n_);
    return static_cast<uint32_t>(doubled >> starts_[row]) & column_mask_;
  }

  /// Reassembles the left bit set, or nullopt when two rows disagree on a
  /// duplicate position.
  std::optional<uint32_t> restore_lbs(std::span<const uint32_t> columns) const;
  uint32_t restore_ip(uint32_t lbs, uint32_t frame) const;

  uint32_t bh(uint32_t bip, uint32_t g) const {
    return peer_index(bip, g, params_.bh_seed);
  }

  /// Rows and bit offsets covering each left-bit-set position.
  const std::vector<std::vector<Cover>>& coverage() const { return coverage_; }
  std::vector<uint32_t> duplicate_positions() const;

 private:
  RrhParams params_;
  uint32_t n_;
  uint32_t column_mask_;
  std::vector<uint32_t> starts_;
  std::vector<std::vector<Cover>> coverage_;
};

}  // namespace superpoint
