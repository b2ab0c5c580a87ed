// SPDX-License-Identifier: Apache-2.0

#include "superpoint/cube.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "superpoint/error.hpp"

namespace superpoint {
namespace {

constexpr double kOverloadEpsilon = 1e-9;
constexpr char kMagic[4] = {'A', 'T', 'V', 'C'};
constexpr uint8_t kSnapshotVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
  uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    bits = std::bit_cast<uint64_t>(static_cast<double>(value));
  } else {
    bits = static_cast<uint64_t>(value);
  }
  char buf[sizeof(T) > 4 || std::is_floating_point_v<T> ? 8 : sizeof(T)];
  for (std::size_t i = 0; i < sizeof(buf); ++i) {
    buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  }
  out.write(buf, sizeof(buf));
}

template <typename T>
T get(std::istream& in) {
  constexpr std::size_t n =
      sizeof(T) > 4 || std::is_floating_point_v<T> ? 8 : sizeof(T);
  unsigned char buf[n];
  if (!in.read(reinterpret_cast<char*>(buf), n)) {
    throw SnapshotError("truncated snapshot");
  }
  uint64_t bits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bits |= uint64_t{buf[i]} << (8 * i);
  }
  if constexpr (std::is_floating_point_v<T>) {
    return static_cast<T>(std::bit_cast<double>(bits));
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

double corrected_estimate(uint32_t nat, uint32_t g, double up) {
  if (!(up < 1.0 - kOverloadEpsilon)) {
    throw OverloadError("all-rows false-active probability " +
                        std::to_string(up) + " leaves no signal");
  }
  if (nat > g) {
    throw ParameterError("nat exceeds g");
  }
  if (nat == g) {
    throw SaturatedError("all counters of the host are active");
  }
  const double gd = g;
  return -gd * (std::log1p(-double(nat) / gd) - std::log1p(-up));
}

Cube::Cube(const CubeConfig& config, const RrhParams& params)
    : config_(config),
      rrh_(params),
      layout_(config.g, config.k),
      tracked_(config.tracked_window == 0 ? config.k : config.tracked_window) {
  layout_.window().check_window(tracked_);
  if (params.c > kMaxColumnBits) {
    throw ParameterError("at most 2^" + std::to_string(kMaxColumnBits) +
                         " columns supported");
  }
  if (params.r > kMaxRows) {
    throw ParameterError("at most " + std::to_string(kMaxRows) +
                         " rows supported");
  }
  if (config.scan_shards == 0) {
    throw ParameterError("scan_shards must be at least 1");
  }
  if (!(config.theta > 0)) {
    throw ParameterError("theta must be positive");
  }
  vectors_ = uint64_t{rrh_.columns()} * rrh_.rows() * rrh_.frames();
  stride_ = layout_.words();
  // All-zero words decode to inactive counters; calloc lets the OS hand out
  // zero pages lazily, so untouched regions of a large cube cost nothing.
  auto* raw = static_cast<uint64_t*>(std::calloc(vectors_ * stride_, sizeof(uint64_t)));
  if (raw == nullptr) {
    throw ParameterError("cannot allocate " +
                         std::to_string(vectors_ * stride_ * 8) +
                         " bytes of counters");
  }
  words_.reset(raw);
  active_.assign(vectors_, 0);
  expiry_.assign(tracked_, {});
  shard_log_.assign(config.scan_shards, {});
}

AtvView Cube::vector(uint32_t column, uint32_t row, uint32_t frame) const {
  if (column >= rrh_.columns() || row >= rrh_.rows() || frame >= rrh_.frames()) {
    throw ParameterError("vector coordinates out of range");
  }
  return vector_view(vector_id(column, row, frame));
}

void Cube::scan_pair(uint32_t aip, uint32_t bip, uint32_t shard) {
  std::array<uint32_t, kMaxRows> cols;
  const uint32_t frame = rrh_.digest_into(aip, cols);
  const uint32_t index = rrh_.bh(bip, config_.g);
  const uint32_t act = layout_.clock_of(index, clock_.c0);
  const AtWindow& window = layout_.window();
  auto& log = shard_log_[shard];
  for (uint32_t row = 0; row < rrh_.rows(); ++row) {
    const uint64_t id = vector_id(cols[row], row, frame);
    const AtValue prev = layout_.exchange_shared(words_of(id), index, act);
    if (prev == act) {
      continue;
    }
    if (!window.is_active(prev, act, tracked_)) {
      std::atomic_ref<uint32_t>(active_[id]).fetch_add(1, std::memory_order_relaxed);
    }
    log.push_back({static_cast<uint32_t>(id), index});
  }
}

uint64_t Cube::tick() {
  const AtWindow& window = layout_.window();
  clock_.advance(window);

  // Counters set in the slice just closed.
  auto& closed = expiry_[(clock_.slice - 1) % tracked_];
  for (auto& log : shard_log_) {
    closed.insert(closed.end(), log.begin(), log.end());
    log.clear();
  }

  // Counters last set tracked_ slices ago drop out of the tracked window. A
  // counter re-set since then has a smaller age and is skipped here.
  auto& expiring = expiry_[clock_.slice % tracked_];
  for (const Touch& t : expiring) {
    const AtValue v = layout_.load(words_of(t.vector), t.index);
    if (v != window.init_at() &&
        window.age(v, layout_.clock_of(t.index, clock_.c0)) == tracked_) {
      --active_[t.vector];
    }
  }
  expiring.clear();

  // Preserving only retires counters aged k or more, none of which are
  // counted for any window length <= k.
  uint64_t examined = 0;
  for (uint64_t id = 0; id < vectors_; ++id) {
    examined += mutable_vector(id).slide(clock_);
  }
  return examined;
}

uint64_t Cube::preserve_cost() const {
  return vectors_ * layout_.preserve_cost(clock_.c0);
}

uint32_t Cube::weight_of(uint64_t id, uint32_t k_prime) const {
  if (k_prime == tracked_) {
    return active_[id];
  }
  return vector_view(id).weight(clock_, k_prime);
}

uint32_t Cube::weight(uint32_t column, uint32_t row, uint32_t frame,
                      uint32_t k_prime) const {
  layout_.window().check_window(k_prime);
  return vector(column, row, frame).weight(clock_, k_prime);
}

std::vector<uint32_t> Cube::super_atvs(uint32_t row, uint32_t frame,
                                       uint32_t k_prime) const {
  layout_.window().check_window(k_prime);
  const double threshold = weight_threshold(config_.theta, config_.g);
  std::vector<uint32_t> out;
  const uint64_t base = vector_id(0, row, frame);
  for (uint32_t x = 0; x < rrh_.columns(); ++x) {
    if (double(weight_of(base + x, k_prime)) >= threshold) {
      out.push_back(x);
    }
  }
  return out;
}

std::vector<uint32_t> Cube::restore_candidates(uint32_t k_prime) const {
  const uint32_t rows = rrh_.rows();
  std::vector<uint32_t> out;
  std::vector<std::vector<uint32_t>> super(rows);
  std::vector<uint32_t> tuple(rows);
  std::vector<std::size_t> pos(rows);

  for (uint32_t frame = 0; frame < rrh_.frames(); ++frame) {
    uint64_t tuples = 1;
    for (uint32_t row = 0; row < rows; ++row) {
      super[row] = super_atvs(row, frame, k_prime);
      const uint64_t n = super[row].size();
      tuples = (n != 0 && tuples > std::numeric_limits<uint64_t>::max() / n)
                   ? std::numeric_limits<uint64_t>::max()
                   : tuples * n;
    }
    if (tuples == 0) {
      continue;
    }
    if (tuples > config_.candidate_cap) {
      throw FrameOverflowError(frame, tuples, config_.candidate_cap);
    }
    // Odometer over the Cartesian product of the rows' super columns.
    std::fill(pos.begin(), pos.end(), 0);
    for (;;) {
      for (uint32_t row = 0; row < rows; ++row) {
        tuple[row] = super[row][pos[row]];
      }
      if (const auto lbs = rrh_.restore_lbs(tuple)) {
        out.push_back(rrh_.restore_ip(*lbs, frame));
      }
      uint32_t row = 0;
      while (row < rows && ++pos[row] == super[row].size()) {
        pos[row] = 0;
        ++row;
      }
      if (row == rows) {
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

uint32_t Cube::nat(uint32_t aip, uint32_t k_prime) const {
  const AtWindow& window = layout_.window();
  window.check_window(k_prime);
  std::array<uint32_t, kMaxRows> cols;
  const uint32_t frame = rrh_.digest_into(aip, cols);
  std::array<const uint64_t*, kMaxRows> vecs;
  const uint32_t rows = rrh_.rows();
  for (uint32_t row = 0; row < rows; ++row) {
    vecs[row] = words_of(vector_id(cols[row], row, frame));
  }
  uint32_t count = 0;
  for (uint32_t block = 0; block < layout_.blocks(); ++block) {
    const uint32_t act = layout_.block_clock(block, clock_.c0);
    const uint32_t end = layout_.block_end(block);
    for (uint32_t i = layout_.block_begin(block); i < end; ++i) {
      uint32_t row = 0;
      while (row < rows &&
             window.is_active(layout_.load(vecs[row], i), act, k_prime)) {
        ++row;
      }
      count += row == rows;
    }
  }
  return count;
}

double Cube::row_set_probability(uint32_t row, uint32_t frame,
                                 uint32_t k_prime) const {
  layout_.window().check_window(k_prime);
  const uint64_t base = vector_id(0, row, frame);
  uint64_t active = 0;
  for (uint32_t x = 0; x < rrh_.columns(); ++x) {
    active += weight_of(base + x, k_prime);
  }
  return double(active) / (double(config_.g) * double(rrh_.columns()));
}

double Cube::frame_set_probability(uint32_t frame, uint32_t k_prime) const {
  double up = 1.0;
  for (uint32_t row = 0; row < rrh_.rows(); ++row) {
    up *= row_set_probability(row, frame, k_prime);
  }
  return up;
}

double Cube::estimate_superpoint(uint32_t aip, uint32_t k_prime) const {
  const uint32_t frame = rrh_.digest(aip).frame;
  return corrected_estimate(nat(aip, k_prime), config_.g,
                            frame_set_probability(frame, k_prime));
}

double Cube::estimate_uncorrected(uint32_t aip, uint32_t k_prime) const {
  return estimate_cardinality(nat(aip, k_prime), config_.g);
}

std::vector<SuperPointReport> Cube::detect(uint32_t k_prime) const {
  const auto candidates = restore_candidates(k_prime);
  std::vector<double> up(rrh_.frames(), -1.0);
  std::vector<SuperPointReport> out;
  for (const uint32_t ip : candidates) {
    const uint32_t frame = rrh_.digest(ip).frame;
    if (up[frame] < 0) {
      up[frame] = frame_set_probability(frame, k_prime);
    }
    SuperPointReport report;
    report.ip = ip;
    report.window_end_slice = clock_.slice;
    report.k_prime = k_prime;
    const uint32_t n = nat(ip, k_prime);
    if (n == config_.g) {
      report.saturated = true;
      report.estimate = std::numeric_limits<double>::infinity();
    } else {
      report.estimate = corrected_estimate(n, config_.g, up[frame]);
      if (report.estimate < config_.theta) {
        continue;
      }
    }
    out.push_back(report);
  }
  return out;
}

void Cube::save(std::ostream& out) const {
  const RrhParams& p = rrh_.params();
  out.write(kMagic, sizeof(kMagic));
  put<uint8_t>(out, kSnapshotVersion);
  put<uint32_t>(out, config_.g);
  put<uint32_t>(out, config_.k);
  put<uint32_t>(out, p.c);
  put<uint32_t>(out, p.r);
  put<uint32_t>(out, p.u);
  put<uint32_t>(out, p.s);
  put<uint8_t>(out, static_cast<uint8_t>(p.mode));
  put<uint64_t>(out, p.multiplier);
  put<uint64_t>(out, p.inverse);
  put<uint64_t>(out, p.bh_seed);
  put<double>(out, config_.theta);
  put<uint32_t>(out, tracked_);
  put<uint64_t>(out, config_.candidate_cap);
  put<uint32_t>(out, clock_.c0);
  put<uint64_t>(out, clock_.slice);
  const uint64_t n = vectors_ * stride_;
  put<uint64_t>(out, n);
  for (uint64_t i = 0; i < n; ++i) {
    put<uint64_t>(out, words_[i]);
  }
  if (!out) {
    throw SnapshotError("failed writing snapshot");
  }
}

Cube Cube::load(std::istream& in, const CubeConfig& config,
                const RrhParams& expected) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw SnapshotError("not a cube snapshot");
  }
  if (const auto version = get<uint8_t>(in); version != kSnapshotVersion) {
    throw SnapshotError("unsupported snapshot version " +
                        std::to_string(version));
  }
  const auto g = get<uint32_t>(in);
  const auto k = get<uint32_t>(in);
  RrhParams p;
  p.c = get<uint32_t>(in);
  p.r = get<uint32_t>(in);
  p.u = get<uint32_t>(in);
  p.s = get<uint32_t>(in);
  if (g != config.g || k != config.k || p.c != expected.c ||
      p.r != expected.r || p.u != expected.u || p.s != expected.s) {
    throw SnapshotError(
        "snapshot shape (g, k, c, r, u, s) does not match the configuration");
  }
  p.mode = static_cast<MangleMode>(get<uint8_t>(in));
  p.multiplier = get<uint64_t>(in);
  p.inverse = get<uint64_t>(in);
  p.bh_seed = get<uint64_t>(in);

  CubeConfig cfg = config;
  cfg.theta = get<double>(in);
  cfg.tracked_window = get<uint32_t>(in);
  cfg.candidate_cap = get<uint64_t>(in);
  BaseClock clock;
  clock.c0 = get<uint32_t>(in);
  clock.slice = get<uint64_t>(in);

  Cube cube(cfg, p);
  if (clock.c0 >= cube.layout_.window().period()) {
    throw SnapshotError("base clock out of range");
  }
  const uint64_t n = get<uint64_t>(in);
  if (n != cube.vectors_ * cube.stride_) {
    throw SnapshotError("counter word count does not match the configuration");
  }
  for (uint64_t i = 0; i < n; ++i) {
    cube.words_[i] = get<uint64_t>(in);
  }
  cube.clock_ = clock;
  cube.rebuild_tracking();
  return cube;
}

void Cube::rebuild_tracking() {
  const AtWindow& window = layout_.window();
  for (auto& bucket : expiry_) {
    bucket.clear();
  }
  for (uint64_t id = 0; id < vectors_; ++id) {
    const uint64_t* w = words_of(id);
    uint32_t count = 0;
    for (uint32_t i = 0; i < config_.g; ++i) {
      const AtValue v = layout_.load(w, i);
      const uint32_t act = layout_.clock_of(i, clock_.c0);
      if (!window.is_active(v, act, tracked_)) {
        continue;
      }
      ++count;
      const uint64_t set_slice = clock_.slice - window.age(v, act);
      expiry_[set_slice % tracked_].push_back({static_cast<uint32_t>(id), i});
    }
    active_[id] = count;
  }
}

}  // namespace superpoint
