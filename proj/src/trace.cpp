// SPDX-License-Identifier: Apache-2.0

#include "superpoint/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_map>

#include "superpoint/error.hpp"

namespace superpoint {
namespace {

__extension__ typedef unsigned __int128 u128;

// murmur3 finalizer; a bijection on 32-bit values.
uint32_t fmix32(uint32_t h) {
  h ^= h >> 16;
  h *= 0x85ebca6bu;
  h ^= h >> 13;
  h *= 0xc2b2ae35u;
  h ^= h >> 16;
  return h;
}

uint64_t below(std::mt19937_64& rng, uint64_t n) {
  return static_cast<uint64_t>((static_cast<u128>(rng()) * n) >> 64);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next - pos));
    if (next == std::string_view::npos) {
      return out;
    }
    pos = next + 1;
  }
}

constexpr std::string_view kSliceSecondsKey = "slice_seconds=";

}  // namespace

std::string format_ip(uint32_t ip) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", ip >> 24, (ip >> 16) & 0xff,
                (ip >> 8) & 0xff, ip & 0xff);
  return buf;
}

std::optional<uint32_t> parse_ip(std::string_view text) {
  text = trim(text);
  const auto parts = split(text, '.');
  if (parts.size() != 4) {
    return std::nullopt;
  }
  uint32_t ip = 0;
  for (const auto part : parts) {
    if (part.empty() || part.size() > 3 ||
        !std::all_of(part.begin(), part.end(),
                     [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
    const auto octet = parse_number<uint32_t>(part);
    if (!octet || *octet > 255) {
      return std::nullopt;
    }
    ip = (ip << 8) | *octet;
  }
  return ip;
}

std::optional<PairEvent> TraceReader::next() {
  while (std::getline(in_, buf_)) {
    ++line_;
    const std::string_view line = trim(buf_);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      if (body.starts_with(kSliceSecondsKey)) {
        slice_seconds_ = parse_number<double>(body.substr(kSliceSecondsKey.size()));
        if (!slice_seconds_ || !(*slice_seconds_ > 0)) {
          throw ParseError(line_, "invalid slice_seconds header");
        }
      }
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      throw ParseError(line_, "expected slice,aip,bip but found " +
                                  std::to_string(fields.size()) + " field(s)");
    }
    const auto slice = parse_number<uint64_t>(fields[0]);
    if (!slice) {
      throw ParseError(line_, "invalid slice index '" + std::string(fields[0]) + "'");
    }
    const auto aip = parse_ip(fields[1]);
    const auto bip = parse_ip(fields[2]);
    if (!aip || !bip) {
      throw ParseError(line_, "invalid IPv4 address");
    }
    if (last_slice_ && *slice < *last_slice_) {
      throw OrderingError(line_, "slice " + std::to_string(*slice) +
                                     " follows slice " +
                                     std::to_string(*last_slice_));
    }
    last_slice_ = *slice;
    return PairEvent{*slice, *aip, *bip};
  }
  return std::nullopt;
}

std::vector<PairEvent> parse_trace(std::istream& in) {
  TraceReader reader(in);
  std::vector<PairEvent> out;
  while (auto e = reader.next()) {
    out.push_back(*e);
  }
  return out;
}

void write_trace_header(std::ostream& out, double slice_seconds) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", slice_seconds);
  out << "# " << kSliceSecondsKey << buf << '\n';
}

void write_event(std::ostream& out, const PairEvent& e) {
  out << e.slice << ',' << format_ip(e.aip) << ',' << format_ip(e.bip) << '\n';
}

void validate(const SyntheticSpec& spec) {
  if (spec.window == 0) {
    throw SpecError("window must be at least 1 slice");
  }
  if (spec.background_hosts > 0 &&
      (spec.min_degree > spec.max_degree || spec.max_degree == 0)) {
    throw SpecError("background degree range is empty");
  }
  if (!(spec.duplicate_rate >= 0 && spec.duplicate_rate < 1)) {
    throw SpecError("duplicate_rate must lie in [0, 1)");
  }
  if (!(spec.slice_seconds > 0)) {
    throw SpecError("slice_seconds must be positive");
  }
  constexpr uint64_t kMaxPeers = std::numeric_limits<uint32_t>::max();
  std::unordered_map<uint32_t, uint64_t> peers;
  for (const PlantedHost& p : spec.planted) {
    if (p.cardinality > kMaxPeers) {
      throw SpecError("planted cardinality " + std::to_string(p.cardinality) +
                      " exceeds 2^32 - 1");
    }
    if (p.end <= p.start) {
      throw SpecError("planted span of " + format_ip(p.ip) + " ends at " +
                      std::to_string(p.end) + ", not after its start " +
                      std::to_string(p.start));
    }
    if (p.end > spec.slices) {
      throw SpecError("planted span of " + format_ip(p.ip) +
                      " runs past the end of the trace");
    }
    const uint64_t len = p.end - p.start;
    const uint64_t period = std::min<uint64_t>(spec.window, len);
    const uint64_t total =
        (static_cast<u128>(p.cardinality) * len + period - 1) / period;
    uint64_t& sum = peers[p.ip];
    sum += total;
    if (total > kMaxPeers || sum > kMaxPeers) {
      throw SpecError("host " + format_ip(p.ip) + " needs more than 2^32 - 1 peers");
    }
  }
}

SyntheticTrace::SyntheticTrace(SyntheticSpec spec)
    : spec_(std::move(spec)), rng_(spec_.seed) {
  validate(spec_);
  // One peer sequence per host, shared by all of its streams, so the peers of
  // a host stay distinct across planted segments.
  std::unordered_map<uint32_t, std::size_t> counter_of;
  std::vector<uint32_t> bases;
  auto sequence_for = [&](uint32_t ip) {
    auto [it, inserted] = counter_of.try_emplace(ip, counters_.size());
    if (inserted) {
      counters_.push_back(0);
      bases.push_back(static_cast<uint32_t>(rng_()) ^ fmix32(ip));
    }
    return it->second;
  };

  std::set<uint32_t> taken;
  for (const PlantedHost& p : spec_.planted) {
    taken.insert(p.ip);
  }
  for (const PlantedHost& p : spec_.planted) {
    const uint64_t len = p.end - p.start;
    const std::size_t seq = sequence_for(p.ip);
    streams_.push_back({p.ip, p.cardinality, std::min<uint64_t>(spec_.window, len),
                        p.start, p.end, bases[seq], seq});
  }
  background_ips_.reserve(spec_.background_hosts);
  while (background_ips_.size() < spec_.background_hosts) {
    const auto ip = static_cast<uint32_t>(rng_());
    if (taken.insert(ip).second) {
      background_ips_.push_back(ip);
    }
  }
  const uint64_t span = spec_.max_degree - spec_.min_degree + 1;
  for (const uint32_t ip : background_ips_) {
    const uint64_t degree = spec_.min_degree + below(rng_, span);
    const std::size_t seq = sequence_for(ip);
    streams_.push_back({ip, degree, spec_.window, 0, spec_.slices, bases[seq], seq});
  }
}

bool SyntheticTrace::next_slice(std::vector<PairEvent>& out) {
  out.clear();
  if (slice_ >= spec_.slices) {
    return false;
  }
  for (const Stream& s : streams_) {
    if (slice_ < s.start || slice_ >= s.end) {
      continue;
    }
    const uint64_t phase = (slice_ - s.start) % s.period;
    const uint64_t count = (phase + 1) * s.rate / s.period - phase * s.rate / s.period;
    uint64_t& next = counters_[s.counter];
    for (uint64_t i = 0; i < count; ++i) {
      const uint32_t peer = fmix32(s.peer_base + static_cast<uint32_t>(next++));
      out.push_back({slice_, s.ip, peer});
    }
  }
  if (spec_.duplicate_rate > 0) {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (double(rng_() >> 11) * 0x1p-53 < spec_.duplicate_rate) {
        out.push_back(out[i]);
      }
    }
  }
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[below(rng_, i)]);
  }
  ++slice_;
  return true;
}

std::optional<PairEvent> SyntheticTrace::next() {
  while (pending_pos_ == pending_.size()) {
    pending_pos_ = 0;
    if (!next_slice(pending_)) {
      return std::nullopt;
    }
  }
  return pending_[pending_pos_++];
}

void generate_synthetic(const SyntheticSpec& spec, std::ostream& out) {
  SyntheticTrace trace(spec);
  write_trace_header(out, spec.slice_seconds);
  std::vector<PairEvent> events;
  while (trace.next_slice(events)) {
    for (const PairEvent& e : events) {
      write_event(out, e);
    }
  }
}

SyntheticSpec boundary_spanner(const BoundarySpec& b) {
  const uint64_t half = b.half_width == 0 ? b.window / 2 : b.half_width;
  if (half == 0 || 2 * half > b.window || b.boundary < half || b.boundary + half > b.slices) {
    throw SpecError("boundary scenario does not fit inside the trace");
  }
  SyntheticSpec spec;
  spec.slices = b.slices;
  spec.window = b.window;
  spec.background_hosts = b.background_hosts;
  spec.min_degree = 1;
  spec.max_degree = b.max_degree;
  spec.seed = b.seed;
  spec.planted.push_back({b.host, b.peers_per_half, b.boundary - half, b.boundary});
  spec.planted.push_back({b.host, b.peers_per_half, b.boundary, b.boundary + half});
  return spec;
}

SyntheticSpec parse_synthetic_spec(std::istream& in) {
  SyntheticSpec spec;
  std::string buf;
  uint64_t line_no = 0;
  while (std::getline(in, buf)) {
    ++line_no;
    const std::string_view line = trim(buf);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "expected key=value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    auto need = [&](auto parsed) {
      if (!parsed) {
        throw ParseError(line_no, "invalid value for '" + std::string(key) + "'");
      }
      return *parsed;
    };
    if (key == "slices") {
      spec.slices = need(parse_number<uint64_t>(value));
    } else if (key == "window") {
      spec.window = need(parse_number<uint32_t>(value));
    } else if (key == "background") {
      spec.background_hosts = need(parse_number<uint32_t>(value));
    } else if (key == "min_degree") {
      spec.min_degree = need(parse_number<uint32_t>(value));
    } else if (key == "max_degree") {
      spec.max_degree = need(parse_number<uint32_t>(value));
    } else if (key == "duplicate_rate") {
      spec.duplicate_rate = need(parse_number<double>(value));
    } else if (key == "seed") {
      spec.seed = need(parse_number<uint64_t>(value));
    } else if (key == "slice_seconds") {
      spec.slice_seconds = need(parse_number<double>(value));
    } else if (key == "plant") {
      const auto f = split(value, ',');
      if (f.size() != 4) {
        throw ParseError(line_no, "plant expects ip,cardinality,start,end");
      }
      PlantedHost p;
      p.ip = need(parse_ip(f[0]));
      p.cardinality = need(parse_number<uint64_t>(f[1]));
      p.start = need(parse_number<uint64_t>(f[2]));
      p.end = need(parse_number<uint64_t>(f[3]));
      spec.planted.push_back(p);
    } else {
      throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  return spec;
}

}  // namespace superpoint
