// SPDX-License-Identifier: Apache-2.0

// Trace format: UTF-8 text, one event per line as `slice,aip,bip` with
// dotted-quad addresses; lines starting with '#' are comments. The header
// comment `# slice_seconds=<n>` records the slice duration. Column 2 is always
// the monitored-side host.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace superpoint {

struct PairEvent {
  uint64_t slice = 0;
  uint32_t aip = 0;
  uint32_t bip = 0;

  bool operator==(const PairEvent&) const = default;
};

std::string format_ip(uint32_t ip);
std::optional<uint32_t> parse_ip(std::string_view text);

class EventStream {
 public:
  virtual ~EventStream() = default;
  /// Next event in non-decreasing slice order, or nullopt at the end.
  virtual std::optional<PairEvent> next() = 0;
};

/// Streaming parser. Throws ParseError on malformed lines and OrderingError
/// when the slice index decreases.
class TraceReader : public EventStream {
 public:
  explicit TraceReader(std::istream& in) : in_(in) {}

  std::optional<PairEvent> next() override;

  uint64_t line() const { return line_; }
  /// From the `# slice_seconds=` header, if one was seen.
  std::optional<double> slice_seconds() const { return slice_seconds_; }

 private:
  std::istream& in_;
  std::string buf_;
  uint64_t line_ = 0;
  std::optional<uint64_t> last_slice_;
  std::optional<double> slice_seconds_;
};

std::vector<PairEvent> parse_trace(std::istream& in);

void write_trace_header(std::ostream& out, double slice_seconds = 1);
void write_event(std::ostream& out, const PairEvent& e);

/// A host that, within [start, end), contacts fresh peers at a steady rate:
/// every run of min(window, end - start) consecutive slices inside the span
/// holds exactly `cardinality` distinct peers. A span no longer than the
/// window therefore carries exactly `cardinality` peers in total.
struct PlantedHost {
  uint32_t ip = 0;
  uint64_t cardinality = 0;
  uint64_t start = 0;
  uint64_t end = 0;
};

struct SyntheticSpec {
  uint64_t slices = 3000;
  uint32_t window = 300;
  /// Background hosts are active over the whole trace with a per-window
  /// degree drawn uniformly from [min_degree, max_degree].
  uint32_t background_hosts = 0;
  uint32_t min_degree = 1;
  uint32_t max_degree = 100;
  /// Probability that an event is repeated within its slice.
  double duplicate_rate = 0;
  std::vector<PlantedHost> planted;
  uint64_t seed = 1;
  double slice_seconds = 1;
};

/// Throws SpecError.
void validate(const SyntheticSpec& spec);

/// Generates a synthetic trace one slice at a time. Deterministic for a fixed
/// spec. Peers of a host never repeat across slices, so planted cardinalities
/// are exact.
class SyntheticTrace : public EventStream {
 public:
  explicit SyntheticTrace(SyntheticSpec spec);

  /// Events of the next slice, shuffled; false once all slices are emitted.
  bool next_slice(std::vector<PairEvent>& out);
  std::optional<PairEvent> next() override;

  const SyntheticSpec& spec() const { return spec_; }
  const std::vector<uint32_t>& background() const { return background_ips_; }

 private:
  struct Stream {
    uint32_t ip;
    uint64_t rate;
    uint64_t period;
    uint64_t start;
    uint64_t end;
    uint32_t peer_base;
    std::size_t counter;
  };

  SyntheticSpec spec_;
  std::mt19937_64 rng_;
  std::vector<uint32_t> background_ips_;
  std::vector<Stream> streams_;
  std::vector<uint64_t> counters_;
  uint64_t slice_ = 0;
  std::vector<PairEvent> pending_;
  std::size_t pending_pos_ = 0;
};

void generate_synthetic(const SyntheticSpec& spec, std::ostream& out);

/// One host whose peers split evenly across [boundary - h, boundary) and
/// [boundary, boundary + h), h = half_width (default window / 2). Sliding
/// windows covering both halves see them all; discrete windows aligned at the
/// boundary see one half each.
struct BoundarySpec {
  uint32_t window = 300;
  uint64_t boundary = 600;
  uint64_t peers_per_half = 512;
  /// 0 means window / 2; at most window / 2.
  uint64_t half_width = 0;
  uint32_t host = 0x0a000001;
  uint64_t slices = 1200;
  uint32_t background_hosts = 0;
  uint32_t max_degree = 100;
  uint64_t seed = 1;
};

SyntheticSpec boundary_spanner(const BoundarySpec& spec);

/// Parses a key=value description (`slices=`, `window=`, `background=`,
/// `min_degree=`, `max_degree=`, `duplicate_rate=`, `seed=`,
/// `slice_seconds=`, and repeated `plant=ip,cardinality,start,end`).
SyntheticSpec parse_synthetic_spec(std::istream& in);

}  // namespace superpoint
