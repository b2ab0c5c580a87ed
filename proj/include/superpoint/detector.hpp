// SPDX-License-Identifier: Apache-2.0

// Sliding-window super point detection over an event stream.
//
// Slices are numbered from 0. For each slice the detector scans the slice's
// events, then, at reporting boundaries, queries the window of k' slices that
// ends with it, and finally ticks the cube into the next slice. The first
// reported window is the first complete one, ending at slice k' - 1; after
// that every `cadence`-th window is reported.
//
// Output files are CSV with a header row:
//   report   window_end_slice,ip,estimate
//   metrics  window_end_slice,fpr,fnr,tfr        (oracle only; nan when the
//                                                 window has no super point)
//   bench    slice,events,scan_seconds,events_per_second,examined,
//            expected_examined,detect_seconds

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "superpoint/cube.hpp"
#include "superpoint/trace.hpp"

namespace superpoint {

struct RunConfig {
  uint32_t k = 300;
  uint32_t k_prime = 300;
  uint32_t g = 4096;
  uint32_t c = 14;
  uint32_t r = 4;
  uint32_t u = 4;
  uint32_t s = 6;
  double theta = 1024;
  uint64_t seed = 1;
  MangleMode mangle = MangleMode::kOddMultiplier;
  /// Report every `cadence` windows.
  uint32_t cadence = 1;
  uint64_t candidate_cap = 1'000'000;
  bool oracle = false;
  /// Discrete-window preset: every run of k input slices becomes one slice
  /// and the cube runs with k = k' = 1.
  bool discrete = false;

  std::string trace_path;
  std::string report_path;
  std::string metrics_path;
  std::string bench_path;
};

/// Throws ParameterError naming every violated constraint.
void validate(const RunConfig& config);

/// Configuration the cube actually runs with (after the discrete preset).
CubeConfig cube_config(const RunConfig& config);
RrhParams rrh_params(const RunConfig& config);

struct RunOutputs {
  std::ostream* report = nullptr;
  std::ostream* metrics = nullptr;
  std::ostream* bench = nullptr;
};

struct RunSummary {
  uint64_t events = 0;
  uint64_t slices = 0;
  uint64_t windows = 0;
  uint64_t reports = 0;
  uint64_t saturated_reports = 0;
  /// Windows whose oracle super set was non-empty.
  uint64_t scored_windows = 0;
  double mean_fpr = 0;
  double mean_fnr = 0;
  double mean_tfr = 0;
  /// Mean |estimate - exact| / exact over non-saturated reports of hosts
  /// that are super points in the window.
  double mean_relative_error = 0;
  /// Reports of hosts with no peers at all in the window (restored column
  /// tuples that mix several hosts).
  uint64_t phantom_reports = 0;
  /// Ticks whose examined count differed from the closed form.
  uint64_t preserve_mismatches = 0;
};

RunSummary run_detect(const RunConfig& config, EventStream& events,
                      const RunOutputs& outputs);

}  // namespace superpoint
