// SPDX-License-Identifier: Apache-2.0

#include "superpoint/detector.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "superpoint/error.hpp"
#include "superpoint/oracle.hpp"

namespace superpoint {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed3(double v) {
  if (std::isinf(v)) {
    return "inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string ratio(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string seconds(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace

void validate(const RunConfig& config) {
  std::string problems;
  auto fail = [&](const std::string& what) {
    if (!problems.empty()) {
      problems += "; ";
    }
    problems += what;
  };
  if (config.k == 0 || config.k > (1u << 30)) {
    fail("k must be in [1, 2^30]");
  }
  if (!config.discrete && (config.k_prime == 0 || config.k_prime > config.k)) {
    fail("kprime must be in [1, k]");
  }
  const uint64_t window = config.discrete ? 1 : config.k;
  if (uint64_t{config.g} < 2 * window) {
    fail("g must be at least 2k");
  }
  if (!(config.theta > 0) || !std::isfinite(config.theta)) {
    fail("theta must be positive");
  }
  if (config.cadence == 0) {
    fail("cadence must be at least 1");
  }
  if (config.candidate_cap == 0) {
    fail("cap must be at least 1");
  }
  for (const Violation& v : validate_params(rrh_params(config))) {
    fail(v.message);
  }
  if (!problems.empty()) {
    throw ParameterError(problems);
  }
}

CubeConfig cube_config(const RunConfig& config) {
  CubeConfig cc;
  cc.g = config.g;
  cc.k = config.discrete ? 1 : config.k;
  cc.tracked_window = config.discrete ? 1 : config.k_prime;
  cc.theta = config.theta;
  cc.candidate_cap = config.candidate_cap;
  return cc;
}

RrhParams rrh_params(const RunConfig& config) {
  RrhParams p = RrhParams::from_seed(config.seed, config.c, config.r, config.s,
                                     config.u);
  if (config.mangle == MangleMode::kPrimeModulus) {
    p.mode = MangleMode::kPrimeModulus;
    p.multiplier = 1;
    p.inverse = 1;
  }
  return p;
}

RunSummary run_detect(const RunConfig& config, EventStream& events,
                      const RunOutputs& outputs) {
  validate(config);
  const CubeConfig cc = cube_config(config);
  const uint32_t k_prime = cc.tracked_window;
  // In discrete mode one cube slice covers k input slices.
  const uint64_t span = config.discrete ? config.k : 1;

  Cube cube(cc, rrh_params(config));
  std::optional<SlidingOracle> oracle;
  if (config.oracle) {
    oracle.emplace(k_prime);
  }

  if (outputs.report) {
    *outputs.report << "window_end_slice,ip,estimate\n";
  }
  if (outputs.metrics) {
    *outputs.metrics << "window_end_slice,fpr,fnr,tfr\n";
  }
  if (outputs.bench) {
    *outputs.bench << "slice,events,scan_seconds,events_per_second,examined,"
                      "expected_examined,detect_seconds\n";
  }

  RunSummary summary;
  double fpr_sum = 0;
  double fnr_sum = 0;
  double tfr_sum = 0;
  double error_sum = 0;
  uint64_t error_count = 0;

  uint64_t slice = 0;
  uint64_t slice_events = 0;
  double scan_seconds = 0;

  auto close_slice = [&] {
    double detect_seconds = std::numeric_limits<double>::quiet_NaN();
    const bool complete = slice + 1 >= k_prime;
    if (complete && (slice + 1 - k_prime) % config.cadence == 0) {
      const auto t0 = Clock::now();
      const std::vector<SuperPointReport> reports = cube.detect(k_prime);
      detect_seconds = seconds_since(t0);
      const uint64_t end = (slice + 1) * span - 1;
      ++summary.windows;

      std::vector<uint32_t> detected;
      detected.reserve(reports.size());
      for (const SuperPointReport& r : reports) {
        detected.push_back(r.ip);
        ++summary.reports;
        if (r.saturated) {
          ++summary.saturated_reports;
        }
        if (outputs.report) {
          *outputs.report << end << ',' << format_ip(r.ip) << ','
                          << fixed3(r.estimate) << '\n';
        }
        if (oracle) {
          const uint64_t exact = oracle->cardinality(r.ip);
          if (exact == 0) {
            ++summary.phantom_reports;
          } else if (!r.saturated && double(exact) >= config.theta) {
            error_sum += std::abs(r.estimate - double(exact)) / double(exact);
            ++error_count;
          }
        }
      }
      if (oracle) {
        const std::vector<uint32_t> truth = oracle->superpoints(config.theta);
        const auto m = metrics(detected, truth);
        if (m) {
          ++summary.scored_windows;
          fpr_sum += m->fpr;
          fnr_sum += m->fnr;
          tfr_sum += m->tfr;
        }
        if (outputs.metrics) {
          const double nan = std::numeric_limits<double>::quiet_NaN();
          *outputs.metrics << end << ',' << ratio(m ? m->fpr : nan) << ','
                           << ratio(m ? m->fnr : nan) << ','
                           << ratio(m ? m->tfr : nan) << '\n';
        }
      }
    }

    const uint64_t examined = cube.tick();
    const uint64_t expected = cube.preserve_cost();
    if (examined != expected) {
      ++summary.preserve_mismatches;
    }
    if (oracle) {
      oracle->advance();
    }
    if (outputs.bench) {
      const double eps =
          scan_seconds > 0 ? double(slice_events) / scan_seconds : 0;
      *outputs.bench << slice << ',' << slice_events << ','
                     << seconds(scan_seconds) << ',' << fixed3(eps) << ','
                     << examined << ',' << expected << ','
                     << (std::isnan(detect_seconds) ? std::string("nan")
                                                    : seconds(detect_seconds))
                     << '\n';
    }
    ++summary.slices;
    ++slice;
    slice_events = 0;
    scan_seconds = 0;
  };

  bool any = false;
  while (true) {
    const std::optional<PairEvent> e = events.next();
    if (!e) {
      break;
    }
    const uint64_t target = e->slice / span;
    while (slice < target) {
      close_slice();
    }
    any = true;
    const auto t0 = Clock::now();
    cube.scan_pair(e->aip, e->bip);
    scan_seconds += seconds_since(t0);
    if (oracle) {
      oracle->add(e->aip, e->bip);
    }
    ++slice_events;
    ++summary.events;
  }
  if (any) {
    close_slice();
  }

  if (summary.scored_windows > 0) {
    const double n = double(summary.scored_windows);
    summary.mean_fpr = fpr_sum / n;
    summary.mean_fnr = fnr_sum / n;
    summary.mean_tfr = tfr_sum / n;
  }
  if (error_count > 0) {
    summary.mean_relative_error = error_sum / double(error_count);
  }
  return summary;
}

}  // namespace superpoint
