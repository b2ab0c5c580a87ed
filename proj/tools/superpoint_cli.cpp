// SPDX-License-Identifier: Apache-2.0

// superpoint detect   --trace FILE [--config FILE] [flags]
// superpoint generate --spec FILE | --preset boundary  [--out FILE]
// superpoint oracle   --trace FILE --kprime N [--out FILE]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "superpoint/detector.hpp"
#include "superpoint/error.hpp"
#include "superpoint/oracle.hpp"
#include "superpoint/trace.hpp"

namespace sp = superpoint;

namespace {

// Opens `path` for writing; "-" or empty means stdout.
std::ostream* open_output(const std::string& path,
                          std::unique_ptr<std::ofstream>& holder) {
  if (path.empty()) {
    return nullptr;
  }
  if (path == "-") {
    return &std::cout;
  }
  holder = std::make_unique<std::ofstream>(path);
  if (!*holder) {
    throw sp::Error("cannot open " + path + " for writing");
  }
  return holder.get();
}

std::unique_ptr<std::istream> open_input(const std::string& path) {
  auto in = std::make_unique<std::ifstream>(path);
  if (!*in) {
    throw sp::Error("cannot open " + path);
  }
  return in;
}

void check_stream(std::ostream* out, const std::string& path) {
  if (out && !out->flush()) {
    throw sp::Error("write to " + path + " failed");
  }
}

// Applies `key=value` lines to options the command line left unset.
void apply_config_file(CLI::App& cmd, const std::string& path) {
  auto in = open_input(path);
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(*in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw sp::ParseError(line_no, path + ": expected key=value");
    }
    const std::string key = CLI::detail::trim_copy(line.substr(0, eq));
    const std::string value = CLI::detail::trim_copy(line.substr(eq + 1));
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
    }
    if (opt == nullptr || key == "config") {
      throw sp::ParseError(line_no, path + ": unknown key '" + key + "'");
    }
    if (opt->count() == 0) {
      opt->add_result(value);
      opt->run_callback();
    }
  }
}

int run_detect(const sp::RunConfig& config) {
  auto in = open_input(config.trace_path);
  sp::TraceReader reader(*in);

  std::unique_ptr<std::ofstream> report_file, metrics_file, bench_file;
  sp::RunOutputs outputs;
  outputs.report = open_output(config.report_path, report_file);
  outputs.metrics =
      config.oracle ? open_output(config.metrics_path, metrics_file) : nullptr;
  outputs.bench = open_output(config.bench_path, bench_file);

  const sp::RunSummary summary = sp::run_detect(config, reader, outputs);
  check_stream(outputs.report, config.report_path);
  check_stream(outputs.metrics, config.metrics_path);
  check_stream(outputs.bench, config.bench_path);

  std::fprintf(stderr, "slices=%llu events=%llu windows=%llu reports=%llu",
               static_cast<unsigned long long>(summary.slices),
               static_cast<unsigned long long>(summary.events),
               static_cast<unsigned long long>(summary.windows),
               static_cast<unsigned long long>(summary.reports));
  if (config.oracle) {
    std::fprintf(stderr, " scored=%llu fpr=%.6f fnr=%.6f tfr=%.6f mre=%.6f",
                 static_cast<unsigned long long>(summary.scored_windows),
                 summary.mean_fpr, summary.mean_fnr, summary.mean_tfr,
                 summary.mean_relative_error);
  }
  std::fprintf(stderr, "\n");
  if (summary.preserve_mismatches != 0) {
    throw sp::Error("preserve examined count differed from the closed form");
  }
  return 0;
}

int run_generate(const std::string& spec_path, const std::string& preset,
                 const std::string& out_path, std::optional<uint64_t> seed) {
  sp::SyntheticSpec spec;
  if (!preset.empty()) {
    sp::BoundarySpec b;
    if (seed) {
      b.seed = *seed;
    }
    spec = sp::boundary_spanner(b);
  } else {
    auto in = open_input(spec_path);
    spec = sp::parse_synthetic_spec(*in);
    if (seed) {
      spec.seed = *seed;
    }
  }
  std::unique_ptr<std::ofstream> file;
  std::ostream* out = open_output(out_path.empty() ? "-" : out_path, file);
  sp::generate_synthetic(spec, *out);
  check_stream(out, out_path);
  return 0;
}

int run_oracle(const std::string& trace_path, uint32_t k_prime,
               uint64_t min_count, const std::string& out_path) {
  auto in = open_input(trace_path);
  sp::TraceReader reader(*in);
  std::unique_ptr<std::ofstream> file;
  std::ostream* out = open_output(out_path.empty() ? "-" : out_path, file);
  sp::write_truth_header(*out);

  sp::SlidingOracle oracle(k_prime);
  bool any = false;
  auto close = [&] {
    if (oracle.current_slice() + 1 >= k_prime) {
      sp::write_truth(*out, oracle.truth(), min_count);
    }
    oracle.advance();
  };
  while (const auto e = reader.next()) {
    while (oracle.current_slice() < e->slice) {
      close();
    }
    any = true;
    oracle.add(e->aip, e->bip);
  }
  if (any) {
    close();
  }
  check_stream(out, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Super point detection over sliding windows"};
  app.require_subcommand(1);

  sp::RunConfig config;
  std::string mangle = "odd";
  CLI::App* detect = app.add_subcommand("detect", "Detect super points");
  std::string config_path;
  detect->add_option("--config", config_path,
                     "key=value file; flags override it");
  detect->add_option("--trace", config.trace_path, "Input trace");
  detect->add_option("--k", config.k, "Window slices the counters cover");
  detect->add_option("--kprime", config.k_prime, "Query window slices");
  detect->add_option("--g", config.g, "Counters per vector");
  detect->add_option("--c", config.c, "Column bits");
  detect->add_option("--r", config.r, "Rows");
  detect->add_option("--u", config.u, "Frame bits");
  detect->add_option("--s", config.s, "Column stride");
  detect->add_option("--theta", config.theta, "Super point threshold");
  detect->add_option("--seed", config.seed, "Master seed");
  detect->add_option("--mangle", mangle, "odd or prime")
      ->check(CLI::IsMember({"odd", "prime"}));
  detect->add_option("--report", config.report_path, "Report CSV (- = stdout)");
  detect->add_option("--metrics", config.metrics_path, "Metrics CSV");
  detect->add_flag("--oracle", config.oracle, "Compare with exact counts");
  detect->add_option("--cadence", config.cadence, "Report every N windows");
  detect->add_option("--cap", config.candidate_cap,
                     "Candidate tuples per frame");
  detect->add_option("--bench", config.bench_path, "Per-slice cost CSV");
  detect->add_flag("--discrete", config.discrete,
                   "Non-overlapping windows of k slices");

  std::string spec_path, preset, gen_out;
  std::optional<uint64_t> gen_seed;
  CLI::App* generate =
      app.add_subcommand("generate", "Write a synthetic trace");
  auto* spec_opt = generate->add_option("--spec", spec_path, "Spec file");
  auto* preset_opt =
      generate->add_option("--preset", preset, "Built-in scenario")
          ->check(CLI::IsMember({"boundary"}));
  spec_opt->excludes(preset_opt);
  generate->add_option("--out", gen_out, "Output trace (default stdout)");
  generate->add_option("--seed", gen_seed, "Override the spec seed");

  std::string oracle_trace, oracle_out;
  uint32_t oracle_k = 300;
  uint64_t min_count = 1;
  CLI::App* oracle = app.add_subcommand("oracle", "Exact per-window counts");
  oracle->add_option("--trace", oracle_trace, "Input trace")->required();
  oracle->add_option("--kprime", oracle_k, "Window slices")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--min-count", min_count, "Skip smaller hosts");
  oracle->add_option("--out", oracle_out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*detect) {
      if (!config_path.empty()) {
        apply_config_file(*detect, config_path);
      }
      if (config.trace_path.empty()) {
        throw sp::Error("detect needs --trace");
      }
      config.mangle = mangle == "prime" ? sp::MangleMode::kPrimeModulus
                                        : sp::MangleMode::kOddMultiplier;
      return run_detect(config);
    }
    if (*generate) {
      if (spec_path.empty() && preset.empty()) {
        throw sp::Error("generate needs --spec or --preset");
      }
      return run_generate(spec_path, preset, gen_out, gen_seed);
    }
    return run_oracle(oracle_trace, oracle_k, min_count, oracle_out);
  } catch (const sp::FrameOverflowError& e) {
    std::cerr << "superpoint: frame overflow: " << e.what() << '\n';
  } catch (const sp::ParseError& e) {
    std::cerr << "superpoint: parse error: " << e.what() << '\n';
  } catch (const sp::ParameterError& e) {
    std::cerr << "superpoint: invalid parameters: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "superpoint: " << e.what() << '\n';
  }
  return 1;
}
