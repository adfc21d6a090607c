// Copyright 2026 The cpsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cpsim run <config.json> [--seed N] [--threads K] [--out PATH]
// cpsim validate <config.json>
//
// Exit status: 0 ok, 2 config error, 3 physics contract, 4 convergence.

#include <chrono>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cpsim/config.hpp"
#include "cpsim/experiments.hpp"
#include "cpsim/io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kContractError = 3;
constexpr int kConvergenceError = 4;

cpsim::config::ExperimentConfig load(const std::string& path) {
  std::string text;
  try {
    text = cpsim::io::read_file(path);
  } catch (const std::exception& e) {
    throw cpsim::ConfigError(e.what());
  }
  return cpsim::config::parse(text);
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const cpsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const cpsim::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << " (best " << e.best_estimate() << ", error "
              << e.error_estimate() << ")\n";
    return kConvergenceError;
  } catch (const cpsim::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kContractError;
  } catch (const cpsim::StepSizeError& e) {
    std::cerr << "step size error: " << e.what() << '\n';
    return kContractError;
  } catch (const cpsim::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kContractError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kContractError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collapse-point model simulator"};
  app.set_version_flag("--version", std::string(CPSIM_VERSION));
  app.require_subcommand(1);

  std::string run_config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", run_config, "config JSON")->required();
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--threads", threads, "worker threads (1 gives byte-identical output)")
      ->check(CLI::Range(1u, 1024u));
  run->add_option("--out", out, "results path (overrides output_path)");

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "check a config file without running it");
  validate->add_option("config", validate_config, "config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*validate) {
    return guarded([&] {
      const auto c = load(validate_config);
      cpsim::preflight(c);
      std::cout << validate_config << ": ok (" << c.experiment << ")\n";
      return kOk;
    });
  }

  return guarded([&] {
    const auto c = load(run_config);
    cpsim::preflight(c);
    const std::uint64_t s = seed.value_or(c.seed);
    const std::string path = out.empty() ? c.output_path : out;

    const auto t0 = std::chrono::steady_clock::now();
    const auto result = cpsim::run_experiment(c, s, threads);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    cpsim::io::write_file(path, cpsim::render(c, s, result));
    const cpsim::io::json sidecar = {{"config", c.echo},
                                     {"seed", s},
                                     {"wall_time_s", wall},
                                     {"version", CPSIM_VERSION},
                                     {"generator", cpsim::RngStream::kGeneratorName},
                                     {"threads", threads},
                                     {"results", path}};
    cpsim::io::write_file(path + ".meta.json", sidecar.dump(2) + "\n");
    std::cout << c.experiment << ": " << result.table.rows.size() << " rows -> " << path << '\n';
    return kOk;
  });
}
