// cpes-sim: headless runs, input validation and the HTTP/WS gateway.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cpes/engine.hpp"
#include "cpes/error.hpp"
#include "cpes/gateway.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

bool is_input_error(const std::exception& e) {
  return dynamic_cast<const cpes::ParseError*>(&e) || dynamic_cast<const cpes::ValidationError*>(&e) ||
         dynamic_cast<const cpes::UnknownIdError*>(&e) || dynamic_cast<const cpes::RangeError*>(&e);
}

int fail(const std::exception& e) {
  std::cerr << "cpes-sim: " << e.what() << '\n';
  return is_input_error(e) ? kExitValidation : kExitRuntime;
}

std::optional<std::string> opt(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyber-physical energy system co-simulator"};
  app.require_subcommand(1);

  std::string grid, scenario, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> cycles;
  auto* run = app.add_subcommand("run", "Run a scenario headless and write the timeline as JSONL");
  run->add_option("--grid", grid, "Grid definition with ICT section")->required();
  run->add_option("--scenario", scenario, "Scenario document")->required();
  run->add_option("--out", out, "Timeline destination")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--cycles", cycles, "Override the scenario cycle count");

  std::uint16_t port = 8080;
  std::string address = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Serve the HTTP/WebSocket API");
  serve->add_option("--grid", grid, "Grid definition with ICT section")->required();
  serve->add_option("--scenario", scenario, "Scenario document");
  serve->add_option("--port", port, "Listen port (0 picks a free one)");
  serve->add_option("--address", address, "Listen address");

  auto* validate = app.add_subcommand("validate", "Check grid, ICT and scenario inputs without simulating");
  validate->add_option("--grid", grid, "Grid definition with ICT section")->required();
  validate->add_option("--scenario", scenario, "Scenario document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "cpes-sim: " << e.what() << '\n';
    return kExitValidation;
  }

  if (*validate) {
    const auto findings = cpes::validate_inputs(grid, opt(scenario));
    nlohmann::json report = {{"schema_version", cpes::kSchemaVersion}, {"findings", nlohmann::json::array()}};
    for (const auto& f : findings) report["findings"].push_back(cpes::to_json(f));
    std::cout << report.dump(2) << '\n';
    return findings.empty() ? 0 : kExitValidation;
  }

  std::unique_ptr<cpes::Simulation> sim;
  try {
    sim = cpes::open_simulation(grid, opt(scenario), seed, cycles);
  } catch (const std::exception& e) {
    return fail(e);
  }

  if (*run) {
    try {
      const auto timeline = sim->run(sim->scenario().cycles);
      cpes::export_timeline(timeline, out);
    } catch (const std::exception& e) {
      std::cerr << "cpes-sim: " << e.what() << '\n';
      return kExitRuntime;
    }
    return 0;
  }

  // serve: block SIGINT/SIGTERM in every thread and wait for them here
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  cpes::Gateway gateway(std::move(sim));
  try {
    const auto bound = gateway.start(port, address);
    std::cout << "listening on " << address << ':' << bound << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "cpes-sim: " << e.what() << '\n';
    return kExitRuntime;
  }
  int sig = 0;
  sigwait(&signals, &sig);
  gateway.stop();
  return 0;
}
