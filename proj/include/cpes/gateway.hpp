#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpes/engine.hpp"

namespace cpes {

/// Client-facing projection of one snapshot.
nlohmann::json api_snapshot_view(const Snapshot& s, const IctTopology& topology);

/// Static grid and ICT structure with the component statuses of `latest`
/// when given.
nlohmann::json topology_view(const PowerGrid& grid, const IctTopology& topology, const Snapshot* latest);

enum class SimVerb { Step, Run, Pause, Reset };

std::string_view to_string(SimVerb v);
std::optional<SimVerb> parse_sim_verb(std::string_view s);

struct SimControl {
  SimVerb verb = SimVerb::Step;
  std::optional<int> cycles;  // run only
};

struct CommandRequest {
  std::string request_id;
  std::variant<ScenarioEvent, SimControl> command;
};

/// {"type": "disturbance"|"remedial"|"sim-control", "kind", "target",
/// "params", "request_id"}. Throws ValidationError for malformed requests.
CommandRequest parse_command_request(const nlohmann::json& j);

struct Finding {
  std::string path;  // file, then a JSON-pointer-like location
  std::string id;    // offending identifier, may be empty
  std::string message;
};

/// Schema and cross-reference check of a grid document (with its ICT
/// section) and an optional scenario. Never throws for bad content.
std::vector<Finding> validate_inputs(const std::string& grid_path, const std::optional<std::string>& scenario_path);
nlohmann::json to_json(const Finding& f);

/// HTTP + WebSocket front door. Owns the engine thread: every step, run,
/// pause and reset goes through it; request handlers only enqueue and
/// read published snapshots.
class Gateway {
 public:
  explicit Gateway(std::unique_ptr<Simulation> sim);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Binds 127.0.0.1:`port` (0 picks a free port) and starts serving.
  /// Returns the bound port. Throws Error when the port is busy.
  std::uint16_t start(std::uint16_t port, const std::string& address = "127.0.0.1");
  void stop();
  /// Blocks until stop() is called from another thread or a signal.
  void wait();

  /// Runs a control verb on the engine thread. Step blocks until the
  /// snapshot is published; run returns once the run is scheduled.
  nlohmann::json control(const SimControl& c);

  /// JSONL of every snapshot since the last reset.
  std::string timeline() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace cpes
