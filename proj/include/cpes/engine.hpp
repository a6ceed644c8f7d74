#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpes/cvc.hpp"
#include "cpes/grid.hpp"
#include "cpes/ict.hpp"
#include "cpes/rng.hpp"
#include "cpes/state_estimation.hpp"
#include "cpes/trust.hpp"

namespace cpes {

inline constexpr int kSchemaVersion = 1;

enum class RemedialKind {
  RepairComponent,
  ActivateBackupServer,
  ReroutePreference,
  SetControllerMode,
  ClearFdi,
  AdjustThreshold,
};

std::string_view to_string(RemedialKind k);
std::optional<RemedialKind> parse_remedial_kind(std::string_view s);

struct RemedialAction {
  RemedialKind kind = RemedialKind::RepairComponent;
  std::string target;
  nlohmann::json params = nlohmann::json::object();
};

enum class EventOrigin { Scripted, Operator };

struct ScenarioEvent {
  double time = 0.0;
  std::variant<Disturbance, RemedialAction> payload;
  EventOrigin origin = EventOrigin::Scripted;

  std::string_view kind_name() const;
  const std::string& target() const;
};

/// Parses {"t","kind","target","params"}. Throws ValidationError.
ScenarioEvent parse_event(const nlohmann::json& j, EventOrigin origin);
nlohmann::json to_json(const ScenarioEvent& e);

struct TrustSettings {
  std::vector<TrustEstimatorSpec> estimators = default_estimators();
  ClusterConfig cluster;
  double window_s = 1.0;  // validity window of monitoring inputs
};

struct Scenario {
  std::string grid_path;
  std::uint64_t seed = 0;
  int cycles = 10;
  double period_s = 1.0;
  SeConfig se;
  CvcConfig cvc;
  std::optional<std::string> se_server;
  TrustSettings trust;
  NoiseModel noise;
  std::map<std::string, Injection> injections;
  std::vector<ScenarioEvent> events;  // stable-sorted by time
};

/// Schema-level parse; references are checked by validate_scenario.
Scenario parse_scenario(std::string_view document);
/// Throws ValidationError / UnknownIdError on dangling references.
void validate_scenario(const Scenario& scenario, const PowerGrid& grid, const IctTopology& topology);
Scenario load_scenario(std::string_view document, const PowerGrid& grid, const IctTopology& topology);

/// Checks an event against the current world (target exists, parameters
/// fit). Throws on the first problem.
void validate_event(const ScenarioEvent& e, const PowerGrid& grid, const IctTopology& topology);

/// Immutable per-cycle world state.
struct Snapshot {
  int cycle = 0;
  double time = 0.0;
  Eigen::VectorXd vm_truth;
  Eigen::VectorXd va_truth;
  int measurement_count = 0;
  int delivered_count = 0;
  std::map<std::string, bool> component_up;
  std::string se_server;
  std::map<std::string, MultivariateTrustValue> trust;  // components and delivered measurements
  SeResult se;
  CvcResult cvc;
  std::vector<CvcSetpoint> dispatched;
  std::vector<std::string> undelivered;
  std::vector<nlohmann::json> events;  // applied at the start of this cycle
  std::vector<nlohmann::json> active_disturbances;
  std::set<std::string> local_mode;
};

struct CommandAck {
  bool accepted = false;
  int effective_cycle = 0;
  std::string reason;
};

/// Single-owner co-simulation loop. step/run/reset must be called from
/// one thread; apply_command and latest are safe from any thread.
class Simulation {
 public:
  Simulation(PowerGrid grid, IctTopology topology, Scenario scenario);

  /// One full cycle: events, power flow, measurement, delivery,
  /// monitoring, trust, SE, CVC, dispatch.
  std::shared_ptr<const Snapshot> step();
  std::vector<std::shared_ptr<const Snapshot>> run(int n_cycles);

  /// Queues an operator command for the next cycle boundary. Invalid
  /// commands are rejected with a reason and leave the sim unchanged.
  CommandAck apply_command(ScenarioEvent cmd);

  void reset();

  int next_cycle() const;
  std::shared_ptr<const Snapshot> latest() const;

  const Scenario& scenario() const { return scenario_; }
  const PowerGrid& grid() const { return grid_; }
  const IctTopology& topology() const { return topology_; }
  const std::map<std::string, double>& profiles() const { return profiles_; }

 private:
  void apply_event(const ScenarioEvent& e);

  PowerGrid initial_grid_;
  IctTopology initial_topology_;
  Scenario initial_scenario_;

  PowerGrid grid_;
  IctTopology topology_;
  Scenario scenario_;
  Rng rng_;
  std::size_t next_event_ = 0;
  std::string se_server_;
  std::set<std::string> local_mode_;
  std::deque<MonitoringRecord> history_;
  std::map<std::string, double> profiles_;

  mutable std::mutex mutex_;  // guards cycle_, mailbox_, latest_
  int cycle_ = 0;
  std::vector<ScenarioEvent> mailbox_;
  std::shared_ptr<const Snapshot> latest_;
};

/// One timeline line.
nlohmann::json timeline_record(const Snapshot& s);

/// Reads a whole file. Throws Error when unreadable.
std::string read_file(const std::string& path);

/// Loads grid (with its ICT section) and optional scenario files and
/// applies command-line overrides. Without a scenario the sim runs a
/// quiescent default scenario.
std::unique_ptr<Simulation> open_simulation(const std::string& grid_path,
                                            const std::optional<std::string>& scenario_path,
                                            std::optional<std::uint64_t> seed = std::nullopt,
                                            std::optional<int> cycles = std::nullopt);

/// JSONL, one record per snapshot. Throws Error on I/O failure.
void export_timeline(const std::vector<std::shared_ptr<const Snapshot>>& timeline, std::ostream& out);
void export_timeline(const std::vector<std::shared_ptr<const Snapshot>>& timeline, const std::string& path);

}  // namespace cpes
