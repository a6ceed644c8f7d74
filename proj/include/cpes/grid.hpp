#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cpes {

enum class BusType { Slack, PV, PQ };

enum class MeasurementKind { VMag, PInj, QInj, PFlow, QFlow, IMag };

enum class BranchEnd { From, To };

enum class Provenance { Field, Pseudo };

std::string_view to_string(BusType t);
std::string_view to_string(MeasurementKind k);
std::string_view to_string(BranchEnd e);
std::string_view to_string(Provenance p);
BusType parse_bus_type(std::string_view s);
MeasurementKind parse_measurement_kind(std::string_view s);
BranchEnd parse_branch_end(std::string_view s);

/// True for kinds located at a branch end rather than a bus.
bool is_branch_kind(MeasurementKind k);

struct Bus {
  std::string id;
  BusType type = BusType::PQ;
  double v_nom = 1.0;  // magnitude setpoint for slack and PV buses
  double p = 0.0;      // scheduled injection, generation positive
  double q = 0.0;
};

struct Branch {
  std::string id;
  std::string from;
  std::string to;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;  // total line charging, split half per end
};

/// Controller-bound injection. `p`/`q` hold the current setpoint.
struct Controllable {
  std::string id;
  std::string bus;
  double p_min = 0.0, p_max = 0.0;
  double q_min = 0.0, q_max = 0.0;
  double p = 0.0, q = 0.0;
};

/// Sensor channel placement. `device` names the ICT component that
/// reports this channel; it defaults to the sensor id.
struct SensorSpec {
  std::string id;
  MeasurementKind kind = MeasurementKind::VMag;
  std::string location;  // bus id, or branch id for flow/current kinds
  BranchEnd end = BranchEnd::From;
  double sigma = 0.01;
  std::string device;
};

/// Sensor location resolved to matrix indices.
struct Channel {
  MeasurementKind kind;
  int element;  // bus index or branch index
  BranchEnd end;
};

struct Injection {
  double p = 0.0;
  double q = 0.0;
};

/// Validated immutable power network in per unit.
class PowerGrid {
 public:
  /// Throws ValidationError naming the violated invariant.
  PowerGrid(std::vector<Bus> buses, std::vector<Branch> branches,
            std::vector<Controllable> controllables, std::vector<SensorSpec> sensors,
            double base_mva = 100.0);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Controllable>& controllables() const { return controllables_; }
  const std::vector<SensorSpec>& sensors() const { return sensors_; }
  double base_mva() const { return base_mva_; }

  int bus_count() const { return static_cast<int>(buses_.size()); }
  int branch_count() const { return static_cast<int>(branches_.size()); }
  int slack_index() const { return slack_; }
  /// Number of state variables: all magnitudes plus non-slack angles.
  int state_dimension() const { return 2 * bus_count() - 1; }

  int bus_index(const std::string& id) const;
  int branch_index(const std::string& id) const;
  const Controllable& controllable(const std::string& id) const;
  const SensorSpec& sensor(const std::string& id) const;
  bool has_bus(const std::string& id) const { return bus_idx_.count(id) > 0; }
  bool has_branch(const std::string& id) const { return branch_idx_.count(id) > 0; }
  bool has_controllable(const std::string& id) const;
  bool has_sensor(const std::string& id) const;

  /// Throws UnknownIdError for an unknown location.
  Channel resolve(MeasurementKind kind, const std::string& location, BranchEnd end) const;

  const Eigen::MatrixXcd& admittance() const { return ybus_; }

  /// Scheduled bus injections plus controllable setpoints.
  std::vector<Injection> net_injections() const;

  PowerGrid with_controllables(std::vector<Controllable> c) const;
  PowerGrid with_bus_injections(const std::map<std::string, Injection>& overrides) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<Controllable> controllables_;
  std::vector<SensorSpec> sensors_;
  double base_mva_;
  int slack_ = -1;
  std::map<std::string, int> bus_idx_;
  std::map<std::string, int> branch_idx_;
  Eigen::MatrixXcd ybus_;
};

/// Ground-truth operating point.
struct BusStateTruth {
  Eigen::VectorXd vm;
  Eigen::VectorXd va;  // radians, slack fixed at 0
  struct Flow {
    double p_from, q_from, p_to, q_to;
  };
  std::vector<Flow> flows;
  int iterations = 0;
  double max_mismatch = 0.0;
};

struct PowerFlowOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
};

/// Parses and validates a grid definition JSON document.
PowerGrid load_grid(std::string_view document);
PowerGrid load_grid_file(const std::string& path);

/// Newton-Raphson AC power flow from flat start. `injections` is per bus
/// index; entries for the slack bus (and Q for PV buses) are ignored.
BusStateTruth solve_power_flow(const PowerGrid& grid, const std::vector<Injection>& injections,
                               const PowerFlowOptions& opts = {});
inline BusStateTruth solve_power_flow(const PowerGrid& grid) {
  return solve_power_flow(grid, grid.net_injections());
}

struct NoiseModel {
  /// Noise std = sensor sigma * scale unless overridden per kind.
  double scale = 1.0;
  std::map<MeasurementKind, double> per_kind;
  double std_for(const SensorSpec& s) const;
};

struct Measurement {
  std::string id;
  MeasurementKind kind = MeasurementKind::VMag;
  std::string location;
  BranchEnd end = BranchEnd::From;
  double value = 0.0;
  double sigma = 0.01;
  double timestamp = 0.0;
  Provenance provenance = Provenance::Field;
  std::optional<std::string> source;  // reporting ICT component, field only
  double latency_ms = 0.0;            // set on delivery
};

using MeasurementSet = std::vector<Measurement>;

/// Truth plus seeded Gaussian noise, one measurement per sensor channel.
MeasurementSet generate_measurements(const PowerGrid& grid, const BusStateTruth& truth,
                                     const std::vector<SensorSpec>& sensors, const NoiseModel& noise,
                                     std::uint64_t seed, double timestamp = 0.0);

class Rng;
/// Variant drawing from a caller-owned random stream.
MeasurementSet generate_measurements(const PowerGrid& grid, const BusStateTruth& truth,
                                     const std::vector<SensorSpec>& sensors, const NoiseModel& noise,
                                     Rng& rng, double timestamp = 0.0);

/// Buses with |v - 1| > band. Throws ValidationError unless band in (0, 0.2].
std::set<std::string> check_voltage_violations(const PowerGrid& grid, const Eigen::VectorXd& vm,
                                               double band);

struct SetpointCommand {
  std::string controller;
  double q = 0.0;
  std::optional<double> p;
};

/// Returns a copy with the given controllable setpoints.
PowerGrid apply_setpoints(const PowerGrid& grid, const std::vector<SetpointCommand>& setpoints);

}  // namespace cpes
