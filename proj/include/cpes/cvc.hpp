#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpes/grid.hpp"
#include "cpes/ict.hpp"
#include "cpes/state_estimation.hpp"

namespace cpes {

/// ICT controller component and the grid controllable it actuates.
struct ControllerBinding {
  std::string component;
  std::string controllable;
};

/// Controller bindings for every controller component in the topology.
std::vector<ControllerBinding> controller_bindings(const IctTopology& topology);

struct CvcSetpoint {
  std::string controller;    // ICT component id
  std::string controllable;  // grid controllable id
  double q = 0.0;            // absolute reactive setpoint, p.u.
  friend bool operator==(const CvcSetpoint&, const CvcSetpoint&) = default;
};

struct CvcSolution {
  std::vector<CvcSetpoint> setpoints;  // sorted by controller id
  bool uses_pseudo = false;
  double quality = 0.0;  // predicted max |v - 1| after correction, lower is better

  std::vector<std::string> controllers() const;
  friend bool operator==(const CvcSolution&, const CvcSolution&) = default;
};

struct CvcConfig {
  double l_threshold_ms = 5000.0;
  double t_threshold = 0.5;
  int untrusted_cap = 1;
  double band = 0.05;
  int max_subset = 3;
  double target_margin = 0.01;  // corrected buses aim this far inside the band

  void validate() const;
};

struct Reachability {
  std::optional<double> latency_ms;  // nullopt = Unreachable
  bool reachable = false;
};

/// Buses whose estimated magnitude violates the band.
std::set<std::string> detect_violations(const PowerGrid& grid, const SeResult& se, double band);

/// Sensitivity-based search over controller subsets up to cfg.max_subset.
/// Each returned solution is predicted to bring every bus inside the band.
std::vector<CvcSolution> compute_solutions(const PowerGrid& grid, const SeResult& se,
                                           const std::vector<ControllerBinding>& controllers,
                                           const CvcConfig& cfg);

/// dV/dQ at the given operating point: rows are buses, columns the
/// controllers' buses.
Eigen::MatrixXd voltage_sensitivity(const PowerGrid& grid, const StateVector& x,
                                    const std::vector<ControllerBinding>& controllers);

/// reachable iff path latency from the control room is within threshold.
std::map<std::string, Reachability> check_reachability(const IctTopology& topology,
                                                       const std::vector<std::string>& controllers,
                                                       const CvcConfig& cfg, double t = 0.0);

enum class ControlMode { Remote, Local };
std::string_view to_string(ControlMode m);

struct CvcEvidence {
  ServiceState se_state = ServiceState::Normal;
  bool violations_present = false;
  int solutions = 0;
  int non_pseudo = 0;
  int reachable = 0;
  int trusted = 0;
  int within_cap = 0;
  std::vector<std::string> trace;
};

struct CvcResult {
  ServiceState state = ServiceState::Failed;
  std::optional<CvcSolution> chosen;
  std::map<std::string, Reachability> reachability;
  std::map<std::string, double> controller_trust;
  ControlMode mode = ControlMode::Local;
  CvcEvidence evidence;
};

/// Decision flow over SE state, solution set and controller evidence.
/// `solutions` is nullopt when no violation was detected (nothing to
/// correct). Throws InconsistentEvidence when a controller of some
/// solution has no trust value.
CvcResult classify_cvc_state(ServiceState se_state, const std::optional<std::vector<CvcSolution>>& solutions,
                             const std::map<std::string, Reachability>& reachability,
                             const std::map<std::string, double>& controller_trust, const CvcConfig& cfg);

/// Lexicographic choice among eligible solutions: fewest untrusted
/// controllers, best quality, lowest controller-id tuple. Throws
/// ValidationError when nothing is eligible.
CvcSolution select_solution(const std::vector<CvcSolution>& solutions,
                            const std::map<std::string, Reachability>& reachability,
                            const std::map<std::string, double>& controller_trust, const CvcConfig& cfg);

struct DispatchReport {
  std::vector<CvcSetpoint> applied;
  std::vector<std::string> undelivered;
  PowerGrid grid;
};

/// Applies setpoints for controllers that are still reachable and in
/// remote mode; the rest are reported undelivered.
DispatchReport dispatch_setpoints(const CvcSolution& solution, const IctTopology& topology,
                                  const PowerGrid& grid, const CvcConfig& cfg,
                                  const std::set<std::string>& local_mode = {}, double t = 0.0);

nlohmann::json to_json(const CvcSolution& s);
nlohmann::json to_json(const CvcResult& r);

}  // namespace cpes
