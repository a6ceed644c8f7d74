#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "cpes/grid.hpp"
#include "cpes/trust.hpp"

namespace cpes {

enum class ServiceState { Normal, Limited, Failed };

std::string_view to_string(ServiceState s);
ServiceState parse_service_state(std::string_view s);

struct SeConfig {
  double t_c_threshold = 0.5;
  double latency_threshold_ms = 1000.0;
  double pseudo_cap = 0.5;  // max fraction of pseudo measurements in z_p
  Aggregation service_policy = Aggregation::Min;
  double tolerance = 1e-8;  // max |dx| for WLS convergence
  int max_iterations = 50;
  double significance = 0.01;  // chi-square test level
  double rank_tolerance = 1e-8;  // relative to the largest singular value
  double influence_epsilon = 0.01;
  double pseudo_sigma_factor = 20.0;
  double pseudo_credibility = 0.6;
  double min_rcond = 1e-14;  // reciprocal condition bound on the gain matrix

  void validate() const;
};

struct RankReport {
  int rank = 0;
  int n_sv = 0;
  bool solvable = false;
  friend bool operator==(const RankReport&, const RankReport&) = default;
};

struct StateVector {
  Eigen::VectorXd vm;
  Eigen::VectorXd va;
};

/// Numerical rank of H at flat start; solvable iff rank == 2N-1.
RankReport check_solvability(const MeasurementSet& measurements, const PowerGrid& grid,
                             double rank_tolerance = 1e-8);

struct WlsResult {
  StateVector x;
  std::vector<std::string> ids;     // measurement ids, row order
  Eigen::VectorXd residuals;        // z - h(x)
  Eigen::VectorXd normalized;       // r_i / sqrt(Omega_ii); 0 for critical rows
  double objective = 0.0;           // sum of (r_i / sigma_i)^2
  int dof = 0;                      // m - n_sv
  int iterations = 0;
  Eigen::MatrixXd sensitivity;      // (H'WH)^-1 H'W at the solution, n_sv x m
};

/// Gauss-Newton WLS from flat start. Throws ConvergenceError or
/// IllConditionedError.
WlsResult wls_estimate(const MeasurementSet& measurements, const PowerGrid& grid,
                       const SeConfig& cfg = {});

/// Upper (1 - significance) quantile of chi-square with `dof` degrees.
double chi_square_threshold(int dof, double significance);

/// Chi-square test on the objective; when rejected, the measurement with
/// the largest normalized residual.
std::vector<std::string> detect_bad_data(const WlsResult& wls, const SeConfig& cfg = {});

/// Replaces or fills each slot with a profile value at inflated sigma.
/// Throws PseudoCapExceeded when the pseudo fraction would exceed the cap.
MeasurementSet substitute_pseudo(const MeasurementSet& measurements, std::span<const SensorSpec> slots,
                                 const std::map<std::string, double>& profiles, const SeConfig& cfg,
                                 double timestamp = 0.0);

std::string pseudo_id(const std::string& sensor_id);

/// Trust of a pseudo measurement: Credibility only.
MultivariateTrustValue pseudo_trust(const std::string& id, const TrustContext& ctx, const SeConfig& cfg);

/// Names of the state variables in packed order ("va:<bus>", "vm:<bus>").
std::vector<std::string> state_variable_names(const PowerGrid& grid);

/// Per state variable, the facet-wise minimum over the trust of every
/// measurement whose normalized sensitivity reaches epsilon.
/// `measurement_trust` is aligned with `wls.ids`.
std::vector<MultivariateTrustValue> propagate_trust_to_states(
    std::span<const MultivariateTrustValue> measurement_trust, const WlsResult& wls,
    const PowerGrid& grid, const SeConfig& cfg, const ClusterConfig& cluster = {});

/// Service-level t_c over per-variable data-correctness trust.
double service_trust(std::span<const MultivariateTrustValue> variable_trust, const SeConfig& cfg,
                     const ClusterConfig& cluster = {});

/// Everything the state classifier looks at. Optional trust values are
/// absent when no estimate was produced; optional z_p operands are absent
/// when the fallback was not attempted or produced no set.
struct SeOperands {
  bool server_available = true;
  RankReport rank_z;
  std::optional<double> t_c_z;
  std::optional<RankReport> rank_zp;
  std::optional<double> t_c_zp;
  bool timely = true;
  double threshold = 0.5;
};

struct SeResult {
  ServiceState state = ServiceState::Failed;
  SeOperands operands;
  std::optional<StateVector> estimate;
  std::vector<std::string> variable_names;
  std::vector<MultivariateTrustValue> variable_trust;
  std::optional<double> t_c;  // of the set that produced `estimate`
  double objective = 0.0;
  int dof = 0;
  std::vector<std::string> used_pseudo;
  std::vector<std::string> suspects;
  std::vector<std::string> late;
  std::vector<std::string> missing;
  std::vector<std::string> trace;  // decision steps in evaluation order
  bool used_pseudo_any() const { return !used_pseudo.empty(); }
};

/// Decision flow over the operands. Throws InconsistentEvidence for
/// operand combinations no state condition accepts (an accepted,
/// trusted z with late data).
SeResult classify_se_state(const SeOperands& operands);

struct SeInput {
  bool server_available = true;
  MeasurementSet delivered;
  /// Trust per delivered measurement id.
  std::map<std::string, MultivariateTrustValue> measurement_trust;
  /// Historical value per sensor id.
  std::map<std::string, double> profiles;
  double time = 0.0;
};

/// Full service evaluation: solvability, WLS, bad-data detection, trust
/// propagation, pseudo fallback and classification.
SeResult run_state_estimation(const PowerGrid& grid, const SeInput& input, const SeConfig& cfg,
                              const ClusterConfig& cluster = {});

nlohmann::json to_json(const SeOperands& ops);
nlohmann::json to_json(const SeResult& r);

}  // namespace cpes
