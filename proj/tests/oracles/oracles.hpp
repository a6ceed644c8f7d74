#pragma once

// Test-only reference implementations. None of these call into the
// library's numerical code; they rebuild everything from the fixture data.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpes/grid.hpp"
#include "cpes/ict.hpp"

namespace oracle {

/// Bus admittance matrix assembled element by element from branch data.
Eigen::MatrixXcd admittance(const cpes::PowerGrid& grid);

struct Phasors {
  Eigen::VectorXd vm;
  Eigen::VectorXd va;
};

/// Newton iteration on the complex power mismatch with a central-difference
/// Jacobian. Injections per bus index; slack entries ignored.
Phasors power_flow(const cpes::PowerGrid& grid, const std::vector<cpes::Injection>& injections,
                   double tol = 1e-11, int max_iter = 60);

/// Same operating point with the grid's own scheduled injections.
Phasors power_flow(const cpes::PowerGrid& grid);

/// Measured quantity from complex voltages and currents.
double measure(const cpes::PowerGrid& grid, const Phasors& v, const cpes::SensorSpec& s);

/// Central-difference Jacobian of the given sensors w.r.t. the packed state
/// [angles of non-slack buses, all magnitudes].
Eigen::MatrixXd fd_jacobian(const cpes::PowerGrid& grid, const std::vector<cpes::SensorSpec>& sensors,
                            const Phasors& at, double h = 1e-6);

/// Rank via a full Jacobi SVD with relative tolerance on singular values.
int svd_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-8);

/// Minimum up-path latency by enumerating every simple path.
std::optional<double> brute_force_latency(const cpes::IctTopology& topo, const std::string& src,
                                          const std::string& dst);

/// State equations of the estimation service, written as the literal
/// boolean formulas. A missing trust value counts as below threshold.
struct SeTruth {
  bool failed, limited, normal;
};
SeTruth se_equations(bool server, bool rank_z_full, std::optional<double> tc_z, bool rank_zp_full,
                     std::optional<double> tc_zp, bool timely, double theta);

/// Controller facts of one candidate solution in the small CVC universe.
struct SolutionFacts {
  bool uses_pseudo;
  std::vector<int> controllers;  // indices into the controller arrays below
};
struct CvcTruth {
  bool failed, limited, normal;
};
/// Literal CVC state formulas: reachable[a] means l <= l_thr, trusted[a]
/// means t_a >= t_thr. `cap` bounds the untrusted controllers of a
/// Limited solution. Y absent (no violation) means nothing to correct.
CvcTruth cvc_equations(bool se_failed, const std::optional<std::vector<SolutionFacts>>& Y,
                       const std::vector<bool>& reachable, const std::vector<bool>& trusted, int cap);

}  // namespace oracle
