#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cpes/grid.hpp"

namespace cpes {

/// Maps between (vm, va) and the packed state vector
/// x = [va of non-slack buses in bus order, vm of all buses].
class StateLayout {
 public:
  explicit StateLayout(const PowerGrid& grid);

  int dimension() const { return 2 * n_ - 1; }
  int bus_count() const { return n_; }
  /// Column of bus i's angle, or -1 for the slack bus.
  int angle_col(int bus) const { return angle_col_[bus]; }
  int magnitude_col(int bus) const { return n_ - 1 + bus; }

  Eigen::VectorXd pack(const Eigen::VectorXd& vm, const Eigen::VectorXd& va) const;
  void unpack(const Eigen::VectorXd& x, Eigen::VectorXd& vm, Eigen::VectorXd& va) const;
  Eigen::VectorXd flat() const;

 private:
  int n_;
  std::vector<int> angle_col_;
};

/// Value of one measured quantity at the given operating point.
double channel_value(const PowerGrid& grid, const Channel& ch, const Eigen::VectorXd& vm,
                     const Eigen::VectorXd& va);

/// Partial derivatives of one channel with respect to every bus angle and
/// magnitude (slack included). Both outputs are resized to bus_count.
void channel_partials(const PowerGrid& grid, const Channel& ch, const Eigen::VectorXd& vm,
                      const Eigen::VectorXd& va, Eigen::VectorXd& d_theta, Eigen::VectorXd& d_v);

/// h(x) for a list of channels.
Eigen::VectorXd measurement_function(const PowerGrid& grid, const std::vector<Channel>& channels,
                                     const Eigen::VectorXd& vm, const Eigen::VectorXd& va);

/// Analytic H = dh/dx in the packed state layout.
Eigen::MatrixXd measurement_jacobian(const PowerGrid& grid, const std::vector<Channel>& channels,
                                     const Eigen::VectorXd& vm, const Eigen::VectorXd& va);

/// Bus power injections S = V conj(Y V).
void bus_injections(const PowerGrid& grid, const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                    Eigen::VectorXd& p, Eigen::VectorXd& q);

}  // namespace cpes
