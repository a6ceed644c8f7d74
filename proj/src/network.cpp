#include "cpes/network.hpp"

#include <cmath>
#include <complex>

namespace cpes {

StateLayout::StateLayout(const PowerGrid& grid) : n_(grid.bus_count()), angle_col_(n_, -1) {
  int col = 0;
  for (int i = 0; i < n_; ++i) {
    if (i != grid.slack_index()) angle_col_[i] = col++;
  }
}

Eigen::VectorXd StateLayout::pack(const Eigen::VectorXd& vm, const Eigen::VectorXd& va) const {
  Eigen::VectorXd x(dimension());
  for (int i = 0; i < n_; ++i) {
    if (angle_col_[i] >= 0) x(angle_col_[i]) = va(i);
    x(magnitude_col(i)) = vm(i);
  }
  return x;
}

void StateLayout::unpack(const Eigen::VectorXd& x, Eigen::VectorXd& vm, Eigen::VectorXd& va) const {
  vm.resize(n_);
  va.resize(n_);
  for (int i = 0; i < n_; ++i) {
    va(i) = angle_col_[i] >= 0 ? x(angle_col_[i]) : 0.0;
    vm(i) = x(magnitude_col(i));
  }
}

Eigen::VectorXd StateLayout::flat() const {
  return pack(Eigen::VectorXd::Ones(n_), Eigen::VectorXd::Zero(n_));
}

namespace {

struct SeriesParams {
  double g, b, half_shunt;
};

SeriesParams series_of(const Branch& br) {
  const std::complex<double> y = 1.0 / std::complex<double>(br.r, br.x);
  return {y.real(), y.imag(), br.b / 2.0};
}

// Near-end/far-end bus indices for a branch measurement.
std::pair<int, int> ends_of(const PowerGrid& grid, const Channel& ch) {
  const Branch& br = grid.branches()[ch.element];
  int f = grid.bus_index(br.from);
  int t = grid.bus_index(br.to);
  return ch.end == BranchEnd::From ? std::pair{f, t} : std::pair{t, f};
}

struct FlowPQ {
  double p, q;
};

FlowPQ branch_flow(const SeriesParams& s, double vi, double vj, double tij) {
  const double c = std::cos(tij), sn = std::sin(tij);
  return {vi * vi * s.g - vi * vj * (s.g * c + s.b * sn),
          -vi * vi * (s.b + s.half_shunt) - vi * vj * (s.g * sn - s.b * c)};
}

}  // namespace

void bus_injections(const PowerGrid& grid, const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                    Eigen::VectorXd& p, Eigen::VectorXd& q) {
  const int n = grid.bus_count();
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
  const Eigen::VectorXcd s = v.cwiseProduct((grid.admittance() * v).conjugate());
  p = s.real();
  q = s.imag();
}

double channel_value(const PowerGrid& grid, const Channel& ch, const Eigen::VectorXd& vm,
                     const Eigen::VectorXd& va) {
  switch (ch.kind) {
    case MeasurementKind::VMag:
      return vm(ch.element);
    case MeasurementKind::PInj:
    case MeasurementKind::QInj: {
      const auto& y = grid.admittance();
      const int i = ch.element;
      double p = 0.0, q = 0.0;
      for (int k = 0; k < grid.bus_count(); ++k) {
        const double g = y(i, k).real(), b = y(i, k).imag();
        const double t = va(i) - va(k);
        p += vm(k) * (g * std::cos(t) + b * std::sin(t));
        q += vm(k) * (g * std::sin(t) - b * std::cos(t));
      }
      return ch.kind == MeasurementKind::PInj ? vm(i) * p : vm(i) * q;
    }
    case MeasurementKind::PFlow:
    case MeasurementKind::QFlow:
    case MeasurementKind::IMag: {
      const auto [i, j] = ends_of(grid, ch);
      const auto f = branch_flow(series_of(grid.branches()[ch.element]), vm(i), vm(j), va(i) - va(j));
      if (ch.kind == MeasurementKind::PFlow) return f.p;
      if (ch.kind == MeasurementKind::QFlow) return f.q;
      return std::hypot(f.p, f.q) / vm(i);
    }
  }
  return 0.0;
}

void channel_partials(const PowerGrid& grid, const Channel& ch, const Eigen::VectorXd& vm,
                      const Eigen::VectorXd& va, Eigen::VectorXd& d_theta, Eigen::VectorXd& d_v) {
  const int n = grid.bus_count();
  d_theta = Eigen::VectorXd::Zero(n);
  d_v = Eigen::VectorXd::Zero(n);
  switch (ch.kind) {
    case MeasurementKind::VMag:
      d_v(ch.element) = 1.0;
      return;
    case MeasurementKind::PInj:
    case MeasurementKind::QInj: {
      const auto& y = grid.admittance();
      const int i = ch.element;
      const double pi = channel_value(grid, {MeasurementKind::PInj, i, BranchEnd::From}, vm, va);
      const double qi = channel_value(grid, {MeasurementKind::QInj, i, BranchEnd::From}, vm, va);
      const double gii = y(i, i).real(), bii = y(i, i).imag();
      for (int k = 0; k < n; ++k) {
        if (k == i) continue;
        const double g = y(i, k).real(), b = y(i, k).imag();
        if (g == 0.0 && b == 0.0) continue;
        const double t = va(i) - va(k), c = std::cos(t), s = std::sin(t);
        if (ch.kind == MeasurementKind::PInj) {
          d_theta(k) = vm(i) * vm(k) * (g * s - b * c);
          d_v(k) = vm(i) * (g * c + b * s);
        } else {
          d_theta(k) = -vm(i) * vm(k) * (g * c + b * s);
          d_v(k) = vm(i) * (g * s - b * c);
        }
      }
      if (ch.kind == MeasurementKind::PInj) {
        d_theta(i) = -qi - bii * vm(i) * vm(i);
        d_v(i) = pi / vm(i) + gii * vm(i);
      } else {
        d_theta(i) = pi - gii * vm(i) * vm(i);
        d_v(i) = qi / vm(i) - bii * vm(i);
      }
      return;
    }
    case MeasurementKind::PFlow:
    case MeasurementKind::QFlow:
    case MeasurementKind::IMag: {
      const auto [i, j] = ends_of(grid, ch);
      const auto sp = series_of(grid.branches()[ch.element]);
      const double vi = vm(i), vj = vm(j), t = va(i) - va(j);
      const double c = std::cos(t), s = std::sin(t);
      // dP and dQ with respect to (theta_i, theta_j, v_i, v_j)
      const double dp_ti = vi * vj * (sp.g * s - sp.b * c);
      const double dp_vi = 2.0 * vi * sp.g - vj * (sp.g * c + sp.b * s);
      const double dp_vj = -vi * (sp.g * c + sp.b * s);
      const double dq_ti = -vi * vj * (sp.g * c + sp.b * s);
      const double dq_vi = -2.0 * vi * (sp.b + sp.half_shunt) - vj * (sp.g * s - sp.b * c);
      const double dq_vj = -vi * (sp.g * s - sp.b * c);
      if (ch.kind == MeasurementKind::PFlow) {
        d_theta(i) = dp_ti;
        d_theta(j) = -dp_ti;
        d_v(i) = dp_vi;
        d_v(j) = dp_vj;
      } else if (ch.kind == MeasurementKind::QFlow) {
        d_theta(i) = dq_ti;
        d_theta(j) = -dq_ti;
        d_v(i) = dq_vi;
        d_v(j) = dq_vj;
      } else {
        // |I| = |S| / v_i; the derivative is undefined at zero current.
        const auto f = branch_flow(sp, vi, vj, t);
        const double smag = std::hypot(f.p, f.q);
        if (smag < 1e-12) return;
        const double a = 1.0 / (smag * vi);
        d_theta(i) = a * (f.p * dp_ti + f.q * dq_ti);
        d_theta(j) = -d_theta(i);
        d_v(i) = a * (f.p * dp_vi + f.q * dq_vi) - smag / (vi * vi);
        d_v(j) = a * (f.p * dp_vj + f.q * dq_vj);
      }
      return;
    }
  }
}

Eigen::VectorXd measurement_function(const PowerGrid& grid, const std::vector<Channel>& channels,
                                     const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
  Eigen::VectorXd h(static_cast<Eigen::Index>(channels.size()));
  for (std::size_t r = 0; r < channels.size(); ++r) {
    h(static_cast<Eigen::Index>(r)) = channel_value(grid, channels[r], vm, va);
  }
  return h;
}

Eigen::MatrixXd measurement_jacobian(const PowerGrid& grid, const std::vector<Channel>& channels,
                                     const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
  const StateLayout layout(grid);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(channels.size()),
                                            layout.dimension());
  Eigen::VectorXd dt, dv;
  for (std::size_t r = 0; r < channels.size(); ++r) {
    channel_partials(grid, channels[r], vm, va, dt, dv);
    for (int b = 0; b < grid.bus_count(); ++b) {
      const auto row = static_cast<Eigen::Index>(r);
      if (layout.angle_col(b) >= 0) h(row, layout.angle_col(b)) = dt(b);
      h(row, layout.magnitude_col(b)) = dv(b);
    }
  }
  return h;
}

}  // namespace cpes
