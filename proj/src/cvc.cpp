#include "cpes/cvc.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cpes/error.hpp"
#include "cpes/network.hpp"

namespace cpes {

using nlohmann::json;

std::vector<ControllerBinding> controller_bindings(const IctTopology& topology) {
  std::vector<ControllerBinding> out;
  for (const auto& c : topology.components()) {
    if (c.kind == ComponentKind::Controller && c.location) out.push_back({c.id, *c.location});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.component < b.component; });
  return out;
}

std::vector<std::string> CvcSolution::controllers() const {
  std::vector<std::string> out;
  for (const auto& s : setpoints) out.push_back(s.controller);
  return out;
}

void CvcConfig::validate() const {
  if (!(l_threshold_ms >= 0.0)) throw ValidationError("cvc.l_threshold_ms must be >= 0");
  if (!(t_threshold >= 0.0 && t_threshold <= 1.0)) throw ValidationError("cvc.t_threshold must lie in [0,1]");
  if (untrusted_cap < 0) throw ValidationError("cvc.untrusted_cap must be >= 0");
  if (!(band > 0.0 && band <= 0.2)) throw ValidationError("cvc.band must lie in (0, 0.2]");
  if (max_subset < 1) throw ValidationError("cvc.max_subset must be >= 1");
  if (!(target_margin >= 0.0 && target_margin < band)) throw ValidationError("cvc.target_margin must lie in [0, band)");
}

std::string_view to_string(ControlMode m) { return m == ControlMode::Remote ? "remote" : "local"; }

std::set<std::string> detect_violations(const PowerGrid& grid, const SeResult& se, double band) {
  if (!se.estimate) return {};
  return check_voltage_violations(grid, se.estimate->vm, band);
}

Eigen::MatrixXd voltage_sensitivity(const PowerGrid& grid, const StateVector& x,
                                    const std::vector<ControllerBinding>& controllers) {
  const int n = grid.bus_count();
  std::vector<int> ang, pq_pos(static_cast<std::size_t>(n), -1);
  int nm = 0;
  for (int i = 0; i < n; ++i) {
    if (i == grid.slack_index()) continue;
    ang.push_back(i);
    if (grid.buses()[i].type == BusType::PQ) pq_pos[static_cast<std::size_t>(i)] = nm++;
  }
  const int na = static_cast<int>(ang.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(na + nm, na + nm);
  Eigen::VectorXd dt, dv;
  auto fill = [&](int row, MeasurementKind kind, int bus) {
    channel_partials(grid, {kind, bus, BranchEnd::From}, x.vm, x.va, dt, dv);
    for (int c = 0; c < na; ++c) jac(row, c) = dt(ang[c]);
    for (int b = 0; b < n; ++b) {
      if (pq_pos[static_cast<std::size_t>(b)] >= 0) jac(row, na + pq_pos[static_cast<std::size_t>(b)]) = dv(b);
    }
  };
  for (int r = 0; r < na; ++r) fill(r, MeasurementKind::PInj, ang[r]);
  for (int i = 0; i < n; ++i) {
    if (pq_pos[static_cast<std::size_t>(i)] >= 0) fill(na + pq_pos[static_cast<std::size_t>(i)], MeasurementKind::QInj, i);
  }
  const Eigen::MatrixXd inv = jac.fullPivLu().inverse();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(controllers.size()));
  for (std::size_t c = 0; c < controllers.size(); ++c) {
    const int bus = grid.bus_index(grid.controllable(controllers[c].controllable).bus);
    const int qcol = pq_pos[static_cast<std::size_t>(bus)];
    if (qcol < 0) continue;
    for (int i = 0; i < n; ++i) {
      const int vrow = pq_pos[static_cast<std::size_t>(i)];
      if (vrow >= 0) s(i, static_cast<Eigen::Index>(c)) = inv(na + vrow, na + qcol);
    }
  }
  return s;
}

namespace {

// Least squares on the free columns, then projection onto the box.
Eigen::VectorXd projected_ls(const Eigen::MatrixXd& a, const Eigen::VectorXd& target, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, Eigen::VectorXd start, const std::vector<bool>& free) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    if (free[static_cast<std::size_t>(c)]) cols.push_back(c);
  }
  if (cols.empty()) return start;
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  const Eigen::VectorXd resid = target - a * start;
  const Eigen::VectorXd step = sub.completeOrthogonalDecomposition().solve(resid);
  for (std::size_t k = 0; k < cols.size(); ++k) start(cols[k]) += step(static_cast<Eigen::Index>(k));
  return start.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

std::vector<CvcSolution> compute_solutions(const PowerGrid& grid, const SeResult& se,
                                           const std::vector<ControllerBinding>& controllers,
                                           const CvcConfig& cfg) {
  std::vector<CvcSolution> out;
  if (!se.estimate || controllers.empty()) return out;
  const auto violations = check_voltage_violations(grid, se.estimate->vm, cfg.band);
  if (violations.empty()) return out;

  auto sorted = controllers;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.component < b.component; });
  const Eigen::MatrixXd sens = voltage_sensitivity(grid, *se.estimate, sorted);
  const Eigen::VectorXd& v = se.estimate->vm;
  const int n = grid.bus_count();

  std::vector<int> rows;
  Eigen::VectorXd need(static_cast<Eigen::Index>(violations.size()));
  for (const auto& id : violations) {
    const int i = grid.bus_index(id);
    const double edge = 1.0 + std::copysign(cfg.band - cfg.target_margin, v(i) - 1.0);
    need(static_cast<Eigen::Index>(rows.size())) = edge - v(i);
    rows.push_back(i);
  }

  const int count = static_cast<int>(sorted.size());
  const int max_k = std::min(cfg.max_subset, count);
  for (int k = 1; k <= max_k; ++k) {
    // subsets of size k in lexicographic order
    std::vector<int> pick(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
    while (true) {
      Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), k);
      Eigen::MatrixXd full(n, k);
      Eigen::VectorXd lo(k), hi(k), cur(k);
      for (int c = 0; c < k; ++c) {
        const auto& ctrl = grid.controllable(sorted[static_cast<std::size_t>(pick[static_cast<std::size_t>(c)])].controllable);
        full.col(c) = sens.col(pick[static_cast<std::size_t>(c)]);
        for (std::size_t r = 0; r < rows.size(); ++r) a(static_cast<Eigen::Index>(r), c) = full(rows[r], c);
        cur(c) = ctrl.q;
        lo(c) = ctrl.q_min - ctrl.q;
        hi(c) = ctrl.q_max - ctrl.q;
      }
      Eigen::VectorXd dq = projected_ls(a, need, lo, hi, Eigen::VectorXd::Zero(k), std::vector<bool>(static_cast<std::size_t>(k), true));
      std::vector<bool> free(static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) free[static_cast<std::size_t>(c)] = dq(c) > lo(c) + 1e-12 && dq(c) < hi(c) - 1e-12;
      dq = projected_ls(a, need, lo, hi, dq, free);

      const Eigen::VectorXd predicted = v + full * dq;
      const double worst = (predicted.array() - 1.0).abs().maxCoeff();
      const bool all_used = (dq.array().abs() > 1e-6).all();
      if (worst <= cfg.band && all_used) {
        CvcSolution sol;
        sol.uses_pseudo = se.used_pseudo_any();
        sol.quality = worst;
        for (int c = 0; c < k; ++c) {
          const auto& b = sorted[static_cast<std::size_t>(pick[static_cast<std::size_t>(c)])];
          const auto& ctrl = grid.controllable(b.controllable);
          sol.setpoints.push_back({b.component, b.controllable, std::clamp(cur(c) + dq(c), ctrl.q_min, ctrl.q_max)});
        }
        out.push_back(std::move(sol));
      }
      int i = k - 1;
      while (i >= 0 && pick[static_cast<std::size_t>(i)] == count - k + i) --i;
      if (i < 0) break;
      ++pick[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

std::map<std::string, Reachability> check_reachability(const IctTopology& topology,
                                                       const std::vector<std::string>& controllers,
                                                       const CvcConfig& cfg, double t) {
  std::map<std::string, Reachability> out;
  for (const auto& id : controllers) {
    if (!topology.contains(id)) throw UnknownIdError("controller", id);
    Reachability r;
    r.latency_ms = path_latency(topology, topology.control_room(), id, t);
    r.reachable = r.latency_ms && *r.latency_ms <= cfg.l_threshold_ms;
    out.emplace(id, r);
  }
  return out;
}

namespace {

bool all_reachable(const CvcSolution& y, const std::map<std::string, Reachability>& reach) {
  return std::all_of(y.setpoints.begin(), y.setpoints.end(), [&](const CvcSetpoint& s) {
    auto it = reach.find(s.controller);
    return it != reach.end() && it->second.reachable;
  });
}

int untrusted_count(const CvcSolution& y, const std::map<std::string, double>& trust, double threshold) {
  int n = 0;
  for (const auto& s : y.setpoints) {
    auto it = trust.find(s.controller);
    if (it == trust.end()) throw InconsistentEvidence("no trust value for controller '" + s.controller + "'");
    if (it->second < threshold) ++n;
  }
  return n;
}

}  // namespace

CvcSolution select_solution(const std::vector<CvcSolution>& solutions,
                            const std::map<std::string, Reachability>& reachability,
                            const std::map<std::string, double>& controller_trust, const CvcConfig& cfg) {
  const CvcSolution* best = nullptr;
  int best_untrusted = 0;
  for (const auto& y : solutions) {
    if (y.uses_pseudo || !all_reachable(y, reachability)) continue;
    const int u = untrusted_count(y, controller_trust, cfg.t_threshold);
    if (u > cfg.untrusted_cap) continue;
    const bool better = !best || u < best_untrusted ||
                        (u == best_untrusted && (y.quality < best->quality ||
                                                 (y.quality == best->quality && y.controllers() < best->controllers())));
    if (better) {
      best = &y;
      best_untrusted = u;
    }
  }
  if (!best) throw ValidationError("no eligible CVC solution to select");
  return *best;
}

CvcResult classify_cvc_state(ServiceState se_state, const std::optional<std::vector<CvcSolution>>& solutions,
                             const std::map<std::string, Reachability>& reachability,
                             const std::map<std::string, double>& controller_trust, const CvcConfig& cfg) {
  CvcResult res;
  res.reachability = reachability;
  res.controller_trust = controller_trust;
  auto& ev = res.evidence;
  ev.se_state = se_state;
  ev.violations_present = solutions.has_value();
  auto fail = [&](const char* why) {
    ev.trace.emplace_back(why);
    res.state = ServiceState::Failed;
    res.mode = ControlMode::Local;
    res.chosen.reset();
    return res;
  };
  if (se_state == ServiceState::Failed) return fail("state estimation failed");
  ev.trace.emplace_back("state estimation available");
  if (!solutions) {
    ev.trace.emplace_back("no voltage violation");
    res.state = ServiceState::Normal;
    res.mode = ControlMode::Remote;
    return res;
  }
  ev.solutions = static_cast<int>(solutions->size());
  for (const auto& y : *solutions) {
    if (y.uses_pseudo) continue;
    ++ev.non_pseudo;
    if (!all_reachable(y, reachability)) continue;
    ++ev.reachable;
    const int u = untrusted_count(y, controller_trust, cfg.t_threshold);
    if (u == 0) ++ev.trusted;
    if (u <= cfg.untrusted_cap) ++ev.within_cap;
  }
  if (solutions->empty()) return fail("no feasible solution");
  if (ev.non_pseudo == 0) return fail("every solution depends on pseudo measurements");
  if (ev.reachable == 0) return fail("no solution with all controllers reachable");
  if (ev.trusted > 0) {
    ev.trace.emplace_back("fully trusted solution available");
    res.state = ServiceState::Normal;
  } else if (ev.within_cap > 0) {
    ev.trace.emplace_back("solution requires untrusted controllers");
    res.state = ServiceState::Limited;
  } else {
    return fail("untrusted controllers exceed cap");
  }
  res.mode = ControlMode::Remote;
  res.chosen = select_solution(*solutions, reachability, controller_trust, cfg);
  return res;
}

DispatchReport dispatch_setpoints(const CvcSolution& solution, const IctTopology& topology,
                                  const PowerGrid& grid, const CvcConfig& cfg,
                                  const std::set<std::string>& local_mode, double t) {
  DispatchReport rep{{}, {}, grid};
  std::vector<SetpointCommand> cmds;
  for (const auto& sp : solution.setpoints) {
    bool deliverable = topology.contains(sp.controller) && !local_mode.count(sp.controller);
    if (deliverable) {
      auto lat = path_latency(topology, topology.control_room(), sp.controller, t);
      deliverable = lat && *lat <= cfg.l_threshold_ms;
    }
    if (deliverable) {
      cmds.push_back({sp.controllable, sp.q, std::nullopt});
      rep.applied.push_back(sp);
    } else {
      rep.undelivered.push_back(sp.controller);
    }
  }
  rep.grid = apply_setpoints(grid, cmds);
  return rep;
}

json to_json(const CvcSolution& s) {
  json sp = json::array();
  for (const auto& p : s.setpoints) sp.push_back({{"controller", p.controller}, {"controllable", p.controllable}, {"q", p.q}});
  return {{"setpoints", sp}, {"uses_pseudo", s.uses_pseudo}, {"quality", s.quality}};
}

json to_json(const CvcResult& r) {
  json reach = json::object();
  for (const auto& [id, re] : r.reachability) {
    reach[id] = {{"latency_ms", re.latency_ms ? json(*re.latency_ms) : json(nullptr)}, {"reachable", re.reachable}};
  }
  const auto& e = r.evidence;
  return {{"state", std::string(to_string(r.state))},
          {"mode", std::string(to_string(r.mode))},
          {"chosen", r.chosen ? to_json(*r.chosen) : json(nullptr)},
          {"reachability", reach},
          {"controller_trust", r.controller_trust},
          {"evidence",
           {{"se_state", std::string(to_string(e.se_state))},
            {"violations_present", e.violations_present},
            {"solutions", e.solutions},
            {"non_pseudo", e.non_pseudo},
            {"reachable", e.reachable},
            {"trusted", e.trusted},
            {"within_cap", e.within_cap},
            {"trace", e.trace}}}};
}

}  // namespace cpes
