#include "cpes/state_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>
#include <nlohmann/json.hpp>

#include "cpes/error.hpp"
#include "cpes/network.hpp"

namespace cpes {

using nlohmann::json;

std::string_view to_string(ServiceState s) {
  switch (s) {
    case ServiceState::Normal: return "normal";
    case ServiceState::Limited: return "limited";
    case ServiceState::Failed: return "failed";
  }
  return "?";
}

ServiceState parse_service_state(std::string_view s) {
  for (auto st : {ServiceState::Normal, ServiceState::Limited, ServiceState::Failed}) {
    if (to_string(st) == s) return st;
  }
  throw ValidationError("unknown service state '" + std::string(s) + "'");
}

void SeConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(t_c_threshold)) throw ValidationError("se.t_c_threshold must lie in [0,1]");
  if (!(latency_threshold_ms >= 0.0)) throw ValidationError("se.latency_threshold_ms must be >= 0");
  if (!unit(pseudo_cap)) throw ValidationError("se.pseudo_cap must lie in [0,1]");
  if (!(tolerance > 0.0) || max_iterations < 1) throw ValidationError("se solver settings invalid");
  if (!(significance > 0.0 && significance < 1.0)) throw ValidationError("se.significance must lie in (0,1)");
  if (!(influence_epsilon >= 0.0 && influence_epsilon <= 1.0)) {
    throw ValidationError("se.influence_epsilon must lie in [0,1]");
  }
  if (!(pseudo_sigma_factor >= 1.0)) throw ValidationError("se.pseudo_sigma_factor must be >= 1");
  if (!unit(pseudo_credibility)) throw ValidationError("se.pseudo_credibility must lie in [0,1]");
}

namespace {

std::vector<Channel> channels_of(const MeasurementSet& ms, const PowerGrid& grid) {
  std::vector<Channel> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(grid.resolve(m.kind, m.location, m.end));
  return out;
}

int numerical_rank(const Eigen::MatrixXd& h, double tol) {
  if (h.rows() == 0 || h.cols() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(h);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  return static_cast<int>((s.array() > tol * s(0)).count());
}

}  // namespace

RankReport check_solvability(const MeasurementSet& measurements, const PowerGrid& grid,
                             double rank_tolerance) {
  RankReport rep;
  rep.n_sv = grid.state_dimension();
  const auto channels = channels_of(measurements, grid);
  const Eigen::MatrixXd h = measurement_jacobian(grid, channels, Eigen::VectorXd::Ones(grid.bus_count()),
                                                 Eigen::VectorXd::Zero(grid.bus_count()));
  rep.rank = numerical_rank(h, rank_tolerance);
  rep.solvable = rep.rank == rep.n_sv;
  return rep;
}

WlsResult wls_estimate(const MeasurementSet& measurements, const PowerGrid& grid, const SeConfig& cfg) {
  const StateLayout layout(grid);
  const auto channels = channels_of(measurements, grid);
  const auto m = static_cast<Eigen::Index>(measurements.size());
  Eigen::VectorXd z(m), w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& meas = measurements[static_cast<std::size_t>(i)];
    if (!(meas.sigma > 0.0)) throw ValidationError("measurement '" + meas.id + "' has sigma <= 0");
    z(i) = meas.value;
    w(i) = 1.0 / (meas.sigma * meas.sigma);
  }

  Eigen::VectorXd x = layout.flat();
  Eigen::VectorXd vm, va;
  int it = 0;
  double step = std::numeric_limits<double>::infinity();
  while (true) {
    layout.unpack(x, vm, va);
    const Eigen::MatrixXd h = measurement_jacobian(grid, channels, vm, va);
    const Eigen::VectorXd r = z - measurement_function(grid, channels, vm, va);
    const Eigen::MatrixXd g = h.transpose() * w.asDiagonal() * h;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() >= cfg.min_rcond) ||
        !(pivots.minCoeff() > cfg.min_rcond * pivots.maxCoeff())) {
      throw IllConditionedError("WLS gain matrix is ill-conditioned (rcond " +
                                std::to_string(ldlt.rcond()) + ")");
    }
    if (step <= cfg.tolerance) {
      WlsResult out;
      out.x = {vm, va};
      out.iterations = it;
      out.residuals = r;
      out.objective = r.cwiseProduct(r).cwiseProduct(w).sum();
      out.dof = static_cast<int>(m) - layout.dimension();
      out.sensitivity = ldlt.solve(h.transpose() * w.asDiagonal());
      const Eigen::MatrixXd hk = h * ldlt.solve(h.transpose());
      out.normalized = Eigen::VectorXd::Zero(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const double var = 1.0 / w(i);
        const double omega = var - hk(i, i);
        if (omega > 1e-10 * var) out.normalized(i) = r(i) / std::sqrt(omega);
      }
      for (const auto& meas : measurements) out.ids.push_back(meas.id);
      return out;
    }
    if (it >= cfg.max_iterations) {
      throw ConvergenceError("WLS did not converge after " + std::to_string(it) + " iterations", it, step);
    }
    const Eigen::VectorXd dx = ldlt.solve(h.transpose() * w.cwiseProduct(r));
    if (!dx.allFinite()) throw ConvergenceError("WLS step is not finite", it, step);
    x += dx;
    step = dx.cwiseAbs().maxCoeff();
    ++it;
  }
}

double chi_square_threshold(int dof, double significance) {
  if (dof < 1) throw ValidationError("chi-square test needs at least one degree of freedom");
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, significance));
}

std::vector<std::string> detect_bad_data(const WlsResult& wls, const SeConfig& cfg) {
  if (wls.dof < 1) return {};
  if (wls.objective <= chi_square_threshold(wls.dof, cfg.significance)) return {};
  Eigen::Index worst = -1;
  double largest = 0.0;
  for (Eigen::Index i = 0; i < wls.normalized.size(); ++i) {
    if (std::abs(wls.normalized(i)) > largest) {
      largest = std::abs(wls.normalized(i));
      worst = i;
    }
  }
  if (worst < 0) return {};
  return {wls.ids[static_cast<std::size_t>(worst)]};
}

std::string pseudo_id(const std::string& sensor_id) { return "pseudo:" + sensor_id; }

MeasurementSet substitute_pseudo(const MeasurementSet& measurements, std::span<const SensorSpec> slots,
                                 const std::map<std::string, double>& profiles, const SeConfig& cfg,
                                 double timestamp) {
  if (slots.empty()) return measurements;
  std::set<std::string> replaced;
  for (const auto& s : slots) replaced.insert(s.id);
  MeasurementSet out;
  for (const auto& m : measurements) {
    if (!replaced.count(m.id)) out.push_back(m);
  }
  for (const auto& s : slots) {
    auto it = profiles.find(s.id);
    if (it == profiles.end()) throw ValidationError("no historical profile for sensor '" + s.id + "'");
    Measurement p;
    p.id = pseudo_id(s.id);
    p.kind = s.kind;
    p.location = s.location;
    p.end = s.end;
    p.value = it->second;
    p.sigma = s.sigma * cfg.pseudo_sigma_factor;
    p.timestamp = timestamp;
    p.provenance = Provenance::Pseudo;
    out.push_back(std::move(p));
  }
  const auto pseudo = std::count_if(out.begin(), out.end(),
                                    [](const Measurement& m) { return m.provenance == Provenance::Pseudo; });
  const double fraction = static_cast<double>(pseudo) / static_cast<double>(out.size());
  if (fraction > cfg.pseudo_cap) {
    throw PseudoCapExceeded("pseudo fraction " + std::to_string(fraction) + " exceeds cap " +
                            std::to_string(cfg.pseudo_cap));
  }
  return out;
}

MultivariateTrustValue pseudo_trust(const std::string& id, const TrustContext& ctx, const SeConfig& cfg) {
  MultivariateTrustValue mtv(id, ctx);
  mtv.put(Facet::Credibility, {"pseudo", cfg.pseudo_credibility});
  return mtv;
}

std::vector<std::string> state_variable_names(const PowerGrid& grid) {
  std::vector<std::string> names;
  for (int i = 0; i < grid.bus_count(); ++i) {
    if (i != grid.slack_index()) names.push_back("va:" + grid.buses()[i].id);
  }
  for (int i = 0; i < grid.bus_count(); ++i) names.push_back("vm:" + grid.buses()[i].id);
  return names;
}

std::vector<MultivariateTrustValue> propagate_trust_to_states(
    std::span<const MultivariateTrustValue> measurement_trust, const WlsResult& wls,
    const PowerGrid& grid, const SeConfig& cfg, const ClusterConfig& cluster) {
  if (measurement_trust.size() != wls.ids.size()) {
    throw ValidationError("measurement trust list does not match the estimate");
  }
  const auto names = state_variable_names(grid);
  ClusterConfig min_chain = cluster;
  min_chain.chain = Aggregation::Min;
  std::vector<MultivariateTrustValue> out;
  for (Eigen::Index j = 0; j < wls.sensitivity.rows(); ++j) {
    const auto& name = names[static_cast<std::size_t>(j)];
    const Eigen::VectorXd row = wls.sensitivity.row(j).cwiseAbs();
    const double peak = row.size() ? row.maxCoeff() : 0.0;
    std::vector<MultivariateTrustValue> involved;
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      if (peak > 0.0 && row(i) >= cfg.influence_epsilon * peak) {
        involved.push_back(measurement_trust[static_cast<std::size_t>(i)]);
      }
    }
    const TrustContext ctx = measurement_trust.empty() ? TrustContext{} : measurement_trust.front().context();
    if (involved.empty()) {
      out.emplace_back(name, ctx);
    } else {
      out.push_back(derive_ooi_trust(involved, min_chain, name, "wls-propagation"));
    }
  }
  return out;
}

double service_trust(std::span<const MultivariateTrustValue> variable_trust, const SeConfig& cfg,
                     const ClusterConfig& cluster) {
  std::vector<double> p;
  for (const auto& v : variable_trust) p.push_back(data_correctness_trust(v, cluster));
  if (p.empty()) return cluster.default_trust;
  return aggregate(p, cfg.service_policy);
}

namespace {

bool accepted(const RankReport& rank, const std::optional<double>& tc, double threshold) {
  return rank.solvable && tc && *tc >= threshold;
}

}  // namespace

SeResult classify_se_state(const SeOperands& ops) {
  SeResult res;
  res.operands = ops;
  if (!ops.server_available) {
    res.trace.push_back("server unavailable");
    res.state = ServiceState::Failed;
    return res;
  }
  res.trace.push_back("server available");
  if (accepted(ops.rank_z, ops.t_c_z, ops.threshold)) {
    res.trace.push_back("field measurements solvable and trusted");
    if (!ops.timely) {
      throw InconsistentEvidence("trusted, solvable field set contains late measurements");
    }
    res.state = ServiceState::Normal;
    return res;
  }
  res.trace.push_back(ops.rank_z.solvable ? "field measurements untrusted" : "field measurements not solvable");
  if (ops.rank_zp && accepted(*ops.rank_zp, ops.t_c_zp, ops.threshold)) {
    res.trace.push_back("augmented set solvable and trusted");
    res.state = ServiceState::Limited;
  } else {
    res.trace.push_back("augmented set rejected");
    res.state = ServiceState::Failed;
  }
  return res;
}

namespace {

struct Attempt {
  RankReport rank;
  std::optional<WlsResult> wls;
  std::vector<MultivariateTrustValue> variable_trust;
  std::optional<double> t_c;
  std::vector<std::string> suspects;
};

Attempt evaluate_set(const PowerGrid& grid, const MeasurementSet& set,
                     std::map<std::string, MultivariateTrustValue> trust, const SeConfig& cfg,
                     const ClusterConfig& cluster, bool run_bad_data) {
  Attempt a;
  a.rank = check_solvability(set, grid, cfg.rank_tolerance);
  if (!a.rank.solvable) return a;
  try {
    a.wls = wls_estimate(set, grid, cfg);
  } catch (const ConvergenceError&) {
    return a;
  } catch (const IllConditionedError&) {
    return a;
  }
  if (run_bad_data) {
    a.suspects = detect_bad_data(*a.wls, cfg);
    for (const auto& id : a.suspects) trust.at(id).put(Facet::Credibility, {"bad-data", 0.0});
  }
  std::vector<MultivariateTrustValue> mt;
  for (const auto& id : a.wls->ids) mt.push_back(trust.at(id));
  a.variable_trust = propagate_trust_to_states(mt, *a.wls, grid, cfg, cluster);
  a.t_c = service_trust(a.variable_trust, cfg, cluster);
  return a;
}

}  // namespace

SeResult run_state_estimation(const PowerGrid& grid, const SeInput& input, const SeConfig& cfg,
                              const ClusterConfig& cluster) {
  SeOperands ops;
  ops.threshold = cfg.t_c_threshold;
  ops.server_available = input.server_available;
  ops.rank_z.n_sv = grid.state_dimension();
  if (!input.server_available) return classify_se_state(ops);

  // Late measurements are treated as missing.
  MeasurementSet z;
  std::vector<std::string> late, missing;
  std::set<std::string> delivered_ids;
  for (const auto& m : input.delivered) {
    delivered_ids.insert(m.id);
    if (m.latency_ms > cfg.latency_threshold_ms) late.push_back(m.id);
    else z.push_back(m);
  }
  for (const auto& s : grid.sensors()) {
    if (!delivered_ids.count(s.id)) missing.push_back(s.id);
  }
  ops.timely = std::all_of(z.begin(), z.end(),
                           [&](const Measurement& m) { return m.latency_ms <= cfg.latency_threshold_ms; });

  std::map<std::string, MultivariateTrustValue> trust;
  for (const auto& m : z) {
    auto it = input.measurement_trust.find(m.id);
    trust.emplace(m.id, it != input.measurement_trust.end() ? it->second : MultivariateTrustValue(m.id, {}));
  }

  const Attempt first = evaluate_set(grid, z, trust, cfg, cluster, true);
  ops.rank_z = first.rank;
  ops.t_c_z = first.t_c;

  auto finish = [&](SeResult res, const Attempt& used, const MeasurementSet& set) {
    res.late = late;
    res.missing = missing;
    res.suspects = first.suspects;
    if (res.state != ServiceState::Failed && used.wls) {
      res.estimate = used.wls->x;
      res.variable_names = state_variable_names(grid);
      res.variable_trust = used.variable_trust;
      res.t_c = used.t_c;
      res.objective = used.wls->objective;
      res.dof = used.wls->dof;
      for (const auto& m : set) {
        if (m.provenance == Provenance::Pseudo) res.used_pseudo.push_back(m.id);
      }
    }
    return res;
  };

  if (first.rank.solvable && first.t_c && *first.t_c >= cfg.t_c_threshold) {
    return finish(classify_se_state(ops), first, z);
  }

  // Fallback: substitute untrusted or suspect measurements (least trusted
  // first), then missing and late channels, one at a time.
  std::vector<std::pair<double, std::string>> untrusted;
  for (const auto& m : z) {
    const bool suspect = std::find(first.suspects.begin(), first.suspects.end(), m.id) != first.suspects.end();
    const double tc = suspect ? 0.0 : data_correctness_trust(trust.at(m.id), cluster);
    if (tc < cfg.t_c_threshold) untrusted.emplace_back(tc, m.id);
  }
  std::sort(untrusted.begin(), untrusted.end());
  std::vector<std::string> absent = missing;
  absent.insert(absent.end(), late.begin(), late.end());
  std::sort(absent.begin(), absent.end());
  std::vector<SensorSpec> candidates;
  for (const auto& [tc, id] : untrusted) candidates.push_back(grid.sensor(id));
  for (const auto& id : absent) candidates.push_back(grid.sensor(id));

  const TrustContext ctx = trust.empty() ? TrustContext{input.time - 1.0, input.time}
                                         : trust.begin()->second.context();
  std::optional<Attempt> last;
  MeasurementSet last_set;
  for (std::size_t k = 1; k <= candidates.size(); ++k) {
    const std::span<const SensorSpec> slots(candidates.data(), k);
    MeasurementSet zp;
    try {
      zp = substitute_pseudo(z, slots, input.profiles, cfg, input.time);
    } catch (const PseudoCapExceeded&) {
      break;
    }
    auto trust_p = trust;
    for (const auto& m : zp) {
      if (m.provenance == Provenance::Pseudo) trust_p.emplace(m.id, pseudo_trust(m.id, ctx, cfg));
    }
    last = evaluate_set(grid, zp, std::move(trust_p), cfg, cluster, false);
    last_set = std::move(zp);
    if (last->rank.solvable && last->t_c && *last->t_c >= cfg.t_c_threshold) break;
  }
  if (last) {
    ops.rank_zp = last->rank;
    ops.t_c_zp = last->t_c;
  }
  SeResult res = classify_se_state(ops);
  if (last) res.trace.push_back("pseudo substitutions: " + std::to_string(
                                    std::count_if(last_set.begin(), last_set.end(), [](const Measurement& m) {
                                      return m.provenance == Provenance::Pseudo;
                                    })));
  return last ? finish(std::move(res), *last, last_set) : finish(std::move(res), first, z);
}

json to_json(const SeOperands& ops) {
  auto rank = [](const RankReport& r) {
    return json{{"rank", r.rank}, {"n_sv", r.n_sv}, {"solvable", r.solvable}};
  };
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"server_available", ops.server_available},
          {"rank_z", rank(ops.rank_z)},
          {"t_c_z", opt(ops.t_c_z)},
          {"rank_zp", ops.rank_zp ? rank(*ops.rank_zp) : json(nullptr)},
          {"t_c_zp", opt(ops.t_c_zp)},
          {"timely", ops.timely},
          {"threshold", ops.threshold}};
}

json to_json(const SeResult& r) {
  json j;
  j["state"] = std::string(to_string(r.state));
  j["t_c"] = r.t_c ? json(*r.t_c) : json(nullptr);
  j["operands"] = to_json(r.operands);
  j["trace"] = r.trace;
  j["used_pseudo"] = r.used_pseudo;
  j["suspects"] = r.suspects;
  j["late"] = r.late;
  j["missing"] = r.missing;
  j["objective"] = r.objective;
  j["dof"] = r.dof;
  if (r.estimate) {
    j["estimate"] = {{"vm", std::vector<double>(r.estimate->vm.data(), r.estimate->vm.data() + r.estimate->vm.size())},
                     {"va", std::vector<double>(r.estimate->va.data(), r.estimate->va.data() + r.estimate->va.size())}};
  } else {
    j["estimate"] = nullptr;
  }
  return j;
}

}  // namespace cpes
