#include "cpes/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <ostream>

#include "cpes/error.hpp"

namespace cpes {

using nlohmann::json;

std::string_view to_string(RemedialKind k) {
  switch (k) {
    case RemedialKind::RepairComponent: return "repair-component";
    case RemedialKind::ActivateBackupServer: return "activate-backup-server";
    case RemedialKind::ReroutePreference: return "reroute-preference";
    case RemedialKind::SetControllerMode: return "set-controller-mode";
    case RemedialKind::ClearFdi: return "clear-fdi";
    case RemedialKind::AdjustThreshold: return "adjust-threshold";
  }
  return "?";
}

std::optional<RemedialKind> parse_remedial_kind(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(RemedialKind::AdjustThreshold); ++i) {
    auto k = static_cast<RemedialKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view ScenarioEvent::kind_name() const {
  if (const auto* d = std::get_if<Disturbance>(&payload)) return to_string(d->kind);
  return to_string(std::get<RemedialAction>(payload).kind);
}

const std::string& ScenarioEvent::target() const {
  if (const auto* d = std::get_if<Disturbance>(&payload)) return d->target;
  return std::get<RemedialAction>(payload).target;
}

ScenarioEvent parse_event(const json& j, EventOrigin origin) {
  if (!j.is_object()) throw ValidationError("event must be an object");
  ScenarioEvent e;
  e.origin = origin;
  try {
    e.time = j.value("t", 0.0);
    const auto kind = j.at("kind").get<std::string>();
    const auto target = j.at("target").get<std::string>();
    const json params = j.value("params", json::object());
    if (!params.is_object()) throw ValidationError("event params must be an object");
    if (!(e.time >= 0.0) || !std::isfinite(e.time)) throw ValidationError("event time must be >= 0");
    if (auto dk = parse_disturbance_kind(kind)) {
      Disturbance d;
      d.kind = *dk;
      d.target = target;
      d.time = e.time;
      for (const auto& [k, v] : params.items()) {
        if (!v.is_number()) throw ValidationError("parameter '" + k + "' of " + kind + " must be a number");
        d.params[k] = v.get<double>();
      }
      validate_disturbance(d);
      e.payload = std::move(d);
    } else if (auto rk = parse_remedial_kind(kind)) {
      e.payload = RemedialAction{*rk, target, params};
    } else {
      throw ValidationError("unknown event kind '" + kind + "'");
    }
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed event: ") + ex.what());
  }
  return e;
}

json to_json(const ScenarioEvent& e) {
  json params = json::object();
  if (const auto* d = std::get_if<Disturbance>(&e.payload)) {
    for (const auto& [k, v] : d->params) params[k] = v;
  } else {
    params = std::get<RemedialAction>(e.payload).params;
  }
  return {{"t", e.time},
          {"kind", std::string(e.kind_name())},
          {"target", e.target()},
          {"params", params},
          {"origin", e.origin == EventOrigin::Scripted ? "scripted" : "operator"}};
}

namespace {

template <typename Fn>
void read_keys(const json& obj, const std::string& where, Fn&& handle) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!handle(key, value)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

bool set_se_field(SeConfig& se, std::optional<std::string>* server, const std::string& key, const json& v) {
  if (key == "t_c_threshold") se.t_c_threshold = v.get<double>();
  else if (key == "latency_threshold_ms") se.latency_threshold_ms = v.get<double>();
  else if (key == "pseudo_cap") se.pseudo_cap = v.get<double>();
  else if (key == "policy") se.service_policy = parse_aggregation(v.get<std::string>());
  else if (key == "tolerance") se.tolerance = v.get<double>();
  else if (key == "max_iterations") se.max_iterations = v.get<int>();
  else if (key == "significance") se.significance = v.get<double>();
  else if (key == "rank_tolerance") se.rank_tolerance = v.get<double>();
  else if (key == "influence_epsilon") se.influence_epsilon = v.get<double>();
  else if (key == "pseudo_sigma_factor") se.pseudo_sigma_factor = v.get<double>();
  else if (key == "pseudo_credibility") se.pseudo_credibility = v.get<double>();
  else if (key == "server" && server) *server = v.get<std::string>();
  else return false;
  return true;
}

bool set_cvc_field(CvcConfig& c, const std::string& key, const json& v) {
  if (key == "l_threshold_ms") c.l_threshold_ms = v.get<double>();
  else if (key == "t_threshold") c.t_threshold = v.get<double>();
  else if (key == "untrusted_cap") c.untrusted_cap = v.get<int>();
  else if (key == "band") c.band = v.get<double>();
  else if (key == "max_subset") c.max_subset = v.get<int>();
  else if (key == "target_margin") c.target_margin = v.get<double>();
  else return false;
  return true;
}

// adjust-threshold: mutates the config named by `service`; throws on bad input.
void adjust_threshold(SeConfig& se, CvcConfig& cvc, const std::string& service, const json& params) {
  if (!params.contains("name") || !params.contains("value") || !params.at("name").is_string() ||
      !params.at("value").is_number()) {
    throw ValidationError("adjust-threshold requires params {name, value}");
  }
  const auto name = params.at("name").get<std::string>();
  if (service == "se") {
    SeConfig copy = se;
    if (name == "server" || name == "policy" || !set_se_field(copy, nullptr, name, params.at("value"))) {
      throw ValidationError("unknown se threshold '" + name + "'");
    }
    copy.validate();
    se = copy;
  } else if (service == "cvc") {
    CvcConfig copy = cvc;
    if (!set_cvc_field(copy, name, params.at("value"))) throw ValidationError("unknown cvc threshold '" + name + "'");
    copy.validate();
    cvc = copy;
  } else {
    throw ValidationError("adjust-threshold target must be 'se' or 'cvc'");
  }
}

}  // namespace

Scenario parse_scenario(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario document: ") + e.what());
  }
  Scenario sc;
  try {
    read_keys(doc, "scenario", [&](const std::string& key, const json& v) {
      if (key == "grid") sc.grid_path = v.get<std::string>();
      else if (key == "seed") sc.seed = v.get<std::uint64_t>();
      else if (key == "cycles") sc.cycles = v.get<int>();
      else if (key == "period_s") sc.period_s = v.get<double>();
      else if (key == "services") {
        read_keys(v, "services", [&](const std::string& k, const json& sv) {
          if (k == "se") {
            read_keys(sv, "services.se", [&](const std::string& f, const json& x) {
              return set_se_field(sc.se, &sc.se_server, f, x);
            });
          } else if (k == "cvc") {
            read_keys(sv, "services.cvc", [&](const std::string& f, const json& x) { return set_cvc_field(sc.cvc, f, x); });
          } else {
            return false;
          }
          return true;
        });
      } else if (key == "trust") {
        read_keys(v, "trust", [&](const std::string& k, const json& tv) {
          if (k == "window_s") sc.trust.window_s = tv.get<double>();
          else if (k == "estimators") {
            sc.trust.estimators.clear();
            for (const auto& je : tv) {
              TrustEstimatorSpec spec;
              spec.id = je.at("id").get<std::string>();
              spec.source = parse_monitoring_source(je.at("source").get<std::string>());
              for (const auto& f : je.at("facets")) spec.targets.push_back(parse_facet(f.get<std::string>()));
              spec.decay_rate = je.value("decay_rate", 2.0);
              if (spec.targets.empty()) throw ValidationError("estimator '" + spec.id + "' has no target facet");
              sc.trust.estimators.push_back(std::move(spec));
            }
          } else if (k == "cluster") {
            auto& c = sc.trust.cluster;
            read_keys(tv, "trust.cluster", [&](const std::string& f, const json& x) {
              if (f == "members") {
                c.members.clear();
                for (const auto& m : x) c.members.push_back(parse_facet(m.get<std::string>()));
              } else if (f == "within") c.within = parse_aggregation(x.get<std::string>());
              else if (f == "across") c.across = parse_aggregation(x.get<std::string>());
              else if (f == "chain") c.chain = parse_aggregation(x.get<std::string>());
              else if (f == "default_trust") c.default_trust = x.get<double>();
              else if (f == "estimator_weights") c.estimator_weights = x.get<std::map<std::string, double>>();
              else if (f == "facet_weights") {
                for (const auto& [name, w] : x.items()) c.facet_weights[parse_facet(name)] = w.get<double>();
              } else {
                return false;
              }
              return true;
            });
          } else {
            return false;
          }
          return true;
        });
      } else if (key == "noise") {
        read_keys(v, "noise", [&](const std::string& k, const json& nv) {
          if (k == "scale") sc.noise.scale = nv.get<double>();
          else if (k == "per_kind") {
            for (const auto& [kind, s] : nv.items()) sc.noise.per_kind[parse_measurement_kind(kind)] = s.get<double>();
          } else {
            return false;
          }
          return true;
        });
      } else if (key == "injections") {
        for (const auto& ji : v) {
          sc.injections[ji.at("bus").get<std::string>()] = {ji.value("p", 0.0), ji.value("q", 0.0)};
        }
      } else if (key == "events") {
        for (const auto& je : v) sc.events.push_back(parse_event(je, EventOrigin::Scripted));
      } else {
        return false;
      }
      return true;
    });
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario document: ") + e.what());
  }
  if (sc.cycles < 1) throw ValidationError("scenario cycles must be >= 1");
  if (!(sc.period_s > 0.0)) throw ValidationError("scenario period_s must be positive");
  if (!(sc.trust.window_s > 0.0)) throw ValidationError("trust.window_s must be positive");
  if (!(sc.noise.scale >= 0.0)) throw ValidationError("noise.scale must be >= 0");
  sc.se.validate();
  sc.cvc.validate();
  sc.trust.cluster.validate();
  std::stable_sort(sc.events.begin(), sc.events.end(),
                   [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.time < b.time; });
  return sc;
}

void validate_event(const ScenarioEvent& e, const PowerGrid& /*grid*/, const IctTopology& topology) {
  if (const auto* d = std::get_if<Disturbance>(&e.payload)) {
    validate_disturbance(*d);
    if (!topology.contains(d->target)) throw UnknownIdError("component", d->target);
    return;
  }
  const auto& r = std::get<RemedialAction>(e.payload);
  if (!r.params.is_object()) throw ValidationError("remedial params must be an object");
  if (r.kind == RemedialKind::AdjustThreshold) {
    SeConfig se;
    CvcConfig cvc;
    adjust_threshold(se, cvc, r.target, r.params);
    return;
  }
  if (!topology.contains(r.target)) throw UnknownIdError("component", r.target);
  const auto& comp = topology.component(r.target);
  switch (r.kind) {
    case RemedialKind::ActivateBackupServer:
      if (comp.kind != ComponentKind::Server) throw ValidationError("'" + r.target + "' is not a server");
      break;
    case RemedialKind::SetControllerMode: {
      if (comp.kind != ComponentKind::Controller) throw ValidationError("'" + r.target + "' is not a controller");
      const auto mode = r.params.value("mode", json());
      if (!mode.is_string() || (mode != "local" && mode != "remote")) {
        throw ValidationError("set-controller-mode requires params.mode 'local' or 'remote'");
      }
      break;
    }
    case RemedialKind::ReroutePreference:
      if (r.params.contains("avoid") && !r.params.at("avoid").is_boolean()) {
        throw ValidationError("reroute-preference params.avoid must be boolean");
      }
      break;
    default:
      break;
  }
}

void validate_scenario(const Scenario& sc, const PowerGrid& grid, const IctTopology& topology) {
  for (const auto& [bus, inj] : sc.injections) {
    if (!grid.has_bus(bus)) throw UnknownIdError("bus", bus);
  }
  if (sc.se_server) {
    if (!topology.contains(*sc.se_server)) throw UnknownIdError("component", *sc.se_server);
    if (topology.component(*sc.se_server).kind != ComponentKind::Server) {
      throw ValidationError("services.se.server '" + *sc.se_server + "' is not a server");
    }
  } else if (topology.ids_of_kind(ComponentKind::Server).empty()) {
    throw ValidationError("ICT topology has no server to host state estimation");
  }
  for (const auto& e : sc.events) validate_event(e, grid, topology);
}

Scenario load_scenario(std::string_view document, const PowerGrid& grid, const IctTopology& topology) {
  Scenario sc = parse_scenario(document);
  validate_scenario(sc, grid, topology);
  return sc;
}

namespace {

PowerGrid initial_world_grid(const PowerGrid& grid, const Scenario& sc) {
  return sc.injections.empty() ? grid : grid.with_bus_injections(sc.injections);
}

std::string pick_server(const Scenario& sc, const IctTopology& topo) {
  if (sc.se_server) return *sc.se_server;
  return topo.ids_of_kind(ComponentKind::Server).front();
}

}  // namespace

Simulation::Simulation(PowerGrid grid, IctTopology topology, Scenario scenario)
    : initial_grid_(initial_world_grid(grid, scenario)),
      initial_topology_(std::move(topology)),
      initial_scenario_(std::move(scenario)),
      grid_(initial_grid_),
      topology_(initial_topology_),
      scenario_(initial_scenario_),
      rng_(initial_scenario_.seed) {
  validate_scenario(initial_scenario_, initial_grid_, initial_topology_);
  se_server_ = pick_server(initial_scenario_, initial_topology_);
  // Historical profile: noiseless measurements of the base operating point.
  const auto base = solve_power_flow(initial_grid_);
  NoiseModel silent;
  silent.scale = 0.0;
  for (const auto& m : generate_measurements(initial_grid_, base, initial_grid_.sensors(), silent, 0)) {
    profiles_[m.id] = m.value;
  }
}

void Simulation::reset() {
  grid_ = initial_grid_;
  topology_ = initial_topology_;
  scenario_ = initial_scenario_;
  rng_ = Rng(initial_scenario_.seed);
  next_event_ = 0;
  se_server_ = pick_server(initial_scenario_, initial_topology_);
  local_mode_.clear();
  history_.clear();
  std::lock_guard lock(mutex_);
  cycle_ = 0;
  mailbox_.clear();
  latest_.reset();
}

int Simulation::next_cycle() const {
  std::lock_guard lock(mutex_);
  return cycle_;
}

std::shared_ptr<const Snapshot> Simulation::latest() const {
  std::lock_guard lock(mutex_);
  return latest_;
}

CommandAck Simulation::apply_command(ScenarioEvent cmd) {
  cmd.origin = EventOrigin::Operator;
  CommandAck ack;
  try {
    validate_event(cmd, initial_grid_, initial_topology_);
  } catch (const Error& e) {
    ack.reason = e.what();
    return ack;
  }
  std::lock_guard lock(mutex_);
  ack.accepted = true;
  ack.effective_cycle = cycle_;
  mailbox_.push_back(std::move(cmd));
  return ack;
}

void Simulation::apply_event(const ScenarioEvent& e) {
  if (const auto* d = std::get_if<Disturbance>(&e.payload)) {
    Disturbance copy = *d;
    copy.time = e.time;
    topology_ = inject_disturbance(topology_, copy);
    return;
  }
  const auto& r = std::get<RemedialAction>(e.payload);
  switch (r.kind) {
    case RemedialKind::RepairComponent:
      topology_ = topology_.with_component(r.target, [](IctComponent& c) {
        c.up = true;
        c.health_loads.clear();
      });
      break;
    case RemedialKind::ActivateBackupServer:
      topology_ = topology_.with_component(r.target, [](IctComponent& c) { c.up = true; });
      se_server_ = r.target;
      break;
    case RemedialKind::ReroutePreference: {
      const bool avoid = r.params.value("avoid", true);
      topology_ = topology_.with_component(r.target, [avoid](IctComponent& c) { c.avoid = avoid; });
      break;
    }
    case RemedialKind::SetControllerMode:
      if (r.params.at("mode") == "local") local_mode_.insert(r.target);
      else local_mode_.erase(r.target);
      break;
    case RemedialKind::ClearFdi:
      topology_ = topology_.with_component(r.target, [](IctComponent& c) { c.fdi_bias = 0.0; });
      break;
    case RemedialKind::AdjustThreshold:
      adjust_threshold(scenario_.se, scenario_.cvc, r.target, r.params);
      break;
  }
}

namespace {

json active_disturbances_of(const IctTopology& topo, double t) {
  json out = json::array();
  for (const auto& c : topo.components()) {
    auto add = [&](const char* kind, json params) {
      out.push_back({{"target", c.id}, {"kind", kind}, {"params", std::move(params)}});
    };
    if (!c.up) add("component-fail", json::object());
    if (c.added_latency_ms != 0.0) add("latency-add", {{"ms", c.added_latency_ms}});
    if (c.fdi_bias != 0.0) add("fdi-bias", {{"bias", c.fdi_bias}});
    for (const auto& a : c.ids_alerts) {
      if (a.active_at(t)) add("ids-alert", {{"severity", a.value}});
    }
    for (const auto& h : c.health_loads) {
      if (h.active_at(t)) add("health-degradation", {{"load", h.value}});
    }
    for (const auto& f : c.isms_findings) {
      if (f.active_at(t)) add("isms-finding", {{"score", f.value}});
    }
    if (c.avoid) add("reroute-preference", {{"avoid", true}});
  }
  return out;
}

}  // namespace

std::shared_ptr<const Snapshot> Simulation::step() {
  auto snap = std::make_shared<Snapshot>();
  std::vector<ScenarioEvent> commands;
  {
    std::lock_guard lock(mutex_);
    snap->cycle = cycle_++;
    commands.swap(mailbox_);
  }
  const double t = snap->cycle * scenario_.period_s;
  snap->time = t;

  // 1. due scripted events in document order, then operator commands
  while (next_event_ < scenario_.events.size() && scenario_.events[next_event_].time <= t + 1e-9) {
    const auto& e = scenario_.events[next_event_++];
    apply_event(e);
    snap->events.push_back(to_json(e));
  }
  for (auto& cmd : commands) {
    cmd.time = t;
    json rec = to_json(cmd);
    try {
      apply_event(cmd);
    } catch (const Error& e) {
      rec["rejected"] = e.what();
    }
    snap->events.push_back(std::move(rec));
  }

  // 2. physical world and sensing
  const auto truth = solve_power_flow(grid_);
  snap->vm_truth = truth.vm;
  snap->va_truth = truth.va;
  const auto measured = generate_measurements(grid_, truth, grid_.sensors(), scenario_.noise, rng_, t);
  const auto delivered = deliver(measured, topology_, t);
  snap->measurement_count = static_cast<int>(measured.size());
  snap->delivered_count = static_cast<int>(delivered.size());

  // 3. monitoring and trust
  const auto& ts = scenario_.trust;
  for (auto& r : emit_monitoring(topology_, t)) history_.push_back(std::move(r));
  while (!history_.empty() && history_.front().timestamp <= t - ts.window_s) history_.pop_front();
  const std::vector<MonitoringRecord> records(history_.begin(), history_.end());
  const TrustContext ctx{t - ts.window_s, t};
  for (const auto& c : topology_.components()) {
    snap->trust.emplace(c.id, assess_component(c, ts.estimators, records, ctx));
    snap->component_up[c.id] = c.up;
  }
  SeInput input;
  input.time = t;
  input.profiles = profiles_;
  input.server_available = component_available(topology_, se_server_, t);
  input.delivered = delivered;
  for (const auto& m : delivered) {
    std::vector<MultivariateTrustValue> chain;
    if (auto path = route(topology_, *m.source, topology_.control_room(), t)) {
      for (const auto& id : *path) chain.push_back(snap->trust.at(id));
    } else {
      chain.push_back(snap->trust.at(*m.source));
    }
    auto mtv = derive_ooi_trust(chain, ts.cluster, m.id, "chain");
    input.measurement_trust.emplace(m.id, mtv);
    snap->trust.emplace(m.id, std::move(mtv));
  }
  snap->se_server = se_server_;

  // 4. state estimation
  snap->se = run_state_estimation(grid_, input, scenario_.se, ts.cluster);

  // 5. coordinated voltage control
  std::vector<ControllerBinding> active;
  std::vector<std::string> all_controllers;
  for (const auto& b : controller_bindings(topology_)) {
    all_controllers.push_back(b.component);
    if (!local_mode_.count(b.component)) active.push_back(b);
  }
  std::optional<std::vector<CvcSolution>> solutions;
  if (snap->se.state != ServiceState::Failed &&
      !detect_violations(grid_, snap->se, scenario_.cvc.band).empty()) {
    solutions = compute_solutions(grid_, snap->se, active, scenario_.cvc);
  }
  const auto reach = check_reachability(topology_, all_controllers, scenario_.cvc, t);
  std::map<std::string, double> t_a;
  for (const auto& id : all_controllers) t_a[id] = data_correctness_trust(snap->trust.at(id), ts.cluster);
  snap->cvc = classify_cvc_state(snap->se.state, solutions, reach, t_a, scenario_.cvc);

  // 6. dispatch; effective from the next cycle's power flow
  if (snap->cvc.mode == ControlMode::Remote && snap->cvc.chosen) {
    auto rep = dispatch_setpoints(*snap->cvc.chosen, topology_, grid_, scenario_.cvc, local_mode_, t);
    grid_ = rep.grid;
    snap->dispatched = rep.applied;
    snap->undelivered = rep.undelivered;
  }

  snap->local_mode = local_mode_;
  for (auto& d : active_disturbances_of(topology_, t)) snap->active_disturbances.push_back(std::move(d));

  std::shared_ptr<const Snapshot> out = std::move(snap);
  std::lock_guard lock(mutex_);
  latest_ = out;
  return out;
}

std::vector<std::shared_ptr<const Snapshot>> Simulation::run(int n_cycles) {
  if (n_cycles < 1) throw ValidationError("run needs at least one cycle");
  std::vector<std::shared_ptr<const Snapshot>> out;
  out.reserve(static_cast<std::size_t>(n_cycles));
  for (int i = 0; i < n_cycles; ++i) out.push_back(step());
  return out;
}

json timeline_record(const Snapshot& s) {
  json se_ev = to_json(s.se);
  se_ev.erase("state");
  se_ev.erase("t_c");
  se_ev["seq"] = 1;
  json cvc_ev = to_json(s.cvc);
  json cvc_evidence = cvc_ev.at("evidence");
  cvc_evidence["seq"] = 2;
  cvc_evidence["reachability"] = cvc_ev.at("reachability");
  cvc_evidence["controller_trust"] = cvc_ev.at("controller_trust");
  cvc_evidence["chosen"] = cvc_ev.at("chosen");
  json dispatched = json::array();
  for (const auto& d : s.dispatched) dispatched.push_back({{"controller", d.controller}, {"q", d.q}});
  cvc_evidence["dispatched"] = dispatched;
  cvc_evidence["undelivered"] = s.undelivered;

  json trust = json::object();
  ClusterConfig cfg;
  for (const auto& [ooi, mtv] : s.trust) trust[ooi] = facet_summary(mtv, cfg);

  return {{"schema_version", kSchemaVersion},
          {"cycle", s.cycle},
          {"t", s.time},
          {"se", {{"state", std::string(to_string(s.se.state))},
                  {"t_c", s.se.t_c ? json(*s.se.t_c) : json(nullptr)},
                  {"evidence", se_ev}}},
          {"cvc", {{"state", std::string(to_string(s.cvc.state))},
                   {"mode", std::string(to_string(s.cvc.mode))},
                   {"evidence", cvc_evidence}}},
          {"events", s.events},
          {"trust", trust}};
}

void export_timeline(const std::vector<std::shared_ptr<const Snapshot>>& timeline, std::ostream& out) {
  for (const auto& s : timeline) out << timeline_record(*s).dump() << '\n';
  if (!out) throw Error("failed to write timeline");
}

void export_timeline(const std::vector<std::shared_ptr<const Snapshot>>& timeline, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  export_timeline(timeline, out);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<Simulation> open_simulation(const std::string& grid_path,
                                            const std::optional<std::string>& scenario_path,
                                            std::optional<std::uint64_t> seed, std::optional<int> cycles) {
  const std::string grid_doc = read_file(grid_path);
  PowerGrid grid = load_grid(grid_doc);
  IctTopology topology = load_ict_from_grid_document(grid_doc, grid);
  Scenario sc;
  if (scenario_path) sc = parse_scenario(read_file(*scenario_path));
  if (seed) sc.seed = *seed;
  if (cycles) {
    if (*cycles < 1) throw ValidationError("cycles must be >= 1");
    sc.cycles = *cycles;
  }
  sc.grid_path = grid_path;
  return std::make_unique<Simulation>(std::move(grid), std::move(topology), std::move(sc));
}

}  // namespace cpes
