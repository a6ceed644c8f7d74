#include "cpes/ict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

#include "cpes/error.hpp"

namespace cpes {

using nlohmann::json;

namespace {
constexpr double kForever = std::numeric_limits<double>::infinity();
}

std::string_view to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::Sensor: return "sensor";
    case ComponentKind::Router: return "router";
    case ComponentKind::Link: return "link";
    case ComponentKind::Server: return "server";
    case ComponentKind::Controller: return "controller";
    case ComponentKind::Aggregator: return "aggregator";
    case ComponentKind::ControlRoom: return "control-room";
  }
  return "?";
}

ComponentKind parse_component_kind(std::string_view s) {
  for (auto k : {ComponentKind::Sensor, ComponentKind::Router, ComponentKind::Link,
                 ComponentKind::Server, ComponentKind::Controller, ComponentKind::Aggregator,
                 ComponentKind::ControlRoom}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown component kind '" + std::string(s) + "'");
}

std::string_view to_string(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::ComponentFail: return "component-fail";
    case DisturbanceKind::ComponentRepair: return "component-repair";
    case DisturbanceKind::LatencyAdd: return "latency-add";
    case DisturbanceKind::LatencyClear: return "latency-clear";
    case DisturbanceKind::FdiBias: return "fdi-bias";
    case DisturbanceKind::FdiClear: return "fdi-clear";
    case DisturbanceKind::IdsAlert: return "ids-alert";
    case DisturbanceKind::HealthDegradation: return "health-degradation";
    case DisturbanceKind::IsmsFinding: return "isms-finding";
  }
  return "?";
}

std::optional<DisturbanceKind> parse_disturbance_kind(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(DisturbanceKind::IsmsFinding); ++i) {
    auto k = static_cast<DisturbanceKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(MonitoringSource s) {
  switch (s) {
    case MonitoringSource::Ids: return "ids";
    case MonitoringSource::Isms: return "isms";
    case MonitoringSource::HealthMonitor: return "health-monitor";
    case MonitoringSource::Heartbeat: return "heartbeat";
  }
  return "?";
}

MonitoringSource parse_monitoring_source(std::string_view s) {
  for (auto k : {MonitoringSource::Ids, MonitoringSource::Isms, MonitoringSource::HealthMonitor,
                 MonitoringSource::Heartbeat}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown monitoring source '" + std::string(s) + "'");
}

IctTopology::IctTopology(std::vector<IctComponent> components, std::vector<IctLink> links)
    : components_(std::move(components)), links_(std::move(links)) {
  for (int i = 0; i < static_cast<int>(components_.size()); ++i) {
    const auto& c = components_[i];
    if (!index_.emplace(c.id, i).second) throw ValidationError("duplicate component id '" + c.id + "'");
    if (!(c.latency_ms >= 0.0)) throw ValidationError("component '" + c.id + "' has negative latency");
    if (c.kind == ComponentKind::ControlRoom && control_room_.empty()) control_room_ = c.id;
  }
  if (control_room_.empty()) throw ValidationError("ICT topology has no control-room component");
  adj_.assign(components_.size(), {});
  for (const auto& l : links_) {
    auto a = index_.find(l.a), b = index_.find(l.b);
    if (a == index_.end() || b == index_.end()) {
      throw ValidationError("link " + l.a + "--" + l.b + " references a missing component");
    }
    if (!(l.latency_ms >= 0.0)) throw ValidationError("link " + l.a + "--" + l.b + " has negative latency");
    adj_[a->second].emplace_back(b->second, l.latency_ms);
    adj_[b->second].emplace_back(a->second, l.latency_ms);
  }
}

int IctTopology::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownIdError("component", id);
  return it->second;
}

const IctComponent& IctTopology::component(const std::string& id) const {
  return components_[static_cast<std::size_t>(index_of(id))];
}

std::vector<std::string> IctTopology::ids_of_kind(ComponentKind k) const {
  std::vector<std::string> out;
  for (const auto& c : components_) {
    if (c.kind == k) out.push_back(c.id);
  }
  return out;
}

IctTopology load_ict(const json& ict, const PowerGrid& grid) {
  std::vector<IctComponent> comps;
  std::vector<IctLink> links;
  try {
    for (const auto& jc : ict.at("components")) {
      IctComponent c;
      c.id = jc.at("id").get<std::string>();
      c.kind = parse_component_kind(jc.at("kind").get<std::string>());
      c.latency_ms = jc.value("latency_ms", 0.0);
      if (jc.contains("location")) c.location = jc.at("location").get<std::string>();
      if (jc.contains("static_trust")) c.static_trust = jc.at("static_trust").get<std::map<std::string, double>>();
      if (c.kind == ComponentKind::Sensor) {
        if (!c.location || !grid.has_bus(*c.location)) {
          throw ValidationError("sensor component '" + c.id + "' must reference a grid bus");
        }
      }
      if (c.kind == ComponentKind::Controller) {
        if (!c.location || !grid.has_controllable(*c.location)) {
          throw ValidationError("controller component '" + c.id + "' must reference a controllable");
        }
      }
      comps.push_back(std::move(c));
    }
    for (const auto& jl : ict.value("links", json::array())) {
      links.push_back({jl.at("a").get<std::string>(), jl.at("b").get<std::string>(),
                       jl.value("latency_ms", 0.0)});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("ict section: ") + e.what());
  }
  IctTopology topo(std::move(comps), std::move(links));
  for (const auto& s : grid.sensors()) {
    if (!topo.contains(s.device) || topo.component(s.device).kind != ComponentKind::Sensor) {
      throw ValidationError("sensor '" + s.id + "' reports via unknown sensor device '" + s.device + "'");
    }
  }
  return topo;
}

IctTopology load_ict_from_grid_document(std::string_view document, const PowerGrid& grid) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("grid document: ") + e.what());
  }
  if (!doc.contains("ict")) throw ValidationError("grid document has no \"ict\" section");
  return load_ict(doc.at("ict"), grid);
}

bool component_available(const IctTopology& topology, const std::string& id, double /*t*/) {
  return topology.component(id).up;
}

namespace {

struct Route {
  double latency;
  std::vector<int> nodes;
};

std::optional<Route> shortest(const IctTopology& topo, int src, int dst, bool honour_avoid) {
  const auto& comps = topo.components();
  const auto n = comps.size();
  auto usable = [&](int i) {
    const auto& c = comps[static_cast<std::size_t>(i)];
    if (!c.up) return false;
    return !(honour_avoid && c.avoid && i != src && i != dst);
  };
  if (!usable(src) || !usable(dst)) return std::nullopt;
  if (src == dst) return Route{0.0, {src}};
  std::vector<double> dist(n, kForever);
  std::vector<int> prev(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(src)] = comps[static_cast<std::size_t>(src)].hop_latency();
  pq.emplace(dist[static_cast<std::size_t>(src)], src);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    if (u == dst) {
      Route r{d, {}};
      for (int v = dst; v >= 0; v = prev[static_cast<std::size_t>(v)]) r.nodes.push_back(v);
      std::reverse(r.nodes.begin(), r.nodes.end());
      return r;
    }
    for (auto [v, link_ms] : topo.adjacency()[static_cast<std::size_t>(u)]) {
      if (!usable(v)) continue;
      const double nd = d + link_ms + comps[static_cast<std::size_t>(v)].hop_latency();
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        prev[static_cast<std::size_t>(v)] = u;
        pq.emplace(nd, v);
      }
    }
  }
  return std::nullopt;
}

std::optional<Route> best_route(const IctTopology& topo, const std::string& src, const std::string& dst) {
  const int s = topo.index_of(src);
  const int d = topo.index_of(dst);
  if (auto r = shortest(topo, s, d, true)) return r;
  return shortest(topo, s, d, false);
}

}  // namespace

std::optional<double> path_latency(const IctTopology& topology, const std::string& src,
                                   const std::string& dst, double /*t*/) {
  auto r = best_route(topology, src, dst);
  if (!r) return std::nullopt;
  return r->latency;
}

std::optional<std::vector<std::string>> route(const IctTopology& topology, const std::string& src,
                                              const std::string& dst, double /*t*/) {
  auto r = best_route(topology, src, dst);
  if (!r) return std::nullopt;
  std::vector<std::string> ids;
  for (int i : r->nodes) ids.push_back(topology.components()[static_cast<std::size_t>(i)].id);
  return ids;
}

namespace {

void check_params(const Disturbance& d, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional) {
  for (const char* key : required) {
    if (!d.params.count(key)) {
      throw ValidationError(std::string(to_string(d.kind)) + " requires parameter '" + key + "'");
    }
  }
  for (const auto& [key, value] : d.params) {
    const bool known = std::any_of(required.begin(), required.end(), [&](const char* k) { return key == k; }) ||
                       std::any_of(optional.begin(), optional.end(), [&](const char* k) { return key == k; });
    if (!known) {
      throw ValidationError(std::string(to_string(d.kind)) + " does not take parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw ValidationError("parameter '" + key + "' is not finite");
  }
}

void check_unit(const Disturbance& d, const char* key) {
  const double v = d.params.at(key);
  if (v < 0.0 || v > 1.0) {
    throw ValidationError(std::string(to_string(d.kind)) + " parameter '" + key + "' must lie in [0,1]");
  }
}

double duration_or(const Disturbance& d, double fallback) {
  auto it = d.params.find("duration");
  if (it == d.params.end()) return fallback;
  if (!(it->second > 0.0)) throw ValidationError("duration must be positive");
  return it->second;
}

}  // namespace

void validate_disturbance(const Disturbance& d) {
  switch (d.kind) {
    case DisturbanceKind::ComponentFail:
    case DisturbanceKind::ComponentRepair:
      check_params(d, {}, {});
      break;
    case DisturbanceKind::LatencyAdd:
      check_params(d, {"ms"}, {});
      if (d.params.at("ms") < 0.0) throw ValidationError("latency-add 'ms' must be non-negative");
      break;
    case DisturbanceKind::LatencyClear:
      check_params(d, {}, {"ms"});
      break;
    case DisturbanceKind::FdiBias:
      check_params(d, {"bias"}, {});
      break;
    case DisturbanceKind::FdiClear:
      check_params(d, {}, {"bias"});
      break;
    case DisturbanceKind::IdsAlert:
      check_params(d, {"severity"}, {"duration"});
      check_unit(d, "severity");
      duration_or(d, 1.0);
      break;
    case DisturbanceKind::HealthDegradation:
      check_params(d, {"load"}, {"duration"});
      check_unit(d, "load");
      duration_or(d, 1.0);
      break;
    case DisturbanceKind::IsmsFinding:
      check_params(d, {"score"}, {"duration"});
      check_unit(d, "score");
      duration_or(d, 1.0);
      break;
  }
}

IctTopology inject_disturbance(const IctTopology& topology, const Disturbance& d) {
  validate_disturbance(d);
  if (!topology.contains(d.target)) throw UnknownIdError("component", d.target);
  return topology.with_component(d.target, [&](IctComponent& c) {
    switch (d.kind) {
      case DisturbanceKind::ComponentFail:
        c.up = false;
        break;
      case DisturbanceKind::ComponentRepair:
        c.up = true;
        break;
      case DisturbanceKind::LatencyAdd:
        c.added_latency_ms += d.params.at("ms");
        break;
      case DisturbanceKind::LatencyClear: {
        auto it = d.params.find("ms");
        c.added_latency_ms = it == d.params.end() ? 0.0 : std::max(0.0, c.added_latency_ms - it->second);
        break;
      }
      case DisturbanceKind::FdiBias:
        c.fdi_bias += d.params.at("bias");
        break;
      case DisturbanceKind::FdiClear: {
        auto it = d.params.find("bias");
        c.fdi_bias = it == d.params.end() ? 0.0 : c.fdi_bias - it->second;
        break;
      }
      case DisturbanceKind::IdsAlert:
        c.ids_alerts.push_back({d.time, d.time + duration_or(d, 1.0), d.params.at("severity")});
        break;
      case DisturbanceKind::HealthDegradation:
        c.health_loads.push_back({d.time, d.time + duration_or(d, kForever), d.params.at("load")});
        break;
      case DisturbanceKind::IsmsFinding:
        c.isms_findings.push_back({d.time, d.time + duration_or(d, kForever), d.params.at("score")});
        break;
    }
  });
}

MeasurementSet deliver(const MeasurementSet& measurements, const IctTopology& topology, double t) {
  MeasurementSet out;
  out.reserve(measurements.size());
  std::map<std::string, std::optional<double>> latency_cache;
  for (const auto& m : measurements) {
    if (m.provenance != Provenance::Field || !m.source) continue;
    const IctComponent& dev = topology.component(*m.source);
    if (!dev.up) continue;
    auto [it, fresh] = latency_cache.try_emplace(*m.source);
    if (fresh) it->second = path_latency(topology, *m.source, topology.control_room(), t);
    if (!it->second) continue;
    Measurement d = m;
    d.latency_ms = *it->second;
    d.value += dev.fdi_bias;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<MonitoringRecord> emit_monitoring(const IctTopology& topology, double t) {
  std::vector<MonitoringRecord> out;
  for (const auto& c : topology.components()) {
    out.push_back({MonitoringSource::Heartbeat, c.id, c.up ? 1.0 : 0.0, t});
  }
  for (const auto& c : topology.components()) {
    for (const auto& a : c.ids_alerts) {
      if (a.active_at(t)) out.push_back({MonitoringSource::Ids, c.id, a.value, t});
    }
    for (const auto& f : c.isms_findings) {
      if (f.active_at(t)) out.push_back({MonitoringSource::Isms, c.id, f.value, t});
    }
    for (const auto& h : c.health_loads) {
      if (h.active_at(t)) out.push_back({MonitoringSource::HealthMonitor, c.id, h.value, t});
    }
  }
  return out;
}

}  // namespace cpes
