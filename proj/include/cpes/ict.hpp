#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpes/grid.hpp"

namespace cpes {

enum class ComponentKind { Sensor, Router, Link, Server, Controller, Aggregator, ControlRoom };

std::string_view to_string(ComponentKind k);
ComponentKind parse_component_kind(std::string_view s);

/// Time-limited monitoring condition (alert, finding, load) on a component.
struct TimedCondition {
  double from = 0.0;
  double until = 0.0;  // exclusive; +inf for open-ended
  double value = 0.0;

  bool active_at(double t) const { return t >= from && t < until; }
  friend bool operator==(const TimedCondition&, const TimedCondition&) = default;
};

struct IctComponent {
  std::string id;
  ComponentKind kind = ComponentKind::Router;
  bool up = true;
  double latency_ms = 0.0;        // base per-hop contribution
  double added_latency_ms = 0.0;  // from active latency-add disturbances
  std::optional<std::string> location;  // grid bus (sensor) or controllable (controller)
  double fdi_bias = 0.0;                // additive bias on delivered values
  std::vector<TimedCondition> ids_alerts;
  std::vector<TimedCondition> isms_findings;
  std::vector<TimedCondition> health_loads;
  bool avoid = false;                   // routing preference
  /// Static facet scores (facet name -> probability), e.g. third-party credibility.
  std::map<std::string, double> static_trust;

  double hop_latency() const { return latency_ms + added_latency_ms; }
  friend bool operator==(const IctComponent&, const IctComponent&) = default;
};

struct IctLink {
  std::string a;
  std::string b;
  double latency_ms = 0.0;
  friend bool operator==(const IctLink&, const IctLink&) = default;
};

enum class DisturbanceKind {
  ComponentFail,
  ComponentRepair,
  LatencyAdd,
  LatencyClear,
  FdiBias,
  FdiClear,
  IdsAlert,
  HealthDegradation,
  IsmsFinding,
};

std::string_view to_string(DisturbanceKind k);
std::optional<DisturbanceKind> parse_disturbance_kind(std::string_view s);

struct Disturbance {
  DisturbanceKind kind = DisturbanceKind::ComponentFail;
  std::string target;
  double time = 0.0;
  /// Kind-specific: latency-add/clear `ms`; fdi-bias/clear `bias`;
  /// ids-alert `severity`; health-degradation `load`; isms-finding `score`;
  /// the last three accept an optional `duration` in seconds.
  std::map<std::string, double> params;
};

enum class MonitoringSource { Ids, Isms, HealthMonitor, Heartbeat };

std::string_view to_string(MonitoringSource s);
MonitoringSource parse_monitoring_source(std::string_view s);

struct MonitoringRecord {
  MonitoringSource source = MonitoringSource::Heartbeat;
  std::string target;
  /// Severity, vulnerability score, or resource load in [0,1];
  /// liveness 1/0 for heartbeats.
  double payload = 0.0;
  double timestamp = 0.0;
};

/// Immutable-by-convention ICT network state. Mutating operations return
/// a new topology.
class IctTopology {
 public:
  IctTopology() = default;
  /// Throws ValidationError on dangling links or missing control room.
  IctTopology(std::vector<IctComponent> components, std::vector<IctLink> links);

  const std::vector<IctComponent>& components() const { return components_; }
  const std::vector<IctLink>& links() const { return links_; }
  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  const IctComponent& component(const std::string& id) const;
  /// First declared control-room component.
  const std::string& control_room() const { return control_room_; }
  std::vector<std::string> ids_of_kind(ComponentKind k) const;

  /// Copy with `fn` applied to one component.
  template <typename Fn>
  IctTopology with_component(const std::string& id, Fn&& fn) const {
    IctTopology copy = *this;
    fn(copy.components_[copy.index_of(id)]);
    return copy;
  }

  /// Graph adjacency: neighbour index and link latency per component.
  const std::vector<std::vector<std::pair<int, double>>>& adjacency() const { return adj_; }
  int index_of(const std::string& id) const;

  friend bool operator==(const IctTopology& a, const IctTopology& b) {
    return a.components_ == b.components_ && a.links_ == b.links_;
  }

 private:
  std::vector<IctComponent> components_;
  std::vector<IctLink> links_;
  std::map<std::string, int> index_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  std::string control_room_;
};

/// Parses the "ict" section of a grid document and cross-checks locations.
IctTopology load_ict(const nlohmann::json& ict_section, const PowerGrid& grid);
IctTopology load_ict_from_grid_document(std::string_view document, const PowerGrid& grid);

/// Heartbeat semantics: true iff the component is up.
bool component_available(const IctTopology& topology, const std::string& id, double t);

/// Minimum over up-paths of summed hop latencies (every component on the
/// path plus every link). nullopt means Unreachable.
std::optional<double> path_latency(const IctTopology& topology, const std::string& src,
                                   const std::string& dst, double t);

/// Component ids along the path chosen by path_latency, src first.
std::optional<std::vector<std::string>> route(const IctTopology& topology, const std::string& src,
                                              const std::string& dst, double t);

/// Throws ValidationError if the parameters do not match the kind.
void validate_disturbance(const Disturbance& d);

/// Throws UnknownIdError for an unknown target, ValidationError for
/// parameters that do not match the kind.
IctTopology inject_disturbance(const IctTopology& topology, const Disturbance& d);

/// Drops measurements from unavailable or unreachable devices, stamps the
/// arrival latency and adds any active FDI bias.
MeasurementSet deliver(const MeasurementSet& measurements, const IctTopology& topology, double t);

/// Heartbeats for every component plus IDS/ISMS/health records for active
/// conditions.
std::vector<MonitoringRecord> emit_monitoring(const IctTopology& topology, double t);

}  // namespace cpes
