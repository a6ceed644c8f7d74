#include "cpes/trust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "cpes/error.hpp"

namespace cpes {

using nlohmann::json;

std::string_view to_string(Facet f) {
  switch (f) {
    case Facet::FunctionalCorrectness: return "functional_correctness";
    case Facet::Safety: return "safety";
    case Facet::Security: return "security";
    case Facet::Reliability: return "reliability";
    case Facet::Credibility: return "credibility";
    case Facet::Usability: return "usability";
  }
  return "?";
}

Facet parse_facet(std::string_view s) {
  for (Facet f : kAllFacets) {
    if (to_string(f) == s) return f;
  }
  throw ValidationError("unknown trust facet '" + std::string(s) + "'");
}

std::string_view to_string(Aggregation a) {
  return a == Aggregation::Min ? "min" : "weighted-average";
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "min") return Aggregation::Min;
  if (s == "weighted-average") return Aggregation::WeightedAverage;
  throw ValidationError("unknown aggregation policy '" + std::string(s) + "'");
}

void MultivariateTrustValue::put(Facet f, SimpleTrustValue v) {
  if (!(v.probability >= 0.0 && v.probability <= 1.0)) {
    throw ValidationError("trust probability outside [0,1] from estimator '" + v.estimator + "'");
  }
  auto& slot = slots_[index(f)];
  auto it = std::find_if(slot.begin(), slot.end(),
                         [&](const SimpleTrustValue& s) { return s.estimator == v.estimator; });
  if (it != slot.end()) *it = std::move(v);
  else slot.push_back(std::move(v));
}

std::vector<TrustEstimatorSpec> default_estimators() {
  return {
      {"ids", MonitoringSource::Ids, {Facet::Security}, 2.0},
      {"isms", MonitoringSource::Isms, {Facet::Security}, 0.0},
      {"health", MonitoringSource::HealthMonitor, {Facet::FunctionalCorrectness}, 0.0},
      {"heartbeat", MonitoringSource::Heartbeat, {Facet::FunctionalCorrectness}, 0.0},
  };
}

void ClusterConfig::validate() const {
  if (members.empty()) throw ValidationError("data-correctness cluster has no member facets");
  if (!(default_trust >= 0.0 && default_trust <= 1.0)) {
    throw ValidationError("default trust must lie in [0,1]");
  }
  for (const auto& [k, w] : estimator_weights) {
    if (!(w > 0.0)) throw ValidationError("estimator weight for '" + k + "' must be positive");
  }
  for (const auto& [f, w] : facet_weights) {
    if (!(w > 0.0)) throw ValidationError("facet weight must be positive");
  }
}

double aggregate(std::span<const double> values, Aggregation policy, std::span<const double> weights) {
  if (values.empty()) throw ValidationError("cannot aggregate an empty set");
  if (policy == Aggregation::Min) return *std::min_element(values.begin(), values.end());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    num += w * values[i];
    den += w;
  }
  return std::clamp(num / den, 0.0, 1.0);
}

SimpleTrustValue estimate_component_trust(const TrustEstimatorSpec& spec,
                                          std::span<const MonitoringRecord> inputs,
                                          const TrustContext& context) {
  if (spec.targets.empty()) throw ValidationError("estimator '" + spec.id + "' has no target facet");
  if (spec.decay_rate < 0.0) throw ValidationError("estimator '" + spec.id + "' has negative decay rate");
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    if (inputs[i].target != inputs[0].target) {
      throw ValidationError("estimator '" + spec.id + "' received inputs for several OOIs");
    }
  }
  double sum = 0.0, worst = 0.0;
  bool seen = false, miss = false;
  for (const auto& r : inputs) {
    if (r.source != spec.source || !context.contains(r.timestamp)) continue;
    seen = true;
    sum += r.payload;
    worst = std::max(worst, r.payload);
    if (r.payload < 0.5) miss = true;
  }
  double p = 1.0;
  switch (spec.source) {
    case MonitoringSource::Ids:
      p = std::exp(-spec.decay_rate * sum);
      break;
    case MonitoringSource::Isms:
    case MonitoringSource::HealthMonitor:
      p = 1.0 - worst;
      break;
    case MonitoringSource::Heartbeat:
      p = (seen && !miss) ? 1.0 : 0.0;
      break;
  }
  return {spec.id, std::clamp(p, 0.0, 1.0)};
}

MultivariateTrustValue assemble_multivariate(
    const std::vector<std::pair<Facet, SimpleTrustValue>>& values, const std::string& ooi,
    const TrustContext& context) {
  MultivariateTrustValue mtv(ooi, context);
  for (const auto& [facet, v] : values) mtv.put(facet, v);
  return mtv;
}

std::optional<double> facet_probability(const MultivariateTrustValue& mtv, Facet facet,
                                        const ClusterConfig& cfg) {
  const auto& slot = mtv.facet(facet);
  if (slot.empty()) return std::nullopt;
  std::vector<double> p, w;
  for (const auto& v : slot) {
    p.push_back(v.probability);
    auto it = cfg.estimator_weights.find(v.estimator);
    w.push_back(it == cfg.estimator_weights.end() ? 1.0 : it->second);
  }
  return aggregate(p, cfg.within, w);
}

MultivariateTrustValue derive_ooi_trust(std::span<const MultivariateTrustValue> chain,
                                        const ClusterConfig& cfg, const std::string& ooi,
                                        const std::string& estimator) {
  if (chain.empty()) throw ValidationError("cannot derive trust from an empty component chain");
  TrustContext ctx = chain.front().context();
  MultivariateTrustValue out(ooi, ctx);
  for (Facet f : kAllFacets) {
    std::vector<double> p;
    for (const auto& mtv : chain) {
      if (auto v = facet_probability(mtv, f, cfg)) p.push_back(*v);
    }
    if (!p.empty()) out.put(f, {estimator, aggregate(p, cfg.chain)});
  }
  return out;
}

double data_correctness_trust(const MultivariateTrustValue& mtv, const ClusterConfig& cfg) {
  std::vector<double> p, w;
  for (Facet f : cfg.members) {
    if (auto v = facet_probability(mtv, f, cfg)) {
      p.push_back(*v);
      auto it = cfg.facet_weights.find(f);
      w.push_back(it == cfg.facet_weights.end() ? 1.0 : it->second);
    }
  }
  if (p.empty()) return cfg.default_trust;
  return aggregate(p, cfg.across, w);
}

MultivariateTrustValue assess_component(const IctComponent& component,
                                        std::span<const TrustEstimatorSpec> estimators,
                                        std::span<const MonitoringRecord> records,
                                        const TrustContext& context) {
  std::vector<MonitoringRecord> own;
  for (const auto& r : records) {
    if (r.target == component.id) own.push_back(r);
  }
  MultivariateTrustValue mtv(component.id, context);
  for (const auto& spec : estimators) {
    const SimpleTrustValue v = estimate_component_trust(spec, own, context);
    for (Facet f : spec.targets) mtv.put(f, v);
  }
  for (const auto& [facet, p] : component.static_trust) {
    mtv.put(parse_facet(facet), {"static", std::clamp(p, 0.0, 1.0)});
  }
  return mtv;
}

json to_json(const MultivariateTrustValue& mtv) {
  json facets = json::object();
  for (Facet f : kAllFacets) {
    json arr = json::array();
    for (const auto& v : mtv.facet(f)) arr.push_back({{"estimator", v.estimator}, {"p", v.probability}});
    facets[std::string(to_string(f))] = std::move(arr);
  }
  return {{"ooi", mtv.ooi()},
          {"context", {{"from", mtv.context().from}, {"to", mtv.context().to}}},
          {"facets", std::move(facets)}};
}

MultivariateTrustValue mtv_from_json(const json& j) {
  try {
    MultivariateTrustValue mtv(j.at("ooi").get<std::string>(),
                               {j.at("context").at("from").get<double>(), j.at("context").at("to").get<double>()});
    for (const auto& [name, arr] : j.at("facets").items()) {
      const Facet f = parse_facet(name);
      for (const auto& v : arr) mtv.put(f, {v.at("estimator").get<std::string>(), v.at("p").get<double>()});
    }
    return mtv;
  } catch (const json::exception& e) {
    throw ParseError(std::string("trust value: ") + e.what());
  }
}

json facet_summary(const MultivariateTrustValue& mtv, const ClusterConfig& cfg) {
  json out = json::object();
  for (Facet f : kAllFacets) {
    auto p = facet_probability(mtv, f, cfg);
    out[std::string(to_string(f))] = p ? json(*p) : json(nullptr);
  }
  return out;
}

}  // namespace cpes
