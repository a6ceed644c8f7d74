#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpes/ict.hpp"

namespace cpes {

enum class Facet { FunctionalCorrectness, Safety, Security, Reliability, Credibility, Usability };

inline constexpr std::array<Facet, 6> kAllFacets{Facet::FunctionalCorrectness, Facet::Safety,
                                                 Facet::Security,     Facet::Reliability,
                                                 Facet::Credibility,  Facet::Usability};

std::string_view to_string(Facet f);
Facet parse_facet(std::string_view s);

struct SimpleTrustValue {
  std::string estimator;
  double probability = 1.0;
  friend bool operator==(const SimpleTrustValue&, const SimpleTrustValue&) = default;
};

/// Temporal validity of a trust assessment: inputs with timestamp in
/// (from, to] are considered.
struct TrustContext {
  double from = 0.0;
  double to = 0.0;
  bool contains(double t) const { return t > from && t <= to; }
  friend bool operator==(const TrustContext&, const TrustContext&) = default;
};

/// Six facet slots, each a set of simple trust values keyed by estimator.
class MultivariateTrustValue {
 public:
  MultivariateTrustValue() = default;
  MultivariateTrustValue(std::string ooi, TrustContext context)
      : ooi_(std::move(ooi)), context_(context) {}

  const std::string& ooi() const { return ooi_; }
  const TrustContext& context() const { return context_; }
  const std::vector<SimpleTrustValue>& facet(Facet f) const { return slots_[index(f)]; }

  /// Inserts or replaces the value of `v.estimator` in facet `f`.
  /// Throws ValidationError if the probability is outside [0,1].
  void put(Facet f, SimpleTrustValue v);

  friend bool operator==(const MultivariateTrustValue&, const MultivariateTrustValue&) = default;

 private:
  static std::size_t index(Facet f) { return static_cast<std::size_t>(f); }
  std::string ooi_;
  TrustContext context_;
  std::array<std::vector<SimpleTrustValue>, 6> slots_;
};

enum class Aggregation { Min, WeightedAverage };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view s);

struct TrustEstimatorSpec {
  std::string id;
  MonitoringSource source = MonitoringSource::Ids;
  std::vector<Facet> targets;
  double decay_rate = 2.0;  // IDS: p = exp(-decay_rate * sum of severities)
};

/// Default estimators: ids and isms on Security, health and heartbeat on
/// FunctionalCorrectness.
std::vector<TrustEstimatorSpec> default_estimators();

struct ClusterConfig {
  std::vector<Facet> members{Facet::FunctionalCorrectness, Facet::Security, Facet::Credibility,
                             Facet::Usability};
  Aggregation within = Aggregation::Min;  // simple values inside one facet
  Aggregation across = Aggregation::Min;  // member facets into t_c
  Aggregation chain = Aggregation::Min;   // components of a derived OOI
  /// Weighted-average weights; missing keys weigh 1.
  std::map<std::string, double> estimator_weights;
  std::map<Facet, double> facet_weights;
  double default_trust = 1.0;  // t_c when every member facet is vacuous

  /// Throws ValidationError on empty membership or bad weights.
  void validate() const;
};

/// Transforms one OOI's monitoring records into a trust probability.
/// Records of other sources or outside the context are ignored; records
/// for a different OOI raise ValidationError.
SimpleTrustValue estimate_component_trust(const TrustEstimatorSpec& spec,
                                          std::span<const MonitoringRecord> inputs,
                                          const TrustContext& context);

MultivariateTrustValue assemble_multivariate(
    const std::vector<std::pair<Facet, SimpleTrustValue>>& values, const std::string& ooi,
    const TrustContext& context);

/// Within-facet aggregate; nullopt when the facet is empty (vacuous).
std::optional<double> facet_probability(const MultivariateTrustValue& mtv, Facet facet,
                                        const ClusterConfig& cfg = {});

/// Trust of a derived OOI from its ordered chain of involved components.
/// Throws ValidationError for an empty chain.
MultivariateTrustValue derive_ooi_trust(std::span<const MultivariateTrustValue> chain,
                                        const ClusterConfig& cfg, const std::string& ooi = "derived",
                                        const std::string& estimator = "derived");

/// t_c: across-facet aggregate over non-vacuous cluster members.
double data_correctness_trust(const MultivariateTrustValue& mtv, const ClusterConfig& cfg = {});

/// Aggregates plain probabilities under the given policy (equal weights
/// when `weights` is empty). Requires a non-empty input.
double aggregate(std::span<const double> values, Aggregation policy,
                 std::span<const double> weights = {});

/// Runs every estimator over one component's records and folds in the
/// component's static facet scores.
MultivariateTrustValue assess_component(const IctComponent& component,
                                        std::span<const TrustEstimatorSpec> estimators,
                                        std::span<const MonitoringRecord> records,
                                        const TrustContext& context);

nlohmann::json to_json(const MultivariateTrustValue& mtv);
MultivariateTrustValue mtv_from_json(const nlohmann::json& j);
/// Facet name -> within-facet probability (null when vacuous).
nlohmann::json facet_summary(const MultivariateTrustValue& mtv, const ClusterConfig& cfg);

}  // namespace cpes
