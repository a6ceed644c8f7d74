#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "cpes/error.hpp"
#include "cpes/trust.hpp"

using namespace cpes;

namespace {

const TrustContext kCtx{0.0, 1.0};

MonitoringRecord rec(MonitoringSource s, double payload, double t = 0.5, std::string target = "R1") {
  return {s, std::move(target), payload, t};
}

TrustEstimatorSpec spec(MonitoringSource s, double decay = 2.0) {
  return {"e", s, {Facet::Security}, decay};
}

MultivariateTrustValue random_mtv(std::mt19937_64& gen, const std::string& ooi) {
  std::uniform_real_distribution<double> p(0.0, 1.0);
  std::bernoulli_distribution present(0.6);
  std::uniform_int_distribution<int> count(1, 3);
  MultivariateTrustValue mtv(ooi, kCtx);
  for (Facet f : kAllFacets) {
    if (!present(gen)) continue;
    const int n = count(gen);
    for (int i = 0; i < n; ++i) mtv.put(f, {"est" + std::to_string(i), p(gen)});
  }
  return mtv;
}

}  // namespace

TEST(Estimators, IdsDecaysWithSummedSeverity) {
  const std::vector<MonitoringRecord> one{rec(MonitoringSource::Ids, 0.8)};
  EXPECT_NEAR(estimate_component_trust(spec(MonitoringSource::Ids), one, kCtx).probability, std::exp(-1.6), 1e-15);
  const std::vector<MonitoringRecord> two{rec(MonitoringSource::Ids, 0.3), rec(MonitoringSource::Ids, 0.2)};
  EXPECT_NEAR(estimate_component_trust(spec(MonitoringSource::Ids), two, kCtx).probability, std::exp(-1.0), 1e-15);
  EXPECT_EQ(estimate_component_trust(spec(MonitoringSource::Ids), {}, kCtx).probability, 1.0);
}

TEST(Estimators, WorstScoreForIsmsAndHealth) {
  const std::vector<MonitoringRecord> isms{rec(MonitoringSource::Isms, 0.3), rec(MonitoringSource::Isms, 0.6)};
  EXPECT_DOUBLE_EQ(estimate_component_trust(spec(MonitoringSource::Isms), isms, kCtx).probability, 0.4);
  const std::vector<MonitoringRecord> load{rec(MonitoringSource::HealthMonitor, 0.95)};
  EXPECT_NEAR(estimate_component_trust(spec(MonitoringSource::HealthMonitor), load, kCtx).probability, 0.05, 1e-12);
}

TEST(Estimators, HeartbeatNeedsALiveBeat) {
  const auto hb = spec(MonitoringSource::Heartbeat);
  const std::vector<MonitoringRecord> alive{rec(MonitoringSource::Heartbeat, 1.0)};
  const std::vector<MonitoringRecord> missed{rec(MonitoringSource::Heartbeat, 1.0, 0.2),
                                             rec(MonitoringSource::Heartbeat, 0.0, 0.7)};
  EXPECT_EQ(estimate_component_trust(hb, alive, kCtx).probability, 1.0);
  EXPECT_EQ(estimate_component_trust(hb, missed, kCtx).probability, 0.0);
  EXPECT_EQ(estimate_component_trust(hb, {}, kCtx).probability, 0.0);
}

TEST(Estimators, IgnoresOtherSourcesAndStaleRecords) {
  const std::vector<MonitoringRecord> noise{rec(MonitoringSource::Isms, 0.9), rec(MonitoringSource::Ids, 0.9, 0.0),
                                            rec(MonitoringSource::Ids, 0.9, 1.5)};
  EXPECT_EQ(estimate_component_trust(spec(MonitoringSource::Ids), noise, kCtx).probability, 1.0);
}

TEST(Estimators, RejectsMixedTargetsAndBadSpecs) {
  const std::vector<MonitoringRecord> mixed{rec(MonitoringSource::Ids, 0.1, 0.5, "A"),
                                            rec(MonitoringSource::Ids, 0.1, 0.5, "B")};
  EXPECT_THROW(estimate_component_trust(spec(MonitoringSource::Ids), mixed, kCtx), ValidationError);
  TrustEstimatorSpec none{"x", MonitoringSource::Ids, {}, 2.0};
  EXPECT_THROW(estimate_component_trust(none, {}, kCtx), ValidationError);
  EXPECT_THROW(estimate_component_trust(spec(MonitoringSource::Ids, -1.0), {}, kCtx), ValidationError);
}

TEST(Multivariate, PutReplacesPerEstimatorAndChecksRange) {
  MultivariateTrustValue mtv("x", kCtx);
  mtv.put(Facet::Security, {"ids", 0.4});
  mtv.put(Facet::Security, {"ids", 0.7});
  mtv.put(Facet::Security, {"isms", 0.9});
  ASSERT_EQ(mtv.facet(Facet::Security).size(), 2u);
  EXPECT_EQ(mtv.facet(Facet::Security)[0].probability, 0.7);
  EXPECT_THROW(mtv.put(Facet::Safety, {"bad", 1.1}), ValidationError);
  EXPECT_THROW(mtv.put(Facet::Safety, {"bad", std::nan("")}), ValidationError);
  EXPECT_TRUE(mtv.facet(Facet::Safety).empty());
}

TEST(Multivariate, JsonRoundTrip) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 200; ++i) {
    const auto mtv = random_mtv(gen, "ooi" + std::to_string(i));
    EXPECT_EQ(mtv_from_json(to_json(mtv)), mtv);
  }
  EXPECT_THROW(mtv_from_json(nlohmann::json::object()), ParseError);
}

TEST(Correctness, VacuousFacetsAreSkipped) {
  MultivariateTrustValue mtv("x", kCtx);
  EXPECT_EQ(data_correctness_trust(mtv), 1.0);
  ClusterConfig cfg;
  cfg.default_trust = 0.3;
  EXPECT_EQ(data_correctness_trust(mtv, cfg), 0.3);
  mtv.put(Facet::Safety, {"s", 0.1});  // not a cluster member
  EXPECT_EQ(data_correctness_trust(mtv), 1.0);
  mtv.put(Facet::Credibility, {"c", 0.6});
  EXPECT_EQ(data_correctness_trust(mtv), 0.6);
  mtv.put(Facet::Security, {"ids", 0.2});
  EXPECT_EQ(data_correctness_trust(mtv), 0.2);
}

TEST(Correctness, WeightedAverageAcrossFacets) {
  MultivariateTrustValue mtv("x", kCtx);
  mtv.put(Facet::Security, {"ids", 0.2});
  mtv.put(Facet::Credibility, {"c", 0.8});
  ClusterConfig cfg;
  cfg.across = Aggregation::WeightedAverage;
  EXPECT_NEAR(data_correctness_trust(mtv, cfg), 0.5, 1e-15);
  cfg.facet_weights[Facet::Credibility] = 3.0;
  EXPECT_NEAR(data_correctness_trust(mtv, cfg), (0.2 + 3 * 0.8) / 4, 1e-15);
}

TEST(Assessment, DefaultEstimatorsOnACompromisedRouter) {
  IctComponent c;
  c.id = "R1";
  const std::vector<MonitoringRecord> records{rec(MonitoringSource::Heartbeat, 1.0), rec(MonitoringSource::Ids, 0.8),
                                              rec(MonitoringSource::Heartbeat, 1.0, 0.5, "R2")};
  const auto est = default_estimators();
  const auto mtv = assess_component(c, est, records, kCtx);
  EXPECT_NEAR(*facet_probability(mtv, Facet::Security), std::exp(-1.6), 1e-15);
  EXPECT_EQ(*facet_probability(mtv, Facet::FunctionalCorrectness), 1.0);
  EXPECT_FALSE(facet_probability(mtv, Facet::Credibility));
  EXPECT_NEAR(data_correctness_trust(mtv), std::exp(-1.6), 1e-15);
}

TEST(Assessment, StaticScoresFoldIn) {
  IctComponent c;
  c.id = "X";
  c.static_trust["credibility"] = 0.4;
  const std::vector<MonitoringRecord> records{rec(MonitoringSource::Heartbeat, 1.0, 0.5, "X")};
  const auto est = default_estimators();
  EXPECT_DOUBLE_EQ(data_correctness_trust(assess_component(c, est, records, kCtx)), 0.4);
}

TEST(Derivation, EmptyChainRejected) {
  EXPECT_THROW(derive_ooi_trust({}, ClusterConfig{}), ValidationError);
}

TEST(Aggregate, Basics) {
  const std::vector<double> v{0.2, 0.8, 0.5};
  EXPECT_EQ(aggregate(v, Aggregation::Min), 0.2);
  EXPECT_NEAR(aggregate(v, Aggregation::WeightedAverage), 0.5, 1e-15);
  const std::vector<double> w{1, 0, 0};
  EXPECT_EQ(aggregate(v, Aggregation::WeightedAverage, w), 0.2);
  EXPECT_THROW(aggregate({}, Aggregation::Min), ValidationError);
  EXPECT_THROW(parse_aggregation("median"), ValidationError);
}

// Randomized properties over 1000 generated cases each.

TEST(TrustProperties, AggregateStaysWithinInputs) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> p(0.0, 1.0), w(0.01, 5.0);
  std::uniform_int_distribution<int> n(1, 8);
  for (int c = 0; c < 1000; ++c) {
    std::vector<double> v(n(gen)), ws;
    for (auto& x : v) x = p(gen);
    for (std::size_t i = 0; i < v.size(); ++i) ws.push_back(w(gen));
    const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
    const double m = aggregate(v, Aggregation::Min), a = aggregate(v, Aggregation::WeightedAverage, ws);
    EXPECT_EQ(m, lo);
    EXPECT_GE(a, lo - 1e-15);
    EXPECT_LE(a, hi + 1e-15);
    EXPECT_LE(m, a + 1e-15);
  }
}

TEST(TrustProperties, LoweringAnInputNeverRaisesTheAggregate) {
  std::mt19937_64 gen(102);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  std::uniform_int_distribution<int> n(1, 8);
  for (int c = 0; c < 1000; ++c) {
    std::vector<double> v(n(gen));
    for (auto& x : v) x = p(gen);
    auto lowered = v;
    auto& pick = lowered[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(gen)];
    pick *= p(gen);
    for (auto policy : {Aggregation::Min, Aggregation::WeightedAverage}) {
      EXPECT_LE(aggregate(lowered, policy), aggregate(v, policy) + 1e-15);
    }
  }
}

TEST(TrustProperties, CorrectnessTrustIsAProbability) {
  std::mt19937_64 gen(103);
  for (int c = 0; c < 1000; ++c) {
    const auto mtv = random_mtv(gen, "x");
    ClusterConfig cfg;
    cfg.across = c % 2 ? Aggregation::Min : Aggregation::WeightedAverage;
    cfg.within = c % 3 ? Aggregation::Min : Aggregation::WeightedAverage;
    const double tc = data_correctness_trust(mtv, cfg);
    EXPECT_GE(tc, 0.0);
    EXPECT_LE(tc, 1.0);
  }
}

TEST(TrustProperties, MinChainEqualsWeakestComponent) {
  std::mt19937_64 gen(104);
  std::uniform_int_distribution<int> len(1, 6);
  const ClusterConfig cfg;
  for (int c = 0; c < 1000; ++c) {
    std::vector<MultivariateTrustValue> chain;
    const int n = len(gen);
    double weakest = 1.0;
    for (int i = 0; i < n; ++i) {
      chain.push_back(random_mtv(gen, "c" + std::to_string(i)));
      weakest = std::min(weakest, data_correctness_trust(chain.back(), cfg));
    }
    EXPECT_DOUBLE_EQ(data_correctness_trust(derive_ooi_trust(chain, cfg), cfg), weakest);
  }
}

TEST(TrustProperties, ExtendingAChainNeverRaisesTrust) {
  std::mt19937_64 gen(105);
  const ClusterConfig cfg;
  for (int c = 0; c < 1000; ++c) {
    std::vector<MultivariateTrustValue> chain{random_mtv(gen, "a"), random_mtv(gen, "b")};
    const double before = data_correctness_trust(derive_ooi_trust(chain, cfg), cfg);
    chain.push_back(random_mtv(gen, "c"));
    EXPECT_LE(data_correctness_trust(derive_ooi_trust(chain, cfg), cfg), before);
  }
}

TEST(TrustProperties, MoreIdsSeverityNeverRaisesSecurity) {
  std::mt19937_64 gen(106);
  std::uniform_real_distribution<double> sev(0.0, 1.0);
  const auto ids = spec(MonitoringSource::Ids);
  for (int c = 0; c < 1000; ++c) {
    std::vector<MonitoringRecord> r{rec(MonitoringSource::Ids, sev(gen))};
    const double before = estimate_component_trust(ids, r, kCtx).probability;
    r.push_back(rec(MonitoringSource::Ids, sev(gen)));
    const double after = estimate_component_trust(ids, r, kCtx).probability;
    EXPECT_LE(after, before);
    EXPECT_GE(after, 0.0);
  }
}
