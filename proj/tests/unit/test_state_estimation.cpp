#include <gtest/gtest.h>

#include <algorithm>

#include "../oracles/oracles.hpp"
#include "../support/fixtures.hpp"
#include "cpes/error.hpp"
#include "cpes/state_estimation.hpp"

using namespace cpes;

namespace {

MeasurementSet measure(const PowerGrid& g, double scale, std::uint64_t seed) {
  NoiseModel noise;
  noise.scale = scale;
  return generate_measurements(g, solve_power_flow(g), g.sensors(), noise, seed, 1.0);
}

MeasurementSet without(MeasurementSet z, const std::vector<std::string>& drop) {
  std::erase_if(z, [&](const Measurement& m) { return std::find(drop.begin(), drop.end(), m.id) != drop.end(); });
  return z;
}

std::map<std::string, double> profiles(const PowerGrid& g) {
  std::map<std::string, double> out;
  for (const auto& m : measure(g, 0.0, 0)) out[m.id] = m.value;
  return out;
}

std::vector<SensorSpec> specs_of(const PowerGrid& g, const MeasurementSet& z) {
  std::vector<SensorSpec> out;
  for (const auto& m : z) out.push_back(g.sensor(m.id));
  return out;
}

}  // namespace

TEST(Solvability, FullSensorSetIsSolvable) {
  for (const auto* name : {"grid2", "grid3", "feeder6"}) {
    const auto g = fixtures::grid(name);
    const auto rep = check_solvability(measure(g, 0.0, 0), g);
    EXPECT_EQ(rep.n_sv, 2 * g.bus_count() - 1) << name;
    EXPECT_TRUE(rep.solvable) << name;
  }
}

TEST(Solvability, MatchesSvdOracleOnSubsets) {
  const auto g = fixtures::grid("grid2");
  const auto z = measure(g, 0.0, 0);
  oracle::Phasors flat{Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2)};
  for (unsigned mask = 0; mask < (1u << z.size()); ++mask) {
    MeasurementSet sub;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(z[i]);
    }
    const int expect = sub.empty() ? 0 : oracle::svd_rank(oracle::fd_jacobian(g, specs_of(g, sub), flat));
    const auto rep = check_solvability(sub, g);
    EXPECT_EQ(rep.rank, expect) << "mask " << mask;
    EXPECT_EQ(rep.solvable, expect == 3) << "mask " << mask;
  }
}

TEST(Solvability, VoltageOnlyIsNotEnough) {
  const auto g = fixtures::grid("feeder6");
  MeasurementSet v;
  for (const auto& m : measure(g, 0.0, 0)) {
    if (m.kind == MeasurementKind::VMag) v.push_back(m);
  }
  const auto rep = check_solvability(v, g);
  EXPECT_EQ(rep.rank, 6);
  EXPECT_FALSE(rep.solvable);
}

TEST(Wls, RecoversTruthFromExactMeasurements) {
  for (const auto* name : {"grid2", "grid3", "feeder6"}) {
    const auto g = fixtures::grid(name);
    const auto truth = oracle::power_flow(g);
    const auto est = wls_estimate(measure(g, 0.0, 0), g);
    EXPECT_LE((est.x.vm - truth.vm).cwiseAbs().maxCoeff(), 1e-6) << name;
    EXPECT_LE((est.x.va - truth.va).cwiseAbs().maxCoeff(), 1e-6) << name;
    EXPECT_LT(est.objective, 1e-8) << name;
    EXPECT_EQ(est.dof, static_cast<int>(g.sensors().size()) - (2 * g.bus_count() - 1));
  }
}

TEST(Wls, ResidualsMatchObjective) {
  const auto g = fixtures::grid("feeder6");
  const auto z = measure(g, 1.0, 4);
  const auto est = wls_estimate(z, g);
  double j = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = est.residuals(static_cast<Eigen::Index>(i));
    j += r * r / (z[i].sigma * z[i].sigma);
  }
  EXPECT_NEAR(est.objective, j, 1e-9 * std::max(1.0, j));
  EXPECT_EQ(est.sensitivity.rows(), 11);
  EXPECT_EQ(est.sensitivity.cols(), static_cast<Eigen::Index>(z.size()));
}

TEST(Wls, UnobservableSetIsIllConditioned) {
  const auto g = fixtures::grid("grid2");
  const auto z = without(measure(g, 0.0, 0), {"P2", "Q2", "PF12", "QF12"});
  EXPECT_THROW(wls_estimate(z, g), IllConditionedError);
}

TEST(BadData, ChiSquareQuantiles) {
  EXPECT_NEAR(chi_square_threshold(1, 0.01), 6.634897, 1e-5);
  EXPECT_NEAR(chi_square_threshold(10, 0.01), 23.209251, 1e-5);
  EXPECT_NEAR(chi_square_threshold(16, 0.05), 26.296228, 1e-5);
  EXPECT_THROW(chi_square_threshold(0, 0.01), ValidationError);
}

TEST(BadData, TenSigmaErrorIsFlagged) {
  const auto g = fixtures::grid("feeder6");
  for (const auto* target : {"V4", "P3", "QF56"}) {
    auto z = measure(g, 1.0, 42);
    auto it = std::find_if(z.begin(), z.end(), [&](const Measurement& m) { return m.id == target; });
    it->value += 10.0 * it->sigma;
    EXPECT_EQ(detect_bad_data(wls_estimate(z, g)), std::vector<std::string>{target});
  }
}

TEST(BadData, CleanRunsRarelyAlarm) {
  const auto g = fixtures::grid("feeder6");
  int clean = 0;
  for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
    clean += detect_bad_data(wls_estimate(measure(g, 1.0, seed), g)).empty();
  }
  EXPECT_GE(clean, 95);
}

TEST(Pseudo, SubstitutesAtInflatedSigma) {
  const auto g = fixtures::grid("feeder6");
  const auto z = measure(g, 1.0, 3);
  const auto prof = profiles(g);
  const std::vector<SensorSpec> slots{g.sensor("V4"), g.sensor("P4")};
  const SeConfig cfg;
  const auto zp = substitute_pseudo(without(z, {"P4"}), slots, prof, cfg, 7.0);
  EXPECT_EQ(zp.size(), z.size());
  const auto v4 = std::find_if(zp.begin(), zp.end(), [](const Measurement& m) { return m.id == "pseudo:V4"; });
  ASSERT_NE(v4, zp.end());
  EXPECT_EQ(v4->provenance, Provenance::Pseudo);
  EXPECT_EQ(v4->value, prof.at("V4"));
  EXPECT_DOUBLE_EQ(v4->sigma, g.sensor("V4").sigma * 20.0);
  EXPECT_EQ(v4->timestamp, 7.0);
  EXPECT_FALSE(std::any_of(zp.begin(), zp.end(), [](const Measurement& m) { return m.id == "V4"; }));
}

TEST(Pseudo, CapAndMissingProfile) {
  const auto g = fixtures::grid("grid2");
  const auto z = measure(g, 0.0, 0);
  SeConfig cfg;
  cfg.pseudo_cap = 0.5;
  const auto prof = profiles(g);
  const std::vector<SensorSpec> three{g.sensor("V1"), g.sensor("V2"), g.sensor("P2")};
  EXPECT_NO_THROW(substitute_pseudo(z, three, prof, cfg));  // 3 of 6
  const std::vector<SensorSpec> four{g.sensor("V1"), g.sensor("V2"), g.sensor("P2"), g.sensor("Q2")};
  EXPECT_THROW(substitute_pseudo(z, four, prof, cfg), PseudoCapExceeded);
  EXPECT_THROW(substitute_pseudo(z, three, {}, cfg), ValidationError);
  EXPECT_EQ(substitute_pseudo(z, {}, prof, cfg).size(), z.size());
}

TEST(Pseudo, TrustIsCredibilityOnly) {
  const auto mtv = pseudo_trust("pseudo:V1", {0, 1}, SeConfig{});
  EXPECT_EQ(*facet_probability(mtv, Facet::Credibility), 0.6);
  EXPECT_EQ(data_correctness_trust(mtv), 0.6);
  for (Facet f : kAllFacets) {
    if (f != Facet::Credibility) EXPECT_TRUE(mtv.facet(f).empty());
  }
}

TEST(Propagation, DistrustReachesDependentStates) {
  const auto g = fixtures::grid("feeder6");
  const auto z = measure(g, 1.0, 9);
  const auto wls = wls_estimate(z, g);
  std::vector<MultivariateTrustValue> mt;
  for (const auto& m : z) {
    MultivariateTrustValue v(m.id, {0, 1});
    v.put(Facet::Security, {"ids", m.id == "V4" ? 0.2 : 1.0});
    mt.push_back(v);
  }
  const SeConfig cfg;
  const auto vars = propagate_trust_to_states(mt, wls, g, cfg);
  const auto names = state_variable_names(g);
  ASSERT_EQ(vars.size(), names.size());
  const auto vm4 = std::find(names.begin(), names.end(), "vm:B4") - names.begin();
  EXPECT_EQ(data_correctness_trust(vars[vm4]), 0.2);
  // a variable is distrusted only if V4 influences it
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const Eigen::VectorXd row = wls.sensitivity.row(static_cast<Eigen::Index>(j)).cwiseAbs();
    const auto v4 = std::find(wls.ids.begin(), wls.ids.end(), "V4") - wls.ids.begin();
    const bool influenced = row(v4) >= cfg.influence_epsilon * row.maxCoeff();
    EXPECT_EQ(data_correctness_trust(vars[j]), influenced ? 0.2 : 1.0) << names[j];
  }
  EXPECT_EQ(service_trust(vars, cfg), 0.2);
  EXPECT_THROW(propagate_trust_to_states(std::span(mt).first(3), wls, g, cfg), ValidationError);
}

TEST(SeClassifier, DecisionExamples) {
  SeOperands ops;
  ops.rank_z = {11, 11, true};
  ops.t_c_z = 0.9;
  EXPECT_EQ(classify_se_state(ops).state, ServiceState::Normal);

  ops.server_available = false;
  EXPECT_EQ(classify_se_state(ops).state, ServiceState::Failed);
  ops.server_available = true;

  ops.t_c_z = 0.3;
  EXPECT_EQ(classify_se_state(ops).state, ServiceState::Failed);
  ops.rank_zp = RankReport{11, 11, true};
  ops.t_c_zp = 0.6;
  EXPECT_EQ(classify_se_state(ops).state, ServiceState::Limited);
  ops.t_c_zp = 0.49;
  EXPECT_EQ(classify_se_state(ops).state, ServiceState::Failed);

  ops.t_c_z = 0.5;  // threshold is inclusive
  ops.timely = false;
  EXPECT_THROW(classify_se_state(ops), InconsistentEvidence);
}

TEST(SeClassifier, AgreesWithStateFormulas) {
  const std::vector<std::optional<double>> tcs{std::nullopt, 0.2, 0.5, 0.9};
  for (bool server : {false, true}) {
    for (bool rz : {false, true}) {
      for (auto tz : tcs) {
        for (bool rzp : {false, true}) {
          for (auto tzp : tcs) {
            for (bool timely : {false, true}) {
              SeOperands ops;
              ops.server_available = server;
              ops.rank_z = {rz ? 5 : 4, 5, rz};
              ops.t_c_z = tz;
              ops.rank_zp = RankReport{rzp ? 5 : 3, 5, rzp};
              ops.t_c_zp = tzp;
              ops.timely = timely;
              const auto want = oracle::se_equations(server, rz, tz, rzp, tzp, timely, 0.5);
              const int holding = want.failed + want.limited + want.normal;
              if (holding == 0) {
                EXPECT_THROW(classify_se_state(ops), InconsistentEvidence);
                continue;
              }
              ASSERT_EQ(holding, 1);
              const auto got = classify_se_state(ops).state;
              EXPECT_EQ(got == ServiceState::Failed, want.failed);
              EXPECT_EQ(got == ServiceState::Limited, want.limited);
              EXPECT_EQ(got == ServiceState::Normal, want.normal);
            }
          }
        }
      }
    }
  }
}

class ServiceTest : public ::testing::Test {
 protected:
  PowerGrid grid = fixtures::grid("feeder6");
  SeConfig cfg;
  SeInput input() const {
    SeInput in;
    in.delivered = measure(grid, 1.0, 42);
    for (auto& m : in.delivered) m.latency_ms = 20.0;
    in.profiles = profiles(grid);
    in.time = 1.0;
    return in;
  }
  static MultivariateTrustValue distrusted(const std::string& id) {
    MultivariateTrustValue v(id, {0, 1});
    v.put(Facet::Security, {"ids", 0.1});
    return v;
  }
};

TEST_F(ServiceTest, NormalWithTrustedCompleteData) {
  const auto r = run_state_estimation(grid, input(), cfg);
  EXPECT_EQ(r.state, ServiceState::Normal);
  ASSERT_TRUE(r.estimate);
  EXPECT_TRUE(r.used_pseudo.empty());
  EXPECT_EQ(r.t_c, 1.0);
}

TEST_F(ServiceTest, FailedWithoutServer) {
  auto in = input();
  in.server_available = false;
  const auto r = run_state_estimation(grid, in, cfg);
  EXPECT_EQ(r.state, ServiceState::Failed);
  EXPECT_FALSE(r.estimate);
}

TEST_F(ServiceTest, LimitedWhenOneDeviceIsDistrusted) {
  auto in = input();
  for (const auto* id : {"V4", "P4", "Q4"}) in.measurement_trust.emplace(id, distrusted(id));
  const auto r = run_state_estimation(grid, in, cfg);
  EXPECT_EQ(r.state, ServiceState::Limited);
  ASSERT_TRUE(r.t_c);
  EXPECT_GE(*r.t_c, cfg.t_c_threshold);
  EXPECT_LT(*r.operands.t_c_z, cfg.t_c_threshold);
  EXPECT_EQ(r.used_pseudo, (std::vector<std::string>{"pseudo:P4", "pseudo:Q4", "pseudo:V4"}));
}

TEST_F(ServiceTest, LateDataIsTreatedAsMissing) {
  auto in = input();
  for (auto& m : in.delivered) {
    if (m.source == "S6") m.latency_ms = 1500.0;
  }
  const auto r = run_state_estimation(grid, in, cfg);
  auto late = r.late;
  std::sort(late.begin(), late.end());
  EXPECT_EQ(late, (std::vector<std::string>{"P6", "Q6", "V6"}));
  EXPECT_TRUE(r.operands.timely);
  EXPECT_NE(r.state, ServiceState::Failed);
}

TEST_F(ServiceTest, FailedWhenTooMuchIsMissing) {
  auto in = input();
  std::erase_if(in.delivered, [](const Measurement& m) { return m.id != "V1" && m.id != "V2" && m.id != "V3"; });
  const auto r = run_state_estimation(grid, in, cfg);
  EXPECT_FALSE(r.operands.rank_z.solvable);
  EXPECT_EQ(r.state, ServiceState::Failed);
}

TEST_F(ServiceTest, GrossErrorIsSuspectedAndReplaced) {
  auto in = input();
  for (auto& m : in.delivered) {
    if (m.id == "V4") m.value += 0.05;
  }
  const auto r = run_state_estimation(grid, in, cfg);
  EXPECT_EQ(r.suspects, std::vector<std::string>{"V4"});
  EXPECT_EQ(r.state, ServiceState::Limited);
  EXPECT_NE(std::find(r.used_pseudo.begin(), r.used_pseudo.end(), "pseudo:V4"), r.used_pseudo.end());
}
