#include <gtest/gtest.h>

#include <sstream>

#include "../support/fixtures.hpp"
#include "cpes/engine.hpp"
#include "cpes/error.hpp"

using namespace cpes;
using nlohmann::json;

namespace {

std::string timeline_text(const std::vector<std::shared_ptr<const Snapshot>>& snaps) {
  std::ostringstream out;
  export_timeline(snaps, out);
  return out.str();
}

ScenarioEvent command(const json& j) { return parse_event(j, EventOrigin::Operator); }

std::unique_ptr<Simulation> quiescent() { return open_simulation(fixtures::path("grids/feeder6.json"), std::nullopt); }

}  // namespace

TEST(ScenarioParsing, RejectsMalformedDocuments) {
  EXPECT_THROW(parse_scenario("{not json"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"cycles": 0})"), ValidationError);
  EXPECT_THROW(parse_scenario(R"({"unknown_key": 1})"), ValidationError);
  EXPECT_THROW(parse_scenario(R"({"events": [{"t": 1, "kind": "meteor", "target": "R1"}]})"), ValidationError);
  EXPECT_THROW(parse_scenario(R"({"services": {"se": {"t_c_threshold": 1.5}}})"), ValidationError);
  EXPECT_THROW(parse_scenario(R"({"services": {"cvc": {"band": 0.5}}})"), ValidationError);
  EXPECT_THROW(parse_scenario(R"({"events": [{"t": 1, "kind": "latency-add", "target": "R1",
                                               "params": {"ms": "lots"}}]})"),
               ValidationError);
}

TEST(ScenarioParsing, ReadsSettingsAndSortsEvents) {
  const auto sc = parse_scenario(R"({
    "seed": 9, "cycles": 4, "period_s": 2.0,
    "services": {"se": {"t_c_threshold": 0.7}, "cvc": {"untrusted_cap": 2}},
    "events": [
      {"t": 3, "kind": "component-repair", "target": "SRV1"},
      {"t": 1, "kind": "component-fail", "target": "SRV1"},
      {"t": 3, "kind": "latency-add", "target": "RC", "params": {"ms": 10}}
    ]})");
  EXPECT_EQ(sc.seed, 9u);
  EXPECT_EQ(sc.cycles, 4);
  EXPECT_EQ(sc.period_s, 2.0);
  EXPECT_EQ(sc.se.t_c_threshold, 0.7);
  EXPECT_EQ(sc.cvc.untrusted_cap, 2);
  ASSERT_EQ(sc.events.size(), 3u);
  EXPECT_EQ(sc.events[0].kind_name(), "component-fail");
  EXPECT_EQ(sc.events[1].kind_name(), "component-repair");
  EXPECT_EQ(sc.events[2].kind_name(), "latency-add");
}

TEST(ScenarioParsing, DanglingReferencesFailValidation) {
  const auto g = fixtures::grid("feeder6");
  const auto topo = fixtures::topology("feeder6", g);
  EXPECT_THROW(load_scenario(R"({"events": [{"t": 1, "kind": "component-fail", "target": "R9"}]})", g, topo),
               UnknownIdError);
  EXPECT_THROW(load_scenario(R"({"injections": [{"bus": "B9", "p": -0.1, "q": 0}]})", g, topo), UnknownIdError);
  EXPECT_THROW(load_scenario(R"({"services": {"se": {"server": "R1"}}})", g, topo), ValidationError);
  EXPECT_NO_THROW(load_scenario(read_file(fixtures::scenario_path("fdi")), g, topo));
}

TEST(Commands, ValidatedAgainstTheWorld) {
  const auto g = fixtures::grid("feeder6");
  const auto topo = fixtures::topology("feeder6", g);
  auto check = [&](const json& j) { validate_event(command(j), g, topo); };
  EXPECT_NO_THROW(check({{"kind", "repair-component"}, {"target", "SRV1"}}));
  EXPECT_NO_THROW(check({{"kind", "activate-backup-server"}, {"target", "SRV2"}}));
  EXPECT_THROW(check({{"kind", "activate-backup-server"}, {"target", "R1"}}), ValidationError);
  EXPECT_NO_THROW(check({{"kind", "set-controller-mode"}, {"target", "C4"}, {"params", {{"mode", "local"}}}}));
  EXPECT_THROW(check({{"kind", "set-controller-mode"}, {"target", "C4"}, {"params", {{"mode", "manual"}}}}),
               ValidationError);
  EXPECT_THROW(check({{"kind", "set-controller-mode"}, {"target", "R1"}, {"params", {{"mode", "local"}}}}),
               ValidationError);
  EXPECT_THROW(check({{"kind", "reroute-preference"}, {"target", "R1"}, {"params", {{"avoid", "yes"}}}}),
               ValidationError);
  EXPECT_NO_THROW(check({{"kind", "adjust-threshold"}, {"target", "se"},
                         {"params", {{"name", "t_c_threshold"}, {"value", 0.4}}}}));
  EXPECT_THROW(check({{"kind", "adjust-threshold"}, {"target", "cvc"},
                      {"params", {{"name", "band"}, {"value", 3.0}}}}),
               ValidationError);
  EXPECT_THROW(check({{"kind", "component-fail"}, {"target", "ghost"}}), UnknownIdError);
}

TEST(Simulation, RunMatchesRepeatedSteps) {
  auto a = fixtures::sim("fdi");
  auto b = fixtures::sim("fdi");
  std::vector<std::shared_ptr<const Snapshot>> stepped;
  for (int i = 0; i < 8; ++i) stepped.push_back(a->step());
  EXPECT_EQ(timeline_text(stepped), timeline_text(b->run(8)));
}

TEST(Simulation, DeterministicPerSeedAndResettable) {
  auto a = fixtures::sim("quiescent");
  const auto first = timeline_text(a->run(5));
  EXPECT_EQ(timeline_text(fixtures::sim("quiescent")->run(5)), first);
  a->reset();
  EXPECT_EQ(a->next_cycle(), 0);
  EXPECT_FALSE(a->latest());
  EXPECT_EQ(timeline_text(a->run(5)), first);
  auto other = open_simulation(fixtures::path("grids/feeder6.json"), fixtures::scenario_path("quiescent"), 43);
  EXPECT_NE(timeline_text(other->run(5)), first);
}

TEST(Simulation, CyclesAreMonotone) {
  auto s = fixtures::sim("latency");
  const auto snaps = s->run(8);
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    EXPECT_EQ(snaps[i]->cycle, static_cast<int>(i));
    EXPECT_DOUBLE_EQ(snaps[i]->time, static_cast<double>(i));
  }
  EXPECT_EQ(s->latest(), snaps.back());
  EXPECT_THROW(s->run(0), ValidationError);
}

TEST(Simulation, QuiescentIsNormalThroughout) {
  for (const auto& snap : fixtures::sim("quiescent")->run(10)) {
    EXPECT_EQ(snap->se.state, ServiceState::Normal) << snap->cycle;
    EXPECT_EQ(snap->cvc.state, ServiceState::Normal) << snap->cycle;
    EXPECT_EQ(snap->delivered_count, snap->measurement_count);
  }
}

TEST(Simulation, ServerFailureAndRepair) {
  const auto snaps = fixtures::sim("server_fail")->run(8);
  for (const auto& s : snaps) {
    const bool down = s->cycle >= 3 && s->cycle < 6;
    EXPECT_EQ(s->se.state, down ? ServiceState::Failed : ServiceState::Normal) << s->cycle;
    EXPECT_EQ(s->cvc.state, down ? ServiceState::Failed : ServiceState::Normal) << s->cycle;
    EXPECT_EQ(s->cvc.mode, down ? ControlMode::Local : ControlMode::Remote) << s->cycle;
    EXPECT_EQ(s->component_up.at("SRV1"), !down);
  }
}

TEST(Simulation, FalseDataInjectionDegradesToLimited) {
  const auto snaps = fixtures::sim("fdi")->run(8);
  for (const auto& s : snaps) {
    const bool attacked = s->cycle >= 3 && s->cycle < 6;
    EXPECT_EQ(s->se.state, attacked ? ServiceState::Limited : ServiceState::Normal) << s->cycle;
    EXPECT_EQ(s->se.used_pseudo_any(), attacked) << s->cycle;
    if (attacked) EXPECT_LT(*s->se.operands.t_c_z, 0.5);
  }
}

TEST(Simulation, LatencyMakesControlFailUntilCleared) {
  const auto snaps = fixtures::sim("latency")->run(8);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(snaps[c]->se.state, ServiceState::Normal);
    EXPECT_EQ(snaps[c]->cvc.state, ServiceState::Failed);
    EXPECT_EQ(snaps[c]->cvc.mode, ControlMode::Local);
    EXPECT_TRUE(snaps[c]->dispatched.empty());
  }
  EXPECT_EQ(snaps[4]->cvc.state, ServiceState::Normal);
  EXPECT_FALSE(snaps[4]->dispatched.empty());
  // actuation lands in the next cycle's power flow
  EXPECT_GT(snaps[5]->vm_truth.minCoeff(), snaps[4]->vm_truth.minCoeff());
}

TEST(Simulation, SeFailureImpliesControlFailureOnEveryFixture) {
  for (const auto* name : {"quiescent", "server_fail", "fdi", "latency"}) {
    for (const auto& s : fixtures::sim(name)->run(10)) {
      if (s->se.state == ServiceState::Failed) EXPECT_EQ(s->cvc.state, ServiceState::Failed) << name << s->cycle;
    }
  }
}

TEST(OperatorCommands, TakeEffectAtTheNextBoundary) {
  auto s = fixtures::sim("server_fail");
  s->run(4);
  EXPECT_EQ(s->latest()->se.state, ServiceState::Failed);
  const auto ack = s->apply_command(command({{"kind", "repair-component"}, {"target", "SRV1"}}));
  EXPECT_TRUE(ack.accepted);
  EXPECT_EQ(ack.effective_cycle, 4);
  const auto next = s->step();
  EXPECT_EQ(next->cycle, 4);
  EXPECT_EQ(next->se.state, ServiceState::Normal);
  ASSERT_EQ(next->events.size(), 1u);
  EXPECT_EQ(next->events[0].at("origin"), "operator");
}

TEST(OperatorCommands, BackupServerTakesOver) {
  auto s = fixtures::sim("server_fail");
  s->run(4);
  EXPECT_TRUE(s->apply_command(command({{"kind", "activate-backup-server"}, {"target", "SRV2"}})).accepted);
  const auto next = s->step();
  EXPECT_EQ(next->se_server, "SRV2");
  EXPECT_EQ(next->se.state, ServiceState::Normal);
}

TEST(OperatorCommands, MalformedCommandLeavesStateUntouched) {
  auto a = quiescent();
  auto b = quiescent();
  a->step();
  b->step();
  const auto ack = a->apply_command(command({{"kind", "component-fail"}, {"target", "ghost"}}));
  EXPECT_FALSE(ack.accepted);
  EXPECT_FALSE(ack.reason.empty());
  EXPECT_EQ(timeline_text(a->run(3)), timeline_text(b->run(3)));
}

TEST(OperatorCommands, LocalModeControllerIsNotDispatched) {
  auto s = fixtures::sim("latency");
  s->run(4);
  for (const auto* c : {"C3", "C4", "C6"}) {
    ASSERT_TRUE(s->apply_command(command({{"kind", "set-controller-mode"}, {"target", c},
                                          {"params", {{"mode", "local"}}}}))
                    .accepted);
  }
  const auto snap = s->step();
  EXPECT_EQ(snap->local_mode.size(), 3u);
  EXPECT_TRUE(snap->dispatched.empty());
  EXPECT_EQ(snap->cvc.state, ServiceState::Failed);
}

TEST(Timeline, OneLinePerSnapshot) {
  auto s = fixtures::sim("fdi");
  const auto one = timeline_text(s->run(1));
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 1);
  const auto rec = json::parse(one.substr(0, one.size() - 1));
  EXPECT_EQ(rec.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(rec.at("cycle"), 0);
  EXPECT_EQ(rec.at("se").at("evidence").at("seq"), 1);
  EXPECT_EQ(rec.at("cvc").at("evidence").at("seq"), 2);
  EXPECT_TRUE(rec.at("trust").contains("V4"));
  const auto more = timeline_text(s->run(4));
  EXPECT_EQ(std::count(more.begin(), more.end(), '\n'), 4);
}

TEST(OpenSimulation, ReportsBadInputs) {
  EXPECT_THROW(open_simulation(fixtures::path("grids/missing.json"), std::nullopt), Error);
  EXPECT_THROW(open_simulation(fixtures::path("grids/feeder6.json"), std::nullopt, std::nullopt, 0), ValidationError);
  const auto s = open_simulation(fixtures::path("grids/feeder6.json"), std::nullopt, 3, 2);
  EXPECT_EQ(s->scenario().seed, 3u);
  EXPECT_EQ(s->scenario().cycles, 2);
}
