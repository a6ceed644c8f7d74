#include "cpes/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cpes/error.hpp"
#include "cpes/network.hpp"
#include "cpes/rng.hpp"

namespace cpes {

using nlohmann::json;

std::string_view to_string(BusType t) {
  switch (t) {
    case BusType::Slack: return "slack";
    case BusType::PV: return "PV";
    case BusType::PQ: return "PQ";
  }
  return "?";
}

std::string_view to_string(MeasurementKind k) {
  switch (k) {
    case MeasurementKind::VMag: return "v_mag";
    case MeasurementKind::PInj: return "p_inj";
    case MeasurementKind::QInj: return "q_inj";
    case MeasurementKind::PFlow: return "p_flow";
    case MeasurementKind::QFlow: return "q_flow";
    case MeasurementKind::IMag: return "i_mag";
  }
  return "?";
}

std::string_view to_string(BranchEnd e) { return e == BranchEnd::From ? "from" : "to"; }

std::string_view to_string(Provenance p) { return p == Provenance::Field ? "field" : "pseudo"; }

BusType parse_bus_type(std::string_view s) {
  if (s == "slack") return BusType::Slack;
  if (s == "PV" || s == "pv") return BusType::PV;
  if (s == "PQ" || s == "pq") return BusType::PQ;
  throw ValidationError("unknown bus type '" + std::string(s) + "'");
}

MeasurementKind parse_measurement_kind(std::string_view s) {
  for (auto k : {MeasurementKind::VMag, MeasurementKind::PInj, MeasurementKind::QInj,
                 MeasurementKind::PFlow, MeasurementKind::QFlow, MeasurementKind::IMag}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown measurement kind '" + std::string(s) + "'");
}

BranchEnd parse_branch_end(std::string_view s) {
  if (s == "from") return BranchEnd::From;
  if (s == "to") return BranchEnd::To;
  throw ValidationError("unknown branch end '" + std::string(s) + "'");
}

bool is_branch_kind(MeasurementKind k) {
  return k == MeasurementKind::PFlow || k == MeasurementKind::QFlow || k == MeasurementKind::IMag;
}

PowerGrid::PowerGrid(std::vector<Bus> buses, std::vector<Branch> branches,
                     std::vector<Controllable> controllables, std::vector<SensorSpec> sensors,
                     double base_mva)
    : buses_(std::move(buses)),
      branches_(std::move(branches)),
      controllables_(std::move(controllables)),
      sensors_(std::move(sensors)),
      base_mva_(base_mva) {
  if (buses_.empty()) throw ValidationError("grid has no buses");
  if (!(base_mva_ > 0.0)) throw ValidationError("base_mva must be positive");
  for (int i = 0; i < bus_count(); ++i) {
    const Bus& b = buses_[i];
    if (!bus_idx_.emplace(b.id, i).second) throw ValidationError("duplicate bus id '" + b.id + "'");
    if (!(b.v_nom > 0.0)) throw ValidationError("bus '" + b.id + "' has non-positive v_nom");
    if (b.type == BusType::Slack) {
      if (slack_ >= 0) throw ValidationError("more than one slack bus");
      slack_ = i;
    }
  }
  if (slack_ < 0) throw ValidationError("no slack bus");

  for (int k = 0; k < branch_count(); ++k) {
    Branch& br = branches_[k];
    if (br.id.empty()) br.id = br.from + "-" + br.to;
    if (!bus_idx_.count(br.from) || !bus_idx_.count(br.to)) {
      throw ValidationError("branch '" + br.id + "' references a missing bus");
    }
    if (br.from == br.to) throw ValidationError("branch '" + br.id + "' is a self loop");
    if (!(std::hypot(br.r, br.x) > 0.0)) {
      throw ValidationError("branch '" + br.id + "' has zero impedance");
    }
    if (!branch_idx_.emplace(br.id, k).second) {
      throw ValidationError("duplicate branch id '" + br.id + "'");
    }
  }

  // connectivity
  std::vector<std::vector<int>> adj(buses_.size());
  for (const auto& br : branches_) {
    adj[bus_idx_.at(br.from)].push_back(bus_idx_.at(br.to));
    adj[bus_idx_.at(br.to)].push_back(bus_idx_.at(br.from));
  }
  std::vector<bool> seen(buses_.size(), false);
  std::queue<int> frontier;
  frontier.push(slack_);
  seen[slack_] = true;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        frontier.push(v);
      }
    }
  }
  for (int i = 0; i < bus_count(); ++i) {
    if (!seen[i]) throw ValidationError("grid is not connected: bus '" + buses_[i].id + "' is isolated");
  }

  std::set<std::string> ids;
  for (auto& c : controllables_) {
    if (!ids.insert(c.id).second) throw ValidationError("duplicate controllable id '" + c.id + "'");
    if (!bus_idx_.count(c.bus)) throw ValidationError("controllable '" + c.id + "' references a missing bus");
    if (c.p_min > c.p_max || c.q_min > c.q_max) {
      throw ValidationError("controllable '" + c.id + "' has an empty range");
    }
    if (c.p < c.p_min || c.p > c.p_max || c.q < c.q_min || c.q > c.q_max) {
      throw ValidationError("controllable '" + c.id + "' initial setpoint outside its range");
    }
  }
  ids.clear();
  for (auto& s : sensors_) {
    if (!ids.insert(s.id).second) throw ValidationError("duplicate sensor id '" + s.id + "'");
    if (!(s.sigma > 0.0)) throw ValidationError("sensor '" + s.id + "' must have sigma > 0");
    if (s.device.empty()) s.device = s.id;
    if (is_branch_kind(s.kind) ? !branch_idx_.count(s.location) : !bus_idx_.count(s.location)) {
      throw ValidationError("sensor '" + s.id + "' references unknown location '" + s.location + "'");
    }
  }

  const int n = bus_count();
  ybus_ = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : branches_) {
    const int f = bus_idx_.at(br.from), t = bus_idx_.at(br.to);
    const std::complex<double> y = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> sh(0.0, br.b / 2.0);
    ybus_(f, f) += y + sh;
    ybus_(t, t) += y + sh;
    ybus_(f, t) -= y;
    ybus_(t, f) -= y;
  }
}

int PowerGrid::bus_index(const std::string& id) const {
  auto it = bus_idx_.find(id);
  if (it == bus_idx_.end()) throw UnknownIdError("bus", id);
  return it->second;
}

int PowerGrid::branch_index(const std::string& id) const {
  auto it = branch_idx_.find(id);
  if (it == branch_idx_.end()) throw UnknownIdError("branch", id);
  return it->second;
}

bool PowerGrid::has_controllable(const std::string& id) const {
  return std::any_of(controllables_.begin(), controllables_.end(),
                     [&](const Controllable& c) { return c.id == id; });
}

bool PowerGrid::has_sensor(const std::string& id) const {
  return std::any_of(sensors_.begin(), sensors_.end(), [&](const SensorSpec& s) { return s.id == id; });
}

const Controllable& PowerGrid::controllable(const std::string& id) const {
  for (const auto& c : controllables_) {
    if (c.id == id) return c;
  }
  throw UnknownIdError("controller", id);
}

const SensorSpec& PowerGrid::sensor(const std::string& id) const {
  for (const auto& s : sensors_) {
    if (s.id == id) return s;
  }
  throw UnknownIdError("sensor", id);
}

Channel PowerGrid::resolve(MeasurementKind kind, const std::string& location, BranchEnd end) const {
  if (is_branch_kind(kind)) return {kind, branch_index(location), end};
  return {kind, bus_index(location), BranchEnd::From};
}

std::vector<Injection> PowerGrid::net_injections() const {
  std::vector<Injection> inj(buses_.size());
  for (std::size_t i = 0; i < buses_.size(); ++i) inj[i] = {buses_[i].p, buses_[i].q};
  for (const auto& c : controllables_) {
    auto& e = inj[static_cast<std::size_t>(bus_idx_.at(c.bus))];
    e.p += c.p;
    e.q += c.q;
  }
  return inj;
}

PowerGrid PowerGrid::with_controllables(std::vector<Controllable> c) const {
  return PowerGrid(buses_, branches_, std::move(c), sensors_, base_mva_);
}

PowerGrid PowerGrid::with_bus_injections(const std::map<std::string, Injection>& overrides) const {
  auto buses = buses_;
  for (const auto& [id, inj] : overrides) {
    auto& b = buses[static_cast<std::size_t>(bus_index(id))];
    b.p = inj.p;
    b.q = inj.q;
  }
  return PowerGrid(std::move(buses), branches_, controllables_, sensors_, base_mva_);
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

}  // namespace

PowerGrid load_grid(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("grid document: ") + e.what());
  }
  try {
    std::vector<Bus> buses;
    for (const auto& jb : doc.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<std::string>();
      b.type = parse_bus_type(jb.at("type").get<std::string>());
      b.v_nom = get_or(jb, "v_nom", 1.0);
      b.p = get_or(jb, "p", 0.0);
      b.q = get_or(jb, "q", 0.0);
      buses.push_back(std::move(b));
    }
    std::vector<Branch> branches;
    for (const auto& jb : doc.value("branches", json::array())) {
      Branch br;
      br.from = jb.at("from").get<std::string>();
      br.to = jb.at("to").get<std::string>();
      br.id = get_or<std::string>(jb, "id", "");
      br.r = jb.at("r").get<double>();
      br.x = jb.at("x").get<double>();
      br.b = get_or(jb, "b", 0.0);
      branches.push_back(std::move(br));
    }
    std::vector<Controllable> ctrls;
    for (const auto& jc : doc.value("controllables", json::array())) {
      Controllable c;
      c.id = jc.at("id").get<std::string>();
      c.bus = jc.at("bus").get<std::string>();
      c.p_min = get_or(jc, "p_min", 0.0);
      c.p_max = get_or(jc, "p_max", 0.0);
      c.q_min = get_or(jc, "q_min", 0.0);
      c.q_max = get_or(jc, "q_max", 0.0);
      c.p = get_or(jc, "p", std::clamp(0.0, c.p_min, c.p_max));
      c.q = get_or(jc, "q", std::clamp(0.0, c.q_min, c.q_max));
      ctrls.push_back(std::move(c));
    }
    std::vector<SensorSpec> sensors;
    for (const auto& js : doc.value("sensors", json::array())) {
      SensorSpec s;
      s.id = js.at("id").get<std::string>();
      s.kind = parse_measurement_kind(js.at("kind").get<std::string>());
      s.location = js.at("location").get<std::string>();
      s.end = parse_branch_end(get_or<std::string>(js, "end", "from"));
      s.sigma = js.at("sigma").get<double>();
      s.device = get_or<std::string>(js, "device", "");
      sensors.push_back(std::move(s));
    }
    return PowerGrid(std::move(buses), std::move(branches), std::move(ctrls), std::move(sensors),
                     get_or(doc, "base_mva", 100.0));
  } catch (const json::exception& e) {
    throw ParseError(std::string("grid document: ") + e.what());
  }
}

PowerGrid load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read grid file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_grid(ss.str());
}

BusStateTruth solve_power_flow(const PowerGrid& grid, const std::vector<Injection>& injections,
                               const PowerFlowOptions& opts) {
  const int n = grid.bus_count();
  if (static_cast<int>(injections.size()) != n) {
    throw ValidationError("power flow needs one injection per bus");
  }
  // Unknowns: angle of every non-slack bus, magnitude of every PQ bus.
  std::vector<int> ang, mag;
  for (int i = 0; i < n; ++i) {
    if (i == grid.slack_index()) continue;
    ang.push_back(i);
    if (grid.buses()[i].type == BusType::PQ) mag.push_back(i);
  }
  const int na = static_cast<int>(ang.size()), nm = static_cast<int>(mag.size());

  Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (grid.buses()[i].type != BusType::PQ) vm(i) = grid.buses()[i].v_nom;
  }

  auto mismatch = [&](Eigen::VectorXd& f) {
    Eigen::VectorXd p, q;
    bus_injections(grid, vm, va, p, q);
    f.resize(na + nm);
    for (int r = 0; r < na; ++r) f(r) = injections[ang[r]].p - p(ang[r]);
    for (int r = 0; r < nm; ++r) f(na + r) = injections[mag[r]].q - q(mag[r]);
  };

  Eigen::VectorXd f;
  mismatch(f);
  double worst = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  int it = 0;
  Eigen::VectorXd dt, dv;
  while (worst > opts.tolerance) {
    if (it >= opts.max_iterations || !std::isfinite(worst)) {
      throw ConvergenceError("power flow did not converge after " + std::to_string(it) +
                                 " iterations, max mismatch " + std::to_string(worst),
                             it, worst);
    }
    Eigen::MatrixXd jac(na + nm, na + nm);
    auto fill_row = [&](int row, MeasurementKind kind, int bus) {
      channel_partials(grid, {kind, bus, BranchEnd::From}, vm, va, dt, dv);
      for (int c = 0; c < na; ++c) jac(row, c) = dt(ang[c]);
      for (int c = 0; c < nm; ++c) jac(row, na + c) = dv(mag[c]);
    };
    for (int r = 0; r < na; ++r) fill_row(r, MeasurementKind::PInj, ang[r]);
    for (int r = 0; r < nm; ++r) fill_row(na + r, MeasurementKind::QInj, mag[r]);
    const Eigen::VectorXd dx = jac.fullPivLu().solve(f);
    for (int c = 0; c < na; ++c) va(ang[c]) += dx(c);
    for (int c = 0; c < nm; ++c) vm(mag[c]) += dx(na + c);
    ++it;
    if ((vm.array() <= 0.0).any()) worst = std::numeric_limits<double>::infinity();
    else {
      mismatch(f);
      worst = f.cwiseAbs().maxCoeff();
    }
  }

  BusStateTruth out;
  out.vm = vm;
  out.va = va;
  out.iterations = it;
  out.max_mismatch = worst;
  for (int k = 0; k < grid.branch_count(); ++k) {
    BusStateTruth::Flow fl{};
    fl.p_from = channel_value(grid, {MeasurementKind::PFlow, k, BranchEnd::From}, vm, va);
    fl.q_from = channel_value(grid, {MeasurementKind::QFlow, k, BranchEnd::From}, vm, va);
    fl.p_to = channel_value(grid, {MeasurementKind::PFlow, k, BranchEnd::To}, vm, va);
    fl.q_to = channel_value(grid, {MeasurementKind::QFlow, k, BranchEnd::To}, vm, va);
    out.flows.push_back(fl);
  }
  return out;
}

double NoiseModel::std_for(const SensorSpec& s) const {
  auto it = per_kind.find(s.kind);
  return it != per_kind.end() ? it->second : s.sigma * scale;
}

MeasurementSet generate_measurements(const PowerGrid& grid, const BusStateTruth& truth,
                                     const std::vector<SensorSpec>& sensors, const NoiseModel& noise,
                                     Rng& rng, double timestamp) {
  MeasurementSet out;
  out.reserve(sensors.size());
  for (const auto& s : sensors) {
    const Channel ch = grid.resolve(s.kind, s.location, s.end);
    Measurement m;
    m.id = s.id;
    m.kind = s.kind;
    m.location = s.location;
    m.end = s.end;
    m.value = channel_value(grid, ch, truth.vm, truth.va) + rng.gaussian(noise.std_for(s));
    m.sigma = s.sigma;
    m.timestamp = timestamp;
    m.provenance = Provenance::Field;
    m.source = s.device.empty() ? s.id : s.device;
    out.push_back(std::move(m));
  }
  return out;
}

MeasurementSet generate_measurements(const PowerGrid& grid, const BusStateTruth& truth,
                                     const std::vector<SensorSpec>& sensors, const NoiseModel& noise,
                                     std::uint64_t seed, double timestamp) {
  Rng rng(seed);
  return generate_measurements(grid, truth, sensors, noise, rng, timestamp);
}

std::set<std::string> check_voltage_violations(const PowerGrid& grid, const Eigen::VectorXd& vm,
                                               double band) {
  if (!(band > 0.0 && band <= 0.2)) throw ValidationError("voltage band must lie in (0, 0.2]");
  std::set<std::string> out;
  for (int i = 0; i < grid.bus_count(); ++i) {
    if (std::abs(vm(i) - 1.0) > band + 1e-12) out.insert(grid.buses()[i].id);
  }
  return out;
}

PowerGrid apply_setpoints(const PowerGrid& grid, const std::vector<SetpointCommand>& setpoints) {
  if (setpoints.empty()) return grid;
  auto ctrls = grid.controllables();
  for (const auto& sp : setpoints) {
    auto it = std::find_if(ctrls.begin(), ctrls.end(),
                           [&](const Controllable& c) { return c.id == sp.controller; });
    if (it == ctrls.end()) throw UnknownIdError("controller", sp.controller);
    if (sp.q < it->q_min || sp.q > it->q_max) {
      throw RangeError("setpoint q=" + std::to_string(sp.q) + " outside range of '" + it->id + "'");
    }
    if (sp.p && (*sp.p < it->p_min || *sp.p > it->p_max)) {
      throw RangeError("setpoint p=" + std::to_string(*sp.p) + " outside range of '" + it->id + "'");
    }
    it->q = sp.q;
    if (sp.p) it->p = *sp.p;
  }
  return grid.with_controllables(std::move(ctrls));
}

}  // namespace cpes
