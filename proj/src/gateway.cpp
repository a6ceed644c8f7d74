#include "cpes/gateway.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "cpes/error.hpp"

namespace cpes {

using nlohmann::json;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

// ---- views ---------------------------------------------------------------

namespace {

json remedial_actions_for(const Snapshot& s, const IctTopology& topology) {
  json out = json::array();
  for (const auto& c : topology.components()) {
    const bool up = s.component_up.count(c.id) ? s.component_up.at(c.id) : true;
    if (!up) out.push_back({{"kind", "repair-component"}, {"target", c.id}});
    if (c.kind == ComponentKind::Server && c.id != s.se_server) {
      out.push_back({{"kind", "activate-backup-server"}, {"target", c.id}});
    }
    if (c.kind == ComponentKind::Controller) {
      out.push_back({{"kind", "set-controller-mode"},
                     {"target", c.id},
                     {"params", {{"mode", s.local_mode.count(c.id) ? "remote" : "local"}}}});
    }
  }
  for (const auto& d : s.active_disturbances) {
    if (d.at("kind") == "fdi-bias") out.push_back({{"kind", "clear-fdi"}, {"target", d.at("target")}});
  }
  out.push_back({{"kind", "adjust-threshold"}, {"target", "se"}});
  out.push_back({{"kind", "adjust-threshold"}, {"target", "cvc"}});
  return out;
}

}  // namespace

json api_snapshot_view(const Snapshot& s, const IctTopology& topology) {
  const ClusterConfig cfg;
  json trust = json::object();
  for (const auto& [ooi, mtv] : s.trust) {
    trust[ooi] = {{"facets", facet_summary(mtv, cfg)}, {"t_c", data_correctness_trust(mtv, cfg)}};
  }
  json topo = json::object();
  for (const auto& c : topology.components()) {
    const bool up = s.component_up.count(c.id) ? s.component_up.at(c.id) : true;
    topo[c.id] = {{"kind", std::string(to_string(c.kind))}, {"up", up}};
  }
  json cvc = to_json(s.cvc);
  return {{"schema_version", kSchemaVersion},
          {"cycle", s.cycle},
          {"t", s.time},
          {"se", {{"state", std::string(to_string(s.se.state))},
                  {"t_c", s.se.t_c ? json(*s.se.t_c) : json(nullptr)},
                  {"server", s.se_server},
                  {"used_pseudo", s.se.used_pseudo},
                  {"suspects", s.se.suspects},
                  {"trace", s.se.trace}}},
          {"cvc", {{"state", cvc.at("state")},
                   {"mode", cvc.at("mode")},
                   {"chosen", cvc.at("chosen")},
                   {"trace", s.cvc.evidence.trace}}},
          {"measurements", {{"generated", s.measurement_count}, {"delivered", s.delivered_count}}},
          {"trust", trust},
          {"topology", topo},
          {"local_mode", s.local_mode},
          {"active_disturbances", s.active_disturbances},
          {"remedial_actions", remedial_actions_for(s, topology)},
          {"events", s.events}};
}

json topology_view(const PowerGrid& grid, const IctTopology& topology, const Snapshot* latest) {
  json buses = json::array();
  for (const auto& b : grid.buses()) buses.push_back({{"id", b.id}, {"type", std::string(to_string(b.type))}});
  json branches = json::array();
  for (const auto& br : grid.branches()) branches.push_back({{"id", br.id}, {"from", br.from}, {"to", br.to}});
  json comps = json::array();
  for (const auto& c : topology.components()) {
    bool up = c.up;
    if (latest && latest->component_up.count(c.id)) up = latest->component_up.at(c.id);
    json jc = {{"id", c.id}, {"kind", std::string(to_string(c.kind))}, {"up", up}};
    if (c.location) jc["location"] = *c.location;
    comps.push_back(std::move(jc));
  }
  json links = json::array();
  for (const auto& l : topology.links()) links.push_back({{"a", l.a}, {"b", l.b}, {"latency_ms", l.latency_ms}});
  return {{"schema_version", kSchemaVersion},
          {"cycle", latest ? json(latest->cycle) : json(nullptr)},
          {"grid", {{"buses", buses}, {"branches", branches}}},
          {"ict", {{"components", comps}, {"links", links}, {"control_room", topology.control_room()}}}};
}

std::string_view to_string(SimVerb v) {
  switch (v) {
    case SimVerb::Step: return "step";
    case SimVerb::Run: return "run";
    case SimVerb::Pause: return "pause";
    case SimVerb::Reset: return "reset";
  }
  return "?";
}

std::optional<SimVerb> parse_sim_verb(std::string_view s) {
  for (auto v : {SimVerb::Step, SimVerb::Run, SimVerb::Pause, SimVerb::Reset}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

CommandRequest parse_command_request(const json& j) {
  if (!j.is_object()) throw ValidationError("command must be a JSON object");
  CommandRequest req;
  if (j.contains("request_id")) {
    const auto& id = j.at("request_id");
    req.request_id = id.is_string() ? id.get<std::string>() : id.dump();
  }
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ValidationError("command needs a string 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  std::string type = j.value("type", "");
  if (type.empty()) {
    if (parse_sim_verb(kind)) type = "sim-control";
    else if (parse_disturbance_kind(kind)) type = "disturbance";
    else type = "remedial";
  }
  if (type == "sim-control") {
    auto verb = parse_sim_verb(kind);
    if (!verb) throw ValidationError("unknown sim-control verb '" + kind + "'");
    SimControl c{*verb, std::nullopt};
    const json params = j.value("params", json::object());
    if (params.contains("cycles")) {
      if (!params.at("cycles").is_number_integer() || params.at("cycles").get<int>() < 1) {
        throw ValidationError("params.cycles must be a positive integer");
      }
      c.cycles = params.at("cycles").get<int>();
    }
    req.command = c;
    return req;
  }
  if (type == "disturbance" && !parse_disturbance_kind(kind)) {
    throw ValidationError("'" + kind + "' is not a disturbance kind");
  }
  if (type == "remedial" && !parse_remedial_kind(kind)) {
    throw ValidationError("'" + kind + "' is not a remedial action kind");
  }
  if (type != "disturbance" && type != "remedial") throw ValidationError("unknown command type '" + type + "'");
  json ev = {{"kind", kind}, {"target", j.value("target", json())}, {"params", j.value("params", json::object())}};
  req.command = parse_event(ev, EventOrigin::Operator);
  return req;
}

// ---- input validation -------------------------------------------------------

json to_json(const Finding& f) { return {{"path", f.path}, {"id", f.id}, {"message", f.message}}; }

namespace {

void note(std::vector<Finding>& out, std::string path, const std::exception& e) {
  std::string id;
  if (const auto* u = dynamic_cast<const UnknownIdError*>(&e)) id = u->id();
  out.push_back({std::move(path), std::move(id), e.what()});
}

}  // namespace

std::vector<Finding> validate_inputs(const std::string& grid_path, const std::optional<std::string>& scenario_path) {
  std::vector<Finding> out;
  std::optional<PowerGrid> grid;
  std::optional<IctTopology> topology;
  try {
    const auto doc = read_file(grid_path);
    grid = load_grid(doc);
    topology = load_ict_from_grid_document(doc, *grid);
  } catch (const std::exception& e) {
    note(out, grid_path, e);
  }
  if (!scenario_path) return out;

  json doc;
  try {
    doc = json::parse(read_file(*scenario_path));
  } catch (const std::exception& e) {
    note(out, *scenario_path, e);
    return out;
  }
  if (!doc.is_object()) {
    out.push_back({*scenario_path, "", "scenario must be a JSON object"});
    return out;
  }
  const std::string& sp = *scenario_path;

  // Per-item checks first so one bad entry does not hide the others.
  if (doc.contains("events") && doc.at("events").is_array()) {
    const auto& events = doc.at("events");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const std::string path = sp + "#/events/" + std::to_string(i);
      try {
        auto e = parse_event(events[i], EventOrigin::Scripted);
        if (grid && topology) validate_event(e, *grid, *topology);
      } catch (const std::exception& e) {
        note(out, path, e);
        if (out.back().id.empty() && events[i].is_object()) out.back().id = events[i].value("target", "");
      }
    }
    doc.erase("events");
  }
  if (doc.contains("injections") && doc.at("injections").is_array() && grid) {
    auto& inj = doc.at("injections");
    json kept = json::array();
    for (std::size_t i = 0; i < inj.size(); ++i) {
      const auto bus = inj[i].is_object() ? inj[i].value("bus", "") : "";
      if (!grid->has_bus(bus)) {
        out.push_back({sp + "#/injections/" + std::to_string(i), bus, "unknown bus '" + bus + "'"});
      } else {
        kept.push_back(inj[i]);
      }
    }
    inj = kept;
  }
  if (doc.contains("services") && doc.at("services").is_object()) {
    auto& services = doc.at("services");
    if (services.contains("cvc") && services.at("cvc").is_object() && services.at("cvc").contains("band")) {
      const auto& band = services.at("cvc").at("band");
      if (!band.is_number() || !(band.get<double>() > 0.0 && band.get<double>() <= 0.2)) {
        out.push_back({sp + "#/services/cvc/band", "", "band must lie in (0, 0.2], got " + band.dump()});
        services.at("cvc").erase("band");
      }
    }
    if (services.contains("se") && services.at("se").is_object() && services.at("se").contains("server") &&
        topology) {
      const auto server = services.at("se").value("server", "");
      if (!topology->contains(server) || topology->component(server).kind != ComponentKind::Server) {
        out.push_back({sp + "#/services/se/server", server, "'" + server + "' is not a server component"});
        services.at("se").erase("server");
      }
    }
  }
  try {
    const Scenario sc = parse_scenario(doc.dump());
    if (grid && topology) validate_scenario(sc, *grid, *topology);
  } catch (const std::exception& e) {
    note(out, sp, e);
  }
  return out;
}

// ---- gateway ---------------------------------------------------------------

namespace {

struct Subscriber {
  std::mutex m;
  std::condition_variable cv;
  std::deque<std::string> queue;
  bool closed = false;

  void push(std::string msg) {
    {
      std::lock_guard lock(m);
      queue.push_back(std::move(msg));
    }
    cv.notify_one();
  }
  void close() {
    {
      std::lock_guard lock(m);
      closed = true;
    }
    cv.notify_all();
  }
  std::optional<std::string> pop() {
    std::unique_lock lock(m);
    cv.wait(lock, [&] { return closed || !queue.empty(); });
    if (queue.empty()) return std::nullopt;
    auto msg = std::move(queue.front());
    queue.pop_front();
    return msg;
  }
};

struct Job {
  SimControl control;
  std::promise<json> done;
};

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

}  // namespace

struct Gateway::Impl {
  std::unique_ptr<Simulation> sim;
  const PowerGrid grid;
  const IctTopology topology;  // initial structure; statuses come from snapshots

  // engine owner
  std::thread engine;
  std::mutex m;
  std::condition_variable cv;
  std::deque<std::unique_ptr<Job>> jobs;
  int remaining = 0;
  bool stepping = false;  // a scheduled run cycle is executing
  bool quit = false;
  std::string last_error;

  mutable std::mutex tl_m;
  std::vector<std::shared_ptr<const Snapshot>> history;

  std::mutex sub_m;
  std::vector<std::shared_ptr<Subscriber>> subscribers;

  net::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::thread accept_thread;
  std::atomic<bool> running{false};
  std::uint16_t port = 0;
  std::string address;
  std::mutex conn_m;
  std::vector<std::weak_ptr<tcp::socket>> sockets;
  std::vector<std::thread> connections;
  std::mutex stop_m;
  std::condition_variable stop_cv;
  bool stopped = false;

  explicit Impl(std::unique_ptr<Simulation> s)
      : sim(std::move(s)), grid(sim->grid()), topology(sim->topology()) {
    engine = std::thread([this] { engine_loop(); });
  }

  void publish(const std::shared_ptr<const Snapshot>& snap) {
    {
      std::lock_guard lock(tl_m);
      history.push_back(snap);
    }
    const std::string msg = api_snapshot_view(*snap, topology).dump();
    std::lock_guard lock(sub_m);
    for (auto& s : subscribers) s->push(msg);
  }

  json do_step() {
    try {
      auto snap = sim->step();
      publish(snap);
      return {{"cycle", snap->cycle}};
    } catch (const std::exception& e) {
      std::lock_guard lock(m);
      remaining = 0;
      last_error = e.what();
      return {{"error", e.what()}};
    }
  }

  json handle(const SimControl& c) {
    switch (c.verb) {
      case SimVerb::Step:
        return do_step();
      case SimVerb::Run: {
        std::lock_guard lock(m);
        remaining = c.cycles.value_or(sim->scenario().cycles);
        return {{"scheduled", remaining}};
      }
      case SimVerb::Pause: {
        std::lock_guard lock(m);
        remaining = 0;
        return json::object();
      }
      case SimVerb::Reset: {
        {
          std::lock_guard lock(m);
          remaining = 0;
          last_error.clear();
        }
        sim->reset();
        std::lock_guard lock(tl_m);
        history.clear();
        return json::object();
      }
    }
    return json::object();
  }

  void engine_loop() {
    for (;;) {
      std::unique_lock lock(m);
      cv.wait(lock, [&] { return quit || !jobs.empty() || remaining > 0; });
      if (quit) break;
      if (!jobs.empty()) {
        auto job = std::move(jobs.front());
        jobs.pop_front();
        lock.unlock();
        json out = handle(job->control);
        out["next_cycle"] = sim->next_cycle();
        job->done.set_value(std::move(out));
        continue;
      }
      --remaining;
      stepping = true;
      lock.unlock();
      do_step();
      lock.lock();
      stepping = false;
    }
    std::lock_guard lock(m);
    for (auto& job : jobs) job->done.set_value({{"error", "gateway stopped"}});
    jobs.clear();
  }

  json control(const SimControl& c) {
    auto job = std::make_unique<Job>();
    job->control = c;
    auto fut = job->done.get_future();
    {
      std::lock_guard lock(m);
      if (quit) throw Error("gateway stopped");
      // halt a run in progress without waiting behind queued steps
      if (c.verb == SimVerb::Pause) remaining = 0;
      jobs.push_back(std::move(job));
    }
    cv.notify_all();
    json out = fut.get();
    out["verb"] = std::string(to_string(c.verb));
    return out;
  }

  json status() {
    json out = {{"schema_version", kSchemaVersion}, {"next_cycle", sim->next_cycle()}};
    std::lock_guard lock(m);
    out["running"] = remaining > 0 || stepping || !jobs.empty();
    out["remaining"] = remaining;
    out["last_error"] = last_error.empty() ? json(nullptr) : json(last_error);
    return out;
  }

  std::string timeline() const {
    std::vector<std::shared_ptr<const Snapshot>> copy;
    {
      std::lock_guard lock(tl_m);
      copy = history;
    }
    std::ostringstream out;
    for (const auto& s : copy) out << timeline_record(*s).dump() << '\n';
    return out.str();
  }

  // ---- HTTP ----

  static Response reply(const Request& req, http::status status, const json& body) {
    Response res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    json b = body;
    if (b.is_object() && !b.contains("schema_version")) b["schema_version"] = kSchemaVersion;
    res.body() = b.dump();
    res.prepare_payload();
    return res;
  }

  static Response error(const Request& req, http::status status, const std::string& reason) {
    return reply(req, status, {{"error", reason}});
  }

  Response route(const Request& req) {
    const std::string target(req.target());
    const auto path = target.substr(0, target.find('?'));
    const bool get = req.method() == http::verb::get;
    const bool post = req.method() == http::verb::post;

    if (req.method() == http::verb::options) {
      Response res{http::status::no_content, req.version()};
      res.set(http::field::access_control_allow_origin, "*");
      res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
      res.set(http::field::access_control_allow_headers, "Content-Type");
      res.keep_alive(req.keep_alive());
      res.prepare_payload();
      return res;
    }
    if (path == "/topology") {
      if (!get) return error(req, http::status::method_not_allowed, "use GET");
      auto latest = sim->latest();
      return reply(req, http::status::ok, topology_view(grid, topology, latest.get()));
    }
    if (path == "/state") {
      if (!get) return error(req, http::status::method_not_allowed, "use GET");
      auto latest = sim->latest();
      if (!latest) return error(req, http::status::conflict, "no snapshot yet");
      return reply(req, http::status::ok, api_snapshot_view(*latest, topology));
    }
    if (path == "/status") {
      if (!get) return error(req, http::status::method_not_allowed, "use GET");
      return reply(req, http::status::ok, status());
    }
    if (path == "/timeline") {
      if (!get) return error(req, http::status::method_not_allowed, "use GET");
      Response res{http::status::ok, req.version()};
      res.set(http::field::content_type, "application/x-ndjson");
      res.set(http::field::access_control_allow_origin, "*");
      res.keep_alive(req.keep_alive());
      res.body() = timeline();
      res.prepare_payload();
      return res;
    }
    if (path.rfind("/trust/", 0) == 0) {
      if (!get) return error(req, http::status::method_not_allowed, "use GET");
      const auto ooi = path.substr(7);
      auto latest = sim->latest();
      if (!latest) return error(req, http::status::conflict, "no snapshot yet");
      auto it = latest->trust.find(ooi);
      if (it == latest->trust.end()) return error(req, http::status::not_found, "unknown ooi '" + ooi + "'");
      const ClusterConfig cfg;
      return reply(req, http::status::ok,
                   {{"cycle", latest->cycle},
                    {"ooi", ooi},
                    {"facets", facet_summary(it->second, cfg)},
                    {"t_c", data_correctness_trust(it->second, cfg)},
                    {"values", to_json(it->second)}});
    }
    if (path == "/commands") {
      if (!post) return error(req, http::status::method_not_allowed, "use POST");
      CommandRequest cmd;
      try {
        cmd = parse_command_request(json::parse(req.body()));
      } catch (const json::exception& e) {
        return reply(req, http::status::bad_request, {{"accepted", false}, {"reason", e.what()}});
      } catch (const Error& e) {
        return reply(req, http::status::bad_request, {{"accepted", false}, {"reason", e.what()}});
      }
      if (auto* c = std::get_if<SimControl>(&cmd.command)) {
        json out = control(*c);
        out["accepted"] = true;
        out["request_id"] = cmd.request_id;
        return reply(req, http::status::ok, out);
      }
      const auto ack = sim->apply_command(std::get<ScenarioEvent>(cmd.command));
      if (!ack.accepted) {
        return reply(req, http::status::bad_request,
                     {{"accepted", false}, {"reason", ack.reason}, {"request_id", cmd.request_id}});
      }
      return reply(req, http::status::ok,
                   {{"accepted", true}, {"effective_cycle", ack.effective_cycle}, {"request_id", cmd.request_id}});
    }
    if (path.rfind("/sim/", 0) == 0) {
      if (!post) return error(req, http::status::method_not_allowed, "use POST");
      auto verb = parse_sim_verb(path.substr(5));
      if (!verb) return error(req, http::status::not_found, "unknown sim verb");
      SimControl c{*verb, std::nullopt};
      if (!req.body().empty()) {
        try {
          const auto body = json::parse(req.body());
          if (body.contains("cycles")) {
            if (!body.at("cycles").is_number_integer() || body.at("cycles").get<int>() < 1) {
              return error(req, http::status::bad_request, "cycles must be a positive integer");
            }
            c.cycles = body.at("cycles").get<int>();
          }
        } catch (const json::exception& e) {
          return error(req, http::status::bad_request, e.what());
        }
      }
      return reply(req, http::status::ok, control(c));
    }
    return error(req, http::status::not_found, "no route for " + path);
  }

  void serve_ws(const std::shared_ptr<tcp::socket>& sock, Request req) {
    auto sub = std::make_shared<Subscriber>();
    {
      std::lock_guard lock(sub_m);
      subscribers.push_back(sub);
    }
    websocket::stream<tcp::socket&> ws(*sock);
    beast::error_code ec;
    ws.accept(req, ec);
    while (!ec) {
      auto msg = sub->pop();
      if (!msg) break;
      ws.text(true);
      ws.write(net::buffer(*msg), ec);
    }
    if (!ec) ws.close(websocket::close_code::going_away, ec);
    std::lock_guard lock(sub_m);
    std::erase(subscribers, sub);
  }

  void serve_connection(std::shared_ptr<tcp::socket> sock) {
    beast::flat_buffer buffer;
    beast::error_code ec;
    for (;;) {
      Request req;
      http::read(*sock, buffer, req, ec);
      if (ec) break;
      if (websocket::is_upgrade(req)) {
        if (req.target() == "/stream") {
          serve_ws(sock, std::move(req));
          return;
        }
        http::write(*sock, error(req, http::status::not_found, "websocket endpoint is /stream"), ec);
        break;
      }
      Response res;
      try {
        res = route(req);
      } catch (const std::exception& e) {
        res = error(req, http::status::internal_server_error, e.what());
      }
      http::write(*sock, res, ec);
      if (ec || !res.keep_alive()) break;
    }
    sock->shutdown(tcp::socket::shutdown_send, ec);
  }

  void accept_loop() {
    while (running) {
      auto sock = std::make_shared<tcp::socket>(ioc);
      beast::error_code ec;
      acceptor->accept(*sock, ec);
      if (!running) break;
      if (ec) continue;
      std::lock_guard lock(conn_m);
      std::erase_if(sockets, [](const auto& w) { return w.expired(); });
      sockets.push_back(sock);
      connections.emplace_back([this, sock] { serve_connection(sock); });
    }
  }

  std::uint16_t start(std::uint16_t p, const std::string& addr) {
    beast::error_code ec;
    const auto ip = net::ip::make_address(addr, ec);
    if (ec) throw ValidationError("bad listen address '" + addr + "'");
    tcp::endpoint ep{ip, p};
    acceptor.emplace(ioc);
    acceptor->open(ep.protocol(), ec);
    if (!ec) acceptor->set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor->bind(ep, ec);
    if (!ec) acceptor->listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      acceptor.reset();
      throw Error("cannot listen on " + addr + ":" + std::to_string(p) + ": " + ec.message());
    }
    port = acceptor->local_endpoint().port();
    address = addr;
    running = true;
    accept_thread = std::thread([this] { accept_loop(); });
    return port;
  }

  void stop() {
    if (running.exchange(false)) {
      // Wake the blocking accept with a throwaway connection.
      beast::error_code ec;
      tcp::socket poke(ioc);
      poke.connect({net::ip::make_address(address), port}, ec);
      accept_thread.join();
      acceptor->close(ec);
      {
        std::lock_guard lock(sub_m);
        for (auto& s : subscribers) s->close();
      }
      std::vector<std::thread> threads;
      {
        std::lock_guard lock(conn_m);
        for (auto& w : sockets) {
          if (auto s = w.lock()) s->shutdown(tcp::socket::shutdown_both, ec);
        }
        threads.swap(connections);
      }
      for (auto& t : threads) t.join();
    }
    {
      std::lock_guard lock(m);
      quit = true;
    }
    cv.notify_all();
    if (engine.joinable()) engine.join();
    {
      std::lock_guard lock(stop_m);
      stopped = true;
    }
    stop_cv.notify_all();
  }
};

Gateway::Gateway(std::unique_ptr<Simulation> sim) : impl_(std::make_unique<Impl>(std::move(sim))) {}

Gateway::~Gateway() { stop(); }

std::uint16_t Gateway::start(std::uint16_t port, const std::string& address) { return impl_->start(port, address); }

void Gateway::stop() { impl_->stop(); }

void Gateway::wait() {
  std::unique_lock lock(impl_->stop_m);
  impl_->stop_cv.wait(lock, [&] { return impl_->stopped; });
}

json Gateway::control(const SimControl& c) { return impl_->control(c); }

std::string Gateway::timeline() const { return impl_->timeline(); }

}  // namespace cpes
