#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "presence/gateway/service.hpp"
#include "presence/presence_engine.hpp"

using namespace presence;
using namespace presence::gateway;
using nlohmann::json;

namespace {

constexpr Epoch kNow = 1'700'000'000;

const char* kCsv =
    "location_id,name,lat,lon,url\n"
    "L1,Cathedral,53.2755,-9.0573,https://cathedral.example/\n"
    "L2,\"Square, Eyre\",53.2744,-9.0494,https://www.eyre.example/ https://eyre.example/map\n"
    "L3,Web only,,,https://shop.eyre.example/\n";

PresenceState sample_state() {
  std::istringstream in(kCsv);
  PresenceState s;
  s.registry = std::make_shared<LocationRegistry>(load_locations(in, true).registry);
  s.visits.insert(UserId("ann"), LocationId("L1"), {kNow - 1800, kNow - 600});
  s.visits.insert(UserId("bob"), LocationId("L2"), {kNow - 3000, kNow - 100});
  s.visits.insert(UserId("cat"), LocationId("L3"), {kNow - 900, kNow});
  s.visits.open(UserId("dan"), LocationId("L1"), kNow - 300);
  s.graph.set_user_edge(UserId("ann"), UserId("bob"), 0.8);
  attach_measures(s, ServiceConfig{});
  s.sync_vertices();
  return s;
}

ServiceConfig sample_config() {
  ServiceConfig c;
  c.decay = "window:60";
  return c;
}

std::filesystem::path temp_dir(const char* name) {
  auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("room_for examples") {
  const auto s = sample_state();
  CHECK(room_for(*s.registry, LocationId("L1"), RoomKind::web) == "web-L1");
  CHECK(room_for(*s.registry, LocationId("L1"), RoomKind::geo) == "geo-L1");
  CHECK_THROWS_AS(room_for(*s.registry, LocationId("L3"), RoomKind::geo), Error);
  CHECK_THROWS_AS(room_for(*s.registry, LocationId("L9"), RoomKind::web), Error);
  CHECK(room_for(*s.registry, LocationId("L1"), RoomKind::web) != room_for(*s.registry, LocationId("L1"), RoomKind::geo));
}

TEST_CASE("load_locations") {
  std::istringstream ok(kCsv);
  const auto load = load_locations(ok, true);
  CHECK(load.loaded == 3);
  CHECK(load.registry.at(LocationId("L2")).name == "Square, Eyre");
  CHECK(load.registry.at(LocationId("L2")).coordinates.size() == 2);
  CHECK_FALSE(load.registry.at(LocationId("L3")).point);

  const std::string dup = std::string(kCsv) + "L1,Again,53.0,-9.0,https://again.example/\n";
  std::istringstream strict_in(dup);
  CHECK_THROWS_AS(load_locations(strict_in, true), Error);
  std::istringstream lenient_in(dup);
  const auto lenient = load_locations(lenient_in, false);
  CHECK(lenient.loaded == 3);
  CHECK(lenient.rejected == 1);
  CHECK(lenient.warnings.size() == 1);
  CHECK(lenient.registry.at(LocationId("L1")).name == "Cathedral");

  std::istringstream shared("L1,a,,,https://x.example/\nL2,b,,,https://x.example/\nL3,c,1,,https://y.example/\nL4,d\n");
  const auto bad = load_locations(shared, false);
  CHECK(bad.loaded == 1);
  CHECK(bad.rejected == 3);
}

TEST_CASE("user edges file") {
  PresenceGraph g;
  std::istringstream in("a\tb\t0.5\n\nb\tc\t1\n");
  read_user_edges(in, g);
  CHECK(g.user_edge(UserId("b"), UserId("a")) == 0.5);
  std::istringstream bad("a b 0.5\n");
  CHECK_THROWS_AS(read_user_edges(bad, g), Error);
}

TEST_CASE("config from JSON") {
  const auto c = ServiceConfig::from_json_text(R"({
    "listen": {"host": "0.0.0.0", "port": 9000},
    "decay": "linear:90",
    "awareness": {"top_k": 5, "theta": 0.1, "tie_boost": 0.2},
    "visit": {"r_v": 50, "t_v_min": 120},
    "grid": {"square_m": 250},
    "region": [53.2, -9.1, 53.3, -9.0],
    "measures": [{"name": "domain", "weight": 0.5}, {"name": "shingle", "weight": 0.5}],
    "data": {"locations": "locs.csv"}
  })", "/srv/presence");
  CHECK(c.port == 9000);
  CHECK(c.decay_spec().normalization() == 45.0);
  CHECK(c.awareness.top_k == 5);
  CHECK(c.visit.r_v == 50);
  CHECK(c.visit.gap_max == 5);
  CHECK(c.grid_square_m == 250);
  CHECK(c.region->lat_max == 53.3);
  CHECK(c.measures.size() == 2);
  CHECK(*c.data.locations == std::filesystem::path("/srv/presence/locs.csv"));
  CHECK_THROWS_AS(c.validate(), Error);  // locs.csv is not there

  CHECK_THROWS_AS(ServiceConfig::from_json_text("{"), Error);
  CHECK_THROWS_AS(ServiceConfig::from_json_text(R"({"visit": {"r_v": "far"}})"), Error);
  CHECK_THROWS_AS(ServiceConfig::from_json_text(R"({"decay": "gauss:1"})").validate(), Error);
  CHECK_THROWS_AS(ServiceConfig::from_json_text(R"({"measures": [{"name": "domain", "weight": 0.4}]})").validate(), Error);
  CHECK_NOTHROW(ServiceConfig{}.validate());
}

TEST_CASE("config location falls back to the environment") {
  const auto dir = temp_dir("presence_config_test");
  std::ofstream(dir / "c.json") << R"({"decay": "window:30"})";
  ::setenv("PRESENCED_CONFIG", (dir / "c.json").c_str(), 1);
  const auto path = ServiceConfig::locate(std::nullopt);
  REQUIRE(path);
  CHECK(ServiceConfig::load(*path).decay == "window:30");
  CHECK(*ServiceConfig::locate(std::filesystem::path("x.json")) == "x.json");
  ::unsetenv("PRESENCED_CONFIG");
  CHECK_FALSE(ServiceConfig::locate(std::nullopt));
  std::filesystem::remove_all(dir);
}

TEST_CASE("load_state reads every configured file") {
  const auto dir = temp_dir("presence_state_test");
  std::ofstream(dir / "locations.csv") << kCsv;
  std::ofstream(dir / "visits.tsv") << "ann\tL1\t100\t200\n";
  std::ofstream(dir / "edges.tsv") << "ann\tbob\t0.25\n";
  const auto cfg = ServiceConfig::from_json_text(
      R"({"data": {"locations": "locations.csv", "visits": "visits.tsv", "user_edges": "edges.tsv"}})", dir);
  cfg.validate();
  const auto s = load_state(cfg, 1000);
  CHECK(s.registry->size() == 3);
  CHECK(s.visits.interval_count() == 1);
  CHECK(s.graph.user_edge(UserId("bob"), UserId("ann")) == 0.25);
  CHECK(s.graph.locations().size() == 3);
  CHECK(s.graph.location_edge(LocationId("L2"), LocationId("L3")) == 1.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("snapshot round trips") {
  const PresenceState empty;
  CHECK(same_state(restore(snapshot(empty)), empty));

  auto s = sample_state();
  s.graph = refreshed_graph(s, DecaySpec::exponential(0.05), kNow, 0.0);
  s.refreshed_at = kNow;
  const auto archive = snapshot(s);
  const auto back = restore(archive);
  CHECK(same_state(back, s));
  CHECK(snapshot(back) == archive);
  for (const auto& u : s.graph.users()) {
    for (const auto& [l, w] : s.graph.presence_of(u)) CHECK(back.graph.presence_edge(u, l) == w);
  }

  CHECK_THROWS_AS(restore(archive.substr(0, archive.size() - 5)), Error);
  CHECK_THROWS_AS(restore(archive.substr(0, 10)), Error);
  std::string flipped = archive;
  flipped[flipped.size() - 3] ^= 0x01;
  CHECK_THROWS_AS(restore(flipped), Error);
  std::string v2 = archive;
  v2.replace(0, 19, "PRESENCE-SNAPSHOT 2");
  try {
    restore(v2);
    FAIL("version 2 accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  const auto dir = temp_dir("presence_snapshot_test");
  write_snapshot(dir / "s.snap", s);
  CHECK(same_state(read_snapshot(dir / "s.snap"), s));
  std::filesystem::remove_all(dir);
}

TEST_CASE("service endpoints answer like the library") {
  PresenceService svc(sample_config(), sample_state(), [] { return kNow; });

  auto r = svc.nearest({{"lat", "53.2755"}, {"lon", "-9.0573"}, {"radius", "50"}});
  CHECK(r.status == 200);
  CHECK(r.body["location_id"] == "L1");
  CHECK(svc.nearest({{"lat", "0"}, {"lon", "0"}}).status == 404);
  CHECK(svc.nearest({{"lat", "abc"}, {"lon", "0"}}).status == 400);
  CHECK(svc.nearest({{"lat", "95"}, {"lon", "0"}}).status == 400);

  const auto state = svc.state();
  for (const char* kind : {"simple", "cumulative_multi"}) {
    r = svc.presence({{"user", "bob"}, {"location", "L3"}, {"kind", kind}, {"decay", "exp:0.05"}});
    CHECK(r.status == 200);
    CHECK(r.body["value"].get<double>() ==
          query_presence(*state, UserId("bob"), LocationId("L3"), DecaySpec::exponential(0.05),
                         parse_presence_kind(kind), kNow));
  }
  r = svc.presence({{"user", "dan"}, {"location", "L1"}});
  CHECK(r.body["value"].get<double>() == doctest::Approx(5.0 / 60.0));
  CHECK(svc.presence({{"user", "bob"}}).status == 400);
  CHECK(svc.presence({{"user", "bob"}, {"location", "L9"}}).status == 404);
  CHECK(svc.presence({{"user", "bob"}, {"location", "L1"}, {"kind", "odd"}}).status == 400);
  CHECK(svc.presence({{"user", "bob"}, {"location", "L1"}, {"now", "12"}}).status == 422);

  r = svc.awareness({{"user", "ann"}, {"location", "L3"}});
  REQUIRE(r.status == 200);
  const auto graph = refreshed_graph(*state, DecaySpec::window(60), kNow, 1e-4);
  const auto lib = extended_awareness(graph, LocationId("L3"), UserId("ann"), AwarenessParams{});
  REQUIRE(r.body["results"].size() == lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) {
    CHECK(r.body["results"][i]["user"] == lib[i].user.str());
    CHECK(r.body["results"][i]["score"].get<double>() == lib[i].score);
    CHECK(r.body["results"][i]["via"] == lib[i].via.str());
  }
  CHECK(r.body["results"][0]["user"] == "bob");  // 48 of the last 60 minutes at a sibling domain
  CHECK(svc.awareness({{"user", "ann"}, {"location", "L3"}, {"top_k", "1"}}).body["results"].size() == 1);
  CHECK(svc.awareness({{"user", "ann"}, {"location", "L3"}, {"top_k", "0"}}).status == 400);
  CHECK(svc.awareness({{"user", "ann"}, {"location", "L1"}, {"mode", "colocated"}}).body["results"][0]["user"] == "dan");

  CHECK(svc.rooms({{"location", "L2"}, {"kind", "geo"}}).body["room"] == "geo-L2");
  CHECK(svc.rooms({{"location", "L3"}, {"kind", "geo"}}).status == 422);
  CHECK(svc.rooms({{"location", "L3"}, {"kind", "chat"}}).status == 400);
}

TEST_CASE("visit reports open, close and validate") {
  PresenceService svc(sample_config(), sample_state(), [] { return kNow; });
  auto r = svc.post_visit(R"({"user": "eve", "location_id": "L2", "start": 1699999000})");
  CHECK(r.status == 201);
  CHECK(r.body["state"] == "open");
  CHECK(svc.state()->visits.open_visits().size() == 2);
  r = svc.post_visit(R"({"user": "eve", "location_id": "L2", "start": 1699999000, "end": 1699999600})");
  CHECK(r.status == 201);
  CHECK(svc.state()->visits.open_visits().size() == 1);
  CHECK(svc.state()->visits.intervals(UserId("eve"), LocationId("L2")).size() == 1);
  CHECK(svc.post_visit(R"({"user": "eve", "location_id": "L9", "start": 1})").status == 404);
  CHECK(svc.post_visit(R"({"user": "eve", "location_id": "L2", "start": 9, "end": 3})").status == 400);
  CHECK(svc.post_visit(R"({"user": "eve", "location_id": "L2", "start": 9, "end": 1800000000})").status == 400);
  CHECK(svc.post_visit(R"({"user": "eve"})").status == 400);
  CHECK(svc.post_visit("not json").status == 400);
}

TEST_CASE("readers keep their snapshot while a writer publishes") {
  PresenceService svc(sample_config(), sample_state(), [] { return kNow; });
  const auto before = svc.state();
  svc.post_visit(R"({"user": "fay", "location_id": "L1", "start": 1699990000, "end": 1699990060})");
  CHECK(before->visits.intervals(UserId("fay"), LocationId("L1")).empty());
  CHECK(svc.state()->visits.intervals(UserId("fay"), LocationId("L1")).size() == 1);

  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&svc, t] {
      for (int i = 0; i < 25; ++i) {
        const std::string user = "w" + std::to_string(t) + "_" + std::to_string(i);
        svc.post_visit(R"({"user": ")" + user + R"(", "location_id": "L2", "start": 1699990000, "end": 1699990100})");
        (void)svc.presence({{"user", user}, {"location", "L2"}});
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(svc.state()->visits.users().size() == sample_state().visits.users().size() + 1 + 100);
}

TEST_CASE("HTTP routes") {
  PresenceService svc(sample_config(), sample_state(), [] { return kNow; });
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto res = client.Get("/rooms?location=L1&kind=web");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["room"] == "web-L1");
  res = client.Post("/visits", R"({"user":"gus","location_id":"L1","start":1699999500,"end":1699999800})",
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  res = client.Get("/presence?user=gus&location=L1");
  REQUIRE(res);
  CHECK(json::parse(res->body)["value"].get<double>() == doctest::Approx(5.0 / 60.0));
  res = client.Get("/locations/nearest?lat=0&lon=0&radius=10");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = client.Get("/awareness?user=gus&location=L1");
  REQUIRE(res);
  CHECK(res->status == 200);

  server.stop();
  loop.join();
}
