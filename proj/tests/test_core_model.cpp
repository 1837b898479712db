#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "presence/core_model.hpp"

using namespace presence;

namespace {

LocationRegistry registry_of(std::initializer_list<const char*> ids) {
  LocationRegistry r;
  for (const char* id : ids) {
    r.add(VirtualLocation(LocationId(id), {VirtualCoordinate(std::string("https://") + id + ".example/")}));
  }
  return r;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("identifiers must be non-empty") {
  CHECK_THROWS_AS(UserId(""), Error);
  CHECK(UserId("a") < UserId("b"));
}

TEST_CASE("virtual coordinates") {
  VirtualCoordinate c("HTTPS://Hotel-X.Example/Rooms?q=1");
  CHECK(c.scheme() == "https");
  CHECK(c.host() == "hotel-x.example");
  CHECK(c.str() == "https://hotel-x.example/Rooms?q=1");
  CHECK(VirtualCoordinate("urn:isbn:0451450523").host().empty());
  CHECK_THROWS_AS(VirtualCoordinate("not a uri"), Error);
  CHECK_THROWS_AS(VirtualCoordinate("http:///path-only"), Error);
}

TEST_CASE("registry keeps coordinate sets disjoint") {
  LocationRegistry r;
  r.add(VirtualLocation(LocationId("A"), {VirtualCoordinate("https://a.example/"),
                                          VirtualCoordinate("https://a.example/menu")}));
  CHECK(code_of([&] { r.add(VirtualLocation(LocationId("A"), {VirtualCoordinate("https://z.example/")})); }) ==
        ErrorCode::conflict);
  CHECK(code_of([&] {
          r.add(VirtualLocation(LocationId("B"), {VirtualCoordinate("https://a.example/menu")}));
        }) == ErrorCode::conflict);
  CHECK(r.size() == 1);
  CHECK(r.owner_of(VirtualCoordinate("https://A.example/menu")) == LocationId("A"));
  CHECK_FALSE(r.owner_of(VirtualCoordinate("https://b.example/")));
  CHECK(code_of([&] { r.at(LocationId("B")); }) == ErrorCode::not_found);
  CHECK_THROWS_AS(VirtualLocation(LocationId("C"), {}), Error);
}

TEST_CASE("add_visit examples") {
  const auto reg = registry_of({"L"});
  const UserId u("u");
  const LocationId l("L");
  VisitLog log;
  add_visit(log, reg, u, l, VisitInterval::make(100, 200), 1000);
  REQUIRE(log.intervals(u, l).size() == 1);
  CHECK(log.intervals(u, l)[0] == VisitInterval{100, 200});

  add_visit(log, reg, u, l, VisitInterval::make(150, 300), 1000);
  REQUIRE(log.intervals(u, l).size() == 1);
  CHECK(log.intervals(u, l)[0] == VisitInterval{100, 300});

  CHECK(code_of([] { (void)VisitInterval::make(300, 250); }) == ErrorCode::invalid_argument);
  CHECK(code_of([&] { add_visit(log, reg, u, LocationId("nope"), VisitInterval{1, 2}, 1000); }) ==
        ErrorCode::not_found);
  CHECK(code_of([&] { add_visit(log, reg, u, l, VisitInterval{900, 1100}, 1000); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("touching intervals merge, separated ones do not") {
  VisitLog log;
  const UserId u("u");
  const LocationId l("L");
  log.insert(u, l, {0, 10});
  log.insert(u, l, {10, 20});
  log.insert(u, l, {25, 30});
  REQUIRE(log.intervals(u, l).size() == 2);
  CHECK(log.intervals(u, l)[0] == VisitInterval{0, 20});
  CHECK(log.latest_end(u) == 30);
  CHECK(log.latest_end(UserId("other")) == 0);
}

TEST_CASE("total_visit_time examples") {
  const auto reg = registry_of({"L"});
  const UserId u("u");
  const LocationId l("L");
  VisitLog log;
  CHECK(total_visit_time(log, reg, u, l) == 0);
  add_visit(log, reg, u, l, {0, 600}, 5000);
  add_visit(log, reg, u, l, {1200, 1500}, 5000);
  CHECK(total_visit_time(log, reg, u, l) == 900);

  VisitLog merged;
  add_visit(merged, reg, u, l, {100, 200}, 5000);
  add_visit(merged, reg, u, l, {150, 300}, 5000);
  CHECK(total_visit_time(merged, reg, u, l) == 200);
}

TEST_CASE("total_visit_time equals the interval union on random inserts") {
  std::mt19937_64 rng(7);
  const auto reg = registry_of({"L"});
  const UserId u("u");
  const LocationId l("L");
  for (int round = 0; round < 200; ++round) {
    VisitLog log;
    std::vector<oracle::Span> spans;
    std::uniform_int_distribution<Epoch> start(0, 5000), len(0, 400);
    const int n = 1 + static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i) {
      const Epoch s = start(rng), e = s + len(rng);
      spans.push_back({s, e});
      add_visit(log, reg, u, l, VisitInterval::make(s, e), 10000);
    }
    CHECK(total_visit_time(log, reg, u, l) == oracle::union_length(spans));
    const auto iv = log.intervals(u, l);
    for (std::size_t i = 1; i < iv.size(); ++i) CHECK(iv[i - 1].end < iv[i].start);
  }
}

TEST_CASE("visits_of lists one user's locations only") {
  VisitLog log;
  log.insert(UserId("a"), LocationId("X"), {0, 1});
  log.insert(UserId("b"), LocationId("Y"), {0, 1});
  log.insert(UserId("b"), LocationId("Z"), {2, 3});
  log.insert(UserId("c"), LocationId("X"), {0, 1});
  const auto v = log.visits_of(UserId("b"));
  REQUIRE(v.size() == 2);
  CHECK(v[0].first == LocationId("Y"));
  CHECK(v[1].first == LocationId("Z"));
  CHECK(log.users().size() == 3);
  CHECK(log.interval_count() == 4);
}

TEST_CASE("open visits are closed at now when materialized") {
  VisitLog log;
  const UserId u("u");
  const LocationId l("L");
  log.open(u, l, 100);
  CHECK(log.intervals(u, l).empty());
  const auto m = log.materialized(160);
  REQUIRE(m.intervals(u, l).size() == 1);
  CHECK(m.intervals(u, l)[0] == VisitInterval{100, 160});
  CHECK(m.open_visits().empty());
  CHECK(log.close_open(u, l, 100));
  CHECK_FALSE(log.close_open(u, l, 100));
}

TEST_CASE("visit log TSV round trip") {
  const auto reg = registry_of({"L", "M"});
  VisitLog log;
  add_visit(log, reg, UserId("u1"), LocationId("L"), {10, 20}, 100);
  add_visit(log, reg, UserId("u2"), LocationId("M"), {30, 90}, 100);
  std::stringstream s;
  write_visit_log(s, log);
  CHECK(read_visit_log(s, reg, 100) == log);

  std::stringstream bad("u1\tL\t50\n");
  CHECK_THROWS_AS(read_visit_log(bad, reg, 100), Error);
}
