#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "scrg/spatial_graph.hpp"

using namespace scrg;

namespace {

Entity human(const std::string& id, double x, double y, double m = 10, double n = 10) {
  Entity e;
  e.entity_id = id;
  e.kind = EntityKind::Human;
  e.class_label = "person";
  e.x = x;
  e.y = y;
  e.m = m;
  e.n = n;
  return e;
}

Entity object_at_center(const std::string& id, double cx, double cy) {
  Entity e;
  e.entity_id = id;
  e.kind = EntityKind::Object;
  e.class_label = "box";
  e.m = 5;
  e.n = 5;
  e.x = cx - 2.5;
  e.y = cy - 2.5;
  return e;
}

}  // namespace

TEST_CASE("perception radius") {
  Entity e = human("h", 0, 0, 3, 4);
  CHECK(perception_radius(e, 1.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(perception_radius(e, 1.5) == doctest::Approx(7.5).epsilon(1e-15));
  Entity sq = human("h2", 0, 0, 10, 10);
  CHECK(perception_radius(sq, 1.5) == doctest::Approx(1.5 * std::sqrt(200.0)).epsilon(1e-15));

  Entity bad = human("h3", 0, 0, 0, 4);
  CHECK_THROWS(perception_radius(bad, 1.0));
  CHECK_THROWS(perception_radius(e, 0.0));
  Entity obj = object_at_center("o", 0, 0);
  CHECK_THROWS(perception_radius(obj, 1.0));
}

TEST_CASE("build_graph edge rules") {
  SUBCASE("single human") {
    auto g = build_graph({human("a", 0, 0)}, 1.5);
    CHECK(g.edges_hh.empty());
    CHECK(g.edges_oh.empty());
  }
  SUBCASE("three humans fully connected") {
    auto g = build_graph({human("a", 0, 0), human("b", 100, 0), human("c", 0, 100)}, 1.5);
    CHECK(g.edges_hh.size() == 6);
  }
  SUBCASE("radius predicate, center to center") {
    // human bbox (0,0,10,10): center (5,5), radius 1.5*sqrt(200) ~ 21.21
    auto g = build_graph({human("a", 0, 0), object_at_center("near", 20, 5),
                          object_at_center("far", 40, 5)},
                         1.5);
    REQUIRE(g.edges_oh.size() == 1);
    CHECK(g.objects[static_cast<std::size_t>(g.edges_oh[0].first)].entity_id == "near");
    CHECK(g.objects.size() == 2);  // isolated object retained
  }
  SUBCASE("duplicate ids rejected") {
    CHECK_THROWS_WITH(build_graph({human("a", 0, 0), human("a", 5, 5)}, 1.5),
                      doctest::Contains("duplicate"));
  }
  SUBCASE("zero humans is a valid empty graph") {
    auto g = build_graph({object_at_center("o", 0, 0)}, 1.5);
    CHECK(g.humans.empty());
    CHECK(g.edges_oh.empty());
  }
}

TEST_CASE("graph properties over random scenes") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> pos(0.0, 400.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Entity> entities;
    const int n_humans = 1 + static_cast<int>(rng() % 4);
    const int n_objects = static_cast<int>(rng() % 5);
    for (int i = 0; i < n_humans; ++i) {
      entities.push_back(human("h" + std::to_string(i), pos(rng), pos(rng)));
    }
    for (int i = 0; i < n_objects; ++i) {
      entities.push_back(object_at_center("o" + std::to_string(i), pos(rng), pos(rng)));
    }
    auto g1 = build_graph(entities, 1.0);
    auto g2 = build_graph(entities, 2.0);
    CHECK(g1.edges_hh.size() == static_cast<std::size_t>(n_humans * (n_humans - 1)));
    // enlarging lambda never removes an edge
    for (const auto& e : g1.edges_oh) {
      CHECK(std::count(g2.edges_oh.begin(), g2.edges_oh.end(), e) == 1);
    }
    // translation invariance
    std::vector<Entity> shifted = entities;
    for (auto& e : shifted) {
      e.x += 123.5;
      e.y -= 77.25;
    }
    auto g3 = build_graph(shifted, 1.0);
    CHECK(g3.edges_hh == g1.edges_hh);
    CHECK(g3.edges_oh == g1.edges_oh);
  }
}

TEST_CASE("edge list dump format") {
  auto g = build_graph({human("a", 0, 0), human("b", 1, 1), object_at_center("o1", 5, 5)}, 1.5);
  std::ostringstream out;
  write_edge_list(g, out);
  CHECK(out.str().find("a b hh") != std::string::npos);
  CHECK(out.str().find("o1 a oh") != std::string::npos);
}
