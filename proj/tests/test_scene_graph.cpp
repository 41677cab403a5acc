#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <random>
#include <set>

#include "opensc/error.hpp"
#include "opensc/scene_graph.hpp"

using namespace opensc;

namespace {

const char* kTwoObjects = R"({"image":{"width":100,"height":100},
  "objects":[{"id":1,"category":"car","bbox":[10,10,20,20]},{"id":2,"category":"road","bbox":[0,50,100,90]}],
  "relations":[{"subject":1,"predicate":"on","object":2}]})";

ObjectNode obj(int id, std::string cat, BoundingBox b) { return {id, std::move(cat), b}; }

std::string error_path(const std::string& doc) {
  try {
    load_scene_graph(doc);
  } catch (const Error& e) {
    return e.path();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("load two objects and one relation") {
  const auto g = load_scene_graph(kTwoObjects);
  CHECK(g.objects.size() == 2);
  CHECK(g.relations.size() == 1);
  CHECK(g.find(2)->category == "road");
  CHECK(g.find(3) == nullptr);
}

TEST_CASE("empty graph is valid") {
  const auto g = load_scene_graph(R"({"image":{"width":10,"height":10},"objects":[],"relations":[]})");
  CHECK(g.objects.empty());
  CHECK(serialize_triples(g).empty());
  const auto s = summarize(g);
  CHECK(s.number.empty());
  CHECK(s.location.empty());
  CHECK(s.relationship.empty());
  CHECK(to_json(s) == R"({"location":{},"number":{},"relationship":[]})");
}

TEST_CASE("load errors carry the offending field") {
  CHECK(error_path(R"({"image":{"width":100,"height":100},
    "objects":[{"id":1,"category":"car","bbox":[10,10,20,20]}],
    "relations":[{"subject":1,"predicate":"on","object":99}]})") == "relations[0].object");
  CHECK(error_path(R"({"image":{"width":100,"height":100},
    "objects":[{"id":1,"category":"car","bbox":[30,10,20,20]}],"relations":[]})") == "objects[0].bbox");
  CHECK(error_path(R"({"image":{"width":100,"height":100},
    "objects":[{"id":1,"category":"car","bbox":[10,10,200,20]}],"relations":[]})") == "objects[0].bbox");
  CHECK(error_path(R"({"image":{"width":100,"height":100},
    "objects":[{"id":1,"category":"car","bbox":[1,1,2,2]},{"id":1,"category":"car","bbox":[1,1,2,2]}],
    "relations":[]})") == "objects[1].id");
  CHECK(error_path(R"({"image":{"width":100,"height":100},
    "objects":[{"id":1,"category":"car","bbox":[1,1,2,2]}],
    "relations":[{"subject":1,"predicate":"on","object":1}]})").rfind("relations[0]", 0) == 0);
  CHECK_THROWS_AS(load_scene_graph("{not json"), Error);
  CHECK(error_path(R"({"image":{"width":0,"height":100},"objects":[],"relations":[]})").rfind("image", 0) == 0);
}

TEST_CASE("label lists restrict categories and predicates") {
  const LabelList cats({"car", "road"});
  const LabelList preds({"on"});
  CHECK_NOTHROW(load_scene_graph(kTwoObjects, {&cats, &preds}));
  const LabelList only_car({"car"});
  CHECK_THROWS_AS(load_scene_graph(kTwoObjects, {&only_car, &preds}), Error);
  const LabelList other({"under"});
  CHECK_THROWS_AS(load_scene_graph(kTwoObjects, {&cats, &other}), Error);
}

TEST_CASE("serialize single triple") {
  CHECK(serialize_triples(load_scene_graph(kTwoObjects)) == "car on road");
}

TEST_CASE("serialize orders clauses by endpoints and appends isolated objects") {
  SceneGraph g;
  g.image_width = g.image_height = 90;
  g.objects = {obj(3, "tree", {0, 0, 10, 10}), obj(1, "car", {0, 0, 10, 10}), obj(2, "road", {0, 0, 10, 10}),
               obj(7, "bench", {0, 0, 10, 10}), obj(5, "sign", {0, 0, 10, 10})};
  g.relations = {{3, 2, "near"}, {1, 3, "behind"}, {1, 2, "on"}};
  // Hand ordering by (subject, object): (1,2) (1,3) (3,2); then isolated 5, 7.
  CHECK(serialize_triples(g) == "car on road; car behind tree; tree near road; sign; bench");
  CHECK(serialize_triples(g) == serialize_triples(g));
}

TEST_CASE("quantize location by thirds") {
  const double w = 300, h = 600;
  CHECK(quantize_location({40, 90, 60, 110}, w, h) == "top-left");     // centre (w/6, h/6)
  CHECK(quantize_location({90, 190, 110, 210}, w, h) == "top-left");   // centre exactly (w/3, h/3)
  CHECK(quantize_location({190, 390, 210, 410}, w, h) == "middle-center");  // (2w/3, 2h/3) boundary
  std::set<std::string> seen;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      const double cx = (col + 0.5) * w / 3, cy = (row + 0.5) * h / 3;
      const auto label = quantize_location({cx - 1, cy - 1, cx + 1, cy + 1}, w, h);
      CHECK(label == region_labels()[row * 3 + col]);
      seen.insert(label);
    }
  }
  CHECK(seen.size() == 9);
  CHECK(region_labels()[0] == "top-left");
  CHECK(region_labels()[8] == "bottom-right");
}

TEST_CASE("quantize location is total over pixel centres") {
  const double w = 37, h = 23;
  std::set<std::string> labels(region_labels().begin(), region_labels().end());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto label = quantize_location({x + 0.0, y + 0.0, x + 1.0, y + 1.0}, w, h);
      CHECK(labels.count(label) == 1);
    }
  }
}

TEST_CASE("summarize counts, regions and triples") {
  SceneGraph g;
  g.image_width = g.image_height = 300;
  g.objects = {obj(1, "car", {10, 10, 20, 20}), obj(2, "car", {250, 250, 260, 260}),
               obj(3, "car", {140, 140, 160, 160}), obj(4, "road", {0, 200, 300, 300}), obj(5, "tree", {250, 0, 300, 50})};
  g.relations = {{1, 4, "on"}, {2, 4, "parked on"}, {5, 4, "near"}, {3, 4, "on"}};
  const auto s = summarize(g);
  CHECK(s.number == std::map<std::string, int>{{"car", 3}, {"road", 1}, {"tree", 1}});
  CHECK(s.location.at(1) == ObjectLocation{"car", "top-left"});
  CHECK(s.location.at(2) == ObjectLocation{"car", "bottom-right"});
  CHECK(s.location.at(3) == ObjectLocation{"car", "middle-center"});
  CHECK(s.location.at(4) == ObjectLocation{"road", "bottom-center"});
  CHECK(s.location.at(5) == ObjectLocation{"tree", "top-right"});
  const std::vector<CategoryTriple> expect = {
      {"car", "on", "road"}, {"car", "parked on", "road"}, {"tree", "near", "road"}, {"car", "on", "road"}};
  CHECK(s.relationship == expect);
  int total = 0;
  for (const auto& [c, n] : s.number) total += n;
  CHECK(total == static_cast<int>(g.objects.size()));
}

TEST_CASE("summary json") {
  StructuredSummary s;
  s.number["car"] = 2;
  CHECK(to_json(s).find(R"("number":{"car":2})") != std::string::npos);
  CHECK_THROWS_AS(summary_from_json(R"({"number":{"car":0},"location":{},"relationship":[]})"), Error);
  CHECK_THROWS_AS(summary_from_json(R"({"number":{},"location":{"1":{"category":"car","region":"north"}},
    "relationship":[]})"), Error);
}

TEST_CASE("summary json round trip on random graphs") {
  std::mt19937 rng(7);
  const std::vector<std::string> cats = {"car", "road", "tree", "parking lot", "traffic light"};
  const std::vector<std::string> preds = {"on", "near", "next to"};
  for (int trial = 0; trial < 200; ++trial) {
    SceneGraph g;
    g.image_width = 640;
    g.image_height = 480;
    const int n = static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      const double x = rng() % 600, y = rng() % 440;
      g.objects.push_back(obj(i + 1, cats[rng() % cats.size()], {x, y, x + 1 + rng() % 40, y + 1 + rng() % 40}));
    }
    for (int i = 0; n > 1 && i < n; ++i) {
      const int a = 1 + static_cast<int>(rng() % n), b = 1 + static_cast<int>(rng() % n);
      if (a != b) g.relations.push_back({a, b, preds[rng() % preds.size()]});
    }
    validate(g);
    const auto s = summarize(g);
    CHECK(summary_from_json(to_json(s)) == s);
    CHECK(load_scene_graph(dump_scene_graph(g)) == g);
  }
}
