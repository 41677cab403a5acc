#include "opensc/scene_graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "opensc/error.hpp"

namespace opensc {

using nlohmann::json;

const ObjectNode* SceneGraph::find(int id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

LabelList::LabelList(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) {
      throw validation_error("duplicate label '" + labels_[i] + "'");
    }
  }
}

LabelList LabelList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open label file", path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) labels.push_back(line);
  }
  return LabelList(std::move(labels));
}

bool LabelList::contains(std::string_view label) const {
  return index_.find(label) != index_.end();
}

const std::array<std::string, 9>& region_labels() {
  static const std::array<std::string, 9> kLabels = {
      "top-left",    "top-center",    "top-right",
      "middle-left", "middle-center", "middle-right",
      "bottom-left", "bottom-center", "bottom-right"};
  return kLabels;
}

namespace {

std::string at(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

template <typename T>
T field(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw parse_error("missing field", path + "." + key);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw parse_error("wrong type", path + "." + key);
  }
}

}  // namespace

void validate(const SceneGraph& g, const GraphValidation& labels) {
  if (!(g.image_width > 0) || !(g.image_height > 0)) {
    throw validation_error("image dimensions must be positive", "image");
  }
  std::set<int> ids;
  for (std::size_t i = 0; i < g.objects.size(); ++i) {
    const auto& o = g.objects[i];
    const std::string path = at("objects", i);
    if (!ids.insert(o.id).second) {
      throw validation_error("duplicate object id " + std::to_string(o.id), path + ".id");
    }
    if (labels.categories && !labels.categories->contains(o.category)) {
      throw validation_error("unknown category '" + o.category + "'", path + ".category");
    }
    const auto& b = o.box;
    if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max) || b.x_min < 0 || b.y_min < 0 ||
        b.x_max > g.image_width || b.y_max > g.image_height) {
      throw validation_error("invalid box", path + ".bbox");
    }
  }
  for (std::size_t i = 0; i < g.relations.size(); ++i) {
    const auto& r = g.relations[i];
    const std::string path = at("relations", i);
    if (!ids.count(r.subject_id)) {
      throw validation_error("dangling endpoint " + std::to_string(r.subject_id), path + ".subject");
    }
    if (!ids.count(r.object_id)) {
      throw validation_error("dangling endpoint " + std::to_string(r.object_id), path + ".object");
    }
    if (r.subject_id == r.object_id) {
      throw validation_error("self relation", path);
    }
    if (labels.predicates && !labels.predicates->contains(r.predicate)) {
      throw validation_error("unknown predicate '" + r.predicate + "'", path + ".predicate");
    }
  }
}

SceneGraph load_scene_graph(std::string_view document, const GraphValidation& labels) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw parse_error(e.what(), "$");
  }
  if (!doc.is_object()) throw parse_error("expected object", "$");

  SceneGraph g;
  if (!doc.contains("image") || !doc["image"].is_object()) throw parse_error("missing field", "image");
  g.image_width = field<double>(doc["image"], "width", "image");
  g.image_height = field<double>(doc["image"], "height", "image");

  const json empty = json::array();
  const json& objects = doc.contains("objects") ? doc["objects"] : empty;
  const json& relations = doc.contains("relations") ? doc["relations"] : empty;
  if (!objects.is_array()) throw parse_error("expected array", "objects");
  if (!relations.is_array()) throw parse_error("expected array", "relations");

  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string path = at("objects", i);
    const json& o = objects[i];
    if (!o.is_object()) throw parse_error("expected object", path);
    ObjectNode node;
    node.id = field<int>(o, "id", path);
    node.category = field<std::string>(o, "category", path);
    const auto bbox = field<std::vector<double>>(o, "bbox", path);
    if (bbox.size() != 4) throw parse_error("bbox needs 4 numbers", path + ".bbox");
    node.box = {bbox[0], bbox[1], bbox[2], bbox[3]};
    g.objects.push_back(std::move(node));
  }
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const std::string path = at("relations", i);
    const json& r = relations[i];
    if (!r.is_object()) throw parse_error("expected object", path);
    g.relations.push_back({field<int>(r, "subject", path), field<int>(r, "object", path),
                           field<std::string>(r, "predicate", path)});
  }
  validate(g, labels);
  return g;
}

SceneGraph load_scene_graph_file(const std::string& path, const GraphValidation& labels) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open scene graph", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scene_graph(ss.str(), labels);
}

std::string dump_scene_graph(const SceneGraph& g) {
  json doc;
  doc["image"] = {{"width", g.image_width}, {"height", g.image_height}};
  doc["objects"] = json::array();
  for (const auto& o : g.objects) {
    doc["objects"].push_back({{"id", o.id},
                              {"category", o.category},
                              {"bbox", {o.box.x_min, o.box.y_min, o.box.x_max, o.box.y_max}}});
  }
  doc["relations"] = json::array();
  for (const auto& r : g.relations) {
    doc["relations"].push_back(
        {{"subject", r.subject_id}, {"predicate", r.predicate}, {"object", r.object_id}});
  }
  return doc.dump();
}

std::string serialize_triples(const SceneGraph& g) {
  std::vector<const RelationEdge*> edges;
  for (const auto& r : g.relations) edges.push_back(&r);
  std::stable_sort(edges.begin(), edges.end(), [](const RelationEdge* a, const RelationEdge* b) {
    return std::tie(a->subject_id, a->object_id) < std::tie(b->subject_id, b->object_id);
  });

  std::vector<std::string> clauses;
  std::set<int> related;
  for (const auto* r : edges) {
    const auto* s = g.find(r->subject_id);
    const auto* o = g.find(r->object_id);
    if (!s || !o) continue;
    clauses.push_back(s->category + " " + r->predicate + " " + o->category);
    related.insert(r->subject_id);
    related.insert(r->object_id);
  }

  std::vector<const ObjectNode*> isolated;
  for (const auto& o : g.objects) {
    if (!related.count(o.id)) isolated.push_back(&o);
  }
  std::stable_sort(isolated.begin(), isolated.end(),
                   [](const ObjectNode* a, const ObjectNode* b) { return a->id < b->id; });
  for (const auto* o : isolated) clauses.push_back(o->category);

  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i) out += "; ";
    out += clauses[i];
  }
  return out;
}

std::string quantize_location(const BoundingBox& box, double width, double height) {
  const double cx = (box.x_min + box.x_max) / 2;
  const double cy = (box.y_min + box.y_max) / 2;
  // Compare 3*c against multiples of the extent so thirds are exact.
  auto third = [](double c, double extent) {
    if (3 * c <= extent) return 0;
    if (3 * c <= 2 * extent) return 1;
    return 2;
  };
  return region_labels()[3 * third(cy, height) + third(cx, width)];
}

StructuredSummary summarize(const SceneGraph& g) {
  StructuredSummary s;
  for (const auto& o : g.objects) {
    ++s.number[o.category];
    s.location[o.id] = {o.category, quantize_location(o.box, g.image_width, g.image_height)};
  }
  for (const auto& r : g.relations) {
    const auto* subj = g.find(r.subject_id);
    const auto* obj = g.find(r.object_id);
    if (subj && obj) s.relationship.push_back({subj->category, r.predicate, obj->category});
  }
  return s;
}

std::string to_json(const StructuredSummary& s) {
  json j;
  j["number"] = json::object();
  for (const auto& [category, count] : s.number) j["number"][category] = count;
  j["location"] = json::object();
  for (const auto& [id, loc] : s.location) {
    j["location"][std::to_string(id)] = {{"category", loc.category}, {"region", loc.region}};
  }
  j["relationship"] = json::array();
  for (const auto& t : s.relationship) j["relationship"].push_back({t.subject, t.predicate, t.object});
  return j.dump();
}

StructuredSummary summary_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw parse_error(e.what(), "$");
  }
  if (!j.is_object()) throw parse_error("expected object", "$");

  StructuredSummary s;
  const auto regions = region_labels();
  if (j.contains("number")) {
    if (!j["number"].is_object()) throw parse_error("expected object", "number");
    for (const auto& [category, count] : j["number"].items()) {
      if (!count.is_number_integer() || count.get<int>() <= 0) {
        throw parse_error("count must be a positive integer", "number." + category);
      }
      s.number[category] = count.get<int>();
    }
  }
  if (j.contains("location")) {
    if (!j["location"].is_object()) throw parse_error("expected object", "location");
    for (const auto& [key, value] : j["location"].items()) {
      int id = 0;
      try {
        std::size_t used = 0;
        id = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw parse_error("object id key must be an integer", "location." + key);
      }
      if (!value.is_object() || !value.contains("category") || !value["category"].is_string() ||
          !value.contains("region") || !value["region"].is_string()) {
        throw parse_error("expected {\"category\", \"region\"}", "location." + key);
      }
      const auto region = value["region"].get<std::string>();
      if (std::find(regions.begin(), regions.end(), region) == regions.end()) {
        throw parse_error("unknown region '" + region + "'", "location." + key + ".region");
      }
      s.location[id] = {value["category"].get<std::string>(), region};
    }
  }
  if (j.contains("relationship")) {
    if (!j["relationship"].is_array()) throw parse_error("expected array", "relationship");
    std::size_t i = 0;
    for (const auto& t : j["relationship"]) {
      if (!t.is_array() || t.size() != 3 || !t[0].is_string() || !t[1].is_string() ||
          !t[2].is_string()) {
        throw parse_error("expected [subject, predicate, object]", at("relationship", i));
      }
      s.relationship.push_back({t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>()});
      ++i;
    }
  }
  return s;
}

}  // namespace opensc
