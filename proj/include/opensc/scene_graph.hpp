#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace opensc {

struct BoundingBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;

  bool operator==(const BoundingBox&) const = default;
};

struct ObjectNode {
  int id = 0;
  std::string category;
  BoundingBox box;

  bool operator==(const ObjectNode&) const = default;
};

struct RelationEdge {
  int subject_id = 0;
  int object_id = 0;
  std::string predicate;

  bool operator==(const RelationEdge&) const = default;
};

struct SceneGraph {
  double image_width = 0;
  double image_height = 0;
  std::vector<ObjectNode> objects;
  std::vector<RelationEdge> relations;

  const ObjectNode* find(int id) const;
  bool operator==(const SceneGraph&) const = default;
};

// Closed label vocabulary read from a newline-delimited file. Order is
// preserved; lookups are exact.
class LabelList {
 public:
  LabelList() = default;
  explicit LabelList(std::vector<std::string> labels);

  static LabelList load(const std::string& path);

  bool contains(std::string_view label) const;
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Category-level relation triple (subject category, predicate, object category).
struct CategoryTriple {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const CategoryTriple&) const = default;
};

// Region of one object. The category travels with the region so receivers
// can answer per-category location questions.
struct ObjectLocation {
  std::string category;
  std::string region;

  auto operator<=>(const ObjectLocation&) const = default;
};

// The [number, location, relationship] record derived from a graph and
// carried to the receiver as structured knowledge.
struct StructuredSummary {
  std::map<std::string, int> number;
  std::map<int, ObjectLocation> location;
  std::vector<CategoryTriple> relationship;

  bool operator==(const StructuredSummary&) const = default;
};

// The nine region labels of the 3x3 grid, row-major from top-left.
const std::array<std::string, 9>& region_labels();

struct GraphValidation {
  const LabelList* categories = nullptr;  // null: any category accepted
  const LabelList* predicates = nullptr;
};

// Parses and validates a scene-graph JSON document. Errors carry the JSON
// path of the offending field.
SceneGraph load_scene_graph(std::string_view document, const GraphValidation& labels = {});
SceneGraph load_scene_graph_file(const std::string& path, const GraphValidation& labels = {});
std::string dump_scene_graph(const SceneGraph& g);

// Checks every invariant; throws validation_error on the first violation.
void validate(const SceneGraph& g, const GraphValidation& labels = {});

// "<subject> <predicate> <object>" clauses ordered by (subject_id, object_id),
// joined by "; ", followed by isolated objects as bare categories.
std::string serialize_triples(const SceneGraph& g);

std::string quantize_location(const BoundingBox& box, double width, double height);

StructuredSummary summarize(const SceneGraph& g);

std::string to_json(const StructuredSummary& s);
StructuredSummary summary_from_json(std::string_view text);

}  // namespace opensc
