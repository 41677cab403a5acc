#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace opensc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class EntityKind { kSubject, kObject, kPredicate };

// Parameters of the prototype embedding: per-kind linear maps, per-class
// prototypes, default instance offsets, the predicate prototypes c_0..c_N
// used for matching, and the softmax temperature.
struct PrototypeSpace {
  int dim = 0;
  Matrix subject_map;
  Matrix object_map;
  Matrix predicate_map;
  std::vector<Vector> subject_classes;
  std::vector<Vector> object_classes;
  std::vector<Vector> predicate_classes;
  Vector subject_offset;
  Vector object_offset;
  Vector predicate_offset;
  std::vector<Vector> predicate_prototypes;
  double temperature = 1.0;

  // Seeded standard normal entries scaled by 1/sqrt(dim).
  static PrototypeSpace random(int dim, int subject_classes, int object_classes,
                               int predicate_classes, int prototypes, std::uint64_t seed);

  // Throws if shapes disagree with dim or temperature <= 0.
  void validate() const;

  // Visits every scalar parameter in a fixed order.
  void for_each_parameter(const std::function<void(double&)>& fn);
  std::size_t parameter_count() const;

  std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);
};

// Flat key -> array snapshot used for fixtures.
std::string save_snapshot(const PrototypeSpace& space);
PrototypeSpace load_snapshot(const std::string& text);

Vector embed_entity(EntityKind kind, const PrototypeSpace& space, int class_index,
                    const Vector& instance_offset);

// Elementwise ReLU(s + o) - (s - o)^2.
Vector match_score(const Vector& s, const Vector& o);

// Softmax cross-entropy of <r, c_j>/tau against target prototype t.
double entity_loss(const Vector& r, int target_index, const PrototypeSpace& space);

// ||S||_{2,1} of the predicate prototype cosine-similarity matrix.
double prototype_regularizer(const PrototypeSpace& space);

struct LossItem {
  Vector relation;
  int target = 0;
};

double total_loss(const PrototypeSpace& space, const std::vector<LossItem>& batch);

// Analytic gradients. Parameters a loss does not depend on carry zeros.
struct EntityLossGradient {
  Vector relation;
  std::vector<Vector> prototypes;
  double temperature = 0;
};
EntityLossGradient entity_loss_gradient(const Vector& r, int target_index,
                                        const PrototypeSpace& space);
std::vector<Vector> prototype_regularizer_gradient(const PrototypeSpace& space);

// Gradient of total_loss with respect to every parameter, packaged as a
// PrototypeSpace-shaped value (same layout as for_each_parameter).
PrototypeSpace total_loss_gradient(const PrototypeSpace& space, const std::vector<LossItem>& batch);

// Central-difference gradient of f with respect to every parameter of space.
PrototypeSpace numeric_gradient(const std::function<double(const PrototypeSpace&)>& f,
                                const PrototypeSpace& space, double epsilon);

}  // namespace opensc
