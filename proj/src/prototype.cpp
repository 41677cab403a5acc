#include "opensc/prototype.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "opensc/error.hpp"

namespace opensc {

namespace {

void require_dim(const Vector& v, int dim, const char* what) {
  if (v.size() != dim) {
    throw validation_error(std::string(what) + " has dimension " + std::to_string(v.size()) +
                           ", expected " + std::to_string(dim));
  }
}

void require_square(const Matrix& m, int dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw validation_error(std::string(what) + " must be " + std::to_string(dim) + "x" +
                           std::to_string(dim));
  }
}

template <typename Fn>
void visit_vector(Vector& v, Fn& fn) {
  for (Eigen::Index i = 0; i < v.size(); ++i) fn(v[i]);
}

template <typename Fn>
void visit_matrix(Matrix& m, Fn& fn) {
  for (Eigen::Index i = 0; i < m.size(); ++i) fn(m.data()[i]);
}

}  // namespace

PrototypeSpace PrototypeSpace::random(int dim, int subject_classes, int object_classes,
                                      int predicate_classes, int prototypes, std::uint64_t seed) {
  if (dim <= 0) throw validation_error("dim must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  auto vec = [&] {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    return v;
  };
  auto mat = [&] {
    Matrix m(dim, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };

  PrototypeSpace s;
  s.dim = dim;
  s.subject_map = mat();
  s.object_map = mat();
  s.predicate_map = mat();
  for (int i = 0; i < subject_classes; ++i) s.subject_classes.push_back(vec());
  for (int i = 0; i < object_classes; ++i) s.object_classes.push_back(vec());
  for (int i = 0; i < predicate_classes; ++i) s.predicate_classes.push_back(vec());
  s.subject_offset = vec();
  s.object_offset = vec();
  s.predicate_offset = vec();
  for (int i = 0; i < prototypes; ++i) s.predicate_prototypes.push_back(vec());
  s.temperature = 1.0;
  return s;
}

void PrototypeSpace::validate() const {
  if (dim <= 0) throw validation_error("dim must be positive");
  if (!(temperature > 0)) throw validation_error("temperature must be positive");
  require_square(subject_map, dim, "subject_map");
  require_square(object_map, dim, "object_map");
  require_square(predicate_map, dim, "predicate_map");
  for (const auto& v : subject_classes) require_dim(v, dim, "subject class prototype");
  for (const auto& v : object_classes) require_dim(v, dim, "object class prototype");
  for (const auto& v : predicate_classes) require_dim(v, dim, "predicate class prototype");
  require_dim(subject_offset, dim, "subject_offset");
  require_dim(object_offset, dim, "object_offset");
  require_dim(predicate_offset, dim, "predicate_offset");
  for (const auto& v : predicate_prototypes) require_dim(v, dim, "predicate prototype");
}

void PrototypeSpace::for_each_parameter(const std::function<void(double&)>& fn) {
  visit_matrix(subject_map, fn);
  visit_matrix(object_map, fn);
  visit_matrix(predicate_map, fn);
  for (auto& v : subject_classes) visit_vector(v, fn);
  for (auto& v : object_classes) visit_vector(v, fn);
  for (auto& v : predicate_classes) visit_vector(v, fn);
  visit_vector(subject_offset, fn);
  visit_vector(object_offset, fn);
  visit_vector(predicate_offset, fn);
  for (auto& v : predicate_prototypes) visit_vector(v, fn);
  fn(temperature);
}

std::size_t PrototypeSpace::parameter_count() const {
  std::size_t n = 0;
  const_cast<PrototypeSpace*>(this)->for_each_parameter([&](double&) { ++n; });
  return n;
}

std::vector<double> PrototypeSpace::flatten() const {
  std::vector<double> flat;
  const_cast<PrototypeSpace*>(this)->for_each_parameter([&](double& x) { flat.push_back(x); });
  return flat;
}

void PrototypeSpace::assign(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) throw validation_error("parameter count mismatch");
  std::size_t i = 0;
  for_each_parameter([&](double& x) { x = flat[i++]; });
}

// Snapshot keys: scalar fields and matrices under their own names, per-class
// vectors as "<group>.<index>". Matrices are stored column-major.
std::string save_snapshot(const PrototypeSpace& space) {
  nlohmann::ordered_json j;
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  auto mat = [](const Matrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); };
  j["dim"] = std::vector<double>{static_cast<double>(space.dim)};
  j["temperature"] = std::vector<double>{space.temperature};
  j["subject_map"] = mat(space.subject_map);
  j["object_map"] = mat(space.object_map);
  j["predicate_map"] = mat(space.predicate_map);
  j["subject_offset"] = vec(space.subject_offset);
  j["object_offset"] = vec(space.object_offset);
  j["predicate_offset"] = vec(space.predicate_offset);
  auto group = [&](const char* name, const std::vector<Vector>& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i) j[std::string(name) + "." + std::to_string(i)] = vec(vs[i]);
  };
  group("subject_classes", space.subject_classes);
  group("object_classes", space.object_classes);
  group("predicate_classes", space.predicate_classes);
  group("predicate_prototypes", space.predicate_prototypes);
  return j.dump(1);
}

PrototypeSpace load_snapshot(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(e.what(), "$");
  }
  auto array = [&](const std::string& key) {
    if (!j.contains(key) || !j[key].is_array()) throw parse_error("missing array", key);
    return j[key].get<std::vector<double>>();
  };
  PrototypeSpace s;
  s.dim = static_cast<int>(array("dim").at(0));
  if (s.dim <= 0) throw parse_error("dim must be positive", "dim");
  s.temperature = array("temperature").at(0);
  auto vec = [&](const std::string& key) {
    auto a = array(key);
    if (a.size() != static_cast<std::size_t>(s.dim)) throw parse_error("wrong length", key);
    return Vector(Eigen::Map<Vector>(a.data(), s.dim));
  };
  auto mat = [&](const std::string& key) {
    auto a = array(key);
    if (a.size() != static_cast<std::size_t>(s.dim) * s.dim) throw parse_error("wrong length", key);
    return Matrix(Eigen::Map<Matrix>(a.data(), s.dim, s.dim));
  };
  auto group = [&](const std::string& name) {
    std::vector<Vector> out;
    for (std::size_t i = 0; j.contains(name + "." + std::to_string(i)); ++i) {
      out.push_back(vec(name + "." + std::to_string(i)));
    }
    return out;
  };
  s.subject_map = mat("subject_map");
  s.object_map = mat("object_map");
  s.predicate_map = mat("predicate_map");
  s.subject_offset = vec("subject_offset");
  s.object_offset = vec("object_offset");
  s.predicate_offset = vec("predicate_offset");
  s.subject_classes = group("subject_classes");
  s.object_classes = group("object_classes");
  s.predicate_classes = group("predicate_classes");
  s.predicate_prototypes = group("predicate_prototypes");
  s.validate();
  return s;
}

Vector embed_entity(EntityKind kind, const PrototypeSpace& space, int class_index,
                    const Vector& instance_offset) {
  const Matrix* map = nullptr;
  const std::vector<Vector>* classes = nullptr;
  switch (kind) {
    case EntityKind::kSubject:
      map = &space.subject_map;
      classes = &space.subject_classes;
      break;
    case EntityKind::kObject:
      map = &space.object_map;
      classes = &space.object_classes;
      break;
    case EntityKind::kPredicate:
      map = &space.predicate_map;
      classes = &space.predicate_classes;
      break;
  }
  if (class_index < 0 || static_cast<std::size_t>(class_index) >= classes->size()) {
    throw validation_error("class index out of range");
  }
  require_dim(instance_offset, space.dim, "instance offset");
  require_square(*map, space.dim, "linear map");
  require_dim((*classes)[class_index], space.dim, "class prototype");
  return (*map) * (*classes)[class_index] + instance_offset;
}

Vector match_score(const Vector& s, const Vector& o) {
  if (s.size() != o.size()) throw validation_error("match_score dimension mismatch");
  return (s + o).cwiseMax(0.0) - (s - o).cwiseAbs2();
}

namespace {

// Logits <r, c_j>/tau and their softmax, max-shifted.
struct Softmax {
  Vector logits;
  Vector probs;
  double log_normalizer = 0;
};

Softmax softmax(const Vector& r, const PrototypeSpace& space) {
  if (!(space.temperature > 0)) throw validation_error("temperature must be positive");
  if (space.predicate_prototypes.empty()) throw validation_error("no predicate prototypes");
  const auto n = static_cast<Eigen::Index>(space.predicate_prototypes.size());
  Softmax out;
  out.logits.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    require_dim(space.predicate_prototypes[j], static_cast<int>(r.size()), "predicate prototype");
    out.logits[j] = r.dot(space.predicate_prototypes[j]) / space.temperature;
  }
  const double peak = out.logits.maxCoeff();
  out.probs = (out.logits.array() - peak).exp();
  const double sum = out.probs.sum();
  out.probs /= sum;
  out.log_normalizer = peak + std::log(sum);
  return out;
}

void check_target(int target, const PrototypeSpace& space) {
  if (target < 0 || static_cast<std::size_t>(target) >= space.predicate_prototypes.size()) {
    throw validation_error("target index out of range");
  }
}

// Cosine similarity matrix with row norms R_i = sqrt(sum_j S_ij^2).
struct Cosines {
  Matrix sim;
  Vector row_norm;
  Vector length;
};

Cosines cosines(const PrototypeSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.predicate_prototypes.size());
  Cosines c;
  c.length.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c.length[i] = space.predicate_prototypes[i].norm();
    if (!(c.length[i] > 0)) throw validation_error("zero-norm predicate prototype");
  }
  c.sim.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c.sim(i, j) = i == j ? 1.0
                           : space.predicate_prototypes[i].dot(space.predicate_prototypes[j]) /
                                 (c.length[i] * c.length[j]);
    }
  }
  c.row_norm = c.sim.rowwise().norm();
  return c;
}

}  // namespace

double entity_loss(const Vector& r, int target_index, const PrototypeSpace& space) {
  check_target(target_index, space);
  const auto sm = softmax(r, space);
  return std::max(0.0, sm.log_normalizer - sm.logits[target_index]);
}

double prototype_regularizer(const PrototypeSpace& space) {
  if (space.predicate_prototypes.empty()) return 0.0;
  return cosines(space).row_norm.sum();
}

double total_loss(const PrototypeSpace& space, const std::vector<LossItem>& batch) {
  if (batch.empty()) throw validation_error("empty batch");
  double sum = 0;
  for (const auto& item : batch) sum += entity_loss(item.relation, item.target, space);
  return sum / static_cast<double>(batch.size()) + prototype_regularizer(space);
}

EntityLossGradient entity_loss_gradient(const Vector& r, int target_index,
                                        const PrototypeSpace& space) {
  check_target(target_index, space);
  const auto sm = softmax(r, space);
  const double tau = space.temperature;
  Vector dlogit = sm.probs;
  dlogit[target_index] -= 1.0;

  EntityLossGradient g;
  g.relation = Vector::Zero(r.size());
  g.prototypes.reserve(space.predicate_prototypes.size());
  for (std::size_t j = 0; j < space.predicate_prototypes.size(); ++j) {
    g.relation += dlogit[j] / tau * space.predicate_prototypes[j];
    g.prototypes.push_back(dlogit[j] / tau * r);
    g.temperature -= dlogit[j] * sm.logits[j] / tau;
  }
  return g;
}

std::vector<Vector> prototype_regularizer_gradient(const PrototypeSpace& space) {
  const auto& c = space.predicate_prototypes;
  std::vector<Vector> grad;
  if (c.empty()) return grad;
  const auto cos = cosines(space);
  const auto n = c.size();
  for (std::size_t k = 0; k < n; ++k) {
    Vector g = Vector::Zero(c[k].size());
    const double len_k = cos.length[k];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      const double s = cos.sim(k, j);
      // S_kj appears in row k and (by symmetry) row j.
      const double weight = s * (1.0 / cos.row_norm[k] + 1.0 / cos.row_norm[j]);
      const Vector dsim = c[j] / (cos.length[j] * len_k) - s * c[k] / (len_k * len_k);
      g += weight * dsim;
    }
    grad.push_back(std::move(g));
  }
  return grad;
}

PrototypeSpace total_loss_gradient(const PrototypeSpace& space, const std::vector<LossItem>& batch) {
  if (batch.empty()) throw validation_error("empty batch");
  PrototypeSpace g = space;
  g.for_each_parameter([](double& x) { x = 0; });
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& item : batch) {
    const auto e = entity_loss_gradient(item.relation, item.target, space);
    for (std::size_t j = 0; j < e.prototypes.size(); ++j) {
      g.predicate_prototypes[j] += scale * e.prototypes[j];
    }
    g.temperature += scale * e.temperature;
  }
  const auto reg = prototype_regularizer_gradient(space);
  for (std::size_t j = 0; j < reg.size(); ++j) g.predicate_prototypes[j] += reg[j];
  return g;
}

PrototypeSpace numeric_gradient(const std::function<double(const PrototypeSpace&)>& f,
                                const PrototypeSpace& space, double epsilon) {
  if (!(epsilon > 0)) throw validation_error("epsilon must be positive");
  const auto base = space.flatten();
  std::vector<double> grad(base.size());
  PrototypeSpace probe = space;
  auto flat = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    flat[i] = base[i] + epsilon;
    probe.assign(flat);
    const double up = f(probe);
    flat[i] = base[i] - epsilon;
    probe.assign(flat);
    const double down = f(probe);
    flat[i] = base[i];
    grad[i] = (up - down) / (2 * epsilon);
  }
  PrototypeSpace out = space;
  out.assign(grad);
  return out;
}

}  // namespace opensc
