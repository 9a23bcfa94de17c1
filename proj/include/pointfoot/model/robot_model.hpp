#pragma once

#include "pointfoot/core.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pointfoot::model {

enum class BaseMode { Planar, Spatial };
enum class JointKind { Prismatic, Revolute };

/// One rigid body attached to its parent through a single-dof joint. The
/// floating base is expanded into a chain of massless virtual bodies
/// (x, z, pitch in planar mode; x, y, z, yaw, pitch, roll in spatial mode),
/// the last of which carries the torso inertia.
struct Body {
  std::string name;
  int parent = -1;
  JointKind joint = JointKind::Revolute;
  Vec3 axis = Vec3::UnitY();
  Vec3 joint_offset = Vec3::Zero();
  Mat3 joint_rotation = Mat3::Identity();
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
  bool actuated = false;
  double rotor_inertia = 0.0;
  bool virtual_base = false;
};

/// Declared point on a body that may touch the environment.
struct ContactPoint {
  std::string name;
  int body = -1;
  Vec3 offset = Vec3::Zero();
};

/// Description of a link + joint pair used to build a model.
struct LinkSpec {
  std::string name;
  std::string parent;
  Vec3 axis = Vec3::UnitY();
  Vec3 origin = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
  double rotor_inertia = 0.0;
};

struct BaseSpec {
  std::string name = "torso";
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
};

class RobotModel {
 public:
  RobotModel() = default;

  RobotModel(std::string name, BaseMode mode, const BaseSpec& base, const std::vector<LinkSpec>& links,
             const std::vector<std::pair<std::string, std::pair<std::string, Vec3>>>& contacts)
      : name_(std::move(name)), mode_(mode) {
    build_base(base);
    for (const auto& l : links) add_link(l);
    for (const auto& [cname, where] : contacts) {
      contacts_.push_back(ContactPoint{cname, body_index(where.first), where.second});
    }
    finalize();
  }

  const std::string& name() const { return name_; }
  BaseMode mode() const { return mode_; }
  bool planar() const { return mode_ == BaseMode::Planar; }
  int dofs() const { return static_cast<int>(bodies_.size()); }
  int base_dofs() const { return planar() ? 3 : 6; }
  int actuated_dofs() const { return dofs() - base_dofs(); }
  /// Rows of a point Jacobian: (x, z) in planar mode, (x, y, z) in spatial mode.
  int point_rows() const { return planar() ? 2 : 3; }
  const std::vector<Body>& bodies() const { return bodies_; }
  const Body& body(int i) const { return bodies_.at(static_cast<size_t>(i)); }
  int base_body() const { return base_dofs() - 1; }
  double total_mass() const { return total_mass_; }
  const std::vector<ContactPoint>& contact_points() const { return contacts_; }
  const std::vector<int>& actuated_indices() const { return actuated_; }
  const std::vector<bool>& actuated_selector() const { return selector_; }

  /// Under-actuation matrix U selecting actuated coordinates.
  const MatX& selection() const { return U_; }

  /// World-axis components kept by planar point Jacobians.
  std::vector<int> point_axes() const { return planar() ? std::vector<int>{0, 2} : std::vector<int>{0, 1, 2}; }

  int body_index(const std::string& n) const {
    for (size_t i = 0; i < bodies_.size(); ++i)
      if (bodies_[i].name == n) return static_cast<int>(i);
    throw ModelError("unknown body '" + n + "'");
  }

  const ContactPoint& contact(const std::string& n) const {
    for (const auto& c : contacts_)
      if (c.name == n) return c;
    throw ModelError("unknown contact point '" + n + "'");
  }

  /// Generalized coordinate index of a named base coordinate
  /// (x, y, z, yaw, pitch, roll).
  int base_coordinate(const std::string& n) const {
    const std::vector<std::string> names =
        planar() ? std::vector<std::string>{"x", "z", "pitch"}
                 : std::vector<std::string>{"x", "y", "z", "yaw", "pitch", "roll"};
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<int>(i);
    throw ModelError("base coordinate '" + n + "' not present in this model mode");
  }

  void check_state(const VecX& q, const VecX& qdot) const {
    if (q.size() != dofs() || qdot.size() != dofs()) {
      throw ModelError("state dimension mismatch: model has " + std::to_string(dofs()) + " dofs, got q=" +
                       std::to_string(q.size()) + " qdot=" + std::to_string(qdot.size()));
    }
  }

 private:
  void push_virtual(const std::string& n, JointKind k, const Vec3& axis) {
    Body b;
    b.name = n;
    b.parent = bodies_.empty() ? -1 : static_cast<int>(bodies_.size()) - 1;
    b.joint = k;
    b.axis = axis;
    b.virtual_base = true;
    bodies_.push_back(b);
  }

  void build_base(const BaseSpec& base) {
    if (planar()) {
      push_virtual("base_x", JointKind::Prismatic, Vec3::UnitX());
      push_virtual("base_z", JointKind::Prismatic, Vec3::UnitZ());
      push_virtual(base.name, JointKind::Revolute, Vec3::UnitY());
    } else {
      push_virtual("base_x", JointKind::Prismatic, Vec3::UnitX());
      push_virtual("base_y", JointKind::Prismatic, Vec3::UnitY());
      push_virtual("base_z", JointKind::Prismatic, Vec3::UnitZ());
      push_virtual("base_yaw", JointKind::Revolute, Vec3::UnitZ());
      push_virtual("base_pitch", JointKind::Revolute, Vec3::UnitY());
      push_virtual(base.name, JointKind::Revolute, Vec3::UnitX());
    }
    Body& b = bodies_.back();
    b.mass = base.mass;
    b.com = base.com;
    b.inertia = base.inertia;
    b.virtual_base = true;
    validate_inertial(b.name, b.mass, b.inertia);
  }

  void add_link(const LinkSpec& l) {
    Body b;
    b.name = l.name;
    b.parent = body_index(l.parent);
    b.joint = JointKind::Revolute;
    if (std::abs(l.axis.norm() - 1.0) > 1e-9) throw ModelError("joint axis of '" + l.name + "' is not a unit vector");
    b.axis = l.axis;
    b.joint_offset = l.origin;
    b.joint_rotation = l.rotation;
    b.mass = l.mass;
    b.com = l.com;
    b.inertia = l.inertia;
    b.actuated = true;
    b.rotor_inertia = l.rotor_inertia;
    validate_inertial(l.name, l.mass, l.inertia);
    if (l.rotor_inertia < 0) throw ModelError("negative rotor inertia on '" + l.name + "'");
    bodies_.push_back(b);
  }

  static void validate_inertial(const std::string& n, double mass, const Mat3& inertia) {
    if (!(mass > 0.0)) throw ModelError("link '" + n + "' must have positive mass");
    if ((inertia - inertia.transpose()).norm() > 1e-12) throw ModelError("inertia of '" + n + "' is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
    if (es.eigenvalues().minCoeff() <= 0.0) throw ModelError("inertia of '" + n + "' is not positive definite");
  }

  void finalize() {
    total_mass_ = 0.0;
    selector_.assign(bodies_.size(), false);
    actuated_.clear();
    for (size_t i = 0; i < bodies_.size(); ++i) {
      total_mass_ += bodies_[i].mass;
      if (bodies_[i].actuated) {
        selector_[i] = true;
        actuated_.push_back(static_cast<int>(i));
      }
    }
    if (static_cast<int>(actuated_.size()) != dofs() - base_dofs()) {
      throw ModelError("actuated selector must cover exactly n_dofs - " + std::to_string(base_dofs()) +
                       " coordinates");
    }
    U_ = MatX::Zero(static_cast<Eigen::Index>(actuated_.size()), dofs());
    for (size_t k = 0; k < actuated_.size(); ++k) U_(static_cast<Eigen::Index>(k), actuated_[k]) = 1.0;
  }

  std::string name_;
  BaseMode mode_ = BaseMode::Planar;
  std::vector<Body> bodies_;
  std::vector<ContactPoint> contacts_;
  std::vector<int> actuated_;
  std::vector<bool> selector_;
  MatX U_;
  double total_mass_ = 0.0;
};

// ---------------------------------------------------------------------------
// Robot description files (JSON).

namespace detail {

inline Vec3 read_vec3(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ModelError(path + ": expected an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

/// Accepts either a 3-vector (principal moments) or a full 3x3 matrix.
inline Mat3 read_inertia(const nlohmann::json& j, const std::string& path) {
  if (j.is_array() && j.size() == 3 && j[0].is_number()) return read_vec3(j, path).asDiagonal();
  if (j.is_array() && j.size() == 3) {
    Mat3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = read_vec3(j[static_cast<size_t>(r)], path).transpose();
    return m;
  }
  throw ModelError(path + ": inertia must be [ixx, iyy, izz] or a 3x3 matrix");
}

}  // namespace detail

inline constexpr int kModelFileVersion = 1;

inline RobotModel model_from_json(const nlohmann::json& doc) {
  using detail::read_inertia;
  using detail::read_vec3;
  if (!doc.contains("version")) throw ModelError("robot description: missing mandatory 'version' field");
  if (doc.at("version").get<int>() != kModelFileVersion)
    throw ModelError("robot description: unsupported version " + doc.at("version").dump());
  const std::string mode_s = doc.at("mode").get<std::string>();
  BaseMode mode;
  if (mode_s == "planar")
    mode = BaseMode::Planar;
  else if (mode_s == "spatial")
    mode = BaseMode::Spatial;
  else
    throw ModelError("robot description: mode must be 'planar' or 'spatial'");

  BaseSpec base;
  const auto& jb = doc.at("base");
  base.name = jb.value("name", "torso");
  base.mass = jb.at("mass").get<double>();
  base.com = read_vec3(jb.at("com"), "base.com");
  base.inertia = read_inertia(jb.at("inertia"), "base.inertia");

  std::vector<LinkSpec> links;
  size_t idx = 0;
  for (const auto& jl : doc.at("links")) {
    const std::string p = "links[" + std::to_string(idx++) + "]";
    LinkSpec l;
    l.name = jl.at("name").get<std::string>();
    l.parent = jl.at("parent").get<std::string>();
    const std::string type = jl.value("joint", "revolute");
    if (type != "revolute") throw ModelError(p + ".joint: only revolute leg joints are supported");
    l.axis = read_vec3(jl.at("axis"), p + ".axis");
    l.origin = read_vec3(jl.at("origin"), p + ".origin");
    if (jl.contains("rpy")) {
      const Vec3 rpy = read_vec3(jl.at("rpy"), p + ".rpy");
      l.rotation = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                    Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                       .toRotationMatrix();
    }
    l.mass = jl.at("mass").get<double>();
    l.com = read_vec3(jl.at("com"), p + ".com");
    l.inertia = read_inertia(jl.at("inertia"), p + ".inertia");
    l.rotor_inertia = jl.value("rotor_inertia", 0.0);
    links.push_back(l);
  }

  std::vector<std::pair<std::string, std::pair<std::string, Vec3>>> contacts;
  if (doc.contains("contacts")) {
    for (const auto& [cname, jc] : doc.at("contacts").items()) {
      contacts.push_back({cname, {jc.at("link").get<std::string>(), read_vec3(jc.at("point"), "contacts." + cname)}});
    }
  }
  return RobotModel(doc.value("name", "robot"), mode, base, links, contacts);
}

inline RobotModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open robot description '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("robot description '" + path.string() + "': " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace pointfoot::model
