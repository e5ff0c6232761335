#pragma once

// Scenario files: YAML documents describing a complete two-layer problem.

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>
#include <string>

#include "layercon/problem.hpp"

namespace layercon {

namespace scenario_detail {

inline std::string where(const YAML::Node& n, const std::string& field) {
  const YAML::Mark m = n.Mark();
  std::string s = "field '" + field + "'";
  if (m.line >= 0) s += " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
  return s;
}

[[noreturn]] inline void fail(const YAML::Node& n, const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ScenarioError, where(n, field) + ": " + what);
}

inline YAML::Node child(const YAML::Node& n, const std::string& key, const std::string& path) {
  if (!n.IsMap()) fail(n, path, "expected a mapping");
  YAML::Node c = n[key];
  if (!c) fail(n, path + "." + key, "missing");
  return c;
}

inline double as_double(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(n, field, "expected a number");
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail(n, field, "'" + n.Scalar() + "' is not a number");
  }
}

inline int as_int(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(n, field, "expected an integer");
  try {
    return n.as<int>();
  } catch (const YAML::Exception&) {
    fail(n, field, "'" + n.Scalar() + "' is not an integer");
  }
}

inline bool as_bool(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(n, field, "expected true or false");
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    fail(n, field, "'" + n.Scalar() + "' is not a boolean");
  }
}

inline Vector as_vector(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence()) fail(n, field, "expected a list of numbers");
  Vector v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_double(n[i], field + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix as_matrix(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence() || n.size() == 0) fail(n, field, "expected a non-empty list of rows");
  const std::size_t rows = n.size();
  if (!n[0].IsSequence()) fail(n, field, "expected a list of rows");
  const std::size_t cols = n[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string rf = field + "[" + std::to_string(i) + "]";
    const Vector r = as_vector(n[i], rf);
    if (static_cast<std::size_t>(r.size()) != cols)
      fail(n[i], rf, "row has " + std::to_string(r.size()) + " entries, expected " + std::to_string(cols));
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

inline HPolytope as_polytope(const YAML::Node& n, const std::string& field) {
  if (!n.IsMap()) fail(n, field, "expected a mapping with 'box' or 'halfspaces'");
  try {
    if (n["box"]) {
      const YAML::Node b = n["box"];
      const Vector lo = as_vector(child(b, "lo", field + ".box"), field + ".box.lo");
      const Vector hi = as_vector(child(b, "hi", field + ".box.hi"), field + ".box.hi");
      if (lo.size() != hi.size()) fail(b, field + ".box", "lo and hi differ in length");
      if ((hi - lo).minCoeff() < 0) fail(b, field + ".box", "lo exceeds hi");
      return HPolytope::box(lo, hi);
    }
    if (n["halfspaces"]) {
      const YAML::Node h = n["halfspaces"];
      return HPolytope(as_matrix(child(h, "F", field + ".halfspaces"), field + ".halfspaces.F"),
                       as_vector(child(h, "f", field + ".halfspaces"), field + ".halfspaces.f"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ScenarioError) throw;
    fail(n, field, e.what());
  }
  fail(n, field, "expected 'box' or 'halfspaces'");
}

inline CtSystem as_system(const YAML::Node& n, const std::string& field) {
  Matrix a = as_matrix(child(n, "A", field), field + ".A");
  Matrix b = as_matrix(child(n, "B", field), field + ".B");
  Matrix c = as_matrix(child(n, "C", field), field + ".C");
  try {
    return CtSystem(a, b, c);
  } catch (const Error& e) {
    fail(n, field, e.what());
  }
}

inline Matrix optional_matrix(const YAML::Node& n, const std::string& key, const std::string& path) {
  return n[key] ? as_matrix(n[key], path + "." + key) : Matrix();
}

}  // namespace scenario_detail

inline Problem parse_scenario(const std::string& text) {
  using namespace scenario_detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ScenarioError, std::string("malformed document: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorCode::ScenarioError, "scenario root must be a mapping");

  Problem pb;
  if (root["name"]) pb.name = root["name"].as<std::string>();
  if (root["description"]) pb.description = root["description"].as<std::string>();
  pb.lower = as_system(child(root, "lower_system", ""), "lower_system");
  pb.higher = as_system(child(root, "higher_system", ""), "higher_system");
  if (pb.lower.p() != pb.higher.p()) fail(root["higher_system"], "higher_system.C", "output dimension differs from lower_system.C");

  const YAML::Node rates = child(root, "rates", "");
  try {
    pb.rates = RatePair(as_double(child(rates, "T_L", "rates"), "rates.T_L"), as_double(child(rates, "T_H", "rates"), "rates.T_H"),
                        as_double(child(rates, "T", "rates"), "rates.T"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ScenarioError) throw;
    fail(rates, "rates", e.what());
  }

  const YAML::Node cons = child(root, "constraints", "");
  const YAML::Node ynode = child(cons, "Y", "constraints");
  if (!ynode.IsSequence() || ynode.size() == 0) fail(ynode, "constraints.Y", "expected a non-empty list of pieces");
  std::vector<HPolytope> pieces;
  for (std::size_t i = 0; i < ynode.size(); ++i) {
    const std::string f = "constraints.Y[" + std::to_string(i) + "]";
    pieces.push_back(as_polytope(ynode[i], f));
    if (pieces.back().dim() != pb.lower.p()) fail(ynode[i], f, "piece dimension does not match the output dimension");
  }
  pb.Y = SafeRegion(std::move(pieces));
  pb.U = as_polytope(child(cons, "U", "constraints"), "constraints.U");
  if (pb.U.dim() != pb.lower.m()) fail(cons["U"], "constraints.U", "dimension does not match lower_system.B columns");
  if (cons["Xbar"]) {
    pb.Xbar = as_polytope(cons["Xbar"], "constraints.Xbar");
    if (pb.Xbar->dim() != pb.higher.n()) fail(cons["Xbar"], "constraints.Xbar", "dimension does not match higher_system.A");
  }
  pb.Ubar = as_polytope(child(cons, "Ubar", "constraints"), "constraints.Ubar");
  if (pb.Ubar.dim() != pb.higher.m()) fail(cons["Ubar"], "constraints.Ubar", "dimension does not match higher_system.B columns");

  if (const YAML::Node s = root["synthesis"]) {
    if (s["method"]) {
      try {
        pb.synth.method = parse_synth_method(s["method"].as<std::string>());
      } catch (const Error& e) {
        fail(s["method"], "synthesis.method", e.what());
      }
    }
    if (s["beta"]) pb.synth.beta = as_double(s["beta"], "synthesis.beta");
    if (s["eps_pd"]) pb.synth.sdp.eps_pd = as_double(s["eps_pd"], "synthesis.eps_pd");
    if (s["sdp_mtilde_bound"]) pb.synth.sdp.mtilde_bound = as_double(s["sdp_mtilde_bound"], "synthesis.sdp_mtilde_bound");
    pb.synth.lqr_state_weight = optional_matrix(s, "lqr_state_weight", "synthesis");
    pb.synth.lqr_input_weight = optional_matrix(s, "lqr_input_weight", "synthesis");
    if (s["delta"]) pb.propagation.delta = as_double(s["delta"], "synthesis.delta");
    if (s["u_bar_max"]) pb.propagation.u_bar_max = as_double(s["u_bar_max"], "synthesis.u_bar_max");
    if (s["epsilon"]) pb.propagation.epsilon = as_double(s["epsilon"], "synthesis.epsilon");
    if (s["propagation"]) pb.propagation.propagation = as_bool(s["propagation"], "synthesis.propagation");
    if (!(pb.synth.beta > 0 && pb.synth.beta < 1)) fail(s, "synthesis.beta", "must lie in (0, 1)");
  }

  if (const YAML::Node p = root["planner"]) {
    if (p["horizon"]) pb.planner.horizon = as_int(p["horizon"], "planner.horizon");
    if (pb.planner.horizon < 1) fail(p, "planner.horizon", "must be at least 1");
    pb.planner.state_weight = optional_matrix(p, "state_weight", "planner");
    pb.planner.input_weight = optional_matrix(p, "input_weight", "planner");
    pb.planner.terminal_weight = optional_matrix(p, "terminal_weight", "planner");
    if (p["switch_radius"]) pb.planner.waypoint_switch_radius = as_double(p["switch_radius"], "planner.switch_radius");
  }

  const YAML::Node mission = child(root, "mission", "");
  pb.start = as_vector(child(mission, "start", "mission"), "mission.start");
  if (pb.start.size() != pb.lower.p()) fail(mission["start"], "mission.start", "must be an output-space point");
  if (const YAML::Node wps = mission["waypoints"]) {
    if (!wps.IsSequence()) fail(wps, "mission.waypoints", "expected a list");
    for (std::size_t i = 0; i < wps.size(); ++i) {
      const std::string f = "mission.waypoints[" + std::to_string(i) + "]";
      Vector pt = as_vector(child(wps[i], "point", f), f + ".point");
      if (pt.size() != pb.lower.p()) fail(wps[i], f + ".point", "must be an output-space point");
      const int piece = as_int(child(wps[i], "piece", f), f + ".piece");
      if (piece < 0 || static_cast<std::size_t>(piece) >= pb.Y.pieces.size()) fail(wps[i], f + ".piece", "no such piece");
      pb.mission.waypoints.push_back(pt);
      pb.mission.piece_of_waypoint.push_back(piece);
    }
  }
  const YAML::Node goal = child(mission, "goal", "mission");
  pb.mission.goal_center = as_vector(child(goal, "center", "mission.goal"), "mission.goal.center");
  if (pb.mission.goal_center.size() != pb.lower.p()) fail(goal, "mission.goal.center", "must be an output-space point");
  pb.mission.goal_radius = as_double(child(goal, "radius", "mission.goal"), "mission.goal.radius");
  if (!(pb.mission.goal_radius > 0)) fail(goal, "mission.goal.radius", "must be positive");
  pb.mission.goal_piece = as_int(child(goal, "piece", "mission.goal"), "mission.goal.piece");
  if (pb.mission.goal_piece < 0 || static_cast<std::size_t>(pb.mission.goal_piece) >= pb.Y.pieces.size())
    fail(goal, "mission.goal.piece", "no such piece");

  if (const YAML::Node init = root["init"]) {
    if (init["lifted"]) pb.lifted_init = as_bool(init["lifted"], "init.lifted");
    if (init["x0"]) {
      pb.x0 = as_vector(init["x0"], "init.x0");
      if (pb.x0->size() != pb.lower.n()) fail(init["x0"], "init.x0", "must be a lower-layer state");
    }
    if (!pb.lifted_init && !pb.x0) fail(init, "init", "x0 is required when lifted is false");
  }
  return pb;
}

inline Problem load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ScenarioError, "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::ScenarioError, path + ": " + std::string(e.what()).substr(std::string(to_string(ErrorCode::ScenarioError)).size() + 2));
  }
}

namespace scenario_detail {

inline void emit(YAML::Emitter& out, const Vector& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i);
  out << YAML::EndSeq;
}

inline void emit(YAML::Emitter& out, const Matrix& m) {
  out << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.rows(); ++i) emit(out, Vector(m.row(i).transpose()));
  out << YAML::EndSeq;
}

inline void emit(YAML::Emitter& out, const HPolytope& p) {
  out << YAML::BeginMap << YAML::Key << "halfspaces" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "F" << YAML::Value;
  emit(out, p.F);
  out << YAML::Key << "f" << YAML::Value;
  emit(out, p.f);
  out << YAML::EndMap << YAML::EndMap;
}

inline void emit(YAML::Emitter& out, const CtSystem& s) {
  out << YAML::BeginMap;
  out << YAML::Key << "A" << YAML::Value;
  emit(out, s.A);
  out << YAML::Key << "B" << YAML::Value;
  emit(out, s.B);
  out << YAML::Key << "C" << YAML::Value;
  emit(out, s.C);
  out << YAML::EndMap;
}

inline void emit_optional(YAML::Emitter& out, const char* key, const Matrix& m) {
  if (m.size() == 0) return;
  out << YAML::Key << key << YAML::Value;
  emit(out, m);
}

}  // namespace scenario_detail

inline std::string dump_scenario(const Problem& pb) {
  using namespace scenario_detail;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << pb.name;
  out << YAML::Key << "description" << YAML::Value << pb.description;
  out << YAML::Key << "lower_system" << YAML::Value;
  emit(out, pb.lower);
  out << YAML::Key << "higher_system" << YAML::Value;
  emit(out, pb.higher);
  out << YAML::Key << "rates" << YAML::Value << YAML::BeginMap << YAML::Key << "T_L" << YAML::Value << pb.rates.T_L
      << YAML::Key << "T_H" << YAML::Value << pb.rates.T_H << YAML::Key << "T" << YAML::Value << pb.rates.T << YAML::EndMap;
  out << YAML::Key << "constraints" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "Y" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : pb.Y.pieces) emit(out, p);
  out << YAML::EndSeq;
  out << YAML::Key << "U" << YAML::Value;
  emit(out, pb.U);
  if (pb.Xbar) {
    out << YAML::Key << "Xbar" << YAML::Value;
    emit(out, *pb.Xbar);
  }
  out << YAML::Key << "Ubar" << YAML::Value;
  emit(out, pb.Ubar);
  out << YAML::EndMap;

  out << YAML::Key << "synthesis" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "method" << YAML::Value << to_string(pb.synth.method);
  out << YAML::Key << "beta" << YAML::Value << pb.synth.beta;
  out << YAML::Key << "eps_pd" << YAML::Value << pb.synth.sdp.eps_pd;
  out << YAML::Key << "sdp_mtilde_bound" << YAML::Value << pb.synth.sdp.mtilde_bound;
  emit_optional(out, "lqr_state_weight", pb.synth.lqr_state_weight);
  emit_optional(out, "lqr_input_weight", pb.synth.lqr_input_weight);
  if (pb.propagation.delta) out << YAML::Key << "delta" << YAML::Value << *pb.propagation.delta;
  if (pb.propagation.u_bar_max) out << YAML::Key << "u_bar_max" << YAML::Value << *pb.propagation.u_bar_max;
  if (pb.propagation.epsilon) out << YAML::Key << "epsilon" << YAML::Value << *pb.propagation.epsilon;
  out << YAML::Key << "propagation" << YAML::Value << pb.propagation.propagation;
  out << YAML::EndMap;

  out << YAML::Key << "planner" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "horizon" << YAML::Value << pb.planner.horizon;
  emit_optional(out, "state_weight", pb.planner.state_weight);
  emit_optional(out, "input_weight", pb.planner.input_weight);
  emit_optional(out, "terminal_weight", pb.planner.terminal_weight);
  out << YAML::Key << "switch_radius" << YAML::Value << pb.planner.waypoint_switch_radius;
  out << YAML::EndMap;

  out << YAML::Key << "mission" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "start" << YAML::Value;
  emit(out, pb.start);
  out << YAML::Key << "waypoints" << YAML::Value << YAML::BeginSeq;
  for (std::size_t i = 0; i < pb.mission.waypoints.size(); ++i) {
    out << YAML::BeginMap << YAML::Key << "point" << YAML::Value;
    emit(out, pb.mission.waypoints[i]);
    out << YAML::Key << "piece" << YAML::Value << pb.mission.piece_of_waypoint[i] << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "goal" << YAML::Value << YAML::BeginMap << YAML::Key << "center" << YAML::Value;
  emit(out, pb.mission.goal_center);
  out << YAML::Key << "radius" << YAML::Value << pb.mission.goal_radius << YAML::Key << "piece" << YAML::Value
      << pb.mission.goal_piece << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::Key << "init" << YAML::Value << YAML::BeginMap << YAML::Key << "lifted" << YAML::Value << pb.lifted_init;
  if (pb.x0) {
    out << YAML::Key << "x0" << YAML::Value;
    emit(out, *pb.x0);
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// Equality on every field a scenario file can carry.
inline bool same_scenario(const Problem& a, const Problem& b) {
  auto opt_poly = [](const std::optional<HPolytope>& x, const std::optional<HPolytope>& y) {
    return x.has_value() == y.has_value() && (!x || *x == *y);
  };
  auto opt_vec = [](const std::optional<Vector>& x, const std::optional<Vector>& y) {
    return x.has_value() == y.has_value() && (!x || same(*x, *y));
  };
  return a.name == b.name && a.description == b.description && a.lower == b.lower && a.higher == b.higher &&
         a.rates == b.rates && a.Y == b.Y && a.U == b.U && opt_poly(a.Xbar, b.Xbar) && a.Ubar == b.Ubar &&
         a.synth.method == b.synth.method && a.synth.beta == b.synth.beta && a.synth.sdp.eps_pd == b.synth.sdp.eps_pd &&
         a.synth.sdp.mtilde_bound == b.synth.sdp.mtilde_bound && same(a.synth.lqr_state_weight, b.synth.lqr_state_weight) &&
         same(a.synth.lqr_input_weight, b.synth.lqr_input_weight) && a.propagation.delta == b.propagation.delta &&
         a.propagation.u_bar_max == b.propagation.u_bar_max && a.propagation.epsilon == b.propagation.epsilon &&
         a.propagation.propagation == b.propagation.propagation && a.planner.horizon == b.planner.horizon &&
         same(a.planner.state_weight, b.planner.state_weight) && same(a.planner.input_weight, b.planner.input_weight) &&
         same(a.planner.terminal_weight, b.planner.terminal_weight) &&
         a.planner.waypoint_switch_radius == b.planner.waypoint_switch_radius && a.mission == b.mission &&
         same(a.start, b.start) && a.lifted_init == b.lifted_init && opt_vec(a.x0, b.x0);
}

}  // namespace layercon
