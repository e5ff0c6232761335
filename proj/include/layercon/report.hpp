#pragma once

// Result files: trace and sweep CSVs, synthesis and planning-set reports. Every file is
// written to a temporary sibling first and renamed into place.

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "layercon/sim.hpp"

namespace layercon {

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::InvalidArgument, "write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string trace_csv_header(const TraceLog& log) {
  const TraceRecord& r = log.records.front();
  std::ostringstream h;
  h << "t";
  auto cols = [&](const char* name, Eigen::Index k) {
    for (Eigen::Index i = 0; i < k; ++i) h << ',' << name << i;
  };
  cols("xbar", r.xbar.size());
  cols("ubar", r.ubar.size());
  cols("x", r.x.size());
  cols("u", r.u.size());
  cols("ybar", r.ybar.size());
  cols("y", r.y.size());
  h << ",V,dist,eps_ok,y_in_Y,u_in_U";
  return h.str();
}

inline std::string trace_csv(const TraceLog& log) {
  std::ostringstream s;
  s << std::setprecision(17);
  if (log.records.empty()) return "t,V,dist,eps_ok,y_in_Y,u_in_U\n";
  s << trace_csv_header(log) << '\n';
  auto vec = [&](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) s << ',' << v(i);
  };
  for (const auto& r : log.records) {
    s << r.t;
    vec(r.xbar);
    vec(r.ubar);
    vec(r.x);
    vec(r.u);
    vec(r.ybar);
    vec(r.y);
    s << ',' << r.V << ',' << r.dist << ',' << int(r.eps_ok) << ',' << int(r.y_in_Y) << ',' << int(r.u_in_U) << '\n';
  }
  return s.str();
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream s;
  s << std::setprecision(17) << "freq_hz,gamma,epsilon,u_bar_max,feasible\n";
  for (const auto& r : rows)
    s << r.freq_hz << ',' << r.gamma << ',' << r.epsilon << ',' << r.u_bar_max << ',' << int(r.feasible) << '\n';
  return s.str();
}

namespace report_detail {

inline void matrix(YAML::Emitter& out, const char* key, const Matrix& m) {
  out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << m(i, j);
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

inline void polytope(YAML::Emitter& out, const char* key, const HPolytope& p) {
  out << YAML::Key << key << YAML::Value << YAML::BeginMap;
  matrix(out, "F", p.F);
  matrix(out, "f", Matrix(p.f));
  out << YAML::EndMap;
}

}  // namespace report_detail

inline std::string synthesis_report(const Problem& pb, const Synthesis& s, const std::optional<PlanningBundle>& b) {
  using namespace report_detail;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "scenario" << YAML::Value << pb.name;
  out << YAML::Key << "method" << YAML::Value << to_string(s.sf.method);
  out << YAML::Key << "T_L" << YAML::Value << pb.rates.T_L;
  out << YAML::Key << "T_H" << YAML::Value << pb.rates.T_H;
  matrix(out, "P", s.sf.lift.P);
  matrix(out, "Q", s.sf.lift.Q);
  matrix(out, "M", s.sf.M);
  matrix(out, "K", s.sf.K);
  matrix(out, "R", s.sf.R);
  out << YAML::Key << "R_pseudo_inverse" << YAML::Value << s.sf.R_pseudo_inverse;
  out << YAML::Key << "lambda" << YAML::Value << s.sf.lambda;
  out << YAML::Key << "gamma" << YAML::Value << s.sf.gamma;
  out << YAML::Key << "v0_max" << YAML::Value << s.v0_max;
  if (b) {
    out << YAML::Key << "epsilon" << YAML::Value << b->epsilon;
    out << YAML::Key << "u_bar_max" << YAML::Value << b->u_bar_max;
    out << YAML::Key << "delta" << YAML::Value << b->delta;
  }
  out << YAML::Key << "residuals" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "output_match" << YAML::Value << s.sf.lift.residual_cp;
  out << YAML::Key << "dynamics_match" << YAML::Value << s.sf.lift.residual_sylv;
  out << YAML::EndMap;
  out << YAML::Key << "lmi_slack" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "min_eig_M_minus_CtC" << YAML::Value << s.slack.output;
  out << YAML::Key << "max_eig_decay" << YAML::Value << s.slack.decay;
  out << YAML::Key << "valid" << YAML::Value << s.slack.ok();
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline std::string planning_report(const Problem& pb, const PlanningBundle& b,
                                   const std::vector<std::optional<PropagationReport>>& checks) {
  using namespace report_detail;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "scenario" << YAML::Value << pb.name;
  out << YAML::Key << "epsilon" << YAML::Value << b.epsilon;
  out << YAML::Key << "u_bar_max" << YAML::Value << b.u_bar_max;
  out << YAML::Key << "delta" << YAML::Value << b.delta;
  out << YAML::Key << "propagation" << YAML::Value << pb.propagation.propagation;
  if (!b.pieces.empty()) polytope(out, "Up", b.pieces.front().Up);
  out << YAML::Key << "pieces" << YAML::Value << YAML::BeginSeq;
  for (std::size_t i = 0; i < b.pieces.size(); ++i) {
    out << YAML::BeginMap;
    out << YAML::Key << "index" << YAML::Value << i;
    out << YAML::Key << "empty" << YAML::Value << static_cast<bool>(b.empty[i]);
    polytope(out, "Xp", b.pieces[i].Xp);
    if (i < checks.size() && checks[i]) {
      const PropagationReport& r = *checks[i];
      out << YAML::Key << "check" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "pass" << YAML::Value << r.pass;
      out << YAML::Key << "output_margin" << YAML::Value << r.output_margin;
      out << YAML::Key << "output_row" << YAML::Value << r.output_row;
      out << YAML::Key << "input_margin" << YAML::Value << r.input_margin;
      out << YAML::Key << "input_row" << YAML::Value << r.input_row;
      out << YAML::Key << "samples" << YAML::Value << (r.output_samples + r.input_samples);
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline std::string monitor_report(const TraceLog& log) {
  const MonitorSummary& m = log.monitors;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "records" << YAML::Value << log.records.size();
  out << YAML::Key << "epsilon" << YAML::Value << log.epsilon;
  out << YAML::Key << "max_dist" << YAML::Value << m.max_dist;
  out << YAML::Key << "max_dist_t" << YAML::Value << (log.records.empty() ? 0.0 : log.records[m.max_dist_index].t);
  out << YAML::Key << "output_violations_high_level" << YAML::Value << m.output_violations_high;
  out << YAML::Key << "output_excursions_low_level" << YAML::Value << m.output_excursions_low;
  out << YAML::Key << "input_violations" << YAML::Value << m.input_violations;
  out << YAML::Key << "eps_violations" << YAML::Value << m.eps_violations;
  out << YAML::Key << "v_bound_violations" << YAML::Value << m.v_bound_violations;
  out << YAML::Key << "goal_reached" << YAML::Value << m.goal_reached;
  if (m.goal_reached) out << YAML::Key << "goal_time" << YAML::Value << m.goal_time;
  out << YAML::Key << "strict_lowlevel_output" << YAML::Value << m.strict_lowlevel_output;
  out << YAML::Key << "aborted" << YAML::Value << log.aborted;
  if (log.aborted) out << YAML::Key << "abort_reason" << YAML::Value << log.abort_reason;
  out << YAML::Key << "pass" << YAML::Value << (m.pass() && !log.aborted);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace layercon
