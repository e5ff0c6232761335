#pragma once

// Two-rate closed loop: the planner runs every T_H and holds its input; the tracking
// controller runs every T_L against the higher state propagated at T_L.

#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "layercon/problem.hpp"

namespace layercon {

struct TraceRecord {
  double t = 0.0;
  Vector xbar, ubar, x, u, ybar, y;
  double V = 0.0;
  double dist = 0.0;
  bool eps_ok = true;
  bool y_in_Y = true;
  bool u_in_U = true;
  bool high_level = false;  ///< t is a multiple of T_H
  int piece = 0;
};

struct PlannerEvent {
  double t = 0.0;
  int piece = 0;
  Vector target;
  double value = 0.0;  ///< MPC optimal cost
  bool waypoint_switched = false;
};

struct MonitorSummary {
  long output_violations_high = 0;  ///< y outside Y at multiples of T_H
  long output_excursions_low = 0;   ///< y outside Y at the other T_L steps
  long input_violations = 0;
  long eps_violations = 0;
  long v_bound_violations = 0;
  double max_dist = 0.0;
  std::size_t max_dist_index = 0;
  bool goal_reached = false;
  double goal_time = std::numeric_limits<double>::quiet_NaN();
  bool strict_lowlevel_output = false;

  bool pass() const {
    return output_violations_high == 0 && input_violations == 0 && eps_violations == 0 && v_bound_violations == 0 &&
           (!strict_lowlevel_output || output_excursions_low == 0);
  }
};

struct TraceLog {
  std::vector<TraceRecord> records;
  std::vector<PlannerEvent> planner;
  MonitorSummary monitors;
  double epsilon = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

struct SimSetup {
  const Problem* problem = nullptr;
  const Synthesis* synthesis = nullptr;
  const PlanningBundle* sets = nullptr;
  bool strict_lowlevel_output = false;
};

inline TraceLog run(const SimSetup& setup) {
  require(setup.problem && setup.synthesis && setup.sets, ErrorCode::InvalidArgument, "incomplete simulation setup");
  const Problem& pb = *setup.problem;
  const Synthesis& syn = *setup.synthesis;
  const PlanningBundle& sets = *setup.sets;
  const SimFunction& sf = syn.sf;
  const DtSystem& lo = syn.sys.lower_L;
  const DtSystem& hi_l = syn.sys.higher_L;
  const DtSystem& hi_h = syn.sys.higher_H;
  const long inner = pb.rates.inner_steps();
  const long outer = pb.rates.outer_steps();
  const double eps = sets.epsilon;
  const double v_cap = std::max(eval_V(sf, syn.init.xbar0, syn.init.x0), sf.gamma * sf.gamma * sets.u_bar_max * sets.u_bar_max);

  TraceLog log;
  log.epsilon = eps;
  log.monitors.strict_lowlevel_output = setup.strict_lowlevel_output;
  Vector xbar = syn.init.xbar0;
  Vector x = syn.init.x0;
  Vector ubar = Vector::Zero(hi_h.m());
  MissionCursor cursor;

  auto piece_contains = [&](int piece, const Vector& xb) {
    return piece >= 0 && static_cast<std::size_t>(piece) < sets.pieces.size() &&
           !sets.empty[static_cast<std::size_t>(piece)] &&
           sets.pieces[static_cast<std::size_t>(piece)].Xp.min_slack(xb) >= -1e-6;
  };
  int piece = advance_mission(pb.mission, cursor, hi_h.output(xbar), pb.planner.waypoint_switch_radius).piece;
  if (!piece_contains(piece, xbar)) {
    for (std::size_t i = 0; i < sets.pieces.size(); ++i)
      if (piece_contains(static_cast<int>(i), xbar)) {
        piece = static_cast<int>(i);
        break;
      }
  }

  auto record = [&](double t, bool high) {
    TraceRecord r;
    r.t = t;
    r.xbar = xbar;
    r.ubar = ubar;
    r.x = x;
    r.u = eval_controller(sf, ubar, xbar, x);
    r.ybar = hi_l.output(xbar);
    r.y = lo.output(x);
    r.V = eval_V(sf, xbar, x);
    r.dist = (r.ybar - r.y).norm();
    r.eps_ok = r.dist <= eps + 1e-9;
    r.y_in_Y = membership(pb.Y, r.y, 1e-12).inside;
    r.u_in_U = pb.U.contains(r.u, 1e-9);
    r.high_level = high;
    r.piece = piece;
    MonitorSummary& mon = log.monitors;
    if (!r.y_in_Y) (high ? mon.output_violations_high : mon.output_excursions_low)++;
    if (!r.u_in_U) ++mon.input_violations;
    if (!r.eps_ok) ++mon.eps_violations;
    if (r.V > v_cap + 1e-9) ++mon.v_bound_violations;
    if (r.dist > mon.max_dist || log.records.empty()) {
      mon.max_dist = r.dist;
      mon.max_dist_index = log.records.size();
    }
    if (!mon.goal_reached && (r.ybar - pb.mission.goal_center).norm() <= pb.mission.goal_radius) {
      mon.goal_reached = true;
      mon.goal_time = t;
    }
    log.records.push_back(std::move(r));
  };

  for (long h = 0; h < outer; ++h) {
    const double t_h = static_cast<double>(h) * pb.rates.T_H;
    const std::size_t before = cursor.next;
    const MissionStatus ms = advance_mission(pb.mission, cursor, hi_h.output(xbar), pb.planner.waypoint_switch_radius);
    // Hand off to the next piece only once the state is inside its planning set.
    if (ms.piece != piece && piece_contains(ms.piece, xbar)) piece = ms.piece;
    try {
      require(!sets.empty[static_cast<std::size_t>(piece)], ErrorCode::EmptyPlanningSet,
              "active piece " + std::to_string(piece) + " has an empty planning set");
      const PlanResult plan = plan_step(xbar, ms.target, sets.pieces[static_cast<std::size_t>(piece)], hi_h, pb.planner);
      ubar = plan.ubar;
      log.planner.push_back({t_h, piece, ms.target, plan.value, cursor.next != before});
    } catch (const Error& e) {
      log.aborted = true;
      log.abort_reason = "t=" + std::to_string(t_h) + ": " + e.what();
      return log;
    }
    for (long l = 0; l < inner; ++l) {
      const double t = t_h + static_cast<double>(l) * pb.rates.T_L;
      record(t, l == 0);
      const Vector u = log.records.back().u;
      x = lo.step(x, u);
      xbar = hi_l.step(xbar, ubar);
    }
  }
  record(pb.rates.T, true);
  return log;
}

struct EpsVerdict {
  bool pass = true;
  double max_dist = 0.0;
  std::size_t argmax = 0;
};

inline EpsVerdict monitor_eps(const TraceLog& log, double eps) {
  EpsVerdict v;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    if (log.records[i].dist > v.max_dist || i == 0) {
      v.max_dist = log.records[i].dist;
      v.argmax = i;
    }
  }
  v.pass = log.records.empty() || v.max_dist <= eps + 1e-9;
  return v;
}

struct SweepRow {
  double freq_hz = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double u_bar_max = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
  std::string note;
  LmiSlack slack;
};

/// Re-synthesizes and re-propagates at each low-level frequency 1/T_L. Failures are
/// recorded per row; the sweep always completes.
inline std::vector<SweepRow> sweep_frequencies(const Problem& base, const std::vector<double>& freqs) {
  require(!freqs.empty(), ErrorCode::InvalidArgument, "frequency list is empty");
  auto cell = [&base](double f) {
    SweepRow row;
    row.freq_hz = f;
    try {
      require(f > 0.0 && std::isfinite(f), ErrorCode::InvalidArgument, "frequency must be positive");
      Problem pb = base;
      pb.rates.T_L = 1.0 / f;
      const Synthesis syn = synthesize(pb);
      row.gamma = syn.sf.gamma;
      row.lambda = syn.sf.lambda;
      row.slack = syn.slack;
      const PlanningBundle b = propagate(pb, syn);
      row.epsilon = b.epsilon;
      row.u_bar_max = b.u_bar_max;
      row.feasible = !b.first_empty().has_value();
      if (auto i = b.first_empty()) row.note = "empty piece " + std::to_string(*i);
    } catch (const std::exception& e) {
      row.feasible = false;
      row.note = e.what();
    }
    return row;
  };
  std::vector<std::future<SweepRow>> jobs;
  for (double f : freqs) jobs.push_back(std::async(std::launch::async, cell, f));
  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

}  // namespace layercon
