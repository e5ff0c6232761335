#pragma once

// A complete two-layer problem and the synthesis/propagation pipeline over it.

#include <optional>
#include <string>

#include "layercon/planner.hpp"

namespace layercon {

struct Problem {
  std::string name;
  std::string description;
  CtSystem lower;
  CtSystem higher;
  RatePair rates;
  SafeRegion Y;
  HPolytope U;
  std::optional<HPolytope> Xbar;
  HPolytope Ubar;
  SynthOptions synth;
  PropagationOptions propagation;
  PlannerConfig planner;
  Mission mission;
  Vector start;                   ///< output-space start; xbar0 is the zero-input equilibrium there
  bool lifted_init = true;        ///< x0 = P xbar0
  std::optional<Vector> x0;       ///< explicit lower state when not lifted
};

struct Discretized {
  DtSystem lower_L;
  DtSystem higher_L;
  DtSystem higher_H;
};

inline Discretized discretize(const Problem& pb) {
  pb.rates.validate();
  return {discretize_zoh(pb.lower, pb.rates.T_L), discretize_zoh(pb.higher, pb.rates.T_L),
          discretize_zoh(pb.higher, pb.rates.T_H)};
}

struct InitPair {
  Vector xbar0;
  Vector x0;
};

inline InitPair initial_pair(const Problem& pb, const Discretized& d, const SimFunction& sf) {
  InitPair ip;
  ip.xbar0 = output_equilibrium(d.higher_H, pb.start);
  if (pb.lifted_init || !pb.x0) {
    ip.x0 = sf.lift.P * ip.xbar0;
  } else {
    ip.x0 = *pb.x0;
    require(ip.x0.size() == pb.lower.n(), ErrorCode::DimensionMismatch, "explicit x0 has the wrong size");
    require((pb.lower.C * ip.x0 - pb.higher.C * ip.xbar0).norm() <= 1e-9, ErrorCode::InvalidArgument,
            "initial outputs of the two layers differ");
  }
  return ip;
}

struct Synthesis {
  Discretized sys;
  SimFunction sf;
  InitPair init;
  double v0_max = 0.0;
  LmiSlack slack;
};

inline Synthesis synthesize(const Problem& pb) {
  Synthesis s;
  s.sys = discretize(pb);
  s.sf = assemble(s.sys.lower_L, s.sys.higher_L, pb.synth);
  s.init = initial_pair(pb, s.sys, s.sf);
  s.v0_max = std::sqrt(eval_V(s.sf, s.init.xbar0, s.init.x0));
  s.slack = lmi_slack(s.sf, s.sys.lower_L);
  return s;
}

inline PlanningBundle propagate(const Problem& pb, const Synthesis& s) {
  PropagationOptions opt = pb.propagation;
  opt.v0_max = s.v0_max;
  return build_planning_bundle(s.sf, pb.higher.C, pb.Y, pb.U, pb.Xbar, pb.Ubar, opt);
}

}  // namespace layercon
