// layercon command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "layercon/layercon.hpp"

namespace fs = std::filesystem;
using namespace layercon;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kScenario = 3,
  kConfig = 4,
  kNumerical = 5,
  kAssumption = 10,
  kNotStabilizable = 11,
  kSdpInfeasible = 12,
  kEmptyPiece = 13,
  kPlannerInfeasible = 14,
  kMonitorFailure = 15,
  kPropagationCheck = 16,
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ScenarioError: return kScenario;
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch: return kConfig;
    case ErrorCode::NonConvergence:
    case ErrorCode::DomainError:
    case ErrorCode::Unbounded: return kNumerical;
    case ErrorCode::AssumptionViolated: return kAssumption;
    case ErrorCode::NotStabilizable: return kNotStabilizable;
    case ErrorCode::SdpInfeasible: return kSdpInfeasible;
    case ErrorCode::EmptyPlanningSet: return kEmptyPiece;
    case ErrorCode::PlannerInfeasible: return kPlannerInfeasible;
  }
  return kInternal;
}

struct Common {
  std::string scenario;
  std::string out = "layercon_out";
  std::string method;
  double freq = 0.0;
  long samples = 10000;
};

Problem load(const Common& c) {
  Problem pb = load_scenario(c.scenario);
  if (!c.method.empty()) pb.synth.method = parse_synth_method(c.method);
  if (c.freq > 0.0) {
    pb.rates.T_L = 1.0 / c.freq;
    pb.rates.validate();
  }
  return pb;
}

void print_synthesis(const Synthesis& s, const PlanningBundle* b) {
  std::printf("method      %s\n", to_string(s.sf.method));
  std::printf("lambda      %.6g\n", s.sf.lambda);
  std::printf("gamma       %.6g\n", s.sf.gamma);
  if (b) {
    std::printf("u_bar_max   %.6g\n", b->u_bar_max);
    std::printf("epsilon     %.6g\n", b->epsilon);
  }
  std::printf("lmi slack   output %.3g, decay %.3g (%s)\n", s.slack.output, s.slack.decay, s.slack.ok() ? "valid" : "INVALID");
}

int cmd_synth(const Common& c) {
  const Problem pb = load(c);
  const Synthesis s = synthesize(pb);
  std::optional<PlanningBundle> b;
  try {
    b = propagate(pb, s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyPlanningSet) throw;
    std::fprintf(stderr, "note: %s\n", e.what());
  }
  atomic_write(fs::path(c.out) / "synthesis.yaml", synthesis_report(pb, s, b));
  print_synthesis(s, b ? &*b : nullptr);
  return kOk;
}

int cmd_propagate(const Common& c) {
  const Problem pb = load(c);
  const Synthesis s = synthesize(pb);
  const PlanningBundle b = propagate(pb, s);
  std::vector<std::optional<PropagationReport>> checks(b.pieces.size());
  bool checks_ok = true;
  for (std::size_t i = 0; i < b.pieces.size(); ++i) {
    if (b.empty[i]) continue;
    checks[i] = check_propagation_conditions(s.sf, pb.higher.C, b.pieces[i], pb.Y.pieces[i], pb.U, c.samples);
    checks_ok = checks_ok && checks[i]->pass;
  }
  atomic_write(fs::path(c.out) / "planning_sets.yaml", planning_report(pb, b, checks));
  print_synthesis(s, &b);
  for (std::size_t i = 0; i < b.pieces.size(); ++i) {
    if (b.empty[i]) {
      std::printf("piece %zu     EMPTY\n", i);
    } else {
      std::printf("piece %zu     nonempty, check %s (output margin %.3g, input margin %.3g)\n", i,
                  checks[i]->pass ? "pass" : "FAIL", checks[i]->output_margin, checks[i]->input_margin);
    }
  }
  if (auto i = b.first_empty()) {
    std::fprintf(stderr, "error: planning state set of piece %zu is empty at epsilon %.6g\n", *i, b.epsilon);
    return kEmptyPiece;
  }
  return checks_ok ? kOk : kPropagationCheck;
}

int cmd_simulate(const Common& c, bool strict) {
  const Problem pb = load(c);
  const Synthesis s = synthesize(pb);
  const PlanningBundle b = propagate(pb, s);
  b.require_nonempty();
  if (pb.propagation.propagation) {
    if (auto msg = validate_mission(pb.mission, pb.Y, b.epsilon))
      throw Error(ErrorCode::ScenarioError, "mission: " + *msg);
  }
  const TraceLog log = run({&pb, &s, &b, strict});
  const fs::path out(c.out);
  atomic_write(out / "synthesis.yaml", synthesis_report(pb, s, b));
  atomic_write(out / "trace.csv", trace_csv(log));
  atomic_write(out / "monitors.yaml", monitor_report(log));
  if (!log.records.empty()) {
    if (pb.lower.p() == 2) atomic_write(out / "trajectory.svg", svg::trajectory(pb, log));
    atomic_write(out / "distance.svg", svg::distance(log));
    atomic_write(out / "inputs.svg", svg::inputs(log, pb.U));
  }
  const MonitorSummary& m = log.monitors;
  std::printf("epsilon                 %.6g\n", log.epsilon);
  std::printf("max output distance     %.6g\n", m.max_dist);
  std::printf("y outside Y (T_H steps) %ld\n", m.output_violations_high);
  std::printf("y outside Y (T_L steps) %ld%s\n", m.output_excursions_low, strict ? "" : " (observation)");
  std::printf("u outside U             %ld\n", m.input_violations);
  std::printf("epsilon violations      %ld\n", m.eps_violations);
  std::printf("goal reached            %s\n", m.goal_reached ? "yes" : "no");
  if (log.aborted) {
    std::fprintf(stderr, "error: run aborted: %s\n", log.abort_reason.c_str());
    return kPlannerInfeasible;
  }
  return m.pass() ? kOk : kMonitorFailure;
}

int cmd_sweep(const Common& c, const std::vector<double>& freqs) {
  if (freqs.empty()) {
    std::fprintf(stderr, "error: --freqs needs at least one frequency\n");
    return kUsage;
  }
  const Problem pb = load(c);
  const auto rows = sweep_frequencies(pb, freqs);
  const fs::path out(c.out);
  atomic_write(out / "sweep.csv", sweep_csv(rows));
  atomic_write(out / "sweep.svg", svg::sweep(rows));
  std::printf("%8s %12s %12s %12s %s\n", "freq_hz", "gamma", "epsilon", "u_bar_max", "feasible");
  for (const auto& r : rows)
    std::printf("%8.3g %12.6g %12.6g %12.6g %s%s%s\n", r.freq_hz, r.gamma, r.epsilon, r.u_bar_max, r.feasible ? "yes" : "no",
                r.note.empty() ? "" : "  ", r.note.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered multirate control: synthesis, constraint propagation and simulation"};
  app.require_subcommand(1);
  Common common;
  bool strict = false;
  std::vector<double> freqs;
  std::string freq_list = "1,2,3,4,5,6,7,8,9,10";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", common.scenario, "scenario file")->required();
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
    sub->add_option("--method", common.method, "synthesis method override")->check(CLI::IsMember({"lyapunov", "sdp"}));
    sub->add_option("--freq", common.freq, "override the low-level frequency 1/T_L [Hz]");
  };
  CLI::App* synth = app.add_subcommand("synth", "synthesize the simulation function and report gamma and epsilon");
  CLI::App* prop = app.add_subcommand("propagate", "build and check the planning sets for every piece");
  CLI::App* sim = app.add_subcommand("simulate", "run the two-rate closed loop with monitors");
  CLI::App* sweep = app.add_subcommand("sweep", "tabulate gamma and epsilon over low-level frequencies");
  for (auto* s : {synth, prop, sim, sweep}) add_common(s);
  prop->add_option("--samples", common.samples, "random samples per propagation condition")->capture_default_str();
  sim->add_flag("--strict-lowlevel-output", strict, "count output excursions at low-level steps as failures");
  sweep->add_option("--freqs", freq_list, "comma-separated frequencies [Hz]")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(common);
    if (*prop) return cmd_propagate(common);
    if (*sim) return cmd_simulate(common, strict);
    if (*sweep) {
      std::stringstream ss(freq_list);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
          freqs.push_back(std::stod(item));
        } catch (const std::exception&) {
          std::fprintf(stderr, "error: '%s' is not a frequency\n", item.c_str());
          return kUsage;
        }
      }
      return cmd_sweep(common, freqs);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInternal;
  }
  return kUsage;
}
