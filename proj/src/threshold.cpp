#include "qlflow/threshold.hpp"

#include <cmath>
#include <limits>

#include "qlflow/errors.hpp"

namespace qlflow {

FlowOutcome classify(const Trajectory& tr) {
  if (tr.blowup_suspected) return FlowOutcome::blew_up;
  if (tr.vanished_early) return FlowOutcome::vanished;
  return FlowOutcome::undecided;
}

double hover_time(const Trajectory& tr, double* ut_min) {
  if (tr.ut_l2.empty()) throw PreconditionError("trajectory has no steps");
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t k = 0; k < tr.ut_l2.size(); ++k) {
    const double v = tr.ut_l2[k];
    if (v < best) {
      best = v;
      arg = k;
    } else if (v > 100.0 * best) {
      break;
    }
  }
  if (ut_min) *ut_min = best;
  return tr.times[arg + 1];
}

ThresholdSearch threshold_bisection(const Field& shape, const FlowConfig& cfg, const CoefficientModel& cm,
                                    const NonlinearityModel& nm, const RegularizationParams& reg,
                                    double rel_width, int max_runs) {
  if (!std::isfinite(cfg.blowup_ceiling) || !(cfg.vanish_floor > 0.0))
    throw PreconditionError("threshold search needs a blow-up ceiling and a vanish floor");
  ThresholdSearch out;
  auto run = [&](double alpha) {
    ++out.runs;
    return run_flow(alpha * shape, cfg, cm, nm, reg);
  };

  // Bracket: grow until blow-up, shrink until decay.
  double alpha = 1.0;
  Trajectory tr = run(alpha);
  FlowOutcome oc = classify(tr);
  Trajectory lo_tr;
  if (oc == FlowOutcome::undecided) {
    out.trajectory = std::move(tr);
    out.alpha_lo = out.alpha_hi = alpha;
    out.hover_time = hover_time(out.trajectory, &out.hover_ut);
    return out;
  }
  if (oc == FlowOutcome::blew_up) {
    out.alpha_hi = alpha;
    while (out.runs < max_runs) {
      alpha *= 0.5;
      tr = run(alpha);
      oc = classify(tr);
      if (oc != FlowOutcome::blew_up) break;
      out.alpha_hi = alpha;
    }
    out.alpha_lo = alpha;
  } else {
    out.alpha_lo = alpha;
    while (out.runs < max_runs) {
      alpha *= 2.0;
      tr = run(alpha);
      oc = classify(tr);
      if (oc != FlowOutcome::vanished) break;
      out.alpha_lo = alpha;
    }
    out.alpha_hi = alpha;
  }
  if (oc == FlowOutcome::undecided) {
    out.trajectory = std::move(tr);
    out.alpha_lo = out.alpha_hi = alpha;
    out.hover_time = hover_time(out.trajectory, &out.hover_ut);
    return out;
  }
  if (oc == FlowOutcome::vanished) lo_tr = std::move(tr);
  else lo_tr = run(out.alpha_lo);
  out.bracketed = true;

  while (out.alpha_hi - out.alpha_lo > rel_width * out.alpha_hi && out.runs < max_runs) {
    const double mid = 0.5 * (out.alpha_lo + out.alpha_hi);
    if (mid <= out.alpha_lo || mid >= out.alpha_hi) break;
    tr = run(mid);
    oc = classify(tr);
    if (oc == FlowOutcome::blew_up) {
      out.alpha_hi = mid;
    } else {
      out.alpha_lo = mid;
      lo_tr = std::move(tr);
      if (oc == FlowOutcome::undecided) break;
    }
  }
  out.trajectory = std::move(lo_tr);
  out.hover_time = hover_time(out.trajectory, &out.hover_ut);
  return out;
}

}  // namespace qlflow
