#pragma once

#include <vector>

#include "qlflow/parabolic_flow.hpp"

namespace qlflow {

enum class FlowOutcome { vanished, blew_up, undecided };

struct ThresholdSearch {
  double alpha_lo = 0.0;  ///< largest amplitude seen to vanish
  double alpha_hi = 0.0;  ///< smallest amplitude seen to blow up
  int runs = 0;
  Trajectory trajectory;  ///< run from alpha_lo (or the undecided amplitude)
  bool bracketed = false;
  /// Time of smallest ||u_t|| before the trajectory leaves the steady state.
  double hover_time = 0.0;
  double hover_ut = 0.0;
};

FlowOutcome classify(const Trajectory& tr);

/// Bisects the amplitude alpha of u0 = alpha * shape between decay and
/// blow-up until (hi - lo) <= rel_width * hi. Near the threshold the flow
/// hovers around the positive steady state before leaving it; the returned
/// trajectory is the sub-threshold run. cfg must set blowup_ceiling and
/// vanish_floor.
ThresholdSearch threshold_bisection(const Field& shape, const FlowConfig& cfg, const CoefficientModel& cm,
                                    const NonlinearityModel& nm, const RegularizationParams& reg,
                                    double rel_width = 1e-14, int max_runs = 80);

/// Index of the smallest ut_l2 before the series first rises 100-fold above
/// its running minimum; returns the time after that step.
double hover_time(const Trajectory& tr, double* ut_min = nullptr);

}  // namespace qlflow
