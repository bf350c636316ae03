#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlflow/diagnostics.hpp"
#include "qlflow/domain_grid.hpp"
#include "qlflow/parabolic_flow.hpp"
#include "qlflow/stationary_solver.hpp"

namespace qlflow {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Throws std::runtime_error naming the path and the cause.
void ensure_directory(const fs::path& dir);
void write_text(const fs::path& path, const std::string& text);

/// "# domain=... h=... t=..." header, then x1,x2,value per interior node.
std::string field_csv(const Field& u, double t);
void write_field_csv(const fs::path& path, const Field& u, double t);

/// t,energy,ut_l2,min_u,max_u per recorded time (ut_l2 of the step ending there).
std::string trajectory_csv(const Trajectory& tr);

/// File name "<t>.csv" with t printed to six decimals.
std::string snapshot_name(double t);

/// Writes the series CSV plus every k-th snapshot and the final one into dir.
/// Returns the written paths relative to root.
std::vector<std::string> export_trajectory(const fs::path& root, const fs::path& dir, const Trajectory& tr,
                                           int snapshot_every);

Json to_json(const SymmetryReport& r);
Json to_json(const MovingPlaneReport& r);
Json to_json(const CriticalSetReport& r);
Json to_json(const ComparisonReport& r);
Json to_json(const EnergyReport& r, bool with_series = false);
Json to_json(const OmegaLimitReport& r);
Json to_json(const StationaryResult& r);
Json to_json(const HypothesisReport& r);

/// Per-lambda and per-delta curves.
std::string moving_plane_csv(const MovingPlaneReport& r);
std::string critical_set_csv(const CriticalSetReport& r);

std::string dump(const Json& j);

}  // namespace qlflow
