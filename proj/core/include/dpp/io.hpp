#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dpp/error_bounds.hpp"
#include "dpp/measure.hpp"
#include "dpp/solve.hpp"

namespace dpp {

/// Shortest deterministic round-trip formatting (17 significant digits).
std::string format_double(double v);

/// Columns: cycle,kind,node,sender,pulse_index,local_ts_s,true_ts_s_or_blank.
/// True time appears only in TX rows; it is an oracle, not a measurement.
std::string trace_csv(const std::vector<CycleTrace>& traces);

/// Columns: kind,x,y,z,p_or_q,value_s,value_m. Averaged values carry
/// p_or_q = 0; the raw single-pulse rows follow them.
std::string measurement_csv(const MeasurementSet& ms);
std::string measurement_json(const MeasurementSet& ms);

std::string bounds_json(const std::vector<ErrorBoundReport>& reports);

/// Columns: trial,abs_error_s,bound_s (per-trial worst tuple).
std::string bound_trials_csv(const ErrorBoundReport& report);

std::string solve_json(const SolveReport& report, const System& system);

/// Columns: node,x_m,y_m,z_m,source,residual_rms_s,converged.
std::string positions_csv(const SolveReport& report);

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace dpp
