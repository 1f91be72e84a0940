#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace jfsce {

// One aggregated result per (experiment, method, grid point). Unmeasured
// quantities (time without timing, NMSE without a reference) are NaN and
// written as empty fields.
struct ResultRow {
  std::string experiment;
  std::string method;
  std::string sweep_name;
  double sweep_value = 0.0;
  int trials = 0;
  double mse_linear = 0.0;
  double mse_db = 0.0;
  double nmse_db = 0.0;
  double time_s = 0.0;
  double iters = 0.0;
  double boundary_hit_rate = 0.0;
  int failures = 0;

  bool operator==(const ResultRow& other) const;  // NaN fields compare equal to NaN
};

inline constexpr const char* kCsvHeader =
    "experiment,method,sweep_name,sweep_value,trials,mse_linear,mse_db,nmse_db,time_s,iters,"
    "boundary_hit_rate,failures";

// Shortest decimal text that reads back to the same double; "" for NaN.
std::string format_number(double v);

std::string format_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(const std::string& text);

// Throws Error naming the path on I/O failure.
void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

}  // namespace jfsce
