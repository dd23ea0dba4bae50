#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palmsdp/palm.hpp"

namespace palmsdp {

struct ReportEvent {
  int iter = 0;
  std::string reason;
  std::string detail;
};

struct ReportTraceRow {
  int iter = 0;
  std::string stage;
  int inner = 0;
  double fval = 0.0;
  double pfeas = 0.0, dfeas = 0.0, comp = 0.0;
  double beta1 = 0.0, beta2 = 0.0;
  int rank = 0;
};

struct ReportConfig {
  double tol = 1e-6;
  int max_iters = 0;
  double max_time = 0.0;
  std::string precond;
  std::string stage;
  std::uint64_t seed = 0;
};

/// Solve summary as written to JSON. Residuals carry two significant digits
/// and objective values eight; NaN values are written as null. ttime is the
/// only wall-clock field.
struct ResultReport {
  int schema = 1;
  std::string problem;
  std::string status;
  std::string message;
  double fval = 0.0;
  double dfval = 0.0;
  double pfeas = 0.0, dfeas = 0.0, comp = 0.0, pdgap = 0.0, max_kkt = 0.0;
  int iter = 0;
  int inner_iters = 0;
  double ttime = 0.0;
  int numChol = 0;
  int numCGiter = 0;
  bool singular = false;
  std::string final_stage;
  std::string switch_reason;
  std::vector<int> ranks;
  std::vector<ReportEvent> events;
  ReportConfig config;
  bool has_trace = false;
  std::vector<ReportTraceRow> trace;
};

ResultReport make_report(const RunHistory& h, const SolveOptions& options, const std::string& problem,
                         bool with_trace = false);

/// Fixed field order, one field per line.
std::string to_json(const ResultReport& r);
/// Inverse of to_json; throws InvalidInput on malformed or wrong-schema input.
ResultReport parse_report(const std::string& text);

}  // namespace palmsdp
