#include "palmsdp/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "palmsdp/errors.hpp"

namespace palmsdp {

namespace {

std::string num(const char* format, double v) {
  if (!std::isfinite(v)) return "null";
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string resid(double v) { return num("%.1e", v); }
std::string objval(double v) { return num("%.7e", v); }
std::string str(const std::string& s) { return nlohmann::json(s).dump(); }

double get_double(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return v.get<double>();
}

}  // namespace

ResultReport make_report(const RunHistory& h, const SolveOptions& options, const std::string& problem,
                         bool with_trace) {
  ResultReport r;
  r.problem = problem;
  r.status = to_string(h.status);
  r.message = h.message;
  r.fval = h.fval;
  r.dfval = h.dfval;
  r.pfeas = h.kkt.pfeas;
  r.dfeas = h.kkt.dfeas;
  r.comp = h.kkt.comp;
  r.pdgap = h.kkt.pdgap;
  r.max_kkt = h.kkt.max_kkt;
  r.iter = h.iter;
  r.inner_iters = h.inner_iters;
  r.ttime = h.ttime;
  r.numChol = h.numChol;
  r.numCGiter = h.numCGiter;
  r.singular = h.singular;
  r.final_stage = to_string(h.final_stage);
  r.switch_reason = to_string(h.switch_reason);
  for (const auto& B : h.R.blocks) r.ranks.push_back(static_cast<int>(B.cols()));
  for (const auto& e : h.events) r.events.push_back({e.iter, to_string(e.reason), e.detail});
  r.config.tol = options.tol;
  r.config.max_iters = options.max_iters;
  r.config.max_time = options.max_time;
  r.config.precond = to_string(options.precond);
  r.config.stage = to_string(options.stage);
  r.config.seed = options.seed;
  r.has_trace = with_trace;
  if (with_trace) {
    for (const auto& t : h.trace) {
      ReportTraceRow row;
      row.iter = t.iter;
      row.stage = to_string(t.stage);
      row.inner = t.inner_iters;
      row.fval = t.fval;
      row.pfeas = t.kkt.pfeas;
      row.dfeas = t.kkt.dfeas;
      row.comp = t.kkt.comp;
      row.beta1 = t.beta1;
      row.beta2 = t.beta2;
      row.rank = t.ranks.empty() ? 0 : t.ranks[0];
      r.trace.push_back(row);
    }
  }
  return r;
}

std::string to_json(const ResultReport& r) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"schema\": " << r.schema << ",\n";
  os << "  \"problem\": " << str(r.problem) << ",\n";
  os << "  \"status\": " << str(r.status) << ",\n";
  os << "  \"message\": " << str(r.message) << ",\n";
  os << "  \"fval\": " << objval(r.fval) << ",\n";
  os << "  \"dfval\": " << objval(r.dfval) << ",\n";
  os << "  \"pfeas\": " << resid(r.pfeas) << ",\n";
  os << "  \"dfeas\": " << resid(r.dfeas) << ",\n";
  os << "  \"comp\": " << resid(r.comp) << ",\n";
  os << "  \"pdgap\": " << resid(r.pdgap) << ",\n";
  os << "  \"max_kkt\": " << resid(r.max_kkt) << ",\n";
  os << "  \"iter\": " << r.iter << ",\n";
  os << "  \"inner_iters\": " << r.inner_iters << ",\n";
  os << "  \"ttime\": " << num("%.3f", r.ttime) << ",\n";
  os << "  \"numChol\": " << r.numChol << ",\n";
  os << "  \"numCGiter\": " << r.numCGiter << ",\n";
  os << "  \"singular\": " << (r.singular ? "true" : "false") << ",\n";
  os << "  \"final_stage\": " << str(r.final_stage) << ",\n";
  os << "  \"switch_reason\": " << str(r.switch_reason) << ",\n";
  os << "  \"ranks\": [";
  for (std::size_t i = 0; i < r.ranks.size(); ++i) os << (i ? ", " : "") << r.ranks[i];
  os << "],\n";
  os << "  \"events\": [";
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    const auto& e = r.events[i];
    os << (i ? ",\n" : "\n") << "    {\"iter\": " << e.iter << ", \"reason\": " << str(e.reason)
       << ", \"detail\": " << str(e.detail) << "}";
  }
  os << (r.events.empty() ? "" : "\n  ") << "],\n";
  os << "  \"config\": {\"tol\": " << num("%.1e", r.config.tol) << ", \"max_iters\": " << r.config.max_iters
     << ", \"max_time\": " << num("%.1f", r.config.max_time) << ", \"precond\": " << str(r.config.precond)
     << ", \"stage\": " << str(r.config.stage) << ", \"seed\": " << r.config.seed << "}";
  if (r.has_trace) {
    os << ",\n  \"trace\": [";
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      const auto& t = r.trace[i];
      os << (i ? ",\n" : "\n") << "    {\"iter\": " << t.iter << ", \"stage\": " << str(t.stage)
         << ", \"inner\": " << t.inner << ", \"fval\": " << objval(t.fval) << ", \"pfeas\": " << resid(t.pfeas)
         << ", \"dfeas\": " << resid(t.dfeas) << ", \"comp\": " << resid(t.comp) << ", \"beta1\": "
         << resid(t.beta1) << ", \"beta2\": " << resid(t.beta2) << ", \"rank\": " << t.rank << "}";
    }
    os << (r.trace.empty() ? "" : "\n  ") << "]";
  }
  os << "\n}\n";
  return os.str();
}

ResultReport parse_report(const std::string& text) {
  ResultReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.schema = j.at("schema").get<int>();
    if (r.schema != 1) throw InvalidInput("report: unsupported schema " + std::to_string(r.schema));
    r.problem = j.at("problem").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.message = j.at("message").get<std::string>();
    r.fval = get_double(j, "fval");
    r.dfval = get_double(j, "dfval");
    r.pfeas = get_double(j, "pfeas");
    r.dfeas = get_double(j, "dfeas");
    r.comp = get_double(j, "comp");
    r.pdgap = get_double(j, "pdgap");
    r.max_kkt = get_double(j, "max_kkt");
    r.iter = j.at("iter").get<int>();
    r.inner_iters = j.at("inner_iters").get<int>();
    r.ttime = get_double(j, "ttime");
    r.numChol = j.at("numChol").get<int>();
    r.numCGiter = j.at("numCGiter").get<int>();
    r.singular = j.at("singular").get<bool>();
    r.final_stage = j.at("final_stage").get<std::string>();
    r.switch_reason = j.at("switch_reason").get<std::string>();
    r.ranks = j.at("ranks").get<std::vector<int>>();
    for (const auto& e : j.at("events"))
      r.events.push_back({e.at("iter").get<int>(), e.at("reason").get<std::string>(), e.at("detail").get<std::string>()});
    const auto& c = j.at("config");
    r.config.tol = get_double(c, "tol");
    r.config.max_iters = c.at("max_iters").get<int>();
    r.config.max_time = get_double(c, "max_time");
    r.config.precond = c.at("precond").get<std::string>();
    r.config.stage = c.at("stage").get<std::string>();
    r.config.seed = c.at("seed").get<std::uint64_t>();
    r.has_trace = j.contains("trace");
    if (r.has_trace) {
      for (const auto& t : j.at("trace")) {
        ReportTraceRow row;
        row.iter = t.at("iter").get<int>();
        row.stage = t.at("stage").get<std::string>();
        row.inner = t.at("inner").get<int>();
        row.fval = get_double(t, "fval");
        row.pfeas = get_double(t, "pfeas");
        row.dfeas = get_double(t, "dfeas");
        row.comp = get_double(t, "comp");
        row.beta1 = get_double(t, "beta1");
        row.beta2 = get_double(t, "beta2");
        row.rank = t.at("rank").get<int>();
        r.trace.push_back(row);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("report: ") + e.what());
  }
  return r;
}

}  // namespace palmsdp
