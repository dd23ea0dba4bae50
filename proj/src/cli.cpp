#include "palmsdp/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "palmsdp/errors.hpp"
#include "palmsdp/feasible.hpp"
#include "palmsdp/generators.hpp"
#include "palmsdp/oracle.hpp"
#include "palmsdp/report.hpp"
#include "palmsdp/sdpa.hpp"

namespace palmsdp {

namespace {

std::string slurp(const std::string& path, std::istream& in) {
  std::ostringstream ss;
  if (path == "-") {
    ss << in.rdbuf();
    return ss.str();
  }
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot open '" + path + "'");
  ss << f.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write '" + path + "'");
  f << text;
}

// Shape summary used as the report's problem label, so that piping and
// file input produce the same report.
std::string describe(const ConicProblem& prob) {
  std::ostringstream os;
  os << "blocks=[";
  for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
    const auto& b = prob.blocks[k];
    os << (k ? "," : "") << (b.is_psd() ? "s" : b.kind == BlockKind::NonnegVector ? "l" : "u") << b.dim;
  }
  os << "] m=" << prob.num_eq() << " p=" << prob.num_side();
  return os.str();
}

std::string fixture_text(const DenseSolution& s) {
  std::ostringstream os;
  char buf[64];
  auto g = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "# palmsdp oracle fixture\n";
  os << "version 1\n";
  os << "fval " << g(s.fval) << "\n";
  os << "max_kkt " << g(s.certified_kkt.max_kkt) << "\n";
  os << "lam " << s.lam.size();
  for (Eigen::Index i = 0; i < s.lam.size(); ++i) os << " " << g(s.lam[i]);
  os << "\nmu " << s.mu.size();
  for (Eigen::Index i = 0; i < s.mu.size(); ++i) os << " " << g(s.mu[i]);
  os << "\n";
  for (std::size_t k = 0; k < s.X.size(); ++k) {
    const Matrix& X = s.X[k];
    os << "X " << k + 1 << " " << X.rows() << " " << X.cols() << "\n";
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < X.cols(); ++j) os << (j ? " " : "") << g(X(i, j));
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank SDP solver", "palmsdp"};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve an SDPA sparse file ('-' reads stdin)");
  std::string solve_file;
  SolveOptions opt;
  std::string precond = "auto", stage = "auto", report_out;
  bool trace = false;
  solve_cmd->add_option("file", solve_file, "problem file")->required();
  solve_cmd->add_option("--tol", opt.tol, "KKT tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iters", opt.max_iters, "inner iteration budget")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-time", opt.max_time, "time budget in seconds")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--verbose", opt.verbose, "progress output on stderr (0 or 1)");
  solve_cmd->add_option("--precond", precond, "auto|exact|ichol|identity")
      ->check(CLI::IsMember({"auto", "exact", "ichol", "identity"}));
  solve_cmd->add_option("--stage", stage, "auto|palm-only|feasible-only")
      ->check(CLI::IsMember({"auto", "palm-only", "feasible-only"}));
  solve_cmd->add_option("--seed", opt.seed, "random seed");
  solve_cmd->add_option("--out", report_out, "report path (stdout by default)");
  solve_cmd->add_flag("--trace", trace, "include the per-iteration trace in the report");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Write a generated instance in SDPA sparse form");
  std::string family, graph, edges_file, loss = "square", gen_out;
  bool plus = false;
  int ncm_n = 10;
  std::uint64_t gen_seed = 1;
  double delta = 0.1;
  gen_cmd->add_option("family", family, "theta|maxcut|ncm")->required()->check(CLI::IsMember({"theta", "maxcut", "ncm"}));
  gen_cmd->add_option("--graph", graph, "c5, petersen, cycle:N, path:N, complete:N, empty:N");
  gen_cmd->add_option("--edges", edges_file, "Gset edge list ('-' reads stdin)");
  gen_cmd->add_flag("--plus", plus, "theta with nonnegative off-diagonal entries");
  gen_cmd->add_option("--n", ncm_n, "ncm dimension")->check(CLI::Range(2, 100000));
  gen_cmd->add_option("--loss", loss, "square|huber")->check(CLI::IsMember({"square", "huber"}));
  gen_cmd->add_option("--seed", gen_seed, "ncm seed");
  gen_cmd->add_option("--delta", delta, "Huber threshold")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen_out, "output path (stdout by default)");

  // oracle solve
  auto* oracle_cmd = app.add_subcommand("oracle", "Dense reference solver");
  oracle_cmd->require_subcommand(1);
  auto* oracle_solve = oracle_cmd->add_subcommand("solve", "Solve densely and print a fixture");
  std::string oracle_file, oracle_out;
  double oracle_tol = 1e-9;
  oracle_solve->add_option("file", oracle_file, "problem file")->required();
  oracle_solve->add_option("--tol", oracle_tol, "KKT tolerance")->check(CLI::PositiveNumber);
  oracle_solve->add_option("--out", oracle_out, "fixture path (stdout by default)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*solve_cmd) {
      opt.precond = parse_weight_policy(precond);
      opt.stage = parse_stage_option(stage);
      opt.log = &err;
      const ConicProblem prob = parse_sdpa(slurp(solve_file, in));
      const RunHistory h = solve(prob, opt);
      emit(to_json(make_report(h, opt, describe(prob), trace)), report_out, out);
      switch (h.status) {
        case SolveStatus::Converged: return 0;
        case SolveStatus::BudgetExhausted: return 2;
        case SolveStatus::Failed: break;
      }
      err << "solve failed: " << h.message << "\n";
      return 1;
    }
    if (*gen_cmd) {
      ConicProblem prob;
      if (family == "ncm") {
        prob = gen_ncm(ncm_n, loss == "huber" ? LossKind::Huber : LossKind::Square, gen_seed, delta);
      } else {
        if (graph.empty() == edges_file.empty()) throw InvalidInput("gen: give exactly one of --graph or --edges");
        const Graph g = graph.empty() ? parse_gset(slurp(edges_file, in)) : named_graph(graph);
        prob = family == "theta" ? gen_theta(g, plus ? ThetaVariant::Plus : ThetaVariant::Plain) : gen_maxcut(g);
      }
      emit(write_sdpa(prob), gen_out, out);
      return 0;
    }
    if (*oracle_solve) {
      const ConicProblem prob = parse_sdpa(slurp(oracle_file, in));
      OracleOptions o;
      o.tol = oracle_tol;
      emit(fixture_text(solve_dense(prob, o)), oracle_out, out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace palmsdp
