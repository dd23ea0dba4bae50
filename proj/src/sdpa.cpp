#include "palmsdp/sdpa.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "palmsdp/errors.hpp"

namespace palmsdp {

namespace {

struct Line {
  int number;
  std::string text;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

bool parse_double(const std::string& tok, double& v) {
  if (tok.empty()) return false;
  const char* b = tok.c_str();
  char* e = nullptr;
  errno = 0;
  v = std::strtod(b, &e);
  return e == b + tok.size() && !std::isnan(v);
}

bool parse_int(const std::string& tok, long& v) {
  if (tok.empty()) return false;
  const char* b = tok.c_str();
  char* e = nullptr;
  errno = 0;
  v = std::strtol(b, &e, 10);
  return e == b + tok.size() && errno == 0;
}

double need_double(const std::string& tok, int line, const char* what) {
  double v = 0.0;
  if (!parse_double(tok, v)) throw ParseError(line, std::string("expected a number for ") + what + ", got '" + tok + "'");
  return v;
}

long need_int(const std::string& tok, int line, const char* what) {
  long v = 0;
  if (!parse_int(tok, v)) throw ParseError(line, std::string("expected an integer for ") + what + ", got '" + tok + "'");
  return v;
}

std::string strip_punct(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '{' || c == '}' || c == '(' || c == ')') c = ' ';
  return s;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SideRow {
  double lower = 0.0, upper = 0.0;
  bool declared = false;
  std::vector<RowCoefficient> coefs;
};

}  // namespace

ConicProblem parse_sdpa(const std::string& text) {
  std::vector<Line> data;
  std::vector<Line> ext;
  {
    std::istringstream is(text);
    std::string s;
    int n = 0;
    while (std::getline(is, s)) {
      ++n;
      if (!s.empty() && s.back() == '\r') s.pop_back();
      const auto first = s.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (s.compare(first, 2, "*%") == 0) {
        ext.push_back({n, s.substr(first + 2)});
        continue;
      }
      if (s[first] == '"' || s[first] == '*') continue;
      data.push_back({n, s});
    }
  }

  std::size_t pos = 0;
  auto next_line = [&](const char* what) -> const Line& {
    if (pos >= data.size()) {
      const int last = data.empty() ? 1 : data.back().number;
      throw ParseError(last, std::string("unexpected end of input while reading ") + what);
    }
    return data[pos++];
  };

  // Header values: the first token of their line, trailing text ignored.
  const Line& l_m = next_line("mDim");
  const auto t_m = split(strip_punct(l_m.text));
  const long m = need_int(t_m.empty() ? "" : t_m[0], l_m.number, "mDim");
  if (m < 0) throw ParseError(l_m.number, "mDim must be nonnegative");
  const Line& l_nb = next_line("nBlocks");
  const auto t_nb = split(strip_punct(l_nb.text));
  const long nb = need_int(t_nb.empty() ? "" : t_nb[0], l_nb.number, "nBlocks");
  if (nb < 1) throw ParseError(l_nb.number, "nBlocks must be positive");

  auto read_numbers = [&](long count, const char* what) {
    std::vector<std::pair<double, int>> vals;
    while (static_cast<long>(vals.size()) < count) {
      const Line& l = next_line(what);
      for (const auto& tok : split(strip_punct(l.text))) {
        if (static_cast<long>(vals.size()) == count) break;
        double v = 0.0;
        if (!parse_double(tok, v)) {
          if (tok[0] == '=') break;
          throw ParseError(l.number, std::string("bad token '") + tok + "' in " + what);
        }
        vals.push_back({v, l.number});
      }
    }
    return vals;
  };

  std::vector<BlockSpec> specs;
  for (const auto& [v, line] : read_numbers(nb, "blockStruct")) {
    if (v != std::floor(v) || v == 0.0) throw ParseError(line, "block sizes must be nonzero integers");
    specs.push_back(v > 0 ? BlockSpec{BlockKind::Psd, static_cast<int>(v)}
                          : BlockSpec{BlockKind::NonnegVector, static_cast<int>(-v)});
  }
  std::vector<double> c;
  for (const auto& [v, line] : read_numbers(m, "the c vector")) c.push_back(v);

  // Extensions.
  std::map<long, SideRow> side;
  bool has_loss = false;
  WeightedLoss loss;
  std::vector<std::tuple<int, int, double, double, int>> loss_entries;
  for (const auto& l : ext) {
    const auto t = split(l.text);
    if (t.empty()) continue;
    const std::string& kw = t[0];
    auto block_arg = [&](const std::string& tok) {
      const long k = need_int(tok, l.number, "block number");
      if (k < 1 || k > nb) throw ParseError(l.number, "block number out of range");
      return static_cast<int>(k - 1);
    };
    if (kw == "palmsdp-ext") {
      continue;
    } else if (kw == "free") {
      if (t.size() != 2) throw ParseError(l.number, "usage: *% free <block>");
      const int k = block_arg(t[1]);
      if (specs[k].is_psd()) throw ParseError(l.number, "only diagonal blocks can be declared free");
      specs[k].kind = BlockKind::FreeVector;
    } else if (kw == "side") {
      if (t.size() != 4) throw ParseError(l.number, "usage: *% side <row> <lower> <upper>");
      const long r = need_int(t[1], l.number, "side row");
      if (r < 1) throw ParseError(l.number, "side rows are numbered from 1");
      auto& row = side[r];
      if (row.declared) throw ParseError(l.number, "side row declared twice");
      row.declared = true;
      row.lower = need_double(t[2], l.number, "lower bound");
      row.upper = need_double(t[3], l.number, "upper bound");
      if (!(row.lower <= row.upper)) throw ParseError(l.number, "side row lower bound exceeds upper bound");
    } else if (kw == "sidecoef") {
      if (t.size() != 6) throw ParseError(l.number, "usage: *% sidecoef <row> <block> <i> <j> <value>");
      const long r = need_int(t[1], l.number, "side row");
      if (r < 1) throw ParseError(l.number, "side rows are numbered from 1");
      const int k = block_arg(t[2]);
      long i = need_int(t[3], l.number, "i"), j = need_int(t[4], l.number, "j");
      if (i > j) std::swap(i, j);
      if (i < 1 || j > specs[k].dim) throw ParseError(l.number, "entry index out of range");
      if (!specs[k].is_psd() && i != j) throw ParseError(l.number, "diagonal block entries need i == j");
      side[r].coefs.push_back({k, static_cast<int>(i - 1), static_cast<int>(j - 1), need_double(t[5], l.number, "value")});
    } else if (kw == "loss") {
      if (t.size() != 4) throw ParseError(l.number, "usage: *% loss <square|huber> <block> <delta>");
      if (has_loss) throw ParseError(l.number, "loss declared twice");
      has_loss = true;
      if (t[1] == "square")
        loss.kind = LossKind::Square;
      else if (t[1] == "huber")
        loss.kind = LossKind::Huber;
      else
        throw ParseError(l.number, "unknown loss '" + t[1] + "'");
      loss.block = block_arg(t[2]);
      if (!specs[loss.block].is_psd()) throw ParseError(l.number, "loss objectives need a PSD block");
      loss.delta = need_double(t[3], l.number, "delta");
    } else if (kw == "lossentry") {
      if (t.size() != 5) throw ParseError(l.number, "usage: *% lossentry <i> <j> <weight> <target>");
      long i = need_int(t[1], l.number, "i"), j = need_int(t[2], l.number, "j");
      if (i > j) std::swap(i, j);
      loss_entries.emplace_back(static_cast<int>(i), static_cast<int>(j), need_double(t[3], l.number, "weight"),
                                need_double(t[4], l.number, "target"), l.number);
    } else {
      throw ParseError(l.number, "unknown extension '" + kw + "'");
    }
  }

  ProblemBuilder builder;
  for (const auto& s : specs) builder.add_block(s.kind, s.dim);
  std::vector<std::vector<RowCoefficient>> rows(static_cast<std::size_t>(m));
  bool has_cost = false;
  for (; pos < data.size(); ++pos) {
    const Line& l = data[pos];
    const auto t = split(l.text);
    if (t.size() < 5) throw ParseError(l.number, "entry lines need: matno blkno i j value");
    const long mat = need_int(t[0], l.number, "matno");
    const long blk = need_int(t[1], l.number, "blkno");
    long i = need_int(t[2], l.number, "i"), j = need_int(t[3], l.number, "j");
    const double v = need_double(t[4], l.number, "value");
    if (mat < 0 || mat > m) throw ParseError(l.number, "matrix number out of range");
    if (blk < 1 || blk > nb) throw ParseError(l.number, "block number out of range");
    const auto& spec = specs[blk - 1];
    if (i > j) std::swap(i, j);
    if (i < 1 || j > spec.dim) throw ParseError(l.number, "entry index out of range for block " + std::to_string(blk));
    if (!spec.is_psd() && i != j) throw ParseError(l.number, "diagonal block entries need i == j");
    const int k = static_cast<int>(blk - 1);
    if (mat == 0) {
      builder.add_cost(k, static_cast<int>(i - 1), static_cast<int>(j - 1), -v);
      has_cost = has_cost || v != 0.0;
    } else {
      rows[mat - 1].push_back({k, static_cast<int>(i - 1), static_cast<int>(j - 1), v});
    }
  }
  for (long i = 0; i < m; ++i) builder.add_constraint(std::move(rows[i]), c[i]);

  long expect = 1;
  for (auto& [r, row] : side) {
    if (r != expect || !row.declared) {
      const int line = ext.empty() ? 1 : ext.back().number;
      throw ParseError(line, "side rows must be declared as 1..p without gaps (row " + std::to_string(expect) + ")");
    }
    builder.add_side_row(std::move(row.coefs), row.lower, row.upper);
    ++expect;
  }

  if (has_loss) {
    if (has_cost) {
      const int line = ext.empty() ? 1 : ext.front().number;
      throw ParseError(line, "a loss objective cannot be combined with objective matrix entries");
    }
    const int n = specs[loss.block].dim;
    loss.weight = Matrix::Zero(n, n);
    loss.target = Matrix::Zero(n, n);
    for (const auto& [i, j, w, tv, line] : loss_entries) {
      if (i < 1 || j > n) throw ParseError(line, "loss entry index out of range");
      loss.weight(i - 1, j - 1) = loss.weight(j - 1, i - 1) = w;
      loss.target(i - 1, j - 1) = loss.target(j - 1, i - 1) = tv;
    }
    builder.set_objective(Objective::weighted_loss(std::move(loss)));
  } else if (!loss_entries.empty()) {
    throw ParseError(std::get<4>(loss_entries.front()), "lossentry without a loss declaration");
  }

  try {
    return builder.build();
  } catch (const InvalidInput& e) {
    throw ParseError(data.empty() ? 1 : data.back().number, e.what());
  }
}

ConicProblem read_sdpa(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sdpa(ss.str());
}

ConicProblem read_sdpa_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_sdpa(in);
}

std::string write_sdpa(const ConicProblem& prob) {
  if (prob.objective.kind() == Objective::Kind::Callback)
    throw InvalidInput("write_sdpa: callback objectives cannot be written");
  if (prob.has_side() && prob.side.kind() == ConvexSet::Kind::Custom)
    throw InvalidInput("write_sdpa: custom side projectors cannot be written");

  std::ostringstream os;
  os << "* palmsdp\n";
  os << prob.num_eq() << "\n" << prob.blocks.size() << "\n";
  for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
    const auto& b = prob.blocks[k];
    os << (k ? " " : "") << (b.is_psd() ? b.dim : -b.dim);
  }
  os << "\n";
  for (int i = 0; i < prob.num_eq(); ++i) os << (i ? " " : "") << fmt(prob.b[i]);
  os << "\n";

  bool ext = false;
  auto ext_header = [&] {
    if (!ext) os << "*% palmsdp-ext 1\n";
    ext = true;
  };
  for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
    if (prob.blocks[k].kind == BlockKind::FreeVector) {
      ext_header();
      os << "*% free " << k + 1 << "\n";
    }
  }
  for (int r = 0; r < prob.num_side(); ++r) {
    ext_header();
    os << "*% side " << r + 1 << " " << fmt(prob.side.lower()[r]) << " " << fmt(prob.side.upper()[r]) << "\n";
    for (const auto& e : prob.B.row_coefficients(r))
      os << "*% sidecoef " << r + 1 << " " << e.block + 1 << " " << e.i + 1 << " " << e.j + 1 << " " << fmt(e.value)
         << "\n";
  }
  if (prob.objective.kind() == Objective::Kind::WeightedLoss) {
    ext_header();
    const auto& L = prob.objective.loss();
    os << "*% loss " << (L.kind == LossKind::Square ? "square" : "huber") << " " << L.block + 1 << " " << fmt(L.delta)
       << "\n";
    for (Eigen::Index j = 0; j < L.weight.cols(); ++j)
      for (Eigen::Index i = 0; i <= j; ++i)
        if (L.weight(i, j) != 0.0 || L.target(i, j) != 0.0)
          os << "*% lossentry " << i + 1 << " " << j + 1 << " " << fmt(L.weight(i, j)) << " " << fmt(L.target(i, j))
             << "\n";
  } else {
    const auto& costs = prob.objective.costs();
    for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
      if (prob.blocks[k].is_psd()) {
        for (const auto& e : costs[k].mat.entries())
          os << "0 " << k + 1 << " " << e.row + 1 << " " << e.col + 1 << " " << fmt(-e.value) << "\n";
      } else {
        for (Eigen::Index i = 0; i < costs[k].vec.size(); ++i)
          if (costs[k].vec[i] != 0.0) os << "0 " << k + 1 << " " << i + 1 << " " << i + 1 << " " << fmt(-costs[k].vec[i]) << "\n";
      }
    }
  }
  for (int i = 0; i < prob.num_eq(); ++i)
    for (const auto& e : prob.A.row_coefficients(i))
      os << i + 1 << " " << e.block + 1 << " " << e.i + 1 << " " << e.j + 1 << " " << fmt(e.value) << "\n";
  return os.str();
}

namespace {

std::vector<std::tuple<int, int, int, double>> sorted_row(const MultiMap& M, int i) {
  std::vector<std::tuple<int, int, int, double>> out;
  for (const auto& e : M.row_coefficients(i)) {
    const int a = std::min(e.i, e.j), b = std::max(e.i, e.j);
    out.emplace_back(e.block, a, b, e.value);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool same_map(const MultiMap& a, const MultiMap& b) {
  if (a.rows() != b.rows()) return false;
  for (int i = 0; i < a.rows(); ++i)
    if (sorted_row(a, i) != sorted_row(b, i)) return false;
  return true;
}

}  // namespace

bool same_problem(const ConicProblem& a, const ConicProblem& b) {
  if (a.blocks.size() != b.blocks.size()) return false;
  for (std::size_t k = 0; k < a.blocks.size(); ++k)
    if (a.blocks[k].kind != b.blocks[k].kind || a.blocks[k].dim != b.blocks[k].dim) return false;
  if (a.b != b.b || !same_map(a.A, b.A) || !same_map(a.B, b.B)) return false;
  if (a.has_side()) {
    if (a.side.kind() == ConvexSet::Kind::Custom || b.side.kind() == ConvexSet::Kind::Custom) return false;
    if (a.side.lower() != b.side.lower() || a.side.upper() != b.side.upper()) return false;
  }
  if (a.objective.kind() != b.objective.kind()) return false;
  switch (a.objective.kind()) {
    case Objective::Kind::Callback:
      return false;
    case Objective::Kind::WeightedLoss: {
      const auto& x = a.objective.loss();
      const auto& y = b.objective.loss();
      return x.block == y.block && x.kind == y.kind && x.delta == y.delta && x.weight == y.weight &&
             x.target == y.target;
    }
    case Objective::Kind::Linear:
      for (std::size_t k = 0; k < a.blocks.size(); ++k) {
        const auto& x = a.objective.costs()[k];
        const auto& y = b.objective.costs()[k];
        if (a.blocks[k].is_psd() ? !(x.mat == y.mat) : x.vec != y.vec) return false;
      }
      return true;
  }
  return false;
}

}  // namespace palmsdp
