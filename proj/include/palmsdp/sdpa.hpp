#pragma once

#include <iosfwd>
#include <string>

#include "palmsdp/problem.hpp"

namespace palmsdp {

/// Parses SDPA sparse text. The SDPA dual form max <F0, Y> s.t.
/// <Fi, Y> = ci, Y >= 0 is read as min <C, X> s.t. <Ai, X> = bi with
/// C = -F0, Ai = Fi, b = c. Negative block sizes give nonnegative vector
/// blocks. Lines starting with "*%" carry extensions (free blocks, side
/// rows, loss objectives) described in docs/format.md; other comment lines
/// start with '"' or '*'. Throws ParseError with a 1-based line number.
ConicProblem parse_sdpa(const std::string& text);
ConicProblem read_sdpa(std::istream& in);
ConicProblem read_sdpa_file(const std::string& path);

/// Writes SDPA sparse text with 17 significant digits, so that parsing the
/// output reproduces the problem exactly. Throws InvalidInput for callback
/// objectives and custom side projectors.
std::string write_sdpa(const ConicProblem& prob);

/// Structural equality: blocks, maps (row by row), right-hand sides, side
/// bounds and objective data. Callback objectives never compare equal.
bool same_problem(const ConicProblem& a, const ConicProblem& b);

}  // namespace palmsdp
