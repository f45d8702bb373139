#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cip/envs/transition.hpp"

namespace cip {

/// One JSON object per line: {"s", "a", "r", "s_next", "done"} plus an
/// optional "synthetic" flag. Doubles are written with round-trip precision.
std::string transition_to_json_line(const Transition& t, bool with_synthetic_flag);
Transition transition_from_json_line(const std::string& line, std::int64_t line_number);

void write_transitions_jsonl(std::ostream& out, const std::vector<Transition>& transitions,
                             bool with_synthetic_flag = false);
/// Throws ParseError naming the 1-based line of the first malformed row.
std::vector<Transition> read_transitions_jsonl(std::istream& in);

void save_transitions(const std::string& path, const std::vector<Transition>& transitions,
                      bool with_synthetic_flag = false);
std::vector<Transition> load_transitions(const std::string& path);

/// Header row plus n rows of round-trip doubles.
void write_matrix_csv(std::ostream& out, const Matrix& data, const std::vector<std::string>& header);
/// Strict reader: every row must have exactly as many fields as the header.
Matrix read_matrix_csv(std::istream& in, std::vector<std::string>* header = nullptr);

std::vector<std::string> sem_header(Index p);

/// Shortest decimal string that parses back to the same double; "nan" for NaN.
std::string format_double(double x);

}  // namespace cip
