#include "cip/envs/transition_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cip/numkit/error.hpp"

namespace cip {

namespace {

nlohmann::json to_array(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector from_array(const nlohmann::json& j, const char* field, std::int64_t line) {
  if (!j.is_array()) throw ParseError(std::string("field '") + field + "' must be an array", line);
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string("non-numeric entry in '") + field + "'", line);
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  if (!v.allFinite()) throw ParseError(std::string("non-finite entry in '") + field + "'", line);
  return v;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string transition_to_json_line(const Transition& t, bool with_synthetic_flag) {
  nlohmann::ordered_json j;
  j["s"] = to_array(t.s);
  j["a"] = to_array(t.a);
  j["r"] = t.r;
  j["s_next"] = to_array(t.s_next);
  j["done"] = t.done;
  if (with_synthetic_flag) j["synthetic"] = t.synthetic;
  return j.dump();
}

Transition transition_from_json_line(const std::string& line, std::int64_t line_number) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_number);
  }
  if (!j.is_object()) throw ParseError("row is not a JSON object", line_number);
  for (const char* key : {"s", "a", "r", "s_next", "done"}) {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", line_number);
  }
  Transition t;
  t.s = from_array(j["s"], "s", line_number);
  t.a = from_array(j["a"], "a", line_number);
  t.s_next = from_array(j["s_next"], "s_next", line_number);
  if (!j["r"].is_number()) throw ParseError("field 'r' must be a number", line_number);
  t.r = j["r"].get<double>();
  if (!std::isfinite(t.r)) throw ParseError("non-finite reward", line_number);
  if (!j["done"].is_boolean()) throw ParseError("field 'done' must be a boolean", line_number);
  t.done = j["done"].get<bool>();
  if (j.contains("synthetic")) t.synthetic = j["synthetic"].get<bool>();
  if (t.s.size() != t.s_next.size()) throw ParseError("'s' and 's_next' lengths differ", line_number);
  return t;
}

void write_transitions_jsonl(std::ostream& out, const std::vector<Transition>& transitions,
                             bool with_synthetic_flag) {
  for (const auto& t : transitions) out << transition_to_json_line(t, with_synthetic_flag) << '\n';
}

std::vector<Transition> read_transitions_jsonl(std::istream& in) {
  std::vector<Transition> out;
  std::string line;
  std::int64_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Transition t = transition_from_json_line(line, n);
    if (!out.empty() && (t.s.size() != out.front().s.size() || t.a.size() != out.front().a.size())) {
      throw ParseError("row dimensions differ from the first row", n);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void save_transitions(const std::string& path, const std::vector<Transition>& transitions,
                      bool with_synthetic_flag) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot open " + path + " for writing");
  write_transitions_jsonl(f, transitions, with_synthetic_flag);
  if (!f) throw Error("write failed for " + path);
}

std::vector<Transition> load_transitions(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  return read_transitions_jsonl(f);
}

std::vector<std::string> sem_header(Index p) {
  std::vector<std::string> h;
  for (Index j = 0; j < p; ++j) h.push_back("x" + std::to_string(j + 1));
  return h;
}

void write_matrix_csv(std::ostream& out, const Matrix& data, const std::vector<std::string>& header) {
  if (static_cast<Index>(header.size()) != data.cols()) {
    throw ConfigError("csv: header width does not match the data");
  }
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index k = 0; k < data.cols(); ++k) out << (k ? "," : "") << format_double(data(i, k));
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Matrix read_matrix_csv(std::istream& in, std::vector<std::string>* header) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: missing header row", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> names = split_csv(line);
  if (names.empty()) throw ParseError("csv: empty header", 1);
  if (header) *header = names;
  std::vector<double> values;
  std::int64_t n = 1;
  Index rows = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != names.size()) throw ParseError("csv: ragged row", n);
    for (const auto& f : fields) {
      double v = 0.0;
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ParseError("csv: bad number '" + f + "'", n);
      }
      values.push_back(v);
    }
    ++rows;
  }
  Matrix out(rows, static_cast<Index>(names.size()));
  if (rows > 0) std::copy(values.begin(), values.end(), out.data());
  return out;
}

}  // namespace cip
