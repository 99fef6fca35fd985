#pragma once

// CSV interchange: regret traces from `simulate`, aggregates from `sweep`.
// Numbers are printed with 12 significant digits; rows end in LF.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "harness.hpp"

namespace netband {

inline constexpr std::string_view kTraceHeader = "run_id,policy,N,A,s,T,rep,seed,t,inst_regret,cum_regret,phase";
inline constexpr std::string_view kSweepHeader = "axis_value,policy,mean_final_regret,std_final_regret";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Data rows for `traces`; run ids count up from `first_run_id`.
inline void write_trace_rows(std::ostream& out, std::span<const RegretTrace> traces, std::size_t first_run_id = 0) {
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const RegretTrace& tr = traces[r];
    const TraceMeta& m = tr.meta;
    const std::string prefix = std::to_string(first_run_id + r) + ',' + m.policy + ',' + std::to_string(m.units) + ',' +
                               std::to_string(m.arms) + ',' + std::to_string(m.sparsity) + ',' +
                               std::to_string(m.horizon) + ',' + std::to_string(m.rep) + ',' + std::to_string(m.seed) +
                               ',';
    for (std::size_t k = 0; k < tr.rounds.size(); ++k) {
      out << prefix << tr.rounds[k] << ',' << format_number(tr.inst[k]) << ',' << format_number(tr.cum[k]) << ','
          << phase_name(tr.phases[k]) << '\n';
    }
  }
}

inline void write_trace_csv(std::ostream& out, std::span<const RegretTrace> traces) {
  out << kTraceHeader << '\n';
  write_trace_rows(out, traces);
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points) {
  out << kSweepHeader << '\n';
  for (const auto& p : points) {
    if (p.error) continue;
    out << p.value << ',' << p.policy << ',' << format_number(p.mean_final) << ',' << format_number(p.std_final)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Reading

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct CsvTable {
  enum class Kind { trace, sweep };
  Kind kind = Kind::trace;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Strict decimal parse of a whole field.
inline double parse_number(const std::string& field, std::size_t line, std::string_view column) {
  if (field.empty()) throw CsvError(line, "empty " + std::string(column));
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw CsvError(line, std::string(column) + " '" + field + "' is not a number");
  }
  return v;
}

/// Reads a trace or sweep CSV, checking the header and the field count and
/// numeric columns of every row. A trailing CR on a line is tolerated.
inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line == kTraceHeader) {
        table.kind = CsvTable::Kind::trace;
      } else if (line == kSweepHeader) {
        table.kind = CsvTable::Kind::sweep;
      } else {
        throw CsvError(number, "unrecognized header '" + line + "'");
      }
      have_header = true;
      continue;
    }
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw CsvError(number, "blank line inside data");
    }
    auto fields = split_fields(line);
    const std::size_t expected = table.kind == CsvTable::Kind::trace ? 12 : 4;
    if (fields.size() != expected) {
      throw CsvError(number, "expected " + std::to_string(expected) + " fields, found " + std::to_string(fields.size()));
    }
    if (table.kind == CsvTable::Kind::trace) {
      static constexpr std::string_view names[] = {"run_id", "policy", "N",    "A",           "s",          "T",
                                                   "rep",    "seed",   "t",    "inst_regret", "cum_regret", "phase"};
      for (std::size_t c : {0, 2, 3, 4, 5, 6, 7, 8, 9, 10}) parse_number(fields[c], number, names[c]);
      if (fields[1].empty()) throw CsvError(number, "empty policy");
      const auto& ph = fields[11];
      if (ph != "explore" && ph != "commit" && ph != "epoch" && ph != "ucb") {
        throw CsvError(number, "unknown phase '" + ph + "'");
      }
    } else {
      if (fields[0].empty()) throw CsvError(number, "empty axis_value");
      if (fields[1].empty()) throw CsvError(number, "empty policy");
      parse_number(fields[2], number, "mean_final_regret");
      parse_number(fields[3], number, "std_final_regret");
    }
    table.rows.push_back(std::move(fields));
    table.lines.push_back(number);
  }
  if (!have_header) throw CsvError(number + 1, "missing header");
  if (table.rows.empty()) throw CsvError(number + 1, "no data rows");
  return table;
}

}  // namespace netband
