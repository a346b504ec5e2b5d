#include "abcfb/trace.hpp"

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "abcfb/errors.hpp"

namespace abcfb {

namespace {

constexpr const char* kHeader = "k,F,residual,lyapunov,step_norm_sq,staleness";

// Shortest representation that round-trips exactly.
std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw StructuralError("bad real in trace CSV: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw StructuralError("bad integer in trace CSV: '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << kHeader << "\r\n";
  for (const TraceRecord& r : trace.records) {
    os << r.k << ',' << format_double(r.F) << ',';
    if (r.residual) os << format_double(*r.residual);
    os << ',';
    if (r.lyapunov) os << format_double(*r.lyapunov);
    os << ',';
    if (r.step_norm_sq) os << format_double(*r.step_norm_sq);
    os << ',';
    if (r.staleness) os << *r.staleness;
    os << "\r\n";
  }
}

Trace read_trace_csv(std::istream& is) {
  Trace trace;
  std::string line;
  if (!std::getline(is, line)) throw StructuralError("empty trace CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw StructuralError("unexpected trace CSV header");

  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) throw StructuralError("trace CSV row must have 6 fields");
    TraceRecord r;
    r.k = parse_u64(fields[0]);
    r.F = parse_double(fields[1]);
    if (!fields[2].empty()) r.residual = parse_double(fields[2]);
    if (!fields[3].empty()) r.lyapunov = parse_double(fields[3]);
    if (!fields[4].empty()) r.step_norm_sq = parse_double(fields[4]);
    if (!fields[5].empty()) r.staleness = parse_u64(fields[5]);
    trace.records.push_back(std::move(r));
  }
  if (!trace.records.empty()) {
    trace.total_iters = trace.records.back().k;
    trace.final_F = trace.records.back().F;
    if (trace.records.back().residual) trace.final_residual = *trace.records.back().residual;
  }
  return trace;
}

}  // namespace abcfb
