#pragma once

// Metrics CSV (fixed column set) and a fixed-width human-readable table.

#include <qkd/errors.hpp>
#include <qkd/pipeline.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace qkd::report {

inline constexpr const char* kCsvHeader =
    "protocol,input_bits,qber,instances,key_bits,wall_time_s,key_rate_bps,blocks_failed";

struct Row {
  std::string protocol;
  std::uint64_t input_bits = 0;
  double qber = 0;
  std::uint64_t instances = 1;
  std::uint64_t key_bits = 0;
  double wall_time_s = 0;
  double key_rate_bps = 0;
  std::uint64_t blocks_failed = 0;
};

inline Row row_from(const pipeline::SessionMetrics& m) {
  return {to_string(m.protocol), m.input_bits, m.qber, m.instances, m.n_final, m.wall_time, m.key_rate,
          m.blocks_failed};
}

inline std::string csv_line(const Row& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%llu,%.6f,%llu,%llu,%.6f,%.3f,%llu", r.protocol.c_str(),
                static_cast<unsigned long long>(r.input_bits), r.qber, static_cast<unsigned long long>(r.instances),
                static_cast<unsigned long long>(r.key_bits), r.wall_time_s, r.key_rate_bps,
                static_cast<unsigned long long>(r.blocks_failed));
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<Row>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) os << csv_line(r) << '\n';
}

inline void write_csv(const std::string& path, const std::vector<Row>& rows) {
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path);
  write_csv(f, rows);
}

inline std::vector<Row> read_csv(std::istream& is, const std::string& name = "metrics") {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::io, name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kCsvHeader, ErrorKind::io, name + ": unexpected header");
  std::vector<Row> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    require(f.size() == 8, ErrorKind::io, name + ":" + std::to_string(lineno) + ": expected 8 columns");
    try {
      out.push_back({f[0], std::stoull(f[1]), std::stod(f[2]), std::stoull(f[3]), std::stoull(f[4]), std::stod(f[5]),
                     std::stod(f[6]), std::stoull(f[7])});
    } catch (const std::exception&) {
      fail(ErrorKind::io, name + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return out;
}

inline std::vector<Row> read_csv(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path);
  return read_csv(f, path);
}

/// Input size, QBER, instances, key rate, time: the benchmark columns, plus key length and failed blocks.
inline void write_table(std::ostream& os, const std::vector<Row>& rows) {
  os << std::left << std::setw(8) << "Proto" << std::right << std::setw(12) << "Input bits" << std::setw(9) << "QBER"
     << std::setw(11) << "Instances" << std::setw(12) << "Key bits" << std::setw(15) << "Key rate(Kbps)"
     << std::setw(12) << "Time (s)" << std::setw(10) << "Failed" << '\n';
  for (const auto& r : rows) {
    std::ostringstream q;
    q << std::fixed << std::setprecision(2) << 100.0 * r.qber << '%';
    os << std::left << std::setw(8) << r.protocol << std::right << std::setw(12) << r.input_bits << std::setw(9)
       << q.str() << std::setw(11) << r.instances << std::setw(12) << r.key_bits << std::setw(15) << std::fixed
       << std::setprecision(1) << r.key_rate_bps / 1000.0 << std::setw(12) << std::setprecision(3) << r.wall_time_s
       << std::setw(10) << r.blocks_failed << '\n';
    os.unsetf(std::ios::fixed);
  }
}

}  // namespace qkd::report
