#include "pbtdyn/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace pbtdyn {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

void indexed_header(std::ostream& out, const char* stem, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out << ',' << stem << k;
}

void values(std::ostream& out, const Vec& v, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    out << ',';
    if (k < v.size()) out << format_number(v[k]);
  }
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  std::size_t nh = 0, nt = 0;
  std::set<std::string> keys;
  for (const auto& r : records) {
    nh = std::max(nh, r.mean_h.size());
    nt = std::max(nt, r.mean_theta.size());
    for (const auto& [k, v] : r.extra) keys.insert(k);
  }
  out << "generation,sim_time,fitness_q10,fitness_median,fitness_q90";
  indexed_header(out, "mean_h", nh);
  indexed_header(out, "var_h", nh);
  out << ",phase";
  indexed_header(out, "mean_theta", nt);
  for (const auto& k : keys) out << ',' << k;
  out << '\n';
  for (const auto& r : records) {
    out << r.generation << ',' << format_number(r.sim_time) << ','
        << format_number(r.fitness_q10) << ',' << format_number(r.fitness_median)
        << ',' << format_number(r.fitness_q90);
    values(out, r.mean_h, nh);
    values(out, r.var_h, nh);
    out << ',' << r.phase;
    values(out, r.mean_theta, nt);
    for (const auto& k : keys) {
      out << ',';
      if (auto it = r.extra.find(k); it != r.extra.end()) out << format_number(it->second);
    }
    out << '\n';
  }
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& records) {
  auto out = open_out(path);
  write_metrics_csv(out, records);
}

void write_snapshots_csv(std::ostream& out, const std::vector<Snapshot>& snapshots) {
  std::size_t nt = 0, nh = 0;
  for (const auto& s : snapshots) {
    for (const auto& a : s.agents) {
      nt = std::max(nt, a.theta.size());
      nh = std::max(nh, a.h.size());
    }
  }
  out << "generation,id";
  indexed_header(out, "theta", nt);
  indexed_header(out, "h", nh);
  out << '\n';
  for (const auto& s : snapshots) {
    for (const auto& a : s.agents) {
      out << s.generation << ',' << a.id;
      values(out, a.theta, nt);
      values(out, a.h, nh);
      out << '\n';
    }
  }
}

void write_snapshots_csv(const std::filesystem::path& path,
                         const std::vector<Snapshot>& snapshots) {
  auto out = open_out(path);
  write_snapshots_csv(out, snapshots);
}

void write_table_csv(const std::filesystem::path& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw Error("table row width does not match header");
    for (std::size_t k = 0; k < row.size(); ++k) {
      out << (k ? "," : "") << format_number(row[k]);
    }
    out << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace pbtdyn
