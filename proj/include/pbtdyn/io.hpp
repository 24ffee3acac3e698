#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "pbtdyn/core.hpp"
#include "pbtdyn/driver.hpp"

namespace pbtdyn {

/// Fixed "%.12g" rendering so repeated runs give byte-identical files.
std::string format_number(double x);

/// One row per record. Extra columns are the sorted union of all extra keys;
/// a record without a key leaves the cell empty.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& records);

/// Columns: generation, id, theta*, h*.
void write_snapshots_csv(std::ostream& out, const std::vector<Snapshot>& snapshots);
void write_snapshots_csv(const std::filesystem::path& path,
                         const std::vector<Snapshot>& snapshots);

/// Generic numeric table.
void write_table_csv(const std::filesystem::path& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pbtdyn
