#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rulerec/core.hpp"

namespace rulerec {

// Malformed tabular data. The message names the file, line and column.
class DataError : public Error {
 public:
  DataError(const std::string& file, std::size_t line, const std::string& column,
            const std::string& what);
};

// Parsed CSV: '#' lines are collected as comments, the first other line is
// the header, every remaining non-blank line is a row of doubles.
struct CsvTable {
  std::string file;
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  std::size_t column(const std::string& name) const;
  [[noreturn]] void fail(std::size_t row, const std::string& column,
                         const std::string& what) const;
};

CsvTable parse_csv(const std::string& text, const std::string& file);
CsvTable read_csv(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Records: f0..f{d-1},action,outcome
std::string records_to_csv(const std::vector<HistoryRecord>& records);
std::vector<HistoryRecord> records_from_csv(const CsvTable& table, std::size_t* n_actions_hint);

// Probability tables: p0..p{|A|-1}
std::string table_to_csv(const ProbTable& table);
ProbTable table_from_csv(const CsvTable& table);

// Weighted sets: f0..f{d-1},action,weight. The action count travels in an
// "actions=<n>" comment; without it, it is inferred as max action + 1.
std::string weighted_to_csv(const WeightedSet& set,
                            const std::vector<std::string>& comments = {});
WeightedSet weighted_from_csv(const CsvTable& table);

}  // namespace rulerec
