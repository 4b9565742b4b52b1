#include "rulerec/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rulerec/format.hpp"

namespace rulerec {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string feature_header(std::size_t d) {
  std::string h;
  for (std::size_t j = 0; j < d; ++j) h += "f" + std::to_string(j) + ",";
  return h;
}

// Leading columns named f0, f1, ... in order.
std::size_t feature_count(const CsvTable& t) {
  std::size_t d = 0;
  while (d < t.header.size() && t.header[d] == "f" + std::to_string(d)) ++d;
  return d;
}

std::size_t as_index(const CsvTable& t, std::size_t r, std::size_t col) {
  const double v = t.rows[r][col];
  if (v < 0.0 || v != std::floor(v) || v > 1e9) {
    t.fail(r, t.header[col], "expected a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

DataError::DataError(const std::string& file, std::size_t line, const std::string& column,
                     const std::string& what)
    : Error(file + ": line " + std::to_string(line) +
            (column.empty() ? "" : ", column '" + column + "'") + ": " + what) {}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError(file, 1, name, "missing column");
  return static_cast<std::size_t>(it - header.begin());
}

void CsvTable::fail(std::size_t row, const std::string& column, const std::string& what) const {
  throw DataError(file, row < lines.size() ? lines[row] : 0, column, what);
}

CsvTable parse_csv(const std::string& text, const std::string& file) {
  CsvTable t;
  t.file = file;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string c = line.substr(1);
      if (!c.empty() && c.front() == ' ') c.erase(0, 1);
      t.comments.push_back(std::move(c));
      continue;
    }
    auto fields = split_fields(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError(file, lineno, "",
                      "expected " + std::to_string(t.header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_double(fields[j], row[j]) || !std::isfinite(row[j])) {
        throw DataError(file, lineno, t.header[j], "not a finite number: '" + fields[j] + "'");
      }
    }
    t.rows.push_back(std::move(row));
    t.lines.push_back(lineno);
  }
  if (!have_header) throw DataError(file, lineno, "", "missing header line");
  return t;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("failed writing '" + path + "'");
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

std::string records_to_csv(const std::vector<HistoryRecord>& records) {
  const std::size_t d = records.empty() ? 0 : records.front().features.size();
  std::string out = feature_header(d) + "action,outcome\n";
  for (const auto& r : records) {
    for (double v : r.features) out += format_double(v) + ",";
    out += std::to_string(r.action) + "," + std::to_string(r.outcome) + "\n";
  }
  return out;
}

std::vector<HistoryRecord> records_from_csv(const CsvTable& t, std::size_t* n_actions_hint) {
  const std::size_t d = feature_count(t);
  const std::size_t action_col = t.column("action");
  const std::size_t outcome_col = t.column("outcome");
  if (action_col != d || outcome_col != d + 1 || t.header.size() != d + 2) {
    throw DataError(t.file, 1, "", "expected header f0..f{d-1},action,outcome");
  }
  std::vector<HistoryRecord> out;
  out.reserve(t.rows.size());
  std::size_t max_action = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    HistoryRecord rec;
    rec.features.assign(t.rows[r].begin(), t.rows[r].begin() + d);
    rec.action = as_index(t, r, action_col);
    const double o = t.rows[r][outcome_col];
    if (o != 0.0 && o != 1.0) t.fail(r, "outcome", "outcome must be 0 or 1");
    rec.outcome = static_cast<int>(o);
    max_action = std::max(max_action, rec.action);
    out.push_back(std::move(rec));
  }
  if (n_actions_hint) *n_actions_hint = out.empty() ? 0 : max_action + 1;
  return out;
}

std::string table_to_csv(const ProbTable& table) {
  std::string out;
  for (std::size_t a = 0; a < table.actions(); ++a) {
    out += (a ? ",p" : "p") + std::to_string(a);
  }
  out += "\n";
  for (std::size_t n = 0; n < table.rows(); ++n) {
    const auto row = table.row(n);
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (a) out += ",";
      out += format_double(row[a]);
    }
    out += "\n";
  }
  return out;
}

ProbTable table_from_csv(const CsvTable& t) {
  for (std::size_t a = 0; a < t.header.size(); ++a) {
    if (t.header[a] != "p" + std::to_string(a)) {
      throw DataError(t.file, 1, t.header[a], "expected header p0..p{|A|-1}");
    }
  }
  if (t.header.size() < 2) throw DataError(t.file, 1, "", "need at least 2 action columns");
  std::vector<double> flat;
  flat.reserve(t.rows.size() * t.header.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t a = 0; a < t.header.size(); ++a) {
      const double p = t.rows[r][a];
      if (p < 0.0 || p > 1.0) t.fail(r, t.header[a], "probability outside [0, 1]");
      flat.push_back(p);
    }
  }
  return ProbTable(t.rows.size(), t.header.size(), std::move(flat));
}

std::string weighted_to_csv(const WeightedSet& set, const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "# actions=" + std::to_string(set.n_actions()) + "\n";
  out += feature_header(set.dim()) + "action,weight\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (double v : set.features(i)) out += format_double(v) + ",";
    out += std::to_string(set.action(i)) + "," + format_double(set.weight(i)) + "\n";
  }
  return out;
}

WeightedSet weighted_from_csv(const CsvTable& t) {
  const std::size_t d = feature_count(t);
  const std::size_t action_col = t.column("action");
  const std::size_t weight_col = t.column("weight");
  if (action_col != d || weight_col != d + 1 || t.header.size() != d + 2) {
    throw DataError(t.file, 1, "", "expected header f0..f{d-1},action,weight");
  }
  std::size_t n_actions = 0;
  for (const auto& c : t.comments) {
    if (c.rfind("actions=", 0) == 0) {
      double v;
      if (!parse_double(c.substr(8), v) || v < 1.0 || v != std::floor(v)) {
        throw DataError(t.file, 0, "", "bad 'actions=' comment");
      }
      n_actions = static_cast<std::size_t>(v);
    }
  }
  if (n_actions == 0) {
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      n_actions = std::max(n_actions, as_index(t, r, action_col) + 1);
    }
  }
  WeightedSet out(d, n_actions);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t a = as_index(t, r, action_col);
    if (a >= n_actions) t.fail(r, "action", "action exceeds declared action count");
    const double w = t.rows[r][weight_col];
    if (w < 0.0) t.fail(r, "weight", "weight must be >= 0");
    out.add(std::span<const double>(t.rows[r].data(), d), a, w);
  }
  return out;
}

}  // namespace rulerec
