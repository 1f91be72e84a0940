#include "jfsce/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "jfsce/types.hpp"

namespace jfsce {

namespace {

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Splits RFC-4180 text into records of fields.
std::vector<std::vector<std::string>> split_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
      }
      fields.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error("CSV: unterminated quoted field");
  if (any || !field.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  return records;
}

double to_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("CSV: bad number '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("CSV: bad integer '" + s + "'");
  return v;
}

}  // namespace

bool ResultRow::operator==(const ResultRow& o) const {
  return experiment == o.experiment && method == o.method && sweep_name == o.sweep_name &&
         same(sweep_value, o.sweep_value) && trials == o.trials && same(mse_linear, o.mse_linear) &&
         same(mse_db, o.mse_db) && same(nmse_db, o.nmse_db) && same(time_s, o.time_s) &&
         same(iters, o.iters) && same(boundary_hit_rate, o.boundary_hit_rate) && failures == o.failures;
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += quote(r.experiment) + ',' + quote(r.method) + ',' + quote(r.sweep_name) + ',' +
           format_number(r.sweep_value) + ',' + std::to_string(r.trials) + ',' +
           format_number(r.mse_linear) + ',' + format_number(r.mse_db) + ',' +
           format_number(r.nmse_db) + ',' + format_number(r.time_s) + ',' + format_number(r.iters) +
           ',' + format_number(r.boundary_hit_rate) + ',' + std::to_string(r.failures) + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  const auto records = split_records(text);
  if (records.empty()) throw Error("CSV: missing header");
  std::string header;
  for (std::size_t i = 0; i < records[0].size(); ++i) header += (i ? "," : "") + records[0][i];
  if (header != kCsvHeader) throw Error("CSV: unexpected header '" + header + "'");
  std::vector<ResultRow> rows;
  for (std::size_t n = 1; n < records.size(); ++n) {
    const auto& f = records[n];
    if (f.size() != 12) throw Error("CSV: record " + std::to_string(n) + " has " +
                                    std::to_string(f.size()) + " fields");
    ResultRow r;
    r.experiment = f[0];
    r.method = f[1];
    r.sweep_name = f[2];
    r.sweep_value = to_double(f[3]);
    r.trials = to_int(f[4]);
    r.mse_linear = to_double(f[5]);
    r.mse_db = to_double(f[6]);
    r.nmse_db = to_double(f[7]);
    r.time_s = to_double(f[8]);
    r.iters = to_double(f[9]);
    r.boundary_hit_rate = to_double(f[10]);
    r.failures = to_int(f[11]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << format_csv(rows);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace jfsce
