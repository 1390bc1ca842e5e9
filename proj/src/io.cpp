#include "gimt_cdm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gimt_cdm {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(path.string() + ": cannot open file");
  }
  return in;
}

} // namespace

BinaryMatrix read_binary_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<int>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(trim(line));
    std::vector<int> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string f = trim(fields[c]);
      if (f != "0" && f != "1") {
        throw ParseError(source + ":" + std::to_string(line_no) + ": column " + std::to_string(c + 1) +
                         ": expected 0 or 1, got '" + f + "'");
      }
      row.push_back(f == "1" ? 1 : 0);
    }
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ParseError(source + ": no data rows");
  }
  return BinaryMatrix::from_rows(rows);
}

BinaryMatrix read_binary_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_binary_csv(in, path.string());
}

void write_binary_csv(std::ostream& out, const BinaryMatrix& m) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << static_cast<int>(m(r, c));
    }
    out << '\n';
  }
}

ResponseMatrix read_responses(const std::filesystem::path& path) {
  return ResponseMatrix(read_binary_csv(path));
}

QMatrix read_qmatrix(const std::filesystem::path& path) {
  return QMatrix(read_binary_csv(path));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ParseError(context + ": not a number: '" + t + "'");
  }
  return v;
}

ItemParams read_item_params(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  std::vector<double> flat;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (t != "item,slope,intercept") {
        throw ParseError(source + ":" + std::to_string(line_no) + ": expected header 'item,slope,intercept'");
      }
      continue;
    }
    const auto fields = split_fields(t);
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() != 3) {
      throw ParseError(where + ": expected 3 columns, got " + std::to_string(fields.size()));
    }
    const int expected_item = static_cast<int>(flat.size() / 2) + 1;
    if (trim(fields[0]) != std::to_string(expected_item)) {
      throw ParseError(where + ": expected item " + std::to_string(expected_item));
    }
    flat.push_back(parse_double(fields[1], where));
    flat.push_back(parse_double(fields[2], where));
  }
  if (flat.empty()) {
    throw ParseError(source + ": no parameter rows");
  }
  Vector v = Eigen::Map<Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  if (!v.allFinite()) {
    throw ParseError(source + ": parameters must be finite");
  }
  return ItemParams(std::move(v));
}

ItemParams read_item_params(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_item_params(in, path.string());
}

void write_item_params(std::ostream& out, const ItemParams& beta) {
  out << "item,slope,intercept\n";
  for (int j = 0; j < beta.items(); ++j) {
    out << (j + 1) << ',' << format_double(beta.slope(j)) << ',' << format_double(beta.intercept(j)) << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << content;
  if (!out) {
    throw Error("write failed for " + path.string());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(path.string() + ": cannot open file");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace gimt_cdm
