#include <cerrno>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "uaa/errors.hpp"
#include "uaa/problem.hpp"

namespace uaa {

namespace {

bool parse_double(const std::string& token, double* out) {
  if (token.empty()) {
    return false;
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || errno == ERANGE) {
    return false;
  }
  *out = v;
  return true;
}

bool parse_index(const std::string& token, long* out) {
  if (token.empty()) {
    return false;
  }
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end != token.c_str() + token.size() || errno == ERANGE) {
    return false;
  }
  *out = v;
  return true;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<int> d_override) {
  std::vector<SparseRow> rows;
  std::vector<double> labels;
  int max_index = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) {
      continue;  // blank
    }
    double label = 0.0;
    if (!parse_double(token, &label)) {
      throw ParseError(line_no, "malformed label '" + token + "'");
    }
    SparseRow row;
    long prev = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw ParseError(line_no, "expected index:value, got '" + token + "'");
      }
      long idx = 0;
      double val = 0.0;
      if (!parse_index(token.substr(0, colon), &idx) || idx < 1) {
        throw ParseError(line_no, "malformed feature index in '" + token + "'");
      }
      if (!parse_double(token.substr(colon + 1), &val)) {
        throw ParseError(line_no, "malformed feature value in '" + token + "'");
      }
      if (idx <= prev) {
        throw FormatError(line_no, "feature indices must be strictly increasing");
      }
      if (idx > std::numeric_limits<int>::max()) {
        throw ParseError(line_no, "feature index too large");
      }
      prev = idx;
      row.emplace_back(static_cast<int>(idx - 1), val);
      max_index = std::max(max_index, static_cast<int>(idx));
    }
    rows.push_back(std::move(row));
    labels.push_back(label > 0 ? 1.0 : -1.0);
  }
  if (rows.empty()) {
    throw EmptyDatasetError();
  }
  int d = max_index;
  if (d_override) {
    if (*d_override < max_index) {
      throw DomainError("dimension override " + std::to_string(*d_override) +
                        " is smaller than the largest feature index " + std::to_string(max_index));
    }
    d = *d_override;
  }
  return Dataset(std::move(rows), std::move(labels), d);
}

Dataset load_libsvm(const std::string& path, std::optional<int> d_override) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open dataset '" + path + "'");
  }
  return parse_libsvm(in, d_override);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  char buf[64];
  for (int i = 0; i < data.n(); ++i) {
    out << (data.labels()[i] > 0 ? "+1" : "-1");
    for (const auto& [idx, val] : data.rows()[i]) {
      std::snprintf(buf, sizeof(buf), " %d:%.17g", idx + 1, val);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace uaa
