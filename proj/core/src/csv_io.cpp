#include "smfpca/csv_io.hpp"

#include "smfpca/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

namespace smfpca {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_number(const std::string& text, const std::string& file, std::size_t line, const char* column) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last)
    throw DataError(file, line, std::string("column '") + column + "' is not a number: '" + text + "'");
  if (!std::isfinite(v)) throw DataError(file, line, std::string("column '") + column + "' is not finite");
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string to_string(Transform t) {
  switch (t) {
    case Transform::Sqrt: return "sqrt";
    case Transform::Log2: return "log2";
    default: return "none";
  }
}

Transform transform_from_string(const std::string& name) {
  if (name == "none") return Transform::None;
  if (name == "sqrt") return Transform::Sqrt;
  if (name == "log2") return Transform::Log2;
  throw InvalidArgument("unknown transform '" + name + "' (expected sqrt, log2 or none)");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SparseDataset parse_csv(std::istream& in, const std::string& label, const IngestOptions& options) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    header = split_row(line);
    break;
  }
  if (header.empty()) throw EmptyInput(label, lineno, "file is empty; expected a header row");

  const char* required[] = {"subject_id", "variable", "t", "y"};
  std::size_t col[4];
  for (int c = 0; c < 4; ++c) {
    const auto it = std::find(header.begin(), header.end(), required[c]);
    if (it == header.end()) throw DataError(label, lineno, std::string("missing required column '") + required[c] + "'");
    col[c] = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t width = *std::max_element(col, col + 4) + 1;

  SparseDataset data;
  std::unordered_map<std::string, std::size_t> subject_at, variable_at;
  std::vector<std::vector<std::vector<Observation>>> series;  // subject -> variable -> obs

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_row(line);
    if (fields.size() < width) throw DataError(label, lineno, "row has too few columns");
    const std::string& sid = fields[col[0]];
    const std::string& var = fields[col[1]];
    if (sid.empty()) throw DataError(label, lineno, "empty subject_id");
    if (var.empty()) throw DataError(label, lineno, "empty variable name");
    const double t = parse_number(fields[col[2]], label, lineno, "t");
    double y = parse_number(fields[col[3]], label, lineno, "y");

    if (const auto tr = options.transforms.find(var); tr != options.transforms.end()) {
      if (tr->second == Transform::Sqrt) {
        if (y < 0.0) throw DataError(label, lineno, "sqrt transform of a negative value");
        y = std::sqrt(y);
      } else if (tr->second == Transform::Log2) {
        if (!(y > 0.0)) throw DataError(label, lineno, "log2 transform of a nonpositive value");
        y = std::log2(y);
      }
    }

    auto [vit, vnew] = variable_at.try_emplace(var, data.variables.size());
    if (vnew) {
      data.variables.push_back({var, {t, t}});
      for (auto& s : series) s.emplace_back();
    }
    auto [sit, snew] = subject_at.try_emplace(sid, data.subjects.size());
    if (snew) {
      data.subjects.push_back({sid, {}});
      series.emplace_back(data.variables.size());
    }
    Interval& dom = data.variables[vit->second].domain;
    dom.lo = std::min(dom.lo, t);
    dom.hi = std::max(dom.hi, t);
    series[sit->second][vit->second].push_back({t, y});
  }
  if (data.subjects.empty()) throw EmptyInput(label, lineno, "no observations found");

  for (auto& v : data.variables) {
    if (const auto d = options.domains.find(v.name); d != options.domains.end()) {
      if (!(d->second.lo < d->second.hi)) throw InvalidArgument("domain of variable '" + v.name + "' is empty");
      v.domain = d->second;
    }
  }
  for (const auto& [name, _] : options.transforms)
    if (!variable_at.count(name)) throw InvalidArgument("transform given for unknown variable '" + name + "'");

  SparseDataset out;
  out.variables = data.variables;
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    auto& s = series[i];
    std::set<double> visits;
    for (auto& obs : s) {
      std::stable_sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) { return a.t < b.t; });
      for (const auto& o : obs) visits.insert(o.t);
    }
    if (visits.size() < options.min_visits) continue;
    out.subjects.push_back({data.subjects[i].id, std::move(s)});
  }
  if (out.subjects.empty()) throw DataError(label, lineno, "no subject has the required number of visits");
  out.validate();
  return out;
}

SparseDataset read_csv(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw FileAccessError(path, 0, "cannot open file");
  return parse_csv(in, path, options);
}

void write_csv(const SparseDataset& data, std::ostream& out) {
  out << "subject_id,variable,t,y\n";
  for (const auto& s : data.subjects) {
    const std::string sid = quote_if_needed(s.id);
    for (std::size_t k = 0; k < data.num_variables(); ++k) {
      const std::string var = quote_if_needed(data.variables[k].name);
      for (const auto& o : s.series[k]) out << sid << ',' << var << ',' << format_double(o.t) << ',' << format_double(o.y) << '\n';
    }
  }
}

void write_csv(const SparseDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileAccessError(path, 0, "cannot open file for writing");
  write_csv(data, out);
  if (!out) throw FileAccessError(path, 0, "write failed");
}

}  // namespace smfpca
