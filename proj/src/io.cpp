#include "qvar/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace qvar {

namespace {

const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

int get_int(const Json& j, const char* key) {
  const Json& v = member(j, key);
  if (!v.is_number_integer()) throw FormatError(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::vector<double> get_reals(const Json& v, const char* what) {
  if (!v.is_array()) throw FormatError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const Json& x : v) {
    if (!x.is_number()) throw FormatError(std::string(what) + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

Json to_json(const QPoint& p) {
  Json vals = Json::array();
  for (int l = 0; l < p.q(); ++l) {
    const auto v = p.value(l);
    vals.push_back(std::vector<double>(v.begin(), v.end()));
  }
  return Json{{"q", p.q()}, {"n", p.n()}, {"values", vals}};
}

QPoint qpoint_from_json(const Json& j) {
  const int q = get_int(j, "q"), n = get_int(j, "n");
  const Json& vals = member(j, "values");
  if (q < 1 || n < 1 || !vals.is_array() || static_cast<int>(vals.size()) != q)
    throw FormatError("QPoint values do not match q");
  std::vector<double> flat;
  for (const Json& v : vals) {
    const auto x = get_reals(v, "QPoint value");
    if (static_cast<int>(x.size()) != n) throw FormatError("QPoint value does not match n");
    flat.insert(flat.end(), x.begin(), x.end());
  }
  return QPoint(q, n, std::move(flat));
}

Json to_json(const Grid& g) {
  return Json{{"m", g.m}, {"origin", g.origin}, {"h", g.h}, {"extents", g.extents}};
}

Grid grid_from_json(const Json& j) {
  const int m = get_int(j, "m");
  const auto origin = get_reals(member(j, "origin"), "grid origin");
  const Json& h = member(j, "h");
  if (!h.is_number()) throw FormatError("grid spacing must be a number");
  const Json& ext = member(j, "extents");
  if (!ext.is_array()) throw FormatError("grid extents must be an array");
  std::vector<int> e;
  for (const Json& x : ext) {
    if (!x.is_number_integer()) throw FormatError("grid extents must be integers");
    e.push_back(x.get<int>());
  }
  if (static_cast<int>(origin.size()) != m || static_cast<int>(e.size()) != m)
    throw FormatError("grid arrays do not match m");
  try {
    Grid g(origin, h.get<double>(), e);
    g.validate();
    return g;
  } catch (const Error& err) {
    throw FormatError(std::string("invalid grid: ") + err.what());
  }
}

Json to_json(const QField& f) {
  Json j;
  j["grid"] = to_json(f.grid());
  j["q"] = f.q();
  j["n"] = f.n();
  Json nodes = Json::array();
  const std::size_t blk = static_cast<std::size_t>(f.q()) * f.n();
  for (std::size_t idx = 0; idx < f.size(); ++idx)
    nodes.push_back(std::vector<double>(f.values().begin() + idx * blk,
                                        f.values().begin() + (idx + 1) * blk));
  j["values"] = std::move(nodes);
  if (!f.collapsed_mask().empty()) {
    std::vector<int> c(f.collapsed_mask().begin(), f.collapsed_mask().end());
    j["collapsed"] = c;
  }
  if (f.has_labels()) j["labels"] = f.labels();
  return j;
}

QField qfield_from_json(const Json& j) {
  const Grid g = grid_from_json(member(j, "grid"));
  const int q = get_int(j, "q"), n = get_int(j, "n");
  if (q < 1 || n < 1) throw FormatError("q and n must be positive");
  const Json& nodes = member(j, "values");
  if (!nodes.is_array() || nodes.size() != g.size()) throw FormatError("node count does not match the grid");
  const std::size_t blk = static_cast<std::size_t>(q) * n;
  std::vector<double> vals;
  vals.reserve(g.size() * blk);
  for (const Json& v : nodes) {
    const auto x = get_reals(v, "node values");
    if (x.size() != blk) throw FormatError("node value count does not match q*n");
    vals.insert(vals.end(), x.begin(), x.end());
  }
  QField f(g, q, n, std::move(vals));
  if (j.contains("collapsed")) {
    const Json& c = j.at("collapsed");
    if (!c.is_array() || c.size() != g.size()) throw FormatError("collapsed mask has the wrong size");
    std::vector<char> mask;
    for (const Json& x : c) {
      if (!x.is_number_integer()) throw FormatError("collapsed mask must hold 0/1");
      mask.push_back(static_cast<char>(x.get<int>() != 0));
    }
    f.set_collapsed(std::move(mask));
  } else {
    resolve_collapsed(f);
  }
  if (j.contains("labels")) {
    const Json& lb = j.at("labels");
    if (!lb.is_array() || lb.size() != g.size() * q) throw FormatError("labels have the wrong size");
    std::vector<int> labels;
    for (const Json& x : lb) {
      if (!x.is_number_integer()) throw FormatError("labels must be integers");
      labels.push_back(x.get<int>());
    }
    f.set_labels(std::move(labels));
  }
  return f;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt17(r[i]);
    os << '\n';
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

double parse_number(const std::string& text) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw UsageError("bad number '" + text + "'");
      return v;
    }
    const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
    std::size_t ua = 0, ub = 0;
    const double num = std::stod(a, &ua), den = std::stod(b, &ub);
    if (ua != a.size() || ub != b.size() || den == 0.0) throw UsageError("bad fraction '" + text + "'");
    return num / den;
  } catch (const std::logic_error&) {
    throw UsageError("bad number '" + text + "'");
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

}  // namespace qvar
