#include "ml2/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "ml2/error.hpp"

namespace ml2::io {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json(const AtomicLogWeight& w) {
  json atoms = json::array();
  for (const auto& a : w.atoms()) atoms.push_back({{"x", a.where.x}, {"y", a.where.y}, {"beta", a.beta}});
  const auto& s = w.smooth();
  return {{"atoms", atoms}, {"smooth", {s[0], s[1], s[2], s[3]}}};
}

AtomicLogWeight weight_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "weight must be an object");
  std::vector<Atom> atoms;
  if (j.contains("atoms")) {
    for (const auto& a : j.at("atoms"))
      atoms.push_back({{a.at("x").get<double>(), a.at("y").get<double>()}, a.at("beta").get<double>()});
  }
  std::array<double, 4> smooth{0, 0, 0, 0};
  if (j.contains("smooth")) {
    const auto& s = j.at("smooth");
    if (!s.is_array() || s.size() > 4) throw Error(ErrorKind::ConfigError, "smooth takes at most 4 coefficients");
    for (std::size_t i = 0; i < s.size(); ++i) smooth[i] = s[i].get<double>();
  }
  return AtomicLogWeight(std::move(atoms), smooth);
}

json to_json(cplx v) {
  if (v.imag() == 0.0) return v.real();
  return json::array({v.real(), v.imag()});
}

json to_json(const QuadratureOutcome& o) {
  json trace = json::array();
  for (const auto& t : o.trace) trace.push_back(json::array({t.depth, to_json(t.value)}));
  return {{"status", std::string(to_string(o.status))},
          {"value", to_json(o.value)},
          {"error", o.error_estimate},
          {"trace", trace},
          {"growth_rate", o.growth_rate}};
}

json to_json(const PolyApprox& p) {
  json coeffs = json::array();
  for (const auto& c : p.coeffs) coeffs.push_back({c.real(), c.imag()});
  json qz = json::array();
  if (p.qfactor)
    for (const auto& z : p.qfactor->zeros) qz.push_back({z.where.x, z.where.y, z.multiplicity});
  return {{"degree", p.degree},
          {"center", {p.center.real(), p.center.imag()}},
          {"scale", p.scale},
          {"coeffs", coeffs},
          {"qzeros", qz},
          {"residual", p.residual_norm},
          {"condition", p.gram_condition}};
}

void write_curve_csv(std::ostream& os, const Curve& c) {
  if (const auto* g = std::get_if<LipschitzGraph>(&c)) {
    os << "t,x,y\n";
    for (std::size_t i = 0; i < g->knots().size(); ++i)
      os << fmt(g->knots()[i]) << ',' << fmt(g->knots()[i]) << ',' << fmt(g->values()[i]) << '\n';
    return;
  }
  os << "x,y\n";
  for (const auto& v : std::get<Polyline>(c).vertices()) os << fmt(v.x) << ',' << fmt(v.y) << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigError, "bad number '" + s + "' on line " + std::to_string(line));
  }
}

}  // namespace

Curve read_curve_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::EmptyCurve, "empty curve file");
  const auto head = split(line);
  const bool graph = head == std::vector<std::string>{"t", "x", "y"};
  if (!graph && head != std::vector<std::string>{"x", "y"})
    throw Error(ErrorKind::ConfigError, "curve header must be 't,x,y' or 'x,y'");
  std::vector<double> t, y;
  std::vector<PlanarPoint> pts;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != head.size()) throw Error(ErrorKind::ConfigError, "wrong column count on line " + std::to_string(n));
    if (graph) {
      t.push_back(number(cells[0], n));
      y.push_back(number(cells[2], n));
    } else {
      pts.push_back({number(cells[0], n), number(cells[1], n)});
    }
  }
  if (graph) return graph_from_knots(std::move(t), std::move(y));
  return Polyline(std::move(pts));
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += '\n';
}

Csv& Csv::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw Error(ErrorKind::InvalidArgument, "csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
  text_ += '\n';
  ++rows_;
  return *this;
}

}  // namespace ml2::io
