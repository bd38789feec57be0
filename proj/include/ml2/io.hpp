#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ml2/approx.hpp"
#include "ml2/geometry.hpp"
#include "ml2/quadrature.hpp"
#include "ml2/weights.hpp"

namespace ml2::io {

using json = nlohmann::json;

// "%.17g"
std::string fmt(double v);

json to_json(const AtomicLogWeight& w);
AtomicLogWeight weight_from_json(const json& j);

// A complex value is a plain number when its imaginary part is zero.
json to_json(cplx v);
json to_json(const QuadratureOutcome& o);
json to_json(const PolyApprox& p);

// Curve interchange: header "t,x,y" for graphs, "x,y" for polylines.
void write_curve_csv(std::ostream& os, const Curve& c);
Curve read_curve_csv(std::istream& is);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_; }
  const std::string& text() const { return text_; }

 private:
  std::size_t width_;
  std::size_t rows_ = 0;
  std::string text_;
};

}  // namespace ml2::io
