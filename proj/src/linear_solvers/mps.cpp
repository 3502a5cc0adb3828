#include <iomanip>
#include <map>
#include <sstream>

#include "mce/linear_solvers.hpp"

namespace mce {

namespace {

// The value field is twelve characters wide.
std::string num(double v) {
  for (int prec = 12; prec > 1; --prec) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    if (s.str().size() <= 12) return s.str();
  }
  std::ostringstream s;
  s << std::setprecision(1) << v;
  return s.str();
}

// Fixed MPS columns: type at 2-3, names at 5-12 and 15-22, value at 25-36.
void field(std::ostream& out, const std::string& type, const std::string& a, const std::string& b,
           const std::string& value = "") {
  std::string line(36, ' ');
  line.replace(1, type.size(), type);
  line.replace(4, a.size(), a);
  line.replace(14, b.size(), b);
  if (!value.empty()) line.replace(24, value.size(), value);
  while (!line.empty() && line.back() == ' ') line.pop_back();
  out << line << "\n";
}

}  // namespace

// Fixed-format MPS. Names are R<k>/C<k>, which stay within eight
// characters for up to ten million rows or columns.
void write_mps(const LinearProgram& lp, std::ostream& out, const std::string& name) {
  validate(lp);
  auto rname = [](int r) { return "R" + std::to_string(r); };
  auto cname = [](int c) { return "C" + std::to_string(c); };

  out << "NAME          " << name << "\n";
  out << "ROWS\n";
  out << " N  COST\n";
  for (int r = 0; r < lp.num_rows(); ++r) {
    char t = lp.sense[r] == RowSense::le ? 'L' : lp.sense[r] == RowSense::ge ? 'G' : 'E';
    out << " " << t << "  " << rname(r) << "\n";
  }

  std::vector<std::map<int, double>> cols(lp.num_cols());
  for (const auto& e : lp.entries) cols[e.col][e.row] += e.value;
  out << "COLUMNS\n";
  for (int c = 0; c < lp.num_cols(); ++c) {
    if (lp.objective[c] != 0.0) field(out, "", cname(c), "COST", num(lp.objective[c]));
    for (const auto& [r, v] : cols[c])
      if (v != 0.0) field(out, "", cname(c), rname(r), num(v));
  }
  out << "RHS\n";
  for (int r = 0; r < lp.num_rows(); ++r)
    if (lp.rhs[r] != 0.0) field(out, "", "RHS", rname(r), num(lp.rhs[r]));
  out << "BOUNDS\n";
  for (int c = 0; c < lp.num_cols(); ++c) {
    double lo = lp.col_lower[c], hi = lp.col_upper[c];
    if (lo == -kInf && hi == kInf) {
      field(out, "FR", "BND", cname(c));
      continue;
    }
    if (lo == hi) {
      field(out, "FX", "BND", cname(c), num(lo));
      continue;
    }
    if (lo == -kInf) field(out, "MI", "BND", cname(c));
    else if (lo != 0.0) field(out, "LO", "BND", cname(c), num(lo));
    if (hi != kInf) field(out, "UP", "BND", cname(c), num(hi));
  }
  out << "ENDATA\n";
}

}  // namespace mce
