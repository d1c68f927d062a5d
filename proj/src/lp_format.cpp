#include <cctype>
#include <ostream>

#include "pssr/lp.hpp"

namespace pssr {

namespace {

std::string sanitize(const std::string& name, int fallback) {
  if (name.empty()) return "x" + std::to_string(fallback);
  std::string out;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (std::isdigit(static_cast<unsigned char>(out.front())) || out.front() == '.') out = "v" + out;
  return out;
}

BigInt row_scale(const Row& row, const Rational& rhs) {
  BigInt m = rhs.get_den();
  for (const auto& t : row) m = lcm(m, t.coef.get_den());
  return m;
}

void write_terms(std::ostream& os, const Row& row, const BigInt& scale, const std::vector<std::string>& names) {
  if (row.empty()) {
    os << " 0 " << names.front();
    return;
  }
  bool first = true;
  for (const auto& t : row) {
    const BigInt c = t.coef.get_num() * (scale / t.coef.get_den());
    if (c < 0) {
      os << " - ";
    } else if (!first) {
      os << " + ";
    } else {
      os << " ";
    }
    const BigInt a = abs(c);
    if (a != 1) os << a.get_str() << ' ';
    os << names[static_cast<std::size_t>(t.var)];
    first = false;
  }
}

}  // namespace

void write_lp_format(std::ostream& os, const ConstraintProgram& program) {
  std::vector<std::string> names;
  for (int j = 0; j < program.variable_count(); ++j) names.push_back(sanitize(program.variable(j).name, j));

  os << (program.sense() == Sense::Maximize ? "Maximize\n" : "Minimize\n") << " obj:";
  write_terms(os, program.objective(), row_scale(program.objective(), Rational(1)), names);
  os << "\nSubject To\n";
  int idx = 0;
  for (const auto& c : program.constraints()) {
    const BigInt scale = row_scale(c.row, c.rhs);
    os << ' ' << (c.name.empty() ? "c" + std::to_string(idx) : sanitize(c.name, idx)) << ':';
    write_terms(os, c.row, scale, names);
    const char* rel = c.relation == Relation::LessEqual ? " <= " : c.relation == Relation::Equal ? " = " : " >= ";
    const BigInt r = c.rhs.get_num() * (scale / c.rhs.get_den());
    os << rel << r.get_str() << '\n';
    ++idx;
  }
  os << "Bounds\n";
  for (int j = 0; j < program.variable_count(); ++j) {
    const auto& v = program.variable(j);
    const auto& n = names[static_cast<std::size_t>(j)];
    if (v.upper && *v.upper == v.lower) {
      os << ' ' << n << " = " << v.lower << '\n';
    } else {
      os << ' ' << v.lower << " <= " << n;
      if (v.upper) os << " <= " << *v.upper;
      os << '\n';
    }
  }
  bool any_int = false;
  for (int j = 0; j < program.variable_count(); ++j) {
    if (!program.variable(j).integral) continue;
    if (!any_int) os << "General\n";
    any_int = true;
    os << ' ' << names[static_cast<std::size_t>(j)] << '\n';
  }
  os << "End\n";
}

}  // namespace pssr
