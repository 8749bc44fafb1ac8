#include "ucnn/mps.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "ucnn/error.hpp"

namespace ucnn::milp {

namespace {

constexpr const char* kObjectiveRow = "COST";

std::string positional(char prefix, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%07d", prefix, index);
  return buf;
}

// Shortest %g rendering that fits the 12-character numeric field.
std::string fmt12(double v) {
  char buf[40];
  for (int prec = 12; prec >= 1; --prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::char_traits<char>::length(buf) <= 12) return buf;
  }
  throw Error("value does not fit an MPS field");
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

// Fields start at columns 2, 5, 15, 25, 40, 50 (1-based).
std::string data_line(const std::string& f1, const std::string& f2, const std::string& f3,
                      const std::string& f4, const std::string& f5 = {},
                      const std::string& f6 = {}) {
  std::string line = " " + pad(f1, 2) + " " + pad(f2, 8) + "  " + pad(f3, 8) + "  " + pad(f4, 12);
  if (!f5.empty()) line += "   " + pad(f5, 8) + "  " + f6;
  while (!line.empty() && line.back() == ' ') line.pop_back();
  return line;
}

double parse_number(const std::string& token, int line_no) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw SchemaError("MPS line " + std::to_string(line_no) + ": bad number '" + token + "'");
  }
  return v;
}

}  // namespace

std::string mps_column_name(int col) { return positional('C', col); }
std::string mps_row_name(int row) { return positional('R', row); }

void write_mps(const MilpModel& model, std::ostream& out) {
  const int n = model.num_variables();
  const int m = model.num_constraints();

  std::vector<std::vector<std::pair<int, double>>> columns(n);
  for (int i = 0; i < m; ++i) {
    for (const auto& [col, coef] : model.row_terms()[i]) columns[col].emplace_back(i, coef);
  }

  std::string name = model.name().substr(0, 8);
  for (auto& c : name) {
    if (c == ' ') c = '_';
  }
  out << "NAME          " << name << "\n";
  out << "ROWS\n";
  out << data_line("N", kObjectiveRow, "", "") << "\n";
  for (int i = 0; i < m; ++i) {
    const char* t = "E";
    switch (model.constraint(i).sense) {
      case Sense::LessEqual: t = "L"; break;
      case Sense::GreaterEqual: t = "G"; break;
      case Sense::Equal: t = "E"; break;
    }
    out << data_line(t, mps_row_name(i), "", "") << "\n";
  }

  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < n; ++j) {
    const bool integral = model.variable(j).is_integral();
    if (integral != in_int) {
      out << data_line("", positional('M', marker++), "'MARKER'", "", integral ? "'INTORG'" : "'INTEND'")
          << "\n";
      in_int = integral;
    }
    const std::string cname = mps_column_name(j);
    const double c = model.costs()[j];
    // Columns with no entries still need one line to be declared.
    if (c != 0.0 || columns[j].empty()) out << data_line("", cname, kObjectiveRow, fmt12(c)) << "\n";
    for (const auto& [row, coef] : columns[j]) {
      out << data_line("", cname, mps_row_name(row), fmt12(coef)) << "\n";
    }
  }
  if (in_int) out << data_line("", positional('M', marker++), "'MARKER'", "", "'INTEND'") << "\n";

  out << "RHS\n";
  if (model.objective_offset() != 0.0) {
    out << data_line("", "RHS", kObjectiveRow, fmt12(-model.objective_offset())) << "\n";
  }
  for (int i = 0; i < m; ++i) {
    const double r = model.constraint(i).rhs;
    if (r != 0.0) out << data_line("", "RHS", mps_row_name(i), fmt12(r)) << "\n";
  }

  out << "BOUNDS\n";
  for (int j = 0; j < n; ++j) {
    const auto& v = model.variable(j);
    const std::string cname = mps_column_name(j);
    const bool lo_fin = std::isfinite(v.lower);
    const bool hi_fin = std::isfinite(v.upper);
    if (lo_fin && hi_fin && v.lower == v.upper) {
      out << data_line("FX", "BND", cname, fmt12(v.lower)) << "\n";
      continue;
    }
    if (!lo_fin && !hi_fin) {
      out << data_line("FR", "BND", cname, "") << "\n";
      continue;
    }
    if (lo_fin) {
      out << data_line("LO", "BND", cname, fmt12(v.lower)) << "\n";
    } else {
      out << data_line("MI", "BND", cname, "") << "\n";
    }
    if (hi_fin) {
      out << data_line("UP", "BND", cname, fmt12(v.upper)) << "\n";
    } else {
      out << data_line("PL", "BND", cname, "") << "\n";
    }
  }
  out << "ENDATA\n";
}

void export_standard(const MilpModel& model, const std::filesystem::path& destination) {
  std::ofstream out(destination);
  if (!out) throw Error("cannot write MPS file " + destination.string());
  write_mps(model, out);
  out.flush();
  if (!out) throw Error("failed writing MPS file " + destination.string());
}

MilpModel read_mps(std::istream& in) {
  enum class Section { None, Rows, Columns, Rhs, Bounds, End };
  Section section = Section::None;

  MilpModel model;
  std::string objective_row;
  std::unordered_map<std::string, int> row_index;
  std::unordered_map<std::string, int> col_index;
  std::vector<std::vector<Term>> rows;
  std::vector<Sense> senses;
  std::vector<std::string> row_names;
  std::vector<double> rhs;
  std::vector<char> lower_set;
  double offset = 0.0;
  bool in_int = false;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    if (line[0] != ' ' && line[0] != '\t') {
      const std::string& head = tok[0];
      if (head == "NAME") {
        if (tok.size() > 1) model.set_name(tok[1]);
      } else if (head == "ROWS") {
        section = Section::Rows;
      } else if (head == "COLUMNS") {
        section = Section::Columns;
      } else if (head == "RHS") {
        section = Section::Rhs;
      } else if (head == "BOUNDS") {
        section = Section::Bounds;
      } else if (head == "ENDATA") {
        section = Section::End;
        break;
      } else if (head == "RANGES") {
        throw SchemaError("MPS RANGES section is not supported");
      } else {
        throw SchemaError("MPS line " + std::to_string(line_no) + ": unknown section " + head);
      }
      continue;
    }

    const std::string where = "MPS line " + std::to_string(line_no);
    switch (section) {
      case Section::Rows: {
        if (tok.size() < 2) throw SchemaError(where + ": malformed row");
        const std::string& type = tok[0];
        if (type == "N") {
          if (objective_row.empty()) objective_row = tok[1];
          continue;
        }
        Sense s;
        if (type == "L") s = Sense::LessEqual;
        else if (type == "G") s = Sense::GreaterEqual;
        else if (type == "E") s = Sense::Equal;
        else throw SchemaError(where + ": unknown row type " + type);
        row_index[tok[1]] = static_cast<int>(rows.size());
        rows.emplace_back();
        senses.push_back(s);
        row_names.push_back(tok[1]);
        rhs.push_back(0.0);
        break;
      }
      case Section::Columns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          if (tok[2] == "'INTORG'") in_int = true;
          else if (tok[2] == "'INTEND'") in_int = false;
          else throw SchemaError(where + ": unknown marker " + tok[2]);
          continue;
        }
        if (tok.size() != 3 && tok.size() != 5) throw SchemaError(where + ": malformed column entry");
        auto it = col_index.find(tok[0]);
        int col;
        if (it == col_index.end()) {
          col = model.add_variable(tok[0], in_int ? VarKind::Integer : VarKind::Continuous, 0.0, kInf);
          col_index.emplace(tok[0], col);
          lower_set.push_back(0);
        } else {
          col = it->second;
        }
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double v = parse_number(tok[k + 1], line_no);
          if (tok[k] == objective_row) {
            model.set_cost(col, model.costs()[col] + v);
            continue;
          }
          auto r = row_index.find(tok[k]);
          if (r == row_index.end()) throw SchemaError(where + ": unknown row " + tok[k]);
          rows[r->second].emplace_back(col, v);
        }
        break;
      }
      case Section::Rhs: {
        // Optional set name: either "set row value [row value]" or "row value".
        std::size_t k = (tok.size() % 2 == 1) ? 1 : 0;
        for (; k + 1 < tok.size(); k += 2) {
          const double v = parse_number(tok[k + 1], line_no);
          if (tok[k] == objective_row) {
            offset = -v;
            continue;
          }
          auto r = row_index.find(tok[k]);
          if (r == row_index.end()) throw SchemaError(where + ": unknown row " + tok[k]);
          rhs[r->second] = v;
        }
        break;
      }
      case Section::Bounds: {
        if (tok.size() < 3) throw SchemaError(where + ": malformed bound");
        const std::string& type = tok[0];
        const bool valueless = type == "FR" || type == "MI" || type == "PL" || type == "BV";
        // Bound set name is optional.
        std::string cname;
        std::string value;
        if (valueless) {
          cname = tok.size() >= 3 ? tok[2] : tok[1];
        } else if (tok.size() >= 4) {
          cname = tok[2];
          value = tok[3];
        } else {
          cname = tok[1];
          value = tok[2];
        }
        auto c = col_index.find(cname);
        if (c == col_index.end()) throw SchemaError(where + ": unknown column " + cname);
        const int col = c->second;
        const auto& var = model.variable(col);
        double lo = var.lower;
        double hi = var.upper;
        if (type == "UP") {
          hi = parse_number(value, line_no);
          if (hi < 0.0 && !lower_set[col] && lo == 0.0) lo = -kInf;
        } else if (type == "LO") {
          lo = parse_number(value, line_no);
          lower_set[col] = 1;
        } else if (type == "FX") {
          lo = hi = parse_number(value, line_no);
          lower_set[col] = 1;
        } else if (type == "FR") {
          lo = -kInf;
          hi = kInf;
        } else if (type == "MI") {
          lo = -kInf;
        } else if (type == "PL") {
          hi = kInf;
        } else if (type == "BV") {
          lo = 0.0;
          hi = 1.0;
        } else {
          throw SchemaError(where + ": unsupported bound type " + type);
        }
        model.set_bounds(col, lo, hi);
        break;
      }
      case Section::None:
      case Section::End:
        throw SchemaError(where + ": data outside a section");
    }
  }
  if (section != Section::End) throw SchemaError("MPS file is missing ENDATA");

  // Promote 0/1 integers back to binaries.
  MilpModel result(model.name());
  for (int j = 0; j < model.num_variables(); ++j) {
    auto v = model.variable(j);
    if (v.kind == VarKind::Integer && v.lower >= 0.0 && v.upper <= 1.0) v.kind = VarKind::Binary;
    const int col = result.add_variable(v.name, v.kind, v.lower, v.upper, model.costs()[j], v.tag);
    // add_variable clamps binaries to [0,1]; restore exact bounds.
    result.set_bounds(col, v.lower, v.upper);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    result.add_constraint(row_names[i], senses[i], rhs[i], std::span<const Term>(rows[i]));
  }
  result.set_objective_offset(offset);
  return result;
}

MilpModel import_standard(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw MissingArtifactError("cannot open MPS file " + source.string());
  return read_mps(in);
}

std::vector<double> import_solution(std::istream& in, const MilpModel& model) {
  const int n = model.num_variables();
  std::unordered_map<std::string, int> index;
  index.reserve(static_cast<std::size_t>(n) * 2);
  for (int j = 0; j < n; ++j) {
    index.emplace(model.variable(j).name, j);
    index.emplace(mps_column_name(j), j);
  }
  std::vector<double> x(n, 0.0);
  std::vector<char> seen(n, 0);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string name;
    std::string value;
    if (!(ss >> name)) continue;
    std::string extra;
    if (!(ss >> value) || (ss >> extra)) {
      throw SchemaError("solution line " + std::to_string(line_no) + ": expected 'name value'");
    }
    auto it = index.find(name);
    if (it == index.end()) throw SchemaError("solution names unknown variable " + name);
    x[it->second] = parse_number(value, line_no);
    seen[it->second] = 1;
  }
  for (int j = 0; j < n; ++j) {
    if (!seen[j] && model.variable(j).is_integral()) {
      throw SchemaError("solution is missing integral variable " + model.variable(j).name);
    }
  }
  return x;
}

std::vector<double> import_solution(const std::filesystem::path& source, const MilpModel& model) {
  std::ifstream in(source);
  if (!in) throw MissingArtifactError("cannot open solution file " + source.string());
  return import_solution(in, model);
}

void write_solution(std::ostream& out, const MilpModel& model, std::span<const double> x) {
  char buf[64];
  for (int j = 0; j < model.num_variables(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", x[j]);
    out << model.variable(j).name << ' ' << buf << '\n';
  }
}

}  // namespace ucnn::milp
