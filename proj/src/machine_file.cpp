#include "qbe/machine_file.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "qbe/errors.hpp"

namespace qbe {
namespace {

struct Token {
  std::string text;
  int col = 0;  // 1-based column in the raw line
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) { ++i; continue; }
    if (line[i] == '#') break;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           line[i] != '#')
      ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

[[noreturn]] void fail(int line, int col, const std::string& msg) {
  throw input_error("line " + std::to_string(line) + ", column " +
                    std::to_string(col) + ": " + msg);
}

double parse_float(const std::string& text, int line, int col) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end != begin + text.size() || text.empty())
    fail(line, col, "expected a number, got '" + text + "'");
  return value;
}

long parse_int(const std::string& text, int line, int col) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const long value = std::strtol(begin, &end, 10);
  if (end != begin + text.size() || text.empty())
    fail(line, col, "expected an integer, got '" + text + "'");
  return value;
}

// <float> | <float>(+|-)<float>i
cd parse_complex(const std::string& text, int line, int col) {
  if (!text.empty() && text.back() == 'i') {
    // Find the sign separating real and imaginary parts: not the leading
    // sign and not an exponent sign.
    for (std::size_t k = text.size() - 1; k > 0; --k) {
      const char ch = text[k];
      if ((ch == '+' || ch == '-') && text[k - 1] != 'e' && text[k - 1] != 'E') {
        const double re = parse_float(text.substr(0, k), line, col);
        const std::string imag_text = text.substr(k + 1, text.size() - k - 2);
        double im = imag_text.empty() ? 1.0
                                      : parse_float(imag_text, line,
                                                    col + static_cast<int>(k) + 1);
        if (ch == '-') im = -im;
        return {re, im};
      }
    }
    fail(line, col, "complex literal '" + text +
                        "' needs the form <float>(+|-)<float>i");
  }
  return {parse_float(text, line, col), 0.0};
}

std::string format_float_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_complex(cd z) {
  std::string out = format_float_exact(z.real());
  out += z.imag() < 0 ? '-' : '+';
  out += format_float_exact(std::abs(z.imag()));
  out += 'i';
  return out;
}

}  // namespace

MachineFile parse_machine_file(const std::string& text) {
  MachineFile m;
  bool have_name = false, have_heads = false, have_lattice = false;
  std::vector<int> rule_lines;

  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    std::vector<Token> tok = tokenize(raw);
    if (tok.empty()) continue;
    const std::string& head = tok[0].text;

    auto want = [&](std::size_t n, const char* what) {
      if (tok.size() != n)
        fail(line_no, tok[0].col, std::string("'") + head + "' takes " + what +
                                      ", got " + std::to_string(tok.size() - 1) +
                                      " fields");
    };

    if (head == "machine") {
      want(2, "a name");
      if (have_name) fail(line_no, tok[0].col, "duplicate 'machine' line");
      m.name = tok[1].text;
      have_name = true;
    } else if (head == "heads") {
      want(2, "one integer");
      if (have_heads) fail(line_no, tok[0].col, "duplicate 'heads' line");
      const long n = parse_int(tok[1].text, line_no, tok[1].col);
      if (n < 1 || n > 64)
        fail(line_no, tok[1].col, "head count must lie in 1..64");
      m.rules.n_head = static_cast<int>(n);
      m.shape.n_head = static_cast<int>(n);
      have_heads = true;
    } else if (head == "lattice") {
      want(3, "a length and a topology");
      if (have_lattice) fail(line_no, tok[0].col, "duplicate 'lattice' line");
      const long len = parse_int(tok[1].text, line_no, tok[1].col);
      if (len < 1 || len > 24)
        fail(line_no, tok[1].col, "lattice length must lie in 1..24");
      m.shape.length = static_cast<int>(len);
      if (tok[2].text == "cyclic")
        m.shape.topology = Topology::cyclic;
      else if (tok[2].text == "open")
        m.shape.topology = Topology::open;
      else
        fail(line_no, tok[2].col,
             "topology must be 'cyclic' or 'open', got '" + tok[2].text + "'");
      m.shape.spins = true;
      have_lattice = true;
    } else if (head == "rule") {
      want(9, "l s f direction and four matrix entries");
      Rule r;
      r.l = static_cast<int>(parse_int(tok[1].text, line_no, tok[1].col));
      r.s = static_cast<int>(parse_int(tok[2].text, line_no, tok[2].col));
      r.f = static_cast<int>(parse_int(tok[3].text, line_no, tok[3].col));
      if (tok[4].text == "R")
        r.d = Rule::Direction::right;
      else if (tok[4].text == "L")
        r.d = Rule::Direction::left;
      else
        fail(line_no, tok[4].col,
             "direction must be 'R' or 'L', got '" + tok[4].text + "'");
      r.v(0, 0) = parse_complex(tok[5].text, line_no, tok[5].col);
      r.v(0, 1) = parse_complex(tok[6].text, line_no, tok[6].col);
      r.v(1, 0) = parse_complex(tok[7].text, line_no, tok[7].col);
      r.v(1, 1) = parse_complex(tok[8].text, line_no, tok[8].col);
      if (r.s != 0 && r.s != 1)
        fail(line_no, tok[2].col, "read symbol must be 0 or 1");
      for (std::size_t k = 0; k < m.rules.rules.size(); ++k)
        if (m.rules.rules[k].l == r.l && m.rules.rules[k].s == r.s)
          fail(line_no, tok[0].col,
               "rule for head state " + std::to_string(r.l) + " reading " +
                   std::to_string(r.s) + " already given on line " +
                   std::to_string(rule_lines[k]));
      m.rules.rules.push_back(r);
      rule_lines.push_back(line_no);
    } else {
      fail(line_no, tok[0].col, "unknown directive '" + head + "'");
    }
  }

  if (!have_name) throw input_error("missing 'machine' line");
  if (!have_heads) throw input_error("missing 'heads' line");
  if (!have_lattice) throw input_error("missing 'lattice' line");
  if (m.rules.rules.empty()) throw input_error("machine has no rules");
  for (std::size_t k = 0; k < m.rules.rules.size(); ++k) {
    const Rule& r = m.rules.rules[k];
    if (r.l < 0 || r.l >= m.rules.n_head || r.f < 0 || r.f >= m.rules.n_head)
      fail(rule_lines[k], 1,
           "head states " + std::to_string(r.l) + " -> " + std::to_string(r.f) +
               " fall outside 0.." + std::to_string(m.rules.n_head - 1));
    const double unit = (r.v.adjoint() * r.v - Eigen::Matrix2cd::Identity())
                            .cwiseAbs()
                            .maxCoeff();
    if (unit > 100 * tolerances().eps_zero)
      fail(rule_lines[k], 1, "site action matrix is not unitary (residual " +
                                 std::to_string(unit) + ")");
  }
  m.rules.validate();
  m.shape.validate();
  return m;
}

std::string serialize_machine_file(const MachineFile& m) {
  if (m.name.empty())
    throw validation_error("machine needs a name to serialize");
  for (char c : m.name)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '#')
      throw validation_error("machine name cannot contain spaces or '#'");
  m.rules.validate();
  m.shape.validate();
  if (m.rules.n_head != m.shape.n_head)
    throw validation_error("rule table and lattice disagree on head count");

  std::ostringstream out;
  out << "machine " << m.name << "\n";
  out << "heads " << m.rules.n_head << "\n";
  out << "lattice " << m.shape.length << ' '
      << (m.shape.topology == Topology::cyclic ? "cyclic" : "open") << "\n";
  for (const Rule& r : m.rules.rules) {
    out << "rule " << r.l << ' ' << r.s << ' ' << r.f << ' '
        << (r.d == Rule::Direction::right ? 'R' : 'L');
    for (int row = 0; row < 2; ++row)
      for (int col = 0; col < 2; ++col) out << ' ' << format_complex(r.v(row, col));
    out << "\n";
  }
  return out.str();
}

MachineFile load_machine_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open machine file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_machine_file(buffer.str());
  } catch (const input_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

}  // namespace qbe
