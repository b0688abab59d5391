// Command-line front end: machine files in, JSON reports and CSV tables out.
// Exit codes: 0 success, 1 negative verdict or failed prediction, 2 bad
// input, 3 internal failure.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qbe/dynamics.hpp"
#include "qbe/errors.hpp"
#include "qbe/halmos_wallen.hpp"
#include "qbe/isometry.hpp"
#include "qbe/machine_file.hpp"
#include "qbe/qtm.hpp"
#include "qbe/reports.hpp"

namespace {

using namespace qbe;

double parse_double_strict(const std::string& text, const std::string& what) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (text.empty() || end != begin + text.size())
    throw input_error(what + ": expected a number, got '" + text + "'");
  return v;
}

// Same literal grammar as machine files: <float> or <float>(+|-)<float>i.
cd parse_complex_literal(const std::string& text, const std::string& what) {
  if (!text.empty() && text.back() == 'i') {
    for (std::size_t k = text.size() - 1; k > 0; --k) {
      const char ch = text[k];
      if ((ch == '+' || ch == '-') && text[k - 1] != 'e' && text[k - 1] != 'E') {
        const double re = parse_double_strict(text.substr(0, k), what);
        const std::string imag = text.substr(k + 1, text.size() - k - 2);
        double im = imag.empty() ? 1.0 : parse_double_strict(imag, what);
        return {re, ch == '-' ? -im : im};
      }
    }
    throw input_error(what + ": complex literal '" + text +
                      "' needs the form <float>(+|-)<float>i");
  }
  return {parse_double_strict(text, what), 0.0};
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// CSV of complex literals, one matrix row per line.
Eigen::MatrixXcd parse_csv_matrix(const std::string& text, const std::string& what) {
  std::vector<std::vector<cd>> rows;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<cd> row;
    for (const std::string& cell : split(line, ','))
      row.push_back(parse_complex_literal(cell, what));
    if (!rows.empty() && row.size() != rows.front().size())
      throw input_error(what + ": ragged rows (" +
                        std::to_string(rows.front().size()) + " vs " +
                        std::to_string(row.size()) + " cells)");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw input_error(what + ": no rows");
  Eigen::MatrixXcd m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

struct Prediction {
  PredictionKind kind;
  int parameter = 0;
  int multiplicity = 1;
};

Prediction parse_prediction(const std::string& text) {
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3)
    throw input_error("--predict needs kind:parameter[:multiplicity], got '" +
                      text + "'");
  Prediction p;
  if (parts[0] == "cycle")
    p.kind = PredictionKind::cycle;
  else if (parts[0] == "truncated_shift")
    p.kind = PredictionKind::truncated_shift;
  else if (parts[0] == "bound_band")
    p.kind = PredictionKind::bound_band;
  else if (parts[0] == "isometric_standing_wave")
    throw input_error("standing waves have no finite levels to compare; "
                      "predict a cycle, truncated_shift or bound_band instead");
  else
    throw input_error("unknown prediction kind '" + parts[0] + "'");
  p.parameter = static_cast<int>(parse_double_strict(parts[1], "--predict"));
  if (parts.size() == 3)
    p.multiplicity = static_cast<int>(parse_double_strict(parts[2], "--predict"));
  return p;
}

int verdict_exit(BallisticVerdict v) {
  return v == BallisticVerdict::ballistic ||
                 v == BallisticVerdict::partially_ballistic
             ? 0
             : 1;
}

int cmd_analyze(const std::string& machine_path,
                const std::string& basis_path) {
  MachineFile m = load_machine_file(machine_path);
  std::optional<Basis> basis;
  if (!basis_path.empty()) {
    Basis b;
    b.dim = m.shape.dimension();
    b.vectors = parse_csv_matrix(read_file(basis_path), "--basis");
    if (b.vectors->rows() != b.dim)
      throw input_error("--basis: vectors have " +
                        std::to_string(b.vectors->rows()) + " rows, the machine "
                        "space has dimension " + std::to_string(b.dim));
    b.validate();
    basis = std::move(b);
  }
  MachineVerdict v =
      decide_ballistic(m.rules, m.shape, tolerances(), basis ? &*basis : nullptr);
  std::cout << machine_verdict_json(m.name, v).dump(2) << "\n";
  return verdict_exit(v.verdict);
}

int cmd_decide(const std::string& machine_path) {
  MachineFile m = load_machine_file(machine_path);
  MachineVerdict v = decide_ballistic(m.rules, m.shape);
  json j;
  j["machine"] = m.name;
  j["verdict"] = to_string(v.verdict);
  j["evidence"] = v.evidence;
  std::cout << j.dump(2) << "\n";
  return verdict_exit(v.verdict);
}

int cmd_decompose(const std::string& path) {
  ComplexOperator T;
  std::string source = read_file(path);
  try {
    MachineFile m = parse_machine_file(source);
    T = build_step_operator(m.rules, m.shape);
  } catch (const input_error& machine_err) {
    // Not a machine file; accept a CSV operator matrix instead.
    try {
      Eigen::MatrixXcd dense = parse_csv_matrix(source, path);
      if (dense.rows() != dense.cols())
        throw input_error("operator matrix must be square");
      T = from_dense(dense, tolerances().eps_zero);
    } catch (const input_error&) {
      throw input_error(path + ": not a machine file (" +
                        std::string(machine_err.what()) +
                        ") and not a CSV operator matrix");
    }
  }
  Decomposition d = decompose(T);
  std::cout << decomposition_summary_json(d, T.rows()).dump(2) << "\n";
  return 0;
}

int cmd_spectrum(const std::string& machine_path, double K,
                 const std::string& predict) {
  MachineFile m = load_machine_file(machine_path);
  Hamiltonian H = feynman_hamiltonian(build_step_operator(m.rules, m.shape), K);
  Spectrum s = spectrum(H);

  if (predict.empty()) {
    std::cout << "index,energy\n";
    for (Eigen::Index i = 0; i < s.energies.size(); ++i)
      std::cout << i << ',' << format_float(s.energies(i)) << "\n";
    return 0;
  }

  // Each predicted level is matched to the nearest exact energy; the
  // component levels must all be present in the full spectrum.
  Prediction p = parse_prediction(predict);
  SpectrumPrediction sp =
      predicted_spectrum(p.kind, p.parameter, K, p.multiplicity);
  std::cout << "index,energy,predicted,residual\n";
  bool ok = true;
  for (std::size_t level = 0; level < sp.energies.size(); ++level) {
    const double want = sp.energies[level];
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < s.energies.size(); ++i)
      if (std::abs(s.energies(i) - want) < std::abs(best - want))
        best = s.energies(i);
    const double residual = std::abs(best - want);
    if (residual > tolerances().eps_eig) ok = false;
    std::cout << level + 1 << ',' << format_float(best) << ','
              << format_float(want) << ',' << format_float(residual) << "\n";
  }
  return ok ? 0 : 1;
}

int cmd_evolve(const std::string& machine_path, const std::string& state,
               const std::string& times_text, double K) {
  MachineFile m = load_machine_file(machine_path);
  const ComplexOperator T = build_step_operator(m.rules, m.shape);

  Basis computational;
  computational.dim = m.shape.dimension();
  StabilityResult st = is_stable_on_basis(T, computational);
  if (!st.report.verdict)
    throw input_error(
        "machine is not stable on the computational basis, so chain "
        "probabilities are undefined" +
        (st.report.witness ? " (" + *st.report.witness + ")" : ""));
  PathSet paths = extract_paths(T, computational);

  const std::vector<std::string> parts = split(state, ',');
  if (parts.size() != 3)
    throw input_error("--state needs head,site,spins; got '" + state + "'");
  const int h = static_cast<int>(parse_double_strict(parts[0], "--state"));
  const int j = static_cast<int>(parse_double_strict(parts[1], "--state"));
  const auto sigma =
      static_cast<std::uint64_t>(parse_double_strict(parts[2], "--state"));
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(m.shape.dimension());
  psi0(encode(h, j, sigma, m.shape)) = 1;

  std::vector<double> times;
  for (const std::string& t : split(times_text, ','))
    times.push_back(parse_double_strict(t, "--times"));

  Hamiltonian H = feynman_hamiltonian(T, K);
  std::vector<Eigen::VectorXcd> states = evolve(H, psi0, times);

  std::cout << "t";
  for (std::size_t c = 0; c < paths.chains.size(); ++c) std::cout << ",chain_" << c;
  std::cout << ",leakage,norm\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Eigen::VectorXcd& psi = states[k];
    std::cout << format_float(times[k]);
    double covered = 0;
    for (const auto& chain : paths.chains) {
      double pr = 0;
      for (Eigen::Index idx : chain.indices) pr += std::norm(psi(idx));
      covered += pr;
      std::cout << ',' << format_float(pr);
    }
    std::cout << ',' << format_float(psi.squaredNorm() - covered) << ','
              << format_float(psi.norm()) << "\n";
  }
  return 0;
}

int cmd_counterexample(int n, const std::string& a_text) {
  const cd a = parse_complex_literal(a_text, "--a");
  ComplexOperator U = hw_tower(n, a);
  std::vector<TowerPowerRow> rows = tower_power_table(U, n + 1);
  std::cout << counterexample_json(n, a, rows).dump(2) << "\n";
  return 0;
}

MachineFile builtin_machine(const std::string& name) {
  const std::optional<ExampleMachine> which = example_machine_by_name(name);
  if (!which)
    throw input_error("unknown machine '" + name + "'; see 'examples list'");
  MachineFile m;
  m.name = name;
  m.rules = example_machine(*which);
  m.shape.spins = true;
  m.shape.topology = Topology::open;
  m.shape.n_head = m.rules.n_head;
  switch (*which) {
    case ExampleMachine::zero_motion: m.shape.length = 8; break;
    case ExampleMachine::bit_rotation: m.shape.length = 7; break;
    case ExampleMachine::reflecting_walk: m.shape.length = 8; break;
    case ExampleMachine::branching_walk: m.shape.length = 6; break;
    case ExampleMachine::erasure:
      m.shape.length = 3;
      m.shape.topology = Topology::cyclic;
      break;
  }
  return m;
}

int cmd_examples(const std::string& action, const std::string& name) {
  if (action == "list") {
    for (const std::string& n : example_machine_names()) std::cout << n << "\n";
    return 0;
  }
  if (action == "emit") {
    if (name.empty()) throw input_error("'examples emit' needs a machine name");
    std::cout << serialize_machine_file(builtin_machine(name));
    return 0;
  }
  throw input_error("examples action must be 'list' or 'emit', got '" + action +
                    "'");
}

int run(int argc, char** argv) {
  CLI::App app{
      "Verification toolkit for step operators of quantum ballistic "
      "evolution: partial isometry checks, canonical decompositions, spectra "
      "and machine analysis"};
  app.require_subcommand(1);
  app.set_config("--config");

  std::string machine_path, basis_path, predict, state, times, examples_action,
      examples_name, a_text = "0.25";
  double K = 1.0;
  int tower_n = 0;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "Full machine verdict as JSON (partial isometry, "
                 "orthogonality preservation, structural checks, stability)");
  analyze->add_option("machine", machine_path, "machine file")->required();
  analyze->add_option("--basis", basis_path,
                      "CSV matrix whose columns are candidate stable states");

  CLI::App* decide = app.add_subcommand(
      "decide", "Ballistic verdict with one-line evidence as JSON");
  decide->add_option("machine", machine_path, "machine file")->required();

  CLI::App* decompose = app.add_subcommand(
      "decompose", "Canonical decomposition summary of the step operator "
                   "(unitary/isometry/coisometry ranks, truncated shifts)");
  decompose->add_option("input", machine_path, "machine file or CSV operator")
      ->required();

  CLI::App* spectrum = app.add_subcommand(
      "spectrum", "CSV spectrum of the machine Hamiltonian, optionally "
                  "checked against a closed-form prediction");
  spectrum->add_option("machine", machine_path, "machine file")->required();
  spectrum->add_option("--K", K, "coupling constant (default 1)");
  spectrum->add_option("--predict", predict,
                       "kind:parameter[:multiplicity], kind one of cycle, "
                       "truncated_shift, bound_band");

  CLI::App* evolve = app.add_subcommand(
      "evolve", "CSV time series of chain probabilities for a computational "
                "start state");
  evolve->add_option("machine", machine_path, "machine file")->required();
  evolve->add_option("--state", state, "start state as head,site,spins")
      ->required();
  evolve->add_option("--times", times, "comma-separated times")->required();
  evolve->add_option("--K", K, "coupling constant (default 1)");

  CLI::App* counterexample = app.add_subcommand(
      "counterexample", "JSON power table of the contraction tower member "
                        "that is a partial isometry only below its index");
  counterexample->add_option("--tower", tower_n, "tower index n >= 1")
      ->required();
  counterexample->add_option("--a", a_text,
                             "contraction parameter, |a| < 1/2 (default 0.25)");

  CLI::App* examples = app.add_subcommand(
      "examples", "List the built-in machines or emit one as a machine file");
  examples->add_option("action", examples_action, "'list' or 'emit'")
      ->required();
  examples->add_option("name", examples_name, "machine name for 'emit'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << error_json("usage", e.what()).dump(2) << "\n";
    return 2;
  }

  if (app.got_subcommand(analyze)) return cmd_analyze(machine_path, basis_path);
  if (app.got_subcommand(decide)) return cmd_decide(machine_path);
  if (app.got_subcommand(decompose)) return cmd_decompose(machine_path);
  if (app.got_subcommand(spectrum)) return cmd_spectrum(machine_path, K, predict);
  if (app.got_subcommand(evolve)) return cmd_evolve(machine_path, state, times, K);
  if (app.got_subcommand(counterexample))
    return cmd_counterexample(tower_n, a_text);
  if (app.got_subcommand(examples))
    return cmd_examples(examples_action, examples_name);
  throw internal_error("no subcommand dispatched");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const qbe::input_error& e) {
    std::cerr << qbe::error_json("input", e.what()).dump(2) << "\n";
    return 2;
  } catch (const qbe::internal_error& e) {
    std::cerr << qbe::error_json("internal", e.what()).dump(2) << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << qbe::error_json("internal", e.what()).dump(2) << "\n";
    return 3;
  }
}
