#ifndef NMCONTACT_CONFIG_HPP
#define NMCONTACT_CONFIG_HPP

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nmcontact/analysis.hpp"
#include "nmcontact/errors.hpp"

namespace nmc {

// Run configuration: the benchmark data plus orchestration knobs. The preset
// fixes the wall side and the sign of the horizontal traction: wall-left
// applies F1 = (+P, 0) on the side opposite the wall, wall-right mirrors both.
struct ProblemConfig {
  std::string preset = "wall-left";
  std::vector<int> n_list = {4, 8, 16, 32};
  MaterialParams material;
  double traction_p = 1.0e6;  // magnitude; the preset supplies the sign
  double traction_q = 1.0e6;
  FrictionLaw law;
  double epsilon = 0.1;
  SolverConfig solver;
  std::string output_dir = "out";
  std::optional<BoundarySpec> boundary_override;

  bool wall_left() const { return preset == "wall-left"; }

  void validate() const {
    if (preset != "wall-left" && preset != "wall-right")
      throw config_error("preset must be wall-left or wall-right");
    if (n_list.empty()) throw config_error("n_list must contain at least one mesh size");
    for (int n : n_list)
      if (n < 1) throw config_error("n_list entries must be positive");
    material.validate();
    law.validate();
    SmoothingParams{epsilon}.validate();
    solver.validate();
    if (boundary_override) boundary_override->validate();
    if (output_dir.empty()) throw config_error("output directory must not be empty");
  }

  BenchmarkCase make_case() const {
    validate();
    BenchmarkCase bc;
    bc.boundary = boundary_override ? *boundary_override : BoundarySpec::benchmark(wall_left());
    bc.material = material;
    bc.loads.traction_p = (wall_left() ? 1.0 : -1.0) * traction_p;
    bc.loads.traction_q = traction_q;
    bc.law = law;
    bc.epsilon = epsilon;
    bc.solver = solver;
    return bc;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigEntry {
  std::string value;
  int line = 0;
};

using ConfigTable = std::map<std::string, ConfigEntry>;  // "section.key" -> value

inline double parse_double(const ConfigTable& table, const std::string& key) {
  const auto it = table.find(key);
  if (it == table.end()) throw config_error("missing required key " + key);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second.value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != it->second.value.size())
    throw config_error("line " + std::to_string(it->second.line) + ": key " + key +
                       " has a malformed numeric value '" + it->second.value + "'");
  return v;
}

inline double parse_double_or(const ConfigTable& table, const std::string& key, double fallback) {
  return table.count(key) ? parse_double(table, key) : fallback;
}

inline long parse_int(const ConfigTable& table, const std::string& key) {
  const double v = parse_double(table, key);
  const long n = static_cast<long>(v);
  if (static_cast<double>(n) != v)
    throw config_error("key " + key + " must be an integer");
  return n;
}

inline long parse_int_or(const ConfigTable& table, const std::string& key, long fallback) {
  return table.count(key) ? parse_int(table, key) : fallback;
}

inline std::string parse_string(const ConfigTable& table, const std::string& key,
                                const std::string& fallback) {
  const auto it = table.find(key);
  if (it == table.end()) return fallback;
  return it->second.value;
}

inline BoundarySegment parse_segment(const std::string& text, int line) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(trim(part));
  if (parts.empty() || parts.size() == 2 || parts.size() > 3)
    throw config_error("line " + std::to_string(line) +
                       ": boundary segment must be 'side' or 'side:lo:hi'");
  const auto side = side_from_string(parts[0]);
  if (!side)
    throw config_error("line " + std::to_string(line) + ": unknown boundary side '" +
                       parts[0] + "'");
  BoundarySegment seg{*side, 0.0, 1.0};
  if (parts.size() == 3) {
    try {
      seg.lo = std::stod(parts[1]);
      seg.hi = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw config_error("line " + std::to_string(line) + ": malformed segment interval");
    }
  }
  return seg;
}

}  // namespace detail

// Reads the documented flat key = value format: [section] headers, # comments,
// SI units throughout. Unknown sections or keys are rejected.
inline ProblemConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);

  static const std::set<std::string> known_sections = {
      "problem", "mesh", "material", "loads", "friction",
      "regularization", "solver", "output", "boundary"};
  static const std::set<std::string> known_keys = {
      "problem.preset",
      "mesh.n", "mesh.n_list",
      "material.youngs_modulus", "material.poisson_ratio",
      "loads.traction_p", "loads.traction_q",
      "friction.delta", "friction.gamma1", "friction.gamma2",
      "regularization.epsilon",
      "solver.max_iterations", "solver.merit_tolerance", "solver.step_tolerance",
      "solver.initial_radius", "solver.shrink_factor", "solver.grow_factor",
      "solver.num_starts", "solver.start_spread", "solver.seed",
      "output.directory",
      "boundary.gamma1", "boundary.gamma2", "boundary.gamma3", "boundary.gamma_c",
      "boundary.free"};

  detail::ConfigTable table;
  std::string section = "problem";
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("line " + std::to_string(line_no) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!known_sections.count(section))
        throw config_error("line " + std::to_string(line_no) + ": unknown section [" +
                           section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = section + "." + detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!known_keys.count(key))
      throw config_error("line " + std::to_string(line_no) + ": unknown key " + key);
    if (table.count(key))
      throw config_error("line " + std::to_string(line_no) + ": duplicate key " + key);
    table[key] = {value, line_no};
  }

  ProblemConfig cfg;
  cfg.preset = detail::parse_string(table, "problem.preset", cfg.preset);

  if (table.count("mesh.n") && table.count("mesh.n_list"))
    throw config_error("specify either mesh.n or mesh.n_list, not both");
  if (table.count("mesh.n")) {
    cfg.n_list = {static_cast<int>(detail::parse_int(table, "mesh.n"))};
  } else if (table.count("mesh.n_list")) {
    const auto it = table.find("mesh.n_list");
    cfg.n_list.clear();
    std::stringstream ss(it->second.value);
    std::string tok;
    while (ss >> tok) {
      try {
        cfg.n_list.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw config_error("line " + std::to_string(it->second.line) +
                           ": malformed entry in n_list");
      }
    }
  }

  cfg.material.youngs_modulus = detail::parse_double(table, "material.youngs_modulus");
  cfg.material.poisson_ratio = detail::parse_double(table, "material.poisson_ratio");
  cfg.traction_p = detail::parse_double(table, "loads.traction_p");
  cfg.traction_q = detail::parse_double(table, "loads.traction_q");
  cfg.law.delta = detail::parse_double(table, "friction.delta");
  cfg.law.gamma1 = detail::parse_double(table, "friction.gamma1");
  cfg.law.gamma2 = detail::parse_double(table, "friction.gamma2");
  cfg.epsilon = detail::parse_double(table, "regularization.epsilon");

  cfg.solver.max_iterations =
      static_cast<int>(detail::parse_int_or(table, "solver.max_iterations", 100));
  cfg.solver.merit_tolerance =
      detail::parse_double_or(table, "solver.merit_tolerance", cfg.solver.merit_tolerance);
  cfg.solver.step_tolerance =
      detail::parse_double_or(table, "solver.step_tolerance", cfg.solver.step_tolerance);
  cfg.solver.initial_radius =
      detail::parse_double_or(table, "solver.initial_radius", cfg.solver.initial_radius);
  cfg.solver.shrink_factor =
      detail::parse_double_or(table, "solver.shrink_factor", cfg.solver.shrink_factor);
  cfg.solver.grow_factor =
      detail::parse_double_or(table, "solver.grow_factor", cfg.solver.grow_factor);
  cfg.solver.num_starts = static_cast<int>(detail::parse_int_or(table, "solver.num_starts", 1));
  cfg.solver.start_spread =
      detail::parse_double_or(table, "solver.start_spread", cfg.solver.start_spread);
  cfg.solver.seed = static_cast<std::uint64_t>(
      detail::parse_int_or(table, "solver.seed", static_cast<long>(cfg.solver.seed)));

  cfg.output_dir = detail::parse_string(table, "output.directory", cfg.output_dir);

  bool any_boundary = false;
  BoundarySpec spec;
  for (const auto& [name, tag] :
       std::vector<std::pair<std::string, BoundaryTag>>{{"gamma1", BoundaryTag::gamma1},
                                                        {"gamma2", BoundaryTag::gamma2},
                                                        {"gamma3", BoundaryTag::gamma3},
                                                        {"gamma_c", BoundaryTag::gamma_c},
                                                        {"free", BoundaryTag::free_boundary}}) {
    const auto it = table.find("boundary." + name);
    if (it == table.end()) continue;
    any_boundary = true;
    std::stringstream ss(it->second.value);
    std::string segment_text;
    while (std::getline(ss, segment_text, ',')) {
      segment_text = detail::trim(segment_text);
      if (segment_text.empty()) continue;
      spec.segments.emplace_back(tag, detail::parse_segment(segment_text, it->second.line));
    }
  }
  if (any_boundary) cfg.boundary_override = spec;

  cfg.validate();
  return cfg;
}

}  // namespace nmc

#endif  // NMCONTACT_CONFIG_HPP
