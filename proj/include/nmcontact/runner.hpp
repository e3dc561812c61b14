#ifndef NMCONTACT_RUNNER_HPP
#define NMCONTACT_RUNNER_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nmcontact/analysis.hpp"
#include "nmcontact/config.hpp"
#include "nmcontact/errors.hpp"

namespace nmc {

// Fixed-width scientific formatting; the only float-to-text path for the
// emitted artifacts, so identical configs yield byte-identical files.
inline std::string format_sci(double v, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*e", significant_digits - 1, v);
  return buf;
}

inline void write_trace_csv(std::ostream& out, const Trace& tr) {
  out << "s,u1,u2,minus_sigma_t,sigma_n\n";
  for (Eigen::Index k = 0; k < tr.size(); ++k)
    out << format_sci(tr.s[k], 9) << ',' << format_sci(tr.u1[k], 9) << ','
        << format_sci(tr.u2[k], 9) << ',' << format_sci(tr.minus_sigma_t[k], 9) << ','
        << format_sci(tr.sigma_n[k], 9) << '\n';
}

inline void write_convergence_csv(std::ostream& out, const std::vector<RefinementRow>& rows) {
  out << "n,dofs,iterations,merit,max_diff_u1\n";
  for (const auto& row : rows)
    out << row.n << ',' << row.dofs << ',' << row.iterations << ','
        << format_sci(row.merit, 9) << ',' << format_sci(row.max_diff_u1, 9) << '\n';
}

inline nlohmann::ordered_json existence_to_json(const ExistenceReport& ex) {
  nlohmann::ordered_json j;
  j["kernel_dimension"] = ex.kernel_dimension;
  j["cone_trivial"] = ex.cone_trivial;
  j["constant_c"] = format_sci(ex.constant_c, 12);
  j["satisfied"] = ex.satisfied;
  nlohmann::ordered_json dirs = nlohmann::ordered_json::array();
  for (const auto& d : ex.directions) {
    nlohmann::ordered_json dj;
    dj["a1"] = format_sci(d.a1, 12);
    dj["a2"] = format_sci(d.a2, 12);
    dj["b"] = format_sci(d.b, 12);
    dj["load_pairing"] = format_sci(d.load_pairing, 12);
    dj["threshold"] = format_sci(d.threshold, 12);
    dj["satisfied"] = d.satisfied;
    dirs.push_back(dj);
  }
  j["directions"] = dirs;
  return j;
}

inline nlohmann::ordered_json level_to_json(const LevelResult& lv, const RefinementRow& row) {
  nlohmann::ordered_json j;
  j["n"] = lv.n;
  j["contact_dofs"] = lv.contact_dofs;
  j["converged"] = lv.report.converged;
  j["iterations"] = lv.report.iterations;
  j["merit"] = format_sci(lv.report.merit_value, 12);
  j["residual_inf"] = format_sci(lv.report.residual_inf, 12);
  j["min_normal_displacement"] = format_sci(lv.report.complementarity.min_normal_displacement, 12);
  j["min_normal_force"] = format_sci(lv.report.complementarity.min_normal_force, 12);
  j["max_complementarity"] = format_sci(lv.report.complementarity.max_complementarity, 12);
  j["max_equation_residual"] = format_sci(lv.report.complementarity.max_equation_residual, 12);
  j["residual_scale"] = format_sci(lv.residual_scale, 12);
  j["wall_time_seconds"] = format_sci(lv.report.wall_time_seconds, 12);
  j["failure"] = lv.report.failure;
  nlohmann::ordered_json merits = nlohmann::ordered_json::array();
  for (double m : lv.report.start_merits) merits.push_back(format_sci(m, 12));
  j["start_merits"] = merits;
  nlohmann::ordered_json solution = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < lv.report.solution.size(); ++k)
    solution.push_back(format_sci(lv.report.solution[k], 12));
  j["solution"] = solution;
  j["max_diff_u1"] = format_sci(row.max_diff_u1, 12);
  j["energy_diff"] = format_sci(row.energy_diff, 12);
  j["reaction_sum"] = format_sci(lv.reaction_sum, 12);
  j["applied_vertical_load"] = format_sci(lv.applied_vertical, 12);
  j["trace_file"] = "trace_n" + std::to_string(lv.n) + ".csv";
  return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write " + path.string());
  out << content;
}

}  // namespace detail

// Full orchestration: existence check, then per-mesh assemble / condense /
// solve / trace, emitting trace_n<k>.csv per level plus convergence.csv and
// report.json. Exit status: 0 all levels converged and the existence check
// passed, 2 the existence check failed, 1 anything else went wrong.
inline int run_benchmark(const ProblemConfig& cfg, std::ostream& log) {
  cfg.validate();
  const BenchmarkCase bc = cfg.make_case();
  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  nlohmann::ordered_json report;
  report["schema_version"] = "1";
  report["preset"] = cfg.preset;
  report["epsilon"] = format_sci(cfg.epsilon, 12);
  nlohmann::ordered_json mesh_sizes = nlohmann::ordered_json::array();
  for (int n : cfg.n_list) mesh_sizes.push_back(n);
  report["n_list"] = mesh_sizes;
  report["failed_stage"] = "";

  auto flush_report = [&]() {
    detail::write_file(out_dir / "report.json", report.dump(2) + "\n");
  };

  ExistenceReport existence;
  try {
    const Mesh mesh = tag_boundary(build_unit_square_mesh(cfg.n_list.front()), bc.boundary);
    const AssembledSystem sys = assemble(mesh, bc.material, bc.loads);
    existence = check_existence(mesh, sys, bc.law);
    report["existence"] = existence_to_json(existence);
  } catch (const std::exception& e) {
    report["failed_stage"] = std::string("existence: ") + e.what();
    flush_report();
    log << "existence stage failed: " << e.what() << "\n";
    return 1;
  }

  if (!existence.satisfied) {
    report["all_converged"] = false;
    flush_report();
    log << "existence condition violated: the load is not compatible with the "
           "admissible rigid motions (see report.json)\n";
    return 2;
  }
  log << "existence condition satisfied (c = " << existence.constant_c << ")\n";

  RefinementStudy study;
  std::string failed_stage;
  for (int n : cfg.n_list) {
    try {
      study.levels.push_back(solve_level(bc, n));
      const LevelResult& lv = study.levels.back();
      std::ostringstream trace_text;
      write_trace_csv(trace_text, lv.trace);
      detail::write_file(out_dir / ("trace_n" + std::to_string(n) + ".csv"), trace_text.str());
      log << "n=" << n << " contact_dofs=" << lv.contact_dofs
          << " iterations=" << lv.report.iterations << " merit=" << lv.report.merit_value
          << (lv.report.converged ? " converged" : " NOT CONVERGED") << "\n";
    } catch (const std::exception& e) {
      failed_stage = "solve n=" + std::to_string(n) + ": " + e.what();
      log << failed_stage << "\n";
      break;
    }
  }

  for (std::size_t k = 0; k < study.levels.size(); ++k) {
    const LevelResult& lv = study.levels[k];
    RefinementRow row;
    row.n = lv.n;
    row.dofs = lv.contact_dofs;
    row.iterations = lv.report.iterations;
    row.merit = lv.report.merit_value;
    row.converged = lv.report.converged;
    if (k > 0 && study.levels[k - 1].report.converged && lv.report.converged) {
      row.max_diff_u1 = trace_difference_u1(study.levels[k - 1].trace, lv.trace);
      row.energy_diff = energy_difference(study.levels[k - 1], lv);
    }
    study.rows.push_back(row);
  }

  bool all_converged = failed_stage.empty() && study.levels.size() == cfg.n_list.size();
  for (const auto& lv : study.levels) all_converged = all_converged && lv.report.converged;

  try {
    std::ostringstream conv_text;
    write_convergence_csv(conv_text, study.rows);
    detail::write_file(out_dir / "convergence.csv", conv_text.str());

    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < study.levels.size(); ++k)
      levels.push_back(level_to_json(study.levels[k], study.rows[k]));
    report["levels"] = levels;
    report["all_converged"] = all_converged;
    if (!failed_stage.empty()) report["failed_stage"] = failed_stage;
    flush_report();
  } catch (const std::exception& e) {
    log << "failed to write artifacts: " << e.what() << "\n";
    return 1;
  }

  return all_converged ? 0 : 1;
}

}  // namespace nmc

#endif  // NMCONTACT_RUNNER_HPP
