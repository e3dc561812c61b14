#ifndef NMCONTACT_ANALYSIS_HPP
#define NMCONTACT_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "nmcontact/elasticity.hpp"
#include "nmcontact/errors.hpp"
#include "nmcontact/friction.hpp"
#include "nmcontact/mcp_solver.hpp"
#include "nmcontact/mesh.hpp"
#include "nmcontact/reduction.hpp"

namespace nmc {

inline double boundary_measure(const Mesh& mesh, BoundaryTag tag) {
  double total = 0.0;
  for (const auto& edge : mesh.boundary_edges)
    if (edge.tag && *edge.tag == tag)
      total += (mesh.nodes[edge.b] - mesh.nodes[edge.a]).norm();
  return total;
}

// One admissible direction of escape: the rigid motion
// (a1 - b x2, a2 + b x1), normalized in H^1 of the unit square.
struct KernelDirection {
  double a1 = 0.0, a2 = 0.0, b = 0.0;
  double load_pairing = 0.0;  // <g, y>
  double threshold = 0.0;     // -c
  bool satisfied = false;
};

struct ExistenceReport {
  int kernel_dimension = 0;   // rigid motions compatible with the wall constraint
  bool cone_trivial = false;  // admissible cone reduces to {0}
  double constant_c = 0.0;    // gamma2 * sqrt(meas gamma_c) * trace norm (= 1 here)
  std::vector<KernelDirection> directions;
  bool satisfied = false;
};

namespace detail {

// H^1(unit square) norm of the rigid field (a1 - b x2, a2 + b x1):
// closed-form integral of |y|^2 + |grad y|^2.
inline double rigid_h1_norm(double a1, double a2, double b) {
  return std::sqrt(a1 * a1 + a2 * a2 + (a2 - a1) * b + (8.0 / 3.0) * b * b);
}

inline Eigen::MatrixXd nullspace(const Eigen::MatrixXd& a, int cols) {
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-12 * (sv.size() > 0 ? std::max(sv[0], 1.0) : 1.0);
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > cutoff) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

// Extreme rays of {q : rows * q >= 0} for a pointed cone of dimension <= 3:
// directions where dim-1 independent constraints are active, kept if feasible.
inline std::vector<Eigen::VectorXd> pointed_cone_rays(const Eigen::MatrixXd& rows) {
  const int dim = static_cast<int>(rows.cols());
  std::vector<Eigen::VectorXd> rays;
  auto feasible = [&rows](const Eigen::VectorXd& q) {
    return rows.size() == 0 || (rows * q).minCoeff() >= -1e-12;
  };
  auto push_unique = [&rays](const Eigen::VectorXd& q) {
    for (const auto& r : rays)
      if (r.dot(q) > 1.0 - 1e-9) return;
    rays.push_back(q);
  };

  if (dim == 0) return rays;
  if (dim == 1) {
    Eigen::VectorXd e = Eigen::VectorXd::Ones(1);
    if (feasible(e)) push_unique(e);
    if (feasible(-e)) push_unique(-e);
    return rays;
  }

  // choose dim-1 active constraints out of all rows
  const int nr = static_cast<int>(rows.rows());
  std::vector<int> pick(static_cast<std::size_t>(dim - 1));
  auto recurse = [&](auto&& self, int start, int depth) -> void {
    if (depth == dim - 1) {
      Eigen::MatrixXd sub(dim - 1, dim);
      for (int k = 0; k < dim - 1; ++k) sub.row(k) = rows.row(pick[static_cast<std::size_t>(k)]);
      const Eigen::MatrixXd ns = nullspace(sub, dim);
      if (ns.cols() != 1) return;  // picked rows not independent
      Eigen::VectorXd q = ns.col(0).normalized();
      if (feasible(q)) push_unique(q);
      if (feasible(-q)) push_unique(-q);
      return;
    }
    for (int r = start; r < nr; ++r) {
      pick[static_cast<std::size_t>(depth)] = r;
      self(self, r + 1, depth + 1);
    }
  };
  recurse(recurse, 0, 0);
  return rays;
}

}  // namespace detail

// Checks the load-compatibility condition <g, y> < -c over the admissible
// directions of escape: rigid motions vanishing horizontally on the wall
// nodes and pointing upward (componentwise) over the contact nodes. Both
// sides of the inequality are computed from the assembled data.
inline ExistenceReport check_existence(const Mesh& mesh, const AssembledSystem& sys,
                                       const FrictionLaw& law) {
  law.validate();
  ExistenceReport report;
  report.constant_c = law.gamma2 * std::sqrt(boundary_measure(mesh, BoundaryTag::gamma_c));

  // rigid parameters (a1, a2, b) compatible with u1 = 0 on the wall
  std::map<int, double> wall_heights;
  for (const auto& edge : mesh.boundary_edges) {
    if (edge.tag && *edge.tag == BoundaryTag::gamma3) {
      wall_heights.emplace(edge.a, mesh.nodes[edge.a].y());
      wall_heights.emplace(edge.b, mesh.nodes[edge.b].y());
    }
  }
  Eigen::MatrixXd wall_rows(static_cast<Eigen::Index>(wall_heights.size()), 3);
  Eigen::Index r = 0;
  for (const auto& [node, height] : wall_heights) {
    wall_rows.row(r++) = Eigen::RowVector3d(1.0, 0.0, -height);
  }
  const Eigen::MatrixXd kernel_basis = detail::nullspace(wall_rows, 3);
  report.kernel_dimension = static_cast<int>(kernel_basis.cols());

  // admissibility over the contact boundary: a2 + b x1 >= 0 at gamma_c nodes
  const std::vector<int> contact = boundary_nodes(mesh, BoundaryTag::gamma_c);
  Eigen::MatrixXd cone_rows(static_cast<Eigen::Index>(contact.size()), 3);
  for (std::size_t k = 0; k < contact.size(); ++k)
    cone_rows.row(static_cast<Eigen::Index>(k)) =
        Eigen::RowVector3d(0.0, 1.0, mesh.nodes[contact[k]].x());
  const Eigen::MatrixXd reduced_rows = cone_rows * kernel_basis;

  std::vector<Eigen::Vector3d> generators;
  const Eigen::MatrixXd lineality = detail::nullspace(reduced_rows, report.kernel_dimension);
  for (Eigen::Index c = 0; c < lineality.cols(); ++c) {
    const Eigen::Vector3d v = kernel_basis * lineality.col(c);
    generators.push_back(v);
    generators.push_back(-v);
  }
  const Eigen::MatrixXd pointed_basis =
      detail::nullspace(lineality.transpose(), report.kernel_dimension);
  for (const auto& q : detail::pointed_cone_rays(reduced_rows * pointed_basis))
    generators.push_back(kernel_basis * (pointed_basis * q));

  if (generators.empty()) {
    report.cone_trivial = true;
    report.satisfied = true;
    return report;
  }

  bool all_ok = true;
  for (const auto& g : generators) {
    const double norm = detail::rigid_h1_norm(g[0], g[1], g[2]);
    if (norm <= 0.0) continue;
    KernelDirection dir;
    dir.a1 = g[0] / norm;
    dir.a2 = g[1] / norm;
    dir.b = g[2] / norm;
    const Eigen::VectorXd field =
        rigid_motion_on_free_dofs(mesh, sys, dir.a1, dir.a2, dir.b);
    dir.load_pairing = sys.load.dot(field);
    dir.threshold = -report.constant_c;
    dir.satisfied = dir.load_pairing < dir.threshold;
    all_ok = all_ok && dir.satisfied;
    report.directions.push_back(dir);
  }
  report.satisfied = all_ok;
  return report;
}

// Samples along the contact boundary, ordered by arclength. The tangential
// stress is read from the regularized law the discrete model enforces:
// -sigma_t = -S'(u1); the normal stress converts the nodal reaction into a
// traction via the trapezoid weight (compression is negative).
struct Trace {
  Eigen::VectorXd s, u1, u2, minus_sigma_t, sigma_n;

  Eigen::Index size() const { return s.size(); }
};

inline Trace contact_trace(const Eigen::VectorXd& full_u, const Mesh& mesh,
                           const AssembledSystem& sys, double epsilon, const FrictionLaw& law) {
  if (full_u.size() != 2 * mesh.node_count())
    throw dimension_error("displacement vector does not match the mesh");
  const std::vector<int> chain = boundary_nodes(mesh, BoundaryTag::gamma_c);
  const Eigen::VectorXd lengths = boundary_edge_lengths(mesh, chain);
  const Eigen::VectorXd weights = trapezoid_weights(lengths);
  const Eigen::Index m = static_cast<Eigen::Index>(chain.size());

  Trace tr;
  tr.s.resize(m);
  tr.u1.resize(m);
  tr.u2.resize(m);
  tr.minus_sigma_t.resize(m);
  tr.sigma_n.resize(m);

  // residual of the free system = contact reactions (zero elsewhere at a solution)
  const Eigen::VectorXd u_free = sys.restrict_to_free(full_u);
  Eigen::VectorXd reaction = sys.stiffness * u_free - sys.load;
  for (Eigen::Index k = 0; k < m; ++k) {
    const int gt = sys.free_index(chain[static_cast<std::size_t>(k)], 0);
    if (gt >= 0)
      reaction[gt] -= weights[k] * smooth_slope(u_free[gt], epsilon, law);
  }

  double arc = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const int node = chain[static_cast<std::size_t>(k)];
    tr.s[k] = arc;
    if (k < m - 1) arc += lengths[k];
    tr.u1[k] = full_u[2 * node];
    tr.u2[k] = full_u[2 * node + 1];
    tr.minus_sigma_t[k] = -smooth_slope(tr.u1[k], epsilon, law);
    const int gn = sys.free_index(node, 1);
    tr.sigma_n[k] = gn >= 0 && weights[k] > 0.0 ? -reaction[gn] / weights[k] : 0.0;
  }
  return tr;
}

// Total upward contact reaction (force balance diagnostic).
inline double normal_reaction_sum(const Trace& tr, const Mesh& mesh) {
  const std::vector<int> chain = boundary_nodes(mesh, BoundaryTag::gamma_c);
  const Eigen::VectorXd weights = trapezoid_weights(boundary_edge_lengths(mesh, chain));
  double sum = 0.0;
  for (Eigen::Index k = 0; k < tr.size(); ++k) sum += -tr.sigma_n[k] * weights[k];
  return sum;
}

// Constant stress per triangle in Voigt form (s11, s22, s12).
struct StressField {
  std::vector<Eigen::Vector3d> element_stress;
};

inline StressField stress_recovery(const Eigen::VectorXd& full_u, const Mesh& mesh,
                                   const MaterialParams& mat) {
  if (full_u.size() != 2 * mesh.node_count())
    throw dimension_error("displacement vector does not match the mesh");
  const Eigen::Matrix3d d = plane_stress_matrix(mat);
  StressField field;
  field.element_stress.reserve(mesh.triangles.size());
  for (const auto& tri : mesh.triangles) {
    const std::array<Eigen::Vector2d, 3> xy = {mesh.nodes[tri[0]], mesh.nodes[tri[1]],
                                               mesh.nodes[tri[2]]};
    Eigen::Matrix<double, 6, 1> ue;
    for (int k = 0; k < 3; ++k) {
      ue[2 * k] = full_u[2 * tri[k]];
      ue[2 * k + 1] = full_u[2 * tri[k] + 1];
    }
    const Eigen::Vector3d strain = strain_displacement_matrix(xy) * ue;
    field.element_stress.push_back(d * strain);
  }
  return field;
}

// Contact tractions recovered from the adjacent element stresses, averaged
// per node. With outward normal (0, -1): -sigma_t = s12, sigma_n = s22.
// Agrees with the law-consistent trace only up to discretization error.
struct ContactTractionSamples {
  Eigen::VectorXd minus_sigma_t;
  Eigen::VectorXd sigma_n;
};

inline ContactTractionSamples contact_traction_from_stress(const StressField& field,
                                                           const Mesh& mesh) {
  const std::vector<int> chain = boundary_nodes(mesh, BoundaryTag::gamma_c);
  std::map<std::pair<int, int>, int> edge_to_triangle;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      edge_to_triangle[{std::min(a, b), std::max(a, b)}] = t;
    }
  }

  const Eigen::Index m = static_cast<Eigen::Index>(chain.size());
  ContactTractionSamples out;
  out.minus_sigma_t = Eigen::VectorXd::Zero(m);
  out.sigma_n = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(m);
  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const int a = chain[static_cast<std::size_t>(k)], b = chain[static_cast<std::size_t>(k + 1)];
    const auto it = edge_to_triangle.find({std::min(a, b), std::max(a, b)});
    if (it == edge_to_triangle.end()) continue;
    const Eigen::Vector3d sigma = field.element_stress[static_cast<std::size_t>(it->second)];
    for (Eigen::Index node : {k, k + 1}) {
      out.minus_sigma_t[node] += sigma[2];
      out.sigma_n[node] += sigma[1];
      hits[node] += 1.0;
    }
  }
  for (Eigen::Index k = 0; k < m; ++k) {
    if (hits[k] > 0.0) {
      out.minus_sigma_t[k] /= hits[k];
      out.sigma_n[k] /= hits[k];
    }
  }
  return out;
}

// Every trace sample must stay on the (smoothing-widened) graph of the
// friction law: within the subdifferential interval away from the blend
// band, within the hull of the two branch slopes inside it.
inline bool trace_on_law_graph(const Trace& tr, double epsilon, const FrictionLaw& law,
                               double rel_tol = 1e-9) {
  for (Eigen::Index k = 0; k < tr.size(); ++k) {
    const SlopeInterval box = regularized_law_interval(tr.u1[k], epsilon, law);
    const double tol = rel_tol * (1.0 + std::abs(tr.minus_sigma_t[k]) + law.gamma2);
    if (!box.contains(tr.minus_sigma_t[k], tol)) return false;
  }
  return true;
}

// A full benchmark configuration: geometry decomposition, material, loads,
// friction law, smoothing parameter, solver settings.
struct BenchmarkCase {
  BoundarySpec boundary = BoundarySpec::benchmark(true);
  MaterialParams material;
  LoadSpec loads;
  FrictionLaw law;
  double epsilon = 0.1;
  SolverConfig solver;
};

struct LevelResult {
  int n = 0;
  Mesh mesh;
  AssembledSystem system;
  int contact_dofs = 0;
  double residual_scale = 1.0;
  SolveReport report;
  Eigen::VectorXd full_solution;
  Trace trace;
  double reaction_sum = 0.0;        // total upward contact reaction
  double applied_vertical = 0.0;    // Q * meas(gamma2)
};

inline LevelResult solve_level(const BenchmarkCase& bc, int n) {
  LevelResult lv;
  lv.n = n;
  lv.mesh = tag_boundary(build_unit_square_mesh(n), bc.boundary);
  lv.system = assemble(lv.mesh, bc.material, bc.loads);
  const DofPartition part = partition_dofs(lv.mesh, lv.system);
  const ReducedSystem red = schur_condense(lv.system, part, lv.mesh);
  const McpProblem prob = make_contact_problem(red, bc.epsilon, bc.law);
  lv.contact_dofs = prob.size();
  lv.residual_scale = prob.residual_scale;
  lv.report = solve_trust_region(prob, bc.solver);
  lv.full_solution = recover_full(lv.report.solution, red);
  lv.trace = contact_trace(lv.full_solution, lv.mesh, lv.system, bc.epsilon, bc.law);
  lv.reaction_sum = normal_reaction_sum(lv.trace, lv.mesh);
  lv.applied_vertical = bc.loads.traction_q * boundary_measure(lv.mesh, BoundaryTag::gamma2);
  return lv;
}

// Max-norm difference of the u1 traces at contact nodes the two levels share.
inline double trace_difference_u1(const Trace& coarse, const Trace& fine) {
  double diff = 0.0;
  bool matched = false;
  for (Eigen::Index i = 0; i < coarse.size(); ++i) {
    for (Eigen::Index j = 0; j < fine.size(); ++j) {
      if (std::abs(coarse.s[i] - fine.s[j]) <= 1e-9) {
        diff = std::max(diff, std::abs(coarse.u1[i] - fine.u1[j]));
        matched = true;
        break;
      }
    }
  }
  return matched ? diff : std::numeric_limits<double>::quiet_NaN();
}

// Energy seminorm of (coarse solution - fine solution sampled at coarse
// nodes); defined when the fine grid is a nested refinement.
inline double energy_difference(const LevelResult& coarse, const LevelResult& fine) {
  if (fine.mesh.divisions % coarse.mesh.divisions != 0)
    return std::numeric_limits<double>::quiet_NaN();
  const int ratio = fine.mesh.divisions / coarse.mesh.divisions;
  const int nc = coarse.mesh.divisions, nf = fine.mesh.divisions;
  Eigen::VectorXd diff_full(2 * coarse.mesh.node_count());
  for (int j = 0; j <= nc; ++j) {
    for (int i = 0; i <= nc; ++i) {
      const int cid = j * (nc + 1) + i;
      const int fid = (j * ratio) * (nf + 1) + i * ratio;
      diff_full[2 * cid] = coarse.full_solution[2 * cid] - fine.full_solution[2 * fid];
      diff_full[2 * cid + 1] = coarse.full_solution[2 * cid + 1] - fine.full_solution[2 * fid + 1];
    }
  }
  const Eigen::VectorXd diff_free = coarse.system.restrict_to_free(diff_full);
  return std::sqrt(std::max(0.0, diff_free.dot(coarse.system.stiffness * diff_free)));
}

struct RefinementRow {
  int n = 0;
  int dofs = 0;
  int iterations = 0;
  double merit = 0.0;
  bool converged = false;
  double max_diff_u1 = std::numeric_limits<double>::quiet_NaN();
  double energy_diff = std::numeric_limits<double>::quiet_NaN();
};

struct RefinementStudy {
  std::vector<LevelResult> levels;
  std::vector<RefinementRow> rows;
};

// Solves the case over all requested meshes and reports successive trace
// differences. A level that fails to converge marks its row; the study
// continues with the remaining levels.
inline RefinementStudy refinement_study(const BenchmarkCase& bc, const std::vector<int>& n_list) {
  RefinementStudy study;
  for (int n : n_list) study.levels.push_back(solve_level(bc, n));
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
  return study;
}

}  // namespace nmc

#endif  // NMCONTACT_ANALYSIS_HPP
