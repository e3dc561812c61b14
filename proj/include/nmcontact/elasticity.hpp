#ifndef NMCONTACT_ELASTICITY_HPP
#define NMCONTACT_ELASTICITY_HPP

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nmcontact/errors.hpp"
#include "nmcontact/mesh.hpp"

namespace nmc {

struct MaterialParams {
  double youngs_modulus = 2.15e11;  // N/m^2
  double poisson_ratio = 0.29;

  void validate() const {
    if (!(youngs_modulus > 0.0)) throw config_error("youngs_modulus must be positive");
    if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
      throw config_error("poisson_ratio must lie in [0, 0.5)");
  }
};

// Surface tractions: F1 = (traction_p, 0) on gamma1 (signed), F2 = (0, -traction_q)
// on gamma2. Body forces are zero.
struct LoadSpec {
  double traction_p = 1.0e6;  // N/m^2, carries the +/- sign
  double traction_q = 1.0e6;  // N/m^2, downward magnitude

  void validate() const {
    if (!std::isfinite(traction_p)) throw config_error("traction_p must be finite");
    if (!std::isfinite(traction_q)) throw config_error("traction_q must be finite");
  }
};

// Plane-stress constitutive matrix in Voigt form:
// (s11, s22, s12) = D (e11, e22, 2 e12).
inline Eigen::Matrix3d plane_stress_matrix(const MaterialParams& mat) {
  mat.validate();
  const double e = mat.youngs_modulus, nu = mat.poisson_ratio;
  const double f = e / (1.0 - nu * nu);
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  d(0, 0) = d(1, 1) = f;
  d(0, 1) = d(1, 0) = f * nu;
  d(2, 2) = e / (2.0 * (1.0 + nu));
  return d;
}

// Constant-strain B matrix: (e11, e22, 2 e12) = B (u1x, u1y, ..., u3y).
inline Eigen::Matrix<double, 3, 6> strain_displacement_matrix(
    const std::array<Eigen::Vector2d, 3>& xy) {
  const double area = triangle_signed_area(xy[0], xy[1], xy[2]);
  if (!(area > 0.0)) throw geometry_error("triangle is degenerate or negatively oriented");
  Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
  for (int k = 0; k < 3; ++k) {
    const auto& pj = xy[(k + 1) % 3];
    const auto& pk = xy[(k + 2) % 3];
    const double bk = pj.y() - pk.y();
    const double ck = pk.x() - pj.x();
    b(0, 2 * k) = bk;
    b(1, 2 * k + 1) = ck;
    b(2, 2 * k) = ck;
    b(2, 2 * k + 1) = bk;
  }
  return b / (2.0 * area);
}

inline Eigen::Matrix<double, 6, 6> element_stiffness(const std::array<Eigen::Vector2d, 3>& xy,
                                                     const Eigen::Matrix3d& d) {
  const double area = triangle_signed_area(xy[0], xy[1], xy[2]);
  if (!(area > 0.0)) throw geometry_error("triangle is degenerate or negatively oriented");
  const Eigen::Matrix<double, 3, 6> b = strain_displacement_matrix(xy);
  return area * b.transpose() * d * b;
}

// Global system over the free degrees of freedom. u1 at every node on the
// closure of gamma3 is eliminated (fixed to zero).
struct AssembledSystem {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::VectorXd load;
  std::vector<int> dof_map;       // full dof 2*node+c -> free index, or -1 if eliminated
  std::vector<int> free_to_full;  // inverse map
  int num_nodes = 0;

  int free_count() const { return static_cast<int>(free_to_full.size()); }

  int free_index(int node, int component) const { return dof_map[2 * node + component]; }

  // Scatter a free-dof vector into a full nodal vector, eliminated dofs = 0.
  Eigen::VectorXd expand(const Eigen::VectorXd& free_values) const {
    if (free_values.size() != free_count())
      throw dimension_error("free vector size does not match the assembled system");
    Eigen::VectorXd full = Eigen::VectorXd::Zero(2 * num_nodes);
    for (int k = 0; k < free_count(); ++k) full[free_to_full[k]] = free_values[k];
    return full;
  }

  Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& full_values) const {
    if (full_values.size() != 2 * num_nodes)
      throw dimension_error("full vector size does not match the mesh");
    Eigen::VectorXd free_values(free_count());
    for (int k = 0; k < free_count(); ++k) free_values[k] = full_values[free_to_full[k]];
    return free_values;
  }
};

inline AssembledSystem assemble(const Mesh& mesh, const MaterialParams& mat,
                                const LoadSpec& loads) {
  mat.validate();
  loads.validate();
  for (const auto& edge : mesh.boundary_edges)
    if (!edge.tag)
      throw config_error("mesh has an untagged boundary edge; run tag_boundary first");

  AssembledSystem sys;
  sys.num_nodes = mesh.node_count();

  // u1 is pinned on the closure of gamma3
  std::set<int> pinned_u1;
  for (const auto& edge : mesh.boundary_edges) {
    if (*edge.tag == BoundaryTag::gamma3) {
      pinned_u1.insert(edge.a);
      pinned_u1.insert(edge.b);
    }
  }

  sys.dof_map.assign(2u * sys.num_nodes, -1);
  for (int node = 0; node < sys.num_nodes; ++node) {
    if (!pinned_u1.count(node)) {
      sys.dof_map[2 * node] = static_cast<int>(sys.free_to_full.size());
      sys.free_to_full.push_back(2 * node);
    }
    sys.dof_map[2 * node + 1] = static_cast<int>(sys.free_to_full.size());
    sys.free_to_full.push_back(2 * node + 1);
  }

  const Eigen::Matrix3d d = plane_stress_matrix(mat);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(36u * mesh.triangles.size());
  for (const auto& tri : mesh.triangles) {
    const std::array<Eigen::Vector2d, 3> xy = {mesh.nodes[tri[0]], mesh.nodes[tri[1]],
                                               mesh.nodes[tri[2]]};
    const Eigen::Matrix<double, 6, 6> ke = element_stiffness(xy, d);
    for (int r = 0; r < 6; ++r) {
      const int gr = sys.dof_map[2 * tri[r / 2] + r % 2];
      if (gr < 0) continue;
      for (int c = 0; c < 6; ++c) {
        const int gc = sys.dof_map[2 * tri[c / 2] + c % 2];
        if (gc < 0) continue;
        triplets.emplace_back(gr, gc, ke(r, c));
      }
    }
  }
  sys.stiffness.resize(sys.free_count(), sys.free_count());
  sys.stiffness.setFromTriplets(triplets.begin(), triplets.end());

  // edgewise exact integration of the linear shape functions: each endpoint
  // takes half the edge resultant
  sys.load = Eigen::VectorXd::Zero(sys.free_count());
  for (const auto& edge : mesh.boundary_edges) {
    Eigen::Vector2d traction = Eigen::Vector2d::Zero();
    if (*edge.tag == BoundaryTag::gamma1) traction = {loads.traction_p, 0.0};
    else if (*edge.tag == BoundaryTag::gamma2) traction = {0.0, -loads.traction_q};
    else continue;
    const double len = (mesh.nodes[edge.b] - mesh.nodes[edge.a]).norm();
    for (int node : {edge.a, edge.b}) {
      for (int c = 0; c < 2; ++c) {
        const int g = sys.dof_map[2 * node + c];
        if (g >= 0) sys.load[g] += 0.5 * len * traction[c];
      }
    }
  }
  return sys;
}

// Nodal interpolant of the rigid motion (a1 - b x2, a2 + b x1) on the free dofs.
inline Eigen::VectorXd rigid_motion_on_free_dofs(const Mesh& mesh, const AssembledSystem& sys,
                                                 double a1, double a2, double b) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(sys.free_count());
  for (int node = 0; node < mesh.node_count(); ++node) {
    const auto& p = mesh.nodes[node];
    const int gx = sys.dof_map[2 * node];
    const int gy = sys.dof_map[2 * node + 1];
    if (gx >= 0) v[gx] = a1 - b * p.y();
    if (gy >= 0) v[gy] = a2 + b * p.x();
  }
  return v;
}

// Orthonormal basis (on the free dofs) of the rigid motions compatible with
// the gamma3 constraint u1 = 0. Three vectors without a wall; one (vertical
// translation) when the wall spans distinct heights.
inline std::vector<Eigen::VectorXd> rigid_body_basis(const Mesh& mesh,
                                                     const AssembledSystem& sys) {
  std::set<int> wall_nodes;
  for (const auto& edge : mesh.boundary_edges) {
    if (edge.tag && *edge.tag == BoundaryTag::gamma3) {
      wall_nodes.insert(edge.a);
      wall_nodes.insert(edge.b);
    }
  }

  // parameter-space constraints a1 - b x2 = 0 at each wall node
  Eigen::MatrixXd constraints(static_cast<Eigen::Index>(wall_nodes.size()), 3);
  Eigen::Index row = 0;
  for (int node : wall_nodes) {
    constraints(row, 0) = 1.0;
    constraints(row, 1) = 0.0;
    constraints(row, 2) = -mesh.nodes[node].y();
    ++row;
  }

  Eigen::MatrixXd param_basis;
  if (wall_nodes.empty()) {
    param_basis = Eigen::MatrixXd::Identity(3, 3);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-12 * (sv.size() > 0 ? sv[0] : 0.0);
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv[k] > cutoff) ++rank;
    param_basis = svd.matrixV().rightCols(3 - rank);
  }

  Eigen::MatrixXd fields(sys.free_count(), param_basis.cols());
  for (Eigen::Index c = 0; c < param_basis.cols(); ++c)
    fields.col(c) = rigid_motion_on_free_dofs(mesh, sys, param_basis(0, c), param_basis(1, c),
                                              param_basis(2, c));

  std::vector<Eigen::VectorXd> basis;
  if (fields.cols() == 0) return basis;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(fields);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(fields.rows(), fields.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c) basis.emplace_back(q.col(c));
  return basis;
}

}  // namespace nmc

#endif  // NMCONTACT_ELASTICITY_HPP
