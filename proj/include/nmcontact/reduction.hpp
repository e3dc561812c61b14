#ifndef NMCONTACT_REDUCTION_HPP
#define NMCONTACT_REDUCTION_HPP

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "nmcontact/elasticity.hpp"
#include "nmcontact/errors.hpp"
#include "nmcontact/friction.hpp"
#include "nmcontact/mesh.hpp"

namespace nmc {

// Split of the free dofs into contact tangential (u1 at gamma_c nodes),
// contact normal (u2 at gamma_c nodes) and interior. A contact corner whose
// u1 was eliminated by the wall keeps only its normal dof.
struct DofPartition {
  std::vector<int> tangential;       // free dof ids, contact-boundary order
  std::vector<int> normal;           // free dof ids, contact-boundary order
  std::vector<int> interior;         // remaining free dof ids, ascending
  std::vector<int> contact_nodes;    // gamma_c node ids in boundary order
  std::vector<int> tangential_node;  // position within contact_nodes per tangential dof

  int contact_count() const {
    return static_cast<int>(tangential.size() + normal.size());
  }
};

inline DofPartition partition_dofs(const Mesh& mesh, const AssembledSystem& sys) {
  DofPartition part;
  part.contact_nodes = boundary_nodes(mesh, BoundaryTag::gamma_c);

  std::vector<bool> is_contact(sys.free_count(), false);
  for (std::size_t k = 0; k < part.contact_nodes.size(); ++k) {
    const int node = part.contact_nodes[k];
    const int gt = sys.free_index(node, 0);
    if (gt >= 0) {
      part.tangential.push_back(gt);
      part.tangential_node.push_back(static_cast<int>(k));
      is_contact[gt] = true;
    }
    const int gn = sys.free_index(node, 1);
    part.normal.push_back(gn);
    is_contact[gn] = true;
  }
  for (int g = 0; g < sys.free_count(); ++g)
    if (!is_contact[g]) part.interior.push_back(g);
  return part;
}

// Linear system condensed onto the contact dofs: schur = K_cc - K_ci K_ii^-1 K_ic,
// reduced_load = g_c - K_ci K_ii^-1 g_i. Keeps the interior factorization for
// exact recovery of the interior displacements. Contact ordering: all
// tangential dofs first, then all normal dofs, each in boundary order.
struct ReducedSystem {
  Eigen::MatrixXd schur;
  Eigen::VectorXd reduced_load;
  DofPartition partition;
  Eigen::VectorXd contact_edge_lengths;  // per gamma_c edge, boundary order
  Eigen::VectorXd tangential_weights;    // trapezoid weight per tangential dof

  std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> interior_factor;
  Eigen::SparseMatrix<double> coupling;  // K_ic, interior x contact
  Eigen::VectorXd interior_load;
  std::vector<int> free_to_full;  // copied from the assembled system
  int num_nodes = 0;

  int contact_count() const { return static_cast<int>(schur.rows()); }
  int tangential_count() const { return static_cast<int>(partition.tangential.size()); }
  int normal_count() const { return static_cast<int>(partition.normal.size()); }

  Eigen::VectorXd interior_solve(const Eigen::VectorXd& rhs) const {
    return interior_factor->solve(rhs);
  }
};

inline ReducedSystem schur_condense(const AssembledSystem& sys, const DofPartition& part,
                                    const Mesh& mesh) {
  ReducedSystem red;
  red.partition = part;
  red.free_to_full = sys.free_to_full;
  red.num_nodes = sys.num_nodes;

  red.contact_edge_lengths = boundary_edge_lengths(mesh, part.contact_nodes);
  const Eigen::VectorXd node_weights = trapezoid_weights(red.contact_edge_lengths);
  red.tangential_weights.resize(static_cast<Eigen::Index>(part.tangential.size()));
  for (std::size_t k = 0; k < part.tangential.size(); ++k)
    red.tangential_weights[static_cast<Eigen::Index>(k)] = node_weights[part.tangential_node[k]];

  std::vector<int> contact = part.tangential;
  contact.insert(contact.end(), part.normal.begin(), part.normal.end());
  const int nc = static_cast<int>(contact.size());
  const int ni = static_cast<int>(part.interior.size());

  // position of every free dof inside the (contact | interior) ordering
  std::vector<int> contact_pos(sys.free_count(), -1), interior_pos(sys.free_count(), -1);
  for (int k = 0; k < nc; ++k) contact_pos[contact[k]] = k;
  for (int k = 0; k < ni; ++k) interior_pos[part.interior[k]] = k;

  Eigen::MatrixXd k_cc = Eigen::MatrixXd::Zero(nc, nc);
  std::vector<Eigen::Triplet<double>> t_ii, t_ic;
  for (int col = 0; col < sys.stiffness.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.stiffness, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (interior_pos[r] >= 0 && interior_pos[c] >= 0)
        t_ii.emplace_back(interior_pos[r], interior_pos[c], it.value());
      else if (interior_pos[r] >= 0 && contact_pos[c] >= 0)
        t_ic.emplace_back(interior_pos[r], contact_pos[c], it.value());
      else if (contact_pos[r] >= 0 && contact_pos[c] >= 0)
        k_cc(contact_pos[r], contact_pos[c]) += it.value();
    }
  }
  Eigen::SparseMatrix<double> k_ii(ni, ni);
  k_ii.setFromTriplets(t_ii.begin(), t_ii.end());
  red.coupling.resize(ni, nc);
  red.coupling.setFromTriplets(t_ic.begin(), t_ic.end());

  auto factor = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  factor->compute(k_ii);
  bool singular = factor->info() != Eigen::Success;
  if (!singular && ni > 0) {
    const auto& diag = factor->vectorD();
    singular = diag.minCoeff() <= 1e-14 * diag.maxCoeff();
  }
  if (singular)
    throw semicoercivity_error(
        "interior stiffness block is singular: the boundary decomposition leaves an "
        "unpinned rigid mode in the interior block");
  red.interior_factor = std::move(factor);

  red.interior_load.resize(ni);
  Eigen::VectorXd g_c(nc);
  for (int k = 0; k < ni; ++k) red.interior_load[k] = sys.load[part.interior[k]];
  for (int k = 0; k < nc; ++k) g_c[k] = sys.load[contact[k]];

  if (ni > 0) {
    const Eigen::MatrixXd x = red.interior_factor->solve(Eigen::MatrixXd(red.coupling));
    red.schur = k_cc - Eigen::MatrixXd(red.coupling.transpose()) * x;
    red.reduced_load = g_c - red.coupling.transpose() * red.interior_factor->solve(red.interior_load);
  } else {
    red.schur = k_cc;
    red.reduced_load = g_c;
  }
  return red;
}

// Free-dof vector with contact values z and the equilibrium interior values
// K_ii^-1 (g_i - K_ic z).
inline Eigen::VectorXd recover_free(const Eigen::VectorXd& z, const ReducedSystem& red) {
  if (z.size() != red.contact_count())
    throw dimension_error("contact vector size does not match the reduced system");
  const Eigen::Index nf = static_cast<Eigen::Index>(red.partition.interior.size()) + z.size();
  Eigen::VectorXd free_values = Eigen::VectorXd::Zero(nf);

  std::vector<int> contact = red.partition.tangential;
  contact.insert(contact.end(), red.partition.normal.begin(), red.partition.normal.end());
  for (std::size_t k = 0; k < contact.size(); ++k)
    free_values[contact[k]] = z[static_cast<Eigen::Index>(k)];

  if (!red.partition.interior.empty()) {
    const Eigen::VectorXd ui = red.interior_solve(red.interior_load - red.coupling * z);
    for (std::size_t k = 0; k < red.partition.interior.size(); ++k)
      free_values[red.partition.interior[k]] = ui[static_cast<Eigen::Index>(k)];
  }
  return free_values;
}

// Full nodal displacement vector (2 per node); eliminated wall dofs are 0.
inline Eigen::VectorXd recover_full(const Eigen::VectorXd& z, const ReducedSystem& red) {
  const Eigen::VectorXd free_values = recover_free(z, red);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(2 * red.num_nodes);
  for (std::size_t k = 0; k < red.free_to_full.size(); ++k)
    full[red.free_to_full[k]] = free_values[static_cast<Eigen::Index>(k)];
  return full;
}

}  // namespace nmc

#endif  // NMCONTACT_REDUCTION_HPP
