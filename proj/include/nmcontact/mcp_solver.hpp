#ifndef NMCONTACT_MCP_SOLVER_HPP
#define NMCONTACT_MCP_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "nmcontact/errors.hpp"
#include "nmcontact/friction.hpp"
#include "nmcontact/reduction.hpp"

namespace nmc {

// f(a, b) = sqrt(a^2 + b^2) - (a + b); zero exactly when a >= 0, b >= 0, ab = 0.
inline double fischer_burmeister(double a, double b) {
  return std::sqrt(a * a + b * b) - (a + b);
}

// Generalized gradient (df/da, df/db); at the origin the element
// (sqrt(2)/2 - 1, sqrt(2)/2 - 1) of the Clarke gradient is returned.
inline std::pair<double, double> fb_derivative(double a, double b) {
  const double r = std::sqrt(a * a + b * b);
  if (r == 0.0) {
    const double d = std::sqrt(0.5) - 1.0;
    return {d, d};
  }
  return {a / r - 1.0, b / r - 1.0};
}

// Mixed complementarity problem over the contact unknowns z:
//   F(z) = stiffness z - friction(z) - load,
//   friction[t_k]   = w_k S'(z[t_k], epsilon)   (tangential dofs only),
//   F_i = 0 on free indices,  z_i >= 0, F_i >= 0, z_i F_i = 0 on normal indices.
// Residuals are nondimensionalized by residual_scale = max(1, ||load||_inf)
// before entering the Fischer-Burmeister composition, since forces and
// displacements differ by many orders of magnitude.
struct McpProblem {
  Eigen::MatrixXd stiffness;
  Eigen::VectorXd load;
  std::vector<int> tangential;        // indices into z carrying friction
  Eigen::VectorXd tangential_weights;
  std::vector<int> normal;            // indices into z with the unilateral bound
  double epsilon = 0.1;
  FrictionLaw law;
  double residual_scale = 1.0;

  int size() const { return static_cast<int>(stiffness.rows()); }

  void check() const {
    if (stiffness.rows() != stiffness.cols() || load.size() != stiffness.rows())
      throw dimension_error("mcp problem blocks have inconsistent sizes");
    if (tangential_weights.size() != static_cast<Eigen::Index>(tangential.size()))
      throw dimension_error("tangential weights do not match tangential index set");
  }
};

inline McpProblem make_contact_problem(const ReducedSystem& red, double epsilon,
                                       const FrictionLaw& law) {
  SmoothingParams{epsilon}.validate();
  law.validate();
  McpProblem p;
  p.stiffness = red.schur;
  p.load = red.reduced_load;
  p.epsilon = epsilon;
  p.law = law;
  const int nt = red.tangential_count();
  p.tangential.resize(nt);
  for (int k = 0; k < nt; ++k) p.tangential[k] = k;
  p.tangential_weights = red.tangential_weights;
  for (int k = 0; k < red.normal_count(); ++k) p.normal.push_back(nt + k);
  p.residual_scale = std::max(1.0, p.load.lpNorm<Eigen::Infinity>());
  return p;
}

// Same complementarity structure posed on all free dofs of the unreduced
// system; used to cross-check the condensation.
inline McpProblem make_full_space_problem(const Mesh& mesh, const AssembledSystem& sys,
                                          const DofPartition& part, double epsilon,
                                          const FrictionLaw& law) {
  McpProblem p;
  p.stiffness = Eigen::MatrixXd(sys.stiffness);
  p.load = sys.load;
  p.epsilon = epsilon;
  p.law = law;
  p.tangential = part.tangential;
  const Eigen::VectorXd node_weights =
      trapezoid_weights(boundary_edge_lengths(mesh, part.contact_nodes));
  p.tangential_weights.resize(static_cast<Eigen::Index>(part.tangential.size()));
  for (std::size_t k = 0; k < part.tangential.size(); ++k)
    p.tangential_weights[static_cast<Eigen::Index>(k)] = node_weights[part.tangential_node[k]];
  p.normal = part.normal;
  p.residual_scale = std::max(1.0, p.load.lpNorm<Eigen::Infinity>());
  return p;
}

// F(z), unscaled (force units).
inline Eigen::VectorXd mcp_force(const Eigen::VectorXd& z, const McpProblem& p) {
  if (z.size() != p.size()) throw dimension_error("state vector size mismatch");
  Eigen::VectorXd f = p.stiffness * z - p.load;
  for (std::size_t k = 0; k < p.tangential.size(); ++k) {
    const int i = p.tangential[k];
    f[i] -= p.tangential_weights[static_cast<Eigen::Index>(k)] *
            smooth_slope(z[i], p.epsilon, p.law);
  }
  return f;
}

inline Eigen::VectorXd mcp_force_scaled(const Eigen::VectorXd& z, const McpProblem& p) {
  return mcp_force(z, p) / p.residual_scale;
}

// Nonlinear-equation reformulation: identity rows on free indices,
// Fischer-Burmeister rows on normal indices.
inline Eigen::VectorXd residual_map(const Eigen::VectorXd& z, const McpProblem& p) {
  Eigen::VectorXd phi = mcp_force_scaled(z, p);
  for (int i : p.normal) phi[i] = fischer_burmeister(z[i], phi[i]);
  return phi;
}

// Scaled derivative of F.
inline Eigen::MatrixXd mcp_force_jacobian_scaled(const Eigen::VectorXd& z, const McpProblem& p) {
  Eigen::MatrixXd jf = p.stiffness;
  for (std::size_t k = 0; k < p.tangential.size(); ++k) {
    const int i = p.tangential[k];
    jf(i, i) -= p.tangential_weights[static_cast<Eigen::Index>(k)] *
                smooth_curvature(z[i], p.epsilon, p.law);
  }
  return jf / p.residual_scale;
}

inline Eigen::MatrixXd residual_jacobian(const Eigen::VectorXd& z, const McpProblem& p) {
  const Eigen::VectorXd ft = mcp_force_scaled(z, p);
  const Eigen::MatrixXd jf = mcp_force_jacobian_scaled(z, p);
  Eigen::MatrixXd j = jf;
  for (int i : p.normal) {
    const auto [da, db] = fb_derivative(z[i], ft[i]);
    j.row(i) = db * jf.row(i);
    j(i, i) += da;
  }
  return j;
}

inline double merit(const Eigen::VectorXd& z, const McpProblem& p) {
  return 0.5 * residual_map(z, p).squaredNorm();
}

struct SolverConfig {
  int max_iterations = 100;
  double merit_tolerance = 1e-16;
  double step_tolerance = 1e-12;
  double initial_radius = 1.0;
  double shrink_factor = 0.25;
  double grow_factor = 2.0;
  Eigen::VectorXd initial_guess;  // empty -> zero vector
  int num_starts = 1;             // extra starts perturb the initial guess
  double start_spread = 0.0;
  std::uint64_t seed = 20240915;

  void validate() const {
    if (max_iterations < 1) throw config_error("max_iterations must be at least 1");
    if (!(merit_tolerance > 0.0)) throw config_error("merit_tolerance must be positive");
    if (!(step_tolerance > 0.0)) throw config_error("step_tolerance must be positive");
    if (!(initial_radius > 0.0)) throw config_error("initial_radius must be positive");
    if (!(shrink_factor > 0.0 && shrink_factor < 1.0))
      throw config_error("shrink_factor must lie in (0, 1)");
    if (!(grow_factor > 1.0)) throw config_error("grow_factor must exceed 1");
    if (num_starts < 1) throw config_error("num_starts must be at least 1");
    if (start_spread < 0.0) throw config_error("start_spread must be nonnegative");
  }
};

struct KktCheck {
  double min_normal_displacement = 0.0;  // min z_n
  double min_normal_force = 0.0;         // min scaled F_n
  double max_complementarity = 0.0;      // max |z_n * scaled F_n|
  double max_equation_residual = 0.0;    // max |scaled F| over non-normal rows
};

inline KktCheck kkt_check(const Eigen::VectorXd& z, const McpProblem& p) {
  KktCheck out;
  const Eigen::VectorXd ft = mcp_force_scaled(z, p);
  std::vector<bool> is_normal(static_cast<std::size_t>(p.size()), false);
  for (int i : p.normal) is_normal[static_cast<std::size_t>(i)] = true;
  double min_z = std::numeric_limits<double>::infinity();
  double min_f = std::numeric_limits<double>::infinity();
  double max_comp = 0.0, max_res = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (is_normal[static_cast<std::size_t>(i)]) {
      min_z = std::min(min_z, z[i]);
      min_f = std::min(min_f, ft[i]);
      max_comp = std::max(max_comp, std::abs(z[i] * ft[i]));
    } else {
      max_res = std::max(max_res, std::abs(ft[i]));
    }
  }
  out.min_normal_displacement = p.normal.empty() ? 0.0 : min_z;
  out.min_normal_force = p.normal.empty() ? 0.0 : min_f;
  out.max_complementarity = max_comp;
  out.max_equation_residual = max_res;
  return out;
}

struct SolveReport {
  Eigen::VectorXd solution;
  bool converged = false;
  int iterations = 0;
  double merit_value = std::numeric_limits<double>::infinity();
  double residual_inf = std::numeric_limits<double>::infinity();
  KktCheck complementarity;
  double wall_time_seconds = 0.0;
  std::string failure;  // empty unless the iteration hit non-finite values
  std::vector<double> start_merits;
};

namespace detail {

// min ||J p + phi|| subject to ||p|| <= radius, via the SVD of J and a
// safeguarded Newton search for the damping parameter.
inline Eigen::VectorXd trust_region_step(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd,
                                         const Eigen::VectorXd& phi, double radius) {
  const Eigen::VectorXd& s = svd.singularValues();
  const Eigen::VectorXd q = svd.matrixU().transpose() * phi;

  auto step_norm_sq = [&](double lambda, Eigen::VectorXd* coef) {
    double nsq = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      double c;
      if (lambda == 0.0) {
        const double cutoff = s.size() ? 1e-14 * s[0] : 0.0;
        c = s[k] > cutoff ? q[k] / s[k] : 0.0;
      } else {
        c = s[k] * q[k] / (s[k] * s[k] + lambda);
      }
      if (coef) (*coef)[k] = c;
      nsq += c * c;
    }
    return nsq;
  };

  Eigen::VectorXd coef(s.size());
  double nsq = step_norm_sq(0.0, &coef);
  if (std::sqrt(nsq) <= radius) return -svd.matrixV() * coef;

  // ||p(lambda)|| <= ||S q|| / lambda, so this bracket always contains the root
  double hi = (s.asDiagonal() * q).norm() / radius;
  double lo = 0.0;
  double lambda = std::max(1e-3 * hi, std::numeric_limits<double>::min());
  for (int it = 0; it < 80; ++it) {
    nsq = step_norm_sq(lambda, &coef);
    const double n = std::sqrt(nsq);
    if (std::abs(n - radius) <= 1e-2 * radius) break;
    if (n > radius) lo = lambda; else hi = std::min(hi, lambda);
    double dnsq = 0.0;  // d||p||^2/dlambda
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      const double d = s[k] * s[k] + lambda;
      dnsq += -2.0 * s[k] * s[k] * q[k] * q[k] / (d * d * d);
    }
    const double dn = dnsq / (2.0 * n);
    // Newton on 1/n - 1/radius (nearly linear in lambda)
    double next = lambda + (1.0 / radius - 1.0 / n) * (n * n / dn);
    if (!(next > lo && next < hi)) next = std::max(std::sqrt(lo * hi), lo + 0.5 * (hi - lo));
    lambda = next;
  }
  step_norm_sq(lambda, &coef);
  return -svd.matrixV() * coef;
}

struct SingleRun {
  Eigen::VectorXd z;
  bool converged = false;
  int iterations = 0;
  double merit_value = 0.0;
  std::string failure;
};

inline SingleRun run_trust_region(const McpProblem& prob, const SolverConfig& cfg,
                                  Eigen::VectorXd z) {
  SingleRun run;
  Eigen::VectorXd phi = residual_map(z, prob);
  if (!phi.allFinite()) {
    run.z = std::move(z);
    run.failure = "non-finite residual at the initial point";
    run.merit_value = std::numeric_limits<double>::infinity();
    return run;
  }
  double psi = 0.5 * phi.squaredNorm();
  double radius = cfg.initial_radius;
  int iters = 0;

  while (psi > cfg.merit_tolerance && iters < cfg.max_iterations) {
    const Eigen::MatrixXd j = residual_jacobian(z, prob);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);

    bool accepted = false;
    double step_norm = 0.0;
    while (!accepted) {
      const Eigen::VectorXd p = trust_region_step(svd, phi, radius);
      const double predicted = psi - 0.5 * (j * p + phi).squaredNorm();
      const Eigen::VectorXd trial = z + p;
      const Eigen::VectorXd phi_trial = residual_map(trial, prob);
      const bool finite = phi_trial.allFinite();
      const double psi_trial =
          finite ? 0.5 * phi_trial.squaredNorm() : std::numeric_limits<double>::infinity();
      const double rho =
          (psi - psi_trial) / std::max(predicted, std::numeric_limits<double>::min());

      if (finite && rho > 1e-4) {
        accepted = true;
        z = trial;
        phi = phi_trial;
        psi = psi_trial;
        step_norm = p.norm();
        if (rho > 0.75 && step_norm >= 0.99 * radius)
          radius *= cfg.grow_factor;
        else if (rho < 0.25)
          radius *= cfg.shrink_factor;
      } else {
        if (!finite && radius < 1e-280) {
          run.z = std::move(z);
          run.failure = "non-finite residual persisted while shrinking the trust region";
          run.merit_value = psi;
          run.iterations = iters;
          return run;
        }
        radius = cfg.shrink_factor * std::min(radius, p.norm());
        if (radius <= 1e-18 * (1.0 + z.norm())) {
          // no acceptable step left at this point
          run.z = std::move(z);
          run.converged = psi <= cfg.merit_tolerance;
          run.merit_value = psi;
          run.iterations = iters;
          return run;
        }
      }
    }
    ++iters;
    if (step_norm <= cfg.step_tolerance * (cfg.step_tolerance + z.norm())) break;
  }

  run.z = std::move(z);
  run.converged = psi <= cfg.merit_tolerance;
  run.merit_value = psi;
  run.iterations = iters;
  return run;
}

}  // namespace detail

// Levenberg-Marquardt minimization of 0.5 ||Phi||^2 with explicit 2-norm
// radius control and the analytic generalized Jacobian. Deterministic for a
// fixed config; optional perturbed restarts explore other merit basins.
inline SolveReport solve_trust_region(const McpProblem& prob, const SolverConfig& cfg) {
  prob.check();
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  Eigen::VectorXd base = cfg.initial_guess.size() > 0
                             ? cfg.initial_guess
                             : Eigen::VectorXd::Zero(prob.size());
  if (base.size() != prob.size())
    throw dimension_error("initial guess size does not match the problem");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  SolveReport report;
  detail::SingleRun best;
  bool have_best = false;
  for (int s = 0; s < cfg.num_starts; ++s) {
    Eigen::VectorXd z0 = base;
    if (s > 0)
      for (Eigen::Index k = 0; k < z0.size(); ++k) z0[k] += cfg.start_spread * noise(rng);
    detail::SingleRun run = detail::run_trust_region(prob, cfg, std::move(z0));
    report.start_merits.push_back(run.merit_value);
    if (!have_best || run.merit_value < best.merit_value) {
      best = std::move(run);
      have_best = true;
    }
  }

  report.solution = best.z;
  report.converged = best.converged;
  report.iterations = best.iterations;
  report.merit_value = best.merit_value;
  report.failure = best.failure;
  const Eigen::VectorXd phi = residual_map(best.z, prob);
  report.residual_inf = phi.allFinite() ? phi.lpNorm<Eigen::Infinity>()
                                        : std::numeric_limits<double>::infinity();
  report.complementarity = kkt_check(best.z, prob);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

struct ActiveSetSolution {
  bool found = false;
  Eigen::VectorXd z;
  double violation = std::numeric_limits<double>::infinity();
  std::uint32_t active_mask = 0;
};

// Enumeration oracle: tries every active set of the normal constraints,
// solves the resulting smooth system by damped Newton and keeps the feasible
// candidate with the smallest violation. Exponential in the number of normal
// dofs; intended for small verification instances.
inline ActiveSetSolution brute_force_active_set(const McpProblem& prob) {
  prob.check();
  const int m = static_cast<int>(prob.normal.size());
  if (m > 12)
    throw dimension_error("active-set enumeration supports at most 12 normal dofs");

  const int n = prob.size();
  ActiveSetSolution best;

  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    for (int k = 0; k < m; ++k)
      if (mask & (1u << k)) active[static_cast<std::size_t>(prob.normal[k])] = true;

    std::vector<int> unknowns;
    for (int i = 0; i < n; ++i)
      if (!active[static_cast<std::size_t>(i)]) unknowns.push_back(i);

    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    bool solved = unknowns.empty();
    double res_norm = 0.0;
    for (int it = 0; it < 100 && !unknowns.empty(); ++it) {
      const Eigen::VectorXd ft = mcp_force_scaled(z, prob);
      Eigen::VectorXd r(static_cast<Eigen::Index>(unknowns.size()));
      for (std::size_t k = 0; k < unknowns.size(); ++k)
        r[static_cast<Eigen::Index>(k)] = ft[unknowns[k]];
      res_norm = r.lpNorm<Eigen::Infinity>();
      if (res_norm <= 1e-13) {
        solved = true;
        break;
      }
      const Eigen::MatrixXd jf = mcp_force_jacobian_scaled(z, prob);
      Eigen::MatrixXd jsub(unknowns.size(), unknowns.size());
      for (std::size_t a = 0; a < unknowns.size(); ++a)
        for (std::size_t b = 0; b < unknowns.size(); ++b)
          jsub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              jf(unknowns[a], unknowns[b]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(jsub);
      if (!lu.isInvertible()) break;
      const Eigen::VectorXd dy = lu.solve(-r);

      double alpha = 1.0;
      bool stepped = false;
      while (alpha > 1e-8) {
        Eigen::VectorXd z_try = z;
        for (std::size_t k = 0; k < unknowns.size(); ++k)
          z_try[unknowns[k]] += alpha * dy[static_cast<Eigen::Index>(k)];
        const Eigen::VectorXd ft_try = mcp_force_scaled(z_try, prob);
        double norm_try = 0.0;
        for (int u : unknowns) norm_try = std::max(norm_try, std::abs(ft_try[u]));
        if (std::isfinite(norm_try) && norm_try <= (1.0 - 1e-4 * alpha) * res_norm) {
          z = std::move(z_try);
          stepped = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!stepped) break;
    }
    if (!solved) continue;

    const Eigen::VectorXd ft = mcp_force_scaled(z, prob);
    double min_zn = 0.0, min_fa = 0.0;
    for (int i : prob.normal) min_zn = std::min(min_zn, z[i]);
    for (int k = 0; k < m; ++k)
      if (mask & (1u << k)) min_fa = std::min(min_fa, ft[prob.normal[k]]);
    if (min_zn < -1e-10 || min_fa < -1e-10) continue;

    const double violation = std::max(0.0, -min_zn) + std::max(0.0, -min_fa) + res_norm;
    if (violation < best.violation) {
      best.found = true;
      best.z = z;
      best.violation = violation;
      best.active_mask = mask;
    }
  }
  return best;
}

}  // namespace nmc

#endif  // NMCONTACT_MCP_SOLVER_HPP
