#ifndef NMCONTACT_FRICTION_HPP
#define NMCONTACT_FRICTION_HPP

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "nmcontact/errors.hpp"

namespace nmc {

// Closed interval of admissible slopes of the friction superpotential.
struct SlopeInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v, double tol) const { return v >= lo - tol && v <= hi + tol; }
};

// Nonmonotone tangential friction law built from the superpotential
//   j(x) = min{ gamma1/(2 delta) x^2, gamma2 x }.
// The two branches meet at x = 0 and at the crossing x* = 2 delta gamma2 / gamma1,
// where the generalized slope jumps from 2 gamma2 down to gamma2.
struct FrictionLaw {
  double delta = 9.0e-6;    // m
  double gamma1 = 1.0e3;    // N/m^2
  double gamma2 = 0.5e3;    // N/m^2

  void validate() const {
    if (!(delta > 0.0)) throw config_error("friction parameter delta must be positive");
    if (!(gamma1 > 0.0)) throw config_error("friction parameter gamma1 must be positive");
    if (!(gamma2 > 0.0)) throw config_error("friction parameter gamma2 must be positive");
  }

  double quad_coeff() const { return gamma1 / (2.0 * delta); }
  double crossing() const { return 2.0 * delta * gamma2 / gamma1; }

  // branches of -j, the function the smoothing approximates from above
  double g1(double x) const { return -quad_coeff() * x * x; }
  double g2(double x) const { return -gamma2 * x; }
  double g1_prime(double x) const { return -(gamma1 / delta) * x; }
  double g2_prime() const { return -gamma2; }
  double g1_second() const { return -gamma1 / delta; }
};

inline double superpotential(double x, const FrictionLaw& law) {
  return std::min(law.quad_coeff() * x * x, law.gamma2 * x);
}

// Clarke subdifferential of j. Away from the branch crossings this is the
// active branch slope; where the branch values tie it is the convex hull of
// the two slopes. Ties are detected up to a few ulps.
inline SlopeInterval subdifferential(double x, const FrictionLaw& law) {
  const double quad = law.quad_coeff() * x * x;
  const double lin = law.gamma2 * x;
  const double quad_slope = (law.gamma1 / law.delta) * x;
  const double lin_slope = law.gamma2;
  const double tie_tol = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max({std::abs(quad), std::abs(lin), 1e-300});
  if (std::abs(quad - lin) <= tie_tol)
    return {std::min(quad_slope, lin_slope), std::max(quad_slope, lin_slope)};
  const double active = quad < lin ? quad_slope : lin_slope;
  return {active, active};
}

struct SmoothingParams {
  double epsilon = 0.1;  // N/m, width of the blending band in branch values

  void validate() const {
    if (!(epsilon > 0.0)) throw config_error("smoothing parameter epsilon must be positive");
  }
};

enum class SmoothingCase { quadratic_branch, blend, linear_branch };

// Case selection for the C^1 approximation S of max{g1, g2}, keyed on the
// branch gap g2 - g1. The blend interval is closed on both ends.
inline SmoothingCase smoothing_case(double x, double epsilon, const FrictionLaw& law) {
  const double gap = law.g2(x) - law.g1(x);
  if (gap < -0.5 * epsilon) return SmoothingCase::quadratic_branch;
  if (gap > 0.5 * epsilon) return SmoothingCase::linear_branch;
  return SmoothingCase::blend;
}

// S(x, epsilon): equals the dominant branch outside the blending band and a
// quadratic-in-gap blend inside it; C^1 in x with
// max{g1,g2} <= S <= max{g1,g2} + epsilon/8.
inline double smooth_value(double x, double epsilon, const FrictionLaw& law) {
  const double a = law.g1(x), b = law.g2(x);
  switch (smoothing_case(x, epsilon, law)) {
    case SmoothingCase::quadratic_branch: return a;
    case SmoothingCase::linear_branch: return b;
    case SmoothingCase::blend: {
      const double gap = b - a;
      return gap * gap / (2.0 * epsilon) + 0.5 * (a + b) + epsilon / 8.0;
    }
  }
  return 0.0;
}

inline double smooth_slope(double x, double epsilon, const FrictionLaw& law) {
  switch (smoothing_case(x, epsilon, law)) {
    case SmoothingCase::quadratic_branch: return law.g1_prime(x);
    case SmoothingCase::linear_branch: return law.g2_prime();
    case SmoothingCase::blend: {
      const double gap = law.g2(x) - law.g1(x);
      const double gap_prime = law.g2_prime() - law.g1_prime(x);
      return gap * gap_prime / epsilon + 0.5 * (law.g1_prime(x) + law.g2_prime());
    }
  }
  return 0.0;
}

// Piecewise second derivative of S (constant jumps at the case boundaries are
// fine: it only feeds the least-squares Jacobian).
inline double smooth_curvature(double x, double epsilon, const FrictionLaw& law) {
  switch (smoothing_case(x, epsilon, law)) {
    case SmoothingCase::quadratic_branch: return law.g1_second();
    case SmoothingCase::linear_branch: return 0.0;
    case SmoothingCase::blend: {
      const double gap = law.g2(x) - law.g1(x);
      const double gap_prime = law.g2_prime() - law.g1_prime(x);
      const double gap_second = -law.g1_second();
      return (gap_prime * gap_prime + gap * gap_second) / epsilon + 0.5 * law.g1_second();
    }
  }
  return 0.0;
}

// Interval guaranteed to contain -S'(x, epsilon): the Clarke subdifferential
// of j, widened to the hull of both branch slopes wherever the blend is
// active. Shrinks back to the subdifferential graph as epsilon -> 0.
inline SlopeInterval regularized_law_interval(double x, double epsilon, const FrictionLaw& law) {
  if (smoothing_case(x, epsilon, law) != SmoothingCase::blend) return subdifferential(x, law);
  const double quad_slope = (law.gamma1 / law.delta) * x;
  const double lin_slope = law.gamma2;
  return {std::min(quad_slope, lin_slope), std::max(quad_slope, lin_slope)};
}

// Trapezoid weight of each node of a polyline with the given edge lengths:
// half the total length of its incident edges.
inline Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& edge_lengths) {
  const Eigen::Index n = edge_lengths.size() + 1;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < edge_lengths.size(); ++k) {
    w[k] += 0.5 * edge_lengths[k];
    w[k + 1] += 0.5 * edge_lengths[k];
  }
  return w;
}

// Nodal friction force vector: trapezoidal quadrature of S'(u1) against the
// hat functions on the contact polyline. Component i is w_i * S'(u1_i).
inline Eigen::VectorXd assemble_friction_gradient(const Eigen::VectorXd& contact_u1,
                                                  const Eigen::VectorXd& edge_lengths,
                                                  double epsilon, const FrictionLaw& law) {
  if (contact_u1.size() != edge_lengths.size() + 1)
    throw dimension_error("contact displacement and edge length arrays are inconsistent");
  if ((edge_lengths.array() <= 0.0).any())
    throw geometry_error("contact edges must have positive length");
  const Eigen::VectorXd w = trapezoid_weights(edge_lengths);
  Eigen::VectorXd out(contact_u1.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = w[i] * smooth_slope(contact_u1[i], epsilon, law);
  return out;
}

// Diagonal of the derivative of assemble_friction_gradient with respect to
// the nodal displacements.
inline Eigen::VectorXd friction_gradient_jacobian_diag(const Eigen::VectorXd& contact_u1,
                                                       const Eigen::VectorXd& edge_lengths,
                                                       double epsilon, const FrictionLaw& law) {
  if (contact_u1.size() != edge_lengths.size() + 1)
    throw dimension_error("contact displacement and edge length arrays are inconsistent");
  const Eigen::VectorXd w = trapezoid_weights(edge_lengths);
  Eigen::VectorXd out(contact_u1.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = w[i] * smooth_curvature(contact_u1[i], epsilon, law);
  return out;
}

// Bounds for the growth of the generalized slopes:
//   |eta| <= c3 (1 + |xi|)  and  eta * (-xi) <= c4 |xi|  for eta in dj(xi).
// For this law c3 = max{2 gamma2, gamma1 x*/delta} and c4 = gamma2 are tight.
struct GrowthBounds {
  double c3 = 0.0;
  double c4 = 0.0;
};

inline GrowthBounds growth_bounds(const FrictionLaw& law) {
  return {std::max(2.0 * law.gamma2, law.gamma1 * law.crossing() / law.delta), law.gamma2};
}

inline bool growth_conditions_hold(double x, const FrictionLaw& law) {
  const GrowthBounds gb = growth_bounds(law);
  const SlopeInterval dj = subdifferential(x, law);
  const double tol = 1e-12 * gb.c3;
  for (double eta : {dj.lo, dj.hi}) {
    if (std::abs(eta) > gb.c3 * (1.0 + std::abs(x)) + tol) return false;
    if (eta * (-x) > gb.c4 * std::abs(x) + tol) return false;
  }
  return true;
}

}  // namespace nmc

#endif  // NMCONTACT_FRICTION_HPP
