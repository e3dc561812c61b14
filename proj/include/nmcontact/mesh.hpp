#ifndef NMCONTACT_MESH_HPP
#define NMCONTACT_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nmcontact/errors.hpp"

namespace nmc {

enum class BoundaryTag { gamma1, gamma2, gamma3, gamma_c, free_boundary };

inline const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::gamma1: return "gamma1";
    case BoundaryTag::gamma2: return "gamma2";
    case BoundaryTag::gamma3: return "gamma3";
    case BoundaryTag::gamma_c: return "gamma_c";
    case BoundaryTag::free_boundary: return "free";
  }
  return "?";
}

inline std::optional<BoundaryTag> boundary_tag_from_string(const std::string& s) {
  if (s == "gamma1") return BoundaryTag::gamma1;
  if (s == "gamma2") return BoundaryTag::gamma2;
  if (s == "gamma3") return BoundaryTag::gamma3;
  if (s == "gamma_c") return BoundaryTag::gamma_c;
  if (s == "free") return BoundaryTag::free_boundary;
  return std::nullopt;
}

enum class Side { bottom, right, top, left };

inline const char* to_string(Side s) {
  switch (s) {
    case Side::bottom: return "bottom";
    case Side::right: return "right";
    case Side::top: return "top";
    case Side::left: return "left";
  }
  return "?";
}

inline std::optional<Side> side_from_string(const std::string& s) {
  if (s == "bottom") return Side::bottom;
  if (s == "right") return Side::right;
  if (s == "top") return Side::top;
  if (s == "left") return Side::left;
  return std::nullopt;
}

// Piece of the unit-square boundary: a parameter interval [lo, hi] along one
// side. The side parameter is x1 on bottom/top and x2 on left/right.
struct BoundarySegment {
  Side side;
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
};

inline constexpr double kGeomTol = 1e-12;

// Decomposition of the boundary into tagged segments. gamma1/gamma2 carry
// surface tractions, gamma3 pins the horizontal displacement, gamma_c is the
// unilateral frictional contact side, free segments carry nothing.
struct BoundarySpec {
  std::vector<std::pair<BoundaryTag, BoundarySegment>> segments;

  // Rejects malformed, overlapping, or non-covering decompositions.
  void validate() const {
    check_segments(/*require_cover=*/true);
  }

  // Lighter check used during tagging; gaps surface later as untaggable edges.
  void validate_overlap_only() const {
    check_segments(/*require_cover=*/false);
  }

  double tagged_length(BoundaryTag tag) const {
    double total = 0.0;
    for (const auto& [t, seg] : segments)
      if (t == tag) total += seg.length();
    return total;
  }

  bool has_tag(BoundaryTag tag) const {
    for (const auto& [t, seg] : segments)
      if (t == tag && seg.length() > kGeomTol) return true;
    return false;
  }

  // The benchmark decomposition: contact along the bottom, the wall (u1 = 0)
  // on one vertical side, the horizontal traction on the opposite side, the
  // vertical traction on top. wall_left puts the wall at x1 = 0.
  static BoundarySpec benchmark(bool wall_left) {
    BoundarySpec spec;
    spec.segments = {
        {BoundaryTag::gamma_c, {Side::bottom, 0.0, 1.0}},
        {BoundaryTag::gamma3, {wall_left ? Side::left : Side::right, 0.0, 1.0}},
        {BoundaryTag::gamma1, {wall_left ? Side::right : Side::left, 0.0, 1.0}},
        {BoundaryTag::gamma2, {Side::top, 0.0, 1.0}},
    };
    return spec;
  }

 private:
  void check_segments(bool require_cover) const {
    std::map<Side, std::vector<BoundarySegment>> by_side;
    for (const auto& [tag, seg] : segments) {
      if (seg.lo < -kGeomTol || seg.hi > 1.0 + kGeomTol || seg.hi <= seg.lo)
        throw config_error(std::string("boundary segment on side ") +
                           to_string(seg.side) + " has invalid interval");
      by_side[seg.side].push_back(seg);
    }
    for (auto& [side, segs] : by_side) {
      std::sort(segs.begin(), segs.end(),
                [](const BoundarySegment& a, const BoundarySegment& b) { return a.lo < b.lo; });
      for (std::size_t k = 1; k < segs.size(); ++k)
        if (segs[k].lo < segs[k - 1].hi - kGeomTol)
          throw config_error(std::string("overlapping boundary segments on side ") +
                             to_string(side));
    }
    if (require_cover) {
      for (Side side : {Side::bottom, Side::right, Side::top, Side::left}) {
        auto it = by_side.find(side);
        double covered = 0.0;
        if (it != by_side.end()) {
          double cursor = 0.0;
          for (const auto& seg : it->second) {
            if (seg.lo > cursor + kGeomTol) break;
            cursor = std::max(cursor, seg.hi);
          }
          covered = cursor;
        }
        if (covered < 1.0 - kGeomTol)
          throw config_error(std::string("boundary side ") + to_string(side) +
                             " is not fully covered by the decomposition");
      }
    }
    if (tagged_length(BoundaryTag::gamma_c) <= kGeomTol)
      throw config_error("contact boundary gamma_c must have positive length");
  }
};

struct BoundaryEdge {
  int a = 0;  // node ids; a precedes b in the side parameter
  int b = 0;
  std::optional<BoundaryTag> tag;
};

// Structured triangulation of the unit square. Immutable after construction;
// shareable across threads for reads.
struct Mesh {
  int divisions = 0;  // cells per side
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
};

inline double triangle_signed_area(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                                   const Eigen::Vector2d& p2) {
  return 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) -
                (p2.x() - p0.x()) * (p1.y() - p0.y()));
}

// Regular n x n grid, each cell split along the lower-left to upper-right
// diagonal. Node (i, j) -> index j*(n+1)+i. Edges are created untagged.
inline Mesh build_unit_square_mesh(int n) {
  if (n < 1) throw config_error("mesh divisions must be at least 1");

  Mesh mesh;
  mesh.divisions = n;
  const int m = n + 1;
  const double h = 1.0 / static_cast<double>(n);

  mesh.nodes.reserve(static_cast<std::size_t>(m) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      mesh.nodes.emplace_back(i * h, j * h);

  auto id = [m](int i, int j) { return j * m + i; };

  mesh.triangles.reserve(2u * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }

  mesh.boundary_edges.reserve(4u * n);
  for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), {}});
  for (int j = 0; j < n; ++j) mesh.boundary_edges.push_back({id(n, j), id(n, j + 1), {}});
  for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({id(i, n), id(i + 1, n), {}});
  for (int j = 0; j < n; ++j) mesh.boundary_edges.push_back({id(0, j), id(0, j + 1), {}});
  return mesh;
}

namespace detail {

// Side of the square an on-boundary point lies on, with its side parameter.
inline std::optional<std::pair<Side, double>> classify_boundary_point(const Eigen::Vector2d& p) {
  if (std::abs(p.y()) <= kGeomTol) return {{Side::bottom, p.x()}};
  if (std::abs(p.x() - 1.0) <= kGeomTol) return {{Side::right, p.y()}};
  if (std::abs(p.y() - 1.0) <= kGeomTol) return {{Side::top, p.x()}};
  if (std::abs(p.x()) <= kGeomTol) return {{Side::left, p.y()}};
  return std::nullopt;
}

}  // namespace detail

// Assigns to every boundary edge the tag of the segment containing its
// midpoint. An edge whose midpoint matches no segment (a gap in the spec)
// is a configuration error.
inline Mesh tag_boundary(Mesh mesh, const BoundarySpec& spec) {
  spec.validate_overlap_only();
  for (auto& edge : mesh.boundary_edges) {
    const Eigen::Vector2d mid = 0.5 * (mesh.nodes[edge.a] + mesh.nodes[edge.b]);
    const auto where = detail::classify_boundary_point(mid);
    if (!where)
      throw geometry_error("boundary edge midpoint is not on the unit-square boundary");
    edge.tag.reset();
    for (const auto& [tag, seg] : spec.segments) {
      if (seg.side != where->first) continue;
      if (where->second >= seg.lo - kGeomTol && where->second <= seg.hi + kGeomTol) {
        edge.tag = tag;
        break;
      }
    }
    if (!edge.tag) {
      std::ostringstream msg;
      msg << "boundary edge (" << edge.a << ", " << edge.b << ") with midpoint ("
          << mid.x() << ", " << mid.y() << ") matches no segment of the boundary spec";
      throw config_error(msg.str());
    }
  }
  return mesh;
}

// Nodes of the tagged part, ordered along it. Chains start at the
// lexicographically smallest endpoint, which orders a bottom/top run left to
// right and a vertical run bottom to top; closed loops start at the
// lexicographically smallest node and proceed through its greater neighbour.
inline std::vector<int> boundary_nodes(const Mesh& mesh, BoundaryTag tag) {
  std::map<int, std::vector<int>> adjacency;
  std::size_t edge_count = 0;
  for (const auto& edge : mesh.boundary_edges) {
    if (!edge.tag || *edge.tag != tag) continue;
    adjacency[edge.a].push_back(edge.b);
    adjacency[edge.b].push_back(edge.a);
    ++edge_count;
  }
  if (edge_count == 0)
    throw lookup_error(std::string("no boundary edge carries tag ") + to_string(tag));

  auto lex_less = [&mesh](int u, int v) {
    const auto &pu = mesh.nodes[u], &pv = mesh.nodes[v];
    if (pu.x() != pv.x()) return pu.x() < pv.x();
    return pu.y() < pv.y();
  };

  std::vector<int> endpoints;
  for (const auto& [node, nbrs] : adjacency) {
    if (nbrs.size() > 2)
      throw lookup_error(std::string("edges tagged ") + to_string(tag) +
                         " do not form a simple chain");
    if (nbrs.size() == 1) endpoints.push_back(node);
  }

  int start = -1, next = -1;
  if (endpoints.empty()) {
    // closed loop (the whole boundary under one tag)
    start = adjacency.begin()->first;
    for (const auto& [node, nbrs] : adjacency)
      if (lex_less(node, start)) start = node;
    const auto& nbrs = adjacency.at(start);
    next = lex_less(nbrs[0], nbrs[1]) ? nbrs[1] : nbrs[0];
  } else if (endpoints.size() == 2) {
    start = lex_less(endpoints[0], endpoints[1]) ? endpoints[0] : endpoints[1];
    next = adjacency.at(start)[0];
  } else {
    throw lookup_error(std::string("edges tagged ") + to_string(tag) +
                       " form a disconnected set");
  }

  std::vector<int> ordered = {start, next};
  while (ordered.size() <= edge_count) {
    const auto& nbrs = adjacency.at(ordered.back());
    const int prev = ordered[ordered.size() - 2];
    int forward = -1;
    for (int nb : nbrs)
      if (nb != prev) forward = nb;
    if (forward < 0) break;  // reached the far endpoint
    if (forward == start) break;
    ordered.push_back(forward);
  }
  if (ordered.size() != edge_count + 1)
    throw lookup_error(std::string("edges tagged ") + to_string(tag) +
                       " form a disconnected set");
  return ordered;
}

inline Eigen::VectorXd boundary_edge_lengths(const Mesh& mesh, const std::vector<int>& chain) {
  Eigen::VectorXd lengths(std::max<std::size_t>(chain.size(), 1) - 1);
  for (std::size_t k = 0; k + 1 < chain.size(); ++k)
    lengths[static_cast<Eigen::Index>(k)] = (mesh.nodes[chain[k + 1]] - mesh.nodes[chain[k]]).norm();
  return lengths;
}

// Plain-text listing for debugging: one node / triangle / edge per line.
inline void write_mesh_listing(const Mesh& mesh, std::ostream& out) {
  out.precision(17);
  for (int i = 0; i < mesh.node_count(); ++i)
    out << "node " << i << ' ' << mesh.nodes[i].x() << ' ' << mesh.nodes[i].y() << '\n';
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    out << "tri " << t << ' ' << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  }
  for (const auto& edge : mesh.boundary_edges)
    out << "edge " << edge.a << ' ' << edge.b << ' '
        << (edge.tag ? to_string(*edge.tag) : "untagged") << '\n';
}

}  // namespace nmc

#endif  // NMCONTACT_MESH_HPP
