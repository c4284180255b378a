#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cradapt::mesh {

using Index = std::int32_t;
inline constexpr Index kNone = -1;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Vertex {
  Index id = kNone;
  Point p;
  bool on_boundary = false;
};

/// Counterclockwise triangle. Local edge i is the side opposite vertex i.
/// `refinement_edge` is the local index of the edge bisected next.
struct Triangle {
  Index id = kNone;
  std::array<Index, 3> v{};
  int refinement_edge = 0;
  int generation = 0;
  /// Triangle of the mesh this one was refined from (kNone for an initial mesh).
  Index parent = kNone;
};

struct Edge {
  Index id = kNone;
  std::array<Index, 2> v{};
  /// Second entry is kNone on the boundary.
  std::array<Index, 2> tri{kNone, kNone};
  bool on_boundary = false;
};

/// Input record for building a mesh.
struct TriangleSpec {
  std::array<Index, 3> v{};
  int refinement_edge = -1;  ///< -1 selects the longest edge
  int generation = 0;
  Index parent = kNone;
};

/// Immutable conforming triangulation of a polygonal domain.
///
/// Edges are numbered in order of first appearance when scanning triangles
/// and their local edges; this numbering is deterministic for a given
/// triangle list and is the CR degree-of-freedom order.
class TriMesh {
public:
  /// Validates orientation, id ranges and edge manifoldness; throws GeometryError.
  TriMesh(std::vector<Point> points, std::vector<TriangleSpec> triangles, std::string domain_tag);

  const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::string& domain_tag() const noexcept { return tag_; }

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_triangles() const noexcept { return triangles_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t num_boundary_edges() const noexcept { return n_boundary_edges_; }

  /// Edge ids of triangle t, entry i opposite local vertex i.
  const std::array<Index, 3>& triangle_edges(Index t) const { return tri_edges_[t]; }
  std::array<Point, 3> corners(Index t) const;

  double area(Index t) const;
  /// Longest side length.
  double diameter(Index t) const;
  /// Smallest interior angle in radians.
  double min_angle(Index t) const;
  double total_area() const;
  double min_angle() const;

  /// Triangles incident to vertex v, ascending ids.
  std::span<const Index> vertex_patch(Index v) const;

  /// Number of holes implied by V - E + T = 1 - holes.
  int holes() const;

private:
  std::vector<Vertex> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<Index, 3>> tri_edges_;
  std::vector<Index> patch_offsets_;
  std::vector<Index> patch_triangles_;
  std::size_t n_boundary_edges_ = 0;
  std::string tag_;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

/// Structured (0,1)^2 mesh: n x n cells, each cut along its (x1,y0)-(x0,y1) diagonal.
TriMesh make_unit_square(int n);

/// (0,1)^2 minus [1/3,2/3]^2 with `per_third` cells per third of a side.
/// Cell diagonals point towards the domain center, so for even `per_third`
/// the mesh has the full symmetry group of the square.
TriMesh make_square_ring(int per_third = 2);

/// Newest-vertex bisection of every marked triangle with conformity closure.
/// Children record the input-mesh triangle they came from in `parent`.
TriMesh refine(const TriMesh& mesh, std::span<const Index> marked);

/// Bisects every triangle `sweeps` times.
TriMesh refine_uniform(const TriMesh& mesh, int sweeps = 1);

double diameter(const TriMesh& mesh, Index t);
std::vector<Index> vertex_patch(const TriMesh& mesh, Index v);

/// Line-oriented text: `v x y`, `t i j k`, `#` comments.
TriMesh read_mesh(std::istream& in, std::string domain_tag = "file");
TriMesh load_mesh(const std::string& path);
void write_mesh(std::ostream& out, const TriMesh& mesh);

/// Human-readable invariant audit; empty when the mesh is consistent.
std::vector<std::string> audit(const TriMesh& mesh);

} // namespace cradapt::mesh
