#pragma once

#include "cradapt/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace cradapt::fem {

using mesh::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class SpaceKind { CR, P1 };

const char* to_string(SpaceKind kind);

/// Crouzeix-Raviart space: one DOF per interior edge; boundary edge DOFs are eliminated.
class CRSpace {
public:
  explicit CRSpace(mesh::MeshPtr mesh);

  const mesh::TriMesh& mesh() const { return *mesh_; }
  const mesh::MeshPtr& mesh_ptr() const { return mesh_; }
  Index ndof() const { return static_cast<Index>(dof_edge_.size()); }
  /// kNone for boundary edges.
  Index edge_dof(Index edge) const { return edge_dof_[edge]; }
  Index dof_edge(Index dof) const { return dof_edge_[dof]; }
  /// DOF of local basis function i of triangle t (opposite vertex i), or kNone.
  Index local_dof(Index t, int i) const { return edge_dof_[mesh_->triangle_edges(t)[i]]; }

private:
  mesh::MeshPtr mesh_;
  std::vector<Index> edge_dof_;
  std::vector<Index> dof_edge_;
};

/// Conforming P1 space with homogeneous Dirichlet conditions: one DOF per interior vertex.
class P1Space {
public:
  explicit P1Space(mesh::MeshPtr mesh);

  const mesh::TriMesh& mesh() const { return *mesh_; }
  const mesh::MeshPtr& mesh_ptr() const { return mesh_; }
  Index ndof() const { return static_cast<Index>(dof_vertex_.size()); }
  Index vertex_dof(Index vertex) const { return vertex_dof_[vertex]; }
  Index dof_vertex(Index dof) const { return dof_vertex_[dof]; }

private:
  mesh::MeshPtr mesh_;
  std::vector<Index> vertex_dof_;
  std::vector<Index> dof_vertex_;
};

struct FEFunction {
  SpaceKind space = SpaceKind::CR;
  Vector coeffs;
};

using LocalMatrix = Eigen::Matrix3d;

// Element matrices. `triangle` only labels the AssemblyError thrown for
// non-positive area.
LocalMatrix p1_element_stiffness(const std::array<mesh::Point, 3>& p, Index triangle = mesh::kNone);
LocalMatrix p1_element_mass(const std::array<mesh::Point, 3>& p, Index triangle = mesh::kNone);
/// CR basis phi_i = 1 - 2*lambda_i, i.e. 4x the P1 stiffness.
LocalMatrix cr_element_stiffness(const std::array<mesh::Point, 3>& p, Index triangle = mesh::kNone);
/// Diagonal |K|/3.
LocalMatrix cr_element_mass(const std::array<mesh::Point, 3>& p, Index triangle = mesh::kNone);

/// Constant gradients of the barycentric coordinates.
std::array<Eigen::Vector2d, 3> barycentric_gradients(const std::array<mesh::Point, 3>& p);

SparseMatrix assemble_stiffness(const CRSpace& space);
SparseMatrix assemble_stiffness(const P1Space& space);
SparseMatrix assemble_mass(const CRSpace& space);
SparseMatrix assemble_mass(const P1Space& space);

/// Exact inclusion Vc -> Vh: CR value at an edge is the mean of the P1 endpoint values.
SparseMatrix p1_to_cr(const CRSpace& cr, const P1Space& p1);

/// Edge-average interpolant; edge integrals by Simpson's rule (exact up to cubics).
FEFunction cr_interpolate(const CRSpace& space, const std::function<double(mesh::Point)>& w);
FEFunction cr_interpolate(const CRSpace& space, const P1Space& p1, const FEFunction& w);

/// Value of the CR function on triangle t at its three vertices.
std::array<double, 3> cr_vertex_values(const CRSpace& space, const Vector& coeffs, Index t);
/// Broken gradient of the CR function on triangle t.
Eigen::Vector2d cr_gradient(const CRSpace& space, const Vector& coeffs, Index t);
Eigen::Vector2d p1_gradient(const P1Space& space, const Vector& coeffs, Index t);

enum class WeightRule { Uniform, Area };

/// Vertex averaging of a CR function into Vc; boundary vertices are set to 0.
FEFunction postprocess_average(const CRSpace& space, const P1Space& p1, const FEFunction& v,
                               WeightRule weights = WeightRule::Uniform);

/// Factorized discrete solution operator: returns x with A x = M f.
class SourceSolver {
public:
  SourceSolver(const SparseMatrix& stiffness, const SparseMatrix& mass);
  Vector apply(const Vector& f) const;
  Matrix apply(const Matrix& f) const;
  /// Solves A x = b directly.
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

private:
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  SparseMatrix mass_;
};

FEFunction solve_source(const SourceSolver& solver, const FEFunction& f);

/// sqrt(v^T A v).
double broken_seminorm(const SparseMatrix& stiffness, const Vector& v);

/// Everything assembled on one mesh.
struct Discretization {
  mesh::MeshPtr mesh;
  CRSpace cr;
  P1Space p1;
  SparseMatrix cr_stiffness;
  SparseMatrix cr_mass;
  SparseMatrix p1_stiffness;
  SparseMatrix p1_mass;
  SparseMatrix embed;  ///< p1_to_cr

  explicit Discretization(mesh::MeshPtr m);
};

/// Matrix-market coordinate text, 1-based.
void write_matrix_market(std::ostream& out, const SparseMatrix& a);

} // namespace cradapt::fem
