#include "cradapt/fem.hpp"

#include "cradapt/errors.hpp"
#include "cradapt/parallel.hpp"

#include <iomanip>
#include <ostream>

namespace cradapt::fem {

const char* to_string(SpaceKind kind) { return kind == SpaceKind::CR ? "CR" : "P1"; }

CRSpace::CRSpace(mesh::MeshPtr mesh) : mesh_(std::move(mesh)) {
  edge_dof_.assign(mesh_->num_edges(), mesh::kNone);
  for (const mesh::Edge& e : mesh_->edges()) {
    if (e.on_boundary) continue;
    edge_dof_[e.id] = static_cast<Index>(dof_edge_.size());
    dof_edge_.push_back(e.id);
  }
}

P1Space::P1Space(mesh::MeshPtr mesh) : mesh_(std::move(mesh)) {
  vertex_dof_.assign(mesh_->num_vertices(), mesh::kNone);
  for (const mesh::Vertex& v : mesh_->vertices()) {
    if (v.on_boundary) continue;
    vertex_dof_[v.id] = static_cast<Index>(dof_vertex_.size());
    dof_vertex_.push_back(v.id);
  }
}

namespace {

double checked_area(const std::array<mesh::Point, 3>& p, Index triangle) {
  double a = 0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y));
  if (!(a > 0.0)) throw AssemblyError(triangle, "degenerate or inverted element (area " + std::to_string(a) + ")");
  return a;
}

template <class LocalFn, class DofFn>
SparseMatrix assemble(const mesh::TriMesh& m, Index ndof, LocalFn local, DofFn dof) {
  const std::size_t nt = m.num_triangles();
  std::vector<LocalMatrix> blocks(nt);
  parallel_for(nt, [&](std::size_t t) {
    auto id = static_cast<Index>(t);
    blocks[t] = local(m.corners(id), id);
  });
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(nt * 9);
  // serial scatter in element order fixes the summation order of each entry
  for (std::size_t t = 0; t < nt; ++t) {
    auto id = static_cast<Index>(t);
    std::array<Index, 3> d{dof(id, 0), dof(id, 1), dof(id, 2)};
    for (int i = 0; i < 3; ++i) {
      if (d[i] == mesh::kNone) continue;
      for (int j = 0; j < 3; ++j) {
        if (d[j] == mesh::kNone || blocks[t](i, j) == 0.0) continue;
        trip.emplace_back(d[i], d[j], blocks[t](i, j));
      }
    }
  }
  SparseMatrix a(ndof, ndof);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

auto cr_dofs(const CRSpace& s) {
  return [&s](Index t, int i) { return s.local_dof(t, i); };
}

auto p1_dofs(const P1Space& s) {
  return [&s](Index t, int i) { return s.vertex_dof(s.mesh().triangles()[t].v[i]); };
}

} // namespace

std::array<Eigen::Vector2d, 3> barycentric_gradients(const std::array<mesh::Point, 3>& p) {
  double twice_area = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
  std::array<Eigen::Vector2d, 3> g;
  for (int i = 0; i < 3; ++i) {
    const mesh::Point& b = p[(i + 1) % 3];
    const mesh::Point& c = p[(i + 2) % 3];
    // rotate the opposite side by -90 degrees
    g[i] = Eigen::Vector2d(b.y - c.y, c.x - b.x) / twice_area;
  }
  return g;
}

LocalMatrix p1_element_stiffness(const std::array<mesh::Point, 3>& p, Index triangle) {
  double area = checked_area(p, triangle);
  auto g = barycentric_gradients(p);
  LocalMatrix k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k(i, j) = area * g[i].dot(g[j]);
  return k;
}

LocalMatrix p1_element_mass(const std::array<mesh::Point, 3>& p, Index triangle) {
  double area = checked_area(p, triangle);
  LocalMatrix m;
  m.setConstant(area / 12.0);
  m.diagonal().setConstant(area / 6.0);
  return m;
}

LocalMatrix cr_element_stiffness(const std::array<mesh::Point, 3>& p, Index triangle) {
  return 4.0 * p1_element_stiffness(p, triangle);
}

LocalMatrix cr_element_mass(const std::array<mesh::Point, 3>& p, Index triangle) {
  double area = checked_area(p, triangle);
  LocalMatrix m = LocalMatrix::Zero();
  m.diagonal().setConstant(area / 3.0);
  return m;
}

SparseMatrix assemble_stiffness(const CRSpace& space) {
  return assemble(space.mesh(), space.ndof(), cr_element_stiffness, cr_dofs(space));
}

SparseMatrix assemble_stiffness(const P1Space& space) {
  return assemble(space.mesh(), space.ndof(), p1_element_stiffness, p1_dofs(space));
}

SparseMatrix assemble_mass(const CRSpace& space) {
  return assemble(space.mesh(), space.ndof(), cr_element_mass, cr_dofs(space));
}

SparseMatrix assemble_mass(const P1Space& space) {
  return assemble(space.mesh(), space.ndof(), p1_element_mass, p1_dofs(space));
}

SparseMatrix p1_to_cr(const CRSpace& cr, const P1Space& p1) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * static_cast<std::size_t>(cr.ndof()));
  for (Index d = 0; d < cr.ndof(); ++d) {
    const mesh::Edge& e = cr.mesh().edges()[cr.dof_edge(d)];
    for (Index v : e.v)
      if (Index pd = p1.vertex_dof(v); pd != mesh::kNone) trip.emplace_back(d, pd, 0.5);
  }
  SparseMatrix j(cr.ndof(), p1.ndof());
  j.setFromTriplets(trip.begin(), trip.end());
  j.makeCompressed();
  return j;
}

FEFunction cr_interpolate(const CRSpace& space, const std::function<double(mesh::Point)>& w) {
  FEFunction out{SpaceKind::CR, Vector::Zero(space.ndof())};
  const auto& verts = space.mesh().vertices();
  for (Index d = 0; d < space.ndof(); ++d) {
    const mesh::Edge& e = space.mesh().edges()[space.dof_edge(d)];
    mesh::Point a = verts[e.v[0]].p, b = verts[e.v[1]].p;
    mesh::Point m{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    out.coeffs[d] = (w(a) + 4.0 * w(m) + w(b)) / 6.0;
  }
  return out;
}

FEFunction cr_interpolate(const CRSpace& space, const P1Space& p1, const FEFunction& w) {
  if (w.space != SpaceKind::P1 || w.coeffs.size() != p1.ndof())
    throw std::invalid_argument("cr_interpolate: expected a P1 function");
  return {SpaceKind::CR, p1_to_cr(space, p1) * w.coeffs};
}

std::array<double, 3> cr_vertex_values(const CRSpace& space, const Vector& coeffs, Index t) {
  std::array<double, 3> c{};
  for (int i = 0; i < 3; ++i) {
    Index d = space.local_dof(t, i);
    c[i] = d == mesh::kNone ? 0.0 : coeffs[d];
  }
  double sum = c[0] + c[1] + c[2];
  // phi_i = 1 - 2 lambda_i evaluated at vertex j is 1 - 2 delta_ij
  return {sum - 2.0 * c[0], sum - 2.0 * c[1], sum - 2.0 * c[2]};
}

Eigen::Vector2d cr_gradient(const CRSpace& space, const Vector& coeffs, Index t) {
  auto g = barycentric_gradients(space.mesh().corners(t));
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (int i = 0; i < 3; ++i)
    if (Index d = space.local_dof(t, i); d != mesh::kNone) out -= 2.0 * coeffs[d] * g[i];
  return out;
}

Eigen::Vector2d p1_gradient(const P1Space& space, const Vector& coeffs, Index t) {
  auto g = barycentric_gradients(space.mesh().corners(t));
  const auto& tri = space.mesh().triangles()[t];
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (int i = 0; i < 3; ++i)
    if (Index d = space.vertex_dof(tri.v[i]); d != mesh::kNone) out += coeffs[d] * g[i];
  return out;
}

FEFunction postprocess_average(const CRSpace& space, const P1Space& p1, const FEFunction& v, WeightRule weights) {
  if (v.space != SpaceKind::CR || v.coeffs.size() != space.ndof())
    throw std::invalid_argument("postprocess_average: expected a CR function");
  const mesh::TriMesh& m = space.mesh();
  FEFunction out{SpaceKind::P1, Vector::Zero(p1.ndof())};
  for (Index d = 0; d < p1.ndof(); ++d) {
    Index vert = p1.dof_vertex(d);
    auto patch = m.vertex_patch(vert);
    double acc = 0.0, wsum = 0.0;
    for (Index t : patch) {
      const auto& tri = m.triangles()[t];
      int local = tri.v[0] == vert ? 0 : (tri.v[1] == vert ? 1 : 2);
      double w = weights == WeightRule::Uniform ? 1.0 : m.area(t);
      acc += w * cr_vertex_values(space, v.coeffs, t)[local];
      wsum += w;
    }
    out.coeffs[d] = acc / wsum;
  }
  return out;
}

SourceSolver::SourceSolver(const SparseMatrix& stiffness, const SparseMatrix& mass) : mass_(mass) {
  if (stiffness.rows() != mass.rows()) throw std::invalid_argument("SourceSolver: dimension mismatch");
  ldlt_.compute(stiffness);
  if (ldlt_.info() != Eigen::Success) throw NumericalError("stiffness factorization failed (singular system)");
  if ((ldlt_.vectorD().array() <= 0.0).any())
    throw NumericalError("stiffness matrix is not positive definite (broken constraints?)");
}

Vector SourceSolver::apply(const Vector& f) const { return ldlt_.solve(mass_ * f); }
Matrix SourceSolver::apply(const Matrix& f) const { return ldlt_.solve(mass_ * f); }
Vector SourceSolver::solve(const Vector& b) const { return ldlt_.solve(b); }
Matrix SourceSolver::solve(const Matrix& b) const { return ldlt_.solve(b); }

FEFunction solve_source(const SourceSolver& solver, const FEFunction& f) {
  return {f.space, solver.apply(f.coeffs)};
}

double broken_seminorm(const SparseMatrix& stiffness, const Vector& v) {
  return std::sqrt(std::max(0.0, v.dot(stiffness * v)));
}

Discretization::Discretization(mesh::MeshPtr m)
    : mesh(m), cr(m), p1(m), cr_stiffness(assemble_stiffness(cr)), cr_mass(assemble_mass(cr)),
      p1_stiffness(assemble_stiffness(p1)), p1_mass(assemble_mass(p1)), embed(p1_to_cr(cr, p1)) {}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

} // namespace cradapt::fem
