#pragma once
// Small shared fixtures for the unit and property suites.

#include "cradapt/eigensolve.hpp"
#include "cradapt/fem.hpp"
#include "cradapt/mesh.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>

namespace testing {

using namespace cradapt;

inline constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

inline mesh::MeshPtr share(mesh::TriMesh m) { return std::make_shared<const mesh::TriMesh>(std::move(m)); }

inline std::shared_ptr<fem::Discretization> discretize(mesh::TriMesh m) {
  return std::make_shared<fem::Discretization>(share(std::move(m)));
}

inline mesh::Index find_vertex(const mesh::TriMesh& m, double x, double y) {
  for (const auto& v : m.vertices())
    if (std::abs(v.p.x - x) < 1e-12 && std::abs(v.p.y - y) < 1e-12) return v.id;
  throw std::runtime_error("no vertex at requested point");
}

inline mesh::Point centroid(const mesh::TriMesh& m, mesh::Index t) {
  auto c = m.corners(t);
  return {(c[0].x + c[1].x + c[2].x) / 3.0, (c[0].y + c[1].y + c[2].y) / 3.0};
}

/// Single triangle mesh.
inline mesh::TriMesh triangle_mesh(mesh::Point a, mesh::Point b, mesh::Point c) {
  return mesh::TriMesh({a, b, c}, {{{0, 1, 2}}}, "triangle");
}

inline eig::SpectralSet cr_spectrum(const fem::Discretization& d, int nev, eig::SolverOptions opt = {}) {
  opt.space = fem::SpaceKind::CR;
  return eig::fix_signs(eig::smallest_eigenpairs(d.cr_stiffness, d.cr_mass, nev, opt));
}

inline eig::SpectralSet p1_spectrum(const fem::Discretization& d, int nev, eig::SolverOptions opt = {}) {
  opt.space = fem::SpaceKind::P1;
  return eig::fix_signs(eig::smallest_eigenpairs(d.p1_stiffness, d.p1_mass, nev, opt));
}

inline fem::Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  fem::Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline fem::Vector vec2(double a, double b) {
  fem::Vector v(2);
  v << a, b;
  return v;
}

/// Least-squares slope of log(y) against log(x).
template <class X, class Y>
double loglog_slope(const X& x, const Y& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log(static_cast<double>(x[i])), ly = std::log(static_cast<double>(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace testing
