#pragma once

#include "cradapt/fem.hpp"

#include <cstdint>
#include <vector>

namespace cradapt::eig {

using fem::Matrix;
using fem::SparseMatrix;
using fem::Vector;

struct EigenPair {
  double value = 0.0;
  Vector vector;  ///< M-normalized
  fem::SpaceKind space = fem::SpaceKind::CR;
  /// ||A x - value M x|| / (value ||M x||)
  double residual = 0.0;
};

struct SpectralSet {
  std::vector<EigenPair> pairs;  ///< ascending values
  Matrix mass_gram;              ///< X^T M X, diagnostic
  std::uint64_t seed = 0;
  int iterations = 0;

  std::size_t size() const { return pairs.size(); }
  const EigenPair& operator[](std::size_t i) const { return pairs[i]; }
  std::vector<double> values() const;
  /// Columns are the eigenvectors in order.
  Matrix vectors() const;
};

struct SolverOptions {
  double tol = 1e-9;
  int max_iterations = 500;
  int guard_vectors = 5;
  std::uint64_t seed = 20140501;
  fem::SpaceKind space = fem::SpaceKind::CR;
};

/// Smallest `nev` eigenpairs of A x = lambda M x by block inverse iteration
/// (shift 0) with Rayleigh-Ritz on nev + guard vectors. Throws
/// std::invalid_argument when nev exceeds the dimension and NumericalError
/// (carrying the best residuals) when the iteration cap is reached.
SpectralSet smallest_eigenpairs(const SparseMatrix& a, const SparseMatrix& m, int nev,
                                const SolverOptions& options = {});

/// Dense generalized solver, for small problems and as a test oracle.
SpectralSet dense_eigenpairs(const Matrix& a, const Matrix& m, int nev, fem::SpaceKind space = fem::SpaceKind::CR);

/// Flips each vector so its largest-magnitude coefficient (lowest index on ties) is positive.
SpectralSet fix_signs(SpectralSet set);
void fix_sign(Vector& v);

} // namespace cradapt::eig
