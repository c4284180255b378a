#include "cradapt/eigensolve.hpp"

#include "cradapt/errors.hpp"

#include <Eigen/Eigenvalues>

#include <random>
#include <sstream>

namespace cradapt::eig {

std::vector<double> SpectralSet::values() const {
  std::vector<double> v;
  v.reserve(pairs.size());
  for (const auto& p : pairs) v.push_back(p.value);
  return v;
}

Matrix SpectralSet::vectors() const {
  if (pairs.empty()) return {};
  Matrix x(pairs.front().vector.size(), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = pairs[i].vector;
  return x;
}

namespace {

// Two passes of Cholesky QR in the M inner product.
bool m_orthonormalize(Matrix& y, Matrix& my) {
  for (int pass = 0; pass < 2; ++pass) {
    Matrix g = y.transpose() * my;
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) return false;
    const auto& l = llt.matrixL();
    // y <- y L^{-T}
    y = l.solve(y.transpose()).transpose();
    my = l.solve(my.transpose()).transpose();
  }
  return true;
}

} // namespace

SpectralSet smallest_eigenpairs(const SparseMatrix& a, const SparseMatrix& m, int nev, const SolverOptions& options) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || m.rows() != n || m.cols() != n)
    throw std::invalid_argument("smallest_eigenpairs: A and M must be square and of equal size");
  if (nev < 1 || nev > n)
    throw std::invalid_argument("smallest_eigenpairs: nev=" + std::to_string(nev) + " outside [1, " +
                                std::to_string(n) + "]");

  const Eigen::Index block = std::min<Eigen::Index>(n, nev + std::max(0, options.guard_vectors));

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    throw NumericalError("smallest_eigenpairs: A is not symmetric positive definite");

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Matrix x(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = uni(rng);

  Matrix mx = m * x;
  std::vector<double> residuals(static_cast<std::size_t>(nev), 1.0);
  Vector theta;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Matrix y = ldlt.solve(mx);
    Matrix my = m * y;
    if (!m_orthonormalize(y, my))
      throw NumericalError("smallest_eigenpairs: block lost rank at iteration " + std::to_string(it), residuals);
    Matrix h = y.transpose() * (a * y);
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> ritz(h);
    if (ritz.info() != Eigen::Success)
      throw NumericalError("smallest_eigenpairs: Rayleigh-Ritz step failed", residuals);
    theta = ritz.eigenvalues();
    x = y * ritz.eigenvectors();
    mx = my * ritz.eigenvectors();

    Matrix ax = a * x.leftCols(nev);
    bool converged = true;
    for (int i = 0; i < nev; ++i) {
      double denom = std::abs(theta[i]) * mx.col(i).norm();
      residuals[static_cast<std::size_t>(i)] = (ax.col(i) - theta[i] * mx.col(i)).norm() / denom;
      if (!(residuals[static_cast<std::size_t>(i)] <= options.tol)) converged = false;
    }
    if (converged) {
      SpectralSet out;
      out.seed = options.seed;
      out.iterations = it;
      for (int i = 0; i < nev; ++i) {
        if (!(theta[i] > 0.0)) throw NumericalError("smallest_eigenpairs: non-positive eigenvalue", residuals);
        out.pairs.push_back({theta[i], x.col(i), options.space, residuals[static_cast<std::size_t>(i)]});
      }
      out.mass_gram = x.leftCols(nev).transpose() * mx.leftCols(nev);
      return out;
    }
  }
  std::ostringstream msg;
  msg << "smallest_eigenpairs: no convergence after " << options.max_iterations << " iterations; residuals";
  for (double r : residuals) msg << ' ' << r;
  throw NumericalError(msg.str(), residuals);
}

SpectralSet dense_eigenpairs(const Matrix& a, const Matrix& m, int nev, fem::SpaceKind space) {
  if (nev < 1 || nev > a.rows()) throw std::invalid_argument("dense_eigenpairs: nev out of range");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(a, m);
  if (ges.info() != Eigen::Success) throw NumericalError("dense_eigenpairs: solver failed");
  SpectralSet out;
  for (int i = 0; i < nev; ++i) {
    Vector v = ges.eigenvectors().col(i);
    double lam = ges.eigenvalues()[i];
    double res = (a * v - lam * (m * v)).norm() / (std::abs(lam) * (m * v).norm());
    out.pairs.push_back({lam, v, space, res});
  }
  Matrix x = out.vectors();
  out.mass_gram = x.transpose() * m * x;
  return out;
}

void fix_sign(Vector& v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > best_abs) {
      best_abs = std::abs(v[i]);
      best = i;
    }
  if (v.size() > 0 && v[best] < 0.0) v = -v;
}

SpectralSet fix_signs(SpectralSet set) {
  const auto n = static_cast<Eigen::Index>(set.pairs.size());
  Vector flip = Vector::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector& v = set.pairs[static_cast<std::size_t>(i)].vector;
    Vector before = v;
    fix_sign(v);
    if (v.size() > 0 && v != before) flip[i] = -1.0;
  }
  if (set.mass_gram.rows() == n && set.mass_gram.cols() == n)
    set.mass_gram = flip.asDiagonal() * set.mass_gram * flip.asDiagonal();
  return set;
}

} // namespace cradapt::eig
