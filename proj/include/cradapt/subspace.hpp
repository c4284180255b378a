#pragma once

#include "cradapt/eigensolve.hpp"
#include "cradapt/estimators.hpp"
#include "cradapt/fem.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cradapt::subspace {

using fem::Matrix;
using fem::SparseMatrix;
using fem::Vector;

/// Finite basis of a subspace of the CR space, with its energy Gram matrix.
/// The energy matrix is referenced, not owned.
class SubspaceBasis {
public:
  /// Throws NumericalError when the (diagonally scaled) Gram matrix has
  /// condition number above 1e12.
  SubspaceBasis(std::string name, const SparseMatrix& energy, Matrix columns);

  const std::string& name() const { return name_; }
  const SparseMatrix& energy() const { return *energy_; }
  const Matrix& columns() const { return columns_; }
  const Matrix& gram() const { return gram_; }
  Eigen::Index dim() const { return columns_.cols(); }
  double condition() const { return condition_; }

  /// Energy-orthonormal basis of the same span.
  Matrix orthonormal() const;

private:
  std::string name_;
  const SparseMatrix* energy_;
  Matrix columns_;
  Matrix gram_;
  double condition_ = 1.0;
};

/// Elliptic projection from the CR space onto the conforming P1 space.
class ConformingProjector {
public:
  explicit ConformingProjector(const fem::Discretization& disc);

  /// P1 coefficients of the projection.
  Vector project(const Vector& cr) const;
  Matrix project(const Matrix& cr) const;
  Vector embed(const Vector& p1) const { return disc_->embed * p1; }
  Matrix embed(const Matrix& p1) const { return disc_->embed * p1; }
  const fem::Discretization& discretization() const { return *disc_; }

private:
  const fem::Discretization* disc_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

fem::FEFunction elliptic_project_to_conforming(const ConformingProjector& proj, const fem::FEFunction& v);

/// Coefficients c with a_h(v - sum_k c_k b_k, b_m) = 0 for every basis member b_m.
Vector elliptic_project_to_span(const Vector& v, const SubspaceBasis& basis);

/// Largest singular value of (I - Q)P in the energy inner product.
double subspace_gap(const SubspaceBasis& e, const SubspaceBasis& f);

/// delta_h(E, Vc).
double gap_to_conforming(const SubspaceBasis& e, const ConformingProjector& proj);

/// ||P_F P_E||, the cosine of the smallest principal angle.
double projection_norm(const SubspaceBasis& e, const SubspaceBasis& f);

/// v^T A v / v^T M v; throws std::invalid_argument for v = 0.
double rayleigh(const SparseMatrix& stiffness, const SparseMatrix& mass, const Vector& v);

enum class BoundCase { Below, Above, Mixed };
const char* to_string(BoundCase c);

/// Classification against the reference: below when every value is <= reference.
BoundCase classify(std::span<const double> cluster_values, double reference);

struct BoundAuditRow {
  int iter = 0;
  BoundCase bound_case = BoundCase::Below;
  int j = 0;           ///< 1-based eigen number
  double lhs = 0.0;    ///< (ref - lambda_j)/ref, or mean_{k<=j} lambda_k - ref
  double rhs = 0.0;    ///< sum mu_k^2/lambda_k^2, or mean (6 mu_k^2 + 4 eta_k^2)
  double ratio = 0.0;  ///< lhs / rhs
  // Below-case diagnostics (NaN when not applicable).
  double gap2 = 0.0;           ///< delta_h^2(E_{i..j}, Vc)
  double lower_proj2 = 0.0;    ///< ||P^c_{1..i-1} P_{i..j}||^2
  double projection_rhs = 0.0; ///< gap2 + lower_proj2, the norm bounding the relative error
  double knyazev_norm = 0.0;   ///< ||(I - Pi^c) T_h P^c_{1..i-1}||
  double beta = 0.0;           ///< d - delta from the discrete spectra
};

struct AuditInput {
  const fem::Discretization* disc = nullptr;
  const eig::SpectralSet* cr = nullptr;
  const eig::SpectralSet* conforming = nullptr;
  std::vector<int> cluster;                    ///< 0-based contiguous indices
  std::vector<est::IndicatorField> fields;     ///< one per cluster member
  double reference = 0.0;
  int iter = 0;
};

struct AuditResult {
  BoundCase bound_case = BoundCase::Below;
  std::vector<BoundAuditRow> rows;
  std::string notice;
};

AuditResult audit_bounds(const AuditInput& input);

/// `iter,case,j,lhs,rhs,ratio`
void write_audit_csv(std::ostream& out, std::span<const BoundAuditRow> rows, bool header = true);
/// All row fields including below-case diagnostics.
void write_audit_detail_csv(std::ostream& out, std::span<const BoundAuditRow> rows, bool header = true);

} // namespace cradapt::subspace
