#include "cradapt/subspace.hpp"

#include "cradapt/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace cradapt::subspace {

namespace {

constexpr double kMaxCondition = 1e12;

double largest_eigenvalue(const Matrix& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

} // namespace

SubspaceBasis::SubspaceBasis(std::string name, const SparseMatrix& energy, Matrix columns)
    : name_(std::move(name)), energy_(&energy), columns_(std::move(columns)) {
  if (columns_.rows() != energy.rows())
    throw std::invalid_argument("basis '" + name_ + "': column length does not match the energy matrix");
  gram_ = columns_.transpose() * (energy * columns_);
  gram_ = 0.5 * (gram_ + gram_.transpose()).eval();
  if (dim() == 0) return;
  Vector d = gram_.diagonal();
  if ((d.array() <= 0.0).any())
    throw NumericalError("basis '" + name_ + "' contains a zero-energy member");
  Vector s = d.cwiseSqrt().cwiseInverse();
  Matrix scaled = s.asDiagonal() * gram_ * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(scaled, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kMaxCondition)) {
    std::ostringstream msg;
    msg << "basis '" << name_ << "' is numerically degenerate (Gram condition " << condition_ << ")";
    throw NumericalError(msg.str());
  }
}

Matrix SubspaceBasis::orthonormal() const {
  if (dim() == 0) return columns_;
  // symmetric orthonormalization keeps the result well defined for any Gram
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram_);
  Vector inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  Matrix w = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
  Matrix q = columns_ * w;
  // one refinement pass against rounding
  Matrix g = q.transpose() * (*energy_ * q);
  Eigen::SelfAdjointEigenSolver<Matrix> es2(0.5 * (g + g.transpose()));
  Vector s2 = es2.eigenvalues().cwiseSqrt().cwiseInverse();
  return q * (es2.eigenvectors() * s2.asDiagonal() * es2.eigenvectors().transpose());
}

ConformingProjector::ConformingProjector(const fem::Discretization& disc) : disc_(&disc) {
  ldlt_.compute(disc.p1_stiffness);
  if (ldlt_.info() != Eigen::Success) throw NumericalError("conforming stiffness factorization failed");
}

Vector ConformingProjector::project(const Vector& cr) const {
  Vector rhs = disc_->embed.transpose() * (disc_->cr_stiffness * cr);
  return ldlt_.solve(rhs);
}

Matrix ConformingProjector::project(const Matrix& cr) const {
  Matrix rhs = disc_->embed.transpose() * (disc_->cr_stiffness * cr);
  return ldlt_.solve(rhs);
}

fem::FEFunction elliptic_project_to_conforming(const ConformingProjector& proj, const fem::FEFunction& v) {
  if (v.space != fem::SpaceKind::CR) throw std::invalid_argument("elliptic_project_to_conforming: expected CR input");
  return {fem::SpaceKind::P1, proj.project(v.coeffs)};
}

Vector elliptic_project_to_span(const Vector& v, const SubspaceBasis& basis) {
  Vector rhs = basis.columns().transpose() * (basis.energy() * v);
  return basis.gram().ldlt().solve(rhs);
}

double subspace_gap(const SubspaceBasis& e, const SubspaceBasis& f) {
  if (e.columns().rows() != f.columns().rows())
    throw std::invalid_argument("subspace_gap: bases live in different spaces");
  if (e.dim() == 0) return 0.0;
  if (f.dim() == 0) return 1.0;
  const SparseMatrix& a = e.energy();
  Matrix qe = e.orthonormal();
  Matrix qf = f.orthonormal();
  // residual of the orthogonal projection of each orthonormal member of E onto F
  Matrix r = qe - qf * (qf.transpose() * (a * qe));
  double g = std::sqrt(std::max(0.0, largest_eigenvalue(r.transpose() * (a * r))));
  return std::min(1.0, g);
}

double projection_norm(const SubspaceBasis& e, const SubspaceBasis& f) {
  if (e.dim() == 0 || f.dim() == 0) return 0.0;
  Matrix c = f.orthonormal().transpose() * (e.energy() * e.orthonormal());
  Eigen::JacobiSVD<Matrix> svd(c);
  return std::min(1.0, svd.singularValues()(0));
}

double gap_to_conforming(const SubspaceBasis& e, const ConformingProjector& proj) {
  if (e.dim() == 0) return 0.0;
  const SparseMatrix& a = e.energy();
  Matrix qe = e.orthonormal();
  Matrix r = qe - proj.embed(proj.project(qe));
  double g = std::sqrt(std::max(0.0, largest_eigenvalue(r.transpose() * (a * r))));
  return std::min(1.0, g);
}

double rayleigh(const SparseMatrix& stiffness, const SparseMatrix& mass, const Vector& v) {
  double den = v.dot(mass * v);
  if (!(den > 0.0)) throw std::invalid_argument("rayleigh: zero vector");
  return v.dot(stiffness * v) / den;
}

const char* to_string(BoundCase c) {
  switch (c) {
  case BoundCase::Below: return "below";
  case BoundCase::Above: return "above";
  case BoundCase::Mixed: return "mixed";
  }
  return "?";
}

BoundCase classify(std::span<const double> values, double reference) {
  bool below = true, above = true;
  for (double v : values) {
    below = below && v <= reference;
    above = above && v >= reference;
  }
  if (below) return BoundCase::Below;
  if (above) return BoundCase::Above;
  return BoundCase::Mixed;
}

AuditResult audit_bounds(const AuditInput& in) {
  if (in.disc == nullptr || in.cr == nullptr) throw std::invalid_argument("audit_bounds: missing discretization");
  if (in.conforming == nullptr || in.conforming->size() == 0)
    throw std::invalid_argument("audit_bounds: conforming spectrum is required");
  if (in.cluster.empty()) throw std::invalid_argument("audit_bounds: empty cluster");
  for (std::size_t c = 1; c < in.cluster.size(); ++c)
    if (in.cluster[c] != in.cluster[c - 1] + 1) throw std::invalid_argument("audit_bounds: cluster not contiguous");
  const int first = in.cluster.front();
  if (static_cast<std::size_t>(in.cluster.back()) >= in.cr->size())
    throw std::invalid_argument("audit_bounds: cluster exceeds the computed spectrum");

  auto field_of = [&](int k) -> const est::IndicatorField& {
    for (const auto& f : in.fields)
      if (f.eigen_index == k) return f;
    throw std::invalid_argument("audit_bounds: missing indicator field for index " + std::to_string(k));
  };

  std::vector<double> values;
  for (int k : in.cluster) values.push_back((*in.cr)[static_cast<std::size_t>(k)].value);

  AuditResult out;
  out.bound_case = classify(values, in.reference);
  const double ref = in.reference;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  if (out.bound_case == BoundCase::Mixed) {
    out.notice = "cluster straddles the reference value; mixed case is not covered by the bounds, audit skipped";
    return out;
  }

  if (out.bound_case == BoundCase::Above) {
    double lam_sum = 0.0, ind_sum = 0.0;
    for (std::size_t c = 0; c < in.cluster.size(); ++c) {
      int k = in.cluster[c];
      const auto& f = field_of(k);
      lam_sum += values[c];
      ind_sum += 6.0 * f.mu2_total + 4.0 * f.eta2_total;
      double count = static_cast<double>(c + 1);
      BoundAuditRow row;
      row.iter = in.iter;
      row.bound_case = BoundCase::Above;
      row.j = k + 1;
      row.lhs = lam_sum / count - ref;
      row.rhs = ind_sum / count;
      row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : nan;
      row.gap2 = row.lower_proj2 = row.projection_rhs = row.knyazev_norm = row.beta = nan;
      out.rows.push_back(row);
    }
    return out;
  }

  const fem::Discretization& disc = *in.disc;
  const SparseMatrix& a = disc.cr_stiffness;
  ConformingProjector proj(disc);
  const Matrix cr_vecs = in.cr->vectors();

  // Energy-orthonormal conforming eigenvectors 1..i-1, embedded into CR.
  const int lower = std::min<int>(first, static_cast<int>(in.conforming->size()));
  Matrix lower_basis(a.rows(), lower);
  for (int k = 0; k < lower; ++k) {
    const auto& p = (*in.conforming)[static_cast<std::size_t>(k)];
    lower_basis.col(k) = proj.embed(p.vector) / std::sqrt(p.value);
  }

  double knyazev = nan, d = nan;
  if (lower > 0) {
    fem::SourceSolver th(a, disc.cr_mass);
    Matrix z = th.apply(lower_basis);
    z -= proj.embed(proj.project(z));
    knyazev = std::sqrt(std::max(0.0, largest_eigenvalue(z.transpose() * (a * z))));
    d = std::numeric_limits<double>::infinity();
  }

  double indicator_sum = 0.0;
  for (std::size_t c = 0; c < in.cluster.size(); ++c) {
    const int j = in.cluster[c];
    const auto& f = field_of(j);
    indicator_sum += f.mu2_total / (values[c] * values[c]);

    BoundAuditRow row;
    row.iter = in.iter;
    row.bound_case = BoundCase::Below;
    row.j = j + 1;
    row.lhs = (ref - values[c]) / ref;
    row.rhs = indicator_sum;
    row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : nan;

    SubspaceBasis e("E_" + std::to_string(first + 1) + ".." + std::to_string(j + 1), a,
                    cr_vecs.middleCols(first, j - first + 1));
    double gap = gap_to_conforming(e, proj);
    row.gap2 = gap * gap;
    if (lower > 0) {
      SubspaceBasis low("Ec_1.." + std::to_string(lower), a, lower_basis);
      double pn = projection_norm(e, low);
      row.lower_proj2 = pn * pn;
      row.knyazev_norm = knyazev;
      double nu_j = 1.0 / values[c];
      d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < lower; ++k)
        d = std::min(d, std::abs(1.0 / (*in.conforming)[static_cast<std::size_t>(k)].value - nu_j));
      double spread = 0.0;
      for (std::size_t m = 0; m < in.cluster.size(); ++m) spread = std::max(spread, std::abs(1.0 / values[m] - nu_j));
      row.beta = d - spread;
    } else {
      row.lower_proj2 = 0.0;
      row.knyazev_norm = nan;
      row.beta = nan;
    }
    row.projection_rhs = row.gap2 + row.lower_proj2;
    out.rows.push_back(row);
  }
  return out;
}

void write_audit_csv(std::ostream& out, std::span<const BoundAuditRow> rows, bool header) {
  if (header) out << "iter,case,j,lhs,rhs,ratio\n";
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.iter << ',' << to_string(r.bound_case) << ',' << r.j << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio
        << '\n';
}

void write_audit_detail_csv(std::ostream& out, std::span<const BoundAuditRow> rows, bool header) {
  if (header) out << "iter,case,j,lhs,rhs,ratio,gap2,lower_proj2,projection_rhs,knyazev_norm,beta\n";
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.iter << ',' << to_string(r.bound_case) << ',' << r.j << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio
        << ',' << r.gap2 << ',' << r.lower_proj2 << ',' << r.projection_rhs << ',' << r.knyazev_norm << ','
        << r.beta << '\n';
}

} // namespace cradapt::subspace
