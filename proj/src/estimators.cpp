#include "cradapt/estimators.hpp"

#include "cradapt/errors.hpp"
#include "cradapt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace cradapt::est {

using mesh::Index;

std::vector<double> IndicatorField::combined(bool with_eta) const {
  std::vector<double> out(mu2);
  if (with_eta)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += eta2[k];
  return out;
}

std::vector<double> compute_mu(const fem::CRSpace& space, const fem::P1Space& p1, const Vector& u,
                               fem::WeightRule weights) {
  fem::FEFunction smooth = fem::postprocess_average(space, p1, {fem::SpaceKind::CR, u}, weights);
  const mesh::TriMesh& m = space.mesh();
  std::vector<double> mu2(m.num_triangles());
  parallel_for(mu2.size(), [&](std::size_t k) {
    auto t = static_cast<Index>(k);
    Eigen::Vector2d d = fem::p1_gradient(p1, smooth.coeffs, t) - fem::cr_gradient(space, u, t);
    mu2[k] = m.area(t) * d.squaredNorm();
  });
  return mu2;
}

std::vector<double> compute_eta(const fem::CRSpace& space, double lambda, const Vector& u) {
  const mesh::TriMesh& m = space.mesh();
  std::vector<double> eta2(m.num_triangles());
  parallel_for(eta2.size(), [&](std::size_t k) {
    auto t = static_cast<Index>(k);
    double l2 = 0.0;
    for (int i = 0; i < 3; ++i)
      if (Index d = space.local_dof(t, i); d != mesh::kNone) l2 += u[d] * u[d];
    l2 *= m.area(t) / 3.0;
    double h = m.diameter(t);
    eta2[k] = h * h * lambda * lambda * l2;
  });
  return eta2;
}

IndicatorField compute_indicators(const fem::Discretization& disc, const eig::EigenPair& pair, int eigen_index,
                                  fem::WeightRule weights) {
  if (pair.space != fem::SpaceKind::CR || pair.vector.size() != disc.cr.ndof())
    throw std::invalid_argument("compute_indicators: expected a CR eigenpair on this mesh");
  IndicatorField f;
  f.eigen_index = eigen_index;
  f.mu2 = compute_mu(disc.cr, disc.p1, pair.vector, weights);
  f.eta2 = compute_eta(disc.cr, pair.value, pair.vector);
  for (double v : f.mu2) f.mu2_total += v;
  for (double v : f.eta2) f.eta2_total += v;
  return f;
}

GapBound gap_bound(const IndicatorField& field, double lambda) {
  double mu = std::sqrt(field.mu2_total);
  return {mu / lambda, mu / std::sqrt(lambda)};
}

GapBound gap_bound(const fem::Discretization& disc, const eig::EigenPair& pair, fem::WeightRule weights) {
  return gap_bound(compute_indicators(disc, pair, 0, weights), pair.value);
}

EffectivityRecord effectivity(std::span<const int> cluster, std::span<const double> values,
                              std::span<const IndicatorField> fields, double reference) {
  EffectivityRecord r;
  r.cluster.assign(cluster.begin(), cluster.end());
  for (int k : cluster) {
    r.error += std::abs(reference - values[static_cast<std::size_t>(k)]);
    bool found = false;
    for (const auto& f : fields)
      if (f.eigen_index == k) {
        r.indicator += f.mu2_total;
        found = true;
      }
    if (!found) throw std::invalid_argument("effectivity: missing indicator field for index " + std::to_string(k));
  }
  r.effectivity = r.indicator > 0.0 ? r.error / r.indicator : std::numeric_limits<double>::infinity();
  return r;
}

FineReference make_fine_reference(const mesh::MeshPtr& coarse, std::span<const int> cluster, int sweeps,
                                  const eig::SolverOptions& options) {
  if (cluster.empty()) throw std::invalid_argument("make_fine_reference: empty cluster");
  FineReference ref;
  ref.mesh = std::make_shared<const mesh::TriMesh>(mesh::refine_uniform(*coarse, sweeps));
  auto p1 = std::make_shared<const fem::P1Space>(ref.mesh);
  ref.p1 = p1;
  ref.stiffness = fem::assemble_stiffness(*p1);
  fem::SparseMatrix mass = fem::assemble_mass(*p1);
  int nev = *std::max_element(cluster.begin(), cluster.end()) + 1;
  eig::SolverOptions opt = options;
  opt.space = fem::SpaceKind::P1;
  eig::SpectralSet set = eig::smallest_eigenpairs(ref.stiffness, mass, nev, opt);
  ref.basis.resize(p1->ndof(), static_cast<Eigen::Index>(cluster.size()));
  for (std::size_t c = 0; c < cluster.size(); ++c) {
    const auto& pair = set[static_cast<std::size_t>(cluster[c])];
    ref.basis.col(static_cast<Eigen::Index>(c)) = pair.vector;
    ref.values.push_back(pair.value);
  }
  return ref;
}

EfficiencyReport efficiency_check(const fem::Discretization& disc, const eig::EigenPair& pair,
                                  const FineReference* reference, fem::WeightRule weights) {
  EfficiencyReport rep;
  if (reference == nullptr || reference->basis.cols() == 0) {
    rep.skipped = true;
    rep.notice = "efficiency check skipped: no fine reference available";
    return rep;
  }
  const mesh::TriMesh& coarse = *disc.mesh;
  const mesh::TriMesh& fine = *reference->mesh;
  const fem::P1Space& fp1 = *reference->p1;
  const Eigen::Index q = reference->basis.cols();

  std::vector<Eigen::Vector2d> coarse_grad(coarse.num_triangles());
  for (std::size_t t = 0; t < coarse_grad.size(); ++t)
    coarse_grad[t] = fem::cr_gradient(disc.cr, pair.vector, static_cast<Index>(t));

  // energy projection of u_h onto the reference span, in the fine broken inner product
  Matrix gram = reference->basis.transpose() * (reference->stiffness * reference->basis);
  Vector rhs = Vector::Zero(q);
  std::vector<std::vector<Eigen::Vector2d>> fine_grad(static_cast<std::size_t>(q));
  for (Eigen::Index c = 0; c < q; ++c) {
    auto& g = fine_grad[static_cast<std::size_t>(c)];
    g.resize(fine.num_triangles());
    Vector col = reference->basis.col(c);
    for (std::size_t t = 0; t < fine.num_triangles(); ++t) {
      auto ft = static_cast<Index>(t);
      g[t] = fem::p1_gradient(fp1, col, ft);
      Index parent = fine.triangles()[t].parent;
      if (parent < 0 || static_cast<std::size_t>(parent) >= coarse.num_triangles())
        throw std::invalid_argument("efficiency_check: fine mesh is not a refinement of this mesh");
      rhs[c] += fine.area(ft) * g[t].dot(coarse_grad[static_cast<std::size_t>(parent)]);
    }
  }
  Vector alpha = gram.ldlt().solve(rhs);

  std::vector<double> err_k(coarse.num_triangles(), 0.0);
  for (std::size_t t = 0; t < fine.num_triangles(); ++t) {
    Eigen::Vector2d best = Eigen::Vector2d::Zero();
    for (Eigen::Index c = 0; c < q; ++c) best += alpha[c] * fine_grad[static_cast<std::size_t>(c)][t];
    auto parent = static_cast<std::size_t>(fine.triangles()[t].parent);
    err_k[parent] += fine.area(static_cast<Index>(t)) * (best - coarse_grad[parent]).squaredNorm();
  }

  std::vector<double> mu2 = compute_mu(disc.cr, disc.p1, pair.vector, weights);
  const std::size_t nt = coarse.num_triangles();
  rep.ratio.assign(nt, 0.0);
  rep.exact_match.assign(nt, 0);
  rep.local_error.assign(nt, 0.0);
  // scale for deciding that both sides vanish
  double mu_scale = 0.0, err_scale = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    mu_scale += mu2[k];
    err_scale += err_k[k];
  }
  const double eps = 1e-24;
  std::vector<char> in_star(nt, 0);
  std::vector<Index> star;
  for (std::size_t k = 0; k < nt; ++k) {
    star.clear();
    for (Index v : coarse.triangles()[k].v)
      for (Index t : coarse.vertex_patch(v))
        if (!in_star[static_cast<std::size_t>(t)]) {
          in_star[static_cast<std::size_t>(t)] = 1;
          star.push_back(t);
        }
    double e2 = 0.0;
    for (Index t : star) {
      e2 += err_k[static_cast<std::size_t>(t)];
      in_star[static_cast<std::size_t>(t)] = 0;
    }
    rep.local_error[k] = std::sqrt(e2);
    bool mu_zero = mu2[k] <= eps * std::max(1.0, mu_scale);
    bool err_zero = e2 <= eps * std::max(1.0, err_scale);
    if (mu_zero && err_zero) {
      rep.exact_match[k] = 1;
      continue;
    }
    rep.ratio[k] = err_zero ? std::numeric_limits<double>::infinity() : std::sqrt(mu2[k]) / rep.local_error[k];
    if (rep.ratio[k] > rep.max_ratio) {
      rep.max_ratio = rep.ratio[k];
      rep.argmax = static_cast<Eigen::Index>(k);
    }
  }
  return rep;
}

void write_indicator_csv(std::ostream& out, const IndicatorField& field) {
  out << "elem_id,mu2,eta2\n" << std::setprecision(17);
  for (std::size_t k = 0; k < field.mu2.size(); ++k) out << k << ',' << field.mu2[k] << ',' << field.eta2[k] << '\n';
}

} // namespace cradapt::est
