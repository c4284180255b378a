#pragma once

#include "cradapt/eigensolve.hpp"
#include "cradapt/fem.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cradapt::est {

using fem::Matrix;
using fem::Vector;

/// Per-element squared indicators of one discrete eigenfunction.
struct IndicatorField {
  int eigen_index = 0;  ///< 0-based position in the spectrum
  std::vector<double> mu2;
  std::vector<double> eta2;
  double mu2_total = 0.0;
  double eta2_total = 0.0;

  /// mu2 + eta2 per element, or mu2 alone.
  std::vector<double> combined(bool with_eta = true) const;
};

/// mu^2_K = |K| |grad u~ - grad_h u|^2 with u~ the vertex-averaged conforming function.
std::vector<double> compute_mu(const fem::CRSpace& space, const fem::P1Space& p1, const Vector& u,
                               fem::WeightRule weights = fem::WeightRule::Uniform);

/// eta^2_K = h_K^2 lambda^2 ||u||^2_{L2(K)}, integrated exactly (CR mass is diagonal).
std::vector<double> compute_eta(const fem::CRSpace& space, double lambda, const Vector& u);

IndicatorField compute_indicators(const fem::Discretization& disc, const eig::EigenPair& pair, int eigen_index,
                                  fem::WeightRule weights = fem::WeightRule::Uniform);

/// Computable bounds for delta_h(E_j, H^1_0): the published mu/lambda form and
/// the normalized mu/sqrt(lambda) form (||u_h||_h = sqrt(lambda) for M-normalized u_h).
struct GapBound {
  double mu_over_lambda = 0.0;
  double mu_over_sqrt_lambda = 0.0;
};

GapBound gap_bound(const IndicatorField& field, double lambda);
GapBound gap_bound(const fem::Discretization& disc, const eig::EigenPair& pair,
                   fem::WeightRule weights = fem::WeightRule::Uniform);

/// Cluster effectivity: sum_k |ref - lambda_k| / sum_k mu^2_k.
struct EffectivityRecord {
  std::vector<int> cluster;
  double error = 0.0;
  double indicator = 0.0;
  double effectivity = 0.0;
};

EffectivityRecord effectivity(std::span<const int> cluster, std::span<const double> values,
                              std::span<const IndicatorField> fields, double reference);

/// Fine-mesh stand-in for the best continuous eigenspace element: conforming
/// eigenvectors on a uniformly refined copy of the mesh.
struct FineReference {
  mesh::MeshPtr mesh;  ///< triangles carry `parent` into the coarse mesh
  std::shared_ptr<const fem::P1Space> p1;
  fem::SparseMatrix stiffness;
  Matrix basis;        ///< P1 coefficients, one column per reference function
  std::vector<double> values;
};

FineReference make_fine_reference(const mesh::MeshPtr& coarse, std::span<const int> cluster, int sweeps = 2,
                                  const eig::SolverOptions& options = {});

struct EfficiencyReport {
  bool skipped = false;
  std::string notice;
  std::vector<double> ratio;       ///< mu_K / ||grad_h(u_j(h) - u_h)||_{K*}; 0 where exact
  std::vector<char> exact_match;   ///< both sides vanish
  std::vector<double> local_error; ///< ||grad_h(u_j(h) - u_h)||_{K*}
  double max_ratio = 0.0;
  Eigen::Index argmax = -1;
};

/// Local lower-bound audit. `reference` may be null, in which case the check is skipped.
EfficiencyReport efficiency_check(const fem::Discretization& disc, const eig::EigenPair& pair,
                                  const FineReference* reference,
                                  fem::WeightRule weights = fem::WeightRule::Uniform);

/// `elem_id,mu2,eta2`
void write_indicator_csv(std::ostream& out, const IndicatorField& field);

} // namespace cradapt::est
