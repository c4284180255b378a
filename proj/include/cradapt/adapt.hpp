#pragma once

#include "cradapt/eigensolve.hpp"
#include "cradapt/estimators.hpp"
#include "cradapt/fem.hpp"
#include "cradapt/mesh.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cradapt::adapt {

using mesh::Index;

/// Contiguous run of the sorted spectrum treated as one multiple eigenvalue.
struct Cluster {
  std::vector<int> members;  ///< 0-based, ascending
  std::vector<double> values;
  double rtol = 0.0;
};

/// Maximal groups where consecutive relative gaps (l_{k+1} - l_k)/l_k stay <= rtol.
/// This is a heuristic: nothing guarantees the groups match continuous multiplicities.
std::vector<Cluster> detect_clusters(std::span<const double> values, double rtol);

/// Minimal set carrying at least theta of the total; greedy on descending
/// values, ties by lower element id. Returned ids are ascending.
std::vector<Index> dorfler_mark(std::span<const double> indicators, double theta);

/// Elementwise sum of mu^2 (+ eta^2) over the given fields.
std::vector<double> cluster_indicator(std::span<const est::IndicatorField> fields, bool with_eta = true);

enum class MarkingMode { Single, ClusterSum };

struct AdaptConfig {
  double theta = 0.5;
  int target_index = 2;         ///< 1-based first member of the target cluster
  int target_multiplicity = 0;  ///< 0: detect around target_index
  MarkingMode marking = MarkingMode::ClusterSum;
  int single_index = 2;         ///< 1-based, used by MarkingMode::Single
  std::size_t max_dof = 50000;
  int nev = 3;
  double cluster_rtol = 0.02;
  bool with_eta = true;
  bool timing = false;          ///< wall-clock seconds in records (breaks bit-identical output)
  fem::WeightRule weights = fem::WeightRule::Uniform;
  eig::SolverOptions solver;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct AdaptRecord {
  int iteration = 0;
  std::size_t ndof = 0;  ///< CR degrees of freedom
  std::size_t ndof_conforming = 0;
  std::size_t triangles = 0;
  std::vector<double> eigenvalues;
  std::vector<double> conforming_eigenvalues;
  std::vector<int> cluster;  ///< target cluster, 0-based
  std::vector<std::vector<int>> detected_clusters;
  std::vector<double> member_mu2;
  std::vector<double> member_eta2;
  std::vector<double> member_gap_vc;    ///< delta_h(E_k, Vc)
  std::vector<double> member_gap_bound; ///< mu_k / sqrt(lambda_k)
  double mu2_cluster = 0.0;
  double eta2_cluster = 0.0;
  double gap_vc = 0.0;  ///< delta_h(E_cluster, Vc)
  std::size_t marked = 0;
  /// swap_gaps(a, b) = delta_h(u_a on this mesh, u_b of the previous mesh transferred here)
  fem::Matrix swap_gaps;
  double seconds = 0.0;
};

struct IterationState {
  int iteration;
  const fem::Discretization& disc;
  const eig::SpectralSet& cr;
  const eig::SpectralSet& conforming;
  const std::vector<est::IndicatorField>& fields;
  const std::vector<Index>& marked;  ///< empty on the final iteration
  const AdaptRecord& record;
};

struct AdaptResult {
  std::vector<AdaptRecord> records;
  mesh::MeshPtr final_mesh;
  eig::SpectralSet final_cr;
  eig::SpectralSet final_conforming;
  std::string error;  ///< empty on success
  std::string notice;

  bool ok() const { return error.empty(); }
};

using Observer = std::function<void(const IterationState&)>;

/// SOLVE -> ESTIMATE -> MARK -> REFINE until the CR DOF count reaches max_dof.
AdaptResult adaptive_loop(const mesh::TriMesh& mesh0, const AdaptConfig& config, const Observer& observer = {});

/// Target cluster indices for one spectrum.
std::vector<int> target_cluster(std::span<const double> values, const AdaptConfig& config);

/// Prolongs a CR function to a refined mesh by evaluating the coarse
/// piecewise-linear function at the fine edge midpoints (mean of the two sides).
fem::Vector transfer_cr(const fem::CRSpace& coarse, const fem::Vector& coeffs, const fem::CRSpace& fine);

/// `iter,ndof,lambda_1..nev,mu2_cluster,eta2_cluster,marked,gap_vc,seconds`
void write_records_csv(std::ostream& out, std::span<const AdaptRecord> records, int nev);

} // namespace cradapt::adapt
