#include "cradapt/adapt.hpp"

#include "cradapt/errors.hpp"
#include "cradapt/subspace.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace cradapt::adapt {

std::vector<Cluster> detect_clusters(std::span<const double> values, double rtol) {
  std::vector<Cluster> out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    bool extend = !out.empty() && (values[k] - values[k - 1]) / values[k - 1] <= rtol;
    if (!extend) out.push_back({{}, {}, rtol});
    out.back().members.push_back(static_cast<int>(k));
    out.back().values.push_back(values[k]);
  }
  return out;
}

std::vector<Index> dorfler_mark(std::span<const double> indicators, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("dorfler_mark: theta must lie in (0,1)");
  double total = 0.0;
  for (double v : indicators) {
    if (!(v >= 0.0)) throw std::invalid_argument("dorfler_mark: indicators must be nonnegative");
    total += v;
  }
  if (total <= 0.0) return {};
  std::vector<Index> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return indicators[static_cast<std::size_t>(a)] > indicators[static_cast<std::size_t>(b)]; });
  const double goal = theta * total;
  double acc = 0.0;
  std::vector<Index> marked;
  for (Index k : order) {
    marked.push_back(k);
    acc += indicators[static_cast<std::size_t>(k)];
    if (acc >= goal) break;
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

std::vector<double> cluster_indicator(std::span<const est::IndicatorField> fields, bool with_eta) {
  if (fields.empty()) return {};
  const std::size_t n = fields.front().mu2.size();
  std::vector<double> out(n, 0.0);
  for (const auto& f : fields) {
    if (f.mu2.size() != n || f.eta2.size() != n)
      throw std::invalid_argument("cluster_indicator: fields live on different meshes");
    for (std::size_t k = 0; k < n; ++k) out[k] += with_eta ? f.mu2[k] + f.eta2[k] : f.mu2[k];
  }
  return out;
}

void AdaptConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
  if (nev < 1) throw std::invalid_argument("nev must be positive");
  if (target_index < 1 || target_index > nev) throw std::invalid_argument("target index outside 1..nev");
  if (target_multiplicity < 0 || target_index + target_multiplicity - 1 > nev)
    throw std::invalid_argument("target cluster exceeds nev");
  if (marking == MarkingMode::Single && (single_index < 1 || single_index > nev))
    throw std::invalid_argument("single marking index outside 1..nev");
  if (!(cluster_rtol >= 0.0)) throw std::invalid_argument("cluster_rtol must be nonnegative");
}

std::vector<int> target_cluster(std::span<const double> values, const AdaptConfig& config) {
  const int start = config.target_index - 1;
  if (config.target_multiplicity > 0) {
    std::vector<int> out(static_cast<std::size_t>(config.target_multiplicity));
    std::iota(out.begin(), out.end(), start);
    return out;
  }
  for (const auto& c : detect_clusters(values, config.cluster_rtol))
    if (std::find(c.members.begin(), c.members.end(), start) != c.members.end()) return c.members;
  return {start};
}

namespace {

std::array<double, 3> barycentric(const std::array<mesh::Point, 3>& p, const mesh::Point& x) {
  double det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
  double l1 = ((x.x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (x.y - p[0].y)) / det;
  double l2 = ((p[1].x - p[0].x) * (x.y - p[0].y) - (x.x - p[0].x) * (p[1].y - p[0].y)) / det;
  return {1.0 - l1 - l2, l1, l2};
}

} // namespace

fem::Vector transfer_cr(const fem::CRSpace& coarse, const fem::Vector& coeffs, const fem::CRSpace& fine) {
  const mesh::TriMesh& cm = coarse.mesh();
  const mesh::TriMesh& fm = fine.mesh();
  std::vector<double> sum(fm.num_edges(), 0.0);
  std::vector<int> count(fm.num_edges(), 0);
  for (const mesh::Triangle& t : fm.triangles()) {
    if (t.parent < 0 || static_cast<std::size_t>(t.parent) >= cm.num_triangles())
      throw std::invalid_argument("transfer_cr: fine mesh does not refine the coarse mesh");
    auto pc = cm.corners(t.parent);
    auto vals = fem::cr_vertex_values(coarse, coeffs, t.parent);
    auto fc = fm.corners(t.id);
    for (int i = 0; i < 3; ++i) {
      const mesh::Point& a = fc[(i + 1) % 3];
      const mesh::Point& b = fc[(i + 2) % 3];
      auto lam = barycentric(pc, {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      Index e = fm.triangle_edges(t.id)[i];
      sum[static_cast<std::size_t>(e)] += lam[0] * vals[0] + lam[1] * vals[1] + lam[2] * vals[2];
      ++count[static_cast<std::size_t>(e)];
    }
  }
  fem::Vector out(fine.ndof());
  for (Index d = 0; d < fine.ndof(); ++d) {
    auto e = static_cast<std::size_t>(fine.dof_edge(d));
    out[d] = sum[e] / count[e];
  }
  return out;
}

AdaptResult adaptive_loop(const mesh::TriMesh& mesh0, const AdaptConfig& config, const Observer& observer) {
  config.validate();
  AdaptResult result;
  auto current = std::make_shared<const mesh::TriMesh>(mesh0);
  std::unique_ptr<fem::Discretization> prev_disc;
  eig::SpectralSet prev_cr;

  for (int iter = 0;; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    auto disc = std::make_unique<fem::Discretization>(current);
    AdaptRecord rec;
    rec.iteration = iter;
    rec.ndof = static_cast<std::size_t>(disc->cr.ndof());
    rec.ndof_conforming = static_cast<std::size_t>(disc->p1.ndof());
    rec.triangles = current->num_triangles();

    eig::SpectralSet cr, conf;
    try {
      if (disc->cr.ndof() < config.nev)
        throw NumericalError("mesh has only " + std::to_string(disc->cr.ndof()) + " CR degrees of freedom");
      eig::SolverOptions opt = config.solver;
      opt.space = fem::SpaceKind::CR;
      cr = eig::fix_signs(eig::smallest_eigenpairs(disc->cr_stiffness, disc->cr_mass, config.nev, opt));
      int nconf = std::min<int>(config.nev, disc->p1.ndof());
      if (nconf > 0) {
        opt.space = fem::SpaceKind::P1;
        conf = eig::fix_signs(eig::smallest_eigenpairs(disc->p1_stiffness, disc->p1_mass, nconf, opt));
      }
    } catch (const NumericalError& e) {
      result.error = "iteration " + std::to_string(iter) + ": " + e.what();
      break;
    }

    rec.eigenvalues = cr.values();
    rec.conforming_eigenvalues = conf.values();
    for (const auto& c : detect_clusters(rec.eigenvalues, config.cluster_rtol)) rec.detected_clusters.push_back(c.members);
    rec.cluster = target_cluster(rec.eigenvalues, config);

    std::vector<int> needed = rec.cluster;
    if (config.marking == MarkingMode::Single &&
        std::find(needed.begin(), needed.end(), config.single_index - 1) == needed.end())
      needed.push_back(config.single_index - 1);

    std::vector<est::IndicatorField> fields;
    for (int k : needed)
      fields.push_back(est::compute_indicators(*disc, cr[static_cast<std::size_t>(k)], k, config.weights));

    subspace::ConformingProjector proj(*disc);
    const fem::Matrix vecs = cr.vectors();
    for (std::size_t c = 0; c < rec.cluster.size(); ++c) {
      int k = rec.cluster[c];
      const auto& f = fields[c];
      rec.member_mu2.push_back(f.mu2_total);
      rec.member_eta2.push_back(f.eta2_total);
      rec.mu2_cluster += f.mu2_total;
      rec.eta2_cluster += f.eta2_total;
      subspace::SubspaceBasis single("E_" + std::to_string(k + 1), disc->cr_stiffness, vecs.col(k));
      rec.member_gap_vc.push_back(subspace::gap_to_conforming(single, proj));
      rec.member_gap_bound.push_back(est::gap_bound(f, cr[static_cast<std::size_t>(k)].value).mu_over_sqrt_lambda);
    }
    {
      subspace::SubspaceBasis whole("E_cluster", disc->cr_stiffness,
                                    vecs.middleCols(rec.cluster.front(), static_cast<Eigen::Index>(rec.cluster.size())));
      rec.gap_vc = subspace::gap_to_conforming(whole, proj);
    }

    if (prev_disc) {
      const auto n = static_cast<Eigen::Index>(cr.size());
      rec.swap_gaps.resize(n, static_cast<Eigen::Index>(prev_cr.size()));
      std::vector<fem::Vector> moved;
      for (const auto& p : prev_cr.pairs) moved.push_back(transfer_cr(prev_disc->cr, p.vector, disc->cr));
      for (Eigen::Index a = 0; a < n; ++a) {
        subspace::SubspaceBasis ea("u_new", disc->cr_stiffness, vecs.col(a));
        for (Eigen::Index b = 0; b < rec.swap_gaps.cols(); ++b) {
          subspace::SubspaceBasis eb("u_prev", disc->cr_stiffness, moved[static_cast<std::size_t>(b)]);
          rec.swap_gaps(a, b) = subspace::subspace_gap(ea, eb);
        }
      }
    }

    std::vector<Index> marked;
    const bool done = rec.ndof >= config.max_dof;
    if (!done) {
      std::vector<double> ind;
      if (config.marking == MarkingMode::ClusterSum) {
        ind = cluster_indicator(std::span<const est::IndicatorField>(fields.data(), rec.cluster.size()), config.with_eta);
      } else {
        for (const auto& f : fields)
          if (f.eigen_index == config.single_index - 1) ind = f.combined(config.with_eta);
      }
      marked = dorfler_mark(ind, config.theta);
    }
    rec.marked = marked.size();
    if (config.timing)
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.records.push_back(rec);

    if (observer) observer({iter, *disc, cr, conf, fields, marked, result.records.back()});

    result.final_mesh = current;
    result.final_cr = cr;
    result.final_conforming = conf;
    if (done) break;
    if (marked.empty()) {
      result.notice = "indicators vanish at iteration " + std::to_string(iter) + "; nothing to refine";
      break;
    }
    current = std::make_shared<const mesh::TriMesh>(mesh::refine(*current, marked));
    prev_disc = std::move(disc);
    prev_cr = std::move(cr);
  }
  return result;
}

void write_records_csv(std::ostream& out, std::span<const AdaptRecord> records, int nev) {
  out << "iter,ndof";
  for (int k = 1; k <= nev; ++k) out << ",lambda_" << k;
  out << ",mu2_cluster,eta2_cluster,marked,gap_vc,seconds\n";
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << r.iteration << ',' << r.ndof;
    for (int k = 0; k < nev; ++k) {
      out << ',';
      if (static_cast<std::size_t>(k) < r.eigenvalues.size()) out << r.eigenvalues[static_cast<std::size_t>(k)];
    }
    out << ',' << r.mu2_cluster << ',' << r.eta2_cluster << ',' << r.marked << ',' << r.gap_vc << ',' << r.seconds
        << '\n';
  }
}

} // namespace cradapt::adapt
