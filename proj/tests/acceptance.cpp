// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit 1 if any fails.
#include "cradapt/adapt.hpp"
#include "cradapt/bench.hpp"
#include "cradapt/estimators.hpp"
#include "cradapt/subspace.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cradapt;
using mesh::Index;
namespace fs = std::filesystem;

namespace {

constexpr double kRef = bench::kSquareRingReference;
int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

adapt::AdaptConfig ring_config() {
  adapt::AdaptConfig cfg;
  cfg.theta = 0.5;
  cfg.marking = adapt::MarkingMode::ClusterSum;
  cfg.target_index = 2;
  cfg.target_multiplicity = 2;
  cfg.max_dof = 50000;
  cfg.nev = 10;
  return cfg;
}

double cluster_error(const adapt::AdaptRecord& r) {
  double e = 0;
  for (int k : r.cluster) e += std::abs(kRef - r.eigenvalues[static_cast<std::size_t>(k)]);
  return e;
}

// ---- individual criteria -------------------------------------------------

void criterion1(const adapt::AdaptResult& res, double seconds) {
  if (!res.ok() || res.records.empty()) {
    report(1, false, "adaptive run failed: " + res.error);
    return;
  }
  const auto& r = res.records.back();
  double l2 = r.eigenvalues[1], l3 = r.eigenvalues[2];
  double e2 = std::abs(l2 - kRef) / kRef, e3 = std::abs(l3 - kRef) / kRef;
  double spread = std::abs(l2 - l3) / l2;
  bool ok = e2 <= 1e-2 && e3 <= 1e-2 && spread <= 5e-3;
  report(1, ok, fmt("ndof=%zu lambda2=%.6f lambda3=%.6f relerr=%.2e,%.2e spread=%.2e (%.0fs, %zu iterations)", r.ndof,
                    l2, l3, e2, e3, spread, seconds, res.records.size()));
}

void criterion2(const adapt::AdaptResult& res) {
  // ring references: Aitken on conforming uniform levels
  bench::DomainSpec ring{bench::DomainSpec::Kind::SquareRing, 8, {}};
  std::vector<std::vector<double>> seq(10);
  for (int level = 0; level < 4; ++level) {
    fem::Discretization d(std::make_shared<const mesh::TriMesh>(bench::uniform_level(ring, level)));
    eig::SolverOptions opt;
    opt.space = fem::SpaceKind::P1;
    auto set = eig::smallest_eigenpairs(d.p1_stiffness, d.p1_mass, 10, opt);
    for (std::size_t k = 0; k < 10; ++k) seq[k].push_back(set[k].value);
  }
  std::vector<double> ring_ref;
  for (const auto& s : seq) ring_ref.push_back(bench::aitken_extrapolate(s).value);

  std::size_t checked = 0, violations = 0;
  std::string first;
  for (const auto& r : res.records)
    for (std::size_t k = 0; k < r.eigenvalues.size() && k < 10; ++k) {
      ++checked;
      if (r.eigenvalues[k] > ring_ref[k]) {
        if (violations++ == 0)
          first = fmt("ring iter %d (ndof %zu) lambda_%zu=%.6f > %.6f", r.iteration, r.ndof, k + 1, r.eigenvalues[k],
                      ring_ref[k]);
      }
    }
  auto exact = bench::unit_square_spectrum(10);
  for (int n : {8, 16, 32, 64}) {
    fem::Discretization d(std::make_shared<const mesh::TriMesh>(mesh::make_unit_square(n)));
    auto set = eig::smallest_eigenpairs(d.cr_stiffness, d.cr_mass, 10);
    for (std::size_t k = 0; k < 10; ++k) {
      ++checked;
      if (set[k].value > exact[k] && violations++ == 0)
        first = fmt("unit_square:%d lambda_%zu=%.6f > %.6f", n, k + 1, set[k].value, exact[k]);
    }
  }
  report(2, violations == 0,
         fmt("%zu eigenvalues checked, %zu above reference%s%s (ring refs lambda2,3=%.4f,%.4f)", checked, violations,
             violations ? "; first: " : "", first.c_str(), ring_ref[1], ring_ref[2]));
}

void criterion3() {
  auto cfg = ring_config();
  cfg.marking = adapt::MarkingMode::Single;
  cfg.single_index = 3;
  auto res = adapt::adaptive_loop(mesh::make_square_ring(), cfg);
  if (!res.ok() || res.records.empty()) {
    report(3, false, "single(3) run failed: " + res.error);
    return;
  }
  const auto& r = res.records.back();
  double e2 = std::abs(kRef - r.eigenvalues[1]), e3 = std::abs(kRef - r.eigenvalues[2]);
  report(3, e3 < e2 / 3, fmt("ndof=%zu |ref-lambda3|=%.4e |ref-lambda2|/3=%.4e", r.ndof, e3, e2 / 3));
}

void criterion4(const adapt::AdaptResult& res) {
  if (res.records.size() < 5) {
    report(4, false, "fewer than 5 iterations");
    return;
  }
  std::vector<double> x, y;
  for (std::size_t i = res.records.size() - 5; i < res.records.size(); ++i) {
    x.push_back(static_cast<double>(res.records[i].ndof));
    y.push_back(cluster_error(res.records[i]));
  }
  double s = slope(x, y);
  report(4, s >= -1.25 && s <= -0.75, fmt("slope over final 5 iterations = %.3f", s));
}

void criterion5(const adapt::AdaptResult& res) {
  double lo = 1e300, hi = 0;
  for (const auto& r : res.records) {
    double eff = cluster_error(r) / r.mu2_cluster;
    lo = std::min(lo, eff);
    hi = std::max(hi, eff);
  }
  report(5, res.records.size() > 1 && hi / lo <= 20, fmt("effectivity in [%.3f, %.3f], max/min = %.2f", lo, hi, hi / lo));
}

void criterion6(const adapt::AdaptResult& res) {
  std::size_t checked = 0, bad = 0;
  double worst = -1e300;
  for (const auto& r : res.records)
    for (std::size_t i = 0; i < 5 && i < r.conforming_eigenvalues.size(); ++i) {
      ++checked;
      double d = (r.eigenvalues[i] - r.conforming_eigenvalues[i]) / r.conforming_eigenvalues[i];
      worst = std::max(worst, d);
      if (d > 1e-8) ++bad;  // solver tolerance 1e-9 on each side
    }
  // plus a uniform unit-square sweep
  for (int n : {4, 8, 16, 32}) {
    fem::Discretization d(std::make_shared<const mesh::TriMesh>(mesh::make_unit_square(n)));
    auto cr = eig::smallest_eigenpairs(d.cr_stiffness, d.cr_mass, 5);
    auto p1 = eig::smallest_eigenpairs(d.p1_stiffness, d.p1_mass, 5);
    for (std::size_t i = 0; i < 5; ++i) {
      ++checked;
      double rel = (cr[i].value - p1[i].value) / p1[i].value;
      worst = std::max(worst, rel);
      if (rel > 1e-8) ++bad;
    }
  }
  report(6, bad == 0, fmt("%zu pairs, %zu violations, max (lambda-lambda_c)/lambda_c = %.3e", checked, bad, worst));
}

void criterion7() {
  using fem::LocalMatrix;
  double worst = 0;
  auto diff = [&](const LocalMatrix& a, const LocalMatrix& b) { worst = std::max(worst, (a - b).cwiseAbs().maxCoeff()); };
  std::array<mesh::Point, 3> ref{{{0, 0}, {1, 0}, {0, 1}}};
  LocalMatrix k;
  k << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  diff(fem::p1_element_stiffness(ref), 0.5 * k);
  diff(fem::cr_element_stiffness(ref), 2.0 * k);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::array<mesh::Point, 3> p{{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}}};
    double det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    if (std::abs(det) < 0.05) continue;
    if (det < 0) std::swap(p[1], p[2]);
    double area = std::abs(det) / 2;
    LocalMatrix m1;
    m1 << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    diff(fem::p1_element_mass(p), area / 12 * m1);
    diff(fem::cr_element_mass(p), area / 3 * LocalMatrix::Identity());
    // gradients of barycentrics: edge normals over twice the area
    LocalMatrix kp;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto &a1 = p[(i + 1) % 3], &a2 = p[(i + 2) % 3], &b1 = p[(j + 1) % 3], &b2 = p[(j + 2) % 3];
        double ex = a2.x - a1.x, ey = a2.y - a1.y, fx = b2.x - b1.x, fy = b2.y - b1.y;
        kp(i, j) = (ex * fx + ey * fy) / (4 * area);
      }
    diff(fem::p1_element_stiffness(p), kp);
    diff(fem::cr_element_stiffness(p), 4 * kp);
  }
  report(7, worst <= 1e-12, fmt("max entry deviation %.2e", worst));
}

void criterion8() {
  const double exact = 2 * std::numbers::pi * std::numbers::pi;
  std::vector<double> h, ecr, ep1;
  for (int n : {8, 16, 32, 64}) {
    fem::Discretization d(std::make_shared<const mesh::TriMesh>(mesh::make_unit_square(n)));
    h.push_back(1.0 / n);
    ecr.push_back(std::abs(exact - eig::smallest_eigenpairs(d.cr_stiffness, d.cr_mass, 1)[0].value));
    ep1.push_back(std::abs(exact - eig::smallest_eigenpairs(d.p1_stiffness, d.p1_mass, 1)[0].value));
  }
  double scr = slope(h, ecr), sp1 = slope(h, ep1);
  bool ok = std::abs(scr - 2) <= 0.2 && std::abs(sp1 - 2) <= 0.2;
  report(8, ok, fmt("fitted order CR %.3f, conforming %.3f", scr, sp1));
}

void criterion9(const adapt::AdaptResult& res) {
  std::size_t checked = 0, bad = 0;
  double worst = 0;
  for (const auto& r : res.records)
    for (std::size_t c = 0; c < r.cluster.size(); ++c) {
      ++checked;
      double ratio = r.member_gap_vc[c] / r.member_gap_bound[c];
      worst = std::max(worst, ratio);
      if (r.member_gap_vc[c] > r.member_gap_bound[c] * (1 + 1e-12)) ++bad;
    }
  report(9, checked > 0 && bad == 0, fmt("%zu member checks, %zu violations, max gap/bound = %.4f", checked, bad, worst));
}

// ---- criterion 10: property sweeps --------------------------------------

fem::Matrix rand_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  fem::Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

bool gap_axioms(std::string& why) {
  std::mt19937_64 rng(20140501);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 10 + trial % 5, de = 1 + trial % 3;
    fem::Matrix b = rand_matrix(n, n, rng);
    fem::SparseMatrix a = fem::Matrix(b * b.transpose() + fem::Matrix::Identity(n, n)).sparseView();
    fem::Matrix e = rand_matrix(n, de, rng), f = rand_matrix(n, de, rng);
    subspace::SubspaceBasis be("E", a, e), bf("F", a, f);
    double g = subspace::subspace_gap(be, bf);
    fem::Matrix ef(n, 2 * de);
    ef << e, f;
    subspace::SubspaceBasis bef("E+F", a, ef);
    subspace::SubspaceBasis be2("E'", a, fem::Matrix(e * (rand_matrix(de, de, rng) + 3 * fem::Matrix::Identity(de, de))));
    if (g < 0 || g > 1 + 1e-12) why = "range";
    else if (subspace::subspace_gap(be, bef) > 1e-7) why = "subset";
    else if (std::abs(subspace::subspace_gap(bf, be) - g) > 1e-9) why = "symmetry";
    else if (std::abs(subspace::subspace_gap(be2, bf) - g) > 1e-9) why = "basis invariance";
    if (!why.empty()) return false;
  }
  return true;
}

bool dorfler_minimal(std::string& why) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 15);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    double theta = 0.05 + 0.9 * u(rng), goal = theta * std::accumulate(v.begin(), v.end(), 0.0);
    std::size_t best = n + 1;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) s += v[i];
      if (s >= goal) best = std::min<std::size_t>(best, static_cast<std::size_t>(std::popcount(mask)));
    }
    if (adapt::dorfler_mark(v, theta).size() != best) {
      why = fmt("trial %d: greedy not minimal", trial);
      return false;
    }
  }
  return true;
}

bool mesh_invariants(std::string& why) {
  std::mt19937_64 rng(11);
  for (int s = 0; s < 10; ++s) {
    mesh::TriMesh m = s % 2 ? mesh::make_square_ring() : mesh::make_unit_square(3);
    const double area = m.total_area(), floor = mesh::refine_uniform(m, 4).min_angle();
    const int holes = m.holes();
    const std::size_t bnd = m.num_boundary_edges();
    for (int step = 0; step < 6; ++step) {
      std::vector<Index> marked;
      std::bernoulli_distribution pick(0.15);
      for (const auto& t : m.triangles())
        if (pick(rng)) marked.push_back(t.id);
      m = mesh::refine(m, marked);
      auto issues = mesh::audit(m);
      if (!issues.empty()) why = issues.front();
      else if (std::abs(m.total_area() - area) > 1e-12 * area) why = "area";
      else if (m.holes() != holes) why = "euler";
      else if (m.min_angle() < floor - 1e-12) why = "angle";
      else if (m.num_boundary_edges() < bnd) why = "boundary";
      if (!why.empty()) {
        why = fmt("sequence %d step %d: %s", s, step, why.c_str());
        return false;
      }
    }
  }
  return true;
}

bool rotation_invariance(std::string& why) {
  fem::Discretization d(std::make_shared<const mesh::TriMesh>(mesh::refine_uniform(mesh::make_square_ring(), 2)));
  auto set = eig::smallest_eigenpairs(d.cr_stiffness, d.cr_mass, 3);
  for (double angle : {0.3, 1.1, 2.7}) {
    fem::Vector a = std::cos(angle) * set[1].vector + std::sin(angle) * set[2].vector;
    fem::Vector b = -std::sin(angle) * set[1].vector + std::cos(angle) * set[2].vector;
    auto x1 = est::compute_mu(d.cr, d.p1, set[1].vector), x2 = est::compute_mu(d.cr, d.p1, set[2].vector);
    auto y1 = est::compute_mu(d.cr, d.p1, a), y2 = est::compute_mu(d.cr, d.p1, b);
    double scale = 0;
    for (std::size_t t = 0; t < x1.size(); ++t) scale = std::max(scale, x1[t] + x2[t]);
    for (std::size_t t = 0; t < x1.size(); ++t)
      if (std::abs(x1[t] + x2[t] - y1[t] - y2[t]) > 1e-8 * scale) {
        why = fmt("angle %.1f element %zu", angle, t);
        return false;
      }
  }
  return true;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool deterministic_runs(std::string& why) {
  fs::path base = fs::temp_directory_path() / "cradapt_acceptance";
  fs::remove_all(base);
  std::ostringstream log;
  for (const char* sub : {"a", "b"}) {
    bench::RunConfig cfg;
    cfg.mode = bench::Mode::Adapt;
    cfg.domain = bench::parse_domain("square_ring");
    cfg.adapt.nev = 6;
    cfg.adapt.target_multiplicity = 2;
    cfg.adapt.max_dof = 3000;
    cfg.out_dir = (base / sub).string();
    if (bench::run(cfg, log) != 0) {
      why = "run failed";
      return false;
    }
  }
  for (const auto& e : fs::directory_iterator(base / "a")) {
    auto name = e.path().filename().string();
    if (name == "manifest.txt") continue;
    if (name.ends_with(".csv") && slurp(e.path()) != slurp(base / "b" / name)) {
      why = name + " differs";
      return false;
    }
  }
  return true;
}

void criterion10() {
  std::string why, fails;
  auto sweep = [&](const char* name, bool (*f)(std::string&)) {
    why.clear();
    if (!f(why)) fails += std::string(fails.empty() ? "" : "; ") + name + ": " + why;
  };
  sweep("gap axioms", gap_axioms);
  sweep("doerfler minimality", dorfler_minimal);
  sweep("mesh invariants", mesh_invariants);
  sweep("rotation invariance", rotation_invariance);
  sweep("determinism", deterministic_runs);
  report(10, fails.empty(), fails.empty() ? "gap axioms, doerfler, mesh, rotation, determinism" : fails);
}

} // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  auto res = adapt::adaptive_loop(mesh::make_square_ring(), ring_config());
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  criterion1(res, secs);
  criterion2(res);
  criterion3();
  criterion4(res);
  criterion5(res);
  criterion6(res);
  criterion7();
  criterion8();
  criterion9(res);
  criterion10();

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
