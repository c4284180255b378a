#include "helpers.hpp"

#include "cradapt/adapt.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace testing;
using cradapt::mesh::Index;

TEST_SUITE("adapt") {

TEST_CASE("cluster detection") {
  std::vector<double> v{19.7, 49.30, 49.35};
  auto c = adapt::detect_clusters(v, 0.01);
  REQUIRE(c.size() == 2);
  CHECK(c[0].members == std::vector<int>{0});
  CHECK(c[1].members == std::vector<int>{1, 2});
  CHECK(c[1].values == std::vector<double>{49.30, 49.35});
  CHECK(c[1].rtol == 0.01);

  std::vector<double> distinct{1.0, 2.0, 3.0, 3.5};
  auto s = adapt::detect_clusters(distinct, 0.0);
  CHECK(s.size() == 4);

  auto d = discretize(mesh::make_unit_square(16));
  auto set = cr_spectrum(*d, 3);
  auto u = adapt::detect_clusters(set.values(), 0.02);
  REQUIRE(u.size() == 2);
  CHECK(u[1].members == std::vector<int>{1, 2});
}

TEST_CASE("cluster invariants") {
  std::vector<double> v{10.0, 10.05, 10.1, 12.0, 20.0, 20.1};
  const double rtol = 0.006;
  auto cl = adapt::detect_clusters(v, rtol);
  std::size_t seen = 0;
  for (const auto& c : cl) {
    for (std::size_t i = 1; i < c.members.size(); ++i) {
      CHECK(c.members[i] == c.members[i - 1] + 1);
      CHECK((c.values[i] - c.values[i - 1]) / c.values[i - 1] <= rtol);
    }
    seen += c.members.size();
    if (c.members.back() + 1 < static_cast<int>(v.size())) {
      double next = v[static_cast<std::size_t>(c.members.back() + 1)];
      CHECK((next - c.values.back()) / c.values.back() > rtol);
    }
  }
  CHECK(seen == v.size());
}

TEST_CASE("doerfler marking examples") {
  std::vector<double> ind{16, 9, 4, 1};
  CHECK(adapt::dorfler_mark(ind, 0.5) == std::vector<Index>{0});
  CHECK(adapt::dorfler_mark(ind, 0.6) == std::vector<Index>{0, 1});

  std::vector<double> distinct{0.5, 3.0, 1.0, 2.0, 0.25};
  CHECK(adapt::dorfler_mark(distinct, 1.0 - 1e-12).size() == distinct.size());

  std::vector<double> uniform(7, 1.0);
  CHECK(adapt::dorfler_mark(uniform, 0.5) == std::vector<Index>{0, 1, 2, 3});

  std::vector<double> zeros(5, 0.0);
  CHECK(adapt::dorfler_mark(zeros, 0.5).empty());

  CHECK_THROWS_AS(adapt::dorfler_mark(ind, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(adapt::dorfler_mark(ind, 1.0), std::invalid_argument);
  std::vector<double> negative{1.0, -1.0};
  CHECK_THROWS_AS(adapt::dorfler_mark(negative, 0.5), std::invalid_argument);
}

TEST_CASE("cluster indicator") {
  est::IndicatorField a, b;
  a.mu2 = {4, 0, 0};
  a.eta2 = {1, 0, 0};
  b.mu2 = {0, 0, 9};
  b.eta2 = {0, 0, 0.5};
  std::vector<est::IndicatorField> one{a}, two{a, b};
  CHECK(adapt::cluster_indicator(one) == a.combined());
  CHECK(adapt::cluster_indicator(two) == std::vector<double>{5, 0, 9.5});
  CHECK(adapt::cluster_indicator(two, false) == std::vector<double>{4, 0, 9});
  CHECK(adapt::dorfler_mark(adapt::cluster_indicator(two), 0.9) == std::vector<Index>{0, 2});
  est::IndicatorField c;
  c.mu2 = {1, 1};
  c.eta2 = {0, 0};
  std::vector<est::IndicatorField> bad{a, c};
  CHECK_THROWS_AS(adapt::cluster_indicator(bad), std::invalid_argument);
}

TEST_CASE("config validation") {
  adapt::AdaptConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.theta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.theta = 0.5;
  cfg.target_index = 4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.target_index = 2;
  cfg.target_multiplicity = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.target_multiplicity = 2;
  cfg.marking = adapt::MarkingMode::Single;
  cfg.single_index = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("target cluster") {
  adapt::AdaptConfig cfg;
  cfg.nev = 5;
  std::vector<double> v{77.0, 84.0, 84.2, 98.0, 119.0};
  CHECK(adapt::target_cluster(v, cfg) == std::vector<int>{1, 2});
  cfg.target_multiplicity = 1;
  CHECK(adapt::target_cluster(v, cfg) == std::vector<int>{1});
  cfg.target_multiplicity = 0;
  cfg.target_index = 4;
  CHECK(adapt::target_cluster(v, cfg) == std::vector<int>{3});
}

TEST_CASE("loop stops immediately below the budget") {
  adapt::AdaptConfig cfg;
  cfg.max_dof = 10;
  auto res = adapt::adaptive_loop(mesh::make_square_ring(), cfg);
  CHECK(res.ok());
  REQUIRE(res.records.size() == 1);
  CHECK(res.records[0].marked == 0);
  CHECK(res.final_mesh->num_triangles() == mesh::make_square_ring().num_triangles());
}

TEST_CASE("loop records") {
  adapt::AdaptConfig cfg;
  cfg.nev = 4;
  cfg.max_dof = 1500;
  std::vector<std::size_t> marked_sizes;
  auto res = adapt::adaptive_loop(mesh::make_square_ring(), cfg, [&](const adapt::IterationState& st) {
    marked_sizes.push_back(st.marked.size());
    CHECK(st.record.iteration == st.iteration);
    CHECK(st.fields.size() >= st.record.cluster.size());
  });
  REQUIRE(res.ok());
  REQUIRE(res.records.size() >= 3);
  CHECK(marked_sizes.size() == res.records.size());
  for (std::size_t i = 1; i < res.records.size(); ++i) CHECK(res.records[i].ndof > res.records[i - 1].ndof);
  CHECK(res.records.back().ndof >= cfg.max_dof);
  CHECK(res.records.back().marked == 0);
  for (const auto& r : res.records) {
    CHECK(r.eigenvalues.size() == 4);
    CHECK(r.conforming_eigenvalues.size() == 4);
    CHECK(r.cluster == std::vector<int>{1, 2});
    CHECK(r.mu2_cluster == doctest::Approx(r.member_mu2[0] + r.member_mu2[1]).epsilon(1e-15));
    for (std::size_t c = 0; c < r.cluster.size(); ++c) CHECK(r.member_gap_vc[c] <= r.member_gap_bound[c] * (1 + 1e-12));
    if (r.iteration > 0) {
      CHECK(r.swap_gaps.rows() == 4);
      CHECK(r.swap_gaps.minCoeff() >= 0.0);
      CHECK(r.swap_gaps.maxCoeff() <= 1.0 + 1e-12);
    }
  }
  std::ostringstream os;
  adapt::write_records_csv(os, res.records, 4);
  std::string header = os.str().substr(0, os.str().find('\n'));
  CHECK(header == "iter,ndof,lambda_1,lambda_2,lambda_3,lambda_4,mu2_cluster,eta2_cluster,marked,gap_vc,seconds");
}

TEST_CASE("solver failure returns partial records with an error tag") {
  adapt::AdaptConfig cfg;
  cfg.nev = 3;
  cfg.max_dof = 100000;
  cfg.solver.max_iterations = 2;
  cfg.solver.tol = 1e-14;
  auto res = adapt::adaptive_loop(mesh::make_square_ring(4), cfg);
  CHECK_FALSE(res.ok());
  CHECK(res.error.find("iteration") != std::string::npos);
}

TEST_CASE("transfer is exact for conforming functions") {
  auto coarse = discretize(mesh::make_square_ring(2));
  std::vector<Index> marked{0, 5, 9, 30};
  auto fine = discretize(mesh::refine(*coarse->mesh, marked));
  std::mt19937_64 rng(17);
  fem::Vector w = random_vector(coarse->p1.ndof(), rng);
  fem::Vector moved = adapt::transfer_cr(coarse->cr, coarse->embed * w, fine->cr);
  // the same piecewise linear function, interpolated on the fine mesh
  fem::Vector wf(fine->p1.ndof());
  for (Index dof = 0; dof < fine->p1.ndof(); ++dof) {
    auto p = fine->mesh->vertices()[static_cast<std::size_t>(fine->p1.dof_vertex(dof))].p;
    // locate in the coarse mesh through any fine triangle touching the vertex
    Index ft = fine->mesh->vertex_patch(fine->p1.dof_vertex(dof))[0];
    Index parent = fine->mesh->triangles()[static_cast<std::size_t>(ft)].parent;
    auto c = coarse->mesh->corners(parent);
    double det = (c[1].x - c[0].x) * (c[2].y - c[0].y) - (c[2].x - c[0].x) * (c[1].y - c[0].y);
    double l1 = ((p.x - c[0].x) * (c[2].y - c[0].y) - (c[2].x - c[0].x) * (p.y - c[0].y)) / det;
    double l2 = ((c[1].x - c[0].x) * (p.y - c[0].y) - (p.x - c[0].x) * (c[1].y - c[0].y)) / det;
    auto vals = fem::cr_vertex_values(coarse->cr, coarse->embed * w, parent);
    wf[dof] = (1 - l1 - l2) * vals[0] + l1 * vals[1] + l2 * vals[2];
  }
  CHECK((moved - fine->embed * wf).cwiseAbs().maxCoeff() <= 1e-12);
}

} // TEST_SUITE
