#include "cradapt/mesh.hpp"

#include "cradapt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace cradapt::mesh {

namespace {

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double dist(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

Point midpoint(const Point& a, const Point& b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

int longest_local_edge(const std::array<Point, 3>& p) {
  int best = 0;
  double best_len = -1.0;
  for (int i = 0; i < 3; ++i) {
    double len = dist(p[(i + 1) % 3], p[(i + 2) % 3]);
    // strict comparison keeps the lowest index among equal lengths
    if (len > best_len * (1.0 + 1e-12)) {
      best_len = len;
      best = i;
    }
  }
  return best;
}

} // namespace

TriMesh::TriMesh(std::vector<Point> points, std::vector<TriangleSpec> triangles, std::string domain_tag)
    : tag_(std::move(domain_tag)) {
  const auto nv = static_cast<Index>(points.size());
  vertices_.reserve(points.size());
  for (Index i = 0; i < nv; ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y))
      throw GeometryError("vertex " + std::to_string(i) + " has non-finite coordinates");
    vertices_.push_back({i, points[i], false});
  }

  triangles_.reserve(triangles.size());
  tri_edges_.resize(triangles.size());
  std::unordered_map<std::uint64_t, Index> edge_of;
  edge_of.reserve(triangles.size() * 2);

  for (std::size_t ti = 0; ti < triangles.size(); ++ti) {
    const auto t = static_cast<Index>(ti);
    const TriangleSpec& spec = triangles[ti];
    for (Index v : spec.v)
      if (v < 0 || v >= nv)
        throw GeometryError("triangle " + std::to_string(t) + " references vertex " + std::to_string(v) +
                            " out of range");
    if (spec.v[0] == spec.v[1] || spec.v[1] == spec.v[2] || spec.v[0] == spec.v[2])
      throw GeometryError("triangle " + std::to_string(t) + " repeats a vertex");

    std::array<Point, 3> p{points[spec.v[0]], points[spec.v[1]], points[spec.v[2]]};
    if (!(signed_area(p[0], p[1], p[2]) > 0.0))
      throw GeometryError("triangle " + std::to_string(t) + " is not counterclockwise or is degenerate");

    int ref = spec.refinement_edge;
    if (ref < 0) ref = longest_local_edge(p);
    if (ref > 2) throw GeometryError("triangle " + std::to_string(t) + " has invalid refinement edge");
    triangles_.push_back({t, spec.v, ref, spec.generation, spec.parent});

    for (int i = 0; i < 3; ++i) {
      Index a = spec.v[(i + 1) % 3];
      Index b = spec.v[(i + 2) % 3];
      auto [it, inserted] = edge_of.try_emplace(edge_key(a, b), static_cast<Index>(edges_.size()));
      if (inserted) {
        Edge e;
        e.id = it->second;
        e.v = {std::min(a, b), std::max(a, b)};
        e.tri = {t, kNone};
        edges_.push_back(e);
      } else {
        Edge& e = edges_[it->second];
        if (e.tri[1] != kNone)
          throw GeometryError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") is shared by more than two triangles");
        e.tri[1] = t;
      }
      tri_edges_[ti][i] = it->second;
    }
  }

  for (Edge& e : edges_) {
    e.on_boundary = e.tri[1] == kNone;
    if (e.on_boundary) {
      ++n_boundary_edges_;
      vertices_[e.v[0]].on_boundary = true;
      vertices_[e.v[1]].on_boundary = true;
    }
  }

  // vertex -> triangle incidence, CSR with ascending triangle ids
  patch_offsets_.assign(vertices_.size() + 1, 0);
  for (const Triangle& t : triangles_)
    for (Index v : t.v) ++patch_offsets_[v + 1];
  for (std::size_t i = 0; i < vertices_.size(); ++i) patch_offsets_[i + 1] += patch_offsets_[i];
  patch_triangles_.resize(patch_offsets_.back());
  std::vector<Index> fill(patch_offsets_.begin(), patch_offsets_.end() - 1);
  for (const Triangle& t : triangles_)
    for (Index v : t.v) patch_triangles_[fill[v]++] = t.id;
}

std::array<Point, 3> TriMesh::corners(Index t) const {
  const auto& v = triangles_[t].v;
  return {vertices_[v[0]].p, vertices_[v[1]].p, vertices_[v[2]].p};
}

double TriMesh::area(Index t) const {
  auto p = corners(t);
  return signed_area(p[0], p[1], p[2]);
}

double TriMesh::diameter(Index t) const {
  auto p = corners(t);
  return std::max({dist(p[0], p[1]), dist(p[1], p[2]), dist(p[2], p[0])});
}

double TriMesh::min_angle(Index t) const {
  auto p = corners(t);
  double best = std::numbers::pi;
  for (int i = 0; i < 3; ++i) {
    const Point& a = p[i];
    const Point& b = p[(i + 1) % 3];
    const Point& c = p[(i + 2) % 3];
    double ux = b.x - a.x, uy = b.y - a.y, wx = c.x - a.x, wy = c.y - a.y;
    double ang = std::atan2(std::abs(ux * wy - uy * wx), ux * wx + uy * wy);
    best = std::min(best, ang);
  }
  return best;
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (const Triangle& t : triangles_) s += area(t.id);
  return s;
}

double TriMesh::min_angle() const {
  double best = std::numbers::pi;
  for (const Triangle& t : triangles_) best = std::min(best, min_angle(t.id));
  return best;
}

std::span<const Index> TriMesh::vertex_patch(Index v) const {
  return {patch_triangles_.data() + patch_offsets_[v],
          static_cast<std::size_t>(patch_offsets_[v + 1] - patch_offsets_[v])};
}

int TriMesh::holes() const {
  auto euler = static_cast<long>(vertices_.size()) - static_cast<long>(edges_.size()) +
               static_cast<long>(triangles_.size());
  return static_cast<int>(1 - euler);
}

TriMesh make_unit_square(int n) {
  if (n < 1) throw std::invalid_argument("make_unit_square: n must be >= 1");
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) pts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  auto id = [n](int i, int j) { return static_cast<Index>(j * (n + 1) + i); };
  std::vector<TriangleSpec> tris;
  tris.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      // diagonal (i+1,j)-(i,j+1) is the hypotenuse and refinement edge of both halves
      tris.push_back({{id(i, j), id(i + 1, j), id(i, j + 1)}, 0});
      tris.push_back({{id(i + 1, j + 1), id(i, j + 1), id(i + 1, j)}, 0});
    }
  return TriMesh(std::move(pts), std::move(tris), "unit_square");
}

TriMesh make_square_ring(int per_third) {
  if (per_third < 1) throw std::invalid_argument("make_square_ring: per_third must be >= 1");
  const int n = 3 * per_third;
  auto in_hole = [per_third](int i, int j) {
    return i >= per_third && i < 2 * per_third && j >= per_third && j < 2 * per_third;
  };
  // keep only grid points touched by a retained cell
  std::vector<Index> id(static_cast<std::size_t>((n + 1) * (n + 1)), kNone);
  std::vector<Point> pts;
  auto vid = [&](int i, int j) {
    Index& slot = id[static_cast<std::size_t>(j * (n + 1) + i)];
    if (slot == kNone) {
      slot = static_cast<Index>(pts.size());
      pts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
    return slot;
  };
  std::vector<TriangleSpec> tris;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (in_hole(i, j)) continue;
      Index a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      // sign of (cx-1/2)(cy-1/2), with cell centers at (2i+1)/(2n)
      long sx = 2 * i + 1 - n, sy = 2 * j + 1 - n;
      if (sx * sy >= 0) {
        // diagonal a-c
        tris.push_back({{a, b, c}, 1});
        tris.push_back({{a, c, d}, 2});
      } else {
        // diagonal b-d
        tris.push_back({{a, b, d}, 0});
        tris.push_back({{c, d, b}, 0});
      }
    }
  return TriMesh(std::move(pts), std::move(tris), "square_ring");
}

TriMesh refine(const TriMesh& mesh, std::span<const Index> marked) {
  const auto& tris = mesh.triangles();
  const auto& edges = mesh.edges();
  const auto nt = static_cast<Index>(tris.size());

  std::vector<Point> pts;
  pts.reserve(mesh.num_vertices());
  for (const Vertex& v : mesh.vertices()) pts.push_back(v.p);

  if (marked.empty()) {
    std::vector<TriangleSpec> same;
    same.reserve(tris.size());
    for (const Triangle& t : tris) same.push_back({t.v, t.refinement_edge, t.generation, t.parent});
    return TriMesh(std::move(pts), std::move(same), mesh.domain_tag());
  }

  std::vector<char> edge_marked(edges.size(), 0);
  std::vector<Index> work;
  auto mark_edge = [&](Index e) {
    if (!edge_marked[e]) {
      edge_marked[e] = 1;
      work.push_back(e);
    }
  };
  for (Index t : marked) {
    if (t < 0 || t >= nt) throw std::out_of_range("refine: triangle id " + std::to_string(t) + " out of range");
    mark_edge(mesh.triangle_edges(t)[tris[t].refinement_edge]);
  }
  // closure: any triangle with a marked side must also bisect its refinement edge
  while (!work.empty()) {
    Index e = work.back();
    work.pop_back();
    for (Index t : edges[e].tri) {
      if (t == kNone) continue;
      mark_edge(mesh.triangle_edges(t)[tris[t].refinement_edge]);
    }
  }

  std::unordered_map<std::uint64_t, Index> mid;
  for (const Edge& e : edges) {
    if (!edge_marked[e.id]) continue;
    mid.emplace(edge_key(e.v[0], e.v[1]), static_cast<Index>(pts.size()));
    pts.push_back(midpoint(pts[e.v[0]], pts[e.v[1]]));
  }

  std::vector<TriangleSpec> out;
  out.reserve(tris.size() + 2 * mid.size());

  struct Pending {
    std::array<Index, 3> v;
    int ref;
    int gen;
  };
  std::vector<Pending> stack;
  for (const Triangle& t : tris) {
    if (!edge_marked[mesh.triangle_edges(t.id)[t.refinement_edge]]) {
      out.push_back({t.v, t.refinement_edge, t.generation, t.id});
      continue;
    }
    stack.push_back({t.v, t.refinement_edge, t.generation});
    while (!stack.empty()) {
      Pending p = stack.back();
      stack.pop_back();
      Index a = p.v[p.ref], b = p.v[(p.ref + 1) % 3], c = p.v[(p.ref + 2) % 3];
      auto it = mid.find(edge_key(b, c));
      if (it == mid.end()) {
        out.push_back({p.v, p.ref, p.gen, t.id});
        continue;
      }
      Index m = it->second;
      // push in reverse so (a,b,m) is emitted first
      stack.push_back({{a, m, c}, 1, p.gen + 1});
      stack.push_back({{a, b, m}, 2, p.gen + 1});
    }
  }
  return TriMesh(std::move(pts), std::move(out), mesh.domain_tag());
}

TriMesh refine_uniform(const TriMesh& mesh, int sweeps) {
  TriMesh current = mesh;
  for (int s = 0; s < sweeps; ++s) {
    std::vector<Index> all(current.num_triangles());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
    TriMesh next = refine(current, all);
    // parent must point into the input mesh, not an intermediate sweep
    if (s > 0) {
      std::vector<Point> pts;
      for (const Vertex& v : next.vertices()) pts.push_back(v.p);
      std::vector<TriangleSpec> specs;
      for (const Triangle& t : next.triangles())
        specs.push_back({t.v, t.refinement_edge, t.generation, current.triangles()[t.parent].parent});
      next = TriMesh(std::move(pts), std::move(specs), next.domain_tag());
    }
    current = std::move(next);
  }
  return current;
}

double diameter(const TriMesh& mesh, Index t) { return mesh.diameter(t); }

std::vector<Index> vertex_patch(const TriMesh& mesh, Index v) {
  auto s = mesh.vertex_patch(v);
  return {s.begin(), s.end()};
}

TriMesh read_mesh(std::istream& in, std::string domain_tag) {
  std::vector<Point> pts;
  std::vector<TriangleSpec> tris;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Point p;
      if (!(ls >> p.x >> p.y)) throw GeometryError("mesh line " + std::to_string(lineno) + ": malformed vertex");
      pts.push_back(p);
    } else if (tag == "t") {
      TriangleSpec t;
      if (!(ls >> t.v[0] >> t.v[1] >> t.v[2]))
        throw GeometryError("mesh line " + std::to_string(lineno) + ": malformed triangle");
      tris.push_back(t);
    } else {
      throw GeometryError("mesh line " + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
    std::string extra;
    if (ls >> extra) throw GeometryError("mesh line " + std::to_string(lineno) + ": trailing data");
  }
  if (tris.empty()) throw GeometryError("mesh has no triangles");
  return TriMesh(std::move(pts), std::move(tris), std::move(domain_tag));
}

TriMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GeometryError("cannot open mesh file " + path);
  return read_mesh(in, "file:" + path);
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << "# " << mesh.domain_tag() << " vertices=" << mesh.num_vertices()
      << " triangles=" << mesh.num_triangles() << "\n";
  out << std::setprecision(17);
  for (const Vertex& v : mesh.vertices()) out << "v " << v.p.x << ' ' << v.p.y << '\n';
  for (const Triangle& t : mesh.triangles()) out << "t " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << '\n';
}

std::vector<std::string> audit(const TriMesh& mesh) {
  std::vector<std::string> issues;
  for (const Triangle& t : mesh.triangles())
    if (!(mesh.area(t.id) > 0.0)) issues.push_back("triangle " + std::to_string(t.id) + " has non-positive area");
  std::vector<int> incidence(mesh.num_edges(), 0);
  for (const Triangle& t : mesh.triangles())
    for (Index e : mesh.triangle_edges(t.id)) ++incidence[e];
  std::vector<char> touches_boundary(mesh.num_vertices(), 0);
  for (const Edge& e : mesh.edges()) {
    int expected = e.on_boundary ? 1 : 2;
    if (incidence[e.id] != expected)
      issues.push_back("edge " + std::to_string(e.id) + " has " + std::to_string(incidence[e.id]) +
                       " incident triangles");
    if (e.on_boundary) touches_boundary[e.v[0]] = touches_boundary[e.v[1]] = 1;
  }
  for (const Vertex& v : mesh.vertices()) {
    if (static_cast<bool>(touches_boundary[v.id]) != v.on_boundary)
      issues.push_back("vertex " + std::to_string(v.id) + " boundary flag inconsistent");
    if (mesh.vertex_patch(v.id).empty()) issues.push_back("vertex " + std::to_string(v.id) + " is isolated");
  }
  // a vertex lying in the interior of another triangle's side is a hanging node
  for (const Edge& e : mesh.edges()) {
    if (!e.on_boundary) continue;
    const Point& a = mesh.vertices()[e.v[0]].p;
    const Point& b = mesh.vertices()[e.v[1]].p;
    Point m = midpoint(a, b);
    for (Index t : mesh.vertex_patch(e.v[0])) {
      for (Index w : mesh.triangles()[t].v) {
        const Point& q = mesh.vertices()[w].p;
        if (w != e.v[0] && w != e.v[1] && std::abs(q.x - m.x) < 1e-14 && std::abs(q.y - m.y) < 1e-14)
          issues.push_back("hanging node " + std::to_string(w) + " on edge " + std::to_string(e.id));
      }
    }
  }
  return issues;
}

} // namespace cradapt::mesh
