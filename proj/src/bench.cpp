#include "cradapt/bench.hpp"

#include "cradapt/errors.hpp"
#include "cradapt/estimators.hpp"
#include "cradapt/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace cradapt::bench {

namespace fs = std::filesystem;

const char* to_string(Mode m) {
  switch (m) {
  case Mode::Solve: return "solve";
  case Mode::Adapt: return "adapt";
  case Mode::Audit: return "audit";
  case Mode::Reference: return "reference";
  case Mode::MeshInfo: return "mesh-info";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::Solve, Mode::Adapt, Mode::Audit, Mode::Reference, Mode::MeshInfo})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown mode '" + s + "'", 0, "mode");
}

std::string DomainSpec::to_string() const {
  switch (kind) {
  case Kind::UnitSquare: return "unit_square:" + std::to_string(n);
  case Kind::SquareRing: return "square_ring:" + std::to_string(n);
  case Kind::File: return "file:" + path;
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& value, const std::string& key, int line) {
  std::istringstream is(value);
  T out{};
  if (!(is >> out) || !(is >> std::ws).eof())
    throw ConfigError("invalid value '" + value + "' for key '" + key + "'", line, key);
  return out;
}

bool parse_bool(const std::string& value, const std::string& key, int line) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean '" + value + "' for key '" + key + "'", line, key);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

} // namespace

DomainSpec parse_domain(const std::string& s) {
  DomainSpec d;
  auto colon = s.find(':');
  std::string head = s.substr(0, colon);
  std::string tail = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "unit_square") {
    d.kind = DomainSpec::Kind::UnitSquare;
    d.n = tail.empty() ? 8 : parse_number<int>(tail, "domain", 0);
  } else if (head == "square_ring") {
    d.kind = DomainSpec::Kind::SquareRing;
    d.n = tail.empty() ? 2 : parse_number<int>(tail, "domain", 0);
  } else if (head == "file") {
    d.kind = DomainSpec::Kind::File;
    d.path = tail;
    if (d.path.empty()) throw ConfigError("file domain needs a path", 0, "domain");
    return d;
  } else {
    throw ConfigError("unknown domain '" + s + "'", 0, "domain");
  }
  if (d.n < 1) throw ConfigError("domain resolution must be >= 1", 0, "domain");
  return d;
}

mesh::TriMesh make_domain(const DomainSpec& d) {
  switch (d.kind) {
  case DomainSpec::Kind::UnitSquare: return mesh::make_unit_square(d.n);
  case DomainSpec::Kind::SquareRing: return mesh::make_square_ring(d.n);
  case DomainSpec::Kind::File: return mesh::load_mesh(d.path);
  }
  throw ConfigError("unknown domain kind");
}

mesh::TriMesh uniform_level(const DomainSpec& d, int level) {
  switch (d.kind) {
  case DomainSpec::Kind::UnitSquare: return mesh::make_unit_square(d.n << level);
  case DomainSpec::Kind::SquareRing: return mesh::make_square_ring(d.n << level);
  case DomainSpec::Kind::File: return mesh::refine_uniform(mesh::load_mesh(d.path), 2 * level);
  }
  throw ConfigError("unknown domain kind");
}

void parse_marking(adapt::AdaptConfig& cfg, const std::string& value) {
  if (value == "cluster" || value == "cluster_sum") {
    cfg.marking = adapt::MarkingMode::ClusterSum;
  } else if (value.rfind("single:", 0) == 0) {
    cfg.marking = adapt::MarkingMode::Single;
    cfg.single_index = parse_number<int>(value.substr(7), "marking", 0);
  } else {
    throw ConfigError("invalid marking '" + value + "' (expected single:<k> or cluster)", 0, "marking");
  }
}

void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value,
                   int line) {
  const std::string full = section + "." + key;
  auto wrap = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line, full);
    }
  };
  if (full == "run.mode") wrap([&] { cfg.mode = parse_mode(value); });
  else if (full == "run.domain") wrap([&] { cfg.domain = parse_domain(value); });
  else if (full == "run.nev") cfg.adapt.nev = parse_number<int>(value, full, line);
  else if (full == "run.seed") cfg.adapt.solver.seed = parse_number<std::uint64_t>(value, full, line);
  else if (full == "run.out") cfg.out_dir = value;
  else if (full == "run.reference") cfg.reference = parse_number<double>(value, full, line);
  else if (full == "run.weights") {
    if (value == "uniform") cfg.adapt.weights = fem::WeightRule::Uniform;
    else if (value == "area") cfg.adapt.weights = fem::WeightRule::Area;
    else throw ConfigError("invalid weights '" + value + "'", line, full);
  } else if (full == "solver.tol") cfg.adapt.solver.tol = parse_number<double>(value, full, line);
  else if (full == "solver.max_iter") cfg.adapt.solver.max_iterations = parse_number<int>(value, full, line);
  else if (full == "solver.guard") cfg.adapt.solver.guard_vectors = parse_number<int>(value, full, line);
  else if (full == "adapt.theta") cfg.adapt.theta = parse_number<double>(value, full, line);
  else if (full == "adapt.marking") wrap([&] { parse_marking(cfg.adapt, value); });
  else if (full == "adapt.max_dof") cfg.adapt.max_dof = parse_number<std::size_t>(value, full, line);
  else if (full == "adapt.target") {
    auto colon = value.find(':');
    cfg.adapt.target_index = parse_number<int>(value.substr(0, colon), full, line);
    cfg.adapt.target_multiplicity =
        colon == std::string::npos ? 0 : parse_number<int>(value.substr(colon + 1), full, line);
  } else if (full == "adapt.cluster_rtol") cfg.adapt.cluster_rtol = parse_number<double>(value, full, line);
  else if (full == "adapt.indicator") {
    if (value == "mu_eta") cfg.adapt.with_eta = true;
    else if (value == "mu") cfg.adapt.with_eta = false;
    else throw ConfigError("invalid indicator '" + value + "' (mu_eta or mu)", line, full);
  } else if (full == "adapt.timing") cfg.adapt.timing = parse_bool(value, full, line);
  else if (full == "reference.levels") cfg.reference_levels = parse_number<int>(value, full, line);
  else if (full == "audit.sweep") {
    if (value != "adaptive" && value != "uniform")
      throw ConfigError("invalid audit sweep '" + value + "'", line, full);
    cfg.audit_sweep = value;
  } else if (full == "audit.levels") cfg.audit_levels = parse_number<int>(value, full, line);
  else throw ConfigError("unknown key '" + full + "'", line, full);
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string section = "run";
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section != "run" && section != "solver" && section != "adapt" && section != "reference" &&
          section != "audit")
        throw ConfigError("unknown section '" + section + "'", line, section);
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", line);
    apply_setting(base, section, key, value, line);
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  const auto& a = adapt;
  std::string marking =
      a.marking == adapt::MarkingMode::ClusterSum ? "cluster" : "single:" + std::to_string(a.single_index);
  return {
      {"run.mode", to_string(mode)},
      {"run.domain", domain.to_string()},
      {"run.nev", std::to_string(a.nev)},
      {"run.seed", std::to_string(a.solver.seed)},
      {"run.out", out_dir},
      {"run.reference", reference ? fmt(*reference) : "default"},
      {"run.weights", a.weights == fem::WeightRule::Uniform ? "uniform" : "area"},
      {"solver.tol", fmt(a.solver.tol)},
      {"solver.max_iter", std::to_string(a.solver.max_iterations)},
      {"solver.guard", std::to_string(a.solver.guard_vectors)},
      {"adapt.theta", fmt(a.theta)},
      {"adapt.marking", marking},
      {"adapt.max_dof", std::to_string(a.max_dof)},
      {"adapt.target", std::to_string(a.target_index) + ":" + std::to_string(a.target_multiplicity)},
      {"adapt.cluster_rtol", fmt(a.cluster_rtol)},
      {"adapt.indicator", a.with_eta ? "mu_eta" : "mu"},
      {"adapt.timing", a.timing ? "true" : "false"},
      {"reference.levels", std::to_string(reference_levels)},
      {"audit.sweep", audit_sweep},
      {"audit.levels", std::to_string(audit_levels)},
  };
}

ReferenceEstimate aitken_extrapolate(std::span<const double> values) {
  if (values.size() < 3) throw std::invalid_argument("aitken_extrapolate: need at least three values");
  auto triple = [](double a0, double a1, double a2, bool& converged) {
    double d1 = a1 - a0, d2 = a2 - a1, dd = d2 - d1;
    converged = dd == 0.0;
    if (converged) return a2;
    return a2 - d2 * d2 / dd;
  };
  const std::size_t n = values.size();
  ReferenceEstimate est;
  est.inputs.assign(values.begin(), values.end());
  double a0 = values[n - 3], a1 = values[n - 2], a2 = values[n - 1];
  double dd = (a2 - a1) - (a1 - a0);
  if (dd == 0.0) {
    est.value = a2;
    est.residual = 0.0;
    est.converged = true;
    return est;
  }
  bool up = a1 > a0 && a2 > a1, down = a1 < a0 && a2 < a1;
  if (!up && !down) throw std::invalid_argument("aitken_extrapolate: last three values are not strictly monotone");
  bool conv = false;
  est.value = triple(a0, a1, a2, conv);
  if (n >= 4) {
    bool prev_conv = false;
    double prev = triple(values[n - 4], values[n - 3], values[n - 2], prev_conv);
    est.residual = std::abs(est.value - prev);
  } else {
    est.residual = std::abs(est.value - a2);
  }
  return est;
}

std::vector<double> unit_square_spectrum(int count) {
  std::vector<double> out;
  int bound = 1;
  // enough (m,n) pairs: every value below the count-th smallest has m,n <= bound
  while (bound * bound < 2 * count + 4) ++bound;
  bound += 2;
  for (int m = 1; m <= bound; ++m)
    for (int n = 1; n <= bound; ++n) out.push_back(std::numbers::pi * std::numbers::pi * (m * m + n * n));
  std::sort(out.begin(), out.end());
  out.resize(static_cast<std::size_t>(count));
  return out;
}

std::optional<double> default_reference(const RunConfig& cfg) {
  if (cfg.reference) return cfg.reference;
  const int k = cfg.adapt.target_index;
  if (cfg.domain.kind == DomainSpec::Kind::UnitSquare) return unit_square_spectrum(k)[static_cast<std::size_t>(k - 1)];
  if (cfg.domain.kind == DomainSpec::Kind::SquareRing && (k == 2 || k == 3)) return kSquareRingReference;
  return std::nullopt;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

namespace {

/// Opens files under the output directory and remembers them for the manifest.
class OutputDir {
public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    std::ofstream out(path(name));
    if (!out) throw std::runtime_error("cannot write " + path(name));
    files_.push_back(name);
    return out;
  }
  void adopt(const std::vector<std::string>& names) { files_.insert(files_.end(), names.begin(), names.end()); }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  void write_manifest(const RunConfig& cfg) {
    std::ofstream m(path("manifest.txt"));
    m << "# cradapt run manifest\n";
    for (const auto& [k, v] : cfg.entries()) m << k << " = " << v << '\n';
    for (const auto& f : files_)
      m << "file " << f << ' ' << std::hex << std::setw(16) << std::setfill('0') << file_hash(path(f)) << std::dec
        << std::setfill(' ') << '\n';
  }

private:
  std::string dir_;
  std::vector<std::string> files_;
};

std::string numbered(const std::string& stem, int iter, const std::string& ext) {
  std::ostringstream os;
  os << stem << '_' << std::setw(3) << std::setfill('0') << iter << ext;
  return os.str();
}

struct MeshSolve {
  std::shared_ptr<fem::Discretization> disc;
  eig::SpectralSet cr;
  eig::SpectralSet conforming;
};

MeshSolve solve_on(const mesh::TriMesh& m, const adapt::AdaptConfig& cfg) {
  MeshSolve s;
  s.disc = std::make_shared<fem::Discretization>(std::make_shared<const mesh::TriMesh>(m));
  if (s.disc->cr.ndof() < cfg.nev)
    throw NumericalError("mesh has only " + std::to_string(s.disc->cr.ndof()) + " CR degrees of freedom");
  eig::SolverOptions opt = cfg.solver;
  opt.space = fem::SpaceKind::CR;
  s.cr = eig::fix_signs(eig::smallest_eigenpairs(s.disc->cr_stiffness, s.disc->cr_mass, cfg.nev, opt));
  int nconf = std::min<int>(cfg.nev, s.disc->p1.ndof());
  if (nconf > 0) {
    opt.space = fem::SpaceKind::P1;
    s.conforming = eig::fix_signs(eig::smallest_eigenpairs(s.disc->p1_stiffness, s.disc->p1_mass, nconf, opt));
  }
  return s;
}

int run_solve(const RunConfig& cfg, std::ostream& log) {
  OutputDir out(cfg.out_dir);
  mesh::TriMesh m = make_domain(cfg.domain);
  MeshSolve s = solve_on(m, cfg.adapt);
  {
    auto f = out.open("spectra.csv");
    f << "k,lambda_cr,residual_cr,lambda_p1,residual_p1\n" << std::setprecision(17);
    for (std::size_t k = 0; k < s.cr.size(); ++k) {
      f << k + 1 << ',' << s.cr[k].value << ',' << s.cr[k].residual << ',';
      if (k < s.conforming.size()) f << s.conforming[k].value << ',' << s.conforming[k].residual;
      else f << ',';
      f << '\n';
    }
  }
  log << "solve: " << cfg.domain.to_string() << " cr_ndof=" << s.disc->cr.ndof()
      << " p1_ndof=" << s.disc->p1.ndof() << '\n';
  for (std::size_t k = 0; k < s.cr.size(); ++k)
    log << "  lambda_" << k + 1 << " = " << std::setprecision(12) << s.cr[k].value << '\n';
  out.write_manifest(cfg);
  return 0;
}

int run_adapt(const RunConfig& cfg, std::ostream& log) {
  OutputDir out(cfg.out_dir);
  const auto reference = default_reference(cfg);
  mesh::TriMesh m0 = make_domain(cfg.domain);

  std::ostringstream members, swaps, clusters, eff, conf;
  members << "iter,k,mu2,eta2,gap_vc,gap_bound\n" << std::setprecision(17);
  swaps << "iter,new_k,old_k,gap\n" << std::setprecision(17);
  clusters << "iter,members\n";
  eff << "iter,ndof,error,indicator,effectivity\n" << std::setprecision(17);
  conf << "iter,ndof_p1";
  for (int k = 1; k <= cfg.adapt.nev; ++k) conf << ",lambda_c_" << k;
  conf << '\n' << std::setprecision(17);

  auto observer = [&](const adapt::IterationState& st) {
    const auto& r = st.record;
    {
      auto f = out.open(numbered("mesh", st.iteration, ".txt"));
      mesh::write_mesh(f, *st.disc.mesh);
    }
    for (const auto& field : st.fields) {
      auto f = out.open(numbered("indicators", st.iteration, "_k" + std::to_string(field.eigen_index + 1) + ".csv"));
      est::write_indicator_csv(f, field);
    }
    for (std::size_t c = 0; c < r.cluster.size(); ++c)
      members << r.iteration << ',' << r.cluster[c] + 1 << ',' << r.member_mu2[c] << ',' << r.member_eta2[c] << ','
              << r.member_gap_vc[c] << ',' << r.member_gap_bound[c] << '\n';
    for (Eigen::Index a = 0; a < r.swap_gaps.rows(); ++a)
      for (Eigen::Index b = 0; b < r.swap_gaps.cols(); ++b)
        swaps << r.iteration << ',' << a + 1 << ',' << b + 1 << ',' << r.swap_gaps(a, b) << '\n';
    for (const auto& c : r.detected_clusters) {
      clusters << r.iteration << ',';
      for (std::size_t i = 0; i < c.size(); ++i) clusters << (i ? " " : "") << c[i] + 1;
      clusters << '\n';
    }
    conf << r.iteration << ',' << r.ndof_conforming;
    for (int k = 0; k < cfg.adapt.nev; ++k) {
      conf << ',';
      if (static_cast<std::size_t>(k) < r.conforming_eigenvalues.size())
        conf << r.conforming_eigenvalues[static_cast<std::size_t>(k)];
    }
    conf << '\n';
    if (reference) {
      std::vector<est::IndicatorField> cl(st.fields.begin(), st.fields.begin() + static_cast<long>(r.cluster.size()));
      auto e = est::effectivity(r.cluster, r.eigenvalues, cl, *reference);
      eff << r.iteration << ',' << r.ndof << ',' << e.error << ',' << e.indicator << ',' << e.effectivity << '\n';
    }
    log << "iter " << r.iteration << " ndof " << r.ndof << " lambda";
    for (int k : r.cluster) log << ' ' << std::setprecision(10) << r.eigenvalues[static_cast<std::size_t>(k)];
    log << " marked " << r.marked << '\n';
  };

  adapt::AdaptResult res = adapt::adaptive_loop(m0, cfg.adapt, observer);
  {
    auto f = out.open("adapt.csv");
    adapt::write_records_csv(f, res.records, cfg.adapt.nev);
  }
  auto dump = [&](const std::string& name, const std::ostringstream& s) {
    auto f = out.open(name);
    f << s.str();
  };
  dump("adapt_conforming.csv", conf);
  dump("members.csv", members);
  dump("swap.csv", swaps);
  dump("clusters.csv", clusters);
  if (reference) dump("effectivity.csv", eff);
  if (!res.records.empty()) out.adopt(emit_plot_data(res.records, reference, cfg.out_dir));
  out.write_manifest(cfg);
  if (!res.notice.empty()) log << "notice: " << res.notice << '\n';
  if (!res.ok()) {
    log << "error: " << res.error << '\n';
    return 2;
  }
  return 0;
}

int run_audit(const RunConfig& cfg, std::ostream& log) {
  OutputDir out(cfg.out_dir);
  const auto reference = default_reference(cfg);
  if (!reference) throw ConfigError("audit needs run.reference for this domain/target", 0, "run.reference");
  std::vector<subspace::BoundAuditRow> rows;
  auto audit_one = [&](int iter, const fem::Discretization& disc, const eig::SpectralSet& cr,
                       const eig::SpectralSet& conf, const std::vector<est::IndicatorField>& fields,
                       const std::vector<int>& cluster) {
    subspace::AuditInput in;
    in.disc = &disc;
    in.cr = &cr;
    in.conforming = &conf;
    in.cluster = cluster;
    in.fields.assign(fields.begin(), fields.begin() + static_cast<long>(cluster.size()));
    in.reference = *reference;
    in.iter = iter;
    auto result = subspace::audit_bounds(in);
    if (!result.notice.empty()) log << "iter " << iter << ": " << result.notice << '\n';
    rows.insert(rows.end(), result.rows.begin(), result.rows.end());
  };

  int status = 0;
  if (cfg.audit_sweep == "uniform") {
    for (int level = 0; level < cfg.audit_levels; ++level) {
      MeshSolve s = solve_on(uniform_level(cfg.domain, level), cfg.adapt);
      auto cluster = adapt::target_cluster(s.cr.values(), cfg.adapt);
      std::vector<est::IndicatorField> fields;
      for (int k : cluster)
        fields.push_back(est::compute_indicators(*s.disc, s.cr[static_cast<std::size_t>(k)], k, cfg.adapt.weights));
      audit_one(level, *s.disc, s.cr, s.conforming, fields, cluster);
    }
  } else {
    auto res = adapt::adaptive_loop(make_domain(cfg.domain), cfg.adapt, [&](const adapt::IterationState& st) {
      audit_one(st.iteration, st.disc, st.cr, st.conforming, st.fields, st.record.cluster);
    });
    if (!res.ok()) {
      log << "error: " << res.error << '\n';
      status = 2;
    }
  }
  {
    auto f = out.open("audit.csv");
    subspace::write_audit_csv(f, rows);
  }
  {
    auto f = out.open("audit_detail.csv");
    subspace::write_audit_detail_csv(f, rows);
  }
  log << "audit: " << rows.size() << " rows against reference " << std::setprecision(12) << *reference
      << " (computable surrogate chain through Vc; continuous eigenspace gaps are not audited)\n";
  out.write_manifest(cfg);
  return status;
}

int run_reference(const RunConfig& cfg, std::ostream& log) {
  if (cfg.reference_levels < 3) throw ConfigError("reference.levels must be >= 3", 0, "reference.levels");
  OutputDir out(cfg.out_dir);
  const int nev = cfg.adapt.nev;
  std::vector<std::vector<double>> per_k(static_cast<std::size_t>(nev));
  std::vector<std::size_t> ndofs;
  for (int level = 0; level < cfg.reference_levels; ++level) {
    auto disc = fem::Discretization(std::make_shared<const mesh::TriMesh>(uniform_level(cfg.domain, level)));
    eig::SolverOptions opt = cfg.adapt.solver;
    opt.space = fem::SpaceKind::P1;
    auto set = eig::smallest_eigenpairs(disc.p1_stiffness, disc.p1_mass, nev, opt);
    ndofs.push_back(static_cast<std::size_t>(disc.p1.ndof()));
    for (int k = 0; k < nev; ++k) per_k[static_cast<std::size_t>(k)].push_back(set[static_cast<std::size_t>(k)].value);
    log << "level " << level << " p1_ndof " << disc.p1.ndof() << '\n';
  }
  auto f = out.open("reference.csv");
  f << "k";
  for (std::size_t l = 0; l < ndofs.size(); ++l) f << ",ndof_" << ndofs[l];
  f << ",extrapolated,residual\n" << std::setprecision(17);
  for (int k = 0; k < nev; ++k) {
    const auto& seq = per_k[static_cast<std::size_t>(k)];
    f << k + 1;
    for (double v : seq) f << ',' << v;
    auto est = aitken_extrapolate(seq);
    f << ',' << est.value << ',' << est.residual << '\n';
    log << "  lambda_" << k + 1 << " ~ " << std::setprecision(10) << est.value << " (residual " << est.residual
        << ")\n";
  }
  f.close();
  out.write_manifest(cfg);
  return 0;
}

int run_mesh_info(const RunConfig& cfg, std::ostream& log) {
  mesh::TriMesh m = make_domain(cfg.domain);
  double hmax = 0.0;
  for (const auto& t : m.triangles()) hmax = std::max(hmax, m.diameter(t.id));
  fem::CRSpace cr(std::make_shared<const mesh::TriMesh>(m));
  fem::P1Space p1(cr.mesh_ptr());
  log << "domain " << cfg.domain.to_string() << '\n'
      << "vertices " << m.num_vertices() << '\n'
      << "edges " << m.num_edges() << " (boundary " << m.num_boundary_edges() << ")\n"
      << "triangles " << m.num_triangles() << '\n'
      << "holes " << m.holes() << '\n'
      << "area " << std::setprecision(15) << m.total_area() << '\n'
      << "min_angle_deg " << m.min_angle() * 180.0 / std::numbers::pi << '\n'
      << "h_max " << hmax << '\n'
      << "cr_ndof " << cr.ndof() << '\n'
      << "p1_ndof " << p1.ndof() << '\n';
  auto issues = mesh::audit(m);
  for (const auto& i : issues) log << "issue: " << i << '\n';
  return issues.empty() ? 0 : 2;
}

} // namespace

std::vector<std::string> emit_plot_data(std::span<const adapt::AdaptRecord> records, std::optional<double> reference,
                                        const std::string& out_dir) {
  if (records.empty()) throw std::invalid_argument("emit_plot_data: no records");
  fs::create_directories(out_dir);
  std::vector<std::string> names;
  auto open = [&](const std::string& name) {
    names.push_back(name);
    std::ofstream f((fs::path(out_dir) / name).string());
    f << std::setprecision(17);
    return f;
  };
  const std::size_t nev = records.front().eigenvalues.size();
  for (std::size_t k = 0; k < nev; ++k) {
    auto f = open("eig_k" + std::to_string(k + 1) + ".dat");
    for (const auto& r : records)
      if (k < r.eigenvalues.size()) f << r.iteration << ' ' << r.eigenvalues[k] << '\n';
  }
  if (reference) {
    const auto& cluster = records.back().cluster;
    for (int k : cluster) {
      auto abs_f = open("error_k" + std::to_string(k + 1) + ".dat");
      auto sgn_f = open("signed_error_k" + std::to_string(k + 1) + ".dat");
      for (const auto& r : records) {
        double lam = r.eigenvalues[static_cast<std::size_t>(k)];
        abs_f << r.ndof << ' ' << std::abs(*reference - lam) << '\n';
        sgn_f << r.ndof << ' ' << *reference - lam << '\n';
      }
    }
    auto eff = open("effectivity.dat");
    for (const auto& r : records) {
      double err = 0.0;
      for (int k : r.cluster) err += std::abs(*reference - r.eigenvalues[static_cast<std::size_t>(k)]);
      eff << r.iteration << ' ' << err / r.mu2_cluster << '\n';
    }
  }
  auto gap = open("gap_vc.dat");
  for (const auto& r : records) gap << r.ndof << ' ' << r.gap_vc << '\n';
  return names;
}

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    switch (cfg.mode) {
    case Mode::Solve: return run_solve(cfg, log);
    case Mode::Adapt: return run_adapt(cfg, log);
    case Mode::Audit: return run_audit(cfg, log);
    case Mode::Reference: return run_reference(cfg, log);
    case Mode::MeshInfo: return run_mesh_info(cfg, log);
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 1;
  } catch (const GeometryError& e) {
    log << "mesh error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    log << "invalid argument: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const AssemblyError& e) {
    log << "assembly failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

} // namespace cradapt::bench
