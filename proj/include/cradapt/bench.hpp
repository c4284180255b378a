#pragma once

#include "cradapt/adapt.hpp"
#include "cradapt/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cradapt::bench {

/// Reference value of the double eigenvalue lambda_2 = lambda_3 on the square
/// ring, obtained by Aitken extrapolation of conforming P1 values on fine
/// uniform meshes (`cradapt reference --domain square_ring` recomputes it).
inline constexpr double kSquareRingReference = 84.517;

enum class Mode { Solve, Adapt, Audit, Reference, MeshInfo };
const char* to_string(Mode m);
Mode parse_mode(const std::string& s);

struct DomainSpec {
  enum class Kind { UnitSquare, SquareRing, File };
  Kind kind = Kind::SquareRing;
  int n = 2;  ///< cells per side (unit square) or per third (ring)
  std::string path;

  std::string to_string() const;
};

/// `unit_square:<n>`, `square_ring[:<per_third>]`, `file:<path>`.
DomainSpec parse_domain(const std::string& s);
mesh::TriMesh make_domain(const DomainSpec& d);
/// Level-l member of a uniform sequence with h halved per level.
mesh::TriMesh uniform_level(const DomainSpec& d, int level);

struct RunConfig {
  Mode mode = Mode::Solve;
  DomainSpec domain;
  adapt::AdaptConfig adapt;  ///< also carries nev, seed and solver tolerance
  std::string out_dir = "out";
  std::optional<double> reference;
  int reference_levels = 3;
  std::string audit_sweep = "adaptive";
  int audit_levels = 4;

  /// Canonical `section.key = value` listing, recorded in manifests.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Line-oriented `key = value` text with `[section]` headers; `#` comments.
/// Throws ConfigError naming the line and key.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
/// Applies one setting; `line` only labels errors.
void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value,
                   int line = 0);

/// `single:<k>` or `cluster`.
void parse_marking(adapt::AdaptConfig& cfg, const std::string& value);

struct ReferenceEstimate {
  double value = 0.0;
  std::vector<double> inputs;
  double residual = 0.0;   ///< change against the previous triple (or last step for 3 inputs)
  bool converged = false;  ///< second difference vanished; value is the last input
};

/// Aitken delta-squared on the last three terms. Throws std::invalid_argument
/// for fewer than three values or a non-monotone tail.
ReferenceEstimate aitken_extrapolate(std::span<const double> values);

/// Sorted pi^2 (m^2 + n^2), m,n >= 1.
std::vector<double> unit_square_spectrum(int count);

/// Reference for the target cluster when one is known for the domain.
std::optional<double> default_reference(const RunConfig& cfg);

/// Two-column plot files; returns the written file names (relative to out_dir).
std::vector<std::string> emit_plot_data(std::span<const adapt::AdaptRecord> records, std::optional<double> reference,
                                        const std::string& out_dir);

/// 64-bit FNV-1a of a file's bytes.
std::uint64_t file_hash(const std::string& path);

/// Executes a run; returns 0 on success, 1 for configuration errors, 2 for numerical failures.
int run(const RunConfig& cfg, std::ostream& log);

} // namespace cradapt::bench
