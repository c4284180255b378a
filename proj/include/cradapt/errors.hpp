#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cradapt {

/// Invalid or inconsistent mesh input (bad ids, non-manifold edges, inverted triangles).
class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Element-level assembly failure; carries the offending triangle id.
class AssemblyError : public std::runtime_error {
public:
  AssemblyError(int triangle, const std::string& what)
      : std::runtime_error("triangle " + std::to_string(triangle) + ": " + what), triangle_(triangle) {}
  int triangle() const noexcept { return triangle_; }

private:
  int triangle_;
};

/// Numerical breakdown: singular factorization, eigensolver stagnation, ill-conditioned Gram.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what, std::vector<double> residuals = {})
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
  std::vector<double> residuals_;
};

/// Malformed configuration or command line. `line` is 0 when not tied to a file line.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, int line = 0, std::string key = {})
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line), key_(std::move(key)) {}
  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

private:
  int line_;
  std::string key_;
};

} // namespace cradapt
