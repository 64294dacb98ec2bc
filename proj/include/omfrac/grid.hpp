#pragma once

#include <memory>
#include <vector>

// Uniform time grids, sampled paths and the norms the tube probabilities
// are measured in.

namespace omfrac {

struct TimeGrid {
  double horizon = 1.0;            // T
  int n = 0;                       // node count
  std::vector<double> nodes;       // t_k = k * dt, t_0 = 0, t_{n-1} = T

  double dt() const { return horizon / static_cast<double>(n - 1); }
};

using GridPtr = std::shared_ptr<const TimeGrid>;

// Uniform grid on [0, T]. Throws std::invalid_argument for T <= 0 or n < 3.
GridPtr make_uniform_grid(double horizon, int n);

struct SampledPath {
  GridPtr grid;
  std::vector<double> values;

  static SampledPath zero(const GridPtr& grid);
  static SampledPath of(const GridPtr& grid, std::vector<double> values);
  template <typename F>
  static SampledPath from_function(const GridPtr& grid, F&& f) {
    std::vector<double> v(grid->nodes.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(grid->nodes[k]);
    return of(grid, std::move(v));
  }

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int k) const { return values[static_cast<std::size_t>(k)]; }
  double& operator[](int k) { return values[static_cast<std::size_t>(k)]; }
};

enum class NormKind { Sup, Holder };

struct NormSpec {
  NormKind kind = NormKind::Sup;
  double beta = 0.0;  // Holder exponent, required in (0,1) for Holder

  static NormSpec sup() { return {NormKind::Sup, 0.0}; }
  static NormSpec holder(double beta);
};

// Composite trapezoid rule for int_0^T f dt.
double quadrature(const SampledPath& f);
double quadrature(const TimeGrid& grid, const std::vector<double>& values);

// Sup norm, or full Holder norm |f_0| + sup_{j<k} |f_k-f_j|/(t_k-t_j)^beta.
// The Holder pair scan is exhaustive up to n = 4096 and restricted to dyadic
// separations beyond that.
double path_norm(const SampledPath& f, const NormSpec& spec);
double path_norm(const TimeGrid& grid, const std::vector<double>& values,
                 const NormSpec& spec);

// Holder seminorm only (no |f_0| term); the small-ball statistics use this
// directly on paths started at zero.
double holder_seminorm(const TimeGrid& grid, const std::vector<double>& values,
                       double beta);

}  // namespace omfrac
