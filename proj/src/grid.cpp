#include "omfrac/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace omfrac {

GridPtr make_uniform_grid(double horizon, int n) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("make_uniform_grid: horizon must be > 0");
  }
  if (n < 3) {
    throw std::invalid_argument("make_uniform_grid: need n >= 3 nodes");
  }
  auto g = std::make_shared<TimeGrid>();
  g->horizon = horizon;
  g->n = n;
  g->nodes.resize(static_cast<std::size_t>(n));
  const double dt = horizon / static_cast<double>(n - 1);
  for (int k = 0; k < n; ++k) {
    g->nodes[static_cast<std::size_t>(k)] = dt * static_cast<double>(k);
  }
  g->nodes.back() = horizon;
  return g;
}

SampledPath SampledPath::zero(const GridPtr& grid) {
  SampledPath p;
  p.grid = grid;
  p.values.assign(grid->nodes.size(), 0.0);
  return p;
}

SampledPath SampledPath::of(const GridPtr& grid, std::vector<double> values) {
  if (values.size() != grid->nodes.size()) {
    throw std::invalid_argument("SampledPath: values length must match grid");
  }
  SampledPath p;
  p.grid = grid;
  p.values = std::move(values);
  return p;
}

NormSpec NormSpec::holder(double beta) {
  if (!(beta > 0.0) || !(beta < 1.0)) {
    throw std::invalid_argument("NormSpec: Holder exponent must lie in (0,1)");
  }
  return {NormKind::Holder, beta};
}

double quadrature(const TimeGrid& grid, const std::vector<double>& values) {
  const double dt = grid.dt();
  double acc = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k + 1 < values.size(); ++k) acc += values[k];
  return acc * dt;
}

double quadrature(const SampledPath& f) { return quadrature(*f.grid, f.values); }

double holder_seminorm(const TimeGrid& grid, const std::vector<double>& values,
                       double beta) {
  const int n = static_cast<int>(values.size());
  const double dt = grid.dt();
  double best = 0.0;
  if (n <= 4096) {
    // exhaustive pair scan; pow is hoisted per lag
    std::vector<double> powlag(static_cast<std::size_t>(n));
    for (int m = 1; m < n; ++m) {
      powlag[static_cast<std::size_t>(m)] =
          std::pow(dt * static_cast<double>(m), -beta);
    }
    for (int j = 0; j < n; ++j) {
      const double fj = values[static_cast<std::size_t>(j)];
      for (int k = j + 1; k < n; ++k) {
        const double d = std::abs(values[static_cast<std::size_t>(k)] - fj) *
                         powlag[static_cast<std::size_t>(k - j)];
        if (d > best) best = d;
      }
    }
  } else {
    // dyadic separations only
    for (int m = 1; m < n; m *= 2) {
      const double pl = std::pow(dt * static_cast<double>(m), -beta);
      for (int j = 0; j + m < n; ++j) {
        const double d = std::abs(values[static_cast<std::size_t>(j + m)] -
                                  values[static_cast<std::size_t>(j)]) *
                         pl;
        if (d > best) best = d;
      }
    }
  }
  return best;
}

double path_norm(const TimeGrid& grid, const std::vector<double>& values,
                 const NormSpec& spec) {
  if (spec.kind == NormKind::Sup) {
    double best = 0.0;
    for (double v : values) best = std::max(best, std::abs(v));
    return best;
  }
  if (!(spec.beta > 0.0) || !(spec.beta < 1.0)) {
    throw std::invalid_argument("path_norm: Holder exponent must lie in (0,1)");
  }
  return std::abs(values.front()) + holder_seminorm(grid, values, spec.beta);
}

double path_norm(const SampledPath& f, const NormSpec& spec) {
  return path_norm(*f.grid, f.values, spec);
}

}  // namespace omfrac
