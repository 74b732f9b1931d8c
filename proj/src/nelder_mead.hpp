#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

namespace texmesh::detail {

template <std::size_t N>
struct SimplexResult {
  std::array<double, N> x{};
  double value = 0.0;
  int evaluations = 0;
};

// Nelder-Mead with the standard coefficients (1, 2, 0.5, 0.5). Stops when
// the spread of simplex values falls below `f_tol` (absolute) or after
// `max_evaluations`.
template <std::size_t N>
SimplexResult<N> nelder_mead(const std::function<double(const std::array<double, N>&)>& f,
                             const std::array<double, N>& start, const std::array<double, N>& step,
                             double f_tol = 1e-22, int max_evaluations = 20000) {
  using Point = std::array<double, N>;
  std::array<Point, N + 1> pts;
  std::array<double, N + 1> val;
  int evals = 0;
  auto eval = [&](const Point& p) {
    ++evals;
    const double v = f(p);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  pts[0] = start;
  for (std::size_t i = 0; i < N; ++i) {
    pts[i + 1] = start;
    pts[i + 1][i] += step[i];
  }
  for (std::size_t i = 0; i <= N; ++i) val[i] = eval(pts[i]);

  std::array<std::size_t, N + 1> order;
  while (evals < max_evaluations) {
    for (std::size_t i = 0; i <= N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const auto best = order[0], worst = order[N], second = order[N - 1];
    if (std::abs(val[worst] - val[best]) <= f_tol) break;

    Point centroid{};
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t d = 0; d < N; ++d) centroid[d] += pts[order[i]][d] / static_cast<double>(N);
    auto along = [&](double t) {
      Point p;
      for (std::size_t d = 0; d < N; ++d) p[d] = centroid[d] + t * (pts[worst][d] - centroid[d]);
      return p;
    };

    const Point reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < val[best]) {
      const Point expanded = along(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        val[worst] = fe;
      } else {
        pts[worst] = reflected;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = reflected;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Point contracted = along(outside ? -0.5 : 0.5);
    const double fc = eval(contracted);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = contracted;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= N; ++i) {
      auto& p = pts[order[i]];
      for (std::size_t d = 0; d < N; ++d) p[d] = pts[best][d] + 0.5 * (p[d] - pts[best][d]);
      val[order[i]] = eval(p);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
  return {pts[best], val[best], evals};
}

}  // namespace texmesh::detail
