#include "mgl/wasserstein.hpp"

#include "mgl/error.hpp"
#include "mgl/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mgl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> euclidean_costs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto n = a.rows(), dim = a.cols();
  std::vector<double> cost(static_cast<std::size_t>(n * b.rows()));
  // Row-major copies so the inner loop is contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ra = a, rb = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* x = ra.row(i).data();
    double* out = cost.data() + i * b.rows();
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double* y = rb.row(j).data();
      double s = 0;
      for (Eigen::Index k = 0; k < dim; ++k) {
        const double t = x[k] - y[k];
        s += t * t;
      }
      out[j] = std::sqrt(s);
    }
  }
  return cost;
}

Eigen::MatrixXd replicate_rows(const Eigen::MatrixXd& p, std::size_t times) {
  Eigen::MatrixXd out(p.rows() * static_cast<Eigen::Index>(times), p.cols());
  for (std::size_t t = 0; t < times; ++t) out.middleRows(static_cast<Eigen::Index>(t) * p.rows(), p.rows()) = p;
  return out;
}

Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& p, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(p.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates with explicit uniforms for portability.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(idx.size() - i));
    std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(k), p.cols());
  for (std::size_t i = 0; i < k; ++i) out.row(static_cast<Eigen::Index>(i)) = p.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

Assignment solve_assignment(std::span<const double> cost, std::size_t n) {
  require(n >= 1 && cost.size() == n * n, ErrorCode::kShape, "solve_assignment: cost must be n x n");
  auto c = [&](std::size_t i, std::size_t j) { return cost[i * n + j]; };
  constexpr std::ptrdiff_t kNone = -1;
  std::vector<std::ptrdiff_t> rowsol(n, kNone), colsol(n, kNone);
  std::vector<double> v(n);
  std::vector<std::size_t> matches(n, 0), free_rows;
  free_rows.reserve(n);

  // Column reduction.
  for (std::size_t jj = n; jj-- > 0;) {
    std::size_t imin = 0;
    double m = c(0, jj);
    for (std::size_t i = 1; i < n; ++i)
      if (c(i, jj) < m) {
        m = c(i, jj);
        imin = i;
      }
    v[jj] = m;
    if (++matches[imin] == 1) {
      rowsol[imin] = static_cast<std::ptrdiff_t>(jj);
      colsol[jj] = static_cast<std::ptrdiff_t>(imin);
    } else if (v[jj] < v[static_cast<std::size_t>(rowsol[imin])]) {
      const auto j1 = static_cast<std::size_t>(rowsol[imin]);
      rowsol[imin] = static_cast<std::ptrdiff_t>(jj);
      colsol[jj] = static_cast<std::ptrdiff_t>(imin);
      colsol[j1] = kNone;
    } else {
      colsol[jj] = kNone;
    }
  }
  // Reduction transfer.
  for (std::size_t i = 0; i < n; ++i) {
    if (matches[i] == 0) {
      free_rows.push_back(i);
    } else if (matches[i] == 1 && n > 1) {
      const auto j1 = static_cast<std::size_t>(rowsol[i]);
      double m = kInf;
      for (std::size_t j = 0; j < n; ++j)
        if (j != j1) m = std::min(m, c(i, j) - v[j]);
      v[j1] -= m;
    }
  }
  // Augmenting row reduction, two passes. Floating-point ties can make this
  // phase cycle with vanishing price decrements, so it is capped; leftover
  // free rows are handled exactly by the augmentation phase.
  for (int pass = 0; pass < 2 && n > 1; ++pass) {
    std::size_t k = 0, numfree = 0;
    const std::size_t prev = free_rows.size();
    std::size_t steps = 0;
    const std::size_t step_cap = 8 * n + 64;
    while (k < prev) {
      if (++steps > step_cap) {
        for (std::size_t r = k; r < prev; ++r) free_rows[numfree++] = free_rows[r];
        k = prev;
        break;
      }
      const std::size_t i = free_rows[k++];
      double umin = c(i, 0) - v[0], usubmin = kInf;
      std::size_t j1 = 0, j2 = 0;
      for (std::size_t j = 1; j < n; ++j) {
        const double h = c(i, j) - v[j];
        if (h < usubmin) {
          if (h >= umin) {
            usubmin = h;
            j2 = j;
          } else {
            usubmin = umin;
            umin = h;
            j2 = j1;
            j1 = j;
          }
        }
      }
      std::ptrdiff_t i0 = colsol[j1];
      const bool strict = umin < usubmin;
      if (strict) {
        v[j1] -= usubmin - umin;
      } else if (i0 != kNone) {
        j1 = j2;
        i0 = colsol[j2];
      }
      rowsol[i] = static_cast<std::ptrdiff_t>(j1);
      colsol[j1] = static_cast<std::ptrdiff_t>(i);
      if (i0 != kNone) {
        rowsol[static_cast<std::size_t>(i0)] = kNone;
        if (strict)
          free_rows[--k] = static_cast<std::size_t>(i0);
        else
          free_rows[numfree++] = static_cast<std::size_t>(i0);
      }
    }
    free_rows.resize(numfree);
  }
  // Augmentation: Dijkstra-style shortest alternating path from each free row.
  std::vector<double> d(n);
  std::vector<std::size_t> pred(n), collist(n);
  for (const std::size_t freerow : free_rows) {
    for (std::size_t j = 0; j < n; ++j) {
      d[j] = c(freerow, j) - v[j];
      pred[j] = freerow;
      collist[j] = j;
    }
    std::size_t low = 0, up = 0, last = 0, endofpath = 0;
    bool found = false;
    double m = 0;
    while (!found) {
      if (up == low) {
        last = low;  // columns [0, last) are scanned
        m = d[collist[up++]];
        for (std::size_t k = up; k < n; ++k) {
          const std::size_t j = collist[k];
          const double h = d[j];
          if (h <= m) {
            if (h < m) {
              up = low;
              m = h;
            }
            collist[k] = collist[up];
            collist[up++] = j;
          }
        }
        for (std::size_t k = low; k < up; ++k)
          if (colsol[collist[k]] == kNone) {
            endofpath = collist[k];
            found = true;
            break;
          }
      }
      if (!found) {
        const std::size_t j1 = collist[low++];
        const auto i = static_cast<std::size_t>(colsol[j1]);
        const double h = c(i, j1) - v[j1] - m;
        for (std::size_t k = up; k < n; ++k) {
          const std::size_t j = collist[k];
          const double v2 = c(i, j) - v[j] - h;
          if (v2 < d[j]) {
            pred[j] = i;
            if (v2 == m) {
              if (colsol[j] == kNone) {
                endofpath = j;
                found = true;
                break;
              }
              collist[k] = collist[up];
              collist[up++] = j;
            }
            d[j] = v2;
          }
        }
      }
    }
    for (std::size_t k = 0; k < last; ++k) {
      const std::size_t j1 = collist[k];
      v[j1] += d[j1] - m;
    }
    while (true) {
      const std::size_t i = pred[endofpath];
      colsol[endofpath] = static_cast<std::ptrdiff_t>(i);
      const std::ptrdiff_t next = rowsol[i];
      rowsol[i] = static_cast<std::ptrdiff_t>(endofpath);
      if (i == freerow) break;
      endofpath = static_cast<std::size_t>(next);
    }
  }

  Assignment out;
  out.column_of_row.resize(n);
  out.row_dual.resize(n);
  out.column_dual = v;
  for (std::size_t i = 0; i < n; ++i) {
    require(rowsol[i] != kNone, ErrorCode::kInternal, "solve_assignment: incomplete assignment");
    const auto j = static_cast<std::size_t>(rowsol[i]);
    out.column_of_row[i] = j;
    out.row_dual[i] = c(i, j) - v[j];
    out.total_cost += c(i, j);
  }
  double worst = kInf;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) worst = std::min(worst, c(i, j) - out.row_dual[i] - v[j]);
  out.min_reduced_cost = worst;
  return out;
}

W1Result w1_exact_report(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const W1Options& opts) {
  const std::size_t n = mu.size(), m = nu.size();
  require(n >= 1 && m >= 1, ErrorCode::kShape, "w1_exact: empty point cloud");
  require(mu.dim() == nu.dim(), ErrorCode::kShape,
          fmt::format("w1_exact: dimension mismatch ({} vs {})", mu.dim(), nu.dim()));
  require(mu.points.allFinite() && nu.points.allFinite(), ErrorCode::kParameter, "w1_exact: non-finite point");
  W1Result result;
  Eigen::MatrixXd a = mu.points, b = nu.points;
  if (n != m) {
    const std::size_t l = std::lcm(n, m);
    if (l <= opts.cap) {
      a = replicate_rows(mu.points, l / n);
      b = replicate_rows(nu.points, l / m);
      result.resampling = fmt::format("replicated to lcm {}", l);
    } else if (n > m) {
      a = subsample_rows(mu.points, m, opts.seed);
      result.resampling = fmt::format("subsampled larger cloud to {}", m);
    } else {
      b = subsample_rows(nu.points, n, opts.seed);
      result.resampling = fmt::format("subsampled larger cloud to {}", n);
    }
  }
  const auto size = static_cast<std::size_t>(a.rows());
  require(size <= opts.cap, ErrorCode::kCapacity,
          fmt::format("w1_exact: {} points exceed the exact-solver cap {}; use sliced_w1 for larger clouds "
                      "or raise the cap explicitly",
                      size, opts.cap));
  const auto cost = euclidean_costs(a, b);
  const Assignment assignment = solve_assignment(cost, size);
  require(assignment.min_reduced_cost >= -1e-9, ErrorCode::kInternal,
          fmt::format("w1_exact: optimality certificate failed (min reduced cost {})", assignment.min_reduced_cost));
  result.value = assignment.total_cost / static_cast<double>(size);
  result.matched_size = size;
  result.min_reduced_cost = assignment.min_reduced_cost;
  return result;
}

double w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const W1Options& opts) {
  return w1_exact_report(mu, nu, opts).value;
}

double w1_1d(std::span<const double> xs, std::span<const double> ys) {
  require(!xs.empty() && !ys.empty(), ErrorCode::kShape, "w1_1d: empty sample");
  std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
  }
  // Integral over t in (0,1) of |F^-1(t) - G^-1(t)| with quantile steps at i/n and j/m.
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double t = 0, s = 0;
  while (i < a.size() && j < b.size()) {
    const double ti = static_cast<double>(i + 1) / n, tj = static_cast<double>(j + 1) / m;
    const double next = std::min(ti, tj);
    s += (next - t) * std::abs(a[i] - b[j]);
    t = next;
    if (ti <= next) ++i;
    if (tj <= next) ++j;
  }
  return s;
}

double sliced_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t n_projections,
                 std::uint64_t seed) {
  require(mu.dim() == nu.dim(), ErrorCode::kShape, "sliced_w1: dimension mismatch");
  require(n_projections >= 1, ErrorCode::kParameter, "sliced_w1: need at least one projection");
  Rng rng(seed);
  const auto dim = static_cast<Eigen::Index>(mu.dim());
  double total = 0;
  Eigen::VectorXd u(dim);
  for (std::size_t p = 0; p < n_projections; ++p) {
    double norm = 0;
    do {
      for (auto& e : u) e = standard_normal(rng);
      norm = u.norm();
    } while (norm == 0);
    u /= norm;
    const Eigen::VectorXd pa = mu.points * u, pb = nu.points * u;
    total += w1_1d(std::span<const double>(pa.data(), static_cast<std::size_t>(pa.size())),
                   std::span<const double>(pb.data(), static_cast<std::size_t>(pb.size())));
  }
  return total / static_cast<double>(n_projections);
}

}  // namespace mgl
