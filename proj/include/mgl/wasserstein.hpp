#pragma once

#include "mgl/empirical.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mgl {

inline constexpr std::size_t kDefaultW1Cap = 4096;

// Minimum-cost perfect matching on an n x n cost matrix.
struct Assignment {
  std::vector<std::size_t> column_of_row;
  std::vector<double> row_dual;
  std::vector<double> column_dual;
  double total_cost = 0;
  // min_ij c_ij - u_i - v_j; >= -1e-9 certifies optimality.
  double min_reduced_cost = 0;
};

// Jonker-Volgenant: column reduction, reduction transfer, augmenting row
// reduction, then shortest augmenting paths. `cost` is row-major n x n.
Assignment solve_assignment(std::span<const double> cost, std::size_t n);

struct W1Options {
  std::size_t cap = kDefaultW1Cap;
  std::uint64_t seed = 0;  // used only when the larger cloud must be subsampled
};

struct W1Result {
  double value = 0;
  std::size_t matched_size = 0;
  double min_reduced_cost = 0;
  // "", "replicated to lcm L" or "subsampled larger cloud to n".
  std::string resampling;
};

// Exact W1 between uniform empirical measures under Euclidean cost.
W1Result w1_exact_report(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const W1Options& opts = {});
double w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const W1Options& opts = {});

// Sorted matching for equal sizes; exact quantile-function integral otherwise.
double w1_1d(std::span<const double> xs, std::span<const double> ys);

// Mean of w1_1d over seeded random unit directions.
double sliced_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t n_projections,
                 std::uint64_t seed);

}  // namespace mgl
