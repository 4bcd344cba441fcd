#include "icd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace icd {

LassoInstance make_lasso(const LassoSpec& spec) {
  if (spec.rows <= 0 || spec.cols <= 0 || spec.blocks <= 0 || spec.cols % spec.blocks != 0) {
    throw ConfigError("lasso: positive sizes with cols divisible by the block count are required");
  }
  if (spec.support < 0 || spec.support > spec.cols) throw ConfigError("lasso: support size out of range");
  if (!(spec.lambda > 0.0)) throw ConfigError("lasso: lambda must be positive");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index k = std::min(spec.nnz_per_column, spec.rows);
  const double col_scale = 1.0 / std::sqrt(static_cast<double>(k));

  std::vector<std::vector<std::pair<Index, double>>> cols(static_cast<std::size_t>(spec.cols));
  std::vector<Index> rows(static_cast<std::size_t>(spec.rows));
  std::iota(rows.begin(), rows.end(), Index{0});
  for (auto& col : cols) {
    for (Index q = 0; q < k; ++q) {
      std::uniform_int_distribution<Index> pick(q, spec.rows - 1);
      std::swap(rows[static_cast<std::size_t>(q)], rows[static_cast<std::size_t>(pick(rng))]);
      col.emplace_back(rows[static_cast<std::size_t>(q)], col_scale * normal(rng));
    }
  }

  Vector r_star(spec.rows);
  for (Index i = 0; i < spec.rows; ++i) r_star[i] = spec.lambda * normal(rng);

  Vector g(spec.cols);
  for (Index j = 0; j < spec.cols; ++j) {
    double s = 0.0;
    for (const auto& [row, v] : cols[static_cast<std::size_t>(j)]) s += v * r_star[row];
    g[j] = s;
  }
  std::vector<Index> order(static_cast<std::size_t>(spec.cols));
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + spec.support, order.end(),
                    [&](Index a, Index b) { return std::abs(g[a]) > std::abs(g[b]); });

  LassoInstance out;
  out.lambda = spec.lambda;
  out.x_star = Vector::Zero(spec.cols);
  std::vector<bool> on_support(static_cast<std::size_t>(spec.cols), false);
  for (Index q = 0; q < spec.support; ++q) on_support[static_cast<std::size_t>(order[static_cast<std::size_t>(q)])] = true;

  constexpr double kOffSupportCap = 0.9;
  std::vector<Triplet> trips;
  for (Index j = 0; j < spec.cols; ++j) {
    const double gj = g[j];
    double scale = 1.0;
    if (on_support[static_cast<std::size_t>(j)]) {
      if (gj == 0.0) throw StructuralError("lasso: zero correlation on the support; change the seed");
      scale = spec.lambda / std::abs(gj);
      out.x_star[j] = -std::copysign(0.5 + unit(rng), gj);
    } else if (std::abs(gj) > kOffSupportCap * spec.lambda) {
      scale = kOffSupportCap * spec.lambda * (0.5 + 0.5 * unit(rng)) / std::abs(gj);
    }
    for (const auto& [row, v] : cols[static_cast<std::size_t>(j)]) trips.emplace_back(row, j, scale * v);
  }
  out.a.resize(spec.rows, spec.cols);
  out.a.setFromTriplets(trips.begin(), trips.end());
  out.a.makeCompressed();
  out.b = out.a * out.x_star - r_star;
  out.f_star = 0.5 * r_star.squaredNorm() + spec.lambda * out.x_star.lpNorm<1>();
  out.partition = BlockPartition::uniform(spec.blocks, spec.cols / spec.blocks);
  return out;
}

}  // namespace icd
