#pragma once

#include <cstdint>

#include "icd/block_space.hpp"

namespace icd {

/// Sparse ell_1-regularized least squares instance with a known minimizer.
struct LassoSpec {
  Index rows = 4000;
  Index cols = 2000;
  Index blocks = 10;
  Index nnz_per_column = 20;
  Index support = 100;
  double lambda = 0.01;
  std::uint64_t seed = 1;
};

struct LassoInstance {
  SparseMatrix a;
  Vector b;
  Vector x_star;
  double f_star = 0.0;
  double lambda = 0.0;
  BlockPartition partition;
};

/// Draws A and an optimal residual r*, then rescales columns so that
/// A^T r* + lambda s = 0 holds for a sign vector s of a planted sparse x*,
/// with |a_j^T r*| <= 0.9 lambda off the support. Sets b = A x* - r*.
LassoInstance make_lasso(const LassoSpec& spec);

}  // namespace icd
