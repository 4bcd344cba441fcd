#include "icd/block_angular.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace icd {

Index BlockAngularMatrix::diagonal_rows() const {
  Index m = 0;
  for (const auto& ci : c) m += ci.rows();
  return m;
}

Index BlockAngularMatrix::cols() const {
  Index n = 0;
  for (const auto& ci : c) n += ci.cols();
  return n;
}

BlockPartition BlockAngularMatrix::partition() const {
  std::vector<Index> sizes;
  sizes.reserve(c.size());
  for (const auto& ci : c) sizes.push_back(ci.cols());
  return BlockPartition(std::move(sizes));
}

void BlockAngularMatrix::validate() const {
  if (c.empty()) throw std::invalid_argument("block-angular: no blocks");
  if (c.size() != d.size()) throw std::invalid_argument("block-angular: C and D block counts differ");
  if (ell < 0) throw std::invalid_argument("block-angular: negative linking row count");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].cols() <= 0) throw std::invalid_argument("block-angular: empty column block");
    if (d[i].rows() != ell || d[i].cols() != c[i].cols()) {
      throw std::invalid_argument("block-angular: D_" + std::to_string(i) + " has the wrong shape");
    }
  }
}

SparseMatrix BlockAngularMatrix::assemble() const {
  validate();
  const Index m = diagonal_rows();
  std::vector<Triplet> trips;
  Index row0 = 0;
  Index col0 = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (Index j = 0; j < c[i].outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(c[i], j); it; ++it) {
        trips.emplace_back(row0 + it.row(), col0 + it.col(), it.value());
      }
      for (SparseMatrix::InnerIterator it(d[i], j); it; ++it) {
        trips.emplace_back(m + it.row(), col0 + it.col(), it.value());
      }
    }
    row0 += c[i].rows();
    col0 += c[i].cols();
  }
  SparseMatrix a(m + ell, col0);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

SparseMatrix BlockAngularMatrix::stacked_block(Index i) const {
  const auto& ci = c.at(static_cast<std::size_t>(i));
  const auto& di = d.at(static_cast<std::size_t>(i));
  std::vector<Triplet> trips;
  for (Index j = 0; j < ci.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(ci, j); it; ++it) trips.emplace_back(it.row(), j, it.value());
    for (SparseMatrix::InnerIterator it(di, j); it; ++it) {
      trips.emplace_back(ci.rows() + it.row(), j, it.value());
    }
  }
  SparseMatrix out(ci.rows() + ell, ci.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

Index numerical_rank(const DenseMatrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<DenseMatrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  const double cut = rel_tol * s[0];
  Index r = 0;
  for (Index k = 0; k < s.size(); ++k) r += s[k] > cut ? 1 : 0;
  return r;
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, int attempt) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void validate_spec(const GeneratorSpec& s) {
  if (s.n <= 0 || s.m_i <= 0 || s.n_i <= 0 || s.ell < 0) {
    throw ConfigError("generator: n, M_i, N_i must be positive and ell >= 0");
  }
  if (s.nnz_per_column <= 0) throw ConfigError("generator: nnz per column must be positive");
  if (!(s.d_fill >= 0.0 && s.d_fill <= 1.0)) throw ConfigError("generator: D fill must be in [0, 1]");
  if (s.shape == BlockShape::Tall && s.m_i < s.n_i) throw ConfigError("generator: tall blocks need M_i >= N_i");
  if (s.shape == BlockShape::Wide && s.m_i >= s.n_i) throw ConfigError("generator: wide blocks need M_i < N_i");
}

SparseMatrix random_c(const GeneratorSpec& s, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const Index k = std::min(s.nnz_per_column, s.m_i);
  std::vector<Index> rows(static_cast<std::size_t>(s.m_i));
  std::iota(rows.begin(), rows.end(), Index{0});
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(k * s.n_i));
  for (Index j = 0; j < s.n_i; ++j) {
    // Partial Fisher-Yates: the first k entries become a uniform k-subset.
    for (Index q = 0; q < k; ++q) {
      std::uniform_int_distribution<Index> pick(q, s.m_i - 1);
      std::swap(rows[static_cast<std::size_t>(q)], rows[static_cast<std::size_t>(pick(rng))]);
      trips.emplace_back(rows[static_cast<std::size_t>(q)], j, normal(rng));
    }
    if (s.shape == BlockShape::Wide && j < s.m_i) trips.emplace_back(j, j, s.identity_shift);
  }
  SparseMatrix c(s.m_i, s.n_i);
  c.setFromTriplets(trips.begin(), trips.end());
  c.makeCompressed();
  return c;
}

SparseMatrix random_d(const GeneratorSpec& s, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution keep(s.d_fill);
  std::vector<Triplet> trips;
  for (Index j = 0; j < s.n_i; ++j) {
    for (Index r = 0; r < s.ell; ++r) {
      if (keep(rng)) trips.emplace_back(r, j, s.d_scale * normal(rng));
    }
  }
  SparseMatrix d(s.ell, s.n_i);
  d.setFromTriplets(trips.begin(), trips.end());
  d.makeCompressed();
  return d;
}

bool full_rank(const GeneratorSpec& s, const SparseMatrix& c) {
  if (s.n_i > s.rank_check_limit) return true;
  const Index want = s.shape == BlockShape::Tall ? s.n_i : s.m_i;
  return numerical_rank(DenseMatrix(c)) == want;
}

}  // namespace

GeneratedProblem generate(const GeneratorSpec& spec) {
  validate_spec(spec);
  constexpr int kAttempts = 5;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const std::uint64_t seed = attempt == 0 ? spec.seed : derive_seed(spec.seed, attempt);
    std::mt19937_64 rng(seed);
    BlockAngularMatrix mat;
    mat.ell = spec.ell;
    bool ok = true;
    for (Index i = 0; i < spec.n && ok; ++i) {
      mat.c.push_back(random_c(spec, rng));
      mat.d.push_back(random_d(spec, rng));
      ok = full_rank(spec, mat.c.back());
    }
    if (!ok) continue;
    std::normal_distribution<double> normal;
    Vector x_star(spec.n * spec.n_i);
    for (Index j = 0; j < x_star.size(); ++j) x_star[j] = normal(rng);
    GeneratedProblem out = problem_from_matrix(std::move(mat), std::move(x_star));
    out.seed_used = seed;
    return out;
  }
  throw StructuralError("generator: rank-deficient blocks in " + std::to_string(kAttempts) +
                        " attempts; adjust the density or block shape");
}

GeneratedProblem problem_from_matrix(BlockAngularMatrix matrix, Vector x_star) {
  GeneratedProblem out;
  const SparseMatrix a = matrix.assemble();
  if (x_star.size() != a.cols()) throw std::invalid_argument("problem_from_matrix: x* has the wrong length");
  out.b = a * x_star;
  out.matrix = std::move(matrix);
  out.x_star = std::move(x_star);
  return out;
}

SparseMatrix build_preconditioner(const BlockAngularMatrix& mat, Index i) {
  const SparseMatrix& ci = mat.c.at(static_cast<std::size_t>(i));
  if (ci.rows() < ci.cols()) {
    throw StructuralError("preconditioner C_i^T C_i is singular for a wide block (M_i < N_i); "
                          "use the perturbed preconditioner C_i^T C_i + rho I");
  }
  SparseMatrix p = (ci.transpose() * ci).pruned();
  p.makeCompressed();
  return p;
}

SparseMatrix build_perturbed_preconditioner(const BlockAngularMatrix& mat, Index i, double rho_shift) {
  if (!(rho_shift > 0.0)) throw std::invalid_argument("perturbed preconditioner: rho must be positive");
  const SparseMatrix& ci = mat.c.at(static_cast<std::size_t>(i));
  SparseMatrix id(ci.cols(), ci.cols());
  id.setIdentity();
  SparseMatrix p = ci.transpose() * ci + rho_shift * id;
  p.makeCompressed();
  return p;
}

const char* to_string(SpectrumTarget t) {
  switch (t) {
    case SpectrumTarget::PinvB:
      return "PinvB";
    case SpectrumTarget::PhatInvB:
      return "PhatInvB";
    case SpectrumTarget::PhatInvP:
      return "PhatInvP";
  }
  return "?";
}

SpectrumTarget parse_spectrum_target(const std::string& name) {
  if (name == "PinvB") return SpectrumTarget::PinvB;
  if (name == "PhatInvB") return SpectrumTarget::PhatInvB;
  if (name == "PhatInvP") return SpectrumTarget::PhatInvP;
  throw ConfigError("unknown spectrum target '" + name + "' (expected PinvB, PhatInvB or PhatInvP)");
}

namespace {

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

void classify(SpectrumReport& rep) {
  const double tol = rep.tolerance;
  for (double v : rep.eigenvalues) {
    if (std::abs(v) <= tol) {
      ++rep.count_zero;
    } else if (std::abs(v - 1.0) <= tol) {
      ++rep.count_unit;
    } else if (v < 1.0) {
      ++rep.count_below_one;
    } else {
      ++rep.count_above_one;
    }
  }
}

// Eigenvalues of R^{-T} S R^{-1} for upper triangular R.
Vector similar_eigenvalues(const DenseMatrix& r, const DenseMatrix& s) {
  const auto rt = r.transpose().triangularView<Eigen::Lower>();
  DenseMatrix left = rt.solve(s);                               // R^{-T} S
  DenseMatrix sym = rt.solve(left.transpose()).transpose();     // R^{-T} S R^{-1}
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

SpectrumReport spectrum_report(const BlockAngularMatrix& mat, Index i, SpectrumTarget target,
                               double rho_shift, Index dense_cap) {
  mat.validate();
  if (i < 0 || i >= mat.num_blocks()) throw std::out_of_range("spectrum_report: block index out of range");
  const DenseMatrix c(mat.c[static_cast<std::size_t>(i)]);
  const DenseMatrix d(mat.d[static_cast<std::size_t>(i)]);
  const Index n = c.cols();
  if (n > dense_cap) {
    throw ConfigError("spectrum_report: N_i = " + std::to_string(n) + " exceeds the dense cap of " +
                      std::to_string(dense_cap) + "; analyze a smaller block or raise the cap");
  }

  SpectrumReport rep;
  rep.target = target;
  rep.block = i;
  rep.dim = n;
  rep.rank_c = numerical_rank(c);
  rep.rank_d = numerical_rank(d);
  DenseMatrix a(c.rows() + d.rows(), n);
  a << c, d;
  rep.rank_a = numerical_rank(a);

  const DenseMatrix p = c.transpose() * c;
  const DenseMatrix b = p + d.transpose() * d;

  if (target == SpectrumTarget::PinvB) {
    if (c.rows() < n || rep.rank_c < n) {
      throw StructuralError("spectrum_report: P = C^T C is singular for this block; use PhatInvB");
    }
    rep.rho_shift = 0.0;
    // P = R^T R from the QR factor of C, so errors scale with cond(C) rather than cond(C)^2.
    Eigen::HouseholderQR<DenseMatrix> qr(c);
    const DenseMatrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    const Vector ev = similar_eigenvalues(r, b);
    rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    classify(rep);

    rep.trace_direct = r.transpose().triangularView<Eigen::Lower>().solve(d.transpose()).squaredNorm();
    // D = Z C recovered as the minimum-norm least-squares solution of C^T Z^T = D^T.
    Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(c.transpose());
    const DenseMatrix z = cod.solve(d.transpose()).transpose();
    rep.factorization_residual = (z * c - d).norm() / std::max(1.0, d.norm());
    const DenseMatrix y = qr.householderQ() * DenseMatrix::Identity(c.rows(), n);
    rep.trace_formula = (z * y).squaredNorm();
    rep.frobenius_bound = z.squaredNorm();
    rep.eigen_sum = ev.sum();

    const bool counts = rep.count_unit == n - rep.rank_d && rep.count_above_one == rep.rank_d &&
                        rep.count_zero == 0 && rep.count_below_one == 0;
    const bool trace_ok = rel_close(rep.trace_direct, rep.trace_formula, 1e-10);
    const bool frob_ok = rep.trace_formula <= rep.frobenius_bound * (1.0 + 1e-12) + 1e-14;
    const bool sum_ok = rel_close(rep.eigen_sum, static_cast<double>(n) + rep.trace_direct, 1e-10);
    const bool fact_ok = rep.factorization_residual <= 1e-8;
    if (!fact_ok) rep.notes.push_back("D = Z C factorization residual above 1e-8");
    if (!counts) rep.notes.push_back("eigenvalue counts differ from (N - r unit, r above one)");
    if (!trace_ok) rep.notes.push_back("trace identity mismatch");
    if (!frob_ok) rep.notes.push_back("Frobenius bound violated");
    if (!sum_ok) rep.notes.push_back("eigenvalue sum differs from N + trace");
    rep.consistent = counts && trace_ok && frob_ok && sum_ok && fact_ok;
    return rep;
  }

  if (!(rho_shift > 0.0)) throw std::invalid_argument("spectrum_report: rho must be positive");
  rep.rho_shift = rho_shift;
  const DenseMatrix phat = p + rho_shift * DenseMatrix::Identity(n, n);
  Eigen::LLT<DenseMatrix> llt(phat);
  if (llt.info() != Eigen::Success) throw StructuralError("spectrum_report: P-hat is not positive definite");
  const DenseMatrix r = llt.matrixU();

  if (target == SpectrumTarget::PhatInvP) {
    const Vector ev = similar_eigenvalues(r, p);
    rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    classify(rep);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(p, Eigen::EigenvaluesOnly);
    const Vector lam = es.eigenvalues();  // ascending; the first n - rank(C) span the null space
    const Index nulls = n - rep.rank_c;
    for (Index k = 0; k < n; ++k) {
      rep.expected_eigenvalues.push_back(k < nulls ? 0.0 : lam[k] / (lam[k] + rho_shift));
    }
    std::sort(rep.expected_eigenvalues.begin(), rep.expected_eigenvalues.end());
    for (Index k = 0; k < n; ++k) {
      rep.expected_max_error = std::max(
          rep.expected_max_error,
          std::abs(rep.eigenvalues[static_cast<std::size_t>(k)] - rep.expected_eigenvalues[static_cast<std::size_t>(k)]));
    }
    const bool match = rep.expected_max_error <= 1e-10;
    const bool zeros = rep.count_zero == nulls;
    if (!match) rep.notes.push_back("eigenvalues differ from lambda/(lambda + rho)");
    if (!zeros) rep.notes.push_back("zero-eigenvalue count differs from N - rank(C)");
    rep.consistent = match && zeros;
    return rep;
  }

  // P-hat^{-1} B.
  const Vector ev = similar_eigenvalues(r, b);
  rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  classify(rep);
  rep.trace_direct = (d * llt.solve(d.transpose())).trace();

  // Split D = W + W_perp by projecting onto the row space of C.
  Eigen::HouseholderQR<DenseMatrix> qr(c.transpose());
  const DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(n, rep.rank_c);
  const DenseMatrix w = (d * q) * q.transpose();
  const DenseMatrix w_perp = d - w;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(p);
  const Index nulls = n - rep.rank_c;
  const DenseMatrix v2 = es.eigenvectors().leftCols(nulls);
  const DenseMatrix v1 = es.eigenvectors().rightCols(rep.rank_c);
  const Vector lam1 = es.eigenvalues().tail(rep.rank_c).array() + rho_shift;
  double formula = 0.0;
  for (Index j = 0; j < d.rows(); ++j) {
    const Vector dj = (w.row(j) + w_perp.row(j)).transpose();
    const Vector proj1 = (v1.transpose() * dj).array() / lam1.array().sqrt();
    const Vector proj2 = v2.transpose() * w_perp.row(j).transpose();
    formula += proj1.squaredNorm() + proj2.squaredNorm() / rho_shift;
  }
  rep.trace_formula = formula;
  rep.upper_bound = 1.0 + rep.trace_direct;

  if (d.size() > 0) {
    Eigen::BDCSVD<DenseMatrix> svd(d);
    const Vector& s = svd.singularValues();
    const double cut = s.size() ? 1e-10 * s[0] : 0.0;
    for (Index k = 0; k < s.size(); ++k) {
      if (s[k] > cut && s[k] * s[k] > rho_shift) ++rep.inertia_above_one;
    }
  }

  const bool counts = rep.count_zero == n - rep.rank_a && rep.count_below_one == rep.rank_a - rep.rank_d &&
                      rep.count_above_one == rep.rank_d && rep.count_unit == 0;
  bool bounded = true;
  for (double v : rep.eigenvalues) {
    if (v > 1.0 + rep.tolerance && !(v < rep.upper_bound)) bounded = false;
  }
  const bool trace_ok = rel_close(rep.trace_direct, rep.trace_formula, 1e-10);
  if (!counts) {
    rep.notes.push_back("eigenvalue counts differ from (N - s, s - r, r)");
    if (rep.inertia_above_one != rep.rank_d) {
      rep.notes.push_back("only " + std::to_string(rep.inertia_above_one) + " of the " +
                          std::to_string(rep.rank_d) +
                          " nonzero singular values of D_i satisfy sigma^2 > rho, which bounds the "
                          "number of eigenvalues above one");
    }
  }
  if (!bounded) rep.notes.push_back("eigenvalue above 1 + trace bound");
  if (!trace_ok) rep.notes.push_back("trace expansion mismatch");
  rep.consistent = counts && bounded && trace_ok;
  return rep;
}

}  // namespace icd
