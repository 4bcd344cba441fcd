#include "icd/complexity.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace icd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

long long ceil_count(double v) {
  if (!std::isfinite(v)) return std::numeric_limits<long long>::max();
  return v <= 0.0 ? 0 : static_cast<long long>(std::ceil(v));
}

void check_common(const BoundInputs& in, std::vector<std::string>& violated) {
  if (!(in.c > 0.0)) violated.push_back("c > 0");
  if (!(in.alpha >= 0.0)) violated.push_back("alpha >= 0");
  if (!(in.beta >= 0.0)) violated.push_back("beta >= 0");
  if (!(in.epsilon > 0.0)) violated.push_back("epsilon > 0");
  if (!(in.rho > 0.0 && in.rho < 1.0)) violated.push_back("0 < rho < 1");
  if (!(in.xi0 > 0.0)) violated.push_back("xi0 > 0");
}

}  // namespace

SigmaU sigma_u(double c1, double alpha, double beta) {
  if (!(c1 > 0.0)) throw std::invalid_argument("sigma_u: c1 must be positive");
  SigmaU out;
  out.sigma = std::sqrt(alpha * alpha + 4.0 * beta / c1);
  out.u = 0.5 * c1 * (alpha + out.sigma);
  out.feasible = out.sigma < 1.0;
  return out;
}

double case_i_epsilon_lower_bound(double c1, double alpha, double beta, double rho) {
  return 0.5 * c1 * (alpha + std::sqrt(alpha * alpha + 4.0 * beta / (c1 * rho)));
}

BoundResult iterations_case_i(const BoundInputs& in) {
  BoundResult out;
  check_common(in, out.violated);
  if (!out.violated.empty()) {
    out.bound = kNaN;
    return out;
  }
  const double c1 = in.c;
  const SigmaU su = sigma_u(c1, in.alpha, in.beta);
  out.sigma = su.sigma;
  out.u = su.u;
  out.epsilon_lower_bound = case_i_epsilon_lower_bound(c1, in.alpha, in.beta, in.rho);
  out.gamma = 1.0 - (in.epsilon - in.alpha * c1) / c1;

  if (!(out.epsilon_lower_bound < in.epsilon)) {
    out.violated.push_back("(c1/2)(alpha + sqrt(alpha^2 + 4 beta/(c1 rho))) = " +
                           fmt(out.epsilon_lower_bound) + " < epsilon");
  }
  if (!(in.epsilon < (1.0 + in.alpha) * c1)) out.violated.push_back("epsilon < (1 + alpha) c1");
  if (!(in.epsilon < in.xi0)) out.violated.push_back("epsilon < xi0");
  if (!su.feasible) out.violated.push_back("sigma = " + fmt(su.sigma) + " < 1");
  if (!out.violated.empty()) {
    out.bound = kNaN;
    return out;
  }

  const double lead = c1 / (in.epsilon - in.alpha * c1);
  out.shift = in.beta * lead;
  const double k1 = lead * std::log((in.epsilon - out.shift) / (in.epsilon * in.rho - out.shift));
  const double closed = c1 / (in.epsilon - out.u) - c1 / (in.xi0 - out.u);
  double k2 = closed;
  if (out.sigma > 0.0) {
    const double logged = std::log((in.xi0 - out.u) / (in.epsilon - out.u)) / out.sigma;
    if (logged < closed) {
      k2 = logged;
      out.used_log_branch = true;
    }
  }
  out.bound = k1 + k2 + 2.0;
  out.iterations = ceil_count(out.bound);
  out.feasible = true;
  return out;
}

BoundResult iterations_case_ii(const BoundInputs& in) {
  BoundResult out;
  check_common(in, out.violated);
  if (!out.violated.empty()) {
    out.bound = kNaN;
    return out;
  }
  const double c2 = in.c;
  const double ac = in.alpha * c2;
  out.gamma = 1.0 + in.alpha - 1.0 / c2;
  if (!(ac < 1.0)) out.violated.push_back("alpha c2 < 1");
  if (!(1.0 <= (1.0 + in.alpha) * c2)) out.violated.push_back("1 <= (1 + alpha) c2");
  if (ac < 1.0) {
    out.shift = in.beta * c2 / (1.0 - ac);
    out.epsilon_lower_bound = out.shift / in.rho;
    if (!(out.epsilon_lower_bound < in.epsilon)) {
      out.violated.push_back("beta c2/(rho (1 - alpha c2)) = " + fmt(out.epsilon_lower_bound) +
                             " < epsilon");
    }
  }
  if (!(in.epsilon < in.xi0)) out.violated.push_back("epsilon < xi0");
  if (!out.violated.empty()) {
    out.bound = kNaN;
    return out;
  }
  out.bound = c2 / (1.0 - ac) * std::log((in.xi0 - out.shift) / (in.epsilon * in.rho - out.shift));
  out.iterations = ceil_count(out.bound);
  out.feasible = true;
  return out;
}

double exact_iterations_case_i(double c1, double epsilon, double rho, double xi0,
                               bool subtract_initial) {
  double k = c1 / epsilon * (1.0 + std::log(1.0 / rho)) + 2.0;
  if (subtract_initial) k -= c1 / xi0;
  return k;
}

double exact_iterations_case_ii(double c2, double epsilon, double rho, double xi0) {
  return c2 * std::log(xi0 / (epsilon * rho));
}

ConvexConstants constants_composite_convex(Index n, double radius_sq, double xi0, double epsilon) {
  if (n <= 0 || !(radius_sq > 0.0) || !(xi0 > 0.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("constants_composite_convex: inputs must be positive");
  }
  const double nn = static_cast<double>(n);
  return {2.0 * nn * std::max(radius_sq, xi0), 2.0 * nn * radius_sq / epsilon};
}

StronglyConvexConstants constants_strongly_convex(Index n, double mu_f, double mu_psi) {
  if (n <= 0) throw std::invalid_argument("constants_strongly_convex: n must be positive");
  if (!(mu_f >= 0.0) || !(mu_psi >= 0.0) || !(mu_f + mu_psi > 0.0)) {
    throw std::invalid_argument("constants_strongly_convex: need mu_f, mu_psi >= 0 with a positive sum");
  }
  if (mu_f > 1.0) {
    throw std::invalid_argument(
        "constants_strongly_convex: mu_f must be <= 1 (the block Lipschitz bound caps it)");
  }
  StronglyConvexConstants out;
  out.mu = (mu_f + mu_psi) / (1.0 + mu_psi);
  out.c2 = static_cast<double>(n) / out.mu;
  out.alpha_max = out.mu / static_cast<double>(n);
  return out;
}

double constants_smooth_convex(double radius_sq) {
  if (!(radius_sq > 0.0)) throw std::invalid_argument("constants_smooth_convex: R^2 must be positive");
  return 2.0 * radius_sq;
}

double constants_smooth_strongly_convex(double mu_f) {
  if (!(mu_f > 0.0 && mu_f < 1.0)) {
    throw std::invalid_argument("constants_smooth_strongly_convex: need 0 < mu_f < 1");
  }
  return 1.0 / mu_f;
}

double strong_convexity_modulus(const CompositeObjective& objective, const std::vector<double>& w,
                                Index dense_limit) {
  const BlockPartition& part = objective.partition();
  if (static_cast<Index>(w.size()) != part.num_blocks()) {
    throw std::invalid_argument("strong_convexity_modulus: one weight per block required");
  }
  if (part.dim() > dense_limit) {
    throw ConfigError("strong_convexity_modulus: dimension " + std::to_string(part.dim()) +
                      " exceeds the dense limit; supply mu_f explicitly");
  }
  const SparseMatrix& a = objective.smooth().matrix();
  const DenseMatrix hess = DenseMatrix(a.transpose() * a);
  DenseMatrix metric = DenseMatrix::Zero(part.dim(), part.dim());
  for (Index i = 0; i < part.num_blocks(); ++i) {
    const double scale = w[static_cast<std::size_t>(i)] * objective.lipschitz(i);
    metric.block(part.offset(i), part.offset(i), part.size(i), part.size(i)) =
        scale * DenseMatrix(objective.block_operator(i).assemble());
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(hess, metric, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw StructuralError("strong_convexity_modulus: metric is not positive definite");
  }
  return std::max(es.eigenvalues().minCoeff(), 0.0);
}

RadiusEstimate level_set_radius_surrogate(const CompositeObjective& objective, const Vector& x0,
                                          const std::vector<double>& w,
                                          std::optional<RadiusSampling> sampling) {
  const auto& x_star = objective.optimal_point();
  if (!x_star) throw ConfigError("level_set_radius_surrogate: the optimal point x* is required");
  const BlockPartition& part = objective.partition();
  part.check_dim(x0);
  const WeightVector weights(w);
  auto wnorm = [&](const Vector& v) { return weighted_norm(v, weights, part, objective.metric()); };

  RadiusEstimate out;
  out.value = wnorm(x0 - *x_star);
  out.provenance = "surrogate:point";
  if (!sampling || sampling->samples <= 0) return out;

  const double level = objective.value_at(x0);
  std::mt19937_64 rng(sampling->seed);
  std::normal_distribution<double> normal;
  for (Index s = 0; s < sampling->samples; ++s) {
    Vector d(part.dim());
    for (Index j = 0; j < d.size(); ++j) d[j] = normal(rng);
    const double dn = wnorm(d);
    if (dn == 0.0) continue;
    d /= dn;
    // Bracket the crossing of the level set along x* + s d, then bisect.
    double lo = 0.0;
    double hi = std::max(out.value, 1e-12);
    int grow = 0;
    while (objective.value_at(*x_star + hi * d) <= level && grow < 60) {
      lo = hi;
      hi *= 2.0;
      ++grow;
    }
    if (grow == 60) {
      out.value = std::numeric_limits<double>::infinity();
      break;
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (objective.value_at(*x_star + mid * d) <= level) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.value = std::max(out.value, lo);
  }
  out.provenance = "surrogate:sampled(" + std::to_string(sampling->samples) + ")";
  return out;
}

}  // namespace icd
