#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icd/objective.hpp"

namespace icd {

/// Inputs of the high-probability iteration bounds. `c` is c1 for the
/// sublinear case and c2 for the linear case; xi0 = F(x0) - F*.
struct BoundInputs {
  double c = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  double rho = 0.0;
  double xi0 = 0.0;
};

struct BoundResult {
  bool feasible = false;
  /// Smallest integer K satisfying the bound (0 when infeasible).
  long long iterations = 0;
  /// Real-valued right-hand side of the bound (NaN when infeasible).
  double bound = 0.0;
  /// Sublinear case: sigma and u. Linear case: sigma = 0, u = 0.
  double sigma = 0.0;
  double u = 0.0;
  /// Contraction factor: 1 - (eps - alpha c1)/c1 or 1 + alpha - 1/c2.
  double gamma = 0.0;
  /// beta c1/(eps - alpha c1) or beta c2/(1 - alpha c2).
  double shift = 0.0;
  /// Smallest admissible epsilon for the given confidence.
  double epsilon_lower_bound = 0.0;
  /// Sublinear case: whether the log term was chosen in the minimum.
  bool used_log_branch = false;
  std::vector<std::string> violated;
};

struct SigmaU {
  double sigma = 0.0;
  double u = 0.0;
  bool feasible = true;  // sigma < 1
};

SigmaU sigma_u(double c1, double alpha, double beta);

/// (c1/2)(alpha + sqrt(alpha^2 + 4 beta/(c1 rho))).
double case_i_epsilon_lower_bound(double c1, double alpha, double beta, double rho);

/// Bound for E[xi_{k+1}|x_k] <= (1+alpha) xi_k - xi_k^2/c1 + beta.
BoundResult iterations_case_i(const BoundInputs& in);

/// Bound for E[xi_{k+1}|x_k] <= (1 + alpha - 1/c2) xi_k + beta.
BoundResult iterations_case_ii(const BoundInputs& in);

/// Exact-update counts: (c1/eps)(1 + log(1/rho)) + 2, minus c1/xi0 when
/// `subtract_initial` is set.
double exact_iterations_case_i(double c1, double epsilon, double rho, double xi0,
                               bool subtract_initial);
/// c2 log(xi0 / (eps rho)).
double exact_iterations_case_ii(double c2, double epsilon, double rho, double xi0);

struct ConvexConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// c1 = 2n max{R^2, xi0}, c2 = 2n R^2 / eps (uniform probabilities).
ConvexConstants constants_composite_convex(Index n, double radius_sq, double xi0, double epsilon);

struct StronglyConvexConstants {
  double mu = 0.0;
  double c2 = 0.0;
  /// Admissible alpha satisfy 0 <= alpha < alpha_max.
  double alpha_max = 0.0;
};

/// mu = (mu_f + mu_psi)/(1 + mu_psi), c2 = n/mu, alpha_max = mu/n.
StronglyConvexConstants constants_strongly_convex(Index n, double mu_f, double mu_psi);

/// Smooth convex case: c1 = 2 R^2 in the l p^{-1} norm.
double constants_smooth_convex(double radius_sq);
/// Smooth strongly convex case: c2 = 1/mu_f, needs 0 < mu_f < 1.
double constants_smooth_strongly_convex(double mu_f);

/// Largest mu with f(y) >= f(x) + <grad f(x), y-x> + mu/2 ||y-x||_w^2, i.e.
/// the smallest generalized eigenvalue of A^T A against blockdiag(w_i l_i B_i).
/// Dense; dimensions above `dense_limit` must be supplied by the caller.
double strong_convexity_modulus(const CompositeObjective& objective, const std::vector<double>& w,
                                Index dense_limit = 2000);

struct RadiusEstimate {
  double value = 0.0;
  /// "surrogate:point" or "surrogate:sampled(<count>)".
  std::string provenance;
};

struct RadiusSampling {
  Index samples = 0;
  std::uint64_t seed = 0;
};

/// ||x0 - x*||_w as a stand-in for the level-set radius. With sampling, also
/// maximizes ||y - x*||_w over points y on random rays from x* with F(y) <= F(x0).
RadiusEstimate level_set_radius_surrogate(const CompositeObjective& objective, const Vector& x0,
                                          const std::vector<double>& w,
                                          std::optional<RadiusSampling> sampling = std::nullopt);

}  // namespace icd
