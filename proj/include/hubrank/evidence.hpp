// Copyright 2026 The hubrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "hubrank/errors.hpp"
#include "hubrank/features.hpp"
#include "hubrank/svd.hpp"

namespace hubrank {

/// Stopping rule for the evidence maximizers. Iteration stops once the prior/noise
/// precision ratio t = alpha / beta moves by at most tolerance * t.
struct EvidenceOptions {
  double tolerance = 1e-5;
  int max_iterations = 200;
  double initial_alpha = 1.0;
  double initial_beta = 1.0;
};

/// Sufficient condition for the fixed-point map to have a fixed point: r < n and the
/// label energy z_i^2 roughly follows the ordering of sigma_i^2.
struct ConvergenceReport {
  bool rank_condition = false;
  /// sum_{i,j} (z_i^2 - z_j^2)(sigma_i^2 - sigma_j^2), evaluated in closed form.
  double ordering_statistic = 0.0;
  /// lim_{t -> inf} f(t) / t.
  double slope_at_infinity = 0.0;
  /// lim_{t -> 0} f(t); only defined when r < n.
  std::optional<double> limit_at_zero;
  bool guaranteed = false;
  /// ordering_statistic > 0 agrees with slope_at_infinity < 1.
  bool consistent = true;
};

struct EvidenceSolution {
  double alpha = 0.0;
  double beta = 0.0;
  double t = 0.0;
  VectorXd m;
  double gamma = 0.0;
  double log_evidence = 0.0;
  double normalized_evidence = 0.0;
  int iterations = 0;
  bool converged = false;
  ConvergenceReport convergence;
};

struct EvidenceValue {
  double log_evidence = 0.0;
  VectorXd m;
};

enum class Backend { naive, mackay, fixed_point };

inline std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::naive: return "naive";
    case Backend::mackay: return "mackay";
    case Backend::fixed_point: return "fixed-point";
  }
  return "unknown";
}

inline Backend parse_backend(std::string_view name) {
  if (name == "naive") return Backend::naive;
  if (name == "mackay" || name == "svd" || name == "svd-optimized") return Backend::mackay;
  if (name == "fixed-point" || name == "fixed_point" || name == "fixed") return Backend::fixed_point;
  throw InputError("unknown backend '" + std::string(name) + "' (expected naive, mackay or fixed-point)");
}

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)

inline void require_precisions(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw DomainError("evidence needs alpha > 0 and beta > 0, got alpha = " +
                      std::to_string(alpha) + ", beta = " + std::to_string(beta));
}

/// Log evidence from the spectrum alone, O(r).
inline double spectral_log_evidence(const VectorXd& sigma, const ProjectedLabels& p, Index n,
                                    Index d, double alpha, double beta) {
  double mm = 0.0, res = p.residual_energy, logdet = 0.0;
  for (Index i = 0; i < sigma.size(); ++i) {
    const double s2 = sigma(i) * sigma(i);
    const double z2 = p.z_head(i) * p.z_head(i);
    const double lam = alpha + beta * s2;
    mm += beta * beta * s2 * z2 / (lam * lam);
    res += alpha * alpha * z2 / (lam * lam);
    logdet += std::log(lam);
  }
  logdet += static_cast<double>(d - sigma.size()) * std::log(alpha);
  const double nd = static_cast<double>(n);
  return 0.5 * nd * std::log(beta) + 0.5 * static_cast<double>(d) * std::log(alpha) -
         0.5 * nd * kLog2Pi - 0.5 * beta * res - 0.5 * alpha * mm - 0.5 * logdet;
}

/// Quantities of one MacKay step written in t = alpha / beta.
struct RatioTerms {
  double gamma = 0.0;
  double weight_norm2 = 0.0;   // m^T m
  double residual2 = 0.0;      // ||F m - y||^2
};

inline RatioTerms ratio_terms(const VectorXd& sigma, const ProjectedLabels& p, double t) {
  RatioTerms out;
  out.residual2 = p.residual_energy;
  for (Index i = 0; i < sigma.size(); ++i) {
    const double s2 = sigma(i) * sigma(i);
    const double z2 = p.z_head(i) * p.z_head(i);
    const double lam = t + s2;
    out.gamma += s2 / lam;
    out.weight_norm2 += s2 * z2 / (lam * lam);
    const double shrink = 1.0 + s2 / t;
    out.residual2 += z2 / (shrink * shrink);
  }
  return out;
}

inline double spectral_gamma(const VectorXd& sigma, double alpha, double beta) {
  double g = 0.0;
  for (Index i = 0; i < sigma.size(); ++i) {
    const double bs2 = beta * sigma(i) * sigma(i);
    g += bs2 / (alpha + bs2);
  }
  return g;
}

inline VectorXd posterior_mean(const SvdFactors& svd, const ProjectedLabels& p, double t) {
  const VectorXd s = svd.singular_values;
  const VectorXd scale = s.array() / (t + s.array().square());
  return svd.right * scale.cwiseProduct(p.z_head);
}

inline void require_maximizable(const SvdFactors& svd, const LabelVector& y) {
  if (svd.samples < 2) throw InputError("evidence maximization needs at least two samples");
  if (y.size() != svd.samples)
    throw InputError("label length " + std::to_string(y.size()) + " does not match " +
                     std::to_string(svd.samples) + " feature rows");
  if (svd.rank() == 0) throw DegenerateLabelsError("features carry no signal (numerical rank 0)");
  if (y.is_constant()) throw DegenerateLabelsError("constant labels have no evidence maximizer");
}

inline void require_signal(const ProjectedLabels& p) {
  if (!(p.z_head.squaredNorm() > 0.0))
    throw DegenerateLabelsError("labels are orthogonal to the feature column space");
}

/// Keeps the iterate with the highest evidence for the non-converged return path.
struct BestIterate {
  double alpha = 0.0, beta = 0.0, log_evidence = -std::numeric_limits<double>::infinity();
  int iteration = 0;
  void offer(double a, double b, double l, int it) {
    if (l > log_evidence) {
      alpha = a;
      beta = b;
      log_evidence = l;
      iteration = it;
    }
  }
};

inline bool usable(double a, double b) {
  return std::isfinite(a) && std::isfinite(b) && a > 0.0 && b > 0.0;
}

}  // namespace detail

/// Log evidence L(alpha, beta) of the Bayesian linear model with prior N(0, alpha^-1 I) and noise
/// precision beta, together with the posterior mean m. Uses the SVD identities, O(D r).
inline EvidenceValue evaluate_evidence(const SvdFactors& svd, const LabelVector& y, double alpha,
                                       double beta) {
  detail::require_precisions(alpha, beta);
  const ProjectedLabels p = project_labels(svd, y);
  EvidenceValue out;
  out.log_evidence = detail::spectral_log_evidence(svd.singular_values, p, svd.samples, svd.dims,
                                                   alpha, beta);
  out.m = detail::posterior_mean(svd, p, alpha / beta);
  return out;
}

/// Scalar map t' = f(t) induced by one MacKay step, using only the first r entries of z.
inline double fixed_point_map(const VectorXd& sigma, const ProjectedLabels& p, Index n, double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw DomainError("fixed-point map needs t > 0, got " + std::to_string(t));
  if (p.z_head.size() != sigma.size())
    throw InputError("projected labels and spectrum have different lengths");
  const detail::RatioTerms rt = detail::ratio_terms(sigma, p, t);
  if (!(rt.weight_norm2 > 0.0))
    throw DegenerateLabelsError("labels are orthogonal to the feature column space");
  const double nd = static_cast<double>(n);
  return rt.gamma / (nd - rt.gamma) * rt.residual2 / rt.weight_norm2;
}

inline double fixed_point_map(const SvdFactors& svd, const ProjectedLabels& p, double t) {
  return fixed_point_map(svd.singular_values, p, svd.samples, t);
}

inline ConvergenceReport check_convergence(const VectorXd& sigma, const ProjectedLabels& p, Index n) {
  const Index r = sigma.size();
  if (r < 1) throw InputError("convergence check needs rank >= 1");
  if (p.z_head.size() != r) throw InputError("projected labels and spectrum have different lengths");

  const double nd = static_cast<double>(n);
  const VectorXd s2 = sigma.array().square();
  const VectorXd z2 = p.z_head.array().square();
  const double sum_s2 = s2.sum();
  const double sum_z2_head = z2.sum();
  const double sum_z2 = sum_z2_head + p.residual_energy;
  const double sum_s2z2 = s2.dot(z2);

  ConvergenceReport rep;
  rep.rank_condition = r < n;
  rep.ordering_statistic = 2.0 * nd * sum_s2z2 - 2.0 * sum_s2 * sum_z2;
  rep.slope_at_infinity = sum_s2z2 > 0.0 ? (sum_s2 / nd) * (sum_z2 / sum_s2z2)
                                         : std::numeric_limits<double>::infinity();
  if (rep.rank_condition && sum_z2_head > 0.0)
    rep.limit_at_zero = (static_cast<double>(r) / (nd - static_cast<double>(r))) *
                        (p.residual_energy / sum_z2_head);
  rep.guaranteed = rep.rank_condition && rep.ordering_statistic > 0.0;
  rep.consistent = (rep.ordering_statistic > 0.0) == (rep.slope_at_infinity < 1.0);
  return rep;
}

inline ConvergenceReport check_convergence(const SvdFactors& svd, const ProjectedLabels& p) {
  return check_convergence(svd.singular_values, p, svd.samples);
}

/// Alternating MacKay updates run directly on (alpha, beta). The naive variant builds
/// A = alpha I + beta F^T F and solves densely every iteration, O(D^3 + nD) per loop after an
/// O(nD^2) Gram product; the SVD variant applies A^-1 through the right singular vectors.
enum class MacKayVariant { naive, svd_optimized };

inline EvidenceSolution maximize_evidence_mackay(const FeatureMatrix& features, const SvdFactors& svd,
                                                 const LabelVector& labels, MacKayVariant variant,
                                                 const EvidenceOptions& opt = {}) {
  detail::require_maximizable(svd, labels);
  if (features.samples() != svd.samples || features.dims() != svd.dims)
    throw InputError("feature matrix does not match its SVD factors");
  detail::require_precisions(opt.initial_alpha, opt.initial_beta);

  const MatrixXd& f = features.data();
  const VectorXd& y = labels.values();
  const VectorXd& sigma = svd.singular_values;
  const Index n = f.rows();
  const Index d = f.cols();
  const double nd = static_cast<double>(n);
  const ProjectedLabels proj = project_labels(svd, labels);
  detail::require_signal(proj);
  const VectorXd fty = f.transpose() * y;

  MatrixXd gram;
  if (variant == MacKayVariant::naive) {
    gram = MatrixXd::Zero(d, d);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(f.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  }

  // Empty result when the dense factorization breaks down (beta so large that A loses
  // positive definiteness in floating point).
  auto weights = [&](double alpha, double beta) -> std::optional<VectorXd> {
    if (variant == MacKayVariant::naive) {
      MatrixXd a = beta * gram;
      a.diagonal().array() += alpha;
      Eigen::LLT<MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) return std::nullopt;
      return VectorXd(beta * llt.solve(fty));
    }
    const VectorXd lam = alpha + beta * sigma.array().square();
    return VectorXd(beta * (svd.right * ((svd.right.transpose() * fty).array() / lam.array()).matrix()));
  };

  double alpha = opt.initial_alpha;
  double beta = opt.initial_beta;
  double t = alpha / beta;
  detail::BestIterate best;
  bool converged = false;
  int it = 0;
  while (it < opt.max_iterations) {
    const double gamma = detail::spectral_gamma(sigma, alpha, beta);
    const std::optional<VectorXd> solved = weights(alpha, beta);
    if (!solved) break;
    const VectorXd& m = *solved;
    const double mm = m.squaredNorm();
    if (!(mm > 0.0)) break;
    const double res = (f * m - y).squaredNorm();
    const double next_alpha = gamma / mm;
    const double next_beta = (nd - gamma) / res;
    ++it;
    if (!detail::usable(next_alpha, next_beta)) break;
    const double next_t = next_alpha / next_beta;
    const bool done = std::abs(next_t - t) <= opt.tolerance * t;
    alpha = next_alpha;
    beta = next_beta;
    t = next_t;
    best.offer(alpha, beta,
               detail::spectral_log_evidence(sigma, proj, n, d, alpha, beta), it);
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged && best.iteration > 0) {
    alpha = best.alpha;
    beta = best.beta;
    t = alpha / beta;
  }

  EvidenceSolution sol;
  sol.alpha = alpha;
  sol.beta = beta;
  sol.t = t;
  sol.iterations = it;
  sol.converged = converged;
  sol.gamma = detail::spectral_gamma(sigma, alpha, beta);
  std::optional<VectorXd> final_m = weights(alpha, beta);
  if (!final_m)
    throw DomainError("dense solve failed at alpha = " + std::to_string(alpha) + ", beta = " + std::to_string(beta));
  sol.m = std::move(*final_m);

  // L(alpha, beta) evaluated along this backend's own route.
  double logdet = 0.0;
  if (variant == MacKayVariant::naive) {
    MatrixXd a = beta * gram;
    a.diagonal().array() += alpha;
    Eigen::LLT<MatrixXd> llt(a);
    logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  } else {
    logdet = (alpha + beta * sigma.array().square()).log().sum() +
             static_cast<double>(d - sigma.size()) * std::log(alpha);
  }
  const double res = (f * sol.m - y).squaredNorm();
  sol.log_evidence = 0.5 * nd * std::log(beta) + 0.5 * static_cast<double>(d) * std::log(alpha) -
                     0.5 * nd * detail::kLog2Pi - 0.5 * beta * res -
                     0.5 * alpha * sol.m.squaredNorm() - 0.5 * logdet;
  sol.normalized_evidence = sol.log_evidence / nd;
  sol.convergence = check_convergence(svd, proj);
  return sol;
}

/// Evidence maximization by iterating the scalar map t' = f(t); each loop is O(r) once the
/// SVD and z = U_r^T y are available.
inline EvidenceSolution maximize_evidence_fixed_point(const SvdFactors& svd, const LabelVector& labels,
                                                      const EvidenceOptions& opt = {}) {
  detail::require_maximizable(svd, labels);
  detail::require_precisions(opt.initial_alpha, opt.initial_beta);
  const ProjectedLabels proj = project_labels(svd, labels);
  detail::require_signal(proj);
  const VectorXd& sigma = svd.singular_values;
  const Index n = svd.samples;
  const double nd = static_cast<double>(n);

  double alpha = opt.initial_alpha;
  double beta = opt.initial_beta;
  double t = alpha / beta;
  detail::BestIterate best;
  bool converged = false;
  int it = 0;
  while (it < opt.max_iterations) {
    const detail::RatioTerms rt = detail::ratio_terms(sigma, proj, t);
    if (!(rt.weight_norm2 > 0.0)) break;
    const double next_alpha = rt.gamma / rt.weight_norm2;
    const double next_beta = (nd - rt.gamma) / rt.residual2;
    ++it;
    if (!detail::usable(next_alpha, next_beta)) break;
    const double next_t = next_alpha / next_beta;
    const bool done = std::abs(next_t - t) <= opt.tolerance * t;
    alpha = next_alpha;
    beta = next_beta;
    t = next_t;
    best.offer(alpha, beta, detail::spectral_log_evidence(sigma, proj, n, svd.dims, alpha, beta), it);
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged && best.iteration > 0) {
    alpha = best.alpha;
    beta = best.beta;
    t = alpha / beta;
  }

  EvidenceSolution sol;
  sol.alpha = alpha;
  sol.beta = beta;
  sol.t = t;
  sol.iterations = it;
  sol.converged = converged;
  sol.gamma = detail::spectral_gamma(sigma, alpha, beta);
  sol.m = detail::posterior_mean(svd, proj, t);
  sol.log_evidence = detail::spectral_log_evidence(sigma, proj, n, svd.dims, alpha, beta);
  sol.normalized_evidence = sol.log_evidence / nd;
  sol.convergence = check_convergence(svd, proj);
  return sol;
}

/// Runs the requested backend. The feature matrix is only read by the MacKay variants.
inline EvidenceSolution maximize_evidence(const FeatureMatrix& features, const SvdFactors& svd,
                                          const LabelVector& labels, Backend backend,
                                          const EvidenceOptions& opt = {}) {
  switch (backend) {
    case Backend::naive:
      return maximize_evidence_mackay(features, svd, labels, MacKayVariant::naive, opt);
    case Backend::mackay:
      return maximize_evidence_mackay(features, svd, labels, MacKayVariant::svd_optimized, opt);
    case Backend::fixed_point:
      return maximize_evidence_fixed_point(svd, labels, opt);
  }
  throw InputError("unknown backend");
}

/// Log-spaced (alpha, beta) grid for the exhaustive oracle.
struct GridSpec {
  double alpha_min = 1e-6;
  double alpha_max = 1e6;
  double beta_min = 1e-6;
  double beta_max = 1e6;
  int alpha_points = 200;
  int beta_points = 200;

  double log_step_alpha() const { return std::log(alpha_max / alpha_min) / (alpha_points - 1); }
  double log_step_beta() const { return std::log(beta_max / beta_min) / (beta_points - 1); }
  double alpha_at(int i) const { return alpha_min * std::exp(i * log_step_alpha()); }
  double beta_at(int j) const { return beta_min * std::exp(j * log_step_beta()); }
};

struct OracleResult {
  double alpha = 0.0;
  double beta = 0.0;
  double log_evidence = -std::numeric_limits<double>::infinity();
  int alpha_index = -1;
  int beta_index = -1;
};

/// Brute-force maximizer of L(alpha, beta) over a log grid. Verification only.
inline OracleResult oracle_maximize(const SvdFactors& svd, const LabelVector& labels,
                                    const GridSpec& grid = {}) {
  if (grid.alpha_points < 50 || grid.beta_points < 50)
    throw InputError("oracle grid needs at least 50 points per axis");
  if (!(grid.alpha_min > 0.0) || !(grid.beta_min > 0.0) || !(grid.alpha_max > grid.alpha_min) ||
      !(grid.beta_max > grid.beta_min))
    throw InputError("oracle grid bounds must be positive and increasing");
  const ProjectedLabels proj = project_labels(svd, labels);
  OracleResult best;
  for (int i = 0; i < grid.alpha_points; ++i) {
    const double a = grid.alpha_at(i);
    for (int j = 0; j < grid.beta_points; ++j) {
      const double b = grid.beta_at(j);
      const double l =
          detail::spectral_log_evidence(svd.singular_values, proj, svd.samples, svd.dims, a, b);
      if (l > best.log_evidence) {
        best = {a, b, l, i, j};
      }
    }
  }
  return best;
}

}  // namespace hubrank
