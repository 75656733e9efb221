#pragma once

// Recursive LMMSE estimator for white-mode jump linear systems with
// estimate-feedback terms:
//
//   xhat_{k+1} = L_k xhat_k + K_k y_{k+1} + J_k u_k
//
// The recursion carries the estimate, the state mean, and the second-order
// moments Sigma = E[x x^T], Lambda = E[xhat xhat^T] (= E[xhat x^T] by
// orthogonality), Upsilon = E[x] u^T, Delta = u u^T.

#include <Eigen/Dense>

#include <algorithm>
#include <utility>

#include "modal_lmmse/expectations.hpp"
#include "modal_lmmse/model.hpp"

namespace modal_lmmse {

struct FilterState {
  int k = 0;
  Vector xhat;     // LMMSE estimate of x_k given y_1..y_k
  Vector Ex;       // E[x_k]
  Matrix Sigma;    // E[x_k x_k^T]
  Matrix Lambda;   // E[xhat_k xhat_k^T]
  Matrix Upsilon;  // E[x_k] u_k^T
  Matrix Delta;    // u_k u_k^T
};

struct GainSet {
  Matrix K;         // n x m
  Matrix L;         // n x n
  Matrix J;         // n x p
  Matrix Gamma_xy;  // n x m innovation cross-covariance
  Matrix Gamma_yy;  // m x m innovation covariance
  bool used_pseudo_inverse = false;
};

namespace detail {

inline Matrix symmetrize(const Matrix& M) {
  return 0.5 * (M + M.transpose());
}

// Solve X * Gyy = Gxy for X with Gyy symmetric PSD. Cholesky on the
// nonsingular path; eigendecomposition pseudo-inverse with relative cutoff
// 1e-12 * lambda_max otherwise.
inline Matrix solve_gain(const Matrix& Gxy, const Matrix& Gyy,
                         bool* used_pseudo_inverse) {
  if (Gyy.rows() == 0) {
    if (used_pseudo_inverse) *used_pseudo_inverse = false;
    return Matrix::Zero(Gxy.rows(), 0);
  }
  Eigen::LLT<Matrix> llt(Gyy);
  if (llt.info() == Eigen::Success) {
    if (used_pseudo_inverse) *used_pseudo_inverse = false;
    return llt.solve(Gxy.transpose()).transpose();
  }
  if (used_pseudo_inverse) *used_pseudo_inverse = true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(Gyy);
  const Vector& ev = es.eigenvalues();
  const double cutoff = 1e-12 * ev.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff) inv(i) = 1.0 / ev(i);
  }
  return Gxy * es.eigenvectors() * inv.asDiagonal() *
         es.eigenvectors().transpose();
}

inline void check_moment_sanity(const FilterState& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.Sigma - s.Lambda,
                                           Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, s.Sigma.norm());
  if (es.eigenvalues().minCoeff() < -1e-8 * scale) {
    throw std::runtime_error(
        "filter: Sigma - Lambda lost positive semidefiniteness");
  }
}

}  // namespace detail

inline FilterState init(const Vector& x0_mean, const Matrix& P0,
                        const Vector& u0 = Vector(0)) {
  detail::require(P0.rows() == x0_mean.size() && P0.cols() == x0_mean.size(),
                  "init: P0 dim mismatch");
  detail::require((P0 - P0.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                  "init: P0 not symmetric");
  FilterState s;
  s.k = 0;
  s.xhat = x0_mean;
  s.Ex = x0_mean;
  s.Sigma = P0 + x0_mean * x0_mean.transpose();
  s.Lambda = x0_mean * x0_mean.transpose();
  s.Upsilon = x0_mean * u0.transpose();
  s.Delta = u0 * u0.transpose();
  return s;
}

// Time update of the first two state moments.
inline std::pair<Vector, Matrix> predict_moments(const FilterState& s,
                                                 const StepExpectations& dyn,
                                                 const Vector& u_k) {
  Vector Ex_next = dyn.EA * s.Ex + dyn.EB * u_k;
  Matrix Sigma_next = dyn.EASA + dyn.EAUB + dyn.EAUB.transpose() + dyn.EBDB +
                      dyn.ECC;
  return {std::move(Ex_next), detail::symmetrize(Sigma_next)};
}

// Innovation cross-covariance and covariance, assembled term by term.
// E[y_{k+1}] is computed internally; Gamma_yy is symmetrized afterwards.
inline std::pair<Matrix, Matrix> innovation_covariances(
    const FilterState& s, const Matrix& Sigma_next,
    const StepExpectations& e, const Vector& u_k) {
  const Matrix pred2 =
      e.EA * (s.Lambda * e.EA.transpose() + s.Upsilon * e.EB.transpose()) +
      e.EB * (s.Upsilon.transpose() * e.EA.transpose() +
              s.Delta * e.EB.transpose());
  Matrix Gxy = (Sigma_next - pred2) * e.EH.transpose();

  const Vector Ey_next =
      (e.EH * e.EA + e.EF) * s.Ex + e.EH * e.EB * u_k;  // E[y_{k+1}]

  const Matrix EHA_L = e.EH * e.EA * s.Lambda;  // E[H]E[A]Lambda
  Matrix Gyy = e.EHSH + e.EGG + e.EFLF - e.EF * s.Lambda * e.EF.transpose() -
               EHA_L * e.EA.transpose() * e.EH.transpose() + e.EHXF +
               e.EHXF.transpose() - EHA_L * e.EF.transpose() -
               e.EF * s.Lambda * e.EA.transpose() * e.EH.transpose() -
               e.EH * e.EA * s.Upsilon * e.EB.transpose() * e.EH.transpose() -
               e.EF * s.Upsilon * e.EB.transpose() * e.EH.transpose() -
               e.EH * e.EB * u_k * Ey_next.transpose();
  return {std::move(Gxy), detail::symmetrize(Gyy)};
}

inline GainSet gains(Matrix Gamma_xy, Matrix Gamma_yy,
                     const StepExpectations& e) {
  GainSet g;
  g.K = detail::solve_gain(Gamma_xy, Gamma_yy, &g.used_pseudo_inverse);
  const Matrix IKH =
      Matrix::Identity(e.EA.rows(), e.EA.rows()) - g.K * e.EH;
  g.L = IKH * e.EA - g.K * e.EF;
  g.J = IKH * e.EB;
  g.Gamma_xy = std::move(Gamma_xy);
  g.Gamma_yy = std::move(Gamma_yy);
  return g;
}

// Core measurement update given precomputed expectations. A zero-row y
// (m = 0) degenerates to the pure time update.
inline FilterState update_with_expectations(const FilterState& s,
                                            const Vector& y_next,
                                            const Vector& u_k,
                                            const Vector& u_next,
                                            const StepExpectations& e) {
  detail::require(y_next.size() == e.EH.rows(),
                  "update: measurement dim mismatch");
  auto [Ex_next, Sigma_next] = predict_moments(s, e, u_k);
  auto [Gxy, Gyy] = innovation_covariances(s, Sigma_next, e, u_k);
  GainSet g = gains(std::move(Gxy), std::move(Gyy), e);

  FilterState out;
  out.k = s.k + 1;
  out.xhat = g.L * s.xhat + g.K * y_next + g.J * u_k;
  out.Ex = std::move(Ex_next);
  out.Sigma = std::move(Sigma_next);
  Matrix Lambda_next =
      (g.L + g.K * e.EF) *
          (s.Lambda * e.EA.transpose() + s.Upsilon * e.EB.transpose()) +
      g.J * (s.Upsilon.transpose() * e.EA.transpose() +
             s.Delta * e.EB.transpose()) +
      g.K * e.EH * out.Sigma;
  out.Lambda = detail::symmetrize(Lambda_next);
  out.Upsilon = out.Ex * u_next.transpose();
  out.Delta = u_next * u_next.transpose();
  detail::check_moment_sanity(out);
  return out;
}

// One full recursion step: expectations at k and k+1 by enumeration, then
// the measurement update. dist_k supplies the dynamics-side law, dist_next
// the measurement-side law (whose dimension m may differ from step to step).
inline FilterState update(const FilterState& s, const Vector& y_next,
                          const Vector& u_k, const Vector& u_next,
                          const ModeDistribution& dist_k,
                          const ModeDistribution& dist_next) {
  StepExpectations e =
      dynamics_expectations(dist_k, s.Sigma, s.Upsilon, s.Delta);
  auto [Ex_next, Sigma_next] = predict_moments(s, e, u_k);
  measurement_expectations(dist_next, Sigma_next, s.Lambda, e.EA, e.EB,
                           s.Upsilon, e);
  return update_with_expectations(s, y_next, u_k, u_next, e);
}

// Time update only (empty scan, N = 0): K = 0, L = E[A], J = E[B].
inline FilterState predict_only(const FilterState& s,
                                const ModeDistribution& dist_k,
                                const Vector& u_k = Vector(0),
                                const Vector& u_next = Vector(0)) {
  StepExpectations e =
      dynamics_expectations(dist_k, s.Sigma, s.Upsilon, s.Delta);
  const Eigen::Index n = dist_k.state_dim();
  e.EH = Matrix::Zero(0, n);
  e.EF = Matrix::Zero(0, n);
  e.EGG = Matrix::Zero(0, 0);
  e.EHSH = Matrix::Zero(0, 0);
  e.EFLF = Matrix::Zero(0, 0);
  e.EHXF = Matrix::Zero(0, 0);
  return update_with_expectations(s, Vector(0), u_k, u_next, e);
}

// No-input convenience overloads (p = 0).
inline FilterState update(const FilterState& s, const Vector& y_next,
                          const ModeDistribution& dist_k,
                          const ModeDistribution& dist_next) {
  return update(s, y_next, Vector(0), Vector(0), dist_k, dist_next);
}

// Exact recursion for the estimate-feedback input u_k = xhat_k. Because
// u is now random, the deterministic-input moment slots change meaning:
// E[x u^T] = E[xhat xhat^T] = Lambda takes the place of both Upsilon and
// Delta, E[A] and E[B] act jointly on the estimate, and the u-dependent
// innovation-covariance term becomes -E[H]E[B]E[xhat y^T]. Equivalently,
// this is the limit of the deterministic-input path fed the realized
// xhat_k at every step (the realization dependence cancels from the
// gains), which the tests exercise as an independent route.
inline FilterState feedback_update(const FilterState& s, const Vector& y_next,
                                   const ModeDistribution& dist_k,
                                   const ModeDistribution& dist_next) {
  detail::require(dist_k.input_dim() == dist_k.state_dim(),
                  "feedback_update: B must be n x n");
  StepExpectations e =
      dynamics_expectations(dist_k, s.Sigma, s.Lambda, s.Lambda);
  const Matrix EAB = e.EA + e.EB;

  Vector Ex_next = EAB * s.Ex;
  Matrix Sigma_next = detail::symmetrize(
      e.EASA + e.EAUB + e.EAUB.transpose() + e.EBDB + e.ECC);
  measurement_expectations(dist_next, Sigma_next, s.Lambda, e.EA, e.EB,
                           s.Lambda, e);
  detail::require(y_next.size() == e.EH.rows(),
                  "feedback_update: measurement dim mismatch");

  Matrix Gxy = (Sigma_next - EAB * s.Lambda * EAB.transpose()) *
               e.EH.transpose();
  const Matrix EHABF = e.EH * EAB + e.EF;  // yhat- = EHABF * xhat
  const Matrix Exhat_y =
      s.Lambda * (EAB.transpose() * e.EH.transpose() + e.EF.transpose());
  Matrix Gyy = e.EHSH + e.EGG + e.EFLF + e.EHXF + e.EHXF.transpose() -
               EHABF * Exhat_y;
  Gyy = detail::symmetrize(Gyy);

  GainSet g;
  g.K = detail::solve_gain(Gxy, Gyy, &g.used_pseudo_inverse);
  const Matrix L_fb =
      (Matrix::Identity(EAB.rows(), EAB.rows()) - g.K * e.EH) * EAB -
      g.K * e.EF;

  FilterState out;
  out.k = s.k + 1;
  out.xhat = L_fb * s.xhat + g.K * y_next;
  out.Ex = std::move(Ex_next);
  out.Sigma = std::move(Sigma_next);
  out.Lambda = detail::symmetrize(
      (L_fb + g.K * e.EF) * (s.Lambda * EAB.transpose()) +
      g.K * e.EH * out.Sigma);
  out.Upsilon = out.Lambda;
  out.Delta = out.Lambda;
  detail::check_moment_sanity(out);
  return out;
}

// Rewrites the estimate-feedback input problem (u_k = xhat_k) as an
// equivalent deterministic-input one: A <- A + B, B and u nullified.
inline SystemSpec feedback_variant(const SystemSpec& spec) {
  detail::require(
      std::holds_alternative<FeedbackEstimateInput>(spec.input_policy),
      "feedback_variant: FeedbackEstimate policy required");
  SystemSpec out = spec;
  out.input_policy = DeterministicInput{};
  auto base_law = spec.mode_law;
  const Eigen::Index n = spec.n;
  out.mode_law = [base_law, n](int k) {
    ModeDistribution dist = base_law(k);
    for (auto& atom : dist.atoms) {
      detail::require(atom.mode.B.cols() == n,
                      "feedback_variant: B must be n x n");
      atom.mode.A += atom.mode.B;
      atom.mode.B = Matrix::Zero(n, 0);
    }
    return dist;
  };
  return out;
}

}  // namespace modal_lmmse
