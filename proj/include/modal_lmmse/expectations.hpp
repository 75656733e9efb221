#pragma once

// Exact evaluation of the mode expectations consumed by the LMMSE
// recursion, by finite enumeration over a ModeDistribution, plus the
// Kronecker-structured closed forms available in the clutter scenario.

#include <Eigen/Dense>

#include "modal_lmmse/model.hpp"

namespace modal_lmmse {

// Expectations for one filter step. The dynamics half refers to the mode at
// time k, the measurement half to the mode at time k+1.
struct StepExpectations {
  // dynamics half
  Matrix EA;    // E[A_k]
  Matrix EB;    // E[B_k]
  Matrix ECC;   // E[C_k C_k^T]
  Matrix EASA;  // E[A_k Sigma_k A_k^T]
  Matrix EAUB;  // E[A_k Upsilon_k B_k^T]
  Matrix EBDB;  // E[B_k Delta_k B_k^T]
  // measurement half
  Matrix EH;    // E[H_{k+1}]
  Matrix EF;    // E[F_{k+1}]
  Matrix EGG;   // E[G_{k+1} G_{k+1}^T]
  Matrix EHSH;  // E[H_{k+1} Sigma_{k+1} H_{k+1}^T]
  Matrix EFLF;  // E[F_{k+1} Lambda_k F_{k+1}^T]
  Matrix EHXF;  // E[H_{k+1} (E[A_k] Lambda_k + E[B_k] Upsilon_k^T) F_{k+1}^T]
};

// Weighted sums over the atoms of dist_k for the dynamics-side quantities.
inline StepExpectations dynamics_expectations(const ModeDistribution& dist,
                                              const Matrix& Sigma,
                                              const Matrix& Upsilon,
                                              const Matrix& Delta) {
  const Eigen::Index n = dist.state_dim();
  const Eigen::Index p = dist.input_dim();
  detail::require(Sigma.rows() == n && Sigma.cols() == n,
                  "dynamics_expectations: Sigma dim mismatch");
  detail::require(Upsilon.rows() == n && Upsilon.cols() == p,
                  "dynamics_expectations: Upsilon dim mismatch");
  detail::require(Delta.rows() == p && Delta.cols() == p,
                  "dynamics_expectations: Delta dim mismatch");

  StepExpectations e;
  e.EA = Matrix::Zero(n, n);
  e.EB = Matrix::Zero(n, p);
  e.ECC = Matrix::Zero(n, n);
  e.EASA = Matrix::Zero(n, n);
  e.EAUB = Matrix::Zero(n, n);
  e.EBDB = Matrix::Zero(n, n);
  for (const auto& atom : dist.atoms) {
    const ModeRealization& mode = atom.mode;
    const double w = atom.weight;
    e.EA.noalias() += w * mode.A;
    e.EB.noalias() += w * mode.B;
    e.ECC.noalias() += w * mode.C * mode.C.transpose();
    e.EASA.noalias() += w * mode.A * Sigma * mode.A.transpose();
    e.EAUB.noalias() += w * mode.A * Upsilon * mode.B.transpose();
    e.EBDB.noalias() += w * mode.B * Delta * mode.B.transpose();
  }
  return e;
}

// Weighted sums over the atoms of dist_{k+1} for the measurement-side
// quantities. EA, EB, Upsilon refer to time k; the inner matrix of EHXF is
// held fixed across atoms.
inline void measurement_expectations(const ModeDistribution& dist,
                                     const Matrix& Sigma_next,
                                     const Matrix& Lambda, const Matrix& EA,
                                     const Matrix& EB, const Matrix& Upsilon,
                                     StepExpectations& e) {
  const Eigen::Index n = dist.state_dim();
  const Eigen::Index m = dist.meas_dim();
  detail::require(Sigma_next.rows() == n && Sigma_next.cols() == n,
                  "measurement_expectations: Sigma dim mismatch");
  detail::require(Lambda.rows() == n && Lambda.cols() == n,
                  "measurement_expectations: Lambda dim mismatch");

  const Matrix inner = EA * Lambda + EB * Upsilon.transpose();  // n x n

  e.EH = Matrix::Zero(m, n);
  e.EF = Matrix::Zero(m, n);
  e.EGG = Matrix::Zero(m, m);
  e.EHSH = Matrix::Zero(m, m);
  e.EFLF = Matrix::Zero(m, m);
  e.EHXF = Matrix::Zero(m, m);
  for (const auto& atom : dist.atoms) {
    const ModeRealization& mode = atom.mode;
    const double w = atom.weight;
    e.EH.noalias() += w * mode.H;
    e.EF.noalias() += w * mode.F;
    e.EGG.noalias() += w * mode.G * mode.G.transpose();
    e.EHSH.noalias() += w * mode.H * Sigma_next * mode.H.transpose();
    e.EFLF.noalias() += w * mode.F * Lambda * mode.F.transpose();
    e.EHXF.noalias() += w * mode.H * inner * mode.F.transpose();
  }
}

inline StepExpectations measurement_expectations(
    const ModeDistribution& dist, const Matrix& Sigma_next,
    const Matrix& Lambda, const Matrix& EA, const Matrix& EB,
    const Matrix& Upsilon) {
  StepExpectations e;
  measurement_expectations(dist, Sigma_next, Lambda, EA, EB, Upsilon, e);
  return e;
}

// Closed forms for the tracking-in-clutter mode distribution with the true
// measurement always present: N equiprobable placements of the true sensor
// row among N-1 clutter rows. Equals measurement_expectations applied to
// the explicitly enumerated distribution.
//
//   E[H]        = (1/N) 1_N (x) H_nom
//   E[F]        = ((N-1)/N) 1_N (x) (H_nom A)
//   E[G G^T]    = (1/N) I_N (x) (G_nom^2 + (N-1) G_cl^2)
//   E[H S H^T]  = (1/N) I_N (x) (H_nom S H_nom^T)
//   E[F L F^T]  = Xi (x) (H_nom A L A^T H_nom^T),
//                 Xi = (1/N)((N-2) 1 1^T + I)  (zero when N = 1)
//   E[H A L F^T]= (1/N)(1 1^T - I) (x) (H_nom A L A^T H_nom^T)
inline StepExpectations clutter_expectations(const RowVector& H_nom,
                                             double G_nom, double G_cl,
                                             const Matrix& A, int N,
                                             const Matrix& Sigma_next,
                                             const Matrix& Lambda) {
  detail::require(N >= 1, "clutter_expectations: N must be >= 1");
  const Eigen::Index n = H_nom.cols();
  const double dN = static_cast<double>(N);
  const RowVector hA = H_nom * A;
  const double hsh = (H_nom * Sigma_next * H_nom.transpose())(0);
  const double hala = (hA * Lambda * hA.transpose())(0);

  const Matrix ones = Matrix::Ones(N, N);
  const Matrix eye = Matrix::Identity(N, N);

  StepExpectations e;
  e.EH = Vector::Ones(N) * H_nom / dN;
  e.EF = Vector::Ones(N) * hA * (dN - 1.0) / dN;
  e.EGG = eye * ((G_nom * G_nom + (dN - 1.0) * G_cl * G_cl) / dN);
  e.EHSH = eye * (hsh / dN);
  Matrix xi = N > 1 ? Matrix(((dN - 2.0) * ones + eye) / dN)
                    : Matrix(Matrix::Zero(1, 1));
  e.EFLF = xi * hala;
  e.EHXF = (ones - eye) * (hala / dN);
  // dynamics side left empty; the caller owns it (deterministic in this
  // scenario).
  e.EA = Matrix();
  e.EB = Matrix::Zero(n, 0);
  return e;
}

}  // namespace modal_lmmse
