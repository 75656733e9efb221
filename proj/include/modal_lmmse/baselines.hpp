#pragma once

// Reference trackers for the benchmark: a textbook Kalman filter on scalar
// measurements, the nearest-neighbor filter, and the parametric PDA filter.
// All operate on scans gated by the clutter module.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "modal_lmmse/clutter.hpp"
#include "modal_lmmse/model.hpp"

namespace modal_lmmse {

struct KfState {
  Vector xhat;
  Matrix P;  // error covariance
};

struct KfPrediction {
  Vector xhat;
  Matrix P;
  double y_pred = 0.0;  // H_nom * xhat
  double S = 0.0;       // innovation variance
};

inline KfPrediction kf_predict(const KfState& s, const Matrix& A,
                               const Matrix& C, const RowVector& H_nom,
                               double G_nom) {
  KfPrediction p;
  p.xhat = A * s.xhat;
  p.P = A * s.P * A.transpose() + C * C.transpose();
  p.y_pred = (H_nom * p.xhat)(0);
  p.S = (H_nom * p.P * H_nom.transpose())(0) + G_nom * G_nom;
  return p;
}

inline KfState kf_update(const KfPrediction& pred, double y,
                         const RowVector& H_nom) {
  detail::require(pred.S > 0.0, "kf_update: innovation variance must be > 0");
  const Vector K = pred.P * H_nom.transpose() / pred.S;
  KfState out;
  out.xhat = pred.xhat + K * (y - pred.y_pred);
  // Joseph form
  const Matrix IKH =
      Matrix::Identity(pred.P.rows(), pred.P.rows()) - K * H_nom;
  out.P = IKH * pred.P * IKH.transpose() +
          K * (pred.S - (H_nom * pred.P * H_nom.transpose())(0)) *
              K.transpose();
  return out;
}

inline KfState kf_step(const KfState& s, double y, const Matrix& A,
                       const Matrix& C, const RowVector& H_nom, double G_nom) {
  return kf_update(kf_predict(s, A, C, H_nom, G_nom), y, H_nom);
}

// Nearest-neighbor filter: KF update with the single gated measurement
// closest to the prediction (lowest index on ties); empty scan is a pure
// prediction.
inline KfState nn_step(const KfState& s, const Scan& scan, const Matrix& A,
                       const Matrix& C, const RowVector& H_nom, double G_nom) {
  KfPrediction pred = kf_predict(s, A, C, H_nom, G_nom);
  if (scan.values.empty()) return KfState{pred.xhat, pred.P};
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scan.size(); ++i) {
    const double d = std::abs(scan.values[i] - pred.y_pred);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return kf_update(pred, scan.values[best], H_nom);
}

// Parametric PDA: association probabilities from Gaussian innovation
// likelihoods against Poisson clutter of known intensity, combined
// innovation update, and the spread-of-innovations covariance term.
inline KfState pda_step(const KfState& s, const Scan& scan, const Matrix& A,
                        const Matrix& C, const ClutterParams& params) {
  KfPrediction pred = kf_predict(s, A, C, params.H_nom, params.G_nom);
  if (scan.values.empty()) return KfState{pred.xhat, pred.P};

  const int N = scan.size();
  const double lambda = params.clutter_intensity();
  std::vector<double> nu(N);
  std::vector<double> e(N);
  double e_sum = 0.0;
  for (int i = 0; i < N; ++i) {
    nu[i] = scan.values[i] - pred.y_pred;
    e[i] = params.P_D * std::exp(-0.5 * nu[i] * nu[i] / pred.S) /
           std::sqrt(2.0 * std::numbers::pi * pred.S);
    e_sum += e[i];
  }
  const double b = lambda * (1.0 - params.P_D * params.P_G);
  const double denom = b + e_sum;
  const double beta0 = b / denom;

  double nu_bar = 0.0;
  double nu_sq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double beta = e[i] / denom;
    nu_bar += beta * nu[i];
    nu_sq += beta * nu[i] * nu[i];
  }

  const Vector K = pred.P * params.H_nom.transpose() / pred.S;
  KfState out;
  out.xhat = pred.xhat + K * nu_bar;
  const Matrix Pc = pred.P - K * pred.S * K.transpose();
  const Matrix spread = K * (nu_sq - nu_bar * nu_bar) * K.transpose();
  out.P = beta0 * pred.P + (1.0 - beta0) * Pc + spread;
  return out;
}

}  // namespace modal_lmmse
