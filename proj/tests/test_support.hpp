#pragma once

// Shared helpers for the test suites: random matrix generators, an
// independently implemented Joseph-form Kalman filter oracle, and an exact
// closed-loop LMMSE oracle for scalar estimate-feedback systems.

#include <Eigen/Dense>

#include <random>

#include "modal_lmmse/model.hpp"

namespace test_support {

using modal_lmmse::Matrix;
using modal_lmmse::RowVector;
using modal_lmmse::Vector;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                            std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * nd(rng);
  }
  return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * nd(rng);
  return v;
}

inline Matrix random_psd(Eigen::Index n, std::mt19937_64& rng) {
  Matrix m = random_matrix(n, n, rng);
  return m * m.transpose();
}

// Random matrix rescaled to the requested spectral radius.
inline Matrix random_stable(Eigen::Index n, std::mt19937_64& rng,
                            double radius = 0.9) {
  Matrix m = random_matrix(n, n, rng);
  const double r = m.eigenvalues().cwiseAbs().maxCoeff();
  if (r > 0.0) m *= radius / r;
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Independent textbook Kalman filter (Joseph-form covariance update) for
//   x+ = A x + C w,  y = H x + G v,  w, v unit white.
struct KalmanOracle {
  Vector xhat;
  Matrix P;

  void step(const Vector& y, const Matrix& A, const Matrix& C,
            const Matrix& H, const Matrix& G) {
    const Vector x_pred = A * xhat;
    const Matrix P_pred = A * P * A.transpose() + C * C.transpose();
    const Matrix S =
        H * P_pred * H.transpose() + G * G.transpose();
    const Matrix K = P_pred * H.transpose() * S.inverse();
    xhat = x_pred + K * (y - H * x_pred);
    const Matrix IKH = Matrix::Identity(P.rows(), P.rows()) - K * H;
    P = IKH * P_pred * IKH.transpose() +
        K * (G * G.transpose()) * K.transpose();
  }
};

// Exact LMMSE filter for the scalar closed-loop system
//   x+ = a x + b xhat + c w,  y = h x+ + f xhat + g v,
// where xhat is this filter's own estimate. Propagates the exact joint
// second moments of (x, xhat) and derives the gains from the projection
// lemma, independently of the library's recursion.
struct ScalarFeedbackOracle {
  double xhat = 0.0;
  double sxx = 0.0;  // E[x^2]
  double sxh = 0.0;  // E[x xhat]
  double shh = 0.0;  // E[xhat^2]
  double K = 0.0;    // last-used gains, for inspection
  double L = 0.0;

  void step(double y, double a, double b, double c, double h, double f,
            double g) {
    // Time update of the joint moments under x+ = a x + b xhat + c w.
    const double sxx_p =
        a * a * sxx + 2.0 * a * b * sxh + b * b * shh + c * c;
    const double sxh_p = a * sxh + b * shh;  // E[x+ xhat]

    // Innovation statistics for y = h x+ + f xhat + g v, predicted from
    // the current estimate: yhat- = (h(a + b) + f) xhat using E[x xhat]
    // = E[xhat^2] (orthogonality of the exact filter).
    const double hab = h * (a + b) + f;
    const double gamma_xy = h * sxx_p + f * sxh_p - sxh_p * hab;
    const double gamma_yy = h * h * sxx_p + 2.0 * h * f * sxh_p +
                            f * f * shh + g * g - hab * hab * shh;
    K = gamma_xy / gamma_yy;
    L = (a + b) - K * hab;

    const double xhat_next = L * xhat + K * y;

    // New joint moments. E[xhat+ x+] = L E[xhat x+] + K E[y x+] with
    // E[y x+] = h sxx_p + f sxh_p.
    const double shh_next = L * sxh_p + K * (h * sxx_p + f * sxh_p);
    xhat = xhat_next;
    sxx = sxx_p;
    sxh = shh_next;
    shh = shh_next;
  }
};

}  // namespace test_support
