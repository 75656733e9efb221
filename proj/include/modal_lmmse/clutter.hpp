#pragma once

// Tracking-in-clutter instantiation: validation windows, scan generation
// (true measurement + uniform clutter + missed detections), and the
// per-step mode distribution over true-measurement placements.

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "modal_lmmse/model.hpp"

namespace modal_lmmse {

enum class MissWeight {
  kPaper,     // (1 - P_D)(1 - P_G)
  kStandard,  // 1 - P_D * P_G
};

struct ClutterParams {
  RowVector H_nom;        // 1 x n nominal observation row
  double G_nom = 0.0;     // true-measurement noise std
  double P_D = 1.0;       // detection probability
  double P_G = 0.99;      // gate coverage probability
  double rho = 0.0;       // clutter per one measurement-noise std of length
  double g = 0.0;         // gate multiplier, derived from P_G
  bool model_misses = true;
  MissWeight miss_weight = MissWeight::kPaper;

  double miss_probability() const {
    if (!model_misses) return 0.0;
    return miss_weight == MissWeight::kPaper ? (1.0 - P_D) * (1.0 - P_G)
                                             : 1.0 - P_D * P_G;
  }

  // Spatial clutter intensity (points per unit length).
  double clutter_intensity() const { return G_nom > 0.0 ? rho / G_nom : 0.0; }
};

// Gate multiplier g such that a standard-normal deviate lies in [-g, g]
// with probability p_g.
inline double gate_multiplier(double p_g) {
  detail::require(p_g > 0.0 && p_g < 1.0, "gate_multiplier: P_G out of range");
  return boost::math::quantile(boost::math::normal_distribution<double>(),
                               0.5 * (1.0 + p_g));
}

inline ClutterParams make_clutter_params(RowVector H_nom, double G_nom,
                                         double p_d, double p_g, double rho) {
  detail::require(p_d > 0.0 && p_d <= 1.0, "clutter params: P_D out of range");
  detail::require(rho >= 0.0, "clutter params: rho negative");
  ClutterParams p;
  p.H_nom = std::move(H_nom);
  p.G_nom = G_nom;
  p.P_D = p_d;
  p.P_G = p_g;
  p.rho = rho;
  p.g = gate_multiplier(p_g);
  return p;
}

struct Window {
  double center = 0.0;
  double halfwidth = 0.0;

  double d() const { return 2.0 * halfwidth; }          // full length
  double g_cl() const { return d() / std::sqrt(12.0); }  // uniform noise std
  double lo() const { return center - halfwidth; }
  double hi() const { return center + halfwidth; }
  bool contains(double y) const { return std::abs(y - center) <= halfwidth; }
};

// Window about the predicted measurement H_nom A xhat with halfwidth
// g * sqrt(S), S being the predicted innovation variance.
inline Window make_window(const Vector& xhat_prev, const Matrix& A,
                          const ClutterParams& params, double S) {
  detail::require(S > 0.0, "make_window: innovation variance must be > 0");
  Window w;
  w.center = (params.H_nom * A * xhat_prev)(0);
  w.halfwidth = params.g * std::sqrt(S);
  return w;
}

// One scan: all gated scalar measurements of one step, in random order.
// truth_index / truth_detected / truth_in_gate are ground truth, hidden
// from the filters.
struct Scan {
  std::vector<double> values;
  std::optional<int> truth_index;
  bool truth_detected = false;
  bool truth_in_gate = false;
  Window window;

  int size() const { return static_cast<int>(values.size()); }
  Vector as_vector() const {
    return Eigen::Map<const Vector>(values.data(), values.size());
  }
};

// Pre-drawn randomness for one scan. Keeping the draws explicit lets the
// benchmark reuse them across filters (common random numbers): the same
// unit draws are rescaled to each filter's window.
struct ScanDraws {
  double z_true = 0.0;       // standard-normal deviate of the true measurement
  double u_detect = 0.0;     // uniform(0,1) detection coin
  double u_count = 0.0;      // uniform(0,1) for the clutter-count quantile
  std::uint64_t placement_seed = 0;  // stream for positions and ordering
};

inline ScanDraws draw_scan_randomness(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ScanDraws d;
  d.z_true = gauss(rng);
  d.u_detect = unif(rng);
  d.u_count = unif(rng);
  d.placement_seed = rng();
  return d;
}

// Poisson quantile by CDF walk; exact for the small means used here.
inline int poisson_quantile(double mean, double u) {
  if (mean <= 0.0) return 0;
  double pmf = std::exp(-mean);
  double cdf = pmf;
  int k = 0;
  const int k_max = static_cast<int>(10.0 * mean) + 100;
  while (u > cdf && k < k_max) {
    ++k;
    pmf *= mean / k;
    cdf += pmf;
  }
  return k;
}

inline Scan generate_scan(const Vector& x_true, const Window& window,
                          const ClutterParams& params, const ScanDraws& d) {
  Scan scan;
  scan.window = window;

  const double true_val =
      (params.H_nom * x_true)(0) + params.G_nom * d.z_true;
  scan.truth_detected = d.u_detect < params.P_D;
  scan.truth_in_gate = window.contains(true_val);

  const double mean_count = params.clutter_intensity() * window.d();
  const int n_clutter = poisson_quantile(mean_count, d.u_count);

  std::mt19937_64 rng(d.placement_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  scan.values.reserve(n_clutter + 1);
  for (int i = 0; i < n_clutter; ++i) {
    scan.values.push_back(window.lo() + unif(rng) * window.d());
  }
  if (scan.truth_detected && scan.truth_in_gate) {
    // Uniform insertion position keeps the true measurement's slot
    // exchangeable with the clutter slots.
    const int pos = static_cast<int>(unif(rng) * (n_clutter + 1));
    const int idx = std::min(pos, n_clutter);
    scan.values.insert(scan.values.begin() + idx, true_val);
    scan.truth_index = idx;
  }
  return scan;
}

inline Scan generate_scan(const Vector& x_true, const Window& window,
                          const ClutterParams& params, std::mt19937_64& rng) {
  return generate_scan(x_true, window, params, draw_scan_randomness(rng));
}

// Mode distribution of one scan of N measurements: N placements of
// {H_nom, G_nom, 0} among clutter rows {0, G_cl, H_nom A}, plus (when
// misses are modeled) the all-clutter atom {0, I (x) G_cl, 1 (x) H_nom A}.
// The dynamics side (A, C) is deterministic in this scenario.
inline ModeDistribution build_mode_distribution(int N, const Window& window,
                                                const ClutterParams& params,
                                                const Matrix& A,
                                                const Matrix& C) {
  detail::require(N >= 1, "build_mode_distribution: N must be >= 1");
  const Eigen::Index n = A.rows();
  const double g_cl = window.g_cl();
  const RowVector hA = params.H_nom * A;

  const double w0 = params.miss_probability();
  const double w_place = (1.0 - w0) / N;

  ModeDistribution dist;
  dist.atoms.reserve(N + 1);

  ModeRealization base;
  base.A = A;
  base.B = Matrix::Zero(n, 0);
  base.C = C;

  for (int i = 0; i < N; ++i) {
    ModeRealization mode = base;
    mode.H = Matrix::Zero(N, n);
    mode.H.row(i) = params.H_nom;
    Vector g_diag = Vector::Constant(N, g_cl);
    g_diag(i) = params.G_nom;
    mode.G = g_diag.asDiagonal();
    mode.F = Vector::Ones(N) * hA;
    mode.F.row(i).setZero();
    dist.atoms.push_back(ModeAtom{w_place, std::move(mode)});
  }
  if (w0 > 0.0) {
    ModeRealization miss = base;
    miss.H = Matrix::Zero(N, n);
    miss.G = Matrix::Identity(N, N) * g_cl;
    miss.F = Vector::Ones(N) * hA;
    dist.atoms.push_back(ModeAtom{w0, std::move(miss)});
  }
  return dist;
}

}  // namespace modal_lmmse
