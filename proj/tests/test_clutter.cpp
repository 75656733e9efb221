#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "modal_lmmse/clutter.hpp"
#include "modal_lmmse/expectations.hpp"
#include "test_support.hpp"

using namespace modal_lmmse;

namespace {

ClutterParams nominal_params(double rho = 1.0, double p_d = 0.95,
                             double p_g = 0.99) {
  RowVector H_nom{{1.0, 0.0}};
  return make_clutter_params(H_nom, std::sqrt(30.0), p_d, p_g, rho);
}

}  // namespace

TEST_CASE("gate_multiplier: 99% coverage") {
  // Standard-normal quantile at 0.995.
  CHECK(gate_multiplier(0.99) == doctest::Approx(2.5758293035).epsilon(1e-9));
  CHECK(gate_multiplier(0.6827) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(gate_multiplier(0.0), std::invalid_argument);
  CHECK_THROWS_AS(gate_multiplier(1.0), std::invalid_argument);
}

TEST_CASE("make_clutter_params validates inputs") {
  RowVector H_nom{{1.0, 0.0}};
  CHECK_THROWS_AS(make_clutter_params(H_nom, 1.0, 0.0, 0.99, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_clutter_params(H_nom, 1.0, 0.95, 0.99, -1.0),
                  std::invalid_argument);
}

TEST_CASE("make_window: arithmetic") {
  ClutterParams p = nominal_params();
  p.g = 2.0;
  Window w = make_window(Vector::Zero(2), Matrix::Identity(2, 2), p, 1.0);
  CHECK(w.d() == doctest::Approx(4.0));
  CHECK(w.g_cl() * w.g_cl() == doctest::Approx(16.0 / 12.0));
  CHECK(w.center == doctest::Approx(0.0));
  CHECK_THROWS_AS(make_window(Vector::Zero(2), Matrix::Identity(2, 2), p,
                              0.0),
                  std::invalid_argument);
}

TEST_CASE("make_window: center is the predicted measurement") {
  ClutterParams p = nominal_params();
  const Matrix A = Matrix{{1.0, 0.2}, {0.0, 0.95}};
  Vector xhat(2);
  xhat << 3.0, 2.0;
  Window w = make_window(xhat, A, p, 4.0);
  CHECK(w.center == doctest::Approx(3.0 + 0.2 * 2.0));
  CHECK(w.halfwidth == doctest::Approx(p.g * 2.0));
}

TEST_CASE("generate_scan: no clutter, sure detection") {
  ClutterParams p = nominal_params(/*rho=*/0.0, /*p_d=*/1.0);
  Window w;
  w.center = 0.0;
  w.halfwidth = 1000.0;  // effectively always in gate
  std::mt19937_64 rng(1);
  Vector x(2);
  x << 0.5, 0.0;
  for (int i = 0; i < 200; ++i) {
    Scan scan = generate_scan(x, w, p, rng);
    REQUIRE(scan.size() == 1);
    CHECK(scan.truth_index == 0);
    CHECK(scan.truth_detected);
    CHECK(scan.truth_in_gate);
  }
}

TEST_CASE("generate_scan: zero detection probability") {
  // P_D must be > 0 for params; emulate P_D -> 0 with the smallest positive
  // value and a draw that always exceeds it.
  ClutterParams p = nominal_params(/*rho=*/1.0, /*p_d=*/1e-12);
  Window w;
  w.center = 0.0;
  w.halfwidth = 10.0;
  std::mt19937_64 rng(2);
  Vector x = Vector::Zero(2);
  for (int i = 0; i < 200; ++i) {
    Scan scan = generate_scan(x, w, p, rng);
    CHECK_FALSE(scan.truth_index.has_value());
  }
}

TEST_CASE("generate_scan: clutter count follows the stated Poisson mean") {
  // rho = 2, G_nom = sqrt(30), d = 10 -> mean = rho * d / G_nom ~ 3.651.
  ClutterParams p = nominal_params(/*rho=*/2.0, /*p_d=*/1e-12);
  Window w;
  w.center = 0.0;
  w.halfwidth = 5.0;
  const double mean = 2.0 * 10.0 / std::sqrt(30.0);
  std::mt19937_64 rng(3);
  const int M = 100000;
  double total = 0.0;
  Vector x = Vector::Zero(2);
  for (int i = 0; i < M; ++i) total += generate_scan(x, w, p, rng).size();
  const double sample_mean = total / M;
  CHECK(std::abs(sample_mean - mean) < 3.0 * std::sqrt(mean / M));
}

TEST_CASE("generate_scan: every value lies inside the window") {
  ClutterParams p = nominal_params(/*rho=*/3.0, /*p_d=*/0.9);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 2000; ++i) {
    Window w;
    w.center = 5.0 * nd(rng);
    w.halfwidth = 1.0 + std::abs(3.0 * nd(rng));
    Vector x(2);
    x << w.center + nd(rng), 0.0;
    Scan scan = generate_scan(x, w, p, rng);
    for (int j = 0; j < scan.size(); ++j) {
      const bool is_truth = scan.truth_index && *scan.truth_index == j;
      if (!is_truth) CHECK(w.contains(scan.values[j]));
    }
    if (scan.truth_index) {
      CHECK(w.contains(scan.values[*scan.truth_index]));
      CHECK(scan.truth_detected);
      CHECK(scan.truth_in_gate);
    }
  }
}

TEST_CASE("generate_scan is deterministic given the draws") {
  ClutterParams p = nominal_params(/*rho=*/2.0);
  Window w;
  w.center = 1.0;
  w.halfwidth = 8.0;
  ScanDraws d;
  d.z_true = 0.3;
  d.u_detect = 0.1;
  d.u_count = 0.7;
  d.placement_seed = 99;
  Vector x(2);
  x << 1.0, 0.0;
  Scan a = generate_scan(x, w, p, d);
  Scan b = generate_scan(x, w, p, d);
  CHECK(a.values == b.values);
  CHECK(a.truth_index == b.truth_index);
}

TEST_CASE("poisson_quantile basics") {
  CHECK(poisson_quantile(0.0, 0.5) == 0);
  CHECK(poisson_quantile(3.0, 0.0) == 0);
  // CDF of Poisson(1) at 0 is exp(-1) ~ 0.3679; at 1 it is ~0.7358.
  CHECK(poisson_quantile(1.0, 0.3) == 0);
  CHECK(poisson_quantile(1.0, 0.5) == 1);
  CHECK(poisson_quantile(1.0, 0.8) == 2);
  // Monotone in u.
  int prev = 0;
  for (double u = 0.05; u < 1.0; u += 0.05) {
    int k = poisson_quantile(2.5, u);
    CHECK(k >= prev);
    prev = k;
  }
}

TEST_CASE("build_mode_distribution: N = 1 without misses") {
  ClutterParams p = nominal_params();
  p.model_misses = false;
  Window w;
  w.center = 0.0;
  w.halfwidth = 5.0;
  const Matrix A = Matrix{{1.0, 0.2}, {0.0, 0.95}};
  const Matrix C = Matrix{{0.25}, {0.5}};
  ModeDistribution dist = build_mode_distribution(1, w, p, A, C);
  REQUIRE(dist.atoms.size() == 1);
  CHECK(dist.atoms[0].weight == doctest::Approx(1.0));
  CHECK(dist.atoms[0].mode.H(0, 0) == doctest::Approx(1.0));
  CHECK(dist.atoms[0].mode.G(0, 0) == doctest::Approx(std::sqrt(30.0)));
  CHECK(dist.atoms[0].mode.F.cwiseAbs().maxCoeff() == 0.0);
  CHECK(validate(dist).empty());
}

TEST_CASE("build_mode_distribution: N = 3 placement structure") {
  ClutterParams p = nominal_params();
  p.model_misses = false;
  Window w;
  w.center = 0.0;
  w.halfwidth = 6.0;
  const Matrix A = Matrix{{1.0, 0.2}, {0.0, 0.95}};
  const Matrix C = Matrix{{0.25}, {0.5}};
  ModeDistribution dist = build_mode_distribution(3, w, p, A, C);
  REQUIRE(dist.atoms.size() == 3);
  const RowVector hA = p.H_nom * A;
  for (int i = 0; i < 3; ++i) {
    const ModeRealization& m = dist.atoms[i].mode;
    CHECK(dist.atoms[i].weight == doctest::Approx(1.0 / 3.0));
    for (int r = 0; r < 3; ++r) {
      if (r == i) {
        CHECK((m.H.row(r) - p.H_nom).cwiseAbs().maxCoeff() == 0.0);
        CHECK(m.F.row(r).cwiseAbs().maxCoeff() == 0.0);
        CHECK(m.G(r, r) == doctest::Approx(std::sqrt(30.0)));
      } else {
        CHECK(m.H.row(r).cwiseAbs().maxCoeff() == 0.0);
        CHECK((m.F.row(r) - hA).cwiseAbs().maxCoeff() == 0.0);
        CHECK(m.G(r, r) == doctest::Approx(w.g_cl()));
      }
    }
  }
  CHECK(validate(dist).empty());
}

TEST_CASE("build_mode_distribution: miss atom weights") {
  Window w;
  w.center = 0.0;
  w.halfwidth = 6.0;
  const Matrix A = Matrix{{1.0, 0.2}, {0.0, 0.95}};
  const Matrix C = Matrix{{0.25}, {0.5}};

  ClutterParams p = nominal_params();
  ModeDistribution dist = build_mode_distribution(2, w, p, A, C);
  REQUIRE(dist.atoms.size() == 3);
  const double w0 = (1.0 - 0.95) * (1.0 - 0.99);
  CHECK(dist.atoms[2].weight == doctest::Approx(w0));
  CHECK(dist.atoms[0].weight == doctest::Approx((1.0 - w0) / 2.0));
  // Miss atom: no informative row, clutter noise everywhere, feedback in
  // every row.
  const ModeRealization& miss = dist.atoms[2].mode;
  CHECK(miss.H.cwiseAbs().maxCoeff() == 0.0);
  CHECK(miss.G(0, 0) == doctest::Approx(w.g_cl()));
  CHECK(miss.G(1, 1) == doctest::Approx(w.g_cl()));
  CHECK(validate(dist).empty());

  p.miss_weight = MissWeight::kStandard;
  ModeDistribution dist2 = build_mode_distribution(2, w, p, A, C);
  CHECK(dist2.atoms[2].weight == doctest::Approx(1.0 - 0.95 * 0.99));

  CHECK_THROWS_AS(build_mode_distribution(0, w, p, A, C),
                  std::invalid_argument);
}

TEST_CASE("enumerated distribution reproduces the closed-form expectations") {
  ClutterParams p = nominal_params();
  p.model_misses = false;
  Window w;
  w.center = 2.0;
  w.halfwidth = 4.0;
  const Matrix A = Matrix{{1.0, 0.2}, {0.0, 0.95}};
  const Matrix C = Matrix{{0.25}, {0.5}};
  std::mt19937_64 rng(7);
  const Matrix Sigma = test_support::random_psd(2, rng);
  const Matrix Lambda = test_support::random_psd(2, rng);
  ModeDistribution dist = build_mode_distribution(4, w, p, A, C);
  StepExpectations enumd = measurement_expectations(
      dist, Sigma, Lambda, A, Matrix::Zero(2, 0), Matrix::Zero(2, 0));
  StepExpectations closed = clutter_expectations(
      p.H_nom, p.G_nom, w.g_cl(), A, 4, Sigma, Lambda);
  CHECK(test_support::max_abs_diff(enumd.EGG, closed.EGG) < 1e-12);
  CHECK(test_support::max_abs_diff(enumd.EFLF, closed.EFLF) < 1e-12);
  CHECK(test_support::max_abs_diff(enumd.EHXF, closed.EHXF) < 1e-12);
}
