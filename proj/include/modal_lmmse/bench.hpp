#pragma once

// Monte-Carlo benchmark: simulate a target in clutter, run the LMMSE
// filter against NN and PDA baselines on per-filter gated scan streams,
// detect track loss, and aggregate RMSE / loss-time statistics over runs
// and clutter densities. Common random numbers are shared across filters
// within a run to reduce comparison variance.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <tuple>
#include <string>
#include <thread>
#include <vector>

#include "modal_lmmse/baselines.hpp"
#include "modal_lmmse/clutter.hpp"
#include "modal_lmmse/filter.hpp"
#include "modal_lmmse/model.hpp"

namespace modal_lmmse {

enum class FilterKind { kLmmse, kNn, kPda };

inline const char* filter_name(FilterKind f) {
  switch (f) {
    case FilterKind::kLmmse: return "lmmse";
    case FilterKind::kNn: return "nn";
    case FilterKind::kPda: return "pda";
  }
  return "?";
}

// Linear target model of the tracking scenario: x_{k+1} = A x_k + C w_k,
// x_0 ~ N(x0_mean, P0).
struct TrackingSystem {
  Matrix A;
  Matrix C;
  Vector x0_mean;
  Matrix P0;
};

struct ExperimentConfig {
  int horizon = 400;
  int runs = 1000;
  std::vector<double> densities;
  TrackingSystem system;
  ClutterParams clutter;  // rho is overridden per density
  std::uint64_t seed = 0;
  std::vector<FilterKind> filters = {FilterKind::kLmmse, FilterKind::kNn,
                                     FilterKind::kPda};
  int threads = 1;
};

struct GateEvent {
  bool detected = false;
  bool in_gate = false;
};

// Track loss: the step of the third consecutive detected-but-out-of-gate
// event. Undetected steps neither extend nor break the streak.
inline std::optional<int> detect_track_loss(
    const std::vector<GateEvent>& history) {
  int streak = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (!history[i].detected) continue;
    if (history[i].in_gate) {
      streak = 0;
    } else if (++streak == 3) {
      return static_cast<int>(i) + 1;  // steps are 1-based
    }
  }
  return std::nullopt;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t run_seed(std::uint64_t base, std::size_t density_index,
                              int run_index) {
  return splitmix64(splitmix64(base ^ (0x100000001b3ULL * density_index)) +
                    static_cast<std::uint64_t>(run_index));
}

// LMMSE tracker over the clutter scenario: enumerated per-scan mode
// distribution, exact moment recursion.
class LmmseTracker {
 public:
  LmmseTracker(const TrackingSystem& sys, const ClutterParams& params)
      : params_(params), A_(sys.A), C_(sys.C),
        state_(init(sys.x0_mean, sys.P0)) {
    ModeRealization dyn;
    dyn.A = sys.A;
    dyn.B = Matrix::Zero(sys.A.rows(), 0);
    dyn.C = sys.C;
    dyn.H = Matrix::Zero(0, sys.A.rows());
    dyn.G = Matrix::Zero(0, 0);
    dyn.F = Matrix::Zero(0, sys.A.rows());
    dyn_dist_ = deterministic_mode(std::move(dyn));
  }

  // Predicted innovation variance of a single nominal measurement.
  double innovation_variance() const {
    const Matrix Sigma_next =
        A_ * state_.Sigma * A_.transpose() + C_ * C_.transpose();
    const Matrix err = Sigma_next - A_ * state_.Lambda * A_.transpose();
    return (params_.H_nom * err * params_.H_nom.transpose())(0) +
           params_.G_nom * params_.G_nom;
  }

  Window window() const {
    return make_window(state_.xhat, A_, params_, innovation_variance());
  }

  void absorb(const Scan& scan) {
    if (scan.values.empty()) {
      state_ = predict_only(state_, dyn_dist_);
      return;
    }
    const ModeDistribution dist_next = build_mode_distribution(
        scan.size(), scan.window, params_, A_, C_);
    state_ = update(state_, scan.as_vector(), dyn_dist_, dist_next);
  }

  const Vector& estimate() const { return state_.xhat; }
  const FilterState& state() const { return state_; }

 private:
  ClutterParams params_;
  Matrix A_, C_;
  ModeDistribution dyn_dist_;
  FilterState state_;
};

// KF-based tracker (NN or PDA association).
class KfTracker {
 public:
  KfTracker(const TrackingSystem& sys, const ClutterParams& params, bool pda)
      : params_(params), A_(sys.A), C_(sys.C), pda_(pda),
        state_{sys.x0_mean, sys.P0} {}

  double innovation_variance() const {
    return kf_predict(state_, A_, C_, params_.H_nom, params_.G_nom).S;
  }

  Window window() const {
    return make_window(state_.xhat, A_, params_, innovation_variance());
  }

  void absorb(const Scan& scan) {
    state_ = pda_ ? pda_step(state_, scan, A_, C_, params_)
                  : nn_step(state_, scan, A_, C_, params_.H_nom,
                            params_.G_nom);
  }

  const Vector& estimate() const { return state_.xhat; }

 private:
  ClutterParams params_;
  Matrix A_, C_;
  bool pda_;
  KfState state_;
};

}  // namespace detail

struct TraceRow {
  int k = 0;
  Vector x_true;
  struct PerFilter {
    Vector estimate;
    int n_meas = 0;
    double window_lo = 0.0;
    double window_hi = 0.0;
  };
  std::vector<PerFilter> filters;  // same order as config.filters
};

// One Monte-Carlo run: per-filter loss time and per-step position errors.
struct RunRecord {
  struct PerFilter {
    std::optional<int> loss_time;
    std::vector<double> pos_err;  // |est - truth| at steps 1..stop
  };
  std::vector<PerFilter> filters;  // same order as config.filters
  std::vector<TraceRow> trace;     // filled only when tracing

  // RMSE truncation point: first loss among the filters, or the horizon.
  int truncation_time(int horizon) const {
    int t = horizon;
    for (const auto& f : filters) {
      if (f.loss_time) t = std::min(t, *f.loss_time);
    }
    return t;
  }
};

inline RunRecord run_single(const ExperimentConfig& config, double rho,
                            std::size_t density_index, int run_index,
                            bool with_trace = false) {
  ClutterParams params = config.clutter;
  params.rho = rho;
  const TrackingSystem& sys = config.system;
  const Eigen::Index n = sys.A.rows();
  const Eigen::Index q = sys.C.cols();

  std::mt19937_64 rng(detail::run_seed(config.seed, density_index, run_index));
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Shared truth and per-step scan randomness (common across filters).
  std::vector<Vector> truth(config.horizon + 1);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = gauss(rng);
  truth[0] = sys.x0_mean + modal_lmmse::detail::psd_sqrt(sys.P0) * z;
  std::vector<ScanDraws> draws(config.horizon + 1);
  for (int k = 1; k <= config.horizon; ++k) {
    Vector w(q);
    for (Eigen::Index i = 0; i < q; ++i) w(i) = gauss(rng);
    truth[k] = sys.A * truth[k - 1] + sys.C * w;
    draws[k] = draw_scan_randomness(rng);
  }

  RunRecord record;
  record.filters.resize(config.filters.size());
  if (with_trace) {
    record.trace.resize(config.horizon);
    for (int k = 1; k <= config.horizon; ++k) {
      record.trace[k - 1].k = k;
      record.trace[k - 1].x_true = truth[k];
      record.trace[k - 1].filters.resize(config.filters.size());
    }
  }

  for (std::size_t fi = 0; fi < config.filters.size(); ++fi) {
    const FilterKind kind = config.filters[fi];
    std::optional<detail::LmmseTracker> lmmse;
    std::optional<detail::KfTracker> kf;
    if (kind == FilterKind::kLmmse) {
      lmmse.emplace(sys, params);
    } else {
      kf.emplace(sys, params, kind == FilterKind::kPda);
    }

    auto& out = record.filters[fi];
    out.pos_err.reserve(config.horizon);
    int streak = 0;
    for (int k = 1; k <= config.horizon; ++k) {
      const Window win = lmmse ? lmmse->window() : kf->window();
      const Scan scan = generate_scan(truth[k], win, params, draws[k]);

      bool lost = false;
      if (scan.truth_detected) {
        if (scan.truth_in_gate) {
          streak = 0;
        } else if (++streak == 3) {
          out.loss_time = k;
          lost = true;
        }
      }

      if (lmmse) {
        lmmse->absorb(scan);
      } else {
        kf->absorb(scan);
      }
      const Vector& est = lmmse ? lmmse->estimate() : kf->estimate();
      out.pos_err.push_back(std::abs(est(0) - truth[k](0)));

      if (with_trace) {
        auto& tr = record.trace[k - 1].filters[fi];
        tr.estimate = est;
        tr.n_meas = scan.size();
        tr.window_lo = win.lo();
        tr.window_hi = win.hi();
      }

      if (lost && !with_trace) break;
    }
  }
  return record;
}

struct AggregateRow {
  double rho = 0.0;
  FilterKind filter = FilterKind::kLmmse;
  double mean_rmse = 0.0;
  double rmse_se = 0.0;  // standard error of the mean RMSE
  double mean_loss_time = 0.0;
  double loss_time_se = 0.0;
  int runs = 0;
  std::uint64_t seed = 0;
};

struct AggregateResult {
  std::vector<AggregateRow> rows;  // densities x filters, density-major

  const AggregateRow& at(double rho, FilterKind f) const {
    for (const auto& row : rows) {
      if (row.rho == rho && row.filter == f) return row;
    }
    throw std::out_of_range("AggregateResult: no such (rho, filter) row");
  }
};

inline int resolve_thread_count(int requested, int runs) {
  int t = requested;
  if (const char* env = std::getenv("MODAL_LMMSE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) t = std::min(t, cap);
  }
  t = std::max(1, std::min({t, runs,
                            static_cast<int>(
                                std::thread::hardware_concurrency())}));
  return t;
}

inline AggregateResult run_experiment(const ExperimentConfig& config) {
  modal_lmmse::detail::require(config.horizon >= 1 && config.runs >= 1 &&
                                   !config.densities.empty(),
                               "run_experiment: invalid config");
  AggregateResult result;
  const std::size_t nf = config.filters.size();

  for (std::size_t di = 0; di < config.densities.size(); ++di) {
    const double rho = config.densities[di];

    // Per-run (rmse, loss) samples per filter; index by run for a
    // completion-order-independent reduction.
    std::vector<std::vector<double>> rmse(nf,
                                          std::vector<double>(config.runs));
    std::vector<std::vector<double>> loss(nf,
                                          std::vector<double>(config.runs));

    auto worker = [&](int begin, int step) {
      for (int r = begin; r < config.runs; r += step) {
        RunRecord rec = run_single(config, rho, di, r);
        const int t = rec.truncation_time(config.horizon);
        for (std::size_t fi = 0; fi < nf; ++fi) {
          double sq = 0.0;
          for (int k = 0; k < t; ++k) {
            sq += rec.filters[fi].pos_err[k] * rec.filters[fi].pos_err[k];
          }
          rmse[fi][r] = std::sqrt(sq / t);
          loss[fi][r] = rec.filters[fi].loss_time
                            ? static_cast<double>(*rec.filters[fi].loss_time)
                            : static_cast<double>(config.horizon);
        }
      }
    };

    const int threads = resolve_thread_count(config.threads, config.runs);
    if (threads <= 1) {
      worker(0, 1);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(threads);
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
      for (auto& th : pool) th.join();
    }

    for (std::size_t fi = 0; fi < nf; ++fi) {
      auto mean_se = [&](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= xs.size();
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var = xs.size() > 1 ? var / (xs.size() - 1) : 0.0;
        return std::pair<double, double>(mean,
                                         std::sqrt(var / xs.size()));
      };
      AggregateRow row;
      row.rho = rho;
      row.filter = config.filters[fi];
      std::tie(row.mean_rmse, row.rmse_se) = mean_se(rmse[fi]);
      std::tie(row.mean_loss_time, row.loss_time_se) = mean_se(loss[fi]);
      row.runs = config.runs;
      row.seed = config.seed;
      result.rows.push_back(row);
    }
  }
  return result;
}

// Per-step trace of a single run, for external plotting.
inline std::vector<TraceRow> trace_run(const ExperimentConfig& config,
                                       double rho, std::size_t density_index,
                                       int run_index) {
  modal_lmmse::detail::require(run_index >= 0 && run_index < config.runs,
                               "trace_run: run index out of range");
  return run_single(config, rho, density_index, run_index, true).trace;
}

}  // namespace modal_lmmse
