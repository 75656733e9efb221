#pragma once

// Domain types for a jump-linear system whose mode (the joint draw of the
// six system matrices) switches as a white process, plus exact trajectory
// simulation.
//
//   x_{k+1} = A_k x_k + B_k u_k + C_k w_k
//   y_k     = H_k x_k + G_k v_k + F_k xhat_{k-1}
//
// w, v are zero-mean unit-covariance white sequences. The F term feeds the
// previous state estimate back into the measurement (validation-window
// models); the B term optionally carries the estimate as a control input.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace modal_lmmse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// One joint draw {A,B,C,H,G,F} of the six system matrices.
struct ModeRealization {
  Matrix A;  // n x n state transition
  Matrix B;  // n x p input gain
  Matrix C;  // n x q process-noise shaping
  Matrix H;  // m x n observation
  Matrix G;  // m x r measurement-noise shaping
  Matrix F;  // m x n estimate-feedback observation term

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  Eigen::Index process_noise_dim() const { return C.cols(); }
  Eigen::Index meas_dim() const { return H.rows(); }
  Eigen::Index meas_noise_dim() const { return G.cols(); }
};

struct ModeAtom {
  double weight = 0.0;
  ModeRealization mode;
};

// Finitely supported distribution over mode realizations. All atoms must
// share the state dimension n and the (per-step) measurement dimension m;
// m may differ between time steps.
struct ModeDistribution {
  std::vector<ModeAtom> atoms;

  Eigen::Index state_dim() const { return atoms.at(0).mode.state_dim(); }
  Eigen::Index input_dim() const { return atoms.at(0).mode.input_dim(); }
  Eigen::Index meas_dim() const { return atoms.at(0).mode.meas_dim(); }
};

// Convenience: a distribution that always produces the same mode.
inline ModeDistribution deterministic_mode(ModeRealization mode) {
  return ModeDistribution{{ModeAtom{1.0, std::move(mode)}}};
}

inline std::vector<std::string> validate(const ModeDistribution& dist) {
  std::vector<std::string> violations;
  if (dist.atoms.empty()) {
    violations.push_back("distribution has no atoms");
    return violations;
  }
  double total = 0.0;
  for (const auto& atom : dist.atoms) total += atom.weight;
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "weights sum to " << total;
    violations.push_back(os.str());
  }
  for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
    const auto& atom = dist.atoms[i];
    if (atom.weight < 0.0) {
      violations.push_back("atom " + std::to_string(i) + " has negative weight");
    }
    const ModeRealization& mode = atom.mode;
    const Eigen::Index n = mode.A.rows();
    if (mode.A.cols() != n) {
      violations.push_back("atom " + std::to_string(i) + ": A not square");
    }
    if (mode.B.rows() != n || mode.C.rows() != n) {
      violations.push_back("atom " + std::to_string(i) +
                           ": dynamics row dims differ");
    }
    const Eigen::Index m = mode.H.rows();
    if (mode.G.rows() != m || mode.F.rows() != m) {
      violations.push_back("atom " + std::to_string(i) +
                           ": measurement dims differ");
    }
    if (mode.H.cols() != n || mode.F.cols() != n) {
      violations.push_back("atom " + std::to_string(i) +
                           ": H/F column count differs from state dim");
    }
  }
  const auto& first = dist.atoms.front().mode;
  for (std::size_t i = 1; i < dist.atoms.size(); ++i) {
    const auto& mode = dist.atoms[i].mode;
    if (mode.state_dim() != first.state_dim()) {
      violations.push_back("atom " + std::to_string(i) +
                           ": state dim differs across atoms");
    }
    if (mode.meas_dim() != first.meas_dim()) {
      violations.push_back("atom " + std::to_string(i) +
                           ": measurement dim differs across atoms");
    }
    if (mode.input_dim() != first.input_dim()) {
      violations.push_back("atom " + std::to_string(i) +
                           ": input dim differs across atoms");
    }
  }
  return violations;
}

struct DeterministicInput {
  std::vector<Vector> sequence;  // u_k for k = 0,1,...
};

// u_k = xhat_k; requires p == n in every atom.
struct FeedbackEstimateInput {};

using InputPolicy = std::variant<DeterministicInput, FeedbackEstimateInput>;

struct SystemSpec {
  Eigen::Index n = 0;
  Vector x0_mean;
  Matrix P0;  // initial state covariance
  InputPolicy input_policy = DeterministicInput{};
  std::function<ModeDistribution(int k)> mode_law;
};

struct NoiseDraw {
  Vector w;  // process noise
  Vector v;  // measurement noise
};

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Symmetric square root via eigendecomposition; tolerates PSD inputs with
// zero (or slightly negative, from rounding) eigenvalues.
inline Matrix psd_sqrt(const Matrix& P) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(P);
  Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

inline Vector step_state(const Vector& x, const ModeRealization& mode,
                         const Vector& u, const Vector& w) {
  detail::require(mode.A.cols() == x.size(), "step_state: A/x dim mismatch");
  detail::require(mode.B.cols() == u.size(), "step_state: B/u dim mismatch");
  detail::require(mode.C.cols() == w.size(), "step_state: C/w dim mismatch");
  return mode.A * x + mode.B * u + mode.C * w;
}

inline Vector measure(const Vector& x, const ModeRealization& mode,
                      const Vector& v, const Vector& xhat_prev) {
  detail::require(mode.H.cols() == x.size(), "measure: H/x dim mismatch");
  detail::require(mode.G.cols() == v.size(), "measure: G/v dim mismatch");
  detail::require(mode.F.cols() == xhat_prev.size(),
                  "measure: F/xhat dim mismatch");
  return mode.H * x + mode.G * v + mode.F * xhat_prev;
}

struct Trajectory {
  std::vector<Vector> states;           // x_0 .. x_horizon
  std::vector<ModeRealization> modes;   // mode draw at k = 0 .. horizon
  std::vector<NoiseDraw> noises;        // (w_k, v_k) at k = 0 .. horizon
};

inline ModeRealization sample_mode(const ModeDistribution& dist,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  for (const auto& atom : dist.atoms) {
    acc += atom.weight;
    if (u <= acc) return atom.mode;
  }
  return dist.atoms.back().mode;
}

// Exact open-loop simulation. Requires a deterministic input policy; the
// estimate-feedback variant needs a filter in the loop and is handled by
// the feedback-transformed problem instead.
inline Trajectory simulate(const SystemSpec& spec, int horizon,
                           std::uint64_t seed) {
  detail::require(std::holds_alternative<DeterministicInput>(spec.input_policy),
                  "simulate: deterministic input policy required");
  const auto& inputs = std::get<DeterministicInput>(spec.input_policy);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Trajectory traj;
  traj.states.reserve(horizon + 1);

  Vector z(spec.n);
  for (Eigen::Index i = 0; i < spec.n; ++i) z(i) = gauss(rng);
  traj.states.push_back(spec.x0_mean + detail::psd_sqrt(spec.P0) * z);

  for (int k = 0; k <= horizon; ++k) {
    ModeDistribution dist = spec.mode_law(k);
    ModeRealization mode = sample_mode(dist, rng);
    NoiseDraw noise;
    noise.w.resize(mode.process_noise_dim());
    for (Eigen::Index i = 0; i < noise.w.size(); ++i) noise.w(i) = gauss(rng);
    noise.v.resize(mode.meas_noise_dim());
    for (Eigen::Index i = 0; i < noise.v.size(); ++i) noise.v(i) = gauss(rng);

    if (k < horizon) {
      Vector u;
      if (mode.input_dim() > 0) {
        detail::require(static_cast<int>(inputs.sequence.size()) > k,
                        "simulate: input sequence shorter than horizon");
        u = inputs.sequence[k];
      } else {
        u = Vector(0);
      }
      traj.states.push_back(step_state(traj.states.back(), mode, u, noise.w));
    }
    traj.modes.push_back(std::move(mode));
    traj.noises.push_back(std::move(noise));
  }
  return traj;
}

}  // namespace modal_lmmse
