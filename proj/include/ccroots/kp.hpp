#pragma once

/**
 * @file kp.hpp
 * @brief Kowalski-Piecuch homotopy between truncated and untruncated CC.
 *
 * Amplitudes on the untruncated graph are split as t = t0 + tp (ranks <= rho
 * and > rho). With H(t) = e^{-T} H e^{T}:
 *
 *   low block   <Phi_mu0| H(t0) ((1 - l) + l e^{T(tp)}) |Phi_0>
 *   high block  <Phi_mup| H(t0 + tp) |Phi_0>
 *
 * At l = 0 the low block is the truncated CC residual and the high block the
 * auxiliary equation for tp; at l = 1 the system equals the untruncated
 * residual because <Phi_mu0| e^{-T(tp)} = <Phi_mu0|.
 */

#include <optional>
#include <string>
#include <vector>

#include "ccroots/ccpoly.hpp"
#include "ccroots/tracker.hpp"

namespace ccroots {

struct KPState {
  CVector t_low;   ///< V0 coordinates, split.low order
  CVector t_high;  ///< Vp coordinates, split.high order
  double lambda = 0.0;
};

class KPHomotopy {
 public:
  /// Untruncated graph of `model` split at rho (2 <= rho <= n_elec).
  KPHomotopy(const ModelSpec& model, int rho);

  const ModelSpec& model() const noexcept { return full_.model(); }
  const AmplitudeSplit& split() const noexcept { return split_; }
  const CCEvaluator& full() const noexcept { return full_; }
  const CCEvaluator& truncated() const noexcept { return low_; }

  CVector embed(const KPState& s) const;
  KPState make_state(const CVector& t_full, double lambda) const;

  /// K_KP in untruncated graph order.
  CVector residual(const CVector& t_full, double lambda) const;
  CVector residual(const KPState& s) const { return residual(embed(s), s.lambda); }
  /// Value, d/dt and d/dlambda of K_KP.
  void eval(const CVector& t_full, double lambda, CVector& value, CMatrix& jac, CVector& dlambda) const;
  CMatrix jacobian(const CVector& t_full, double lambda) const;

 private:
  void check(const CVector& t) const;

  CCEvaluator full_;
  AmplitudeSplit split_;
  CCEvaluator low_;
};

/// Convenience wrapper: K_KP(state) for a fresh homotopy.
CVector kp_residual(const ModelSpec& model, int rho, const KPState& state);

struct Lambda0Options {
  double tol = 1e-12;
  bool zero_start = true;  ///< start stage 1 from t0 = 0
  int max_iters = 50;
  /// Also start stage 1 from every root of the truncated system found by solve_all.
  bool homotopy_starts = false;
  TrackOptions track;
  std::vector<CVector> extra_low_starts;
  std::vector<CVector> extra_high_starts;
  double dedupe_radius = 1e-6;
};

struct Lambda0Result {
  std::vector<KPState> states;        ///< distinct, sorted by truncated energy
  std::vector<std::string> failures;  ///< per-candidate diagnostics
};

/// Stage 1: truncated CC for t0. Stage 2: auxiliary equation for tp at fixed t0.
Lambda0Result solve_lambda0(const KPHomotopy& kp, const Lambda0Options& opts = {});

enum class KPStatus { reached_full, diverged, failed };
std::string to_string(KPStatus s);

struct KPSample {
  double lambda;
  CVector t_low;
  CVector t_high;
  double residual_norm;  ///< ||K_KP||_inf
  cplx energy_low;       ///< E_CC(t0)
  cplx energy_full;      ///< E_CC(t0 + tp)
  double drift;          ///< ||t(l) - t(0)||_2
};

struct KPTrajectory {
  std::vector<KPSample> samples;
  KPStatus endpoint_status = KPStatus::failed;
  std::optional<KPState> endpoint;
  double final_residual = 0.0;  ///< ||A(t1)||_inf after refinement
  std::optional<double> sigma_min;
  bool degenerate = false;  ///< sigma_min < 1e-8
  std::string message;
};

/// Continuation from lambda = 0 to 1, refined against the untruncated residual.
KPTrajectory kp_track(const KPHomotopy& kp, const KPState& state0, const TrackOptions& opts = {});

/// <e^{T_a} Phi_0 | e^{T_b} Phi_0>; both sets must share the basis.
cplx overlap(const ExcitationSet& a, const CVector& t_a, const ExcitationSet& b, const CVector& t_b);

struct EnergyErrorBundle {
  cplx delta_e;  ///< E_CC(t0) - E_CC(t_full)
  double t_perp_norm;
  cplx overlap;  ///< <e^{T(t0)} Phi_0 | e^{T(t_full)} Phi_0>
  bool orthogonal_warning;  ///< |overlap| < 1e-8
  std::string warning;
};

/// Requires state_low to solve the lambda = 0 system and t_full the
/// untruncated equations, both to `tol`.
EnergyErrorBundle energy_error_bundle(const KPHomotopy& kp, const KPState& state_low, const CVector& t_full,
                                      double tol = 1e-8);

}  // namespace ccroots
