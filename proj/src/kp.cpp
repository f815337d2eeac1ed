#include "ccroots/kp.hpp"

#include <algorithm>
#include <cmath>

namespace ccroots {

namespace {

std::span<const cplx> as_span(const CVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

double inf_norm(const CVector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

KPHomotopy::KPHomotopy(const ModelSpec& model, int rho)
    : full_(model, full_graph(model)),
      split_(ccroots::split(full_.graph(), rho, model.n_electrons())),
      low_(model, split_.low_graph()) {}

void KPHomotopy::check(const CVector& t) const {
  if (t.size() != static_cast<long>(full_.size()))
    throw DimensionMismatch("amplitude vector has length " + std::to_string(t.size()) + ", untruncated graph has " +
                            std::to_string(full_.size()) + " indices");
}

CVector KPHomotopy::embed(const KPState& s) const { return split_.embed(s.t_low, s.t_high); }

KPState KPHomotopy::make_state(const CVector& t_full, double lambda) const {
  return {split_.low_part(t_full), split_.high_part(t_full), lambda};
}

void KPHomotopy::eval(const CVector& t, double lambda, CVector& value, CMatrix& jac, CVector& dlambda) const {
  check(t);
  const auto& ex = full_.excitations();
  const long K = static_cast<long>(full_.size());
  const CVector t0 = split_.embed(split_.low_part(t), CVector::Zero(static_cast<long>(split_.high.size())));
  const CVector tp = t - t0;
  const CVector ref = ex.reference_vector();
  const CVector ep = ex.apply_exp(as_span(tp), ref);
  const CVector v = (1.0 - lambda) * ref + lambda * ep;
  const CVector hv = full_.similarity_apply(t0, v);

  // High rows are the untruncated CC equations.
  const CVector a = full_.residuals(t);
  const CMatrix ja = full_.jacobian(t);
  value = a;
  jac = ja;
  dlambda = CVector::Zero(K);
  for (std::size_t li : split_.low) {
    const long row = ex.target_index(li);
    value[static_cast<long>(li)] = hv[row];
  }
  for (std::size_t nu : split_.low) {
    const CVector col = full_.similarity_apply(t0, ex.apply(nu, v)) - ex.apply(nu, hv);
    for (std::size_t li : split_.low) jac(static_cast<long>(li), static_cast<long>(nu)) = col[ex.target_index(li)];
  }
  for (std::size_t nu : split_.high) {
    const CVector col = lambda * full_.similarity_apply(t0, ex.apply(nu, ep));
    for (std::size_t li : split_.low) jac(static_cast<long>(li), static_cast<long>(nu)) = col[ex.target_index(li)];
  }
  if (!split_.high.empty()) {
    const CVector dl = full_.similarity_apply(t0, ep - ref);
    for (std::size_t li : split_.low) dlambda[static_cast<long>(li)] = dl[ex.target_index(li)];
  }
}

CVector KPHomotopy::residual(const CVector& t, double lambda) const {
  check(t);
  const auto& ex = full_.excitations();
  const CVector t0 = split_.embed(split_.low_part(t), CVector::Zero(static_cast<long>(split_.high.size())));
  const CVector tp = t - t0;
  const CVector ref = ex.reference_vector();
  const CVector v = (1.0 - lambda) * ref + lambda * ex.apply_exp(as_span(tp), ref);
  const CVector hv = full_.similarity_apply(t0, v);
  CVector out = split_.high.empty() ? CVector(CVector::Zero(t.size())) : full_.residuals(t);
  for (std::size_t li : split_.low) out[static_cast<long>(li)] = hv[ex.target_index(li)];
  return out;
}

CMatrix KPHomotopy::jacobian(const CVector& t, double lambda) const {
  CVector v, dl;
  CMatrix j;
  eval(t, lambda, v, j, dl);
  return j;
}

CVector kp_residual(const ModelSpec& model, int rho, const KPState& state) {
  KPHomotopy kp(model, rho);
  return kp.residual(state);
}

// ---------------------------------------------------------------------------
// lambda = 0
// ---------------------------------------------------------------------------

Lambda0Result solve_lambda0(const KPHomotopy& kp, const Lambda0Options& opts) {
  Lambda0Result out;
  const auto& sp = kp.split();
  const auto& low = kp.truncated();
  const long n_low = static_cast<long>(sp.low.size());
  const long n_high = static_cast<long>(sp.high.size());

  std::vector<CVector> low_starts;
  if (opts.zero_start) low_starts.push_back(CVector::Zero(n_low));
  for (const auto& s : opts.extra_low_starts) {
    if (s.size() != n_low) throw DimensionMismatch("low-rank start has the wrong length");
    low_starts.push_back(s);
  }
  if (opts.homotopy_starts) {
    const CCSystem truncated = generate_system(kp.model(), low.graph());
    const SolutionSet sols = solve_all(truncated.residual_polys, opts.track);
    for (const auto& s : sols.solutions) low_starts.push_back(s.point);
  }
  std::vector<CVector> high_starts{CVector::Zero(n_high)};
  for (const auto& s : opts.extra_high_starts) {
    if (s.size() != n_high) throw DimensionMismatch("high-rank start has the wrong length");
    high_starts.push_back(s);
  }

  // Stage 1: truncated CC equations.
  std::vector<CVector> t0_roots;
  for (std::size_t k = 0; k < low_starts.size(); ++k) {
    const NewtonResult r = newton_solve(
        [&](const CVector& x, CVector& v, CMatrix& j) {
          v = low.residuals(x);
          j = low.jacobian(x);
        },
        low_starts[k], opts.tol, opts.max_iters);
    if (!r.converged) {
      out.failures.push_back("stage 1 start " + std::to_string(k) + ": " + r.diagnostic);
      continue;
    }
    const bool seen = std::any_of(t0_roots.begin(), t0_roots.end(), [&](const CVector& y) {
      return inf_norm(y - r.x) <= opts.dedupe_radius;
    });
    if (!seen) t0_roots.push_back(r.x);
  }

  // Stage 2: auxiliary equation for tp with t0 fixed.
  const auto& full = kp.full();
  for (std::size_t a = 0; a < t0_roots.size(); ++a) {
    std::vector<CVector> tps;
    for (std::size_t k = 0; k < high_starts.size(); ++k) {
      if (n_high == 0) {
        tps.emplace_back(0);
        break;
      }
      const NewtonResult r = newton_solve(
          [&](const CVector& x, CVector& v, CMatrix& j) {
            const CVector t = sp.embed(t0_roots[a], x);
            const CVector res = full.residuals(t);
            const CMatrix jac = full.jacobian(t);
            v.resize(n_high);
            j.resize(n_high, n_high);
            for (long p = 0; p < n_high; ++p) {
              v[p] = res[static_cast<long>(sp.high[static_cast<std::size_t>(p)])];
              for (long q = 0; q < n_high; ++q)
                j(p, q) = jac(static_cast<long>(sp.high[static_cast<std::size_t>(p)]),
                              static_cast<long>(sp.high[static_cast<std::size_t>(q)]));
            }
          },
          high_starts[k], opts.tol, opts.max_iters);
      if (!r.converged) {
        out.failures.push_back("stage 2 root " + std::to_string(a) + " start " + std::to_string(k) + ": " +
                               r.diagnostic);
        continue;
      }
      const bool seen = std::any_of(tps.begin(), tps.end(),
                                    [&](const CVector& y) { return inf_norm(y - r.x) <= opts.dedupe_radius; });
      if (!seen) tps.push_back(r.x);
    }
    for (auto& tp : tps) out.states.push_back({t0_roots[a], tp, 0.0});
  }
  std::stable_sort(out.states.begin(), out.states.end(), [&](const KPState& x, const KPState& y) {
    return low.energy(x.t_low).real() < low.energy(y.t_low).real();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Tracking
// ---------------------------------------------------------------------------

std::string to_string(KPStatus s) {
  switch (s) {
    case KPStatus::reached_full: return "reached_full";
    case KPStatus::diverged: return "diverged";
    case KPStatus::failed: return "failed";
  }
  return "unknown";
}

KPTrajectory kp_track(const KPHomotopy& kp, const KPState& state0, const TrackOptions& opts) {
  KPTrajectory tr;
  const CVector x0 = kp.embed(state0);
  const double r0 = inf_norm(kp.residual(x0, state0.lambda));
  if (!(r0 < std::max(opts.corrector_tol * 10.0, 1e-9)))
    throw InvalidArgument("start state does not solve the homotopy at its lambda (residual " + std::to_string(r0) +
                          ")");

  TrackOptions o = opts;
  o.record_trace = true;
  const HomotopyEval h = [&kp](const CVector& x, double l, CVector& v, CMatrix& j, CVector& dl) {
    kp.eval(x, l, v, j, dl);
  };
  const ContinuationOutcome c = continue_path(h, x0, state0.lambda, 1.0, o, false);

  const auto& sp = kp.split();
  const auto& full = kp.full();
  const auto& low = kp.truncated();
  for (const auto& p : c.trace) {
    const CVector tl = sp.low_part(p.x);
    tr.samples.push_back({p.s, tl, sp.high_part(p.x), inf_norm(kp.residual(p.x, p.s)), low.energy(tl),
                          full.energy(p.x), (p.x - x0).norm()});
  }
  if (c.status != ContinuationOutcome::Status::reached) {
    tr.endpoint_status = c.status == ContinuationOutcome::Status::diverged ? KPStatus::diverged : KPStatus::failed;
    tr.message = c.message + " at lambda = " + std::to_string(c.s);
    return tr;
  }
  const NewtonResult r = newton_solve(
      [&](const CVector& x, CVector& v, CMatrix& j) {
        v = full.residuals(x);
        j = full.jacobian(x);
      },
      c.x, opts.refine_tol, opts.refine_max_iters);
  tr.final_residual = r.residual;
  if (r.residual < 1e-8) {
    tr.endpoint_status = KPStatus::reached_full;
    tr.endpoint = kp.make_state(r.x, 1.0);
    const CMatrix J = full.jacobian(r.x);
    tr.sigma_min = J.size() ? Eigen::JacobiSVD<CMatrix>(J).singularValues().minCoeff() : 0.0;
    tr.degenerate = *tr.sigma_min < 1e-8;
  } else {
    tr.endpoint_status = KPStatus::failed;
    tr.message = "endpoint refinement failed: " + r.diagnostic;
  }
  return tr;
}

cplx overlap(const ExcitationSet& a, const CVector& t_a, const ExcitationSet& b, const CVector& t_b) {
  if (a.basis().determinants() != b.basis().determinants() || a.graph().reference() != b.graph().reference())
    throw InvalidArgument("overlap requires graphs over the same sector and reference");
  const CVector va = a.apply_exp(as_span(t_a), a.reference_vector());
  const CVector vb = b.apply_exp(as_span(t_b), b.reference_vector());
  return va.dot(vb);  // conjugates the left factor
}

EnergyErrorBundle energy_error_bundle(const KPHomotopy& kp, const KPState& state_low, const CVector& t_full,
                                      double tol) {
  const double r_low = inf_norm(kp.residual(kp.embed(state_low), 0.0));
  if (!(r_low < tol))
    throw InvalidArgument("low state does not solve the lambda = 0 equations (residual " + std::to_string(r_low) +
                          ")");
  const double r_full = inf_norm(kp.full().residuals(t_full));
  if (!(r_full < tol))
    throw InvalidArgument("full amplitudes do not solve the untruncated equations (residual " +
                          std::to_string(r_full) + ")");
  EnergyErrorBundle b;
  const auto& low = kp.truncated();
  b.delta_e = low.energy(state_low.t_low) - kp.full().energy(t_full);
  b.t_perp_norm = state_low.t_high.norm();
  b.overlap = overlap(low.excitations(), state_low.t_low, kp.full().excitations(), t_full);
  b.orthogonal_warning = std::abs(b.overlap) < 1e-8;
  if (b.orthogonal_warning)
    b.warning = "states are nearly orthogonal; they represent different eigenstates and the energy comparison is "
                "not meaningful";
  return b;
}

}  // namespace ccroots
