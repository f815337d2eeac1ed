#include "ccroots/tracker.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>

namespace ccroots {

namespace {

double max_norm(const CVector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

void TrackOptions::validate() const {
  if (!(step_init > 0 && step_min > 0 && corrector_tol > 0 && corrector_max_iters > 0 && divergence_norm > 0 &&
        endpoint_lambda > 0 && endgame_factor > 0 && endgame_factor < 1 && dedupe_radius > 0 && refine_tol > 0 &&
        refine_max_iters > 0 && real_tol > 0 && endgame_start > 0))
    throw InvalidArgument("tracking options must be positive (endgame_factor in (0,1))");
  if (step_min >= step_init) throw InvalidArgument("step_min must be smaller than step_init");
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CCROOTS_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(n);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

bool linear_solve(const CMatrix& J, const CVector& b, CVector& dx) {
  Eigen::FullPivLU<CMatrix> lu(J);
  if (lu.isInvertible()) {
    dx = lu.solve(b);
    if (dx.allFinite()) return true;
  }
  dx = J.completeOrthogonalDecomposition().solve(b);
  if (!dx.allFinite()) dx = CVector::Zero(J.cols());
  return false;
}

// ---------------------------------------------------------------------------
// Continuation core
// ---------------------------------------------------------------------------

namespace {

/// Newton at fixed s. Requires contraction of successive updates.
bool correct(const HomotopyEval& h, CVector& x, double s, const TrackOptions& opts) {
  CVector val, hs, dx;
  CMatrix hx;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.corrector_max_iters; ++it) {
    h(x, s, val, hx, hs);
    if (!linear_solve(hx, -val, dx)) return false;
    x += dx;
    const double step = max_norm(dx);
    if (!x.allFinite()) return false;
    if (step <= opts.corrector_tol * std::max(1.0, max_norm(x))) return true;
    if (it > 0 && step > 0.5 * prev) return false;
    prev = step;
  }
  return false;
}

}  // namespace

ContinuationOutcome continue_path(const HomotopyEval& h, CVector x0, double s_begin, double s_end,
                                  const TrackOptions& opts, bool endgame) {
  opts.validate();
  ContinuationOutcome out;
  const double dir = s_end >= s_begin ? 1.0 : -1.0;
  double s = s_begin;
  CVector x = std::move(x0);
  double step = opts.step_init;
  int successes = 0;
  bool retried_divergence = false;
  auto dist = [&](double v) { return std::abs(s_end - v); };

  if (opts.record_trace) out.trace.push_back({s, x});
  out.norms.emplace_back(dist(s), max_norm(x));

  CVector val, hs, dxds;
  CMatrix hx;
  while (true) {
    const double d = dist(s);
    if (endgame ? d <= opts.endpoint_lambda : d == 0.0) {
      out.status = ContinuationOutcome::Status::reached;
      break;
    }
    double hstep = std::min(step, d);
    if (endgame && d < opts.endgame_start) {
      hstep = std::min(hstep, d * (1.0 - opts.endgame_factor));
      if (d - hstep < opts.endpoint_lambda) hstep = d - opts.endpoint_lambda;
    }
    if (step < opts.step_min) {
      out.status = ContinuationOutcome::Status::failed;
      out.message = "step size fell below step_min";
      break;
    }
    // Euler predictor on dH/dx dx/ds = -dH/ds.
    h(x, s, val, hx, hs);
    const bool ok_pred = linear_solve(hx, -hs, dxds);
    const double s_next = (!endgame && hstep >= d) ? s_end : s + dir * hstep;
    CVector x_next = x + dxds * (s_next - s);
    if (!ok_pred || !correct(h, x_next, s_next, opts)) {
      step = std::min(step, hstep) * 0.5;
      successes = 0;
      continue;
    }
    if (max_norm(x_next) > opts.divergence_norm) {
      if (!retried_divergence) {
        retried_divergence = true;
        step = std::min(step, hstep) * 0.5;
        successes = 0;
        continue;
      }
      out.status = ContinuationOutcome::Status::diverged;
      out.message = "norm exceeded divergence threshold";
      x = x_next;
      s = s_next;
      ++out.steps;
      out.norms.emplace_back(dist(s), max_norm(x));
      break;
    }
    x = std::move(x_next);
    s = s_next;
    ++out.steps;
    out.norms.emplace_back(dist(s), max_norm(x));
    if (opts.record_trace) out.trace.push_back({s, x});
    if (++successes >= 3) {
      step *= 1.5;
      successes = 0;
    }
  }
  out.x = std::move(x);
  out.s = s;
  return out;
}

// ---------------------------------------------------------------------------
// Polynomial homotopy
// ---------------------------------------------------------------------------

void HomotopySpec::validate() const {
  if (target.n_vars() != start.n_vars() || !target.is_square() || !start.is_square())
    throw DimensionMismatch("target and start systems must be square with the same variables");
  if (std::abs(std::abs(gamma) - 1.0) > 1e-12) throw InvalidArgument("gamma must have unit modulus");
}

void HomotopySpec::eval(const CVector& x, double lambda, CVector& h, CMatrix& hx, CVector& hl) const {
  CVector f, g;
  CMatrix jf, jg;
  const std::span<const cplx> xs(x.data(), static_cast<std::size_t>(x.size()));
  target.eval_with_jacobian(xs, f, jf);
  start.eval_with_jacobian(xs, g, jg);
  h = (1.0 - lambda) * f + gamma * lambda * g;
  hx = (1.0 - lambda) * jf + gamma * lambda * jg;
  hl = gamma * g - f;
}

std::uint64_t bezout_number(const PolynomialSystem& target, std::uint64_t cap) {
  std::uint64_t n = 1;
  for (int d : target.degrees()) {
    if (d == 0) throw InvalidArgument("target contains an equation of degree zero");
    if (n > cap / static_cast<std::uint64_t>(d))
      throw CapabilityError("total-degree start system exceeds " + std::to_string(cap) + " paths");
    n *= static_cast<std::uint64_t>(d);
  }
  return n;
}

StartSystem total_degree_start(const PolynomialSystem& target) {
  if (!target.is_square()) throw DimensionMismatch("target system is not square");
  const auto degrees = target.degrees();
  const std::uint64_t count = bezout_number(target);
  const int n = target.n_vars();
  std::vector<Polynomial> eqs;
  for (int i = 0; i < n; ++i) {
    Polynomial p;
    p.add_term(Monomial::variable(i, degrees[static_cast<std::size_t>(i)]), 1.0);
    p.add_term(Monomial(), -1.0);
    eqs.push_back(std::move(p));
  }
  StartSystem s{PolynomialSystem(n, std::move(eqs), target.variable_names()), {}};
  s.points.reserve(count);
  // Mixed-radix enumeration, last variable fastest.
  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  for (std::uint64_t c = 0; c < count; ++c) {
    CVector x(n);
    for (int i = 0; i < n; ++i) {
      const double angle = 2.0 * std::numbers::pi * digit[static_cast<std::size_t>(i)] / degrees[static_cast<std::size_t>(i)];
      x[i] = std::polar(1.0, angle);
    }
    s.points.push_back(std::move(x));
    for (int i = n - 1; i >= 0; --i) {
      if (++digit[static_cast<std::size_t>(i)] < degrees[static_cast<std::size_t>(i)]) break;
      digit[static_cast<std::size_t>(i)] = 0;
    }
  }
  return s;
}

std::string to_string(PathStatus s) {
  switch (s) {
    case PathStatus::converged: return "converged";
    case PathStatus::diverged_to_infinity: return "diverged_to_infinity";
    case PathStatus::tracking_failed: return "tracking_failed";
    case PathStatus::clustered: return "clustered";
  }
  return "unknown";
}

NewtonResult newton_solve(const std::function<void(const CVector&, CVector&, CMatrix&)>& f, const CVector& x0,
                          double tol, int max_iters) {
  NewtonResult r;
  r.x = x0;
  CVector val, dx;
  CMatrix jac;
  f(r.x, val, jac);
  r.residual = max_norm(val);
  while (r.residual >= tol) {
    if (r.iterations >= max_iters) {
      r.diagnostic = "no convergence after " + std::to_string(max_iters) + " iterations";
      return r;
    }
    if (!linear_solve(jac, -val, dx)) {
      r.diagnostic = "singular Jacobian";
      // A least-squares step may still make progress at a singular root.
    }
    CVector trial = r.x + dx;
    CVector tval;
    CMatrix tjac;
    f(trial, tval, tjac);
    ++r.iterations;
    if (!trial.allFinite() || !tval.allFinite()) {
      r.diagnostic = "non-finite iterate";
      return r;
    }
    const double res = max_norm(tval);
    const bool stalled = max_norm(dx) <= 1e-15 * std::max(1.0, max_norm(r.x));
    r.x = std::move(trial);
    val = std::move(tval);
    jac = std::move(tjac);
    r.residual = res;
    if (stalled) break;
  }
  r.converged = r.residual < tol;
  if (r.converged) r.diagnostic.clear();
  else if (r.diagnostic.empty()) r.diagnostic = "stalled above tolerance";
  return r;
}

NewtonResult newton_refine(const PolynomialSystem& target, const CVector& x0, double tol, int max_iters) {
  if (!target.is_square()) throw DimensionMismatch("Newton refinement requires a square system");
  if (x0.size() != target.n_vars()) throw DimensionMismatch("start point length does not match variable count");
  return newton_solve(
      [&](const CVector& x, CVector& v, CMatrix& j) {
        target.eval_with_jacobian(std::span<const cplx>(x.data(), static_cast<std::size_t>(x.size())), v, j);
      },
      x0, tol, max_iters);
}

PathResult track_path(const HomotopySpec& h, const CVector& start, const TrackOptions& opts) {
  h.validate();
  PathResult r;
  r.start_point = start;
  {
    CVector v, hl;
    CMatrix hx;
    h.eval(start, 1.0, v, hx, hl);
    if (max_norm(v) >= opts.corrector_tol * 10.0)
      throw InvalidArgument("start point is not a zero of the start system");
  }
  const HomotopyEval eval = [&h](const CVector& x, double l, CVector& v, CMatrix& hx, CVector& hl) {
    h.eval(x, l, v, hx, hl);
  };
  ContinuationOutcome c = continue_path(eval, start, 1.0, 0.0, opts, true);
  r.steps = c.steps;
  r.trace = std::move(c.trace);

  // Norm growth over the last three decades of lambda separates paths
  // heading to infinity from paths approaching a (possibly singular) root.
  auto growing = [&]() {
    const auto& last = c.norms.back();
    for (auto it = c.norms.rbegin(); it != c.norms.rend(); ++it)
      if (it->first >= 1e3 * last.first) return last.second > 2.0 * std::max(1.0, it->second);
    return last.second > 2.0 * std::max(1.0, c.norms.front().second) && last.second > 1e3;
  };

  if (c.status == ContinuationOutcome::Status::diverged) {
    r.status = PathStatus::diverged_to_infinity;
    r.message = c.message;
    return r;
  }
  NewtonResult nr = newton_refine(h.target, c.x, opts.refine_tol, opts.refine_max_iters);
  const bool finite_ok = nr.converged && max_norm(nr.x) < opts.divergence_norm;
  if (finite_ok && (c.status == ContinuationOutcome::Status::reached || !growing())) {
    r.status = PathStatus::converged;
    r.endpoint = nr.x;
    r.residual = nr.residual;
    if (c.status != ContinuationOutcome::Status::reached) r.message = "refined after: " + c.message;
    return r;
  }
  if (growing()) {
    r.status = PathStatus::diverged_to_infinity;
    r.message = "norm growing toward lambda = 0";
  } else {
    r.status = PathStatus::tracking_failed;
    r.message = c.status == ContinuationOutcome::Status::failed ? c.message : "endpoint refinement failed: " + nr.diagnostic;
  }
  return r;
}

cplx random_gamma(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  return std::polar(1.0, angle(rng));
}

std::vector<std::size_t> cluster_points(const std::vector<CVector>& points, double radius) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (max_norm(points[i] - points[j]) <= radius) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::size_t> group(n);
  for (std::size_t i = 0; i < n; ++i) group[i] = find(i);
  return group;
}

SolutionSet solve_all(const PolynomialSystem& target, const TrackOptions& opts) {
  opts.validate();
  StartSystem st = total_degree_start(target);
  SolutionSet out;
  out.options = opts;
  out.bound_used = st.points.size();
  out.gamma = random_gamma(opts.rng_seed);
  const HomotopySpec spec{target, st.system, out.gamma};
  spec.validate();

  const std::size_t n_paths = st.points.size();
  out.paths.resize(n_paths);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n_paths; i = next++) {
      try {
        out.paths[i] = track_path(spec, st.points[i], opts);
      } catch (const std::exception& e) {
        out.paths[i] = PathResult{st.points[i], std::nullopt, PathStatus::tracking_failed, 0, 0.0, e.what(), {}};
      }
    }
  };
  const int n_threads = std::min<int>(resolve_threads(opts.threads), static_cast<int>(std::max<std::size_t>(1, n_paths)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  out.n_paths_tracked = n_paths;

  std::vector<std::size_t> conv;
  std::vector<CVector> pts;
  for (std::size_t i = 0; i < n_paths; ++i) {
    switch (out.paths[i].status) {
      case PathStatus::converged:
      case PathStatus::clustered:
        conv.push_back(i);
        pts.push_back(*out.paths[i].endpoint);
        break;
      case PathStatus::diverged_to_infinity: ++out.n_diverged; break;
      case PathStatus::tracking_failed: ++out.n_failed; break;
    }
  }
  out.n_converged = conv.size();

  const auto group = cluster_points(pts, opts.dedupe_radius);
  const auto& energy = target.metadata().energy;
  for (std::size_t g = 0; g < pts.size(); ++g) {
    if (group[g] != g) continue;
    Solution s;
    // Representative: smallest residual, ties to the lowest path index.
    std::size_t best = g;
    for (std::size_t k = g; k < pts.size(); ++k) {
      if (group[k] != g) continue;
      s.paths.push_back(conv[k]);
      if (out.paths[conv[k]].residual < out.paths[conv[best]].residual) best = k;
    }
    for (std::size_t p : s.paths)
      if (p != conv[best]) out.paths[p].status = PathStatus::clustered;
    s.point = pts[best];
    s.residual_norm = out.paths[conv[best]].residual;
    s.multiplicity = static_cast<int>(s.paths.size());
    s.is_real = s.point.size() == 0 || s.point.imag().cwiseAbs().maxCoeff() < opts.real_tol;
    if (energy) s.energy = energy->eval(std::span<const cplx>(s.point.data(), static_cast<std::size_t>(s.point.size())));
    out.solutions.push_back(std::move(s));
  }
  auto key = [](const Solution& s) {
    std::vector<double> k;
    if (s.energy) k.push_back(s.energy->real());
    for (long i = 0; i < s.point.size(); ++i) {
      k.push_back(s.point[i].real());
      k.push_back(s.point[i].imag());
    }
    return k;
  };
  std::stable_sort(out.solutions.begin(), out.solutions.end(),
                   [&](const Solution& a, const Solution& b) { return key(a) < key(b); });
  return out;
}

}  // namespace ccroots
