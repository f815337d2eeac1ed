#pragma once

/**
 * @file tracker.hpp
 * @brief Total-degree homotopy continuation for square polynomial systems.
 *
 * H(x, l) = (1 - l) F(x) + gamma l G(x) is followed from l = 1 (start
 * system G) to l = 0 (target F) with an Euler predictor on the Davidenko
 * equation and a Newton corrector at fixed l.
 */

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccroots/polynomial.hpp"

namespace ccroots {

struct TrackOptions {
  double step_init = 0.05;
  double step_min = 1e-9;
  double corrector_tol = 1e-10;
  int corrector_max_iters = 5;
  double divergence_norm = 1e8;
  double endpoint_lambda = 1e-12;
  double endgame_factor = 0.5;
  /// Distance to the end of the parameter interval at which the geometric schedule starts.
  double endgame_start = 0.1;
  std::uint64_t rng_seed = 0;
  double dedupe_radius = 1e-6;
  double refine_tol = 1e-12;
  int refine_max_iters = 50;
  double real_tol = 1e-8;
  /// 0: CCROOTS_THREADS, else hardware concurrency.
  int threads = 0;
  bool record_trace = false;

  void validate() const;
};

/// Worker count from `requested`, CCROOTS_THREADS, or the hardware.
int resolve_threads(int requested);

/// Solves J dx = b; least squares if J is rank deficient. Returns false when
/// J is numerically singular (the least-squares answer is still written).
bool linear_solve(const CMatrix& J, const CVector& b, CVector& dx);

// ---------------------------------------------------------------------------
// Generic continuation core
// ---------------------------------------------------------------------------

/// Writes H(x, s), dH/dx and dH/ds.
using HomotopyEval = std::function<void(const CVector& x, double s, CVector& h, CMatrix& hx, CVector& hs)>;

struct TracePoint {
  double s;
  CVector x;
};

struct ContinuationOutcome {
  enum class Status { reached, diverged, failed };
  Status status = Status::failed;
  CVector x;
  double s = 0.0;
  int steps = 0;
  std::string message;
  std::vector<TracePoint> trace;
  /// (distance to s_end, max-norm of x) after every accepted step.
  std::vector<std::pair<double, double>> norms;
};

/// Follows the zero curve of H from (x0, s_begin) toward s_end. Below
/// opts.endgame_start (distance to s_end, if `endgame` is set) the step is
/// capped at a fixed fraction of the remaining distance, so s approaches
/// s_end geometrically and stops at distance opts.endpoint_lambda. Without
/// the endgame the last step lands exactly on s_end.
ContinuationOutcome continue_path(const HomotopyEval& h, CVector x0, double s_begin, double s_end,
                                  const TrackOptions& opts, bool endgame);

// ---------------------------------------------------------------------------
// Polynomial homotopy
// ---------------------------------------------------------------------------

struct HomotopySpec {
  PolynomialSystem target;  ///< F, at lambda = 0
  PolynomialSystem start;   ///< G, at lambda = 1
  cplx gamma{1.0, 0.0};

  void validate() const;
  void eval(const CVector& x, double lambda, CVector& h, CMatrix& hx, CVector& hl) const;
};

struct StartSystem {
  PolynomialSystem system;
  std::vector<CVector> points;
};

/// G_i = x_i^{d_i} - 1 with all tuples of roots of unity as start points.
StartSystem total_degree_start(const PolynomialSystem& target);
/// Product of the equation degrees; throws if it exceeds `cap`.
std::uint64_t bezout_number(const PolynomialSystem& target, std::uint64_t cap = 10'000'000);

enum class PathStatus { converged, diverged_to_infinity, tracking_failed, clustered };
std::string to_string(PathStatus s);

struct PathResult {
  CVector start_point;
  std::optional<CVector> endpoint;
  PathStatus status = PathStatus::tracking_failed;
  int steps = 0;
  double residual = 0.0;  ///< ||F(endpoint)||_inf when an endpoint exists
  std::string message;
  std::vector<TracePoint> trace;
};

PathResult track_path(const HomotopySpec& h, const CVector& start, const TrackOptions& opts);

struct NewtonResult {
  CVector x;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  ///< ||F(x)||_inf
  std::string diagnostic;
};

/// Plain Newton on F; converged once ||F||_inf < tol.
NewtonResult newton_refine(const PolynomialSystem& target, const CVector& x0, double tol = 1e-12, int max_iters = 50);
/// Newton for any square map given as value + Jacobian.
NewtonResult newton_solve(const std::function<void(const CVector&, CVector&, CMatrix&)>& f, const CVector& x0,
                          double tol, int max_iters);

struct Solution {
  CVector point;
  double residual_norm = 0.0;
  int multiplicity = 1;
  bool is_real = false;
  std::optional<cplx> energy;
  std::vector<std::size_t> paths;  ///< indices of the paths ending here
};

struct SolutionSet {
  std::vector<Solution> solutions;
  std::vector<PathResult> paths;
  std::size_t n_paths_tracked = 0;
  std::size_t n_converged = 0;  ///< includes clustered paths
  std::size_t n_diverged = 0;
  std::size_t n_failed = 0;
  std::uint64_t bound_used = 0;
  cplx gamma{1.0, 0.0};
  TrackOptions options;
};

/// Unit complex number drawn from the seed.
cplx random_gamma(std::uint64_t seed);

/// Tracks every total-degree start point, refines, deduplicates and attaches
/// CC energies when the system carries an energy polynomial.
SolutionSet solve_all(const PolynomialSystem& target, const TrackOptions& opts = {});

/// Groups points within `radius` (max norm) transitively; returns a group
/// id per point, numbered by the lowest member index. Order independent.
std::vector<std::size_t> cluster_points(const std::vector<CVector>& points, double radius);

}  // namespace ccroots
