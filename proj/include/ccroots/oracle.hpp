#pragma once

/**
 * @file oracle.hpp
 * @brief Exact diagonalization ground truth and CI/CC conversion.
 */

#include <optional>
#include <vector>

#include "ccroots/ccpoly.hpp"
#include "ccroots/tracker.hpp"

namespace ccroots {

/// Largest sector dimension accepted by the dense eigensolver.
inline constexpr long kMaxDenseDimension = 5000;

struct EigenPair {
  double energy = 0.0;
  CVector vector;  ///< unit norm, over the sector basis
  cplx reference_coefficient{0.0, 0.0};
};

struct FciResult {
  DeterminantBasis basis;
  long reference_index = -1;
  std::vector<EigenPair> states;  ///< ascending energy
};

/// Full spectrum by dense Hermitian diagonalization.
/// Throws CapabilityError above kMaxDenseDimension.
FciResult fci_solve(const ModelSpec& model);

struct NormalizedState {
  std::size_t eig_index;  ///< position in FciResult::states
  double energy;
  CVector vector;  ///< reference coefficient exactly 1
};

/// States with |c_ref| > threshold, scaled to unit reference coefficient.
/// Degenerate levels (|dE| < degeneracy_tol) contribute a single state: the
/// projection of the reference onto the eigenspace.
std::vector<NormalizedState> intermediately_normalized(const FciResult& fci, double threshold = 1e-8,
                                                       double degeneracy_tol = 1e-8);

/// T = log(1 + C) as amplitudes on `graph` (normally the full graph).
/// Throws InvalidArgument unless c's reference coefficient is 1 and c lies in
/// the span of the reference and the graph's excited determinants.
CVector cluster_from_ci(const ExcitationSet& excitations, const CVector& c);

struct RootMatch {
  std::size_t root;
  std::size_t eig;
  double delta_e;
};

struct MatchReport {
  std::vector<RootMatch> matched;
  std::vector<std::size_t> unmatched_roots;
  std::vector<std::size_t> unmatched_eigs;  ///< indices into the candidate list
  double tol_e = 1e-8;
};

/// One-to-one matching of root energies against eigenvalues within tol_e.
/// Both lists are sorted by real part and paired greedily by smallest
/// distance.
MatchReport match_energies(const std::vector<cplx>& roots, const std::vector<double>& eigs, double tol_e = 1e-8);

/// Matches the energies of a solution set against the intermediately
/// normalized eigenstates (eig indices refer to `states`).
MatchReport match_roots(const SolutionSet& sols, const std::vector<NormalizedState>& states, double tol_e = 1e-8);

/// Smallest singular value of the CC Jacobian at t.
/// Throws InvalidArgument when ||residual(t)|| >= precondition_tol.
double nondegeneracy(const CCEvaluator& cc, const CVector& t, double precondition_tol = 1e-6);
/// Same for an arbitrary square polynomial system.
double nondegeneracy(const PolynomialSystem& sys, const CVector& x, double precondition_tol = 1e-6);

}  // namespace ccroots
