#pragma once

/**
 * @file ccpoly.hpp
 * @brief Coupled-cluster residuals, energies and their polynomial systems.
 *
 * For a two-body Hamiltonian the similarity transform
 * e^{-T} H e^{T} = sum_k ad_T^k(H) / k!  (ad_T(A) = [A, T])
 * terminates at k = 4, so every projection is a polynomial of degree <= 4 in
 * the amplitudes.
 */

#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ccroots/excitations.hpp"
#include "ccroots/model.hpp"
#include "ccroots/polynomial.hpp"

namespace ccroots {

using BigInt = boost::multiprecision::cpp_int;

/// Direct (matrix-based) evaluation of CC quantities on one excitation graph.
class CCEvaluator {
 public:
  CCEvaluator(const ModelSpec& model, ExcitationGraph graph);

  const ModelSpec& model() const noexcept { return model_; }
  const ExcitationGraph& graph() const noexcept { return excitations_.graph(); }
  const ExcitationSet& excitations() const noexcept { return excitations_; }
  const ManyBodyOperator& hamiltonian() const noexcept { return hamiltonian_; }
  std::size_t size() const noexcept { return excitations_.size(); }
  long dim() const noexcept { return excitations_.dim(); }

  /// r_mu = <Phi_mu| e^{-T} H e^{T} |Phi_0> from the terminating BCH sum.
  CVector residuals(const CVector& t) const;
  /// E_CC(t) = <Phi_0| e^{-T} H e^{T} |Phi_0>.
  cplx energy(const CVector& t) const;
  /// dr_mu/dt_nu = <Phi_mu| [H(t), X_nu] |Phi_0>.
  CMatrix jacobian(const CVector& t) const;

  /// ad_T^k(H) |Phi_0> over the whole determinant basis.
  CVector bch_term(const CVector& t, int k) const;
  /// e^{-T} H e^{T} |Phi_0> over the whole determinant basis.
  CVector transformed_reference(const CVector& t) const;
  /// e^{-T} H e^{T} v, through the power series of e^{+-T}.
  CVector similarity_apply(const CVector& t, const CVector& v) const;
  /// e^{T} |Phi_0>.
  CVector state(const CVector& t) const;
  /// ad_{X_nu1} ... ad_{X_nuk}(H) |Phi_0> for commuting X's.
  CVector nested_commutator(std::span<const std::size_t> nus) const;

  /// Components of a basis vector on the graph's |Phi_mu>.
  CVector project(const CVector& v) const;

 private:
  void check(const CVector& t) const;

  ModelSpec model_;
  ExcitationSet excitations_;
  ManyBodyOperator hamiltonian_;
};

struct CCSystem {
  ModelSpec model;
  ExcitationGraph graph;
  PolynomialSystem residual_polys;
  Polynomial energy_poly;
};

/// Variable name of an amplitude ("t_<holes>_<particles>").
std::string amplitude_name(const ExcitationIndex& mu);

/// Extracts the projected CC equations as polynomials from symmetric
/// multilinear commutator forms. Terms below `prune_tol` times the largest
/// coefficient of their equation are dropped.
CCSystem generate_system(const ModelSpec& model, const ExcitationGraph& graph, double prune_tol = 1e-14);

/// Rewrites a singles/doubles system with n_s + 2 n_d variables so every
/// equation has degree <= 2. The linked residuals are kept when they fit;
/// otherwise the unlinked equations are used (metadata().unlinked).
/// Auxiliary k = n_s + n_d + d stands for t_i^a t_j^b - t_i^b t_j^a of the
/// d-th double (i<j, a<b).
/// Throws InvalidArgument for graphs with ranks above 2.
PolynomialSystem quadratize(const CCSystem& cc);

/// g_mu = <Phi_mu| (H - E_CC(t)) e^T |Phi_0> = sum_nu <Phi_mu| e^T |Phi_nu> r_nu(t).
/// Same zero set as the linked residuals (the transform is unit triangular).
/// Requires a graph closed under lower ranks (every sub-excitation present).
std::vector<Polynomial> unlinked_equations(const CCSystem& cc);

/// (t, aux(t)) for a singles/doubles graph.
CVector lift_to_quadratic(const ExcitationGraph& graph, const CVector& t);

struct RootBounds {
  BigInt bezout_total;               ///< 4^K
  std::optional<BigInt> bezout_sd;   ///< 3^{n_s} 4^{n_d}
  std::optional<BigInt> quadratic;   ///< 2^{n_s + 2 n_d}
};

RootBounds root_bounds(const ExcitationGraph& graph);

/// Throws InvalidArgument for graphs with ranks above 2.
BigInt bezout_sd_bound(const ExcitationGraph& graph);
BigInt quadratic_bound(const ExcitationGraph& graph);

}  // namespace ccroots
