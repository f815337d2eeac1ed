#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ccroots/oracle.hpp"
#include "oracles.hpp"

using namespace ccroots;

namespace {

std::vector<ModelSpec> models() {
  return {build_hubbard(2, 1.0, 4.0, 1, 1), build_hubbard(3, 1.0, 2.0, 2, 1), build_pairing(2, 1.0, 0.5, 1),
          build_pairing(4, 1.0, 0.33, 2), build_hubbard(3, 0.8, 3.0, 1, 1, OrbitalBasis::hopping)};
}

TrackOptions single_thread() {
  TrackOptions o;
  o.threads = 1;
  return o;
}

}  // namespace

TEST(Fci, EigenpairsAreExact) {
  for (const auto& m : models()) {
    const auto fci = fci_solve(m);
    const CMatrix H = assemble_hamiltonian(m).dense();
    EXPECT_EQ(fci.states.size(), fci.basis.size());
    EXPECT_EQ(fci.reference_index, fci.basis.index_of(m.reference));
    for (std::size_t i = 0; i < fci.states.size(); ++i) {
      const auto& s = fci.states[i];
      EXPECT_NEAR(s.vector.norm(), 1.0, 1e-12);
      EXPECT_LT(oracle::max_abs(H * s.vector - s.energy * s.vector), 1e-10);
      EXPECT_EQ(s.reference_coefficient, s.vector[fci.reference_index]);
      if (i) EXPECT_LE(fci.states[i - 1].energy, s.energy);
    }
  }
}

TEST(Fci, HubbardDimerClosedForm) {
  const auto fci = fci_solve(build_hubbard(2, 1.0, 4.0, 1, 1));
  ASSERT_EQ(fci.states.size(), 4u);
  const double r = std::sqrt(8.0);
  const std::vector<double> expect{2.0 - r, 0.0, 4.0, 2.0 + r};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(fci.states[static_cast<std::size_t>(i)].energy, expect[static_cast<std::size_t>(i)], 1e-12);
}

TEST(Fci, DimensionCap) {
  EXPECT_THROW(fci_solve(build_hubbard(9, 1.0, 4.0, 4, 4)), CapabilityError);
}

TEST(Normalization, ReferenceCoefficientIsOne) {
  for (const auto& m : models()) {
    const auto fci = fci_solve(m);
    const auto states = intermediately_normalized(fci);
    EXPECT_FALSE(states.empty());
    const CMatrix H = assemble_hamiltonian(m).dense();
    for (const auto& s : states) {
      EXPECT_EQ(s.vector[fci.reference_index], cplx(1.0));
      EXPECT_LT(oracle::max_abs(H * s.vector - s.energy * s.vector), 1e-9 * s.vector.norm());
    }
  }
}

TEST(Normalization, DimerSkipsTriplet) {
  // The S_z = 0 triplet has no weight on the closed-shell reference.
  const auto states = intermediately_normalized(fci_solve(build_hubbard(2, 1.0, 4.0, 1, 1)));
  ASSERT_EQ(states.size(), 3u);
  EXPECT_NEAR(states[0].energy, 2.0 - std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(states[1].energy, 4.0, 1e-12);
}

TEST(Normalization, DegenerateLevelsGiveOneState) {
  // Non-interacting pairing: degenerate levels are mixed arbitrarily by the
  // eigensolver; only the projection of the reference is meaningful.
  const auto m = build_pairing(4, 1.0, 0.0, 2);
  const auto fci = fci_solve(m);
  const auto states = intermediately_normalized(fci);
  ASSERT_EQ(states.size(), 1u);
  EXPECT_NEAR(states[0].energy, 2.0, 1e-12);
  CVector e = CVector::Zero(static_cast<long>(fci.basis.size()));
  e[fci.reference_index] = 1.0;
  EXPECT_LT(oracle::max_abs(states[0].vector - e), 1e-10);
}

TEST(ClusterFromCi, CertifiesEveryNormalizedState) {
  for (const auto& m : models()) {
    const CCEvaluator cc(m, full_graph(m));
    for (const auto& s : intermediately_normalized(fci_solve(m))) {
      const CVector t = cluster_from_ci(cc.excitations(), s.vector);
      EXPECT_LT(oracle::max_abs(cc.residuals(t)), 1e-10) << m.label;
      EXPECT_NEAR(cc.energy(t).real(), s.energy, 1e-10);
      // Round trip: e^T |Phi_0> reproduces the CI vector.
      EXPECT_LT(oracle::max_abs(cc.state(t) - s.vector), 1e-10 * std::max(1.0, s.vector.norm()));
    }
  }
}

TEST(ClusterFromCi, RejectsBadInput) {
  const auto m = build_hubbard(2, 1.0, 4.0, 1, 1);
  const ExcitationSet full(full_graph(m), DeterminantBasis::sector(m));
  CVector c = CVector::Zero(4);
  c[full.reference_index()] = 2.0;
  EXPECT_THROW(cluster_from_ci(full, c), InvalidArgument);
  EXPECT_THROW(cluster_from_ci(full, CVector::Zero(3)), DimensionMismatch);
  const ExcitationSet singles(build_graph(m, 1), DeterminantBasis::sector(m));
  c[full.reference_index()] = 1.0;
  c[full.target_index(2)] = 0.5;  // double, outside the singles graph
  EXPECT_THROW(cluster_from_ci(singles, c), InvalidArgument);
}

TEST(Matching, GreedyOneToOne) {
  const std::vector<cplx> roots{cplx(1.0), cplx(2.0 + 1e-10), cplx(5.0), cplx(2.0, 1e-3)};
  const std::vector<double> eigs{2.0, 1.0 + 5e-9, 3.0};
  const auto r = match_energies(roots, eigs, 1e-8);
  ASSERT_EQ(r.matched.size(), 2u);
  EXPECT_EQ(r.unmatched_roots, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(r.unmatched_eigs, (std::vector<std::size_t>{2}));
  for (const auto& mm : r.matched) {
    EXPECT_LT(mm.delta_e, 1e-8);
    EXPECT_NEAR(roots[mm.root].real(), eigs[mm.eig], 1e-8);
  }
}

TEST(Matching, FullCcDimerIsPerfect) {
  const auto m = build_hubbard(2, 1.0, 4.0, 1, 1);
  const auto cc = generate_system(m, full_graph(m));
  auto sys = cc.residual_polys;
  const auto sols = solve_all(sys, single_thread());
  const auto rep = match_roots(sols, intermediately_normalized(fci_solve(m)), 1e-8);
  EXPECT_EQ(rep.matched.size(), 3u);
  EXPECT_TRUE(rep.unmatched_roots.empty());
  EXPECT_TRUE(rep.unmatched_eigs.empty());
}

TEST(Matching, DoublesOnlyDimerInBondingBasis) {
  // In the bonding basis CCD is exact for the two singlets reachable by pair
  // excitations; the other states have no reference weight.
  const auto m = build_hubbard(2, 1.0, 4.0, 1, 1, OrbitalBasis::hopping);
  const std::vector<int> doubles{2};
  const auto cc = generate_system(m, build_graph(m, doubles));
  const auto sols = solve_all(cc.residual_polys, single_thread());
  const auto states = intermediately_normalized(fci_solve(m));
  const auto rep = match_roots(sols, states, 1e-8);
  EXPECT_EQ(rep.matched.size() + rep.unmatched_roots.size(), sols.solutions.size());
  EXPECT_EQ(rep.matched.size() + rep.unmatched_eigs.size(), states.size());
  EXPECT_EQ(rep.matched.size(), 2u);
  EXPECT_EQ(states.size(), 2u);
  EXPECT_EQ(rep.unmatched_roots.size(), sols.solutions.size() - 2);
  const double r = std::sqrt(4.0 + 4.0);
  std::vector<double> e;
  for (const auto& mm : rep.matched) e.push_back(states[mm.eig].energy);
  std::sort(e.begin(), e.end());
  EXPECT_NEAR(e[0], 2.0 - r, 1e-10);
  EXPECT_NEAR(e[1], 2.0 + r, 1e-10);
}

TEST(Nondegeneracy, FullCcRootsAreRegular) {
  const auto m = build_hubbard(2, 1.0, 4.0, 1, 1);
  const CCEvaluator cc(m, full_graph(m));
  for (const auto& s : intermediately_normalized(fci_solve(m))) {
    const CVector t = cluster_from_ci(cc.excitations(), s.vector);
    const double sigma = nondegeneracy(cc, t);
    EXPECT_GT(sigma, 1e-8);
    const Eigen::JacobiSVD<CMatrix> svd(cc.jacobian(t));
    EXPECT_NEAR(sigma, svd.singularValues().minCoeff(), 1e-12);
  }
  EXPECT_THROW(nondegeneracy(cc, CVector::Constant(3, 0.3)), InvalidArgument);
}

TEST(Nondegeneracy, UnivariateSlopeAndDoubleRoot) {
  const auto m = build_hubbard(2, 1.0, 4.0, 1, 1, OrbitalBasis::hopping);
  const std::vector<int> doubles{2};
  const auto cc = generate_system(m, build_graph(m, doubles));
  const auto r = newton_refine(cc.residual_polys, CVector::Zero(1));
  ASSERT_TRUE(r.converged);
  const cplx slope = cc.residual_polys.jacobian(r.x)(0, 0);
  EXPECT_NEAR(nondegeneracy(cc.residual_polys, r.x), std::abs(slope), 1e-12);

  Polynomial sq;
  sq.add_term(Monomial::variable(0, 2), 1.0);
  const PolynomialSystem t2(1, {sq});
  EXPECT_LT(nondegeneracy(t2, CVector::Zero(1)), 1e-8);
}
