#include <gtest/gtest.h>

#include <bit>
#include <random>
#include <sstream>

#include "ccroots/model.hpp"
#include "oracles.hpp"

using namespace ccroots;

namespace {

double hermiticity_defect(const CMatrix& H) { return (H - H.adjoint()).cwiseAbs().maxCoeff(); }

std::vector<ModelSpec> small_models() {
  return {build_hubbard(2, 1.0, 4.0, 1, 1),
          build_hubbard(3, 1.0, 2.0, 2, 1),
          build_hubbard(3, 0.7, 3.0, 1, 1, OrbitalBasis::hopping),
          build_hubbard(4, 1.0, 2.0, 2, 2),
          build_pairing(2, 1.0, 0.5, 1),
          build_pairing(4, 1.0, 0.33, 2)};
}

}  // namespace

TEST(SpinOrbital, InterleavedIndexing) {
  for (int s = 0; s < 8; ++s)
    for (Spin sp : {Spin::up, Spin::down}) {
      const auto so = SpinOrbital::from_spatial(s, sp);
      EXPECT_EQ(so.index, 2 * s + static_cast<int>(sp));
      const auto back = SpinOrbital::from_index(so.index);
      EXPECT_EQ(back.spatial, s);
      EXPECT_EQ(back.spin, sp);
    }
}

TEST(Determinant, CreateThenAnnihilateHasUnitPhase) {
  for (std::uint64_t bits = 0; bits < 256; ++bits) {
    const Determinant d(bits);
    for (int p = 0; p < 8; ++p) {
      if (d.occupied(p)) continue;
      int phase = 1;
      auto up = d.create(p, phase);
      ASSERT_TRUE(up);
      auto back = up->annihilate(p, phase);
      ASSERT_TRUE(back);
      EXPECT_EQ(*back, d);
      EXPECT_EQ(phase, 1);
    }
  }
}

TEST(Determinant, PhaseCountsOccupiedBelow) {
  const Determinant d(0b101101);
  EXPECT_EQ(d.phase_below(0), 1);
  EXPECT_EQ(d.phase_below(1), -1);
  EXPECT_EQ(d.phase_below(4), -1);
  EXPECT_EQ(d.phase_below(6), 1);
  int phase = 1;
  EXPECT_FALSE(d.create(0, phase));
  EXPECT_FALSE(d.annihilate(1, phase));
}

TEST(Enumerate, SectorCountsAndOrder) {
  const auto dets = enumerate_determinants(8, 2, 2);
  EXPECT_EQ(dets.size(), 36u);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(dets[i].count(), 4);
    EXPECT_EQ(dets[i].count(Spin::up), 2);
    if (i) EXPECT_LT(dets[i - 1].bits(), dets[i].bits());
  }
  EXPECT_THROW(enumerate_determinants(4, 3, 0), InvalidSector);
  EXPECT_THROW(enumerate_determinants(66, 1, 1), CapabilityError);
}

TEST(Builders, HubbardDimer) {
  const auto m = build_hubbard(2, 1.0, 4.0, 1, 1);
  EXPECT_EQ(m.n_spin_orbitals(), 4);
  EXPECT_EQ(m.reference.bits(), 0b0011u);
  EXPECT_DOUBLE_EQ(m.integrals.one(0, 1), -1.0);
  EXPECT_DOUBLE_EQ(m.integrals.two(0, 0, 0, 0), 4.0);
  EXPECT_DOUBLE_EQ(m.integrals.two(0, 0, 1, 1), 0.0);
  EXPECT_EQ(DeterminantBasis::sector(m).size(), 4u);
  EXPECT_THROW(build_hubbard(2, 1.0, 4.0, 3, 0), InvalidSector);
  EXPECT_THROW(build_hubbard(33, 1.0, 4.0, 1, 1), CapabilityError);
}

TEST(Builders, HoppingFreeHubbardIsDiagonal) {
  const CMatrix H = assemble_hamiltonian(build_hubbard(2, 0.0, 4.0, 1, 1)).dense();
  EXPECT_LT((H - CMatrix(H.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Builders, PairingNonInteractingGround) {
  const CMatrix H = assemble_hamiltonian(build_pairing(4, 1.0, 0.0, 2)).dense();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  EXPECT_NEAR(es.eigenvalues()[0], 2.0, 1e-12);
  EXPECT_THROW(build_pairing(2, 1.0, 0.5, 3), InvalidSector);
}

TEST(Builders, PairingTwoLevelMatchesClosedForm) {
  // Seniority-zero block {|0 up 0 dn>, |1 up 1 dn>} = [[-g, -g], [-g, 2e - g]].
  const double g = 0.5, e = 1.0;
  const auto m = build_pairing(2, e, g, 1);
  const auto basis = DeterminantBasis::sector(m);
  const CMatrix H = assemble_hamiltonian(m).dense();
  const long a = basis.index_of(Determinant(0b0011)), b = basis.index_of(Determinant(0b1100));
  EXPECT_NEAR(H(a, a).real(), -g, 1e-15);
  EXPECT_NEAR(H(b, b).real(), 2 * e - g, 1e-15);
  EXPECT_NEAR(H(a, b).real(), -g, 1e-15);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  const double mid = e - g, half = std::sqrt(e * e + g * g);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  EXPECT_NE(std::find_if(ev.begin(), ev.end(), [&](double x) { return std::abs(x - (mid - half)) < 1e-12; }),
            ev.end());
  EXPECT_NE(std::find_if(ev.begin(), ev.end(), [&](double x) { return std::abs(x - (mid + half)) < 1e-12; }),
            ev.end());
}

TEST(Hamiltonian, MatchesJordanWignerFockOperator) {
  for (const auto& m : small_models()) {
    oracle::Fock f(m.n_spin_orbitals());
    const auto basis = DeterminantBasis::sector(m);
    const CMatrix ref = oracle::restrict_to(oracle::fock_hamiltonian(m, f), basis);
    const CMatrix H = assemble_hamiltonian(m).dense();
    EXPECT_LT((H - ref).cwiseAbs().maxCoeff(), 1e-13) << m.label;
  }
}

TEST(Hamiltonian, IsHermitian) {
  for (const auto& m : small_models()) EXPECT_LT(hermiticity_defect(assemble_hamiltonian(m).dense()), 1e-12);
}

TEST(Hamiltonian, NeverCouplesSectors) {
  const auto m = build_hubbard(3, 1.0, 2.5, 1, 1);
  std::vector<Determinant> all;
  for (std::uint64_t b = 0; b < 64; ++b) all.emplace_back(b);
  const DeterminantBasis merged(all);
  const auto H = assemble_hamiltonian(m, merged);
  for (long r = 0; r < H.dim(); ++r)
    for (ManyBodyOperator::Matrix::InnerIterator it(H.matrix(), r); it; ++it) {
      const Determinant a = merged[static_cast<std::size_t>(r)], b = merged[static_cast<std::size_t>(it.col())];
      EXPECT_EQ(a.count(Spin::up), b.count(Spin::up));
      EXPECT_EQ(a.count(Spin::down), b.count(Spin::down));
    }
}

TEST(Hamiltonian, SlaterCondonSparsity) {
  for (const auto& m : {build_hubbard(4, 1.0, 2.0, 2, 2), build_pairing(4, 1.0, 0.33, 2)}) {
    const auto basis = DeterminantBasis::sector(m);
    const auto H = assemble_hamiltonian(m);
    for (long r = 0; r < H.dim(); ++r)
      for (ManyBodyOperator::Matrix::InnerIterator it(H.matrix(), r); it; ++it) {
        const auto x = basis[static_cast<std::size_t>(r)].bits() ^ basis[static_cast<std::size_t>(it.col())].bits();
        EXPECT_LE(std::popcount(x) / 2, 2);
        EXPECT_GT(std::abs(it.value()), 1e-15);
      }
  }
}

TEST(Hamiltonian, ApplyMatchesDenseProduct) {
  std::mt19937_64 rng(3);
  const auto m = build_hubbard(4, 1.0, 2.0, 2, 2);
  const auto H = assemble_hamiltonian(m);
  const CVector v = oracle::random_vector(rng, H.dim());
  EXPECT_LT(oracle::max_abs(apply_operator(H, v) - H.dense() * v), 1e-14);
  CVector e0 = CVector::Zero(H.dim());
  e0[0] = 1.0;
  EXPECT_LT(oracle::max_abs(apply_operator(H, e0) - H.dense().col(0)), 1e-15);
}

TEST(Reference, OverrideChecksElectronCounts) {
  auto m = build_hubbard(2, 1.0, 4.0, 1, 1);
  set_reference(m, Determinant(0b1001));
  EXPECT_EQ(m.reference.bits(), 0b1001u);
  EXPECT_THROW(set_reference(m, Determinant(0b0101)), InvalidSector);
  EXPECT_THROW(set_reference(m, Determinant(0b0111)), InvalidSector);
}

TEST(IntegralFile, ParsesDiagonalAndRepeatedEntries) {
  std::istringstream in(
      "# dimer\n"
      "norb=2 nup=1 ndn=1 core=0.5\n"
      "-1.0 1 2 0 0\n"
      "-1.0 2 1 0 0\n"
      "0.3 1 1 0 0\n"
      "4.0 1 1 1 1\n"
      "4.0 2 2 2 2\n"
      "0.25 1 2 1 2   # exchange-type\n"
      "0.25 2 1 2 1\n");
  const auto m = parse_integrals(in);
  EXPECT_DOUBLE_EQ(m.integrals.core_energy(), 0.5);
  EXPECT_DOUBLE_EQ(m.integrals.one(1, 0), -1.0);
  EXPECT_DOUBLE_EQ(m.integrals.one(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(m.integrals.two(1, 1, 1, 1), 4.0);
  for (auto [p, q, r, s] : {std::array{0, 1, 0, 1}, std::array{1, 0, 0, 1}, std::array{0, 1, 1, 0},
                            std::array{1, 0, 1, 0}})
    EXPECT_DOUBLE_EQ(m.integrals.two(p, q, r, s), 0.25);
  EXPECT_TRUE(m.integrals.has_eightfold_symmetry());
}

TEST(IntegralFile, EqualsBuiltHubbardDimer) {
  std::istringstream in("norb=2 nup=1 ndn=1 core=0\n-1.0 1 2 0 0\n4.0 1 1 1 1\n4.0 2 2 2 2\n");
  const auto a = parse_integrals(in);
  const auto b = build_hubbard(2, 1.0, 4.0, 1, 1);
  EXPECT_EQ(a.integrals, b.integrals);
  EXPECT_EQ(a.reference, b.reference);
}

TEST(IntegralFile, ErrorsCarryLineNumbers) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_integrals(in);
  };
  try {
    parse("norb=2 nup=1 ndn=1\n1.0 1 1 0 0\nabc 1 2 0 0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse("norb=2 nup=1 ndn=1\n1.0 1 2 0 0\n1.5 2 1 0 0\n"), SymmetryError);
  EXPECT_THROW(parse("norb=2 nup=1 ndn=1\n1.0 1 2 1 2\n1.1 2 1 1 2\n"), SymmetryError);
  EXPECT_THROW(parse("norb=2 nup=1 ndn=1\n1.0 1 3 0 0\n"), ParseError);
  EXPECT_THROW(parse("1.0 1 1 0 0\n"), ParseError);
  EXPECT_THROW(parse("norb=1 nup=2 ndn=0\n"), InvalidSector);
  // Within 1e-10 counts as agreement.
  EXPECT_NO_THROW(parse("norb=2 nup=1 ndn=1\n1.0 1 2 0 0\n1.00000000001 2 1 0 0\n"));
}

TEST(IntegralFile, RoundTripIsBitExact) {
  auto m = build_hubbard(3, 0.123456789012345678, 2.0 / 3.0, 2, 1, OrbitalBasis::hopping);
  m.integrals.set_core_energy(1.0 / 7.0);
  std::ostringstream out;
  write_integrals(m, out);
  std::istringstream in(out.str());
  const auto back = parse_integrals(in);
  EXPECT_EQ(back.integrals, m.integrals);
  EXPECT_EQ(back.n_up, 2);
  EXPECT_EQ(back.n_dn, 1);
  std::ostringstream sink;
  EXPECT_THROW(write_integrals(build_pairing(3, 1.0, 0.2, 1), sink), InvalidArgument);
}
