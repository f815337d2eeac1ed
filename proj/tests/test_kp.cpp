#include <gtest/gtest.h>

#include <random>

#include "ccroots/kp.hpp"
#include "ccroots/oracle.hpp"
#include "oracles.hpp"

using namespace ccroots;

namespace {

ModelSpec pairing42() { return build_pairing(4, 1.0, 0.33, 2); }

/// K_KP from dense matrix exponentials over the sector.
CVector dense_kp(const oracle::DenseCC& d, const AmplitudeSplit& sp, const CVector& t, double lambda) {
  const CVector t0 = sp.embed(sp.low_part(t), CVector::Zero(static_cast<long>(sp.high.size())));
  const CVector tp = sp.embed(CVector::Zero(static_cast<long>(sp.low.size())), sp.high_part(t));
  const CMatrix T0 = d.T(t0);
  const CMatrix Hbar0 = (-T0).exp() * d.H * T0.exp();
  const CMatrix Ep = d.T(tp).exp();
  const CVector low_vec = Hbar0 * ((1.0 - lambda) * CMatrix::Identity(d.H.rows(), d.H.cols()) + lambda * Ep).col(d.ref);
  const CVector full_vec = d.transformed_reference(t);
  CVector out(t.size());
  for (auto i : sp.low) out[static_cast<long>(i)] = low_vec[d.targets[i]];
  for (auto i : sp.high) out[static_cast<long>(i)] = full_vec[d.targets[i]];
  return out;
}

CVector ground_amplitudes(const CCEvaluator& cc) {
  const auto states = intermediately_normalized(fci_solve(cc.model()));
  return cluster_from_ci(cc.excitations(), states.front().vector);
}

}  // namespace

TEST(KPResidual, MatchesDenseOracle) {
  std::mt19937_64 rng(17);
  const auto m = pairing42();
  const KPHomotopy kp(m, 2);
  const oracle::DenseCC d(m, kp.split().graph_full);
  for (double lambda : {0.0, 0.3, 0.77, 1.0}) {
    const CVector t = oracle::random_vector(rng, static_cast<long>(kp.full().size()), 0.4);
    const CVector ref = dense_kp(d, kp.split(), t, lambda);
    EXPECT_LT(oracle::max_abs(kp.residual(t, lambda) - ref), 1e-11 * std::max(1.0, oracle::max_abs(ref)));
  }
}

TEST(KPResidual, LambdaOneIsUntruncatedResidual) {
  std::mt19937_64 rng(3);
  for (const auto& m : {pairing42(), build_hubbard(3, 1.0, 2.0, 2, 1)})
    for (int rho = 2; rho <= m.n_electrons(); ++rho) {
      const KPHomotopy kp(m, rho);
      double worst = 0.0;
      for (int k = 0; k < 10; ++k) {
        const CVector t = oracle::random_vector(rng, static_cast<long>(kp.full().size()), 0.5);
        worst = std::max(worst, oracle::max_abs(kp.residual(t, 1.0) - kp.full().residuals(t)));
      }
      EXPECT_LT(worst, 1e-12) << m.label << " rho " << rho;
    }
}

TEST(KPResidual, LambdaZeroLowBlockIgnoresHighAmplitudes) {
  std::mt19937_64 rng(4);
  const auto m = pairing42();
  const KPHomotopy kp(m, 2);
  const auto& sp = kp.split();
  const CVector lo = oracle::random_vector(rng, static_cast<long>(sp.low.size()), 0.5);
  const CVector a = sp.low_part(kp.residual(sp.embed(lo, CVector::Zero(static_cast<long>(sp.high.size()))), 0.0));
  for (int k = 0; k < 5; ++k) {
    const CVector hi = oracle::random_vector(rng, static_cast<long>(sp.high.size()));
    const CVector b = sp.low_part(kp.residual(sp.embed(lo, hi), 0.0));
    EXPECT_LT(oracle::max_abs(a - b), 1e-14 * std::max(1.0, oracle::max_abs(a)));
  }
  // And equals the truncated CC residual.
  EXPECT_LT(oracle::max_abs(a - kp.truncated().residuals(lo)), 1e-12);
}

TEST(KPResidual, FciAmplitudesSolveLambdaOne) {
  const KPHomotopy kp(pairing42(), 2);
  const CVector t = ground_amplitudes(kp.full());
  EXPECT_LT(oracle::max_abs(kp.residual(t, 1.0)), 1e-10);
  EXPECT_LT(oracle::max_abs(kp_residual(pairing42(), 2, kp.make_state(t, 1.0))), 1e-10);
}

TEST(KPResidual, DimensionChecks) {
  const KPHomotopy kp(pairing42(), 2);
  EXPECT_THROW(kp.residual(CVector::Zero(3), 0.5), DimensionMismatch);
  EXPECT_THROW(KPHomotopy(pairing42(), 1), InvalidArgument);
  EXPECT_THROW(KPHomotopy(pairing42(), 5), InvalidArgument);
}

TEST(KPJacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(23);
  const KPHomotopy kp(pairing42(), 2);
  const long n = static_cast<long>(kp.full().size());
  for (int trial = 0; trial < 5; ++trial) {
    const CVector t = oracle::random_vector(rng, n, 0.4);
    const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    CVector v;
    CMatrix J;
    CVector dl;
    kp.eval(t, lambda, v, J, dl);
    EXPECT_LT(oracle::max_abs(v - kp.residual(t, lambda)), 1e-13 * std::max(1.0, oracle::max_abs(v)));
    const double h = 1e-6;
    CMatrix fd(n, n);
    for (long j = 0; j < n; ++j) {
      CVector tp = t, tm = t;
      tp[j] += h;
      tm[j] -= h;
      fd.col(j) = (kp.residual(tp, lambda) - kp.residual(tm, lambda)) / (2.0 * h);
    }
    EXPECT_LT((J - fd).norm() / fd.norm(), 1e-6);
    EXPECT_LT((kp.jacobian(t, lambda) - J).cwiseAbs().maxCoeff(), 1e-14 * J.cwiseAbs().maxCoeff());
    const CVector fdl = (kp.residual(t, lambda + h) - kp.residual(t, lambda - h)) / (2.0 * h);
    EXPECT_LT((dl - fdl).norm() / std::max(1.0, fdl.norm()), 1e-6);
  }
}

TEST(Lambda0, PairingZeroStartGivesGroundLikeRoot) {
  const KPHomotopy kp(pairing42(), 2);
  const auto res = solve_lambda0(kp);
  ASSERT_FALSE(res.states.empty());
  const auto& s = res.states.front();
  EXPECT_EQ(s.lambda, 0.0);
  EXPECT_LT(oracle::max_abs(kp.residual(s)), 1e-10);
  EXPECT_LT(oracle::max_abs(kp.truncated().residuals(s.t_low)), 1e-10);
  const double e_fci = fci_solve(pairing42()).states.front().energy;
  EXPECT_NEAR(kp.truncated().energy(s.t_low).real(), e_fci, 1e-2);
  EXPECT_LT(s.t_high.norm(), 0.1);
}

TEST(Lambda0, NoTruncationGivesFullCcRoots) {
  const auto m = build_hubbard(2, 1.0, 4.0, 1, 1);
  const KPHomotopy kp(m, 2);
  EXPECT_TRUE(kp.split().high.empty());
  Lambda0Options o;
  o.homotopy_starts = true;
  o.track.threads = 1;
  const auto res = solve_lambda0(kp, o);
  const auto cc = generate_system(m, full_graph(m));
  const auto sols = solve_all(cc.residual_polys, o.track);
  std::vector<CVector> a, b;
  for (const auto& s : res.states) {
    EXPECT_EQ(s.t_high.size(), 0);
    a.push_back(s.t_low);
  }
  for (const auto& s : sols.solutions) b.push_back(s.point);
  EXPECT_TRUE(oracle::same_point_sets(a, b, 1e-8));
}

TEST(KPTrack, PairingReachesFciGround) {
  const auto m = pairing42();
  const KPHomotopy kp(m, 2);
  const auto res = solve_lambda0(kp);
  ASSERT_FALSE(res.states.empty());
  TrackOptions o;
  o.threads = 1;
  const auto tr = kp_track(kp, res.states.front(), o);
  ASSERT_EQ(tr.endpoint_status, KPStatus::reached_full) << tr.message;
  ASSERT_TRUE(tr.endpoint);
  EXPECT_LT(tr.final_residual, 1e-8);
  const double e_fci = fci_solve(m).states.front().energy;
  const CVector t1 = kp.embed(*tr.endpoint);
  EXPECT_NEAR(kp.full().energy(t1).real(), e_fci, 1e-8);
  EXPECT_NEAR(kp.full().energy(t1).imag(), 0.0, 1e-8);
  ASSERT_TRUE(tr.sigma_min);
  EXPECT_GT(*tr.sigma_min, 1e-8);
  EXPECT_FALSE(tr.degenerate);

  ASSERT_GE(tr.samples.size(), 2u);
  EXPECT_EQ(tr.samples.front().lambda, 0.0);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) EXPECT_LT(tr.samples[i - 1].lambda, tr.samples[i].lambda);
  EXPECT_NEAR(tr.samples.back().lambda, 1.0, 1e-12);
  for (const auto& s : tr.samples) EXPECT_LT(s.residual_norm, 1e-6);

  const auto b = energy_error_bundle(kp, res.states.front(), t1);
  EXPECT_FALSE(b.orthogonal_warning);
  EXPECT_GT(std::abs(b.overlap), 0.5);
  EXPECT_NEAR(b.t_perp_norm, res.states.front().t_high.norm(), 0.0);
  EXPECT_LT(std::abs(b.delta_e), 1e-2);
}

TEST(KPTrack, NoTruncationIsConstant) {
  const auto m = pairing42();
  const KPHomotopy kp(m, m.n_electrons());
  const CVector t = ground_amplitudes(kp.full());
  TrackOptions o;
  o.threads = 1;
  const auto tr = kp_track(kp, kp.make_state(t, 0.0), o);
  ASSERT_EQ(tr.endpoint_status, KPStatus::reached_full);
  for (const auto& s : tr.samples) EXPECT_LT(s.drift, 1e-10);
  const auto b = energy_error_bundle(kp, kp.make_state(t, 0.0), kp.embed(*tr.endpoint));
  EXPECT_LT(std::abs(b.delta_e), 1e-10);
  EXPECT_LT(b.t_perp_norm, 1e-12);
}

TEST(KPTrack, RejectsNonSolution) {
  const KPHomotopy kp(pairing42(), 2);
  KPState s{CVector::Constant(static_cast<long>(kp.split().low.size()), 0.2),
            CVector::Zero(static_cast<long>(kp.split().high.size())), 0.0};
  EXPECT_THROW(kp_track(kp, s), InvalidArgument);
}

TEST(Overlap, IntermediateNormalization) {
  std::mt19937_64 rng(8);
  const KPHomotopy kp(pairing42(), 2);
  const auto& full = kp.full().excitations();
  const long n = static_cast<long>(full.size());
  EXPECT_EQ(overlap(full, CVector::Zero(n), full, CVector::Zero(n)), cplx(1.0));
  const CVector t = oracle::random_vector(rng, n);
  EXPECT_NEAR(std::abs(overlap(full, CVector::Zero(n), full, t) - 1.0), 0.0, 1e-14);
  const CVector a = oracle::random_vector(rng, n, 0.3);
  const CVector va = kp.full().state(a), vt = kp.full().state(t);
  EXPECT_NEAR(std::abs(overlap(full, a, full, t) - va.dot(vt)), 0.0, 1e-12);
}

TEST(Overlap, DifferentEigenstatesWarn) {
  const auto m = pairing42();
  const KPHomotopy kp(m, m.n_electrons());
  const auto states = intermediately_normalized(fci_solve(m));
  ASSERT_GE(states.size(), 2u);
  const CVector g = cluster_from_ci(kp.full().excitations(), states[0].vector);
  const CVector x = cluster_from_ci(kp.full().excitations(), states[1].vector);
  const auto b = energy_error_bundle(kp, kp.make_state(g, 0.0), x);
  EXPECT_TRUE(b.orthogonal_warning);
  EXPECT_FALSE(b.warning.empty());
  EXPECT_LT(std::abs(b.overlap), 1e-8);
  EXPECT_NEAR(b.delta_e.real(), states[0].energy - states[1].energy, 1e-10);
}

TEST(EnergyErrorBundle, RejectsUnsolvedInput) {
  const KPHomotopy kp(pairing42(), 2);
  const auto& sp = kp.split();
  const KPState z{CVector::Zero(static_cast<long>(sp.low.size())), CVector::Zero(static_cast<long>(sp.high.size())),
                  0.0};
  const CVector t = ground_amplitudes(kp.full());
  EXPECT_THROW(energy_error_bundle(kp, z, t), InvalidArgument);
  const auto res = solve_lambda0(kp);
  ASSERT_FALSE(res.states.empty());
  EXPECT_THROW(energy_error_bundle(kp, res.states.front(), CVector::Zero(t.size())), InvalidArgument);
}
