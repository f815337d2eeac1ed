#include "ccroots/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace ccroots {

FciResult fci_solve(const ModelSpec& model) {
  model.validate();
  FciResult r;
  r.basis = DeterminantBasis::sector(model);
  const long n = static_cast<long>(r.basis.size());
  if (n > kMaxDenseDimension)
    throw CapabilityError("sector dimension " + std::to_string(n) + " exceeds the dense limit of " +
                          std::to_string(kMaxDenseDimension));
  r.reference_index = r.basis.index_of(model.reference);
  const CMatrix H = assemble_hamiltonian(model, r.basis).dense();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver did not converge");
  for (long k = 0; k < n; ++k) {
    EigenPair p;
    p.energy = es.eigenvalues()[k];
    p.vector = es.eigenvectors().col(k);
    p.reference_coefficient = p.vector[r.reference_index];
    r.states.push_back(std::move(p));
  }
  return r;
}

std::vector<NormalizedState> intermediately_normalized(const FciResult& fci, double threshold,
                                                       double degeneracy_tol) {
  std::vector<NormalizedState> out;
  const auto& st = fci.states;
  for (std::size_t i = 0; i < st.size();) {
    std::size_t j = i + 1;
    while (j < st.size() && st[j].energy - st[j - 1].energy < degeneracy_tol) ++j;
    // Projection of the reference onto the eigenspace spanned by states i..j-1.
    CVector proj = CVector::Zero(st[i].vector.size());
    for (std::size_t k = i; k < j; ++k) proj += st[k].vector * std::conj(st[k].reference_coefficient);
    const cplx c_ref = proj[fci.reference_index];
    if (std::sqrt(std::abs(c_ref)) > threshold) {
      CVector v = proj / c_ref;
      v[fci.reference_index] = 1.0;
      out.push_back({i, st[i].energy, std::move(v)});
    }
    i = j;
  }
  return out;
}

CVector cluster_from_ci(const ExcitationSet& ex, const CVector& c) {
  if (c.size() != ex.dim()) throw DimensionMismatch("CI vector length does not match basis");
  if (std::abs(c[ex.reference_index()] - cplx(1.0)) > 1e-12)
    throw InvalidArgument("CI vector must have unit reference coefficient");
  const long K = static_cast<long>(ex.size());
  CVector cmu(K);
  std::vector<bool> covered(static_cast<std::size_t>(ex.dim()), false);
  covered[static_cast<std::size_t>(ex.reference_index())] = true;
  for (long mu = 0; mu < K; ++mu) {
    cmu[mu] = c[ex.target_index(static_cast<std::size_t>(mu))];
    covered[static_cast<std::size_t>(ex.target_index(static_cast<std::size_t>(mu)))] = true;
  }
  const double scale = c.cwiseAbs().maxCoeff();
  for (long i = 0; i < c.size(); ++i)
    if (!covered[static_cast<std::size_t>(i)] && std::abs(c[i]) > 1e-12 * scale)
      throw InvalidArgument("CI vector has weight outside the excitation graph");

  // T |Phi_0> = sum_k (-1)^{k+1} C^k |Phi_0> / k; C is nilpotent.
  const std::span<const cplx> cs(cmu.data(), static_cast<std::size_t>(K));
  CVector power = ex.reference_vector();
  CVector t_state = CVector::Zero(ex.dim());
  for (int k = 1; k <= kMaxSpinOrbitals + 1; ++k) {
    power = ex.apply_cluster(cs, power);
    if (power.cwiseAbs().maxCoeff() == 0.0) break;
    t_state += ((k % 2 == 1) ? 1.0 : -1.0) / k * power;
  }
  CVector t(K);
  for (long mu = 0; mu < K; ++mu) t[mu] = t_state[ex.target_index(static_cast<std::size_t>(mu))];
  return t;
}

MatchReport match_energies(const std::vector<cplx>& roots, const std::vector<double>& eigs, double tol_e) {
  MatchReport rep;
  rep.tol_e = tol_e;
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t r = 0; r < roots.size(); ++r)
    for (std::size_t e = 0; e < eigs.size(); ++e) {
      const double d = std::abs(roots[r] - cplx(eigs[e], 0.0));
      if (d < tol_e) cand.emplace_back(d, r, e);
    }
  std::sort(cand.begin(), cand.end());
  std::vector<bool> used_r(roots.size(), false), used_e(eigs.size(), false);
  for (auto [d, r, e] : cand) {
    if (used_r[r] || used_e[e]) continue;
    used_r[r] = used_e[e] = true;
    rep.matched.push_back({r, e, d});
  }
  std::sort(rep.matched.begin(), rep.matched.end(), [](const RootMatch& a, const RootMatch& b) { return a.root < b.root; });
  for (std::size_t r = 0; r < roots.size(); ++r)
    if (!used_r[r]) rep.unmatched_roots.push_back(r);
  for (std::size_t e = 0; e < eigs.size(); ++e)
    if (!used_e[e]) rep.unmatched_eigs.push_back(e);
  return rep;
}

MatchReport match_roots(const SolutionSet& sols, const std::vector<NormalizedState>& states, double tol_e) {
  std::vector<cplx> roots;
  const cplx missing(std::numeric_limits<double>::quiet_NaN(), 0.0);
  for (const auto& s : sols.solutions) roots.push_back(s.energy.value_or(missing));
  std::vector<double> eigs;
  for (const auto& s : states) eigs.push_back(s.energy);
  return match_energies(roots, eigs, tol_e);
}

namespace {

double smallest_singular_value(const CMatrix& J) {
  if (J.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(J);
  return svd.singularValues().minCoeff();
}

}  // namespace

double nondegeneracy(const CCEvaluator& cc, const CVector& t, double precondition_tol) {
  const double res = cc.residuals(t).cwiseAbs().maxCoeff();
  if (!(res < precondition_tol))
    throw InvalidArgument("point is not near a root (residual " + std::to_string(res) + ")");
  return smallest_singular_value(cc.jacobian(t));
}

double nondegeneracy(const PolynomialSystem& sys, const CVector& x, double precondition_tol) {
  const CVector f = sys.eval(x);
  const double res = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (!(res < precondition_tol))
    throw InvalidArgument("point is not near a root (residual " + std::to_string(res) + ")");
  return smallest_singular_value(sys.jacobian(x));
}

}  // namespace ccroots
