#include "ccroots/ccpoly.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace ccroots {

namespace {

constexpr int kBchOrder = 4;

std::span<const cplx> as_span(const CVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

}  // namespace

// ---------------------------------------------------------------------------
// CCEvaluator
// ---------------------------------------------------------------------------

CCEvaluator::CCEvaluator(const ModelSpec& model, ExcitationGraph graph)
    : model_(model),
      excitations_(std::move(graph), DeterminantBasis::sector(model)),
      hamiltonian_(assemble_hamiltonian(model, excitations_.basis())) {
  if (excitations_.graph().reference() != model.reference)
    throw InvalidArgument("graph reference differs from the model reference");
}

void CCEvaluator::check(const CVector& t) const {
  if (t.size() != static_cast<long>(size()))
    throw DimensionMismatch("amplitude vector has length " + std::to_string(t.size()) + ", graph has " +
                            std::to_string(size()) + " indices");
}

CVector CCEvaluator::project(const CVector& v) const {
  CVector out(static_cast<long>(size()));
  for (std::size_t mu = 0; mu < size(); ++mu) out[static_cast<long>(mu)] = v[excitations_.target_index(mu)];
  return out;
}

CVector CCEvaluator::bch_term(const CVector& t, int k) const {
  check(t);
  if (k < 0) throw InvalidArgument("commutator order must be non-negative");
  const auto ts = as_span(t);
  // ad_T^k(H) = sum_j C(k,j) (-T)^j H T^(k-j)
  std::vector<CVector> right{excitations_.reference_vector()};
  for (int m = 1; m <= k; ++m) right.push_back(excitations_.apply_cluster(ts, right.back()));
  CVector out = CVector::Zero(dim());
  for (int j = 0; j <= k; ++j) {
    CVector w = hamiltonian_.matrix() * right[static_cast<std::size_t>(k - j)];
    for (int m = 0; m < j; ++m) w = -excitations_.apply_cluster(ts, w);
    out += binomial(k, j) * w;
  }
  return out;
}

CVector CCEvaluator::transformed_reference(const CVector& t) const {
  CVector out = CVector::Zero(dim());
  for (int k = 0; k <= kBchOrder; ++k) out += bch_term(t, k) / factorial(k);
  return out;
}

CVector CCEvaluator::residuals(const CVector& t) const { return project(transformed_reference(t)); }

cplx CCEvaluator::energy(const CVector& t) const { return transformed_reference(t)[excitations_.reference_index()]; }

CVector CCEvaluator::similarity_apply(const CVector& t, const CVector& v) const {
  check(t);
  const auto ts = as_span(t);
  const CVector up = excitations_.apply_exp(ts, v);
  const CVector hv = hamiltonian_.matrix() * up;
  const CVector minus_t = -t;
  return excitations_.apply_exp(as_span(minus_t), hv);
}

CVector CCEvaluator::state(const CVector& t) const {
  check(t);
  return excitations_.apply_exp(as_span(t), excitations_.reference_vector());
}

CMatrix CCEvaluator::jacobian(const CVector& t) const {
  check(t);
  const long K = static_cast<long>(size());
  const CVector ht_ref = similarity_apply(t, excitations_.reference_vector());
  CMatrix J(K, K);
  for (long nu = 0; nu < K; ++nu) {
    CVector e_nu = CVector::Zero(dim());
    e_nu[excitations_.target_index(static_cast<std::size_t>(nu))] = 1.0;
    const CVector col = similarity_apply(t, e_nu) - excitations_.apply(static_cast<std::size_t>(nu), ht_ref);
    J.col(nu) = project(col);
  }
  return J;
}

CVector CCEvaluator::nested_commutator(std::span<const std::size_t> nus) const {
  const std::size_t k = nus.size();
  if (k > 16) throw InvalidArgument("nested commutator order too large");
  const CVector ref = excitations_.reference_vector();
  CVector out = CVector::Zero(dim());
  // ad_{X1}...ad_{Xk}(H) = sum over S (moved left) of (-1)^|S| X_S H X_{S^c}
  for (std::uint32_t S = 0; S < (1U << k); ++S) {
    CVector w = ref;
    bool zero = false;
    for (std::size_t i = 0; i < k && !zero; ++i)
      if (!(S >> i & 1U)) {
        w = excitations_.apply(nus[i], w);
        zero = w.cwiseAbs().maxCoeff() == 0.0;
      }
    if (zero) continue;
    w = hamiltonian_.matrix() * w;
    for (std::size_t i = 0; i < k; ++i)
      if (S >> i & 1U) w = excitations_.apply(nus[i], w);
    if (std::popcount(S) % 2 == 0)
      out += w;
    else
      out -= w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Polynomial extraction
// ---------------------------------------------------------------------------

std::string amplitude_name(const ExcitationIndex& mu) {
  std::ostringstream os;
  os << 't';
  for (int h : mu.holes) os << '_' << h;
  for (int p : mu.particles) os << '_' << p;
  return os.str();
}

namespace {

SystemMetadata cc_metadata(const ModelSpec& model, const ExcitationGraph& graph) {
  SystemMetadata meta;
  meta.model_label = model.label;
  meta.cc_system = true;
  meta.n_s = graph.n_s();
  meta.n_d = graph.n_d();
  meta.rank_max = graph.rank_max();
  meta.reference_bits = graph.reference().bits();
  for (const auto& mu : graph.indices()) meta.graph.emplace_back(mu.holes, mu.particles);
  return meta;
}

}  // namespace

CCSystem generate_system(const ModelSpec& model, const ExcitationGraph& graph, double prune_tol) {
  CCEvaluator ev(model, graph);
  const std::size_t K = graph.size();
  std::vector<Polynomial> eqs(K);
  Polynomial energy;

  std::vector<std::size_t> tuple;
  auto visit = [&](const std::vector<std::size_t>& nus) {
    const CVector w = ev.nested_commutator(nus);
    double weight = 1.0;  // 1 / prod(multiplicity!)
    for (std::size_t i = 0; i < nus.size();) {
      std::size_t j = i;
      while (j < nus.size() && nus[j] == nus[i]) ++j;
      weight /= factorial(static_cast<int>(j - i));
      i = j;
    }
    std::vector<int> vars(nus.begin(), nus.end());
    const Monomial m = Monomial::product(vars);
    for (std::size_t mu = 0; mu < K; ++mu) eqs[mu].add_term(m, weight * w[ev.excitations().target_index(mu)]);
    energy.add_term(m, weight * w[ev.excitations().reference_index()]);
  };
  auto rec = [&](auto&& self, std::size_t start, int remaining) -> void {
    visit(tuple);
    if (remaining == 0) return;
    for (std::size_t nu = start; nu < K; ++nu) {
      tuple.push_back(nu);
      self(self, nu, remaining - 1);
      tuple.pop_back();
    }
  };
  rec(rec, 0, kBchOrder);

  for (auto& p : eqs) p.prune(prune_tol);
  energy.prune(prune_tol);

  std::vector<std::string> names;
  for (const auto& mu : graph.indices()) names.push_back(amplitude_name(mu));
  SystemMetadata meta = cc_metadata(model, graph);
  meta.energy = energy;
  const int n = static_cast<int>(K);
  return CCSystem{model, graph, PolynomialSystem(n, std::move(eqs), std::move(names), std::move(meta)), energy};
}

// ---------------------------------------------------------------------------
// Quadratization
// ---------------------------------------------------------------------------

namespace {

struct AuxDef {
  std::array<int, 4> ijab;
  // t_i^a t_j^b - t_i^b t_j^a as (coefficient, single position, single position)
  std::vector<std::tuple<double, int, int>> products;
};

std::vector<AuxDef> aux_definitions(const ExcitationGraph& graph) {
  if (!graph.is_ccsd_type()) throw InvalidArgument("quadratization requires a singles/doubles excitation graph");
  auto single = [&](int h, int p) -> std::optional<int> {
    auto pos = graph.position(ExcitationIndex{{h}, {p}});
    if (!pos) return std::nullopt;
    return static_cast<int>(*pos);
  };
  std::vector<AuxDef> defs;
  for (const auto& mu : graph.indices()) {
    if (mu.rank() != 2) continue;
    const int i = mu.holes[0], j = mu.holes[1], a = mu.particles[0], b = mu.particles[1];
    AuxDef d{{i, j, a, b}, {}};
    if (auto ia = single(i, a), jb = single(j, b); ia && jb) d.products.emplace_back(1.0, *ia, *jb);
    if (auto ib = single(i, b), ja = single(j, a); ib && ja) d.products.emplace_back(-1.0, *ib, *ja);
    defs.push_back(std::move(d));
  }
  return defs;
}

Polynomial aux_polynomial(const AuxDef& d) {
  Polynomial p;
  for (auto [c, u, v] : d.products) p.add_term(Monomial({{u, 1}, {v, 1}}), c);
  return p;
}

}  // namespace

CVector lift_to_quadratic(const ExcitationGraph& graph, const CVector& t) {
  const auto defs = aux_definitions(graph);
  const long K = static_cast<long>(graph.size());
  if (t.size() != K) throw DimensionMismatch("amplitude vector length does not match graph");
  CVector x(K + static_cast<long>(defs.size()));
  x.head(K) = t;
  for (std::size_t d = 0; d < defs.size(); ++d) {
    cplx v(0.0);
    for (auto [c, u, w] : defs[d].products) v += c * t[u] * t[w];
    x[K + static_cast<long>(d)] = v;
  }
  return x;
}

std::vector<Polynomial> unlinked_equations(const CCSystem& cc) {
  const auto& graph = cc.graph;
  const std::size_t K = graph.size();
  bool single_rank = true;
  for (const auto& mu : graph.indices()) single_rank = single_rank && mu.rank() == graph.rank_max();
  if (!single_rank && !(graph == build_graph(cc.model, graph.rank_max())))
    throw InvalidArgument("unlinked form requires all ranks up to the maximum or a single rank");
  const ExcitationSet xs(graph, DeterminantBasis::sector(cc.model));
  std::vector<long> pos_of(static_cast<std::size_t>(xs.dim()), -1);
  for (std::size_t mu = 0; mu < K; ++mu) pos_of[static_cast<std::size_t>(xs.target_index(mu))] = static_cast<long>(mu);

  std::vector<Polynomial> out(cc.residual_polys.equations());
  // <Phi_mu| e^T |Phi_nu>: the coefficient of prod t^m is <Phi_mu| prod X^m |Phi_nu> / prod m!.
  for (std::size_t nu = 0; nu < K; ++nu) {
    CVector e = CVector::Zero(xs.dim());
    e[xs.target_index(nu)] = 1.0;
    const Polynomial& r_nu = cc.residual_polys[nu];
    auto rec = [&](auto&& self, const CVector& v, std::vector<int>& vars, std::size_t start) -> void {
      for (std::size_t k = start; k < K; ++k) {
        const CVector w = xs.apply(k, v);
        if (w.cwiseAbs().maxCoeff() == 0.0) continue;
        vars.push_back(static_cast<int>(k));
        const Monomial m = Monomial::product(vars);
        double fact = 1.0;
        for (auto [var, ex] : m.factors())
          for (int f = 2; f <= ex; ++f) fact *= f;
        bool in_graph = false;
        for (long i = 0; i < w.size(); ++i) {
          if (w[i] == cplx(0.0)) continue;
          const long mu = pos_of[static_cast<std::size_t>(i)];
          if (mu < 0) continue;  // rank above the graph; later products stay there
          in_graph = true;
          Polynomial coeff;
          coeff.add_term(m, w[i] / fact);
          out[static_cast<std::size_t>(mu)] = out[static_cast<std::size_t>(mu)] + coeff * r_nu;
        }
        if (in_graph) self(self, w, vars, k);
        vars.pop_back();
      }
    };
    std::vector<int> vars;
    rec(rec, e, vars, 0);
  }
  for (auto& p : out) p.prune(1e-14);
  return out;
}

PolynomialSystem quadratize(const CCSystem& cc) {
  const auto& graph = cc.graph;
  const auto defs = aux_definitions(graph);
  const int K = static_cast<int>(graph.size());
  const int n_aux = static_cast<int>(defs.size());
  const int n = K + n_aux;

  std::vector<Polynomial> aux_poly;
  for (const auto& d : defs) aux_poly.push_back(aux_polynomial(d));

  // Candidate quadratic monomials in the extended variables and their
  // expansions in the original amplitudes.
  struct Candidate {
    Monomial extended;
    Polynomial expansion;
  };
  auto variable_poly = [](int v) {
    Polynomial p;
    p.add_term(Monomial::variable(v), 1.0);
    return p;
  };
  std::vector<Candidate> cubic, quartic;
  for (int k = 0; k < n_aux; ++k) {
    if (aux_poly[static_cast<std::size_t>(k)].empty()) continue;
    for (int m = 0; m < K; ++m)
      cubic.push_back({Monomial({{m, 1}, {K + k, 1}}), variable_poly(m) * aux_poly[static_cast<std::size_t>(k)]});
    for (int l = k; l < n_aux; ++l) {
      if (aux_poly[static_cast<std::size_t>(l)].empty()) continue;
      quartic.push_back({Monomial({{K + k, 1}, {K + l, 1}}),
                         aux_poly[static_cast<std::size_t>(k)] * aux_poly[static_cast<std::size_t>(l)]});
    }
  }

  // Rewrites degree-3 and degree-4 parts as linear combinations of the
  // candidate expansions (minimum-norm least squares); empty on misfit.
  auto rewrite = [&](const std::vector<Polynomial>& eqs) -> std::optional<std::vector<Polynomial>> {
    std::vector<Polynomial> out(static_cast<std::size_t>(K));
    double scale = 0.0;
    for (int mu = 0; mu < K; ++mu)
      for (const auto& [m, c] : eqs[static_cast<std::size_t>(mu)].terms()) {
        if (m.degree() > 4) return std::nullopt;
        scale = std::max(scale, std::abs(c));
        if (m.degree() <= 2) out[static_cast<std::size_t>(mu)].add_term(m, c);
      }
    auto fit = [&](int degree, const std::vector<Candidate>& cands) {
      std::map<Monomial, long> rows;
      for (const auto& c : cands)
        for (const auto& [m, v] : c.expansion.terms()) rows.emplace(m, 0);
      for (int mu = 0; mu < K; ++mu)
        for (const auto& [m, v] : eqs[static_cast<std::size_t>(mu)].terms())
          if (m.degree() == degree) rows.emplace(m, 0);
      long r = 0;
      for (auto& [m, idx] : rows) idx = r++;
      if (r == 0) return true;

      CMatrix A = CMatrix::Zero(r, static_cast<long>(cands.size()));
      for (std::size_t j = 0; j < cands.size(); ++j)
        for (const auto& [m, v] : cands[j].expansion.terms()) A(rows.at(m), static_cast<long>(j)) = v;
      CMatrix B = CMatrix::Zero(r, K);
      for (int mu = 0; mu < K; ++mu)
        for (const auto& [m, v] : eqs[static_cast<std::size_t>(mu)].terms())
          if (m.degree() == degree) B(rows.at(m), mu) = v;
      if (B.cwiseAbs().maxCoeff() == 0.0) return true;
      if (cands.empty()) return false;

      Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(A);
      const CMatrix X = cod.solve(B);
      if ((A * X - B).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale)) return false;
      for (int mu = 0; mu < K; ++mu)
        for (std::size_t j = 0; j < cands.size(); ++j)
          out[static_cast<std::size_t>(mu)].add_term(cands[j].extended, X(static_cast<long>(j), mu));
      return true;
    };
    if (!fit(3, cubic) || !fit(4, quartic)) return std::nullopt;
    return out;
  };

  // The linked residuals keep their exact values on the lift when they fit.
  // Otherwise (connected terms such as t_i^a t_i^b t_jk^cd, which no
  // auxiliary product produces) the unlinked form is used; it has the same
  // zero set and is always quadratic on the variety.
  bool unlinked = false;
  auto fitted = rewrite(cc.residual_polys.equations());
  if (!fitted) {
    fitted = rewrite(unlinked_equations(cc));
    unlinked = true;
  }
  if (!fitted) throw NumericalError("CC equations could not be rewritten in quadratic form");
  std::vector<Polynomial> out = std::move(*fitted);
  for (auto& p : out) p.prune(1e-14);

  // Defining equations x_k - t_i^a t_j^b + t_i^b t_j^a = 0.
  for (int k = 0; k < n_aux; ++k) {
    Polynomial p;
    p.add_term(Monomial::variable(K + k), 1.0);
    for (const auto& [m, c] : aux_poly[static_cast<std::size_t>(k)].terms()) p.add_term(m, -c);
    out.push_back(std::move(p));
  }

  std::vector<std::string> names = cc.residual_polys.variable_names();
  SystemMetadata meta = cc.residual_polys.metadata();
  meta.quadratized = true;
  meta.unlinked = unlinked;
  for (const auto& d : defs) {
    names.push_back("x_" + std::to_string(d.ijab[0]) + "_" + std::to_string(d.ijab[1]) + "_" +
                    std::to_string(d.ijab[2]) + "_" + std::to_string(d.ijab[3]));
    meta.aux_map.push_back(d.ijab);
  }
  return PolynomialSystem(n, std::move(out), std::move(names), std::move(meta));
}

// ---------------------------------------------------------------------------
// Root-count bounds
// ---------------------------------------------------------------------------

namespace {

BigInt big_pow(unsigned base, std::size_t exp) {
  BigInt r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

BigInt bezout_sd_bound(const ExcitationGraph& graph) {
  if (!graph.is_ccsd_type()) throw InvalidArgument("singles/doubles bound requires a singles/doubles graph");
  return big_pow(3, static_cast<std::size_t>(graph.n_s())) * big_pow(4, static_cast<std::size_t>(graph.n_d()));
}

BigInt quadratic_bound(const ExcitationGraph& graph) {
  if (!graph.is_ccsd_type()) throw InvalidArgument("quadratic bound requires a singles/doubles graph");
  return big_pow(2, static_cast<std::size_t>(graph.n_s() + 2 * graph.n_d()));
}

RootBounds root_bounds(const ExcitationGraph& graph) {
  RootBounds b{big_pow(4, graph.size()), std::nullopt, std::nullopt};
  if (graph.is_ccsd_type()) {
    b.bezout_sd = bezout_sd_bound(graph);
    b.quadratic = quadratic_bound(graph);
  }
  return b;
}

}  // namespace ccroots
