#include "ccroots/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace ccroots {

namespace {

cplx ipow(cplx z, int e) {
  cplx r(1.0, 0.0);
  for (int i = 0; i < e; ++i) r *= z;
  return r;
}

}  // namespace

Monomial::Monomial(std::vector<std::pair<int, int>> factors) {
  std::sort(factors.begin(), factors.end());
  for (auto [v, e] : factors) {
    if (v < 0 || e < 0) throw InvalidArgument("monomial variables and exponents must be non-negative");
    if (e == 0) continue;
    if (!factors_.empty() && factors_.back().first == v)
      factors_.back().second += e;
    else
      factors_.emplace_back(v, e);
    degree_ += e;
  }
}

Monomial Monomial::variable(int var, int exponent) { return Monomial({{var, exponent}}); }

Monomial Monomial::product(std::span<const int> vars) {
  std::vector<std::pair<int, int>> f;
  for (int v : vars) f.emplace_back(v, 1);
  return Monomial(std::move(f));
}

int Monomial::exponent(int var) const noexcept {
  for (auto [v, e] : factors_)
    if (v == var) return e;
  return 0;
}

cplx Monomial::eval(std::span<const cplx> x) const {
  cplx r(1.0, 0.0);
  for (auto [v, e] : factors_) r *= ipow(x[v], e);
  return r;
}

Monomial Monomial::operator*(const Monomial& o) const {
  auto f = factors_;
  f.insert(f.end(), o.factors_.begin(), o.factors_.end());
  return Monomial(std::move(f));
}

std::strong_ordering Monomial::operator<=>(const Monomial& o) const {
  if (auto c = degree_ <=> o.degree_; c != 0) return c;
  return factors_ <=> o.factors_;
}

// ---------------------------------------------------------------------------

void Polynomial::add_term(const Monomial& m, cplx c) {
  if (c == cplx(0.0)) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx(0.0)) terms_.erase(it);
  }
}

int Polynomial::degree() const noexcept {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

cplx Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? cplx(0.0) : it->second;
}

cplx Polynomial::eval(std::span<const cplx> x) const {
  cplx s(0.0, 0.0);
  for (const auto& [m, c] : terms_) {
    if (m.max_variable() >= static_cast<int>(x.size())) throw DimensionMismatch("point has too few coordinates");
    s += c * m.eval(x);
  }
  return s;
}

CVector Polynomial::gradient(std::span<const cplx> x, int n_vars) const {
  CVector g = CVector::Zero(n_vars);
  for (const auto& [m, c] : terms_) {
    const auto& f = m.factors();
    for (std::size_t k = 0; k < f.size(); ++k) {
      cplx d = c * static_cast<double>(f[k].second) * ipow(x[f[k].first], f[k].second - 1);
      for (std::size_t j = 0; j < f.size(); ++j)
        if (j != k) d *= ipow(x[f[j].first], f[j].second);
      if (f[k].first < n_vars) g[f[k].first] += d;
    }
  }
  return g;
}

void Polynomial::prune(double rel_tol) {
  double mx = 0.0;
  for (const auto& [m, c] : terms_) mx = std::max(mx, std::abs(c));
  std::erase_if(terms_, [&](const auto& kv) { return std::abs(kv.second) <= rel_tol * mx; });
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  for (const auto& [m1, c1] : terms_)
    for (const auto& [m2, c2] : o.terms_) r.add_term(m1 * m2, c1 * c2);
  return r;
}

Polynomial Polynomial::operator*(cplx s) const {
  Polynomial r;
  for (const auto& [m, c] : terms_) r.add_term(m, c * s);
  return r;
}

// ---------------------------------------------------------------------------

PolynomialSystem::PolynomialSystem(int n_vars, std::vector<Polynomial> equations, std::vector<std::string> names,
                                   SystemMetadata metadata)
    : n_vars_(n_vars), equations_(std::move(equations)), names_(std::move(names)), meta_(std::move(metadata)) {
  if (n_vars < 0) throw InvalidArgument("variable count must be non-negative");
  if (names_.empty())
    for (int i = 0; i < n_vars; ++i) names_.push_back("x" + std::to_string(i));
  if (static_cast<int>(names_.size()) != n_vars) throw InvalidArgument("one name per variable is required");
  for (const auto& p : equations_)
    for (const auto& [m, c] : p.terms())
      if (m.max_variable() >= n_vars) throw InvalidArgument("equation references an undeclared variable");
  compile();
}

void PolynomialSystem::compile() {
  flat_.assign(equations_.size(), {});
  fvar_.clear();
  fexp_.clear();
  max_factors_ = 0;
  for (std::size_t i = 0; i < equations_.size(); ++i)
    for (const auto& [m, c] : equations_[i].terms()) {
      const int begin = static_cast<int>(fvar_.size());
      for (auto [v, e] : m.factors()) {
        fvar_.push_back(v);
        fexp_.push_back(e);
      }
      flat_[i].push_back({c, begin, static_cast<int>(fvar_.size())});
      max_factors_ = std::max(max_factors_, static_cast<int>(fvar_.size()) - begin);
    }
}

std::vector<int> PolynomialSystem::degrees() const {
  std::vector<int> d;
  for (const auto& p : equations_) d.push_back(p.degree());
  return d;
}

int PolynomialSystem::max_degree() const {
  int d = 0;
  for (const auto& p : equations_) d = std::max(d, p.degree());
  return d;
}

CVector PolynomialSystem::eval(std::span<const cplx> x) const {
  if (static_cast<int>(x.size()) != n_vars_) throw DimensionMismatch("point length does not match variable count");
  CVector out(static_cast<long>(equations_.size()));
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    cplx s(0.0, 0.0);
    for (const auto& t : flat_[i]) {
      cplx p = t.coeff;
      for (int k = t.begin; k < t.end; ++k) p *= ipow(x[fvar_[k]], fexp_[k]);
      s += p;
    }
    out[static_cast<long>(i)] = s;
  }
  return out;
}

CMatrix PolynomialSystem::jacobian(std::span<const cplx> x) const {
  CVector v;
  CMatrix j;
  eval_with_jacobian(x, v, j);
  return j;
}

void PolynomialSystem::eval_with_jacobian(std::span<const cplx> x, CVector& value, CMatrix& jac) const {
  if (static_cast<int>(x.size()) != n_vars_) throw DimensionMismatch("point length does not match variable count");
  const long m = static_cast<long>(equations_.size());
  value.setZero(m);
  jac.setZero(m, n_vars_);
  std::vector<cplx> pw(static_cast<std::size_t>(max_factors_));
  for (long i = 0; i < m; ++i) {
    for (const auto& t : flat_[static_cast<std::size_t>(i)]) {
      const int nf = t.end - t.begin;
      cplx full = t.coeff;
      for (int k = 0; k < nf; ++k) {
        pw[k] = ipow(x[fvar_[t.begin + k]], fexp_[t.begin + k]);
        full *= pw[k];
      }
      value[i] += full;
      for (int k = 0; k < nf; ++k) {
        const int e = fexp_[t.begin + k];
        cplx d = t.coeff * static_cast<double>(e) * ipow(x[fvar_[t.begin + k]], e - 1);
        for (int j = 0; j < nf; ++j)
          if (j != k) d *= pw[j];
        jac(i, fvar_[t.begin + k]) += d;
      }
    }
  }
}

}  // namespace ccroots
