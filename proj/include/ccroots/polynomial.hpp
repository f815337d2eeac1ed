#pragma once

/**
 * @file polynomial.hpp
 * @brief Sparse complex multivariate polynomials and square systems.
 *
 * Monomials are ordered graded-lexicographically: lower total degree first,
 * then by the sorted (variable, exponent) list. Serialized systems iterate
 * terms in this order, which keeps output files reproducible.
 */

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccroots/common.hpp"

namespace ccroots {

class Monomial {
 public:
  Monomial() = default;
  /// Factors with zero exponent are dropped; repeated variables are merged.
  explicit Monomial(std::vector<std::pair<int, int>> factors);
  static Monomial variable(int var, int exponent = 1);
  /// Product of the listed variables (repeats raise the exponent).
  static Monomial product(std::span<const int> vars);

  const std::vector<std::pair<int, int>>& factors() const noexcept { return factors_; }
  int degree() const noexcept { return degree_; }
  int exponent(int var) const noexcept;
  int max_variable() const noexcept { return factors_.empty() ? -1 : factors_.back().first; }

  cplx eval(std::span<const cplx> x) const;
  Monomial operator*(const Monomial& o) const;

  std::strong_ordering operator<=>(const Monomial& o) const;
  bool operator==(const Monomial& o) const = default;

 private:
  std::vector<std::pair<int, int>> factors_;  // (variable, exponent > 0), ascending variable
  int degree_ = 0;
};

class Polynomial {
 public:
  using TermMap = std::map<Monomial, cplx>;

  Polynomial() = default;

  void add_term(const Monomial& m, cplx c);
  const TermMap& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  int degree() const noexcept;
  cplx coefficient(const Monomial& m) const;

  cplx eval(std::span<const cplx> x) const;
  /// Gradient with respect to the first `n_vars` variables.
  CVector gradient(std::span<const cplx> x, int n_vars) const;

  /// Drops terms with |c| <= rel_tol * max|c| (and exact zeros).
  void prune(double rel_tol);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(cplx s) const;

 private:
  TermMap terms_;
};

/// Provenance carried with a system.
struct SystemMetadata {
  std::string model_label;
  bool cc_system = false;
  bool quadratized = false;
  /// Equations are <Phi_mu| (H - E) e^T |Phi_0> instead of the linked residuals.
  bool unlinked = false;
  int n_s = 0;
  int n_d = 0;
  int rank_max = 0;
  std::uint64_t reference_bits = 0;
  /// (holes, particles) per original amplitude, graph order.
  std::vector<std::pair<std::vector<int>, std::vector<int>>> graph;
  /// (i, j, a, b) of each auxiliary variable, in auxiliary order.
  std::vector<std::array<int, 4>> aux_map;
  /// CC energy as a polynomial in the original amplitudes.
  std::optional<Polynomial> energy;
};

class PolynomialSystem {
 public:
  PolynomialSystem() = default;
  PolynomialSystem(int n_vars, std::vector<Polynomial> equations, std::vector<std::string> names = {},
                   SystemMetadata metadata = {});

  int n_vars() const noexcept { return n_vars_; }
  std::size_t n_equations() const noexcept { return equations_.size(); }
  bool is_square() const noexcept { return static_cast<int>(equations_.size()) == n_vars_; }
  const std::vector<Polynomial>& equations() const noexcept { return equations_; }
  const Polynomial& operator[](std::size_t i) const { return equations_[i]; }
  const std::vector<std::string>& variable_names() const noexcept { return names_; }
  const SystemMetadata& metadata() const noexcept { return meta_; }
  SystemMetadata& metadata() noexcept { return meta_; }

  std::vector<int> degrees() const;
  int max_degree() const;

  CVector eval(std::span<const cplx> x) const;
  CMatrix jacobian(std::span<const cplx> x) const;
  /// Value and Jacobian in one pass.
  void eval_with_jacobian(std::span<const cplx> x, CVector& value, CMatrix& jac) const;

  CVector eval(const CVector& x) const { return eval(std::span<const cplx>(x.data(), x.size())); }
  CMatrix jacobian(const CVector& x) const { return jacobian(std::span<const cplx>(x.data(), x.size())); }

 private:
  void compile();

  struct FlatTerm {
    cplx coeff;
    int begin;  // into factor arrays
    int end;
  };
  int n_vars_ = 0;
  std::vector<Polynomial> equations_;
  std::vector<std::string> names_;
  SystemMetadata meta_;
  // Flattened evaluation layout.
  std::vector<std::vector<FlatTerm>> flat_;
  std::vector<int> fvar_;
  std::vector<int> fexp_;
  int max_factors_ = 0;
};

}  // namespace ccroots
