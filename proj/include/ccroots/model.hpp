#pragma once

/**
 * @file model.hpp
 * @brief Second-quantized model Hamiltonians over a fixed (n_up, n_dn) sector.
 *
 * Spin orbitals are interleaved: index = 2 * spatial + (0 for up, 1 for down).
 * A determinant is a 64-bit occupation mask; the canonical basis order is the
 * integer value of the mask. Creation/annihilation at orbital p carries the
 * phase (-1)^(number of occupied orbitals with index < p).
 */

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

#include "ccroots/common.hpp"

namespace ccroots {

inline constexpr int kMaxSpinOrbitals = 64;

enum class Spin : std::uint8_t { up = 0, down = 1 };

struct SpinOrbital {
  int index = 0;
  int spatial = 0;
  Spin spin = Spin::up;

  static constexpr SpinOrbital from_spatial(int spatial, Spin s) {
    return {2 * spatial + static_cast<int>(s), spatial, s};
  }
  static constexpr SpinOrbital from_index(int index) {
    return {index, index / 2, index % 2 == 0 ? Spin::up : Spin::down};
  }
};

/// Occupation bitmask of spin orbitals (bit i set = orbital i occupied).
class Determinant {
 public:
  constexpr Determinant() = default;
  constexpr explicit Determinant(std::uint64_t bits) : bits_(bits) {}

  constexpr std::uint64_t bits() const noexcept { return bits_; }
  constexpr bool occupied(int so) const noexcept { return (bits_ >> so) & 1U; }
  int count() const noexcept;
  int count(Spin s) const noexcept;
  std::vector<int> occupied_orbitals() const;

  /// (-1)^(occupied orbitals strictly below `so`).
  int phase_below(int so) const noexcept;

  /// a_so |D>; empty if `so` is unoccupied. `phase` is multiplied in place.
  std::optional<Determinant> annihilate(int so, int& phase) const noexcept;
  /// a+_so |D>; empty if `so` is occupied.
  std::optional<Determinant> create(int so, int& phase) const noexcept;

  constexpr auto operator<=>(const Determinant&) const = default;

 private:
  std::uint64_t bits_ = 0;
};

/// Real one- and two-electron integrals over spatial orbitals.
///
/// h2 is stored densely in chemists' order (pq|rs). Every table satisfies
/// h1[p,q] = h1[q,p] and the Hermitian pair symmetries (pq|rs) = (qp|sr) =
/// (rs|pq); real-orbital tables additionally have the full 8-fold symmetry.
class IntegralTable {
 public:
  IntegralTable() = default;
  explicit IntegralTable(int n_spatial, double core_energy = 0.0);

  int n_spatial() const noexcept { return n_; }
  double core_energy() const noexcept { return core_; }
  void set_core_energy(double e) noexcept { core_ = e; }

  double one(int p, int q) const { return h1_[idx1(p, q)]; }
  double two(int p, int q, int r, int s) const { return h2_[idx2(p, q, r, s)]; }

  /// Sets h1[p,q] and h1[q,p].
  void set_one(int p, int q, double v);
  /// Sets a single (pq|rs) element with no symmetry completion.
  void set_two_raw(int p, int q, int r, int s, double v);
  /// Sets (pq|rs) and all 8 permutationally equivalent elements.
  void set_two_eightfold(int p, int q, int r, int s, double v);

  bool has_eightfold_symmetry(double tol = 1e-12) const;

  /// Throws InvalidArgument on non-finite values or broken Hermitian symmetry.
  void validate(double tol = 1e-12) const;

  struct TwoBodyEntry {
    int p, q, r, s;
    double value;
  };
  /// All nonzero (pq|rs) elements in lexicographic index order.
  std::vector<TwoBodyEntry> nonzero_two_body(double tol = 0.0) const;

  bool operator==(const IntegralTable&) const = default;

 private:
  std::size_t idx1(int p, int q) const;
  std::size_t idx2(int p, int q, int r, int s) const;

  int n_ = 0;
  double core_ = 0.0;
  std::vector<double> h1_;
  std::vector<double> h2_;
};

struct ModelSpec {
  IntegralTable integrals;
  int n_up = 0;
  int n_dn = 0;
  Determinant reference;
  std::string label;

  int n_spatial() const noexcept { return integrals.n_spatial(); }
  int n_spin_orbitals() const noexcept { return 2 * integrals.n_spatial(); }
  int n_electrons() const noexcept { return n_up + n_dn; }

  /// Throws InvalidSector if the reference does not hold (n_up, n_dn) electrons.
  void validate() const;
};

/// Lowest n_up up-spin and n_dn down-spin spatial orbitals occupied.
Determinant aufbau_reference(int n_spatial, int n_up, int n_dn);

/// Replaces the reference determinant after checking its electron counts.
void set_reference(ModelSpec& model, Determinant reference);

enum class OrbitalBasis {
  site,     ///< localized site orbitals
  hopping,  ///< eigenbasis of the open-chain hopping matrix
};

ModelSpec build_hubbard(int n_sites, double t_hop, double U, int n_up, int n_dn,
                        OrbitalBasis basis = OrbitalBasis::site);

/// Reduced-BCS pairing model: levels p = 0..n_levels-1 with energy
/// spacing * p and pair scattering -g between every pair of levels.
ModelSpec build_pairing(int n_levels, double spacing, double g, int n_pairs);

/// Plain-text integral file. Header `norb=<int> nup=<int> ndn=<int> [core=<float>]`,
/// then `<value> p q 0 0` (one-electron) and `<value> p q r s` (two-electron)
/// lines with 1-based spatial indices; `#` starts a comment. Unique entries
/// are completed under 8-fold symmetry.
ModelSpec load_integrals(const std::filesystem::path& path);
ModelSpec parse_integrals(std::istream& in, const std::string& label = "integrals");

/// Writes the unique entries of an 8-fold symmetric table with 17 significant
/// digits. Throws InvalidArgument for tables without 8-fold symmetry.
void write_integrals(const ModelSpec& model, std::ostream& out);

/// All determinants of the (n_up, n_dn) sector over n_so spin orbitals, ascending.
std::vector<Determinant> enumerate_determinants(int n_so, int n_up, int n_dn);

/// Ordered determinant list with reverse lookup.
class DeterminantBasis {
 public:
  DeterminantBasis() = default;
  explicit DeterminantBasis(std::vector<Determinant> dets);
  static DeterminantBasis sector(const ModelSpec& model);

  std::size_t size() const noexcept { return dets_.size(); }
  const Determinant& operator[](std::size_t i) const { return dets_[i]; }
  const std::vector<Determinant>& determinants() const noexcept { return dets_; }
  /// Position of `d`, or -1 if absent.
  long index_of(Determinant d) const;

 private:
  std::vector<Determinant> dets_;
  std::unordered_map<std::uint64_t, long> index_;
};

/// Sparse complex matrix over a determinant basis.
class ManyBodyOperator {
 public:
  using Matrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
  using Triplet = Eigen::Triplet<cplx>;

  ManyBodyOperator() = default;
  explicit ManyBodyOperator(Matrix m);
  /// Sums duplicates and drops entries with |value| <= 1e-15.
  static ManyBodyOperator from_triplets(long dim, const std::vector<Triplet>& entries);
  static ManyBodyOperator identity(long dim);

  long dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  CMatrix dense() const { return CMatrix(m_); }
  cplx coeff(long row, long col) const { return m_.coeff(row, col); }
  long nonzeros() const noexcept { return m_.nonZeros(); }

 private:
  Matrix m_;
};

/// Sector-restricted Hamiltonian matrix of `model` (core energy included).
ManyBodyOperator assemble_hamiltonian(const ModelSpec& model);
/// Hamiltonian over an arbitrary determinant list (may span several sectors).
ManyBodyOperator assemble_hamiltonian(const ModelSpec& model, const DeterminantBasis& basis);

CVector apply_operator(const ManyBodyOperator& op, const CVector& v);

}  // namespace ccroots
