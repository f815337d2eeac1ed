#pragma once

/**
 * @file excitations.hpp
 * @brief Particle-hole excitation graphs and their operator realizations.
 *
 * Indices are ordered by rank, then lexicographically in (holes, particles).
 * This order is the coordinate system of every amplitude vector and
 * polynomial system in the library. Each X_mu carries a folded sign so that
 * X_mu |Phi_0> = +|Phi_mu>.
 */

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include "ccroots/model.hpp"

namespace ccroots {

struct ExcitationIndex {
  std::vector<int> holes;      ///< occupied in the reference, ascending
  std::vector<int> particles;  ///< virtual in the reference, ascending

  int rank() const noexcept { return static_cast<int>(holes.size()); }

  std::strong_ordering operator<=>(const ExcitationIndex& o) const;
  bool operator==(const ExcitationIndex&) const = default;
};

class ExcitationGraph {
 public:
  ExcitationGraph() = default;
  ExcitationGraph(Determinant reference, std::vector<ExcitationIndex> indices);

  const Determinant& reference() const noexcept { return reference_; }
  const std::vector<ExcitationIndex>& indices() const noexcept { return indices_; }
  const ExcitationIndex& operator[](std::size_t i) const { return indices_[i]; }
  std::size_t size() const noexcept { return indices_.size(); }

  int rank_max() const noexcept { return rank_max_; }
  int n_s() const noexcept { return n_s_; }
  int n_d() const noexcept { return n_d_; }
  /// Every index has rank 1 or 2.
  bool is_ccsd_type() const noexcept { return rank_max_ <= 2; }

  std::optional<std::size_t> position(const ExcitationIndex& mu) const;
  /// |Phi_mu> as an occupation mask.
  Determinant target(std::size_t i) const;

  bool operator==(const ExcitationGraph& o) const {
    return reference_ == o.reference_ && indices_ == o.indices_;
  }

 private:
  Determinant reference_;
  std::vector<ExcitationIndex> indices_;
  int rank_max_ = 0;
  int n_s_ = 0;
  int n_d_ = 0;
};

/// Largest rank that `build_graph` accepts: min(n_elec, n_virtual).
int max_rank(const ModelSpec& model);

/// All spin-conserving particle-hole excitations of rank <= rank_max.
ExcitationGraph build_graph(const ModelSpec& model, int rank_max);
/// Only the listed ranks (e.g. {2} for a doubles-only graph).
ExcitationGraph build_graph(const ModelSpec& model, std::span<const int> ranks);
/// Untruncated graph of the sector.
ExcitationGraph full_graph(const ModelSpec& model);

/// Sparse action of every X_mu of a graph on a determinant basis.
///
/// Each X_mu maps a determinant to at most one determinant, so it is stored
/// as a signed partial map column -> row.
class ExcitationSet {
 public:
  ExcitationSet(ExcitationGraph graph, DeterminantBasis basis);

  const ExcitationGraph& graph() const noexcept { return graph_; }
  const DeterminantBasis& basis() const noexcept { return basis_; }
  std::size_t size() const noexcept { return graph_.size(); }
  long dim() const noexcept { return static_cast<long>(basis_.size()); }
  long reference_index() const noexcept { return ref_index_; }
  /// Basis position of |Phi_mu>.
  long target_index(std::size_t mu) const { return target_index_[mu]; }

  /// out += coeff * X_mu v
  void apply_add(std::size_t mu, const CVector& v, cplx coeff, CVector& out) const;
  CVector apply(std::size_t mu, const CVector& v) const;
  /// T(t) v with T = sum_mu t_mu X_mu.
  CVector apply_cluster(std::span<const cplx> t, const CVector& v) const;
  /// e^{T(t)} v via the terminating power series.
  CVector apply_exp(std::span<const cplx> t, const CVector& v) const;

  ManyBodyOperator matrix(std::size_t mu) const;
  ManyBodyOperator cluster_matrix(std::span<const cplx> t) const;

  /// Unit vector on the reference determinant.
  CVector reference_vector() const;

 private:
  struct Entry {
    long col;
    long row;
    double sign;
  };
  ExcitationGraph graph_;
  DeterminantBasis basis_;
  std::vector<std::vector<Entry>> maps_;
  std::vector<long> target_index_;
  long ref_index_ = -1;
};

/// Matrix of X_mu on `basis`. Throws InvalidArgument if mu is not in the graph.
ManyBodyOperator excitation_matrix(const ExcitationGraph& g, const ExcitationIndex& mu,
                                   const DeterminantBasis& basis);

/// Partition of an untruncated graph into ranks <= rho (low) and > rho (high).
struct AmplitudeSplit {
  ExcitationGraph graph_full;
  int rho = 0;
  std::vector<std::size_t> low;
  std::vector<std::size_t> high;

  CVector embed(const CVector& t_low, const CVector& t_high) const;
  CVector low_part(const CVector& t_full) const;
  CVector high_part(const CVector& t_full) const;
  /// The truncated graph made of the low indices.
  ExcitationGraph low_graph() const;
};

/// Requires 2 <= rho <= n_elec; rho = n_elec gives an empty high block.
AmplitudeSplit split(const ExcitationGraph& g_full, int rho, int n_electrons);

}  // namespace ccroots
