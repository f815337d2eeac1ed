#include "ccroots/excitations.hpp"

#include <algorithm>
#include <numeric>

namespace ccroots {

std::strong_ordering ExcitationIndex::operator<=>(const ExcitationIndex& o) const {
  if (auto c = rank() <=> o.rank(); c != 0) return c;
  if (auto c = holes <=> o.holes; c != 0) return c;
  return particles <=> o.particles;
}

ExcitationGraph::ExcitationGraph(Determinant reference, std::vector<ExcitationIndex> indices)
    : reference_(reference), indices_(std::move(indices)) {
  for (const auto& mu : indices_) {
    if (mu.rank() < 1 || mu.holes.size() != mu.particles.size())
      throw InvalidArgument("excitation index must have equal, positive hole and particle counts");
    for (int h : mu.holes)
      if (!reference_.occupied(h)) throw InvalidArgument("hole orbital not occupied in reference");
    for (int p : mu.particles)
      if (reference_.occupied(p)) throw InvalidArgument("particle orbital occupied in reference");
    if (!std::is_sorted(mu.holes.begin(), mu.holes.end()) ||
        !std::is_sorted(mu.particles.begin(), mu.particles.end()))
      throw InvalidArgument("excitation index lists must be ascending");
    rank_max_ = std::max(rank_max_, mu.rank());
    n_s_ += mu.rank() == 1;
    n_d_ += mu.rank() == 2;
  }
  if (!std::is_sorted(indices_.begin(), indices_.end()) ||
      std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
    throw InvalidArgument("excitation indices must be strictly ordered");
}

std::optional<std::size_t> ExcitationGraph::position(const ExcitationIndex& mu) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), mu);
  if (it == indices_.end() || *it != mu) return std::nullopt;
  return static_cast<std::size_t>(it - indices_.begin());
}

Determinant ExcitationGraph::target(std::size_t i) const {
  std::uint64_t bits = reference_.bits();
  for (int h : indices_[i].holes) bits &= ~(std::uint64_t{1} << h);
  for (int p : indices_[i].particles) bits |= std::uint64_t{1} << p;
  return Determinant(bits);
}

int max_rank(const ModelSpec& model) {
  const int n_virtual = model.n_spin_orbitals() - model.n_electrons();
  return std::min(model.n_electrons(), n_virtual);
}

namespace {

void combinations(const std::vector<int>& pool, int k, std::vector<std::vector<int>>& out) {
  std::vector<int> pick;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (static_cast<int>(pick.size()) == k) {
      out.push_back(pick);
      return;
    }
    for (std::size_t i = start; i < pool.size(); ++i) {
      pick.push_back(pool[i]);
      self(self, i + 1);
      pick.pop_back();
    }
  };
  rec(rec, 0);
}

int up_count(const std::vector<int>& so) {
  return static_cast<int>(std::count_if(so.begin(), so.end(), [](int i) { return i % 2 == 0; }));
}

}  // namespace

ExcitationGraph build_graph(const ModelSpec& model, std::span<const int> ranks) {
  model.validate();
  const int cap = max_rank(model);
  if (ranks.empty()) throw InvalidArgument("at least one excitation rank is required");
  for (int r : ranks)
    if (r < 1 || r > cap)
      throw InvalidArgument("excitation rank " + std::to_string(r) + " outside [1, " + std::to_string(cap) + "]");

  std::vector<int> occ, virt;
  for (int i = 0; i < model.n_spin_orbitals(); ++i) (model.reference.occupied(i) ? occ : virt).push_back(i);

  std::vector<int> sorted_ranks(ranks.begin(), ranks.end());
  std::sort(sorted_ranks.begin(), sorted_ranks.end());
  sorted_ranks.erase(std::unique(sorted_ranks.begin(), sorted_ranks.end()), sorted_ranks.end());

  std::vector<ExcitationIndex> indices;
  for (int k : sorted_ranks) {
    std::vector<std::vector<int>> hs, ps;
    combinations(occ, k, hs);
    combinations(virt, k, ps);
    for (const auto& h : hs)
      for (const auto& p : ps)
        if (up_count(h) == up_count(p)) indices.push_back({h, p});
  }
  std::sort(indices.begin(), indices.end());
  return ExcitationGraph(model.reference, std::move(indices));
}

ExcitationGraph build_graph(const ModelSpec& model, int rank_max) {
  const int cap = max_rank(model);
  if (rank_max < 1 || rank_max > cap)
    throw InvalidArgument("rank_max " + std::to_string(rank_max) + " outside [1, " + std::to_string(cap) + "]");
  std::vector<int> ranks(static_cast<std::size_t>(rank_max));
  std::iota(ranks.begin(), ranks.end(), 1);
  return build_graph(model, ranks);
}

ExcitationGraph full_graph(const ModelSpec& model) { return build_graph(model, max_rank(model)); }

// ---------------------------------------------------------------------------
// ExcitationSet
// ---------------------------------------------------------------------------

namespace {

/// X = a+_{p1} ... a+_{pk} a_{hk} ... a_{h1} applied to d; phase returned in `phase`.
std::optional<Determinant> apply_string(const ExcitationIndex& mu, Determinant d, int& phase) {
  std::optional<Determinant> x = d;
  for (int h : mu.holes) {
    x = x->annihilate(h, phase);
    if (!x) return std::nullopt;
  }
  for (auto it = mu.particles.rbegin(); it != mu.particles.rend(); ++it) {
    x = x->create(*it, phase);
    if (!x) return std::nullopt;
  }
  return x;
}

}  // namespace

ExcitationSet::ExcitationSet(ExcitationGraph graph, DeterminantBasis basis)
    : graph_(std::move(graph)), basis_(std::move(basis)) {
  ref_index_ = basis_.index_of(graph_.reference());
  if (ref_index_ < 0) throw InvalidArgument("reference determinant missing from basis");
  maps_.resize(graph_.size());
  target_index_.resize(graph_.size());
  for (std::size_t mu = 0; mu < graph_.size(); ++mu) {
    const auto& idx = graph_[mu];
    int ref_phase = 1;
    auto on_ref = apply_string(idx, graph_.reference(), ref_phase);
    target_index_[mu] = basis_.index_of(*on_ref);
    if (target_index_[mu] < 0) throw InvalidArgument("excited determinant missing from basis");
    for (std::size_t col = 0; col < basis_.size(); ++col) {
      int phase = ref_phase;  // folds the sign so that X_mu |Phi_0> = +|Phi_mu>
      auto out = apply_string(idx, basis_[col], phase);
      if (!out) continue;
      const long row = basis_.index_of(*out);
      if (row < 0) continue;
      maps_[mu].push_back({static_cast<long>(col), row, static_cast<double>(phase)});
    }
  }
}

void ExcitationSet::apply_add(std::size_t mu, const CVector& v, cplx coeff, CVector& out) const {
  for (const auto& e : maps_[mu]) out[e.row] += coeff * e.sign * v[e.col];
}

CVector ExcitationSet::apply(std::size_t mu, const CVector& v) const {
  CVector out = CVector::Zero(dim());
  apply_add(mu, v, 1.0, out);
  return out;
}

CVector ExcitationSet::apply_cluster(std::span<const cplx> t, const CVector& v) const {
  if (t.size() != size()) throw DimensionMismatch("amplitude vector length does not match graph");
  if (v.size() != dim()) throw DimensionMismatch("state vector length does not match basis");
  CVector out = CVector::Zero(dim());
  for (std::size_t mu = 0; mu < size(); ++mu)
    if (t[mu] != cplx(0.0)) apply_add(mu, v, t[mu], out);
  return out;
}

CVector ExcitationSet::apply_exp(std::span<const cplx> t, const CVector& v) const {
  CVector sum = v;
  CVector term = v;
  // T raises excitation rank by at least one, so T^(n_so + 1) = 0.
  for (int k = 1; k <= kMaxSpinOrbitals + 1; ++k) {
    term = apply_cluster(t, term) / static_cast<double>(k);
    if (term.cwiseAbs().maxCoeff() == 0.0) break;
    sum += term;
  }
  return sum;
}

ManyBodyOperator ExcitationSet::matrix(std::size_t mu) const {
  std::vector<ManyBodyOperator::Triplet> trip;
  for (const auto& e : maps_[mu]) trip.emplace_back(e.row, e.col, cplx(e.sign, 0.0));
  return ManyBodyOperator::from_triplets(dim(), trip);
}

ManyBodyOperator ExcitationSet::cluster_matrix(std::span<const cplx> t) const {
  if (t.size() != size()) throw DimensionMismatch("amplitude vector length does not match graph");
  std::vector<ManyBodyOperator::Triplet> trip;
  for (std::size_t mu = 0; mu < size(); ++mu)
    for (const auto& e : maps_[mu]) trip.emplace_back(e.row, e.col, t[mu] * e.sign);
  return ManyBodyOperator::from_triplets(dim(), trip);
}

CVector ExcitationSet::reference_vector() const {
  CVector v = CVector::Zero(dim());
  v[ref_index_] = 1.0;
  return v;
}

ManyBodyOperator excitation_matrix(const ExcitationGraph& g, const ExcitationIndex& mu,
                                   const DeterminantBasis& basis) {
  auto pos = g.position(mu);
  if (!pos) throw InvalidArgument("excitation index is not part of the graph");
  ExcitationGraph single(g.reference(), {mu});
  return ExcitationSet(std::move(single), basis).matrix(0);
}

// ---------------------------------------------------------------------------
// AmplitudeSplit
// ---------------------------------------------------------------------------

AmplitudeSplit split(const ExcitationGraph& g_full, int rho, int n_electrons) {
  if (rho < 2 || rho > n_electrons)
    throw InvalidArgument("truncation rank rho=" + std::to_string(rho) + " must lie in [2, " +
                          std::to_string(n_electrons) + "]");
  AmplitudeSplit s;
  s.graph_full = g_full;
  s.rho = rho;
  for (std::size_t i = 0; i < g_full.size(); ++i) (g_full[i].rank() <= rho ? s.low : s.high).push_back(i);
  return s;
}

CVector AmplitudeSplit::embed(const CVector& t_low, const CVector& t_high) const {
  if (t_low.size() != static_cast<long>(low.size()) || t_high.size() != static_cast<long>(high.size()))
    throw DimensionMismatch("split block sizes do not match");
  CVector t = CVector::Zero(static_cast<long>(graph_full.size()));
  for (std::size_t i = 0; i < low.size(); ++i) t[low[i]] = t_low[i];
  for (std::size_t i = 0; i < high.size(); ++i) t[high[i]] = t_high[i];
  return t;
}

CVector AmplitudeSplit::low_part(const CVector& t_full) const {
  if (t_full.size() != static_cast<long>(graph_full.size())) throw DimensionMismatch("amplitude length");
  CVector out(static_cast<long>(low.size()));
  for (std::size_t i = 0; i < low.size(); ++i) out[i] = t_full[low[i]];
  return out;
}

CVector AmplitudeSplit::high_part(const CVector& t_full) const {
  if (t_full.size() != static_cast<long>(graph_full.size())) throw DimensionMismatch("amplitude length");
  CVector out(static_cast<long>(high.size()));
  for (std::size_t i = 0; i < high.size(); ++i) out[i] = t_full[high[i]];
  return out;
}

ExcitationGraph AmplitudeSplit::low_graph() const {
  std::vector<ExcitationIndex> idx;
  for (auto i : low) idx.push_back(graph_full[i]);
  return ExcitationGraph(graph_full.reference(), std::move(idx));
}

}  // namespace ccroots
