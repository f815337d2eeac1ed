#include "ccroots/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

namespace ccroots {

namespace {

constexpr std::uint64_t kUpMask = 0x5555555555555555ULL;
constexpr std::uint64_t kDownMask = 0xAAAAAAAAAAAAAAAAULL;

void check_sector(int n_spatial, int n_up, int n_dn) {
  if (n_spatial < 1) throw InvalidSector("at least one spatial orbital is required");
  if (2 * n_spatial > kMaxSpinOrbitals)
    throw CapabilityError("at most " + std::to_string(kMaxSpinOrbitals) + " spin orbitals supported");
  if (n_up < 0 || n_dn < 0 || n_up > n_spatial || n_dn > n_spatial)
    throw InvalidSector("electron counts (" + std::to_string(n_up) + ", " + std::to_string(n_dn) +
                        ") do not fit " + std::to_string(n_spatial) + " spatial orbitals");
}

}  // namespace

// ---------------------------------------------------------------------------
// Determinant
// ---------------------------------------------------------------------------

int Determinant::count() const noexcept { return std::popcount(bits_); }

int Determinant::count(Spin s) const noexcept {
  return std::popcount(bits_ & (s == Spin::up ? kUpMask : kDownMask));
}

std::vector<int> Determinant::occupied_orbitals() const {
  std::vector<int> out;
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

int Determinant::phase_below(int so) const noexcept {
  const std::uint64_t below = so >= 64 ? bits_ : (bits_ & ((std::uint64_t{1} << so) - 1));
  return std::popcount(below) % 2 == 0 ? 1 : -1;
}

std::optional<Determinant> Determinant::annihilate(int so, int& phase) const noexcept {
  if (!occupied(so)) return std::nullopt;
  phase *= phase_below(so);
  return Determinant(bits_ & ~(std::uint64_t{1} << so));
}

std::optional<Determinant> Determinant::create(int so, int& phase) const noexcept {
  if (occupied(so)) return std::nullopt;
  phase *= phase_below(so);
  return Determinant(bits_ | (std::uint64_t{1} << so));
}

// ---------------------------------------------------------------------------
// IntegralTable
// ---------------------------------------------------------------------------

IntegralTable::IntegralTable(int n_spatial, double core_energy) : n_(n_spatial), core_(core_energy) {
  if (n_spatial < 1) throw InvalidArgument("integral table needs at least one orbital");
  if (2 * n_spatial > kMaxSpinOrbitals)
    throw CapabilityError("at most " + std::to_string(kMaxSpinOrbitals) + " spin orbitals supported");
  const auto n = static_cast<std::size_t>(n_spatial);
  h1_.assign(n * n, 0.0);
  h2_.assign(n * n * n * n, 0.0);
}

std::size_t IntegralTable::idx1(int p, int q) const {
  if (p < 0 || q < 0 || p >= n_ || q >= n_) throw InvalidArgument("orbital index out of range");
  return static_cast<std::size_t>(p) * n_ + q;
}

std::size_t IntegralTable::idx2(int p, int q, int r, int s) const {
  if (p < 0 || q < 0 || r < 0 || s < 0 || p >= n_ || q >= n_ || r >= n_ || s >= n_)
    throw InvalidArgument("orbital index out of range");
  const auto n = static_cast<std::size_t>(n_);
  return ((static_cast<std::size_t>(p) * n + q) * n + r) * n + s;
}

void IntegralTable::set_one(int p, int q, double v) {
  h1_[idx1(p, q)] = v;
  h1_[idx1(q, p)] = v;
}

void IntegralTable::set_two_raw(int p, int q, int r, int s, double v) { h2_[idx2(p, q, r, s)] = v; }

void IntegralTable::set_two_eightfold(int p, int q, int r, int s, double v) {
  for (auto [a, b, c, d] : {std::array{p, q, r, s}, std::array{q, p, r, s}, std::array{p, q, s, r},
                            std::array{q, p, s, r}, std::array{r, s, p, q}, std::array{s, r, p, q},
                            std::array{r, s, q, p}, std::array{s, r, q, p}})
    h2_[idx2(a, b, c, d)] = v;
}

bool IntegralTable::has_eightfold_symmetry(double tol) const {
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q)
      for (int r = 0; r < n_; ++r)
        for (int s = 0; s < n_; ++s) {
          const double v = two(p, q, r, s);
          if (std::abs(v - two(q, p, r, s)) > tol || std::abs(v - two(p, q, s, r)) > tol ||
              std::abs(v - two(r, s, p, q)) > tol)
            return false;
        }
  return true;
}

void IntegralTable::validate(double tol) const {
  for (double v : h1_)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite one-electron integral");
  for (double v : h2_)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite two-electron integral");
  if (!std::isfinite(core_)) throw InvalidArgument("non-finite core energy");
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q)
      if (std::abs(one(p, q) - one(q, p)) > tol) throw SymmetryError("h1 is not symmetric");
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q)
      for (int r = 0; r < n_; ++r)
        for (int s = 0; s < n_; ++s) {
          const double v = two(p, q, r, s);
          if (std::abs(v - two(q, p, s, r)) > tol || std::abs(v - two(r, s, p, q)) > tol)
            throw SymmetryError("two-electron integrals break Hermitian pair symmetry");
        }
}

std::vector<IntegralTable::TwoBodyEntry> IntegralTable::nonzero_two_body(double tol) const {
  std::vector<TwoBodyEntry> out;
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q)
      for (int r = 0; r < n_; ++r)
        for (int s = 0; s < n_; ++s) {
          const double v = two(p, q, r, s);
          if (std::abs(v) > tol) out.push_back({p, q, r, s, v});
        }
  return out;
}

// ---------------------------------------------------------------------------
// ModelSpec and constructors
// ---------------------------------------------------------------------------

void ModelSpec::validate() const {
  check_sector(n_spatial(), n_up, n_dn);
  if (reference.count(Spin::up) != n_up || reference.count(Spin::down) != n_dn)
    throw InvalidSector("reference determinant does not hold (" + std::to_string(n_up) + ", " +
                        std::to_string(n_dn) + ") electrons");
  if (n_spin_orbitals() < 64 && (reference.bits() >> n_spin_orbitals()) != 0)
    throw InvalidSector("reference occupies orbitals outside the basis");
}

Determinant aufbau_reference(int n_spatial, int n_up, int n_dn) {
  check_sector(n_spatial, n_up, n_dn);
  std::uint64_t bits = 0;
  for (int p = 0; p < n_up; ++p) bits |= std::uint64_t{1} << SpinOrbital::from_spatial(p, Spin::up).index;
  for (int p = 0; p < n_dn; ++p) bits |= std::uint64_t{1} << SpinOrbital::from_spatial(p, Spin::down).index;
  return Determinant(bits);
}

void set_reference(ModelSpec& model, Determinant reference) {
  const Determinant old = model.reference;
  model.reference = reference;
  try {
    model.validate();
  } catch (...) {
    model.reference = old;
    throw;
  }
}

ModelSpec build_hubbard(int n_sites, double t_hop, double U, int n_up, int n_dn, OrbitalBasis basis) {
  check_sector(n_sites, n_up, n_dn);
  ModelSpec m;
  m.n_up = n_up;
  m.n_dn = n_dn;
  m.reference = aufbau_reference(n_sites, n_up, n_dn);
  std::ostringstream label;
  label << "hubbard(L=" << n_sites << ",t=" << t_hop << ",U=" << U << ",nup=" << n_up
        << ",ndn=" << n_dn << (basis == OrbitalBasis::hopping ? ",basis=hopping" : "") << ")";
  m.label = label.str();

  if (basis == OrbitalBasis::site) {
    IntegralTable ints(n_sites);
    for (int p = 0; p + 1 < n_sites; ++p) ints.set_one(p, p + 1, -t_hop);
    for (int p = 0; p < n_sites; ++p) ints.set_two_eightfold(p, p, p, p, U);
    m.integrals = std::move(ints);
    return m;
  }

  // Open-chain hopping eigenvectors phi_k(i) = sqrt(2/(L+1)) sin(pi (k+1)(i+1)/(L+1)),
  // energies -2t cos(pi (k+1)/(L+1)), ascending for t >= 0.
  const int L = n_sites;
  Eigen::MatrixXd phi(L, L);
  for (int k = 0; k < L; ++k)
    for (int i = 0; i < L; ++i)
      phi(i, k) = std::sqrt(2.0 / (L + 1)) * std::sin(std::numbers::pi * (k + 1) * (i + 1) / (L + 1));
  IntegralTable ints(L);
  constexpr double kDrop = 1e-14;
  for (int p = 0; p < L; ++p)
    for (int q = p; q < L; ++q) {
      double v = 0.0;
      for (int i = 0; i + 1 < L; ++i) v += -t_hop * (phi(i, p) * phi(i + 1, q) + phi(i + 1, p) * phi(i, q));
      if (std::abs(v) > kDrop) ints.set_one(p, q, v);
    }
  // One evaluation per unique (pq|rs) keeps the stored table exactly 8-fold symmetric.
  for (int p = 0; p < L; ++p)
    for (int q = p; q < L; ++q)
      for (int r = 0; r < L; ++r)
        for (int s = r; s < L; ++s) {
          if (p * L + q > r * L + s) continue;
          double v = 0.0;
          for (int i = 0; i < L; ++i) v += U * phi(i, p) * phi(i, q) * phi(i, r) * phi(i, s);
          if (std::abs(v) > kDrop) ints.set_two_eightfold(p, q, r, s, v);
        }
  m.integrals = std::move(ints);
  return m;
}

ModelSpec build_pairing(int n_levels, double spacing, double g, int n_pairs) {
  if (n_pairs < 1 || n_pairs > n_levels)
    throw InvalidSector("pair count " + std::to_string(n_pairs) + " must lie in [1, " +
                        std::to_string(n_levels) + "]");
  check_sector(n_levels, n_pairs, n_pairs);
  ModelSpec m;
  m.n_up = n_pairs;
  m.n_dn = n_pairs;
  m.reference = aufbau_reference(n_levels, n_pairs, n_pairs);
  std::ostringstream label;
  label << "pairing(levels=" << n_levels << ",spacing=" << spacing << ",g=" << g << ",pairs=" << n_pairs
        << ")";
  m.label = label.str();
  IntegralTable ints(n_levels);
  for (int p = 0; p < n_levels; ++p)
    if (p != 0) ints.set_one(p, p, spacing * p);
  // (pq|pq) a+_{p up} a+_{p dn} a_{q dn} a_{q up} pair hopping; only the Hermitian
  // pair symmetries hold, not the 8-fold real-orbital symmetry.
  if (g != 0.0)
    for (int p = 0; p < n_levels; ++p)
      for (int q = 0; q < n_levels; ++q) ints.set_two_raw(p, q, p, q, -g);
  m.integrals = std::move(ints);
  return m;
}

// ---------------------------------------------------------------------------
// Integral file I/O
// ---------------------------------------------------------------------------

ModelSpec load_integrals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open integral file " + path.string());
  return parse_integrals(in, path.filename().string());
}

namespace {

double parse_double(const std::string& tok, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + tok + "'", line);
  }
  if (used != tok.size()) throw ParseError("expected a number, got '" + tok + "'", line);
  return v;
}

int parse_int(const std::string& tok, int line) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + tok + "'", line);
  }
  if (used != tok.size()) throw ParseError("expected an integer, got '" + tok + "'", line);
  return static_cast<int>(v);
}

}  // namespace

ModelSpec parse_integrals(std::istream& in, const std::string& label) {
  std::string raw;
  int line_no = 0;
  bool have_header = false;
  int norb = -1, nup = -1, ndn = -1;
  std::optional<double> core;
  struct Entry {
    double v;
    int p, q, r, s;
    int line;
  };
  std::vector<Entry> entries;

  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;

    if (!have_header) {
      for (const auto& t : toks) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("malformed header token '" + t + "'", line_no);
        const std::string key = t.substr(0, eq), val = t.substr(eq + 1);
        if (key == "norb") norb = parse_int(val, line_no);
        else if (key == "nup") nup = parse_int(val, line_no);
        else if (key == "ndn") ndn = parse_int(val, line_no);
        else if (key == "core") core = parse_double(val, line_no);
        else throw ParseError("unknown header key '" + key + "'", line_no);
      }
      if (norb < 1 || nup < 0 || ndn < 0) throw ParseError("header needs norb, nup and ndn", line_no);
      have_header = true;
      continue;
    }

    if (toks.size() != 5) throw ParseError("expected '<value> p q r s'", line_no);
    Entry e{parse_double(toks[0], line_no), parse_int(toks[1], line_no), parse_int(toks[2], line_no),
            parse_int(toks[3], line_no), parse_int(toks[4], line_no), line_no};
    for (int idx : {e.p, e.q, e.r, e.s})
      if (idx < 0 || idx > norb) throw ParseError("orbital index " + std::to_string(idx) + " out of range", line_no);
    entries.push_back(e);
  }
  if (!have_header) throw ParseError("missing header line");

  check_sector(norb, nup, ndn);
  ModelSpec m;
  m.n_up = nup;
  m.n_dn = ndn;
  m.reference = aufbau_reference(norb, nup, ndn);
  m.label = label;
  IntegralTable ints(norb, core.value_or(0.0));

  constexpr double kAgree = 1e-10;
  const auto n = static_cast<std::size_t>(norb);
  std::vector<char> set1(n * n, 0), set2(n * n * n * n, 0);
  std::optional<double> core_line;

  for (const auto& e : entries) {
    if (e.p == 0 && e.q == 0 && e.r == 0 && e.s == 0) {
      if ((core && std::abs(*core - e.v) > kAgree) || (core_line && std::abs(*core_line - e.v) > kAgree))
        throw SymmetryError("line " + std::to_string(e.line) + ": conflicting core energy");
      core_line = e.v;
      ints.set_core_energy(e.v);
    } else if (e.r == 0 && e.s == 0) {
      if (e.p == 0 || e.q == 0) throw ParseError("one-electron entries need p, q >= 1", e.line);
      const int p = e.p - 1, q = e.q - 1;
      const std::size_t k1 = static_cast<std::size_t>(p) * n + q, k2 = static_cast<std::size_t>(q) * n + p;
      if ((set1[k1] || set1[k2]) && std::abs(ints.one(p, q) - e.v) > kAgree)
        throw SymmetryError("line " + std::to_string(e.line) + ": one-electron entry disagrees with symmetric partner");
      set1[k1] = set1[k2] = 1;
      ints.set_one(p, q, e.v);
    } else {
      if (e.p == 0 || e.q == 0 || e.r == 0 || e.s == 0)
        throw ParseError("two-electron entries need all indices >= 1", e.line);
      const int p = e.p - 1, q = e.q - 1, r = e.r - 1, s = e.s - 1;
      const std::array<std::array<int, 4>, 8> perms{{{p, q, r, s}, {q, p, r, s}, {p, q, s, r}, {q, p, s, r},
                                                     {r, s, p, q}, {s, r, p, q}, {r, s, q, p}, {s, r, q, p}}};
      auto key = [&](const std::array<int, 4>& x) {
        return ((static_cast<std::size_t>(x[0]) * n + x[1]) * n + x[2]) * n + x[3];
      };
      for (const auto& x : perms)
        if (set2[key(x)] && std::abs(ints.two(x[0], x[1], x[2], x[3]) - e.v) > kAgree)
          throw SymmetryError("line " + std::to_string(e.line) +
                              ": two-electron entry disagrees with a symmetry-equivalent entry");
      for (const auto& x : perms) set2[key(x)] = 1;
      ints.set_two_eightfold(p, q, r, s, e.v);
    }
  }
  ints.validate();
  m.integrals = std::move(ints);
  return m;
}

void write_integrals(const ModelSpec& model, std::ostream& out) {
  const auto& ints = model.integrals;
  if (!ints.has_eightfold_symmetry())
    throw InvalidArgument("integral file format requires 8-fold symmetric two-electron integrals");
  const int n = ints.n_spatial();
  std::ostringstream os;
  os << std::setprecision(17);
  os << "norb=" << n << " nup=" << model.n_up << " ndn=" << model.n_dn << " core=" << ints.core_energy()
     << "\n";
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q)
      if (ints.one(p, q) != 0.0) os << ints.one(p, q) << ' ' << p + 1 << ' ' << q + 1 << " 0 0\n";
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = r; s < n; ++s) {
          if (p * n + q > r * n + s) continue;
          const double v = ints.two(p, q, r, s);
          if (v != 0.0) os << v << ' ' << p + 1 << ' ' << q + 1 << ' ' << r + 1 << ' ' << s + 1 << "\n";
        }
  out << os.str();
}

// ---------------------------------------------------------------------------
// Determinant spaces and operators
// ---------------------------------------------------------------------------

std::vector<Determinant> enumerate_determinants(int n_so, int n_up, int n_dn) {
  if (n_so < 0 || n_so % 2 != 0) throw InvalidArgument("spin-orbital count must be even and non-negative");
  if (n_so > kMaxSpinOrbitals) throw CapabilityError("at most 64 spin orbitals supported");
  const int n_spatial = n_so / 2;
  if (n_up < 0 || n_dn < 0 || n_up > n_spatial || n_dn > n_spatial)
    throw InvalidSector("electron counts do not fit the orbital space");

  auto combos = [n_spatial](int k) {
    std::vector<std::uint64_t> masks;  // over spatial orbitals
    if (k == 0) return std::vector<std::uint64_t>{0};
    std::uint64_t v = (std::uint64_t{1} << k) - 1;
    const std::uint64_t limit = n_spatial >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n_spatial);
    while (v < limit && v != 0) {
      masks.push_back(v);
      const std::uint64_t u = v & (~v + 1);  // Gosper's hack
      const std::uint64_t w = v + u;
      v = w + (((v ^ w) / u) >> 2);
    }
    return masks;
  };
  auto spread = [](std::uint64_t spatial_mask, Spin s) {
    std::uint64_t bits = 0;
    for (std::uint64_t b = spatial_mask; b != 0; b &= b - 1)
      bits |= std::uint64_t{1} << SpinOrbital::from_spatial(std::countr_zero(b), s).index;
    return bits;
  };

  std::vector<Determinant> out;
  for (auto up : combos(n_up))
    for (auto dn : combos(n_dn)) out.emplace_back(spread(up, Spin::up) | spread(dn, Spin::down));
  std::sort(out.begin(), out.end());
  return out;
}

DeterminantBasis::DeterminantBasis(std::vector<Determinant> dets) : dets_(std::move(dets)) {
  index_.reserve(dets_.size());
  for (std::size_t i = 0; i < dets_.size(); ++i)
    if (!index_.emplace(dets_[i].bits(), static_cast<long>(i)).second)
      throw InvalidArgument("duplicate determinant in basis");
}

DeterminantBasis DeterminantBasis::sector(const ModelSpec& model) {
  return DeterminantBasis(enumerate_determinants(model.n_spin_orbitals(), model.n_up, model.n_dn));
}

long DeterminantBasis::index_of(Determinant d) const {
  auto it = index_.find(d.bits());
  return it == index_.end() ? -1 : it->second;
}

ManyBodyOperator::ManyBodyOperator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DimensionMismatch("many-body operator must be square");
  m_.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return std::abs(v) > 1e-15; });
  m_.makeCompressed();
}

ManyBodyOperator ManyBodyOperator::from_triplets(long dim, const std::vector<Triplet>& entries) {
  Matrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  return ManyBodyOperator(std::move(m));
}

ManyBodyOperator ManyBodyOperator::identity(long dim) {
  Matrix m(dim, dim);
  m.setIdentity();
  return ManyBodyOperator(std::move(m));
}

ManyBodyOperator assemble_hamiltonian(const ModelSpec& model) {
  return assemble_hamiltonian(model, DeterminantBasis::sector(model));
}

ManyBodyOperator assemble_hamiltonian(const ModelSpec& model, const DeterminantBasis& basis) {
  const auto& ints = model.integrals;
  const int n = ints.n_spatial();
  std::vector<std::tuple<int, int, double>> one_body;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      if (ints.one(p, q) != 0.0) one_body.emplace_back(p, q, ints.one(p, q));
  const auto two_body = ints.nonzero_two_body();

  std::vector<ManyBodyOperator::Triplet> trip;
  for (std::size_t col = 0; col < basis.size(); ++col) {
    const Determinant d = basis[col];
    auto emit = [&](std::optional<Determinant> out, int phase, double value) {
      if (!out) return;
      const long row = basis.index_of(*out);
      if (row < 0) return;  // leaves the supplied basis
      trip.emplace_back(row, static_cast<long>(col), cplx(phase * value, 0.0));
    };
    if (ints.core_energy() != 0.0) trip.emplace_back(col, col, cplx(ints.core_energy(), 0.0));

    // sum_{pq,sigma} h1[p,q] a+_{p sigma} a_{q sigma}
    for (auto [p, q, v] : one_body)
      for (Spin s : {Spin::up, Spin::down}) {
        int phase = 1;
        auto a = d.annihilate(SpinOrbital::from_spatial(q, s).index, phase);
        if (!a) continue;
        auto out = a->create(SpinOrbital::from_spatial(p, s).index, phase);
        emit(out, phase, v);
      }
    // 1/2 sum (pq|rs) a+_{p sigma} a+_{r tau} a_{s tau} a_{q sigma}
    for (const auto& e : two_body)
      for (Spin sg : {Spin::up, Spin::down})
        for (Spin tau : {Spin::up, Spin::down}) {
          int phase = 1;
          auto x = d.annihilate(SpinOrbital::from_spatial(e.q, sg).index, phase);
          if (!x) continue;
          x = x->annihilate(SpinOrbital::from_spatial(e.s, tau).index, phase);
          if (!x) continue;
          x = x->create(SpinOrbital::from_spatial(e.r, tau).index, phase);
          if (!x) continue;
          x = x->create(SpinOrbital::from_spatial(e.p, sg).index, phase);
          emit(x, phase, 0.5 * e.value);
        }
  }
  return ManyBodyOperator::from_triplets(static_cast<long>(basis.size()), trip);
}

CVector apply_operator(const ManyBodyOperator& op, const CVector& v) {
  if (v.size() != op.dim())
    throw DimensionMismatch("vector length " + std::to_string(v.size()) + " does not match operator dimension " +
                            std::to_string(op.dim()));
  return op.matrix() * v;
}

}  // namespace ccroots
