#include "ccroots/io.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

namespace ccroots {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json complex_to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw ParseError("complex number must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Json vector_to_json(const CVector& v) {
  Json re = Json::array(), im = Json::array();
  for (long i = 0; i < v.size(); ++i) {
    re.push_back(v[i].real());
    im.push_back(v[i].imag());
  }
  return Json{{"re", re}, {"im", im}};
}

CVector vector_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("re")) throw ParseError("vector must be {\"re\": [...], \"im\": [...]}");
  const auto& re = j.at("re");
  const Json im = j.contains("im") ? j.at("im") : Json::array();
  if (!im.empty() && im.size() != re.size()) throw ParseError("vector re/im lengths differ");
  CVector v(static_cast<long>(re.size()));
  for (std::size_t i = 0; i < re.size(); ++i)
    v[static_cast<long>(i)] = {re[i].get<double>(), im.empty() ? 0.0 : im[i].get<double>()};
  return v;
}

// ---------------------------------------------------------------------------

Json model_to_json(const ModelSpec& m) {
  const auto& ints = m.integrals;
  Json h1 = Json::array();
  for (int p = 0; p < ints.n_spatial(); ++p)
    for (int q = p; q < ints.n_spatial(); ++q)
      if (ints.one(p, q) != 0.0) h1.push_back(Json::array({p, q, ints.one(p, q)}));
  Json h2 = Json::array();
  for (const auto& e : ints.nonzero_two_body()) h2.push_back(Json::array({e.p, e.q, e.r, e.s, e.value}));
  return Json{{"label", m.label},
              {"n_spatial", ints.n_spatial()},
              {"n_spin_orbitals", m.n_spin_orbitals()},
              {"n_up", m.n_up},
              {"n_dn", m.n_dn},
              {"reference", m.reference.occupied_orbitals()},
              {"core_energy", ints.core_energy()},
              {"h1", h1},
              {"h2", h2}};
}

ModelSpec model_from_json(const Json& j) {
  try {
    ModelSpec m;
    m.label = j.value("label", std::string("model"));
    m.integrals = IntegralTable(j.at("n_spatial").get<int>(), j.value("core_energy", 0.0));
    m.n_up = j.at("n_up").get<int>();
    m.n_dn = j.at("n_dn").get<int>();
    for (const auto& e : j.at("h1")) m.integrals.set_one(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>());
    for (const auto& e : j.at("h2"))
      m.integrals.set_two_raw(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>(), e.at(3).get<int>(),
                              e.at(4).get<double>());
    if (j.contains("reference")) {
      std::uint64_t bits = 0;
      for (const auto& o : j.at("reference")) {
        const int so = o.get<int>();
        if (so < 0 || so >= m.n_spin_orbitals()) throw InvalidArgument("reference orbital out of range");
        bits |= std::uint64_t{1} << so;
      }
      m.reference = Determinant(bits);
    } else {
      m.reference = aufbau_reference(m.n_spatial(), m.n_up, m.n_dn);
    }
    m.integrals.validate();
    m.validate();
    return m;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Json polynomial_to_json(const Polynomial& p, const std::vector<std::string>& names) {
  Json terms = Json::array();
  for (const auto& [m, c] : p.terms()) {
    Json mono = Json::object();
    for (auto [v, e] : m.factors()) mono[names.at(static_cast<std::size_t>(v))] = e;
    terms.push_back(Json::array({c.real(), c.imag(), mono}));
  }
  return terms;
}

Polynomial polynomial_from_json(const Json& j, const std::vector<std::string>& names) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);
  Polynomial p;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3) throw ParseError("term must be [re, im, {var: exp}]");
    std::vector<std::pair<int, int>> f;
    for (const auto& [name, e] : t[2].items()) {
      auto it = index.find(name);
      if (it == index.end()) throw ParseError("unknown variable '" + name + "'");
      f.emplace_back(it->second, e.get<int>());
    }
    p.add_term(Monomial(std::move(f)), {t[0].get<double>(), t[1].get<double>()});
  }
  return p;
}

namespace {

Json metadata_to_json(const SystemMetadata& m, const std::vector<std::string>& names) {
  Json graph = Json::array();
  for (const auto& [h, p] : m.graph) graph.push_back(Json{{"holes", h}, {"particles", p}});
  Json aux = Json::array();
  for (std::size_t k = 0; k < m.aux_map.size(); ++k) {
    const auto& a = m.aux_map[k];
    aux.push_back(Json{{"variable", static_cast<int>(m.graph.size() + k)},
                       {"i", a[0]},
                       {"j", a[1]},
                       {"a", a[2]},
                       {"b", a[3]}});
  }
  std::vector<int> ref;
  for (int i = 0; i < 64; ++i)
    if ((m.reference_bits >> i) & 1U) ref.push_back(i);
  Json j{{"model_label", m.model_label}, {"cc_system", m.cc_system}, {"quadratized", m.quadratized},
         {"unlinked", m.unlinked},       {"n_s", m.n_s},                 {"n_d", m.n_d},             {"rank_max", m.rank_max},
         {"reference", ref},             {"graph", graph},           {"aux_map", aux}};
  j["energy"] = m.energy ? polynomial_to_json(*m.energy, names) : Json(nullptr);
  return j;
}

SystemMetadata metadata_from_json(const Json& j, const std::vector<std::string>& names) {
  SystemMetadata m;
  m.model_label = j.value("model_label", std::string());
  m.cc_system = j.value("cc_system", false);
  m.quadratized = j.value("quadratized", false);
  m.unlinked = j.value("unlinked", false);
  m.n_s = j.value("n_s", 0);
  m.n_d = j.value("n_d", 0);
  m.rank_max = j.value("rank_max", 0);
  if (j.contains("reference"))
    for (const auto& o : j.at("reference")) m.reference_bits |= std::uint64_t{1} << o.get<int>();
  if (j.contains("graph"))
    for (const auto& g : j.at("graph"))
      m.graph.emplace_back(g.at("holes").get<std::vector<int>>(), g.at("particles").get<std::vector<int>>());
  if (j.contains("aux_map"))
    for (const auto& a : j.at("aux_map"))
      m.aux_map.push_back({a.at("i").get<int>(), a.at("j").get<int>(), a.at("a").get<int>(), a.at("b").get<int>()});
  if (j.contains("energy") && !j.at("energy").is_null()) m.energy = polynomial_from_json(j.at("energy"), names);
  return m;
}

}  // namespace

Json system_to_json(const PolynomialSystem& sys, const RootBounds* bounds) {
  const auto& names = sys.variable_names();
  Json eqs = Json::array();
  for (const auto& p : sys.equations()) eqs.push_back(polynomial_to_json(p, names));
  Json j{{"n_vars", sys.n_vars()}, {"variables", names}, {"degrees", sys.degrees()}, {"equations", eqs}};
  j["metadata"] = metadata_to_json(sys.metadata(), names);
  if (bounds) {
    Json b{{"bezout_total", bounds->bezout_total.str()}};
    b["bezout_sd"] = bounds->bezout_sd ? Json(bounds->bezout_sd->str()) : Json(nullptr);
    b["quadratic"] = bounds->quadratic ? Json(bounds->quadratic->str()) : Json(nullptr);
    j["bounds"] = b;
  }
  return j;
}

PolynomialSystem system_from_json(const Json& j) {
  try {
    const auto names = j.at("variables").get<std::vector<std::string>>();
    std::vector<Polynomial> eqs;
    for (const auto& e : j.at("equations")) eqs.push_back(polynomial_from_json(e, names));
    SystemMetadata meta = j.contains("metadata") ? metadata_from_json(j.at("metadata"), names) : SystemMetadata{};
    return PolynomialSystem(static_cast<int>(names.size()), std::move(eqs), names, std::move(meta));
  } catch (const Json::exception& e) {
    throw ParseError(std::string("system JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Json solutions_to_json(const SolutionSet& s, const std::vector<std::string>& names) {
  const auto& o = s.options;
  Json opts{{"step_init", o.step_init},
            {"step_min", o.step_min},
            {"corrector_tol", o.corrector_tol},
            {"corrector_max_iters", o.corrector_max_iters},
            {"divergence_norm", o.divergence_norm},
            {"endpoint_lambda", o.endpoint_lambda},
            {"endgame_factor", o.endgame_factor},
            {"endgame_start", o.endgame_start},
            {"dedupe_radius", o.dedupe_radius},
            {"refine_tol", o.refine_tol},
            {"real_tol", o.real_tol}};
  Json header{{"seed", o.rng_seed},
              {"gamma", complex_to_json(s.gamma)},
              {"options", opts},
              {"bound_used", s.bound_used},
              {"n_paths_tracked", s.n_paths_tracked},
              {"n_converged", s.n_converged},
              {"n_diverged", s.n_diverged},
              {"n_failed", s.n_failed},
              {"n_solutions", s.solutions.size()},
              {"variables", names}};
  Json sols = Json::array();
  for (const auto& x : s.solutions) {
    Json e{{"point", vector_to_json(x.point)},
           {"residual", x.residual_norm},
           {"multiplicity", x.multiplicity},
           {"is_real", x.is_real}};
    e["energy"] = x.energy ? complex_to_json(*x.energy) : Json(nullptr);
    e["paths"] = x.paths;
    sols.push_back(e);
  }
  Json paths = Json::array();
  for (std::size_t i = 0; i < s.paths.size(); ++i) {
    const auto& p = s.paths[i];
    Json e{{"index", i}, {"status", to_string(p.status)}, {"steps", p.steps}};
    e["residual"] = p.endpoint ? Json(p.residual) : Json(nullptr);
    if (!p.message.empty()) e["message"] = p.message;
    paths.push_back(e);
  }
  return Json{{"header", header}, {"solutions", sols}, {"paths", paths}};
}

std::vector<StoredSolution> solutions_from_json(const Json& j) {
  try {
    std::vector<StoredSolution> out;
    for (const auto& s : j.at("solutions")) {
      StoredSolution x;
      x.point = vector_from_json(s.at("point"));
      if (s.contains("energy") && !s.at("energy").is_null()) x.energy = complex_from_json(s.at("energy"));
      x.is_real = s.value("is_real", false);
      x.multiplicity = s.value("multiplicity", 1);
      out.push_back(std::move(x));
    }
    return out;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("solutions JSON: ") + e.what());
  }
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string path_trace_csv(const PathResult& p, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "lambda";
  for (const auto& n : names) os << ",re_" << n << ",im_" << n;
  os << '\n';
  for (const auto& tp : p.trace) {
    os << fmt(tp.s);
    for (long i = 0; i < tp.x.size(); ++i) os << ',' << fmt(tp.x[i].real()) << ',' << fmt(tp.x[i].imag());
    os << '\n';
  }
  return os.str();
}

Json match_report_to_json(const MatchReport& rep, const std::vector<cplx>& root_energies,
                          const std::vector<NormalizedState>& states, std::size_t n_eigenpairs) {
  Json matched = Json::array();
  for (const auto& m : rep.matched)
    matched.push_back(Json{{"root", m.root},
                           {"eig", states[m.eig].eig_index},
                           {"delta_e", m.delta_e},
                           {"root_energy", complex_to_json(root_energies[m.root])},
                           {"eig_energy", states[m.eig].energy}});
  Json un_roots = Json::array();
  for (auto r : rep.unmatched_roots)
    un_roots.push_back(Json{{"root", r}, {"energy", complex_to_json(root_energies[r])}});
  Json un_eigs = Json::array();
  for (auto e : rep.unmatched_eigs) un_eigs.push_back(Json{{"eig", states[e].eig_index}, {"energy", states[e].energy}});
  // Physical roots sorted by energy give the ranking (ground state first).
  return Json{{"tol_e", rep.tol_e},
              {"n_roots", root_energies.size()},
              {"n_eigenpairs", n_eigenpairs},
              {"n_normalizable", states.size()},
              {"all_matched", rep.unmatched_roots.empty() && rep.unmatched_eigs.empty()},
              {"matched", matched},
              {"unmatched_roots", un_roots},
              {"unmatched_eigs", un_eigs}};
}

std::string kp_trajectory_csv(const KPTrajectory& tr, const KPHomotopy& kp) {
  std::ostringstream os;
  os << "lambda";
  for (const auto& mu : kp.split().graph_full.indices()) {
    const std::string n = amplitude_name(mu);
    os << ",re_" << n << ",im_" << n;
  }
  os << ",residual_norm,re_E_low,im_E_low,re_E_full,im_E_full,drift\n";
  for (const auto& s : tr.samples) {
    const CVector t = kp.split().embed(s.t_low, s.t_high);
    os << fmt(s.lambda);
    for (long i = 0; i < t.size(); ++i) os << ',' << fmt(t[i].real()) << ',' << fmt(t[i].imag());
    os << ',' << fmt(s.residual_norm) << ',' << fmt(s.energy_low.real()) << ',' << fmt(s.energy_low.imag()) << ','
       << fmt(s.energy_full.real()) << ',' << fmt(s.energy_full.imag()) << ',' << fmt(s.drift) << '\n';
  }
  return os.str();
}

Json kp_bundle_to_json(const KPHomotopy& kp, const KPState& state0, const KPTrajectory& tr,
                       const std::optional<EnergyErrorBundle>& bundle) {
  Json j{{"model_label", kp.model().label},
         {"rho", kp.split().rho},
         {"n_low", kp.split().low.size()},
         {"n_high", kp.split().high.size()},
         {"state0", Json{{"t_low", vector_to_json(state0.t_low)},
                         {"t_high", vector_to_json(state0.t_high)},
                         {"energy_low", complex_to_json(kp.truncated().energy(state0.t_low))}}},
         {"endpoint_status", to_string(tr.endpoint_status)},
         {"n_samples", tr.samples.size()},
         {"final_lambda", tr.samples.empty() ? 0.0 : tr.samples.back().lambda}};
  if (!tr.message.empty()) j["message"] = tr.message;
  if (tr.endpoint) {
    const CVector t = kp.embed(*tr.endpoint);
    j["endpoint"] = Json{{"t", vector_to_json(t)},
                         {"energy", complex_to_json(kp.full().energy(t))},
                         {"residual", tr.final_residual},
                         {"sigma_min", *tr.sigma_min},
                         {"degenerate", tr.degenerate}};
  } else {
    j["endpoint"] = nullptr;
  }
  if (bundle) {
    Json b{{"delta_e", complex_to_json(bundle->delta_e)},
           {"t_perp_norm", bundle->t_perp_norm},
           {"overlap", complex_to_json(bundle->overlap)},
           {"orthogonal_warning", bundle->orthogonal_warning}};
    b["ratio"] = bundle->t_perp_norm > 0 ? Json(std::abs(bundle->delta_e) / bundle->t_perp_norm) : Json(nullptr);
    if (!bundle->warning.empty()) b["warning"] = bundle->warning;
    j["bundle"] = b;
  } else {
    j["bundle"] = nullptr;
  }
  return j;
}

// ---------------------------------------------------------------------------

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

ManifestFile describe_file(const std::filesystem::path& path) { return {path.string(), sha256_hex(read_file(path))}; }

Json make_manifest(const std::string& command_line, std::uint64_t seed, const std::vector<ManifestFile>& inputs,
                   const std::vector<ManifestFile>& outputs) {
  auto files = [](const std::vector<ManifestFile>& fs) {
    Json a = Json::array();
    for (const auto& f : fs) a.push_back(Json{{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  Json body{{"command", command_line},
            {"seed", seed},
            {"version", kVersion},
            {"inputs", files(inputs)},
            {"outputs", files(outputs)}};
  const std::string digest = sha256_hex(body.dump());

  std::time_t now = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) now = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");

  Json j = body;
  j["timestamp"] = ts.str();
  j["digest"] = digest;
  return j;
}

}  // namespace ccroots
