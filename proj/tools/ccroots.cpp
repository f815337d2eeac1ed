// ccroots: command-line front end.
//
// Exit codes: 0 success, 2 usage or parse error, 3 size cap exceeded,
// 4 numerical failure (no path converged), 1 other I/O errors.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ccroots/io.hpp"

namespace fs = std::filesystem;
using namespace ccroots;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) out.push_back(item);
  return out;
}

std::vector<double> parse_numbers(const std::string& s, std::size_t expected, const std::string& flag) {
  const auto parts = split_list(s);
  if (parts.size() != expected)
    throw InvalidArgument(flag + " expects " + std::to_string(expected) + " comma-separated values, got '" + s + "'");
  std::vector<double> v;
  for (const auto& p : parts) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(p, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != p.size()) throw InvalidArgument(flag + ": '" + p + "' is not a number");
    v.push_back(x);
  }
  return v;
}

int as_int(double v, const std::string& flag) {
  if (v != static_cast<int>(v)) throw InvalidArgument(flag + ": expected an integer, got " + std::to_string(v));
  return static_cast<int>(v);
}

struct Context {
  std::string command_line;
};

void emit(const Context& ctx, const fs::path& out, const std::string& bytes, std::uint64_t seed,
          const std::vector<fs::path>& inputs, const std::vector<fs::path>& extra_outputs = {}) {
  write_file(out, bytes);
  std::vector<ManifestFile> ins, outs{describe_file(out)};
  for (const auto& p : inputs) ins.push_back(describe_file(p));
  for (const auto& p : extra_outputs) outs.push_back(describe_file(p));
  write_file(fs::path(out.string() + ".manifest.json"), dump_json(make_manifest(ctx.command_line, seed, ins, outs)));
}

// --------------------------------------------------------------------------

struct ModelArgs {
  std::string hubbard, pairing, integrals, nelec, reference, basis = "site";
  std::string out;
};

int cmd_model(const Context& ctx, const ModelArgs& a) {
  const int given = !a.hubbard.empty() + !a.pairing.empty() + !a.integrals.empty();
  if (given != 1) throw InvalidArgument("exactly one of --hubbard, --pairing, --integrals is required");
  ModelSpec m;
  std::vector<fs::path> inputs;
  std::optional<std::pair<int, int>> nelec;
  if (!a.nelec.empty()) {
    const auto v = parse_numbers(a.nelec, 2, "--nelec");
    nelec = {as_int(v[0], "--nelec"), as_int(v[1], "--nelec")};
  }
  if (!a.hubbard.empty()) {
    if (!nelec) throw InvalidArgument("--hubbard requires --nelec up,dn");
    const auto v = parse_numbers(a.hubbard, 3, "--hubbard");
    OrbitalBasis basis;
    if (a.basis == "site") basis = OrbitalBasis::site;
    else if (a.basis == "hopping") basis = OrbitalBasis::hopping;
    else throw InvalidArgument("--basis must be 'site' or 'hopping'");
    m = build_hubbard(as_int(v[0], "--hubbard"), v[1], v[2], nelec->first, nelec->second, basis);
  } else if (!a.pairing.empty()) {
    const auto v = parse_numbers(a.pairing, 4, "--pairing");
    const int pairs = as_int(v[3], "--pairing");
    if (nelec && (nelec->first != pairs || nelec->second != pairs))
      throw InvalidArgument("--nelec conflicts with the pair count of --pairing");
    m = build_pairing(as_int(v[0], "--pairing"), v[1], v[2], pairs);
  } else {
    m = load_integrals(a.integrals);
    inputs.emplace_back(a.integrals);
    if (nelec) {
      m.n_up = nelec->first;
      m.n_dn = nelec->second;
      m.reference = aufbau_reference(m.n_spatial(), m.n_up, m.n_dn);
    }
  }
  if (!a.reference.empty()) {
    std::uint64_t bits = 0;
    for (double o : parse_numbers(a.reference, split_list(a.reference).size(), "--reference")) {
      const int so = as_int(o, "--reference");
      if (so < 0 || so >= m.n_spin_orbitals()) throw InvalidArgument("--reference orbital out of range");
      bits |= std::uint64_t{1} << so;
    }
    set_reference(m, Determinant(bits));
  }
  m.validate();
  emit(ctx, a.out, dump_json(model_to_json(m)), 0, inputs);
  std::cout << m.label << ": " << m.n_spin_orbitals() << " spin orbitals, "
            << DeterminantBasis::sector(m).size() << " determinants\n";
  return 0;
}

// --------------------------------------------------------------------------

struct SystemArgs {
  std::string model, rank = "full", ranks, out;
  bool quadratize = false;
};

int cmd_system(const Context& ctx, const SystemArgs& a) {
  const ModelSpec m = model_from_json(read_json(a.model));
  ExcitationGraph g;
  if (!a.ranks.empty()) {
    std::vector<int> ranks;
    for (double r : parse_numbers(a.ranks, split_list(a.ranks).size(), "--ranks")) ranks.push_back(as_int(r, "--ranks"));
    g = build_graph(m, ranks);
  } else if (a.rank == "full") {
    g = full_graph(m);
  } else {
    g = build_graph(m, as_int(parse_numbers(a.rank, 1, "--rank")[0], "--rank"));
  }
  if (a.quadratize && (g.rank_max() != 2 || !g.is_ccsd_type()))
    throw InvalidArgument("--quadratize requires a graph of excitation rank 2");
  const CCSystem cc = generate_system(m, g);
  const RootBounds b = root_bounds(g);
  const PolynomialSystem sys = a.quadratize ? quadratize(cc) : cc.residual_polys;
  emit(ctx, a.out, dump_json(system_to_json(sys, &b)), 0, {a.model});
  std::cout << sys.n_vars() << " variables, degrees";
  for (int d : sys.degrees()) std::cout << ' ' << d;
  std::cout << "; bounds bezout_total=" << b.bezout_total;
  if (b.bezout_sd) std::cout << " bezout_sd=" << *b.bezout_sd << " quadratic=" << *b.quadratic;
  std::cout << '\n';
  return 0;
}

// --------------------------------------------------------------------------

struct SolveArgs {
  std::string system, trace_dir, out;
  std::uint64_t seed = 0;
  int threads = 0;
  double dedupe = 1e-6;
};

int cmd_solve(const Context& ctx, const SolveArgs& a) {
  const PolynomialSystem sys = system_from_json(read_json(a.system));
  TrackOptions o;
  o.rng_seed = a.seed;
  o.threads = a.threads;
  o.dedupe_radius = a.dedupe;
  o.record_trace = !a.trace_dir.empty();
  const SolutionSet s = solve_all(sys, o);
  std::vector<fs::path> extra;
  if (!a.trace_dir.empty()) {
    fs::create_directories(a.trace_dir);
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
      const fs::path p = fs::path(a.trace_dir) / ("path_" + std::to_string(i) + ".csv");
      write_file(p, path_trace_csv(s.paths[i], sys.variable_names()));
      extra.push_back(p);
    }
  }
  emit(ctx, a.out, dump_json(solutions_to_json(s, sys.variable_names())), a.seed, {a.system}, extra);
  std::cout << s.n_paths_tracked << " paths: " << s.n_converged << " converged, " << s.n_diverged << " diverged, "
            << s.n_failed << " failed; " << s.solutions.size() << " distinct solutions\n";
  if (s.n_converged == 0) {
    std::cerr << "error: no path converged\n";
    return 4;
  }
  return 0;
}

// --------------------------------------------------------------------------

struct KPArgs {
  std::string model, state = "0", out, bundle;
  int rho = 2;
  bool homotopy_starts = false;
};

int cmd_kp(const Context& ctx, const KPArgs& a) {
  const ModelSpec m = model_from_json(read_json(a.model));
  const KPHomotopy kp(m, a.rho);
  Lambda0Options lo;
  lo.homotopy_starts = a.homotopy_starts;
  std::vector<fs::path> inputs{a.model};
  std::size_t index = 0;
  const bool numeric = !a.state.empty() && a.state.find_first_not_of("0123456789") == std::string::npos;
  if (numeric) {
    index = std::stoul(a.state);
  } else {
    const Json j = read_json(a.state);
    inputs.emplace_back(a.state);
    lo.zero_start = false;
    if (j.contains("t_low")) {
      lo.extra_low_starts.push_back(vector_from_json(j.at("t_low")));
      if (j.contains("t_high")) lo.extra_high_starts.push_back(vector_from_json(j.at("t_high")));
    } else {
      for (const auto& s : solutions_from_json(j)) lo.extra_low_starts.push_back(s.point);
    }
  }
  const Lambda0Result l0 = solve_lambda0(kp, lo);
  for (const auto& f : l0.failures) std::cerr << "note: " << f << '\n';
  if (l0.states.empty()) {
    std::cerr << "error: no lambda = 0 state found\n";
    return 4;
  }
  if (index >= l0.states.size())
    throw InvalidArgument("--state " + std::to_string(index) + " out of range (" + std::to_string(l0.states.size()) +
                          " lambda = 0 states)");
  const KPState& s0 = l0.states[index];
  const KPTrajectory tr = kp_track(kp, s0);
  std::optional<EnergyErrorBundle> bundle;
  if (tr.endpoint) bundle = energy_error_bundle(kp, s0, kp.embed(*tr.endpoint));

  const fs::path bundle_path = a.bundle.empty() ? fs::path(a.out + ".bundle.json") : fs::path(a.bundle);
  write_file(bundle_path, dump_json(kp_bundle_to_json(kp, s0, tr, bundle)));
  emit(ctx, a.out, kp_trajectory_csv(tr, kp), 0, inputs, {bundle_path});
  std::cout << "lambda = 0 states: " << l0.states.size() << "; trajectory " << to_string(tr.endpoint_status);
  if (tr.endpoint) {
    std::cout << ", E = " << kp.full().energy(kp.embed(*tr.endpoint)).real();
    if (bundle)
      std::cout << ", delta_E = " << bundle->delta_e.real() << ", |t_perp| = " << bundle->t_perp_norm;
  } else {
    std::cout << " (" << tr.message << ")";
  }
  std::cout << '\n';
  if (bundle && bundle->orthogonal_warning) std::cerr << "warning: " << bundle->warning << '\n';
  return 0;
}

// --------------------------------------------------------------------------

struct FractalArgs {
  std::string poly, system, solutions, slice, window = "-2,2,-2,2", res = "300", out, csv;
  int max_iters = 50;
  int threads = 0;
};

int cmd_fractal(const Context& ctx, const FractalArgs& a) {
  const auto w = parse_numbers(a.window, 4, "--window");
  const Window win{w[0], w[1], w[2], w[3]};
  const auto rparts = split_list(a.res);
  const auto r = parse_numbers(a.res, rparts.size() == 2 ? 2 : 1, "--res");
  const int width = as_int(r[0], "--res");
  const int height = r.size() == 2 ? as_int(r[1], "--res") : width;
  if (width < 1 || height < 1) throw InvalidArgument("--res must be positive");
  BasinOptions bo;
  bo.max_iters = a.max_iters;
  bo.threads = a.threads;
  std::vector<fs::path> inputs;
  BasinGrid g;
  if (!a.poly.empty() == !a.system.empty()) throw InvalidArgument("exactly one of --poly and --system is required");
  if (!a.poly.empty()) {
    g = basin_scan(parse_univariate(a.poly), win, width, height, bo);
  } else {
    if (a.solutions.empty() || a.slice.empty()) throw InvalidArgument("--system requires --solutions and --slice i,j");
    const PolynomialSystem sys = system_from_json(read_json(a.system));
    const auto sols = solutions_from_json(read_json(a.solutions));
    const auto ij = parse_numbers(a.slice, 2, "--slice");
    const int i = as_int(ij[0], "--slice"), j = as_int(ij[1], "--slice");
    if (i < 0 || j < 0 || i >= static_cast<int>(sols.size()) || j >= static_cast<int>(sols.size()) || i == j)
      throw InvalidArgument("--slice needs two distinct solution indices below " + std::to_string(sols.size()));
    const CVector base = sols[static_cast<std::size_t>(i)].point;
    g = basin_scan(SliceSpec{sys, base, sols[static_cast<std::size_t>(j)].point - base}, win, width, height, bo);
    inputs = {a.system, a.solutions};
  }
  std::vector<fs::path> extra;
  if (!a.csv.empty()) {
    write_file(a.csv, assignment_csv(g));
    extra.emplace_back(a.csv);
  }
  emit(ctx, a.out, render_ppm(g, default_palette(g.roots.size())), 0, inputs, extra);
  std::cout << g.roots.size() << " roots registered:";
  for (const auto& z : g.roots) std::cout << ' ' << z;
  std::cout << '\n';
  return 0;
}

// --------------------------------------------------------------------------

struct VerifyArgs {
  std::string model, solutions, out;
  double tol = 1e-8;
};

int cmd_verify(const Context& ctx, const VerifyArgs& a) {
  const ModelSpec m = model_from_json(read_json(a.model));
  const auto sols = solutions_from_json(read_json(a.solutions));
  const FciResult fci = fci_solve(m);
  const auto states = intermediately_normalized(fci);
  std::vector<cplx> energies;
  for (const auto& s : sols) {
    if (!s.energy) throw InvalidArgument("solutions carry no CC energies (not a CC system?)");
    energies.push_back(*s.energy);
  }
  std::vector<double> eigs;
  for (const auto& s : states) eigs.push_back(s.energy);
  const MatchReport rep = match_energies(energies, eigs, a.tol);
  emit(ctx, a.out, dump_json(match_report_to_json(rep, energies, states, fci.states.size())), 0,
       {a.model, a.solutions});
  std::cout << rep.matched.size() << " matched, " << rep.unmatched_roots.size() << " unmatched roots, "
            << rep.unmatched_eigs.size() << " unmatched eigenstates (of " << states.size()
            << " with reference overlap)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  for (int i = 0; i < argc; ++i) ctx.command_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Coupled-cluster polynomial systems: generation, homotopy root finding and FCI verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  ModelArgs ma;
  auto* model = app.add_subcommand("model", "Build a model Hamiltonian and write it as JSON");
  model->add_option("--hubbard", ma.hubbard, "Open Hubbard chain L,t,U");
  model->add_option("--pairing", ma.pairing, "Pairing model levels,spacing,g,pairs");
  model->add_option("--integrals", ma.integrals, "Plain-text integral file");
  model->add_option("--nelec", ma.nelec, "Electron counts up,dn");
  model->add_option("--basis", ma.basis, "Hubbard orbital basis: site (default) or hopping");
  model->add_option("--reference", ma.reference, "Reference determinant as occupied spin orbitals i,j,...");
  model->add_option("-o,--output", ma.out, "Output model JSON")->required();

  SystemArgs sa;
  auto* system = app.add_subcommand("system", "Generate the projected CC equations as a polynomial system");
  system->add_option("--model", sa.model, "Model JSON")->required();
  system->add_option("--rank", sa.rank, "Maximum excitation rank (integer or 'full')");
  system->add_option("--ranks", sa.ranks, "Explicit rank list, e.g. 2 for doubles only");
  system->add_flag("--quadratize", sa.quadratize, "Rewrite a rank-2 system with auxiliaries to degree <= 2");
  system->add_option("-o,--output", sa.out, "Output system JSON")->required();

  SolveArgs so;
  auto* solve = app.add_subcommand("solve", "Find all isolated roots by total-degree homotopy continuation");
  solve->add_option("--system", so.system, "System JSON")->required();
  solve->add_option("--seed", so.seed, "Seed of the random gamma");
  solve->add_option("--trace-dir", so.trace_dir, "Directory for per-path CSV traces");
  solve->add_option("--threads", so.threads, "Worker threads (default: CCROOTS_THREADS or all cores)");
  solve->add_option("--dedupe-radius", so.dedupe, "Endpoint clustering radius (max norm)");
  solve->add_option("-o,--output", so.out, "Output solutions JSON")->required();

  KPArgs ka;
  auto* kpc = app.add_subcommand("kp", "Track a Kowalski-Piecuch homotopy from truncated to untruncated CC");
  kpc->add_option("--model", ka.model, "Model JSON")->required();
  kpc->add_option("--rho", ka.rho, "Truncation rank (2 <= rho <= number of electrons)");
  kpc->add_option("--state", ka.state,
                  "lambda = 0 state: index into the states found from zero starts (sorted by energy), or a JSON file "
                  "with t_low [, t_high] vectors or a solutions file of the truncated system");
  kpc->add_flag("--homotopy-starts", ka.homotopy_starts, "Also start from all roots of the truncated system");
  kpc->add_option("--bundle", ka.bundle, "Energy-error bundle JSON (default: <output>.bundle.json)");
  kpc->add_option("-o,--output", ka.out, "Output trajectory CSV")->required();

  FractalArgs fa;
  auto* fractal = app.add_subcommand(
      "fractal",
      "Render Newton basins of attraction as a PPM image.\n"
      "Polynomial grammar (whitespace ignored, adjacent factors multiply):\n"
      "  expr   := ['+'|'-'] term (('+'|'-') term)*\n"
      "  term   := factor (['*'] factor)*\n"
      "  factor := number | 'i' | 'z' ['^' integer]\n"
      "Slice mode (--system) is a heuristic: Gauss-Newton on ||F(x_i + z (x_j - x_i))||^2 along the line\n"
      "through solutions i and j; it is not a true multivariate basin picture.");
  fractal->add_option("--poly", fa.poly, "Univariate polynomial in z, e.g. \"z^3-1\"");
  fractal->add_option("--system", fa.system, "System JSON for slice mode");
  fractal->add_option("--solutions", fa.solutions, "Solutions JSON for slice mode");
  fractal->add_option("--slice", fa.slice, "Solution indices i,j spanning the slice line");
  fractal->add_option("--window", fa.window, "re_min,re_max,im_min,im_max");
  fractal->add_option("--res", fa.res, "Resolution N or W,H");
  fractal->add_option("--max-iters", fa.max_iters, "Newton iterations per pixel");
  fractal->add_option("--threads", fa.threads, "Worker threads");
  fractal->add_option("--csv", fa.csv, "Also write the assignment matrix as CSV");
  fractal->add_option("-o,--output", fa.out, "Output PPM")->required();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Match root energies against exact diagonalization");
  verify->add_option("--model", va.model, "Model JSON")->required();
  verify->add_option("--solutions", va.solutions, "Solutions JSON")->required();
  verify->add_option("--tol", va.tol, "Energy matching tolerance");
  verify->add_option("-o,--output", va.out, "Output match report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*model) return cmd_model(ctx, ma);
    if (*system) return cmd_system(ctx, sa);
    if (*solve) return cmd_solve(ctx, so);
    if (*kpc) return cmd_kp(ctx, ka);
    if (*fractal) return cmd_fractal(ctx, fa);
    if (*verify) return cmd_verify(ctx, va);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CapabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
