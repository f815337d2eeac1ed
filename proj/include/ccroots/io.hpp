#pragma once

/**
 * @file io.hpp
 * @brief JSON, CSV and manifest formats of the command-line workflows.
 *
 * Indices inside JSON files are 0-based. Complex numbers are written as
 * [re, im] pairs; point vectors as {"re": [...], "im": [...]}.
 */

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccroots/basins.hpp"
#include "ccroots/ccpoly.hpp"
#include "ccroots/kp.hpp"
#include "ccroots/oracle.hpp"
#include "ccroots/tracker.hpp"

namespace ccroots {

using Json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);
/// Writes bytes verbatim; throws Error on I/O failure.
void write_file(const std::filesystem::path& path, const std::string& bytes);
Json read_json(const std::filesystem::path& path);
/// Two-space indented JSON plus trailing newline.
std::string dump_json(const Json& j);

Json complex_to_json(cplx z);
cplx complex_from_json(const Json& j);
Json vector_to_json(const CVector& v);
CVector vector_from_json(const Json& j);

// Models ------------------------------------------------------------------

Json model_to_json(const ModelSpec& m);
ModelSpec model_from_json(const Json& j);

// Polynomial systems ------------------------------------------------------

Json polynomial_to_json(const Polynomial& p, const std::vector<std::string>& names);
Polynomial polynomial_from_json(const Json& j, const std::vector<std::string>& names);
/// `bounds` is embedded when given.
Json system_to_json(const PolynomialSystem& sys, const RootBounds* bounds = nullptr);
PolynomialSystem system_from_json(const Json& j);

// Solutions ----------------------------------------------------------------

Json solutions_to_json(const SolutionSet& s, const std::vector<std::string>& names);
/// Points and energies of a solutions file.
struct StoredSolution {
  CVector point;
  std::optional<cplx> energy;
  bool is_real = false;
  int multiplicity = 1;
};
std::vector<StoredSolution> solutions_from_json(const Json& j);

/// One CSV per path: lambda, re(x_i), im(x_i), ...
std::string path_trace_csv(const PathResult& p, const std::vector<std::string>& names);

// Oracle and KP ------------------------------------------------------------

Json match_report_to_json(const MatchReport& rep, const std::vector<cplx>& root_energies,
                          const std::vector<NormalizedState>& states, std::size_t n_eigenpairs);

std::string kp_trajectory_csv(const KPTrajectory& tr, const KPHomotopy& kp);
Json kp_bundle_to_json(const KPHomotopy& kp, const KPState& state0, const KPTrajectory& tr,
                       const std::optional<EnergyErrorBundle>& bundle);

// Manifests ----------------------------------------------------------------

std::string sha256_hex(const std::string& bytes);

struct ManifestFile {
  std::string path;
  std::string sha256;
};

/// Run manifest. The timestamp comes from SOURCE_DATE_EPOCH when set (so
/// repeated runs can be byte-identical) and is excluded from `digest`, the
/// SHA-256 of every other field.
Json make_manifest(const std::string& command_line, std::uint64_t seed, const std::vector<ManifestFile>& inputs,
                   const std::vector<ManifestFile>& outputs);

ManifestFile describe_file(const std::filesystem::path& path);

inline constexpr const char* kVersion = "ccroots 1.0.0";

}  // namespace ccroots
