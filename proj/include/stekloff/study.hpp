#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stekloff/eigensolver.hpp"
#include "stekloff/mesh.hpp"

namespace stekloff {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic mean of a cluster; throws std::invalid_argument when empty.
Complex cluster_average(const std::vector<Complex>& cluster);

/// r_ℓ = −log(|λ_ℓ − λ_{ℓ−1}| / |λ_{ℓ−1} − λ_{ℓ−2}|) / log(√N_ℓ / √N_{ℓ−1}).
/// Entry ℓ is present only for ℓ ≥ 2 when all three values exist and both
/// differences are nonzero.
std::vector<std::optional<double>> order_relative(const std::vector<std::optional<Complex>>& lambda,
                                                  const std::vector<double>& n);
std::vector<std::optional<double>> order_relative(const std::vector<Complex>& lambda, const std::vector<double>& n);

/// r_ℓ = −log(|λ_ℓ − λ*| / |λ_{ℓ−1} − λ*|) / log(√N_ℓ / √N_{ℓ−1}), for ℓ ≥ 1.
std::vector<std::optional<double>> order_exact(const std::vector<std::optional<Complex>>& lambda, double exact,
                                               const std::vector<double>& n);
std::vector<std::optional<double>> order_exact(const std::vector<Complex>& lambda, double exact,
                                               const std::vector<double>& n);

/// The λ* for which order_exact over two levels returns `order`; of the two
/// candidates, the one on the far side of λ₂ from λ₁ (monotone convergence).
double back_solve_exact(Complex lambda1, Complex lambda2, double n1, double n2, double order);

struct DomainSpec {
  enum class Kind { Cube, LShape, Msh };
  Kind kind = Kind::Cube;
  std::vector<int> levels;                   // cube / lshape subdivisions
  std::vector<std::filesystem::path> files;  // msh levels, coarse to fine

  std::size_t n_levels() const { return kind == Kind::Msh ? files.size() : levels.size(); }
  std::string level_label(std::size_t l) const;
};

struct StudyConfig {
  std::string label = "study";
  DomainSpec domain;
  double kappa = 1.0;
  MaterialField eps = MaterialField::constant(1.0);
  std::string eps_description = "1";
  std::vector<Formulation> formulations{Formulation::Sh, Formulation::ShPlus};
  int nev = 8;
  double shift = -2.0;
  int max_iterations = 3000;
  double tolerance = 1e-8;
  ClusterPolicy clusters;
  std::vector<double> exact;  // λ* per cluster; non-empty selects order_exact
  bool orders = true;
  std::filesystem::path output_dir = "study_out";
  std::string source_json;  // normalized echo of the parsed config

  /// Throws ConfigError.
  void validate() const;
};

/// Parses a JSON study config. Relative paths resolve against `base_dir`.
/// Unknown keys are rejected. Throws ConfigError.
StudyConfig parse_study_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
StudyConfig load_study_config(const std::filesystem::path& file);

struct LevelOutcome {
  std::string label;
  MeshStats stats;
  std::map<Formulation, std::vector<Complex>> eigenvalues;  // ascending |Re λ|
  std::map<Formulation, std::vector<EigenPair>> pairs;
  std::map<Formulation, std::string> errors;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

struct ClusterRow {
  Formulation formulation = Formulation::Sh;
  std::size_t cluster = 0;
  std::vector<int> members;                       // 1-based eigenvalue indices
  std::vector<std::optional<Complex>> averages;   // per level
  std::vector<std::optional<double>> orders;      // per level
  std::optional<double> exact;
};

struct ConvergenceTable {
  std::vector<std::string> level_labels;
  std::vector<long> n_boundary_edges;
  std::vector<ClusterRow> rows;  // cluster-major, formulation-minor
  bool exact_orders = false;

  const ClusterRow* row(Formulation f, std::size_t cluster) const;
  std::size_t n_clusters() const;
};

struct StudyResult {
  ConvergenceTable table;
  std::vector<LevelOutcome> levels;
  bool any_success = false;
};

/// Mesh → assemble → solve → cluster → average → orders for every level and
/// formulation. Per-level failures are recorded and the study continues.
StudyResult run_study(const StudyConfig& config);

/// Clusters, averages and orders from per-level spectra; levels missing a
/// spectrum yield absent entries.
ConvergenceTable build_table(const StudyConfig& config, const std::vector<LevelOutcome>& levels);

std::string format_table_text(const StudyConfig& config, const ConvergenceTable& table);
std::string format_table_csv(const StudyConfig& config, const ConvergenceTable& table);
std::string format_table_markdown(const StudyConfig& config, const ConvergenceTable& table);
std::string format_spectrum_csv(const std::vector<EigenPair>& pairs);

/// Writes table.{txt,csv,md}, spectrum_L<ℓ>_<formulation>.csv and
/// run_metadata.json into config.output_dir. Everything except the timings in
/// run_metadata.json is deterministic for a given config.
void write_study_outputs(const StudyConfig& config, const StudyResult& result);

/// Builds the mesh for level l of a domain.
Mesh build_level_mesh(const DomainSpec& domain, std::size_t l, std::vector<std::string>* warnings = nullptr);

}  // namespace stekloff
