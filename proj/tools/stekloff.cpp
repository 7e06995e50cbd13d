#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "stekloff/assembly.hpp"
#include "stekloff/eigensolver.hpp"
#include "stekloff/msh_io.hpp"
#include "stekloff/study.hpp"

namespace {

using namespace stekloff;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

// "--eps 2.5" or "--eps '{\"default\":1,\"regions\":{\"2\":4}}'"
MaterialField parse_eps(const std::string& text) {
  StudyConfig c = parse_study_config(
      fmt::format(R"({{"domain":{{"type":"cube","levels":[1]}},"orders":false,"eps":{}}})", text));
  return c.eps;
}

int cmd_study(const std::string& path) {
  const StudyConfig config = load_study_config(path);
  const StudyResult result = run_study(config);
  write_study_outputs(config, result);
  std::cout << format_table_text(config, result.table);
  for (const auto& lv : result.levels) {
    for (const auto& w : lv.warnings) std::cerr << "warning [" << lv.label << "]: " << w << "\n";
    for (const auto& [f, msg] : lv.errors) std::cerr << "error [" << lv.label << ", " << to_string(f) << "]: " << msg << "\n";
  }
  std::cerr << "outputs written to " << config.output_dir.string() << "\n";
  return result.any_success ? kExitOk : kExitSolver;
}

int cmd_solve(const std::string& mesh_path, double kappa, const std::string& eps_text, const std::string& form,
              int nev, double shift) {
  MaterialField eps;
  Formulation f{};
  try {
    eps = parse_eps(eps_text);
    f = formulation_from_string(form);
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  MshReadResult in = read_msh_file(mesh_path);
  for (const auto& w : in.warnings) std::cerr << "warning: " << w << "\n";
  try {
    const BlockSystem sys = assemble_system(in.mesh, Wavenumber(kappa), eps, f);
    EigenRequest req;
    req.nev = nev;
    req.shift = shift;
    req.which = Which::SmallestMagnitude;
    EigenResult r = shift_invert_solve(sys, req);
    sort_by_magnitude(r);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "index,real,imag,residual\n";
    for (std::size_t k = 0; k < r.pairs.size(); ++k)
      std::cout << fmt::format("{},{:.12g},{:.12g},{:.3e}\n", k + 1, r.pairs[k].lambda.real(),
                               r.pairs[k].lambda.imag(), r.pairs[k].residual);
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}

// CSV rows "N,real[,imag]"; lines starting with '#' and a non-numeric header are skipped.
int cmd_orders(const std::string& path, std::optional<double> exact) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "config error: cannot open " << path << "\n";
    return kExitConfig;
  }
  std::vector<double> n;
  std::vector<Complex> lam;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    try {
      const double nv = std::stod(a);
      lam.emplace_back(std::stod(b), c.empty() ? 0.0 : std::stod(c));
      n.push_back(nv);
    } catch (const std::exception&) {
      if (n.empty() && lineno == 1) continue;  // header
      std::cerr << "config error: " << path << ":" << lineno << ": expected N,real[,imag]\n";
      return kExitConfig;
    }
  }
  if (n.size() < (exact ? 2u : 3u)) {
    std::cerr << "config error: need at least " << (exact ? 2 : 3) << " levels\n";
    return kExitConfig;
  }
  const auto r = exact ? order_exact(lam, *exact, n) : order_relative(lam, n);
  std::cout << "N,lambda,order\n";
  for (std::size_t l = 0; l < n.size(); ++l)
    std::cout << fmt::format("{},{:.4f},{}\n", n[l], lam[l].real(), r[l] ? fmt::format("{:.2f}", *r[l]) : "");
  return kExitOk;
}

int cmd_mesh_info(const std::string& path) {
  MshReadResult in = read_msh_file(path);
  for (const auto& w : in.warnings) std::cerr << "warning: " << w << "\n";
  const MeshStats s = mesh_stats(in.mesh);
  const ValidationReport v = validate_mesh(in.mesh);
  std::cout << fmt::format("vertices          {}\nedges             {}\ntetrahedra        {}\n", s.n_vertices, s.n_edges,
                           s.n_tets);
  std::cout << fmt::format("boundary faces    {}\nboundary edges    {}\nboundary vertices {}\nh                 {:.6g}\n",
                           s.n_boundary_faces, s.n_boundary_edges, s.n_boundary_vertices, s.h);
  std::cout << "valid             " << (v.ok() ? "yes" : "no") << "\n";
  for (const auto& m : v.violations) std::cout << "  " << m << "\n";
  return v.ok() ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maxwell Stekloff eigenvalues on tetrahedral meshes"};
  app.require_subcommand(1);

  std::string config_path;
  auto* study = app.add_subcommand("study", "run a refinement study from a JSON config");
  study->add_option("--config", config_path, "study config")->required();

  std::string mesh_path, eps_text = "1", form = "sh";
  double kappa = 1.0, shift = -0.1;
  int nev = 8;
  auto* solve = app.add_subcommand("solve", "eigenvalues on a single MSH mesh");
  solve->add_option("--mesh", mesh_path, "MSH 2.2 ASCII mesh")->required();
  solve->add_option("--kappa", kappa, "wavenumber")->capture_default_str();
  solve->add_option("--eps", eps_text, "eps_r: a number or a JSON region spec")->capture_default_str();
  solve->add_option("--formulation", form, "sh or shplus")->capture_default_str();
  solve->add_option("--nev", nev, "number of eigenvalues")->capture_default_str();
  solve->add_option("--shift", shift, "spectral shift")->capture_default_str();

  std::string values_path;
  std::optional<double> exact;
  auto* orders = app.add_subcommand("orders", "convergence orders from a CSV of N,lambda");
  orders->add_option("--values", values_path, "CSV with N,real[,imag] rows")->required();
  orders->add_option("--exact", exact, "exact eigenvalue");

  std::string info_path;
  auto* info = app.add_subcommand("mesh-info", "mesh statistics and validation");
  info->add_option("msh", info_path, "MSH 2.2 ASCII mesh")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*study) return cmd_study(config_path);
    if (*solve) return cmd_solve(mesh_path, kappa, eps_text, form, nev, shift);
    if (*orders) return cmd_orders(values_path, exact);
    if (*info) return cmd_mesh_info(info_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}
