// Acceptance suite: one PASS/FAIL line per criterion, detail lines indented.
// Informational lines never affect the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ball_mesh.hpp"
#include "invariants.hpp"
#include "stekloff/eigensolver.hpp"
#include "stekloff/msh_io.hpp"
#include "stekloff/study.hpp"

using namespace stekloff;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& what) {
  if (!ok) ++failures;
  std::cout << fmt::format("[{}] criterion {}: {}\n", ok ? "PASS" : "FAIL", id, what) << std::flush;
}

void detail(const std::string& s) { std::cout << "       " << s << "\n" << std::flush; }

double round2(double x) { return std::round(x * 100.0) / 100.0; }

// ---------------------------------------------------------------- 1

struct PrintedRow {
  const char* name;
  std::vector<double> lambda;
  std::vector<double> n;
  std::vector<double> printed;  // orders at levels 3 and 4
};

void criterion_formula_regression() {
  const std::vector<double> n1{360, 1656, 6174, 23868}, n2{405, 1584, 6183, 24168};
  const std::vector<PrintedRow> rows{
      {"cube lambda j=1-3", {-2.3373, -2.2184, -2.1840, -2.1747}, n1, {1.89, 1.92}},
      {"cube lambda+ j=1-3", {-2.2288, -2.1862, -2.1747, -2.1722}, n1, {1.98, 2.32}},
      {"cube lambda j=4,5", {-3.0413, -2.6891, -2.6082, -2.5875}, n1, {2.24, 2.01}},
      {"cube lambda+ j=4,5", {-2.7418, -2.6199, -2.5893, -2.5826}, n1, {2.10, 2.25}},
      {"cube lambda j=6-8", {-6.5322, -5.5094, -5.1086, -4.9932}, n1, {1.42, 1.84}},
      {"cube lambda+ j=6-8", {-5.6449, -5.1702, -5.0162, -4.9693}, n1, {1.71, 1.76}},
      {"L lambda j=1", {-1.3769, -1.2488, -1.1799, -1.1537}, n2, {0.91, 1.41}},
      {"L lambda+ j=1", {-1.2714, -1.2117, -1.1696, -1.1505}, n2, {0.52, 1.15}},
      {"L lambda j=2,3", {-2.5634, -2.3926, -2.3381, -2.3217}, n2, {1.68, 1.76}},
      {"L lambda+ j=2,3", {-2.3906, -2.3420, -2.3237, -2.3178}, n2, {1.43, 1.67}},
      {"L lambda j=4", {-3.9772, -3.3877, -3.2077, -3.1562}, n2, {1.74, 1.83}},
      {"L lambda+ j=4", {-3.2803, -3.2001, -3.1584, -3.1420}, n2, {0.96, 1.36}},
  };
  int total = 0, ok = 0;
  for (const auto& row : rows) {
    std::vector<Complex> lam(row.lambda.begin(), row.lambda.end());
    const auto r = order_relative(lam, row.n);
    for (int k = 0; k < 2; ++k) {
      const double got = round2(*r[static_cast<std::size_t>(k + 2)]);
      const bool hit = std::abs(got - row.printed[static_cast<std::size_t>(k)]) <= 0.01 + 1e-12;
      ++total;
      ok += hit;
      if (!hit) {
        // widest order reachable from inputs rounded to 4 decimals
        double lo = 1e9, hi = -1e9;
        for (int mask = 0; mask < 27; ++mask) {
          std::vector<Complex> p = lam;
          int m = mask;
          for (int j = 0; j < 3; ++j, m /= 3) p[static_cast<std::size_t>(k + j)] += (m % 3 - 1) * 0.00005;
          const double x = *order_relative(p, row.n)[static_cast<std::size_t>(k + 2)];
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        detail(fmt::format("{} level {}: recomputed {:.2f}, printed {:.2f} (inputs rounded to 4 decimals allow "
                           "[{:.2f}, {:.2f}]; informational)",
                           row.name, k + 3, got, row.printed[static_cast<std::size_t>(k)], lo, hi));
      }
    }
  }
  verdict(1, ok == total, fmt::format("{}/{} printed orders reproduced to +-0.01 from printed values", ok, total));
}

// ---------------------------------------------------------------- 2

void criterion_oracle() {
  double worst = 0.0;
  std::size_t compared = 0;
  bool counts_ok = true;
  for (int n : {1, 2})
    for (Formulation f : {Formulation::Sh, Formulation::ShPlus}) {
      const BlockSystem s = assemble_system(generate_cube_mesh(n), Wavenumber(1.0), MaterialField::constant(1.0), f);
      const EigenResult dense = dense_solve(s);
      EigenRequest req;
      req.nev = static_cast<int>(dense.pairs.size());
      req.shift = -0.1;
      req.which = Which::SmallestMagnitude;
      const EigenResult it = shift_invert_solve(s, req);
      const auto a = it.values(), b = dense.values();
      counts_ok = counts_ok && a.size() == b.size();
      for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k)
        worst = std::max(worst, std::abs(a[k] - b[k]) / std::abs(b[k]));
      compared += b.size();
      detail(fmt::format("cube n={} {}: dimension {}, {} finite eigenvalues (dense), {} from Arnoldi", n, to_string(f),
                         s.A.rows(), b.size(), a.size()));
    }
  verdict(2, counts_ok && worst <= 1e-8,
          fmt::format("Arnoldi vs dense QZ on cube n=1,2: {} eigenvalues, max relative difference {:.2e}", compared, worst));
}

// ---------------------------------------------------------------- 3

void criterion_invariants() {
  testing::InvariantDefects w;
  int samples = 0, pairs = 0;
  for (const auto& [name, mesh] : {std::pair{"cube n=2", generate_cube_mesh(2)}, std::pair{"lshape n=2", generate_lshape_mesh(2)}}) {
    const auto d = testing::measure_invariants(mesh, 20, 11);
    samples += d.samples;
    pairs += d.eigenpairs;
    w.sh_idempotence = std::max(w.sh_idempotence, d.sh_idempotence);
    w.splus_idempotence = std::max(w.splus_idempotence, d.splus_idempotence);
    w.gradient_orthogonality = std::max(w.gradient_orthogonality, d.gradient_orthogonality);
    w.de_rham = std::max(w.de_rham, d.de_rham);
    w.symmetry = std::max(w.symmetry, d.symmetry);
    w.z_membership = std::max(w.z_membership, d.z_membership);
    w.th_adjoint = std::max(w.th_adjoint, d.th_adjoint);
    w.loop_closure = std::max(w.loop_closure, d.loop_closure);
  }
  struct Item {
    const char* name;
    double value, bound;
  };
  const std::vector<Item> items{{"S_h idempotence", w.sh_idempotence, 1e-10},
                                {"S_h+ idempotence", w.splus_idempotence, 1e-10},
                                {"S_h range orthogonal to gradients", w.gradient_orthogonality, 1e-10},
                                {"de Rham |K G|", w.de_rham, 1e-12},
                                {"matrix symmetry", w.symmetry, 1e-14},
                                {"eigenvector Z_h membership", w.z_membership, 1e-9},
                                {"T_h adjoint identity", w.th_adjoint, 1e-10},
                                {"eigenpair/source loop closure", w.loop_closure, 1e-8}};
  bool ok = true;
  for (const auto& it : items) {
    ok = ok && it.value <= it.bound;
    detail(fmt::format("{:<36} {:.2e} (bound {:.0e})", it.name, it.value, it.bound));
  }
  verdict(3, ok, fmt::format("operator invariants over {} random inputs and {} eigenpairs on cube/lshape n=2", samples, pairs));
}

// ---------------------------------------------------------------- studies

StudyResult run_and_report(const std::string& json, const fs::path& workdir, StudyConfig* out_config) {
  StudyConfig c = parse_study_config(json, workdir);
  const auto t0 = std::chrono::steady_clock::now();
  StudyResult r = run_study(c);
  write_study_outputs(c, r);
  std::istringstream table(format_table_text(c, r.table));
  for (std::string line; std::getline(table, line);) detail(line);
  for (const auto& lv : r.levels)
    for (const auto& [f, e] : lv.errors) detail(fmt::format("level {} {} failed: {}", lv.label, to_string(f), e));
  detail(fmt::format("({:.0f} s, outputs in {})",
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), c.output_dir.string()));
  if (out_config) *out_config = c;
  return r;
}

std::optional<double> finest_value(const ConvergenceTable& t, Formulation f, std::size_t cluster) {
  const ClusterRow* row = t.row(f, cluster);
  if (!row || !row->averages.back()) return std::nullopt;
  return row->averages.back()->real();
}

std::optional<double> finest_order(const ConvergenceTable& t, Formulation f, std::size_t cluster) {
  const ClusterRow* row = t.row(f, cluster);
  if (!row) return std::nullopt;
  return row->orders.back();
}

void criterion_cube(const fs::path& workdir) {
  detail("cube study, kappa = 1, eps_r = 1 (default assumption)");
  const StudyResult r = run_and_report(
      R"({"label":"cube","domain":{"type":"cube","levels":[3,6,12,24]},"kappa":1,"nev":8,"shift":-0.1,
          "clusters":{"sizes":[3,2,3]},"output":"cube_kappa1"})",
      workdir, nullptr);
  const auto& t = r.table;
  const auto order = finest_order(t, Formulation::Sh, 0);
  const auto sh = finest_value(t, Formulation::Sh, 0), sp = finest_value(t, Formulation::ShPlus, 0);
  const double gap = sh && sp ? std::abs(*sh - *sp) / std::abs(*sh) : INFINITY;
  const bool order_ok = order && *order >= 1.7 && *order <= 2.3;
  const long n_min = t.n_boundary_edges.front(), n_max = t.n_boundary_edges.back();
  detail(fmt::format("boundary edges {}..{}", n_min, n_max));
  if (sh) detail(fmt::format("vs reference finest -2.1747: {:.1f}% (informational, 2% target)", 100.0 * std::abs(*sh + 2.1747) / 2.1747));
  verdict(4, order_ok && gap <= 0.005,
          fmt::format("cube first-cluster order {} in [1.7, 2.3]; S_h vs S_h+ finest gap {:.2f}% <= 0.5%",
                      order ? fmt::format("{:.2f}", *order) : "absent", 100.0 * gap));

  // invariant of the study harness: the two discretizations approach each other
  bool monotone = true;
  std::string gaps;
  const ClusterRow* a = t.row(Formulation::Sh, 0);
  const ClusterRow* b = t.row(Formulation::ShPlus, 0);
  double prev = INFINITY;
  for (std::size_t k = 0; a && b && k < t.n_clusters(); ++k) {
    a = t.row(Formulation::Sh, k);
    b = t.row(Formulation::ShPlus, k);
    prev = INFINITY;
    for (std::size_t l = 0; l < a->averages.size(); ++l) {
      if (!a->averages[l] || !b->averages[l]) {
        monotone = false;
        continue;
      }
      const double g = std::abs(*a->averages[l] - *b->averages[l]);
      monotone = monotone && g < prev;
      prev = g;
      gaps += fmt::format(" {:.4f}", g);
    }
    gaps += " |";
  }
  detail("|lambda - lambda+| per cluster and level:" + gaps);
  std::cout << fmt::format("[{}] invariant: S_h/S_h+ cluster gap decreases monotonically on the cube study\n",
                           monotone ? "PASS" : "FAIL");
  if (!monotone) ++failures;

  detail("informational: cube study at kappa = 2");
  const StudyResult r2 = run_and_report(
      R"({"label":"cube kappa 2","domain":{"type":"cube","levels":[6,12,24]},"kappa":2,"nev":8,"shift":-0.1,
          "clusters":{"sizes":[3,2,3]},"output":"cube_kappa2"})",
      workdir, nullptr);
  const double reference[3][2] = {{-2.1747, -2.1722}, {-2.5875, -2.5826}, {-4.9932, -4.9693}};
  for (std::size_t k = 0; k < 3; ++k)
    for (Formulation f : {Formulation::Sh, Formulation::ShPlus}) {
      const auto v = finest_value(r2.table, f, k);
      const double ref = reference[k][f == Formulation::Sh ? 0 : 1];
      if (v)
        detail(fmt::format("cluster {} {}: {:.4f} (N={}) vs reference {:.4f} (N=23868): {:.2f}%", k + 1, to_string(f), *v,
                           r2.table.n_boundary_edges.back(), ref, 100.0 * std::abs(*v - ref) / std::abs(ref)));
    }
}

void criterion_lshape(const fs::path& workdir) {
  detail("L-shape study, kappa = 1, eps_r = 1");
  const StudyResult r = run_and_report(
      R"({"label":"lshape","domain":{"type":"lshape","levels":[2,4,8,16]},"kappa":1,"nev":4,"shift":-0.1,
          "clusters":{"sizes":[1,2,1]},"output":"lshape_kappa1"})",
      workdir, nullptr);
  const auto r1 = finest_order(r.table, Formulation::Sh, 0), r2 = finest_order(r.table, Formulation::Sh, 1);
  const auto p1 = finest_order(r.table, Formulation::ShPlus, 0), p2 = finest_order(r.table, Formulation::ShPlus, 1);
  if (p1 && p2) detail(fmt::format("S_h+: r(1) = {:.2f}, r(2,3) = {:.2f} (informational)", *p1, *p2));
  verdict(5, r1 && r2 && *r1 < *r2 - 0.1,
          fmt::format("L-shape finest orders r(1) = {} < r(2,3) - 0.1 = {}", r1 ? fmt::format("{:.2f}", *r1) : "absent",
                      r2 ? fmt::format("{:.2f}", *r2 - 0.1) : "absent"));

  detail("informational: L-shape study at kappa = 2");
  run_and_report(
      R"({"label":"lshape kappa 2","domain":{"type":"lshape","levels":[2,4,8,16]},"kappa":2,"nev":4,"shift":-0.1,
          "clusters":{"sizes":[1,2,1]},"output":"lshape_kappa2"})",
      workdir, nullptr);
}

void criterion_ball(const fs::path& workdir) {
  const fs::path meshes = workdir / "ball_meshes";
  fs::create_directories(meshes);
  std::string files;
  for (int n : {2, 4, 8}) {
    const fs::path p = meshes / fmt::format("ball_n{}.msh", n);
    testing::write_ball_msh(p, n);
    files += (files.empty() ? "\"" : ",\"") + p.string() + "\"";
  }
  const double l1 = testing::ball_eigenvalue(1, 2.0), l2 = testing::ball_eigenvalue(2, 2.0);
  detail(fmt::format("analytic unit-ball TE values at kappa = 2: l=1 {:.6f} (x3), l=2 {:.6f} (x5)", l1, l2));
  const StudyResult r = run_and_report(
      fmt::format(R"({{"label":"ball","domain":{{"type":"msh","files":[{}]}},"kappa":2,"nev":8,"shift":-0.1,
          "clusters":{{"sizes":[3,5]}},"exact":[{:.12f},{:.12f}],"output":"ball"}})",
                  files, l1, l2),
      workdir, nullptr);
  bool all_levels = true;
  for (const auto& lv : r.levels) all_levels = all_levels && lv.errors.empty();
  const bool shaped = r.table.exact_orders && r.table.n_clusters() == 2 && r.table.rows.size() == 4;
  const double star = back_solve_exact(-1.2034, -1.1185, 597, 3276, 1.96);
  const auto rt = order_exact(std::vector<Complex>{-1.2034, -1.1185}, star, {597, 3276});
  detail(fmt::format("ball reference fixture: lambda* back-solved from (-1.2034, -1.1185; 1.96) = {:.4f}, round trip {:.2f}",
                     star, *rt[1]));
  verdict(6, r.any_success && all_levels && shaped,
          "ball MSH fixture study runs end to end with exact-value orders (orders informational)");
}

// ---------------------------------------------------------------- 7

void criterion_parsers() {
  bool ok = true;
  const Mesh k = generate_cube_mesh(1);
  ok = ok && k.n_vertices() == 8 && k.n_tets() == 6 && k.n_edges() == 19 && k.boundary().faces.size() == 12 &&
       k.boundary().boundary_edge_ids.size() == 18 && k.boundary_euler_characteristic() == 2 &&
       k.volume_euler_characteristic() == 1;
  const Mesh c2 = generate_cube_mesh(2);
  ok = ok && c2.n_vertices() == 27 && c2.n_tets() == 48;
  const Mesh l2 = generate_lshape_mesh(2), l4 = generate_lshape_mesh(4);
  ok = ok && l2.n_tets() == 42 && l4.n_tets() == 336 && l2.boundary_euler_characteristic() == 2;
  int trips = 0;
  for (const Mesh* m : {&k, &c2, &l2, &l4}) {
    std::ostringstream os;
    write_msh(os, *m);
    const auto back = parse_msh(std::string_view(os.str()));
    std::ostringstream again;
    write_msh(again, back.mesh);
    ok = ok && back.warnings.empty() && canonical_dump(back.mesh) == canonical_dump(*m) && again.str() == os.str();
    ++trips;
  }
  const char* single = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n"
                       "$Elements\n1\n1 4 2 1 1 1 3 2 4\n$EndElements\n";
  const auto st = parse_msh(std::string_view(single));
  ok = ok && st.mesh.n_tets() == 1 && st.mesh.n_edges() == 6 && st.mesh.boundary().faces.size() == 4 &&
       st.mesh.signed_volume(0) > 0.0;
  verdict(7, ok, fmt::format("Kuhn cube / L-shape topology counts and {} MSH round trips", trips));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string workdir = "acceptance_out";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "directory for study outputs");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);
  auto want = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  auto guarded = [&](int id, auto&& fn) {
    if (!want(id)) return;
    try {
      fn();
    } catch (const std::exception& e) {
      verdict(id, false, std::string("exception: ") + e.what());
    }
  };
  guarded(1, criterion_formula_regression);
  guarded(7, criterion_parsers);
  guarded(2, criterion_oracle);
  guarded(3, criterion_invariants);
  guarded(6, [&] { criterion_ball(workdir); });
  guarded(5, [&] { criterion_lshape(workdir); });
  guarded(4, [&] { criterion_cube(workdir); });

  std::cout << (failures ? fmt::format("{} failing line(s)\n", failures) : "all criteria passed\n");
  return failures ? 1 : 0;
}
