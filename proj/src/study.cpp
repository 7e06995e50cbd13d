#include "stekloff/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "stekloff/msh_io.hpp"

namespace stekloff {

using nlohmann::json;

Complex cluster_average(const std::vector<Complex>& cluster) {
  if (cluster.empty()) throw std::invalid_argument("cannot average an empty cluster");
  Complex sum = 0.0;
  for (const auto& z : cluster) sum += z;
  return sum / static_cast<double>(cluster.size());
}

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument(fmt::format("{} eigenvalues but {} edge counts", a, b));
}

std::optional<double> log_ratio_order(double num, double den, double n_fine, double n_coarse) {
  if (!(num > 0.0) || !(den > 0.0) || !(n_fine > 0.0) || !(n_coarse > 0.0) || n_fine == n_coarse) return std::nullopt;
  const double r = -std::log(num / den) / std::log(std::sqrt(n_fine) / std::sqrt(n_coarse));
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

std::vector<std::optional<Complex>> wrap(const std::vector<Complex>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

std::vector<std::optional<double>> order_relative(const std::vector<std::optional<Complex>>& lam,
                                                  const std::vector<double>& n) {
  check_lengths(lam.size(), n.size());
  std::vector<std::optional<double>> r(lam.size());
  for (std::size_t l = 2; l < lam.size(); ++l) {
    if (!lam[l] || !lam[l - 1] || !lam[l - 2]) continue;
    r[l] = log_ratio_order(std::abs(*lam[l] - *lam[l - 1]), std::abs(*lam[l - 1] - *lam[l - 2]), n[l], n[l - 1]);
  }
  return r;
}

std::vector<std::optional<double>> order_relative(const std::vector<Complex>& lam, const std::vector<double>& n) {
  return order_relative(wrap(lam), n);
}

std::vector<std::optional<double>> order_exact(const std::vector<std::optional<Complex>>& lam, double exact,
                                               const std::vector<double>& n) {
  check_lengths(lam.size(), n.size());
  std::vector<std::optional<double>> r(lam.size());
  for (std::size_t l = 1; l < lam.size(); ++l) {
    if (!lam[l] || !lam[l - 1]) continue;
    r[l] = log_ratio_order(std::abs(*lam[l] - exact), std::abs(*lam[l - 1] - exact), n[l], n[l - 1]);
  }
  return r;
}

std::vector<std::optional<double>> order_exact(const std::vector<Complex>& lam, double exact,
                                               const std::vector<double>& n) {
  return order_exact(wrap(lam), exact, n);
}

double back_solve_exact(Complex lambda1, Complex lambda2, double n1, double n2, double order) {
  const double q = std::pow(std::sqrt(n2) / std::sqrt(n1), -order);
  if (!(q < 1.0)) throw std::invalid_argument("back-solve needs a positive order and N2 > N1");
  const double d = (lambda1.real() - lambda2.real()) / (1.0 - q);
  return lambda1.real() - d;
}

// ---------------------------------------------------------------- config

std::string DomainSpec::level_label(std::size_t l) const {
  switch (kind) {
    case Kind::Cube:
    case Kind::LShape:
      return fmt::format("n={}", levels.at(l));
    case Kind::Msh:
      return files.at(l).filename().string();
  }
  return {};
}

void StudyConfig::validate() const {
  if (domain.n_levels() == 0) throw ConfigError("domain has no mesh levels");
  if (orders && domain.n_levels() < 2)
    throw ConfigError("convergence orders need at least 2 mesh levels (3 for relative orders)");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive");
  if (!(eps.lower_bound() > 0.0)) throw ConfigError("eps_r must be bounded below by a positive constant");
  if (formulations.empty()) throw ConfigError("no formulations selected");
  if (nev < 1) throw ConfigError("nev must be at least 1");
  if (!std::isfinite(shift)) throw ConfigError("shift must be finite");
  if (!clusters.sizes.empty()) {
    const int total = std::accumulate(clusters.sizes.begin(), clusters.sizes.end(), 0);
    if (total != nev) throw ConfigError(fmt::format("cluster sizes sum to {} but nev = {}", total, nev));
    for (int s : clusters.sizes)
      if (s < 1) throw ConfigError("cluster sizes must be positive");
  } else if (!(clusters.gap > 0.0)) {
    throw ConfigError("cluster gap must be positive");
  }
  if (!exact.empty() && !clusters.sizes.empty() && exact.size() != clusters.sizes.size())
    throw ConfigError(fmt::format("{} exact values for {} clusters", exact.size(), clusters.sizes.size()));
  for (int n : domain.levels) {
    if (n < 1) throw ConfigError("mesh levels must be positive");
    if (domain.kind == DomainSpec::Kind::LShape && n % 2 != 0) throw ConfigError("lshape levels must be even");
  }
  if (domain.kind != DomainSpec::Kind::Msh)
    for (std::size_t l = 1; l < domain.levels.size(); ++l)
      if (domain.levels[l] <= domain.levels[l - 1]) throw ConfigError("mesh levels must increase");
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(fmt::format("unknown key '{}' in {}", it.key(), where));
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}.{}: {}", where, key, e.what()));
  }
}

}  // namespace

StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"label", "domain", "kappa", "eps", "formulations", "nev", "shift", "max_iterations", "tolerance",
                  "clusters", "exact", "orders", "output"},
                 "config");

  StudyConfig c;
  if (j.contains("label")) c.label = get<std::string>(j, "label", "config");

  if (!j.contains("domain")) throw ConfigError("config.domain is required");
  const json& d = j.at("domain");
  if (!d.is_object()) throw ConfigError("config.domain must be an object");
  reject_unknown(d, {"type", "levels", "files"}, "domain");
  const auto type = get<std::string>(d, "type", "domain");
  if (type == "cube" || type == "lshape") {
    c.domain.kind = type == "cube" ? DomainSpec::Kind::Cube : DomainSpec::Kind::LShape;
    if (d.contains("files")) throw ConfigError("domain.files is only valid for type msh");
    c.domain.levels = get<std::vector<int>>(d, "levels", "domain");
  } else if (type == "msh") {
    c.domain.kind = DomainSpec::Kind::Msh;
    if (d.contains("levels")) throw ConfigError("domain.levels is not valid for type msh");
    for (const auto& f : get<std::vector<std::string>>(d, "files", "domain")) {
      std::filesystem::path p(f);
      c.domain.files.push_back(p.is_absolute() ? p : base_dir / p);
    }
  } else {
    throw ConfigError(fmt::format("domain.type '{}' (expected cube, lshape or msh)", type));
  }

  if (j.contains("kappa")) c.kappa = get<double>(j, "kappa", "config");
  if (j.contains("eps")) {
    const json& e = j.at("eps");
    if (e.is_number()) {
      if (!(e.get<double>() > 0.0)) throw ConfigError("eps must be positive");
      c.eps = MaterialField::constant(e.get<double>());
    } else if (e.is_object()) {
      reject_unknown(e, {"default", "regions"}, "eps");
      const double def = e.contains("default") ? get<double>(e, "default", "eps") : 1.0;
      if (!(def > 0.0)) throw ConfigError("eps.default must be positive");
      c.eps = MaterialField::constant(def);
      if (e.contains("regions")) {
        if (!e.at("regions").is_object()) throw ConfigError("eps.regions must map region tags to values");
        for (auto it = e.at("regions").begin(); it != e.at("regions").end(); ++it) {
          int tag = 0;
          try {
            tag = std::stoi(it.key());
          } catch (const std::exception&) {
            throw ConfigError(fmt::format("eps.regions key '{}' is not an integer tag", it.key()));
          }
          if (!it.value().is_number() || !(it.value().get<double>() > 0.0))
            throw ConfigError(fmt::format("eps.regions[{}] must be a positive number", tag));
          c.eps.set_region(tag, it.value().get<double>());
        }
      }
    } else {
      throw ConfigError("eps must be a number or an object");
    }
    c.eps_description = e.dump();
  }
  if (j.contains("formulations")) {
    c.formulations.clear();
    for (const auto& s : get<std::vector<std::string>>(j, "formulations", "config")) {
      try {
        c.formulations.push_back(formulation_from_string(s));
      } catch (const AssemblyError& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (j.contains("nev")) c.nev = get<int>(j, "nev", "config");
  if (j.contains("shift")) c.shift = get<double>(j, "shift", "config");
  if (j.contains("max_iterations")) c.max_iterations = get<int>(j, "max_iterations", "config");
  if (j.contains("tolerance")) c.tolerance = get<double>(j, "tolerance", "config");
  if (j.contains("clusters")) {
    const json& cl = j.at("clusters");
    if (!cl.is_object()) throw ConfigError("clusters must be an object");
    reject_unknown(cl, {"sizes", "gap"}, "clusters");
    if (cl.contains("sizes") && cl.contains("gap")) throw ConfigError("clusters takes either sizes or gap");
    if (cl.contains("sizes")) c.clusters.sizes = get<std::vector<int>>(cl, "sizes", "clusters");
    if (cl.contains("gap")) c.clusters.gap = get<double>(cl, "gap", "clusters");
  }
  if (j.contains("exact")) c.exact = get<std::vector<double>>(j, "exact", "config");
  if (j.contains("orders")) c.orders = get<bool>(j, "orders", "config");
  if (j.contains("output")) {
    std::filesystem::path p(get<std::string>(j, "output", "config"));
    c.output_dir = p.is_absolute() ? p : base_dir / p;
  }
  c.source_json = j.dump(2);
  c.validate();
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_study_config(ss.str(), file.parent_path().empty() ? "." : file.parent_path());
}

// ---------------------------------------------------------------- study

Mesh build_level_mesh(const DomainSpec& domain, std::size_t l, std::vector<std::string>* warnings) {
  switch (domain.kind) {
    case DomainSpec::Kind::Cube:
      return generate_cube_mesh(domain.levels.at(l));
    case DomainSpec::Kind::LShape:
      return generate_lshape_mesh(domain.levels.at(l));
    case DomainSpec::Kind::Msh: {
      MshReadResult r = read_msh_file(domain.files.at(l).string());
      if (warnings)
        for (auto& w : r.warnings) warnings->push_back(std::move(w));
      return std::move(r.mesh);
    }
  }
  throw MeshError("unknown domain kind");
}

const ClusterRow* ConvergenceTable::row(Formulation f, std::size_t cluster) const {
  for (const auto& r : rows)
    if (r.formulation == f && r.cluster == cluster) return &r;
  return nullptr;
}

std::size_t ConvergenceTable::n_clusters() const {
  std::size_t n = 0;
  for (const auto& r : rows) n = std::max(n, r.cluster + 1);
  return n;
}

namespace {

// Cluster sizes: explicit, or the gap rule applied on the finest level that has
// a spectrum, then reused on every level so rows line up across refinement.
std::vector<int> resolve_cluster_sizes(const StudyConfig& c, const std::vector<LevelOutcome>& levels) {
  if (!c.clusters.sizes.empty()) return c.clusters.sizes;
  for (auto it = levels.rbegin(); it != levels.rend(); ++it)
    for (Formulation f : c.formulations) {
      auto e = it->eigenvalues.find(f);
      if (e == it->eigenvalues.end() || e->second.empty()) continue;
      std::vector<int> sizes;
      for (const auto& cl : cluster_eigenvalues(e->second, c.clusters)) sizes.push_back(static_cast<int>(cl.size()));
      return sizes;
    }
  return {};
}

}  // namespace

ConvergenceTable build_table(const StudyConfig& c, const std::vector<LevelOutcome>& levels) {
  ConvergenceTable t;
  std::vector<double> n_edges;
  for (const auto& lv : levels) {
    t.level_labels.push_back(lv.label);
    t.n_boundary_edges.push_back(static_cast<long>(lv.stats.n_boundary_edges));
    n_edges.push_back(static_cast<double>(lv.stats.n_boundary_edges));
  }
  t.exact_orders = !c.exact.empty();
  const std::vector<int> sizes = resolve_cluster_sizes(c, levels);
  if (t.exact_orders && c.exact.size() != sizes.size())
    throw ConfigError(fmt::format("{} exact values for {} clusters", c.exact.size(), sizes.size()));

  std::size_t first = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (Formulation f : c.formulations) {
      ClusterRow row;
      row.formulation = f;
      row.cluster = k;
      for (int m = 0; m < sizes[k]; ++m) row.members.push_back(static_cast<int>(first) + m + 1);
      for (const auto& lv : levels) {
        auto e = lv.eigenvalues.find(f);
        if (e == lv.eigenvalues.end() || e->second.size() < first + static_cast<std::size_t>(sizes[k])) {
          row.averages.emplace_back();
          continue;
        }
        row.averages.emplace_back(cluster_average(std::vector<Complex>(
            e->second.begin() + static_cast<long>(first), e->second.begin() + static_cast<long>(first) + sizes[k])));
      }
      if (!c.orders) row.orders.assign(levels.size(), std::nullopt);
      else if (t.exact_orders) {
        row.exact = c.exact[k];
        row.orders = order_exact(row.averages, c.exact[k], n_edges);
      } else {
        row.orders = order_relative(row.averages, n_edges);
      }
      t.rows.push_back(std::move(row));
    }
    first += static_cast<std::size_t>(sizes[k]);
  }
  return t;
}

StudyResult run_study(const StudyConfig& c) {
  c.validate();
  StudyResult result;
  for (std::size_t l = 0; l < c.domain.n_levels(); ++l) {
    LevelOutcome lv;
    lv.label = c.domain.level_label(l);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Mesh mesh = build_level_mesh(c.domain, l, &lv.warnings);
      lv.stats = mesh_stats(mesh);
      const Wavenumber kappa(c.kappa);
      for (Formulation f : c.formulations) {
        try {
          const BlockSystem sys = assemble_system(mesh, kappa, c.eps, f);
          EigenRequest req;
          req.nev = c.nev;
          req.shift = c.shift;
          req.max_iterations = c.max_iterations;
          req.tolerance = c.tolerance;
          req.which = Which::SmallestMagnitude;
          EigenResult er = shift_invert_solve(sys, req);
          sort_by_magnitude(er);
          for (auto& w : er.warnings) lv.warnings.push_back(to_string(f) + ": " + w);
          lv.eigenvalues[f] = er.values();
          lv.pairs[f] = std::move(er.pairs);
          result.any_success = true;
        } catch (const std::exception& e) {
          lv.errors[f] = e.what();
        }
      }
    } catch (const std::exception& e) {
      for (Formulation f : c.formulations) lv.errors[f] = e.what();
    }
    lv.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.levels.push_back(std::move(lv));
  }
  result.table = build_table(c, result.levels);
  return result;
}

// ---------------------------------------------------------------- output

namespace {

std::string members_label(const std::vector<int>& m) {
  if (m.size() > 3) return fmt::format("j = {},...,{}", m.front(), m.back());
  std::string s = "j = ";
  for (std::size_t k = 0; k < m.size(); ++k) s += (k ? "," : "") + std::to_string(m[k]);
  return s;
}

std::string lambda_name(Formulation f) { return f == Formulation::Sh ? "lambda" : "lambda+"; }

std::string cell(const ClusterRow& r, std::size_t l) {
  if (!r.averages[l]) return "--";
  std::string s = fmt::format("{:.4f}", r.averages[l]->real());
  if (r.orders[l]) s += fmt::format(" ({:.2f})", *r.orders[l]);
  return s;
}

std::string header_line(const StudyConfig& c, const ConvergenceTable& t) {
  std::string forms;
  for (Formulation f : c.formulations) forms += (forms.empty() ? "" : ",") + to_string(f);
  return fmt::format("{}: kappa = {}, eps_r = {}, formulations = {}, orders = {}", c.label, c.kappa,
                     c.eps_description, forms, !c.orders ? "off" : (t.exact_orders ? "exact" : "relative"));
}

}  // namespace

std::string format_table_text(const StudyConfig& c, const ConvergenceTable& t) {
  const std::size_t nl = t.level_labels.size();
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"", "N_l"};
  if (t.exact_orders) head.push_back("exact");
  for (std::size_t l = 0; l < nl; ++l) head.push_back(std::to_string(t.n_boundary_edges[l]));
  grid.push_back(head);
  for (const auto& r : t.rows) {
    std::vector<std::string> line{r.formulation == c.formulations.front() ? members_label(r.members) : "",
                                  lambda_name(r.formulation)};
    if (t.exact_orders) line.push_back(r.exact ? fmt::format("{:.4f}", *r.exact) : "");
    for (std::size_t l = 0; l < nl; ++l) line.push_back(cell(r, l));
    grid.push_back(line);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : grid)
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  std::string out = "# " + header_line(c, t) + "\n";
  out += "# levels:";
  for (const auto& s : t.level_labels) out += " " + s;
  out += "\n";
  for (const auto& row : grid) {
    std::string line;
    for (std::size_t k = 0; k < row.size(); ++k) {
      line += k < 2 ? fmt::format("{:<{}}", row[k], width[k]) : fmt::format("{:>{}}", row[k], width[k]);
      if (k + 1 < row.size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string format_table_csv(const StudyConfig& c, const ConvergenceTable& t) {
  std::string out = "# " + header_line(c, t) + "\n";
  out += "cluster,members,formulation,level,label,N,average_real,average_imag,order,exact\n";
  for (const auto& r : t.rows)
    for (std::size_t l = 0; l < t.level_labels.size(); ++l) {
      std::string members;
      for (std::size_t k = 0; k < r.members.size(); ++k) members += (k ? " " : "") + std::to_string(r.members[k]);
      out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.cluster + 1, members, to_string(r.formulation), l + 1,
                         t.level_labels[l], t.n_boundary_edges[l],
                         r.averages[l] ? fmt::format("{:.4f}", r.averages[l]->real()) : "",
                         r.averages[l] ? fmt::format("{:.4f}", r.averages[l]->imag()) : "",
                         r.orders[l] ? fmt::format("{:.2f}", *r.orders[l]) : "",
                         r.exact ? fmt::format("{:.6f}", *r.exact) : "");
    }
  return out;
}

std::string format_table_markdown(const StudyConfig& c, const ConvergenceTable& t) {
  std::string out = "<!-- " + header_line(c, t) + " -->\n\n";
  out += t.exact_orders ? "| | N_l | exact |" : "| | N_l |";
  for (long n : t.n_boundary_edges) out += fmt::format(" {} |", n);
  out += t.exact_orders ? "\n|---|---|---|" : "\n|---|---|";
  for (std::size_t l = 0; l < t.n_boundary_edges.size(); ++l) out += "---|";
  out += "\n";
  for (const auto& r : t.rows) {
    out += fmt::format("| {} | {} |", r.formulation == c.formulations.front() ? members_label(r.members) : "",
                       r.formulation == Formulation::Sh ? "λ" : "λ⁺");
    if (t.exact_orders) out += " " + (r.exact ? fmt::format("{:.4f}", *r.exact) : std::string()) + " |";
    for (std::size_t l = 0; l < t.level_labels.size(); ++l) out += " " + cell(r, l) + " |";
    out += "\n";
  }
  return out;
}

std::string format_spectrum_csv(const std::vector<EigenPair>& pairs) {
  std::string out = "index,real,imag,residual\n";
  for (std::size_t k = 0; k < pairs.size(); ++k)
    out += fmt::format("{},{:.17g},{:.17g},{:.3e}\n", k + 1, pairs[k].lambda.real(), pairs[k].lambda.imag(),
                       pairs[k].residual);
  return out;
}

void write_study_outputs(const StudyConfig& c, const StudyResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(c.output_dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(c.output_dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (c.output_dir / name).string());
    out << content;
  };
  write("table.txt", format_table_text(c, result.table));
  write("table.csv", format_table_csv(c, result.table));
  write("table.md", format_table_markdown(c, result.table));
  for (std::size_t l = 0; l < result.levels.size(); ++l)
    for (const auto& [f, pairs] : result.levels[l].pairs)
      write(fmt::format("spectrum_L{}_{}.csv", l + 1, to_string(f)), format_spectrum_csv(pairs));

  json meta;
  meta["config"] = json::parse(c.source_json.empty() ? "{}" : c.source_json);
  meta["assumptions"] = {{"kappa", c.kappa}, {"eps_r", c.eps_description}};
  meta["versions"] = {{"stekloff", "1.0.0"},
                      {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                      {"fmt", FMT_VERSION}};
  json levels = json::array();
  for (const auto& lv : result.levels) {
    json e{{"label", lv.label},
           {"n_boundary_edges", lv.stats.n_boundary_edges},
           {"n_edges", lv.stats.n_edges},
           {"n_tets", lv.stats.n_tets},
           {"h", lv.stats.h},
           {"seconds", lv.seconds},
           {"warnings", lv.warnings}};
    json errs = json::object();
    for (const auto& [f, msg] : lv.errors) errs[to_string(f)] = msg;
    e["errors"] = errs;
    levels.push_back(e);
  }
  meta["levels"] = levels;
  write("run_metadata.json", meta.dump(2) + "\n");
}

}  // namespace stekloff
