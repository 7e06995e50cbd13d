#include "stekloff/msh_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

namespace stekloff {

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      line.erase(0, first);
      return true;
    }
    return false;
  }

  std::string expect_line(std::string_view what) {
    std::string line;
    if (!next(line)) fail(fmt::format("unexpected end of file, expected {}", what));
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw MshParseError(fmt::format("msh line {}: {}", line_no_, msg));
  }

  void skip_to(const std::string& end_marker) {
    std::string line;
    while (next(line))
      if (line.rfind(end_marker, 0) == 0) return;
    fail("missing " + end_marker);
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

long parse_count(LineReader& r, std::string_view section) {
  const std::string line = r.expect_line(fmt::format("{} count", section));
  std::istringstream is(line);
  long n = -1;
  std::string rest;
  if (!(is >> n) || n < 0 || (is >> rest)) r.fail(fmt::format("malformed {} count '{}'", section, line));
  return n;
}

void expect_end(LineReader& r, const std::string& marker) {
  const std::string line = r.expect_line(marker);
  if (line.rfind(marker, 0) != 0) r.fail(fmt::format("expected {} but found '{}'", marker, line));
}

struct RawElement {
  std::vector<long> nodes;
  int tag = 0;
};

}  // namespace

MshReadResult parse_msh(std::istream& in) {
  LineReader r(in);
  std::vector<std::string> warnings;

  bool have_format = false, have_nodes = false, have_elements = false;
  std::vector<Point3> node_points;
  std::unordered_map<long, Index> node_index;
  std::vector<RawElement> tets_raw, tris_raw;
  std::map<int, long> skipped_types;

  std::string line;
  while (r.next(line)) {
    if (line.front() != '$') r.fail(fmt::format("expected a section header, found '{}'", line));
    const std::string header = line.substr(0, line.find_first_of(" \t"));

    if (header == "$MeshFormat") {
      const std::string fmt_line = r.expect_line("format line");
      std::istringstream is(fmt_line);
      std::string version;
      int file_type = -1, data_size = 0;
      if (!(is >> version >> file_type >> data_size)) r.fail("malformed $MeshFormat line");
      if (version.rfind("2.", 0) != 0) r.fail("unsupported MSH version " + version + " (need 2.2)");
      if (file_type != 0) r.fail("binary MSH files are not supported");
      expect_end(r, "$EndMeshFormat");
      have_format = true;
    } else if (header == "$Nodes") {
      if (!have_format) r.fail("$Nodes before $MeshFormat");
      const long n = parse_count(r, "$Nodes");
      bool contiguous = true, duplicates = false;
      node_points.reserve(static_cast<std::size_t>(n));
      for (long i = 0; i < n; ++i) {
        const std::string nl = r.expect_line("node");
        std::istringstream is(nl);
        long id = 0;
        double x = 0, y = 0, z = 0;
        if (!(is >> id >> x >> y >> z)) r.fail(fmt::format("malformed node line '{}'", nl));
        if (id != i + 1) contiguous = false;
        if (node_index.count(id)) {
          duplicates = true;
          continue;
        }
        node_index.emplace(id, static_cast<Index>(node_points.size()));
        node_points.emplace_back(x, y, z);
      }
      expect_end(r, "$EndNodes");
      if (!contiguous) warnings.emplace_back("node ids are not contiguous from 1; remapped");
      if (duplicates) warnings.emplace_back("duplicate node ids; first definition kept");
      have_nodes = true;
    } else if (header == "$Elements") {
      if (!have_nodes) r.fail("$Elements before $Nodes");
      const long n = parse_count(r, "$Elements");
      for (long i = 0; i < n; ++i) {
        const std::string el = r.expect_line("element");
        std::istringstream is(el);
        long id = 0;
        int type = 0, ntags = 0;
        if (!(is >> id >> type >> ntags) || ntags < 0)
          r.fail(fmt::format("malformed element line '{}'", el));
        std::vector<long> tags(static_cast<std::size_t>(ntags));
        for (auto& t : tags)
          if (!(is >> t)) r.fail(fmt::format("malformed element tags '{}'", el));
        const int nn = type == 4 ? 4 : type == 2 ? 3 : 0;
        if (nn == 0) {
          ++skipped_types[type];
          continue;
        }
        RawElement raw;
        raw.tag = tags.empty() ? 0 : static_cast<int>(tags.front());
        raw.nodes.resize(static_cast<std::size_t>(nn));
        for (auto& v : raw.nodes)
          if (!(is >> v)) r.fail(fmt::format("element {} has too few nodes", id));
        (type == 4 ? tets_raw : tris_raw).push_back(std::move(raw));
      }
      expect_end(r, "$EndElements");
      have_elements = true;
    } else if (header.rfind("$End", 0) == 0) {
      r.fail("unexpected " + header);
    } else {
      warnings.push_back("skipped section " + header);
      r.skip_to("$End" + header.substr(1));
    }
  }

  if (!have_format) r.fail("missing $MeshFormat section");
  if (!have_nodes) r.fail("missing $Nodes section");
  if (!have_elements) r.fail("missing $Elements section");
  for (const auto& [type, count] : skipped_types)
    warnings.push_back(fmt::format("skipped {} element(s) of unsupported type {}", count, type));
  if (tets_raw.empty()) throw MshParseError("no tetrahedra found");

  auto lookup = [&](long id) {
    auto it = node_index.find(id);
    if (it == node_index.end()) throw MshParseError(fmt::format("element references unknown node {}", id));
    return it->second;
  };

  // Keep only nodes referenced by tets, preserving file order.
  std::vector<Index> remap(node_points.size(), -1);
  std::vector<Tetrahedron> tets;
  tets.reserve(tets_raw.size());
  for (const auto& raw : tets_raw) {
    Tetrahedron t;
    for (int k = 0; k < 4; ++k) t.vertex_ids[k] = lookup(raw.nodes[static_cast<std::size_t>(k)]);
    t.region_tag = raw.tag;
    for (Index v : t.vertex_ids) remap[static_cast<std::size_t>(v)] = 0;
    tets.push_back(t);
  }
  std::vector<Point3> points;
  for (std::size_t v = 0; v < node_points.size(); ++v)
    if (remap[v] == 0) {
      remap[v] = static_cast<Index>(points.size());
      points.push_back(node_points[v]);
    }
  if (points.size() != node_points.size())
    warnings.push_back(fmt::format("dropped {} node(s) not used by any tetrahedron",
                                   node_points.size() - points.size()));
  for (auto& t : tets)
    for (Index& v : t.vertex_ids) v = remap[static_cast<std::size_t>(v)];

  canonicalize_orientation(points, tets);
  Mesh mesh = Mesh::from_cells(std::move(points), std::move(tets));
  require_valid(mesh);

  if (!tris_raw.empty()) {
    std::map<std::array<Index, 3>, Index> face_of;
    const auto& faces = mesh.boundary().faces;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      auto key = faces[f].vertex_ids;
      std::sort(key.begin(), key.end());
      face_of.emplace(key, static_cast<Index>(f));
    }
    long unmatched = 0;
    for (const auto& raw : tris_raw) {
      std::array<Index, 3> key{};
      bool ok = true;
      for (int k = 0; k < 3; ++k) {
        const Index v = lookup(raw.nodes[static_cast<std::size_t>(k)]);
        if (remap[static_cast<std::size_t>(v)] < 0) ok = false;
        else key[static_cast<std::size_t>(k)] = remap[static_cast<std::size_t>(v)];
      }
      std::sort(key.begin(), key.end());
      auto it = ok ? face_of.find(key) : face_of.end();
      if (it == face_of.end()) ++unmatched;
      else mesh.set_boundary_tag(it->second, raw.tag);
    }
    if (unmatched) warnings.push_back(fmt::format("{} triangle(s) do not match a boundary face", unmatched));
  }
  return {std::move(mesh), std::move(warnings)};
}

MshReadResult parse_msh(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_msh(in);
}

MshReadResult read_msh_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MshParseError("cannot open " + path.string());
  return parse_msh(in);
}

void write_msh(std::ostream& out, const Mesh& mesh) {
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << mesh.n_vertices() << '\n';
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
    const auto& p = mesh.points()[v];
    out << fmt::format("{} {:.17g} {:.17g} {:.17g}\n", v + 1, p.x(), p.y(), p.z());
  }
  out << "$EndNodes\n";
  const auto& faces = mesh.boundary().faces;
  out << "$Elements\n" << faces.size() + mesh.n_tets() << '\n';
  std::size_t id = 1;
  for (const auto& f : faces)
    out << fmt::format("{} 2 2 {} {} {} {} {}\n", id++, f.tag, f.tag, f.vertex_ids[0] + 1,
                       f.vertex_ids[1] + 1, f.vertex_ids[2] + 1);
  for (const auto& t : mesh.tets()) {
    const auto& v = t.vertex_ids;
    out << fmt::format("{} 4 2 {} {} {} {} {} {}\n", id++, t.region_tag, t.region_tag, v[0] + 1, v[1] + 1,
                       v[2] + 1, v[3] + 1);
  }
  out << "$EndElements\n";
}

void write_msh_file(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write " + path.string());
  write_msh(out, mesh);
}

void write_canonical_dump(std::ostream& out, const Mesh& mesh) {
  out << "stekloff-mesh 1\n";
  out << "points " << mesh.n_vertices() << '\n';
  for (const auto& p : mesh.points()) out << fmt::format("{:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), p.z());
  out << "tets " << mesh.n_tets() << '\n';
  for (const auto& t : mesh.tets()) {
    const auto& v = t.vertex_ids;
    out << fmt::format("{} {} {} {} {}\n", v[0], v[1], v[2], v[3], t.region_tag);
  }
}

std::string canonical_dump(const Mesh& mesh) {
  std::ostringstream os;
  write_canonical_dump(os, mesh);
  return os.str();
}

}  // namespace stekloff
