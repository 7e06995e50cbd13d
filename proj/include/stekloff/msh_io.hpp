#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "stekloff/mesh.hpp"

namespace stekloff {

class MshParseError : public MeshError {
 public:
  using MeshError::MeshError;
};

struct MshReadResult {
  Mesh mesh;
  std::vector<std::string> warnings;
};

/// Reads Gmsh MSH 2.2 ASCII. Only 3-node triangles (type 2) and 4-node tets
/// (type 4) are consumed; the first tag of each element is its physical tag.
/// The boundary is always derived from the tets; triangles only contribute
/// tags for matching boundary faces.
MshReadResult parse_msh(std::istream& in);
MshReadResult parse_msh(std::string_view text);
MshReadResult read_msh_file(const std::filesystem::path& path);

/// Writes nodes, boundary triangles (tagged) and tets (tagged) in MSH 2.2 ASCII.
void write_msh(std::ostream& out, const Mesh& mesh);
void write_msh_file(const std::filesystem::path& path, const Mesh& mesh);

/// Versioned plain-text dump of points and tets for golden-file comparisons.
void write_canonical_dump(std::ostream& out, const Mesh& mesh);
std::string canonical_dump(const Mesh& mesh);

}  // namespace stekloff
