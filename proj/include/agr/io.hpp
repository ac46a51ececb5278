#pragma once

// Point-cloud and mesh files: XYZ and PLY (ascii, binary little-endian) in,
// PLY, XYZ and OBJ out. Writers print doubles in shortest round-trip form.

#include "agr/field.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace agr {

struct PointData {
  Points positions;
  std::optional<Points> normals;
};

/// Dispatches on extension (.xyz/.txt/.pts or .ply). Malformed input throws
/// ErrorKind::parse with the offending line; NaN or infinite coordinates are
/// rejected.
PointData read_points(const std::filesystem::path& path);
PointData parse_xyz(const std::string& text);
PointData parse_ply_points(const std::string& bytes);

void write_points(const std::filesystem::path& path, const Points& positions, const Points* normals = nullptr);

/// Mesh from .obj (v/f records, polygons fan-split) or .ply.
TriangleMesh read_mesh(const std::filesystem::path& path);

void write_mesh_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace agr
