#include "agr/io.hpp"

#include "agr/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace agr {

namespace {

[[noreturn]] void parse_error(const std::string& what, std::size_t line) {
  throw Error(ErrorKind::parse, what + " (line " + std::to_string(line) + ")");
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool to_double(std::string_view s, double& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Splits text into lines, tolerating CRLF.
class LineReader {
 public:
  explicit LineReader(std::string_view text, size_t pos = 0) : text_(text), pos_(pos) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++number_;
    return true;
  }
  size_t number() const { return number_; }
  size_t offset() const { return pos_; }

 private:
  std::string_view text_;
  size_t pos_;
  size_t number_ = 0;
};

// ---- PLY ------------------------------------------------------------------

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<PlyType> ply_type(std::string_view s) {
  static const std::map<std::string_view, PlyType> names = {
      {"char", PlyType::i8},    {"int8", PlyType::i8},     {"uchar", PlyType::u8},   {"uint8", PlyType::u8},
      {"short", PlyType::i16},  {"int16", PlyType::i16},   {"ushort", PlyType::u16}, {"uint16", PlyType::u16},
      {"int", PlyType::i32},    {"int32", PlyType::i32},   {"uint", PlyType::u32},   {"uint32", PlyType::u32},
      {"float", PlyType::f32},  {"float32", PlyType::f32}, {"double", PlyType::f64}, {"float64", PlyType::f64}};
  auto it = names.find(s);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::i8: case PlyType::u8: return 1;
    case PlyType::i16: case PlyType::u16: return 2;
    case PlyType::i32: case PlyType::u32: case PlyType::f32: return 4;
    case PlyType::f64: return 8;
  }
  return 0;
}

template <class T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double ply_value(PlyType t, const char* p) {
  switch (t) {
    case PlyType::i8: return load<std::int8_t>(p);
    case PlyType::u8: return load<std::uint8_t>(p);
    case PlyType::i16: return load<std::int16_t>(p);
    case PlyType::u16: return load<std::uint16_t>(p);
    case PlyType::i32: return load<std::int32_t>(p);
    case PlyType::u32: return load<std::uint32_t>(p);
    case PlyType::f32: return load<float>(p);
    case PlyType::f64: return load<double>(p);
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f64;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> props;
};

struct PlyData {
  std::map<std::string, std::vector<double>> vertex;  // scalar vertex properties
  size_t vertex_count = 0;
  std::vector<std::vector<std::int64_t>> faces;
};

PlyData parse_ply(const std::string& bytes) {
  LineReader lines(bytes);
  std::string_view line;
  if (!lines.next(line) || line != "ply") parse_error("missing 'ply' magic", 1);
  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  for (;;) {
    if (!lines.next(line)) parse_error("unterminated PLY header", lines.number());
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() != 3) parse_error("bad format line", lines.number());
      if (tok[1] == "ascii") {
        binary = false;
      } else if (tok[1] == "binary_little_endian") {
        binary = true;
      } else {
        parse_error("unsupported PLY format '" + std::string(tok[1]) + "'", lines.number());
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) parse_error("bad element line", lines.number());
      PlyElement e;
      e.name = std::string(tok[1]);
      auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (ec != std::errc() || p != tok[2].data() + tok[2].size()) parse_error("bad element count", lines.number());
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) parse_error("property before element", lines.number());
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = ply_type(tok[2]);
        auto vt = ply_type(tok[3]);
        if (!ct || !vt) parse_error("unknown list property type", lines.number());
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *vt;
        prop.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = ply_type(tok[1]);
        if (!t) parse_error("unknown property type '" + std::string(tok[1]) + "'", lines.number());
        prop.type = *t;
        prop.name = std::string(tok[2]);
      } else {
        parse_error("bad property line", lines.number());
      }
      elements.back().props.push_back(std::move(prop));
    } else {
      parse_error("unexpected header keyword '" + std::string(tok[0]) + "'", lines.number());
    }
  }
  if (!have_format) parse_error("missing format line", lines.number());

  PlyData out;
  const char* data = bytes.data() + lines.offset();
  const char* data_end = bytes.data() + bytes.size();
  for (const auto& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    if (is_vertex) {
      out.vertex_count = e.count;
      for (const auto& p : e.props) {
        if (!p.is_list) out.vertex[p.name].reserve(e.count);
      }
    }
    for (size_t i = 0; i < e.count; ++i) {
      std::vector<double> values;  // ascii tokens of the current record
      size_t cursor = 0;
      if (!binary) {
        std::string_view rec;
        do {
          if (!lines.next(rec)) parse_error("unexpected end of PLY data in element '" + e.name + "'", lines.number());
        } while (split_ws(rec).empty());
        for (auto t : split_ws(rec)) {
          double v;
          if (!to_double(t, v)) parse_error("bad number '" + std::string(t) + "'", lines.number());
          values.push_back(v);
        }
      }
      auto take = [&](PlyType t) -> double {
        if (binary) {
          const size_t sz = ply_size(t);
          if (data + sz > data_end) parse_error("truncated binary PLY body", lines.number());
          const double v = ply_value(t, data);
          data += sz;
          return v;
        }
        if (cursor >= values.size()) parse_error("too few values in PLY record", lines.number());
        return values[cursor++];
      };
      for (const auto& p : e.props) {
        if (p.is_list) {
          const double n = take(p.count_type);
          if (n < 0 || n != std::floor(n)) parse_error("bad list length", lines.number());
          std::vector<std::int64_t> idx;
          for (int k = 0; k < static_cast<int>(n); ++k) idx.push_back(static_cast<std::int64_t>(take(p.type)));
          if (is_face) out.faces.push_back(std::move(idx));
        } else {
          const double v = take(p.type);
          if (is_vertex) out.vertex[p.name].push_back(v);
        }
      }
      if (!binary && cursor != values.size()) parse_error("too many values in PLY record", lines.number());
    }
  }
  return out;
}

void check_finite(const Points& p, const std::string& what) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (!p.row(i).allFinite()) {
      throw Error(ErrorKind::parse, what + ": non-finite coordinate in point " + std::to_string(i));
    }
  }
}

void append(std::string& s, double v) { s += format_double(v); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

PointData parse_xyz(const std::string& text) {
  LineReader lines(text);
  std::string_view line;
  std::vector<double> buf;
  size_t columns = 0;
  while (lines.next(line)) {
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 3 && tok.size() != 6) parse_error("expected 3 or 6 values, got " + std::to_string(tok.size()), lines.number());
    if (columns == 0) columns = tok.size();
    if (tok.size() != columns) parse_error("inconsistent column count", lines.number());
    for (auto t : tok) {
      double v;
      if (!to_double(t, v)) parse_error("bad number '" + std::string(t) + "'", lines.number());
      if (!std::isfinite(v)) parse_error("non-finite value", lines.number());
      buf.push_back(v);
    }
  }
  PointData out;
  const Eigen::Index n = columns ? static_cast<Eigen::Index>(buf.size() / columns) : 0;
  out.positions.resize(n, 3);
  if (columns == 6) out.normals = Points(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      out.positions(i, a) = buf[static_cast<size_t>(i) * columns + static_cast<size_t>(a)];
      if (columns == 6) (*out.normals)(i, a) = buf[static_cast<size_t>(i) * columns + 3 + static_cast<size_t>(a)];
    }
  }
  return out;
}

PointData parse_ply_points(const std::string& bytes) {
  PlyData ply = parse_ply(bytes);
  for (const char* k : {"x", "y", "z"}) {
    if (!ply.vertex.contains(k)) throw Error(ErrorKind::parse, std::string("PLY vertex element lacks property '") + k + "'");
  }
  const auto n = static_cast<Eigen::Index>(ply.vertex_count);
  PointData out;
  out.positions.resize(n, 3);
  const bool has_n = ply.vertex.contains("nx") && ply.vertex.contains("ny") && ply.vertex.contains("nz");
  if (has_n) out.normals = Points(n, 3);
  const char* names[2][3] = {{"x", "y", "z"}, {"nx", "ny", "nz"}};
  for (int a = 0; a < 3; ++a) {
    const auto& col = ply.vertex[names[0][a]];
    for (Eigen::Index i = 0; i < n; ++i) out.positions(i, a) = col[static_cast<size_t>(i)];
    if (has_n) {
      const auto& ncol = ply.vertex[names[1][a]];
      for (Eigen::Index i = 0; i < n; ++i) (*out.normals)(i, a) = ncol[static_cast<size_t>(i)];
    }
  }
  check_finite(out.positions, "PLY");
  return out;
}

PointData read_points(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  const std::string bytes = read_file(path);
  if (ext == ".ply") return parse_ply_points(bytes);
  if (ext == ".xyz" || ext == ".txt" || ext == ".pts" || ext == ".xyzn") return parse_xyz(bytes);
  throw Error(ErrorKind::parse, "unsupported point-cloud extension '" + ext + "'");
}

void write_points(const std::filesystem::path& path, const Points& positions, const Points* normals) {
  require(!normals || normals->rows() == positions.rows(), "write_points: normals must match positions");
  std::string s;
  const bool ply = lower_ext(path) == ".ply";
  if (ply) {
    s += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(positions.rows()) +
         "\nproperty double x\nproperty double y\nproperty double z\n";
    if (normals) s += "property double nx\nproperty double ny\nproperty double nz\n";
    s += "end_header\n";
  }
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (a) s += ' ';
      append(s, positions(i, a));
    }
    if (normals) {
      for (int a = 0; a < 3; ++a) {
        s += ' ';
        append(s, (*normals)(i, a));
      }
    }
    s += '\n';
  }
  write_file(path, s);
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  const std::string bytes = read_file(path);
  TriangleMesh mesh;
  std::vector<std::vector<std::int64_t>> faces;
  if (ext == ".ply") {
    PlyData ply = parse_ply(bytes);
    const auto n = static_cast<Eigen::Index>(ply.vertex_count);
    mesh.vertices.resize(n, 3);
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
      if (!ply.vertex.contains(names[a])) throw Error(ErrorKind::parse, "PLY mesh lacks vertex coordinates");
      for (Eigen::Index i = 0; i < n; ++i) mesh.vertices(i, a) = ply.vertex[names[a]][static_cast<size_t>(i)];
    }
    faces = std::move(ply.faces);
  } else if (ext == ".obj") {
    LineReader lines(bytes);
    std::string_view line;
    std::vector<Vec3> verts;
    while (lines.next(line)) {
      auto tok = split_ws(line);
      if (tok.empty()) continue;
      if (tok[0] == "v") {
        if (tok.size() < 4) parse_error("vertex needs 3 coordinates", lines.number());
        Vec3 v;
        for (int a = 0; a < 3; ++a) {
          if (!to_double(tok[static_cast<size_t>(a) + 1], v[a])) parse_error("bad vertex coordinate", lines.number());
        }
        verts.push_back(v);
      } else if (tok[0] == "f") {
        std::vector<std::int64_t> idx;
        for (size_t k = 1; k < tok.size(); ++k) {
          const auto ref = tok[k].substr(0, tok[k].find('/'));
          std::int64_t v = 0;
          auto [p, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), v);
          if (ec != std::errc() || v == 0) parse_error("bad face index", lines.number());
          idx.push_back(v > 0 ? v - 1 : static_cast<std::int64_t>(verts.size()) + v);
        }
        faces.push_back(std::move(idx));
      }
    }
    mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
  } else {
    throw Error(ErrorKind::parse, "unsupported mesh extension '" + ext + "'");
  }
  for (const auto& f : faces) {
    if (f.size() < 3) throw Error(ErrorKind::parse, "face with fewer than 3 vertices");
    for (auto v : f) {
      if (v < 0 || v >= mesh.vertex_count()) throw Error(ErrorKind::parse, "face index out of range");
    }
    for (size_t k = 1; k + 1 < f.size(); ++k) {
      mesh.triangles.push_back({static_cast<std::int32_t>(f[0]), static_cast<std::int32_t>(f[k]),
                                static_cast<std::int32_t>(f[k + 1])});
    }
  }
  check_finite(mesh.vertices, "mesh");
  return mesh;
}

void write_mesh_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::string s;
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    s += "v";
    for (int a = 0; a < 3; ++a) {
      s += ' ';
      append(s, mesh.vertices(i, a));
    }
    s += '\n';
  }
  for (const auto& t : mesh.triangles) {
    s += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' + std::to_string(t[2] + 1) + '\n';
  }
  write_file(path, s);
}

void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::string s = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(mesh.vertex_count()) +
                  "\nproperty double x\nproperty double y\nproperty double z\nelement face " +
                  std::to_string(mesh.triangle_count()) + "\nproperty list uchar int vertex_indices\nend_header\n";
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (a) s += ' ';
      append(s, mesh.vertices(i, a));
    }
    s += '\n';
  }
  for (const auto& t : mesh.triangles) {
    s += "3 " + std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + '\n';
  }
  write_file(path, s);
}

}  // namespace agr
