#include "planstitch/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "planstitch/error.hpp"

namespace planstitch {

void apply_rotation(Fragment& f, const Eigen::Matrix3d& rotation) {
  for (auto& p : f.points) p = rotation * p;
  for (auto& pl : f.planes) pl.normal = rotation * pl.normal;
  if (f.frame) {
    f.frame->axisX = rotation * f.frame->axisX;
    f.frame->axisY = rotation * f.frame->axisY;
    f.frame->axisZ = rotation * f.frame->axisZ;
  }
  if (f.cameraPose) {
    Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
    r.topLeftCorner<3, 3>() = rotation;
    f.cameraPose = r * (*f.cameraPose);
  }
  f.alignment = rotation * f.alignment;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

namespace {

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

struct PlyProperty {
  std::string name;
  ScalarType type{};
  bool isList = false;
  ScalarType countType{};
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

bool parse_scalar_type(std::string_view s, ScalarType& out) {
  if (s == "char" || s == "int8") out = ScalarType::Int8;
  else if (s == "uchar" || s == "uint8") out = ScalarType::UInt8;
  else if (s == "short" || s == "int16") out = ScalarType::Int16;
  else if (s == "ushort" || s == "uint16") out = ScalarType::UInt16;
  else if (s == "int" || s == "int32") out = ScalarType::Int32;
  else if (s == "uint" || s == "uint32") out = ScalarType::UInt32;
  else if (s == "float" || s == "float32") out = ScalarType::Float32;
  else if (s == "double" || s == "float64") out = ScalarType::Float64;
  else return false;
  return true;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    std::memcpy(&v, buf, sizeof(T));
  }
  return v;
}

double load_scalar(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::Int8: return load_le<std::int8_t>(p);
    case ScalarType::UInt8: return load_le<std::uint8_t>(p);
    case ScalarType::Int16: return load_le<std::int16_t>(p);
    case ScalarType::UInt16: return load_le<std::uint16_t>(p);
    case ScalarType::Int32: return load_le<std::int32_t>(p);
    case ScalarType::UInt32: return load_le<std::uint32_t>(p);
    case ScalarType::Float32: return load_le<float>(p);
    case ScalarType::Float64: return load_le<double>(p);
  }
  return 0.0;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  if (b != e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

class AsciiTokens {
 public:
  AsciiTokens(std::string_view data, std::size_t pos) : data_(data), pos_(pos) {}
  // Returns false at end of data.
  bool next(std::string_view& tok, std::size_t& at) {
    while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (pos_ >= data_.size()) return false;
    std::size_t j = pos_;
    while (j < data_.size() && !std::isspace(static_cast<unsigned char>(data_[j]))) ++j;
    tok = data_.substr(pos_, j - pos_);
    at = pos_;
    pos_ = j;
    return true;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_;
};

std::vector<Point3> parse_ply(std::string_view data) {
  std::size_t pos = 0;
  auto read_line = [&](std::string_view& line) {
    if (pos >= data.size()) return false;
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    line = data.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    return true;
  };

  std::string_view line;
  if (!read_line(line) || line != "ply") throw ParseError("missing 'ply' magic", 0);

  bool binary = false;
  bool haveFormat = false;
  bool haveEnd = false;
  std::vector<PlyElement> elements;
  while (!haveEnd) {
    const std::size_t lineStart = pos;
    if (!read_line(line)) throw ParseError("header not terminated by end_header", lineStart);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    const auto kw = toks[0];
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "end_header") {
      haveEnd = true;
    } else if (kw == "format") {
      if (toks.size() < 3) throw ParseError("malformed format line", lineStart);
      if (toks[1] == "ascii") binary = false;
      else if (toks[1] == "binary_little_endian") binary = true;
      else throw ParseError("unsupported PLY format '" + std::string(toks[1]) + "'", lineStart);
      haveFormat = true;
    } else if (kw == "element") {
      if (toks.size() != 3) throw ParseError("malformed element line", lineStart);
      PlyElement el;
      el.name = std::string(toks[1]);
      double n = 0;
      if (!parse_double(toks[2], n) || n < 0 || n != static_cast<double>(static_cast<std::size_t>(n))) {
        throw ParseError("bad element count", lineStart);
      }
      el.count = static_cast<std::size_t>(n);
      elements.push_back(std::move(el));
    } else if (kw == "property") {
      if (elements.empty()) throw ParseError("property before element", lineStart);
      PlyProperty prop;
      if (toks.size() == 5 && toks[1] == "list") {
        prop.isList = true;
        if (!parse_scalar_type(toks[2], prop.countType) || !parse_scalar_type(toks[3], prop.type)) {
          throw ParseError("unsupported list property type", lineStart);
        }
        prop.name = std::string(toks[4]);
      } else if (toks.size() == 3) {
        if (!parse_scalar_type(toks[1], prop.type)) {
          throw ParseError("unsupported property type '" + std::string(toks[1]) + "'", lineStart);
        }
        prop.name = std::string(toks[2]);
      } else {
        throw ParseError("malformed property line", lineStart);
      }
      elements.back().props.push_back(std::move(prop));
    } else {
      throw ParseError("unknown header keyword '" + std::string(kw) + "'", lineStart);
    }
  }
  if (!haveFormat) throw ParseError("missing format line", 0);

  const PlyElement* vertex = nullptr;
  for (const auto& el : elements) {
    if (el.name == "vertex") vertex = &el;
  }
  if (!vertex) throw ParseError("no vertex element", pos);
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < vertex->props.size(); ++i) {
    const auto& p = vertex->props[i];
    const int idx = static_cast<int>(i);
    if (p.name == "x") ix = idx;
    if (p.name == "y") iy = idx;
    if (p.name == "z") iz = idx;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("vertex element lacks x/y/z", pos);
  for (int i : {ix, iy, iz}) {
    if (vertex->props[i].isList) throw ParseError("vertex position cannot be a list", pos);
  }

  std::vector<Point3> points;
  points.reserve(vertex->count);
  double vals[3] = {0, 0, 0};

  if (binary) {
    for (const auto& el : elements) {
      const bool isVertex = &el == vertex;
      for (std::size_t n = 0; n < el.count; ++n) {
        for (std::size_t pi = 0; pi < el.props.size(); ++pi) {
          const auto& p = el.props[pi];
          std::size_t items = 1;
          if (p.isList) {
            const std::size_t cs = scalar_size(p.countType);
            if (pos + cs > data.size()) throw ParseError("truncated binary payload", pos);
            const double c = load_scalar(p.countType, data.data() + pos);
            if (c < 0) throw ParseError("negative list length", pos);
            items = static_cast<std::size_t>(c);
            pos += cs;
          }
          const std::size_t sz = scalar_size(p.type) * items;
          if (pos + sz > data.size()) throw ParseError("truncated binary payload", pos);
          if (isVertex) {
            const int idx = static_cast<int>(pi);
            if (idx == ix) vals[0] = load_scalar(p.type, data.data() + pos);
            if (idx == iy) vals[1] = load_scalar(p.type, data.data() + pos);
            if (idx == iz) vals[2] = load_scalar(p.type, data.data() + pos);
          }
          pos += sz;
        }
        if (isVertex) points.emplace_back(vals[0], vals[1], vals[2]);
      }
    }
  } else {
    AsciiTokens tokens(data, pos);
    std::string_view tok;
    std::size_t at = 0;
    auto next_number = [&](double& v) {
      if (!tokens.next(tok, at)) throw ParseError("truncated ascii payload", tokens.pos());
      if (!parse_double(tok, v)) throw ParseError("invalid number '" + std::string(tok) + "'", at);
    };
    for (const auto& el : elements) {
      const bool isVertex = &el == vertex;
      for (std::size_t n = 0; n < el.count; ++n) {
        for (std::size_t pi = 0; pi < el.props.size(); ++pi) {
          const auto& p = el.props[pi];
          double v = 0;
          if (p.isList) {
            next_number(v);
            if (v < 0) throw ParseError("negative list length", at);
            for (std::size_t k = 0; k < static_cast<std::size_t>(v); ++k) {
              double ignored;
              next_number(ignored);
            }
            continue;
          }
          next_number(v);
          if (isVertex) {
            const int idx = static_cast<int>(pi);
            if (idx == ix) vals[0] = v;
            if (idx == iy) vals[1] = v;
            if (idx == iz) vals[2] = v;
          }
        }
        if (isVertex) points.emplace_back(vals[0], vals[1], vals[2]);
      }
    }
  }
  for (const auto& p : points) {
    if (!p.allFinite()) throw ParseError("non-finite vertex position", pos);
  }
  return points;
}

std::vector<Point3> parse_xyz(std::string_view data) {
  std::vector<Point3> points;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(pos, end - pos);
    const std::size_t lineStart = pos;
    pos = end + 1;
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0].front() == '#') continue;
    if (toks.size() < 3) throw ParseError("xyz line needs 3 coordinates", lineStart);
    double v[3];
    for (int i = 0; i < 3; ++i) {
      if (!parse_double(toks[i], v[i]) || !std::isfinite(v[i])) {
        throw ParseError("invalid coordinate '" + std::string(toks[i]) + "'", lineStart);
      }
    }
    points.emplace_back(v[0], v[1], v[2]);
  }
  return points;
}

PointFormat format_from_extension(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply" || ext == ".PLY") return PointFormat::PlyAscii;
  if (ext == ".xyz" || ext == ".XYZ") return PointFormat::Xyz;
  throw Error("unsupported fragment extension: " + path.string());
}

}  // namespace

std::vector<Point3> parse_points(std::string_view data, PointFormat format) {
  if (format == PointFormat::Xyz) return parse_xyz(data);
  return parse_ply(data);
}

std::vector<Point3> read_points(const std::filesystem::path& path) {
  return parse_points(read_file(path), format_from_extension(path));
}

Fragment parse_fragment(const std::filesystem::path& path) {
  Fragment f;
  f.id = path.stem().string();
  f.points = read_points(path);
  auto cam = path;
  cam.replace_extension(".cam");
  if (std::filesystem::exists(cam)) f.cameraPose = read_pose(cam);
  return f;
}

std::string format_ply(std::span<const Point3> points, bool binary) {
  std::ostringstream out;
  out << "ply\n"
      << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "end_header\n";
  std::string s = out.str();
  if (binary) {
    s.reserve(s.size() + points.size() * 12);
    for (const auto& p : points) {
      for (int i = 0; i < 3; ++i) {
        const float v = static_cast<float>(p[i]);
        auto bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
      }
    }
  } else {
    std::ostringstream body;
    body.precision(9);
    for (const auto& p : points) {
      body << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' '
           << static_cast<float>(p.z()) << '\n';
    }
    s += body.str();
  }
  return s;
}

void write_ply(const std::filesystem::path& path, std::span<const Point3> points, bool binary) {
  write_file(path, format_ply(points, binary));
}

Eigen::Matrix4d parse_pose(std::string_view text) {
  const auto toks = split_ws(text);
  if (toks.size() != 16) throw ParseError("pose needs 16 numbers, got " + std::to_string(toks.size()), 0);
  Eigen::Matrix4d m;
  for (int i = 0; i < 16; ++i) {
    double v;
    if (!parse_double(toks[i], v)) {
      throw ParseError("invalid pose entry", static_cast<std::size_t>(toks[i].data() - text.data()));
    }
    m(i / 4, i % 4) = v;
  }
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  const bool rigid = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-4 &&
                     std::abs(r.determinant() - 1.0) < 1e-4 && m(3, 0) == 0 && m(3, 1) == 0 &&
                     m(3, 2) == 0 && m(3, 3) == 1;
  if (!rigid) throw ParseError("pose is not a rigid transform", 0);
  return m;
}

Eigen::Matrix4d read_pose(const std::filesystem::path& path) { return parse_pose(read_file(path)); }

std::string format_pose(const Eigen::Matrix4d& m) {
  std::ostringstream out;
  out.precision(17);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out << m(r, c) << (c == 3 ? '\n' : ' ');
  }
  return out.str();
}

}  // namespace planstitch
