#include "pcar/ply_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace pcar {

static_assert(std::endian::native == std::endian::little,
              "binary PLY path assumes a little-endian host");

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw PlyError("ply: line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail_byte(std::size_t offset, const std::string& what) {
  throw PlyError("ply: byte offset " + std::to_string(offset) + ": " + what);
}

std::optional<PlyType> parse_type(const std::string& tok) {
  if (tok == "char" || tok == "int8") return PlyType::Char;
  if (tok == "uchar" || tok == "uint8") return PlyType::UChar;
  if (tok == "short" || tok == "int16") return PlyType::Short;
  if (tok == "ushort" || tok == "uint16") return PlyType::UShort;
  if (tok == "int" || tok == "int32") return PlyType::Int;
  if (tok == "uint" || tok == "uint32") return PlyType::UInt;
  if (tok == "float" || tok == "float32") return PlyType::Float;
  if (tok == "double" || tok == "float64") return PlyType::Double;
  return std::nullopt;
}

int geom_axis_of(const std::string& name) {
  if (name == "x") return 0;
  if (name == "y") return 1;
  if (name == "z") return 2;
  return -1;
}

struct HeaderProp {
  std::string name;
  PlyType type;
};

struct Header {
  PlyFormat format = PlyFormat::Ascii;
  std::size_t vertex_count = 0;
  std::vector<HeaderProp> vertex_props;
  std::vector<std::string> comments;
  std::size_t body_start = 0;   // byte offset of first data byte
  std::size_t body_line = 0;    // 1-based line number of first data line
};

Header parse_header(std::istream& in) {
  Header h;
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") fail_line(1, "missing 'ply' magic");
  bool have_format = false;
  bool in_vertex_element = false;
  bool seen_vertex_element = false;

  while (true) {
    if (!next_line()) fail_line(line_no, "unexpected end of header");
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") {
      // store the text only; the writer restores the keyword
      h.comments.push_back(line.size() > 8 ? line.substr(8) : std::string());
    } else if (tok == "obj_info") {
      h.comments.push_back(line);  // kept whole to round-trip verbatim
    } else if (tok == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (ver != "1.0") fail_line(line_no, "unsupported PLY version '" + ver + "'");
      if (fmt == "ascii") {
        h.format = PlyFormat::Ascii;
      } else if (fmt == "binary_little_endian") {
        h.format = PlyFormat::BinaryLittleEndian;
      } else if (fmt == "binary_big_endian") {
        fail_line(line_no, "binary_big_endian is not supported");
      } else {
        fail_line(line_no, "unknown format '" + fmt + "'");
      }
      have_format = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        if (seen_vertex_element) fail_line(line_no, "duplicate vertex element");
        seen_vertex_element = true;
        in_vertex_element = true;
        h.vertex_count = count;
      } else {
        if (count > 0) {
          fail_line(line_no, "unsupported element '" + name +
                                 "' (only vertex data is handled)");
        }
        in_vertex_element = false;
      }
    } else if (tok == "property") {
      std::string t1;
      ls >> t1;
      if (t1 == "list") {
        fail_line(line_no, "list properties are not supported in the vertex element");
      }
      std::string pname;
      ls >> pname;
      auto pt = parse_type(t1);
      if (!pt) fail_line(line_no, "unknown property type '" + t1 + "'");
      if (pname.empty()) fail_line(line_no, "property without a name");
      if (in_vertex_element) {
        h.vertex_props.push_back({pname, *pt});
      }
      // properties of zero-count elements are ignored
    } else if (tok == "end_header") {
      break;
    } else if (tok.empty()) {
      // blank header line; ignore
    } else {
      fail_line(line_no, "unrecognized header keyword '" + tok + "'");
    }
  }

  if (!have_format) fail_line(line_no, "header has no format line");
  if (!seen_vertex_element) fail_line(line_no, "header has no vertex element");
  h.body_start = offset;
  h.body_line = line_no + 1;
  return h;
}

double decode_scalar(const unsigned char* p, PlyType t) {
  switch (t) {
    case PlyType::Char: return static_cast<double>(static_cast<std::int8_t>(*p));
    case PlyType::UChar: return static_cast<double>(*p);
    case PlyType::Short: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case PlyType::UShort: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case PlyType::Int: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PlyType::UInt: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PlyType::Float: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PlyType::Double: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  return 0.0;
}

bool representable(double v, PlyType t) {
  if (!std::isfinite(v)) return false;
  switch (t) {
    case PlyType::Char: return v == std::floor(v) && v >= -128 && v <= 127;
    case PlyType::UChar: return v == std::floor(v) && v >= 0 && v <= 255;
    case PlyType::Short: return v == std::floor(v) && v >= -32768 && v <= 32767;
    case PlyType::UShort: return v == std::floor(v) && v >= 0 && v <= 65535;
    case PlyType::Int:
      return v == std::floor(v) && v >= -2147483648.0 && v <= 2147483647.0;
    case PlyType::UInt: return v == std::floor(v) && v >= 0 && v <= 4294967295.0;
    case PlyType::Float: return static_cast<double>(static_cast<float>(v)) == v;
    case PlyType::Double: return true;
  }
  return false;
}

void encode_scalar(double v, PlyType t, std::string& out) {
  unsigned char buf[8];
  std::size_t n = ply_type_size(t);
  switch (t) {
    case PlyType::Char: {
      auto s = static_cast<std::int8_t>(v);
      std::memcpy(buf, &s, 1);
      break;
    }
    case PlyType::UChar: {
      auto s = static_cast<std::uint8_t>(v);
      std::memcpy(buf, &s, 1);
      break;
    }
    case PlyType::Short: {
      auto s = static_cast<std::int16_t>(v);
      std::memcpy(buf, &s, 2);
      break;
    }
    case PlyType::UShort: {
      auto s = static_cast<std::uint16_t>(v);
      std::memcpy(buf, &s, 2);
      break;
    }
    case PlyType::Int: {
      auto s = static_cast<std::int32_t>(v);
      std::memcpy(buf, &s, 4);
      break;
    }
    case PlyType::UInt: {
      auto s = static_cast<std::uint32_t>(v);
      std::memcpy(buf, &s, 4);
      break;
    }
    case PlyType::Float: {
      auto s = static_cast<float>(v);
      std::memcpy(buf, &s, 4);
      break;
    }
    case PlyType::Double: {
      std::memcpy(buf, &v, 8);
      break;
    }
  }
  out.append(reinterpret_cast<const char*>(buf), n);
}

// Shortest text form that round-trips through from_chars.
void format_scalar(double v, PlyType t, std::string& out) {
  char buf[40];
  if (t == PlyType::Float || t == PlyType::Double) {
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, r.ptr);
  } else {
    auto r = std::to_chars(buf, buf + sizeof(buf), static_cast<std::int64_t>(v));
    out.append(buf, r.ptr);
  }
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PlyError("ply: cannot open '" + path.string() + "'");

  Header h = parse_header(in);

  PointCloud cloud;
  cloud.comments = h.comments;
  cloud.positions.resize(h.vertex_count);

  // Classify properties and pin the geometry type.
  int axis_seen[3] = {0, 0, 0};
  PlyType geom_type = PlyType::Double;
  bool geom_type_set = false;
  for (const HeaderProp& p : h.vertex_props) {
    const int axis = geom_axis_of(p.name);
    PlyVertexLayout::Prop lp;
    lp.name = p.name;
    lp.type = p.type;
    lp.geom_axis = axis;
    if (axis >= 0) {
      ++axis_seen[axis];
      if (p.type != PlyType::Float && p.type != PlyType::Double &&
          p.type != PlyType::Int) {
        fail_line(h.body_line - 1, "geometry property '" + p.name +
                                       "' must be float32, float64 or int32");
      }
      if (geom_type_set && geom_type != p.type) {
        fail_line(h.body_line - 1, "x,y,z must share one scalar type");
      }
      geom_type = p.type;
      geom_type_set = true;
    } else {
      lp.payload_column = static_cast<int>(cloud.payload.size());
      PlyColumn col;
      col.name = p.name;
      col.type = p.type;
      col.values.resize(h.vertex_count);
      cloud.payload.push_back(std::move(col));
    }
    cloud.layout.props.push_back(std::move(lp));
  }
  if (axis_seen[0] != 1 || axis_seen[1] != 1 || axis_seen[2] != 1) {
    fail_line(h.body_line - 1, "vertex element must declare x, y and z exactly once");
  }
  cloud.geometry_type = geom_type;

  if (h.format == PlyFormat::Ascii) {
    std::string line;
    std::size_t line_no = h.body_line - 1;
    for (std::size_t i = 0; i < h.vertex_count; ++i) {
      if (!std::getline(in, line)) fail_line(line_no + 1, "unexpected end of file");
      ++line_no;
      const char* ptr = line.data();
      const char* end = line.data() + line.size();
      for (const auto& lp : cloud.layout.props) {
        while (ptr < end && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
        if (ptr >= end) fail_line(line_no, "missing value for property '" + lp.name + "'");
        double v = 0.0;
        std::from_chars_result r{};
        if (lp.type == PlyType::Float || lp.type == PlyType::Double) {
          r = std::from_chars(ptr, end, v);
        } else {
          std::int64_t iv = 0;
          r = std::from_chars(ptr, end, iv);
          v = static_cast<double>(iv);
        }
        if (r.ec != std::errc{}) {
          fail_line(line_no, "cannot parse value for property '" + lp.name + "'");
        }
        ptr = r.ptr;
        if (lp.geom_axis >= 0) {
          cloud.positions[i][lp.geom_axis] = v;
        } else {
          cloud.payload[lp.payload_column].values[i] = v;
        }
      }
    }
  } else {
    std::size_t row_size = 0;
    for (const auto& lp : cloud.layout.props) row_size += ply_type_size(lp.type);
    std::vector<unsigned char> row(row_size);
    std::size_t offset = h.body_start;
    for (std::size_t i = 0; i < h.vertex_count; ++i) {
      in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row_size));
      if (static_cast<std::size_t>(in.gcount()) != row_size) {
        fail_byte(offset, "unexpected end of file in vertex data");
      }
      const unsigned char* p = row.data();
      for (const auto& lp : cloud.layout.props) {
        const double v = decode_scalar(p, lp.type);
        p += ply_type_size(lp.type);
        if (lp.geom_axis >= 0) {
          cloud.positions[i][lp.geom_axis] = v;
        } else {
          cloud.payload[lp.payload_column].values[i] = v;
        }
      }
      offset += row_size;
    }
  }

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw PlyError("ply: non-finite coordinate at vertex " + std::to_string(i));
    }
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format) {
  if (cloud.empty()) throw PlyError("ply: refusing to write an empty cloud");

  // Default layout when the cloud was built programmatically.
  PlyVertexLayout layout = cloud.layout;
  if (layout.props.empty()) {
    for (int a = 0; a < 3; ++a) {
      PlyVertexLayout::Prop lp;
      lp.name = a == 0 ? "x" : (a == 1 ? "y" : "z");
      lp.type = cloud.geometry_type;
      lp.geom_axis = a;
      layout.props.push_back(lp);
    }
  }

  // Promote geometry to float64 if any coordinate no longer fits the
  // declared type (mean aggregation produces fractional voxel positions).
  PlyType geom_type = cloud.geometry_type;
  if (geom_type != PlyType::Double) {
    for (const Vec3& p : cloud.positions) {
      if (!representable(p.x, geom_type) || !representable(p.y, geom_type) ||
          !representable(p.z, geom_type)) {
        geom_type = PlyType::Double;
        break;
      }
    }
  }

  std::string out;
  out.reserve(256 + cloud.size() * 32);
  out += "ply\n";
  out += format == PlyFormat::Ascii ? "format ascii 1.0\n"
                                    : "format binary_little_endian 1.0\n";
  for (const std::string& c : cloud.comments) {
    out += c.rfind("obj_info", 0) == 0 ? c + "\n" : "comment " + c + "\n";
  }
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  for (const auto& lp : layout.props) {
    const PlyType t = lp.geom_axis >= 0 ? geom_type : lp.type;
    out += "property ";
    out += ply_type_name(t);
    out += " " + lp.name + "\n";
  }
  out += "end_header\n";

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t pi = 0; pi < layout.props.size(); ++pi) {
      const auto& lp = layout.props[pi];
      double v;
      PlyType t;
      if (lp.geom_axis >= 0) {
        v = cloud.positions[i][lp.geom_axis];
        t = geom_type;
      } else {
        v = cloud.payload[lp.payload_column].values[i];
        t = lp.type;
        if (!representable(v, t)) {
          throw PlyError("ply: payload value " + std::to_string(v) +
                         " does not fit declared type of '" + lp.name + "'");
        }
      }
      if (format == PlyFormat::Ascii) {
        if (pi > 0) out += ' ';
        format_scalar(v, t, out);
      } else {
        encode_scalar(v, t, out);
      }
    }
    if (format == PlyFormat::Ascii) out += '\n';
  }

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw PlyError("ply: cannot open '" + tmp.string() + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw PlyError("ply: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pcar
