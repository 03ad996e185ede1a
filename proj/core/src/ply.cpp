#include "qda/ply.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace qda {

namespace {

struct Property {
  std::string name;
  std::string type;
  bool is_list = false;
};

struct Element {
  std::string name;
  long count = 0;
  std::vector<Property> properties;
};

int scalar_size(const std::string& type) {
  if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
  if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
  if (type == "int" || type == "int32" || type == "uint" || type == "uint32" || type == "float" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

bool is_float_type(const std::string& type) {
  return type == "float" || type == "float32" || type == "double" || type == "float64";
}

bool is_uchar_type(const std::string& type) { return type == "uchar" || type == "uint8"; }

[[noreturn]] void fail(const std::filesystem::path& path, int line_no, const std::string& line,
                       const std::string& what) {
  throw PlyParseError(path.string() + ": line " + std::to_string(line_no) + " (\"" + line + "\"): " + what);
}

double read_binary_scalar(std::istream& in, const std::string& type) {
  unsigned char buf[8];
  const int sz = scalar_size(type);
  in.read(reinterpret_cast<char*>(buf), sz);
  if (!in) throw PlyParseError("unexpected end of binary vertex data");
  if (type == "char" || type == "int8") return static_cast<double>(static_cast<std::int8_t>(buf[0]));
  if (type == "uchar" || type == "uint8") return static_cast<double>(buf[0]);
  if (type == "short" || type == "int16") {
    std::int16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (type == "ushort" || type == "uint16") {
    std::uint16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (type == "int" || type == "int32") {
    std::int32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (type == "uint" || type == "uint32") {
    std::uint32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (type == "float" || type == "float32") {
    float v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  double v;
  std::memcpy(&v, buf, 8);
  return v;
}

}  // namespace

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PlyParseError("cannot open " + path.string());

  bool binary = false;
  std::vector<Element> elements;
  int line_no = 0;
  std::string line;

  auto getline_checked = [&]() {
    if (!std::getline(in, line)) fail(path, line_no + 1, "", "unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
  };

  getline_checked();
  if (line != "ply") fail(path, line_no, line, "missing 'ply' magic");

  bool have_format = false;
  for (;;) {
    getline_checked();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) continue;
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw PlyParseError(path.string() + ": unsupported format '" + fmt + "'");
      have_format = true;
      continue;
    }
    if (keyword == "element") {
      Element e;
      if (!(ls >> e.name >> e.count) || e.count < 0) fail(path, line_no, line, "malformed element declaration");
      elements.push_back(e);
      continue;
    }
    if (keyword == "property") {
      if (elements.empty()) fail(path, line_no, line, "property before any element");
      Property p;
      std::string first;
      ls >> first;
      if (first == "list") {
        std::string count_type, value_type;
        if (!(ls >> count_type >> value_type >> p.name)) fail(path, line_no, line, "malformed list property");
        p.is_list = true;
        p.type = value_type;
      } else {
        p.type = first;
        if (!(ls >> p.name)) fail(path, line_no, line, "malformed property declaration");
        if (scalar_size(p.type) == 0) fail(path, line_no, line, "unknown property type '" + p.type + "'");
      }
      elements.back().properties.push_back(p);
      continue;
    }
    if (keyword == "end_header") break;
    fail(path, line_no, line, "unrecognized header keyword '" + keyword + "'");
  }
  if (!have_format) throw PlyParseError(path.string() + ": header has no format line");

  const auto vertex_it =
      std::find_if(elements.begin(), elements.end(), [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) throw PlyParseError(path.string() + ": no vertex element in header");
  const Element& vertex = *vertex_it;
  if (vertex.count == 0) throw PlyParseError(path.string() + ": empty cloud (vertex count is 0)");

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
    const Property& p = vertex.properties[i];
    if (p.is_list)
      throw PlyParseError(path.string() + ": unsupported list property '" + p.name + "' in vertex element");
    const int idx = static_cast<int>(i);
    if (p.name == "x") ix = idx;
    if (p.name == "y") iy = idx;
    if (p.name == "z") iz = idx;
    if (p.name == "red" || p.name == "r") ir = idx;
    if (p.name == "green" || p.name == "g") ig = idx;
    if (p.name == "blue" || p.name == "b") ib = idx;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw PlyParseError(path.string() + ": vertex element lacks x/y/z properties");
  for (int idx : {ix, iy, iz})
    if (!is_float_type(vertex.properties[static_cast<std::size_t>(idx)].type))
      throw PlyParseError(path.string() + ": unsupported coordinate type '" +
                          vertex.properties[static_cast<std::size_t>(idx)].type + "'");
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
  if (has_color)
    for (int idx : {ir, ig, ib})
      if (!is_uchar_type(vertex.properties[static_cast<std::size_t>(idx)].type))
        throw PlyParseError(path.string() + ": unsupported color type '" +
                            vertex.properties[static_cast<std::size_t>(idx)].type + "'");

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(vertex.count));
  const std::size_t nprops = vertex.properties.size();
  std::vector<double> record(nprops, 0.0);

  auto push_point = [&]() {
    Point pt;
    pt.x = record[static_cast<std::size_t>(ix)];
    pt.y = record[static_cast<std::size_t>(iy)];
    pt.z = record[static_cast<std::size_t>(iz)];
    if (has_color) {
      pt.r = record[static_cast<std::size_t>(ir)];
      pt.g = record[static_cast<std::size_t>(ig)];
      pt.b = record[static_cast<std::size_t>(ib)];
    }
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z))
      throw PlyParseError(path.string() + ": non-finite coordinate in vertex " +
                          std::to_string(cloud.points.size()));
    cloud.points.push_back(pt);
  };

  if (!binary) {
    // Skip any ascii elements that precede the vertices, one line per record.
    for (auto it = elements.begin(); it != vertex_it; ++it)
      for (long k = 0; k < it->count; ++k) getline_checked();
    for (long v = 0; v < vertex.count; ++v) {
      if (!std::getline(in, line))
        throw PlyParseError(path.string() + ": header declares " + std::to_string(vertex.count) +
                            " vertices but body has " + std::to_string(v));
      ++line_no;
      std::istringstream ls(line);
      for (std::size_t p = 0; p < nprops; ++p)
        if (!(ls >> record[p])) fail(path, line_no, line, "vertex line has too few values");
      for (int idx : {ir, ig, ib})
        if (has_color && (record[static_cast<std::size_t>(idx)] < 0.0 || record[static_cast<std::size_t>(idx)] > 255.0))
          fail(path, line_no, line, "color value outside [0,255]");
      push_point();
    }
  } else {
    for (auto it = elements.begin(); it != vertex_it; ++it) {
      long bytes = 0;
      for (const Property& p : it->properties) {
        if (p.is_list)
          throw PlyParseError(path.string() + ": cannot skip binary element '" + it->name +
                              "' with list properties before the vertices");
        bytes += scalar_size(p.type);
      }
      in.seekg(static_cast<std::streamoff>(bytes) * it->count, std::ios::cur);
    }
    for (long v = 0; v < vertex.count; ++v) {
      for (std::size_t p = 0; p < nprops; ++p) {
        try {
          record[p] = read_binary_scalar(in, vertex.properties[p].type);
        } catch (const PlyParseError&) {
          throw PlyParseError(path.string() + ": header declares " + std::to_string(vertex.count) +
                              " vertices but body ends at " + std::to_string(v));
        }
      }
      push_point();
    }
  }
  return cloud;
}

PointCloud normalize_cloud(const PointCloud& pc) {
  if (pc.empty()) throw std::invalid_argument("normalize_cloud: empty cloud");
  double lo[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  double hi[3] = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  for (const Point& p : pc.points) {
    const double c[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  const double scale = extent > 0.0 ? 2.0 / extent : 1.0;
  const double center[3] = {(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, (lo[2] + hi[2]) / 2.0};
  PointCloud out;
  out.points.reserve(pc.size());
  for (const Point& p : pc.points) {
    Point q = p;
    q.x = (p.x - center[0]) * scale;
    q.y = (p.y - center[1]) * scale;
    q.z = (p.z - center[2]) * scale;
    out.points.push_back(q);
  }
  return out;
}

}  // namespace qda
