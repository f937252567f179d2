#include "carloam/io/ply.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

namespace carloam {
namespace {

struct Property {
  std::string name;
  int size = 0;
  bool is_float = false;   // float32
  bool is_double = false;  // float64
  bool is_uint8 = false;
};

int type_size(const std::string& t) {
  if (t == "char" || t == "int8" || t == "uchar" || t == "uint8") return 1;
  if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") return 2;
  if (t == "int" || t == "int32" || t == "uint" || t == "uint32") return 4;
  if (t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double decode(const char* p, const Property& prop) {
  if (prop.is_float) {
    float v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (prop.is_double) {
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  if (prop.is_uint8) return static_cast<unsigned char>(*p);
  return 0.0;  // integer property we do not consume
}

Scan parse_text_rows(std::istream& in) {
  Scan scan;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    Point p;
    if (!(row >> p.position.x() >> p.position.y() >> p.position.z() >> p.intensity))
      throw MalformedCloud("text cloud row does not parse: " + line);
    scan.points.push_back(p);
  }
  return scan;
}

}  // namespace

Scan read_ply_scan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open point cloud: " + path);

  std::string magic;
  std::getline(in, magic);
  if (!magic.starts_with("ply")) {
    in.clear();
    in.seekg(0);
    return parse_text_rows(in);
  }

  bool binary = false;
  std::size_t count = 0;
  std::vector<Property> props;
  bool in_vertex = false;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "end_header") break;
    if (tok == "comment" || tok == "obj_info") continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt == "ascii") binary = false;
      else throw MalformedCloud("unsupported PLY format: " + fmt);
    } else if (tok == "element") {
      std::string name;
      std::size_t cnt = 0;
      ls >> name >> cnt;
      in_vertex = (name == "vertex");
      if (in_vertex) count = cnt;  // data of later elements is simply not read
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      if (type == "list") throw MalformedCloud("list properties unsupported in vertex element");
      ls >> name;
      Property p;
      p.name = name;
      p.size = type_size(type);
      if (p.size == 0) throw MalformedCloud("unknown PLY property type: " + type);
      p.is_float = (type == "float" || type == "float32");
      p.is_double = (type == "double" || type == "float64");
      p.is_uint8 = (type == "uchar" || type == "uint8");
      props.push_back(p);
    }
  }
  if (props.empty()) throw MalformedCloud("PLY header without vertex properties: " + path);

  int stride = 0;
  int off_x = -1, off_y = -1, off_z = -1, off_i = -1, off_t = -1;
  int off_r = -1, off_g = -1, off_b = -1;
  int ix = -1, iy = -1, iz = -1, ii = -1, it = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t k = 0; k < props.size(); ++k) {
    const auto& p = props[k];
    const int off = stride;
    if (p.name == "x") { off_x = off; ix = static_cast<int>(k); }
    else if (p.name == "y") { off_y = off; iy = static_cast<int>(k); }
    else if (p.name == "z") { off_z = off; iz = static_cast<int>(k); }
    else if (p.name == "intensity") { off_i = off; ii = static_cast<int>(k); }
    else if (p.name == "time") { off_t = off; it = static_cast<int>(k); }
    else if (p.name == "red") { off_r = off; ir = static_cast<int>(k); }
    else if (p.name == "green") { off_g = off; ig = static_cast<int>(k); }
    else if (p.name == "blue") { off_b = off; ib = static_cast<int>(k); }
    stride += p.size;
  }
  if (off_x < 0 || off_y < 0 || off_z < 0)
    throw MalformedCloud("PLY vertex element lacks x/y/z: " + path);

  Scan scan;
  scan.points.resize(count);
  if (binary) {
    std::vector<char> row(stride);
    for (std::size_t n = 0; n < count; ++n) {
      if (!in.read(row.data(), stride))
        throw MalformedCloud("PLY truncated at vertex " + std::to_string(n));
      Point& pt = scan.points[n];
      pt.position.x() = decode(row.data() + off_x, props[ix]);
      pt.position.y() = decode(row.data() + off_y, props[iy]);
      pt.position.z() = decode(row.data() + off_z, props[iz]);
      pt.intensity = off_i >= 0 ? decode(row.data() + off_i, props[ii]) : 1.0;
      if (off_t >= 0) pt.time = decode(row.data() + off_t, props[it]);
      if (off_r >= 0 && off_g >= 0 && off_b >= 0) {
        pt.color = RgbColor{static_cast<std::uint8_t>(decode(row.data() + off_r, props[ir])),
                            static_cast<std::uint8_t>(decode(row.data() + off_g, props[ig])),
                            static_cast<std::uint8_t>(decode(row.data() + off_b, props[ib]))};
      }
    }
  } else {
    for (std::size_t n = 0; n < count; ++n) {
      std::vector<double> vals(props.size());
      for (std::size_t k = 0; k < props.size(); ++k) {
        if (!(in >> vals[k]))
          throw MalformedCloud("ascii PLY truncated at vertex " + std::to_string(n));
      }
      Point& pt = scan.points[n];
      pt.position = Vec3(vals[ix], vals[iy], vals[iz]);
      pt.intensity = ii >= 0 ? vals[ii] : 1.0;
      if (it >= 0) pt.time = vals[it];
      if (ir >= 0 && ig >= 0 && ib >= 0)
        pt.color = RgbColor{static_cast<std::uint8_t>(vals[ir]),
                            static_cast<std::uint8_t>(vals[ig]),
                            static_cast<std::uint8_t>(vals[ib])};
    }
  }
  return scan;
}

void write_ply_scan(const std::string& path, const Scan& scan) {
  bool with_time = !scan.points.empty();
  for (const auto& p : scan.points) with_time = with_time && p.time.has_value();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write point cloud: " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << scan.points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property float intensity\n";
  if (with_time) out << "property double time\n";
  out << "end_header\n";
  for (const auto& p : scan.points) {
    const float row[4] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                          static_cast<float>(p.position.z()), static_cast<float>(p.intensity)};
    out.write(reinterpret_cast<const char*>(row), sizeof(row));
    if (with_time) {
      const double t = *p.time;
      out.write(reinterpret_cast<const char*>(&t), sizeof(t));
    }
  }
}

void write_ply_map(const std::string& path, const std::vector<MapPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write map: " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  for (const auto& p : points) {
    const float xyz[3] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                          static_cast<float>(p.position.z())};
    const RgbColor c = p.color.value_or(RgbColor{255, 255, 255});
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    const std::uint8_t rgb[3] = {c.r, c.g, c.b};
    out.write(reinterpret_cast<const char*>(rgb), sizeof(rgb));
  }
}

}  // namespace carloam
