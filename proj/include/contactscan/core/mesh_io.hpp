#pragma once

// PLY reader/writer for meshes carrying an optional per-vertex "contact"
// property.
//
// Accepted header grammar (one statement per line):
//
//   ply
//   format (ascii | binary_little_endian) 1.0
//   { comment ... | obj_info ... }
//   element vertex <N>
//   property <scalar-type> x|y|z|contact|<other>      (other names skipped)
//   element face <M>
//   property list <count-type> <index-type> vertex_indices|vertex_index
//   { element <name> <K> with scalar or list properties }   (skipped)
//   end_header
//
// scalar-type: char int8 uchar uint8 short int16 ushort uint16 int int32 uint
// uint32 float float32 double float64. Every face must have exactly three
// indices. The writer always emits ASCII with double-precision coordinates in
// shortest round-trip form, so save -> load reproduces vertices bit-exactly.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "contactscan/core/error.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/util/format.hpp"

namespace contactscan
{
struct MeshWithContact
{
  TriMesh mesh;
  std::optional<ContactMap> contact;
};

namespace ply_detail
{
enum class Type
{
  i8, u8, i16, u16, i32, u32, f32, f64
};

inline Type parse_type(const std::string& s)
{
  if (s == "char" || s == "int8") return Type::i8;
  if (s == "uchar" || s == "uint8") return Type::u8;
  if (s == "short" || s == "int16") return Type::i16;
  if (s == "ushort" || s == "uint16") return Type::u16;
  if (s == "int" || s == "int32") return Type::i32;
  if (s == "uint" || s == "uint32") return Type::u32;
  if (s == "float" || s == "float32") return Type::f32;
  if (s == "double" || s == "float64") return Type::f64;
  throw InputError("PLY: unknown property type '" + s + "'");
}

inline std::size_t type_size(Type t)
{
  switch (t)
  {
    case Type::i8:
    case Type::u8:
      return 1;
    case Type::i16:
    case Type::u16:
      return 2;
    case Type::i32:
    case Type::u32:
    case Type::f32:
      return 4;
    case Type::f64:
      return 8;
  }
  return 0;
}

struct Property
{
  std::string name;
  Type type = Type::f32;
  bool is_list = false;
  Type count_type = Type::u8;
};

struct Element
{
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

// Little-endian host assumed for the binary variant.
inline double read_binary(std::istream& in, Type t)
{
  char buf[8];
  if (!in.read(buf, static_cast<std::streamsize>(type_size(t))))
  {
    throw InputError("PLY: unexpected end of binary data");
  }
  switch (t)
  {
    case Type::i8: { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
    case Type::u8: { std::uint8_t v; std::memcpy(&v, buf, 1); return v; }
    case Type::i16: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
    case Type::u16: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
    case Type::i32: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
    case Type::u32: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
    case Type::f32: { float v; std::memcpy(&v, buf, 4); return v; }
    case Type::f64: { double v; std::memcpy(&v, buf, 8); return v; }
  }
  return 0.0;
}

class TokenReader
{
public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  double next()
  {
    while (pos_ >= tokens_.size())
    {
      std::string line;
      if (!std::getline(in_, line))
      {
        throw InputError("PLY: unexpected end of ASCII data");
      }
      ++line_;
      std::istringstream ss(line);
      tokens_.clear();
      pos_ = 0;
      for (std::string tok; ss >> tok;)
      {
        tokens_.push_back(tok);
      }
    }
    try
    {
      return util::parse_double(tokens_[pos_++]);
    }
    catch (const std::invalid_argument&)
    {
      throw InputError("PLY: bad number '" + tokens_[pos_ - 1] + "' near data line " +
                       std::to_string(line_));
    }
  }

  // Elements are line-oriented in ASCII PLY; drop leftovers of the current line.
  void end_record()
  {
    if (pos_ != tokens_.size())
    {
      throw InputError("PLY: extra values on data line " + std::to_string(line_));
    }
  }

private:
  std::istream& in_;
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};
}  // namespace ply_detail

inline MeshWithContact read_ply(std::istream& in)
{
  using namespace ply_detail;
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
  {
    throw InputError("PLY: missing 'ply' magic");
  }
  bool binary = false;
  bool have_format = false;
  std::vector<Element> elements;
  bool ended = false;
  while (std::getline(in, line))
  {
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    std::istringstream ss(line);
    std::string keyword;
    ss >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info")
    {
      continue;
    }
    if (keyword == "format")
    {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii")
      {
        binary = false;
      }
      else if (fmt == "binary_little_endian")
      {
        binary = true;
      }
      else
      {
        throw InputError("PLY: unsupported format '" + fmt + "'");
      }
      have_format = true;
    }
    else if (keyword == "element")
    {
      Element e;
      long long count = -1;
      ss >> e.name >> count;
      if (e.name.empty() || count < 0)
      {
        throw InputError("PLY: malformed element line '" + line + "'");
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(e);
    }
    else if (keyword == "property")
    {
      if (elements.empty())
      {
        throw InputError("PLY: property before any element");
      }
      Property p;
      std::string type;
      ss >> type;
      if (type == "list")
      {
        std::string count_type, item_type;
        ss >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_type(count_type);
        p.type = parse_type(item_type);
      }
      else
      {
        p.type = parse_type(type);
        ss >> p.name;
      }
      if (p.name.empty())
      {
        throw InputError("PLY: malformed property line '" + line + "'");
      }
      elements.back().properties.push_back(p);
    }
    else if (keyword == "end_header")
    {
      ended = true;
      break;
    }
    else
    {
      throw InputError("PLY: unknown header keyword '" + keyword + "'");
    }
  }
  if (!ended || !have_format)
  {
    throw InputError("PLY: incomplete header");
  }

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<double> contact;
  bool has_contact = false;
  bool saw_vertex = false;
  bool saw_face = false;
  TokenReader ascii(in);
  auto read_value = [&](Type t) { return binary ? read_binary(in, t) : ascii.next(); };

  for (const Element& e : elements)
  {
    if (e.name == "vertex")
    {
      saw_vertex = true;
      int ix = -1, iy = -1, iz = -1, ic = -1;
      for (std::size_t p = 0; p < e.properties.size(); ++p)
      {
        const auto& name = e.properties[p].name;
        if (e.properties[p].is_list)
        {
          continue;
        }
        if (name == "x") ix = static_cast<int>(p);
        if (name == "y") iy = static_cast<int>(p);
        if (name == "z") iz = static_cast<int>(p);
        if (name == "contact") ic = static_cast<int>(p);
      }
      if (ix < 0 || iy < 0 || iz < 0)
      {
        throw InputError("PLY: vertex element lacks x/y/z");
      }
      has_contact = ic >= 0;
      vertices.resize(e.count);
      if (has_contact)
      {
        contact.resize(e.count);
      }
      std::vector<double> row(e.properties.size());
      for (std::size_t i = 0; i < e.count; ++i)
      {
        for (std::size_t p = 0; p < e.properties.size(); ++p)
        {
          const Property& prop = e.properties[p];
          if (prop.is_list)
          {
            const auto n = static_cast<long long>(read_value(prop.count_type));
            for (long long k = 0; k < n; ++k)
            {
              read_value(prop.type);
            }
          }
          else
          {
            row[p] = read_value(prop.type);
          }
        }
        if (!binary)
        {
          ascii.end_record();
        }
        vertices[i] = Vec3(row[ix], row[iy], row[iz]);
        if (has_contact)
        {
          contact[i] = row[ic];
        }
      }
    }
    else if (e.name == "face")
    {
      saw_face = true;
      faces.reserve(e.count);
      for (std::size_t i = 0; i < e.count; ++i)
      {
        for (const Property& prop : e.properties)
        {
          if (!prop.is_list)
          {
            read_value(prop.type);
            continue;
          }
          const auto n = static_cast<long long>(read_value(prop.count_type));
          const bool indices = prop.name == "vertex_indices" || prop.name == "vertex_index";
          if (indices && n != 3)
          {
            throw InputError("PLY: face " + std::to_string(i) + " has " + std::to_string(n) +
                             " vertices; only triangles are supported");
          }
          Face f{};
          for (long long k = 0; k < n; ++k)
          {
            const double v = read_value(prop.type);
            if (indices)
            {
              if (v < 0)
              {
                throw InputError("PLY: negative face index");
              }
              f[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(v);
            }
          }
          if (indices)
          {
            faces.push_back(f);
          }
        }
        if (!binary)
        {
          ascii.end_record();
        }
      }
    }
    else
    {
      for (std::size_t i = 0; i < e.count; ++i)
      {
        for (const Property& prop : e.properties)
        {
          const auto n = prop.is_list ? static_cast<long long>(read_value(prop.count_type)) : 1;
          for (long long k = 0; k < n; ++k)
          {
            read_value(prop.type);
          }
        }
        if (!binary)
        {
          ascii.end_record();
        }
      }
    }
  }
  if (!saw_vertex || !saw_face || vertices.empty() || faces.empty())
  {
    throw InputError("PLY: empty mesh");
  }
  MeshWithContact out;
  try
  {
    out.mesh = TriMesh(std::move(vertices), std::move(faces));
  }
  catch (const std::invalid_argument& e)
  {
    throw InputError(std::string("PLY: ") + e.what());
  }
  if (out.mesh.empty())
  {
    throw InputError("PLY: every face is degenerate");
  }
  if (has_contact)
  {
    try
    {
      out.contact = ContactMap(out.mesh, std::move(contact));
    }
    catch (const std::invalid_argument& e)
    {
      throw InputError(std::string("PLY: ") + e.what());
    }
  }
  return out;
}

inline MeshWithContact load_contact_mesh(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw InputError("cannot open mesh file '" + path + "'");
  }
  try
  {
    return read_ply(in);
  }
  catch (const InputError& e)
  {
    throw InputError(path + ": " + e.what());
  }
}

inline TriMesh load_mesh(const std::string& path) { return load_contact_mesh(path).mesh; }

inline void write_ply(std::ostream& out, const TriMesh& mesh, const ContactMap* contact = nullptr)
{
  if (contact)
  {
    contact->require_mesh(mesh);
  }
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.num_vertices() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (contact)
  {
    out << "property double contact\n";
  }
  out << "element face " << mesh.num_faces() << "\n";
  out << "property list uchar uint vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
  {
    const Vec3& v = mesh.vertices()[i];
    out << util::format_double(v.x()) << ' ' << util::format_double(v.y()) << ' '
        << util::format_double(v.z());
    if (contact)
    {
      out << ' ' << util::format_double((*contact)[i]);
    }
    out << '\n';
  }
  for (const Face& f : mesh.faces())
  {
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
}

inline void save_mesh(const std::string& path, const TriMesh& mesh,
                      const ContactMap* contact = nullptr)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw InputError("cannot write mesh file '" + path + "'");
  }
  write_ply(out, mesh, contact);
  if (!out)
  {
    throw InputError("failed writing mesh file '" + path + "'");
  }
}
}  // namespace contactscan
