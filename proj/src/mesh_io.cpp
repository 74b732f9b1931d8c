#include "texmesh/mesh_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "texmesh/errors.hpp"
#include "texmesh/image_io.hpp"

namespace texmesh {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const auto b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

double parse_double(std::string_view tok, std::size_t line) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw ParseError(line, fmt::format("invalid number '{}'", tok));
  return v;
}

long parse_index(std::string_view tok, std::size_t line) {
  long v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size() || v == 0)
    throw ParseError(line, fmt::format("invalid index '{}'", tok));
  return v;
}

// 1-based or negative OBJ index -> 0-based, checked against `count`.
std::uint32_t resolve_index(long raw, std::size_t count, std::size_t line, const char* what) {
  const long idx = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
  if (idx < 0 || static_cast<std::size_t>(idx) >= count)
    throw ValidationError(fmt::format("line {}: {} index {} out of range (have {})", line, what, raw, count));
  return static_cast<std::uint32_t>(idx);
}

struct MaterialDef {
  std::string name;
  std::string diffuse_map;
};

std::vector<MaterialDef> parse_mtl(std::string_view text) {
  std::vector<MaterialDef> mats;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto sp = line.find_first_of(" \t");
    const auto key = line.substr(0, sp);
    const auto rest = sp == std::string_view::npos ? std::string_view{} : trim(line.substr(sp));
    if (key == "newmtl") {
      if (rest.empty()) throw ParseError(line_no, "newmtl without a name");
      mats.push_back({std::string(rest), {}});
    } else if (key == "map_Kd") {
      if (mats.empty()) throw ParseError(line_no, "map_Kd before newmtl");
      if (rest.empty()) throw ParseError(line_no, "map_Kd without a file name");
      // Options (-s, -o, ...) precede the file name; take the last token then.
      mats.back().diffuse_map = std::string(rest.front() == '-' ? split_ws(rest).back() : rest);
    }
  }
  return mats;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

AssetResolver file_resolver(const std::filesystem::path& base_dir) {
  AssetResolver r;
  r.read_material_library = [base_dir](const std::string& name) {
    std::ifstream in(base_dir / name, std::ios::binary);
    if (!in) throw ResolutionError(name, "cannot open material library '" + name + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.load_texture = [base_dir](const std::string& name) {
    const auto path = base_dir / name;
    if (!std::filesystem::exists(path))
      throw ResolutionError(name, "missing texture '" + name + "'");
    try {
      return load_image(path);
    } catch (const CodecError& e) {
      throw ResolutionError(name, "cannot decode texture '" + name + "': " + e.what());
    }
  };
  return r;
}

TexturedMesh parse_obj(std::string_view text, const AssetResolver* resolver) {
  TexturedMesh mesh;
  std::vector<Vec2> uvs;
  std::size_t normal_count = 0;
  std::vector<MaterialDef> library;
  std::unordered_map<std::string, std::uint32_t> material_index;
  std::vector<std::string> used_materials;
  constexpr std::uint32_t kUnassigned = 0xffffffffu;
  std::optional<std::uint32_t> current_material;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto tok = split_ws(line);
    const auto key = tok[0];

    if (key == "v") {
      if (tok.size() < 4) throw ParseError(line_no, "vertex record needs 3 coordinates");
      mesh.vertices.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no),
                                 parse_double(tok[3], line_no));
    } else if (key == "vt") {
      if (tok.size() < 3) throw ParseError(line_no, "texture coordinate record needs 2 values");
      uvs.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no));
    } else if (key == "vn") {
      if (tok.size() < 4) throw ParseError(line_no, "normal record needs 3 values");
      for (std::size_t i = 1; i < 4; ++i) parse_double(tok[i], line_no);
      ++normal_count;
    } else if (key == "f") {
      if (tok.size() < 4) throw ParseError(line_no, "face needs at least 3 corners");
      std::vector<std::uint32_t> vi;
      std::vector<Vec2> corner_uv;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto c = tok[i];
        const auto s1 = c.find('/');
        vi.push_back(resolve_index(parse_index(c.substr(0, s1), line_no), mesh.vertices.size(), line_no, "vertex"));
        Vec2 uv = Vec2::Zero();
        if (s1 != std::string_view::npos) {
          const auto rest = c.substr(s1 + 1);
          const auto s2 = rest.find('/');
          const auto vt = rest.substr(0, s2);
          if (!vt.empty()) uv = uvs[resolve_index(parse_index(vt, line_no), uvs.size(), line_no, "texture coordinate")];
          if (s2 != std::string_view::npos) {
            const auto vn = rest.substr(s2 + 1);
            if (!vn.empty()) resolve_index(parse_index(vn, line_no), normal_count, line_no, "normal");
          }
        }
        corner_uv.push_back(uv);
      }
      for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
        Triangle tri{vi[0], vi[k], vi[k + 1]};
        if (tri[0] == tri[1] && tri[1] == tri[2])
          throw ValidationError(fmt::format("line {}: degenerate face with identical corners", line_no));
        mesh.triangles.push_back(tri);
        mesh.corner_uvs.push_back({corner_uv[0], corner_uv[k], corner_uv[k + 1]});
        mesh.material_of_triangle.push_back(current_material.value_or(kUnassigned));
      }
    } else if (key == "mtllib") {
      if (tok.size() < 2) throw ParseError(line_no, "mtllib without a file name");
      if (resolver && resolver->read_material_library) {
        for (std::size_t i = 1; i < tok.size(); ++i) {
          auto defs = parse_mtl(resolver->read_material_library(std::string(tok[i])));
          library.insert(library.end(), defs.begin(), defs.end());
        }
      }
    } else if (key == "usemtl") {
      if (tok.size() < 2) throw ParseError(line_no, "usemtl without a name");
      const std::string name(trim(line.substr(6)));
      auto [it, inserted] = material_index.emplace(name, static_cast<std::uint32_t>(used_materials.size()));
      if (inserted) used_materials.push_back(name);
      current_material = it->second;
    } else if (key == "o" || key == "g" || key == "s") {
      // grouping carries no geometry
    } else {
      throw ParseError(line_no, fmt::format("unsupported record '{}'", key));
    }
  }

  // faces before any usemtl take the first library material
  if (std::find(mesh.material_of_triangle.begin(), mesh.material_of_triangle.end(), kUnassigned) !=
      mesh.material_of_triangle.end()) {
    std::uint32_t fallback = 0;
    if (!library.empty()) {
      auto [it, inserted] = material_index.emplace(library.front().name, static_cast<std::uint32_t>(used_materials.size()));
      if (inserted) used_materials.push_back(library.front().name);
      fallback = it->second;
    }
    for (auto& m : mesh.material_of_triangle)
      if (m == kUnassigned) m = fallback;
  }

  if (resolver && resolver->load_texture && !library.empty()) {
    for (const auto& name : used_materials) {
      auto def = std::find_if(library.begin(), library.end(), [&](const MaterialDef& m) { return m.name == name; });
      if (def == library.end()) throw ResolutionError(name, "material '" + name + "' not defined in any mtllib");
      if (def->diffuse_map.empty()) throw ResolutionError(name, "material '" + name + "' has no map_Kd texture");
      mesh.textures.push_back(resolver->load_texture(def->diffuse_map));
      mesh.material_names.push_back(name);
      mesh.texture_files.push_back(def->diffuse_map);
    }
  } else {
    mesh.material_names = used_materials;
  }

  mesh.validate();
  return mesh;
}

TexturedMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResolutionError(path.string(), "cannot open mesh '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto resolver = file_resolver(path.parent_path());
  return parse_obj(ss.str(), &resolver);
}

std::string write_obj(const TexturedMesh& mesh, const std::string& mtllib_name) {
  std::string out;
  out.reserve(mesh.vertices.size() * 48 + mesh.triangles.size() * 40);
  const bool textured = !mesh.textures.empty();
  if (textured && !mtllib_name.empty()) out += "mtllib " + mtllib_name + "\n";
  for (const auto& v : mesh.vertices)
    out += "v " + format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z()) + "\n";

  std::map<std::pair<double, double>, std::size_t> uv_ids;
  std::vector<std::array<std::size_t, 3>> corner_ids(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int c = 0; c < 3; ++c) {
      const auto& uv = mesh.corner_uvs[t][c];
      auto [it, inserted] = uv_ids.emplace(std::make_pair(uv.x(), uv.y()), uv_ids.size() + 1);
      if (inserted) out += "vt " + format_double(uv.x()) + " " + format_double(uv.y()) + "\n";
      corner_ids[t][c] = it->second;
    }
  }

  std::optional<std::uint32_t> current;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (textured && current != mesh.material_of_triangle[t]) {
      current = mesh.material_of_triangle[t];
      const auto m = *current;
      out += "usemtl " + (m < mesh.material_names.size() ? mesh.material_names[m] : "material_" + std::to_string(m)) + "\n";
    }
    const auto& tri = mesh.triangles[t];
    out += fmt::format("f {}/{} {}/{} {}/{}\n", tri[0] + 1, corner_ids[t][0], tri[1] + 1, corner_ids[t][1],
                       tri[2] + 1, corner_ids[t][2]);
  }
  return out;
}

std::string write_mtl(const TexturedMesh& mesh) {
  std::string out;
  for (std::size_t i = 0; i < mesh.textures.size(); ++i) {
    const auto name = i < mesh.material_names.size() ? mesh.material_names[i] : "material_" + std::to_string(i);
    const auto file = i < mesh.texture_files.size() ? mesh.texture_files[i] : "texture_" + std::to_string(i) + ".png";
    out += "newmtl " + name + "\nKd 1 1 1\nmap_Kd " + file + "\n\n";
  }
  return out;
}

void save_textured_obj(const TexturedMesh& mesh, const std::filesystem::path& obj_path) {
  auto copy = mesh;
  const auto dir = obj_path.parent_path();
  const auto stem = obj_path.stem().string();
  copy.material_names.resize(copy.textures.size());
  copy.texture_files.resize(copy.textures.size());
  for (std::size_t i = 0; i < copy.textures.size(); ++i) {
    if (copy.material_names[i].empty()) copy.material_names[i] = "material_" + std::to_string(i);
    copy.texture_files[i] = fmt::format("{}_tex{}.png", stem, i);
    save_png(copy.textures[i], dir / copy.texture_files[i]);
  }
  const std::string mtl_name = copy.textures.empty() ? "" : stem + ".mtl";
  if (!mtl_name.empty()) {
    const auto mtl = write_mtl(copy);
    write_file_bytes(dir / mtl_name, {reinterpret_cast<const std::uint8_t*>(mtl.data()), mtl.size()});
  }
  const auto obj = write_obj(copy, mtl_name);
  write_file_bytes(obj_path, {reinterpret_cast<const std::uint8_t*>(obj.data()), obj.size()});
}

}  // namespace texmesh
