#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "texmesh/mesh.hpp"

namespace texmesh {

/// Resolves names referenced by an OBJ file. Both callbacks throw
/// ResolutionError when the named resource is missing.
struct AssetResolver {
  std::function<std::string(const std::string& name)> read_material_library;
  std::function<TextureImage(const std::string& name)> load_texture;
};

/// Resolver reading `mtllib` and `map_Kd` files relative to `base_dir`.
AssetResolver file_resolver(const std::filesystem::path& base_dir);

/// Parses the OBJ subset v / vt / vn / f / usemtl / mtllib / o / g.
///
/// Polygons are fan-triangulated from their first corner and negative
/// indices are resolved relative to the current end of the element list.
/// Normals are read for index validation only. Without a resolver, `usemtl`
/// names are still mapped to material indices but no textures are loaded.
TexturedMesh parse_obj(std::string_view text, const AssetResolver* resolver = nullptr);

TexturedMesh load_obj(const std::filesystem::path& path);

/// Serializes positions at round-trip precision and UVs deduplicated.
/// `mtllib_name` is emitted only when the mesh carries textures.
std::string write_obj(const TexturedMesh& mesh, const std::string& mtllib_name = "");

/// One `newmtl`/`map_Kd` block per texture, using `texture_files`.
std::string write_mtl(const TexturedMesh& mesh);

/// Writes `<stem>.obj`, `<stem>.mtl` and each texture as PNG next to it.
/// Texture file names are rewritten to `<stem>_tex<i>.png`.
void save_textured_obj(const TexturedMesh& mesh, const std::filesystem::path& obj_path);

}  // namespace texmesh
