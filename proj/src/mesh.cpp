#include "texmesh/mesh.hpp"

#include <string>

#include "texmesh/errors.hpp"

namespace texmesh {

TextureImage::TextureImage(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c),
      pixels(static_cast<std::size_t>(w) * h * c, fill) {}

void TextureImage::validate() const {
  if (width < 1 || height < 1) throw ValidationError("texture dimensions must be >= 1");
  if (channels != 1 && channels != 3) throw ValidationError("texture must have 1 or 3 channels");
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels)
    throw ValidationError("texture pixel buffer does not match " + std::to_string(width) + "x" +
                          std::to_string(height) + "x" + std::to_string(channels));
}

void TexturedMesh::validate() const {
  const auto n = vertices.size();
  if (corner_uvs.size() != triangles.size())
    throw ValidationError("corner UV count differs from triangle count");
  if (material_of_triangle.size() != triangles.size())
    throw ValidationError("material index count differs from triangle count");
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    for (auto idx : tri)
      if (idx >= n)
        throw ValidationError("triangle " + std::to_string(t) + " references vertex " +
                              std::to_string(idx) + " of " + std::to_string(n));
    if (tri[0] == tri[1] && tri[1] == tri[2])
      throw ValidationError("triangle " + std::to_string(t) + " is degenerate");
    if (!textures.empty() && material_of_triangle[t] >= textures.size())
      throw ValidationError("triangle " + std::to_string(t) + " references texture " +
                            std::to_string(material_of_triangle[t]));
  }
  for (const auto& tex : textures) tex.validate();
}

Aabb bounding_box(const std::vector<Vec3>& points) {
  if (points.empty()) throw EmptyInputError("bounding box of an empty point set");
  Aabb box{points.front(), points.front()};
  for (const auto& p : points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

Aabb bounding_box(const TexturedMesh& mesh) { return bounding_box(mesh.vertices); }

}  // namespace texmesh
