#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace texmesh {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Triangle = std::array<std::uint32_t, 3>;

/// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
struct TextureImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  TextureImage() = default;
  TextureImage(int w, int h, int c, std::uint8_t fill = 0);

  std::size_t texel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  /// Throws ValidationError when the buffer does not match the dimensions.
  void validate() const;

  bool operator==(const TextureImage&) const = default;
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  double max_extent() const { return extent().maxCoeff(); }
};

/// Indexed triangle mesh with per-corner UVs and per-triangle texture index.
///
/// A vertex may carry several UV pairs through different corners (texture
/// seams); UVs therefore live on corners, not on vertices.
struct TexturedMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<std::array<Vec2, 3>> corner_uvs;
  std::vector<std::uint32_t> material_of_triangle;
  std::vector<TextureImage> textures;

  // Parallel to `textures`: material name and the image file it came from.
  std::vector<std::string> material_names;
  std::vector<std::string> texture_files;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  /// Checks index ranges, degenerate triangles and array sizes.
  void validate() const;
};

Aabb bounding_box(const TexturedMesh& mesh);
Aabb bounding_box(const std::vector<Vec3>& points);

}  // namespace texmesh
