#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "texmesh/mesh.hpp"

namespace texmesh {

struct SurfacePoint {
  std::uint32_t triangle = 0;
  Vec3 point = Vec3::Zero();
  std::array<double, 3> barycentric{1.0, 0.0, 0.0};
  double distance = 0.0;
};

/// Exact closest point of `p` on triangle (a, b, c), with barycentric
/// weights of the result relative to a, b, c.
SurfacePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Bounding volume hierarchy over a triangle soup for exact nearest-point
/// queries. Holds its own copy of the geometry.
class TriangleTree {
 public:
  TriangleTree(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles);

  SurfacePoint closest(const Vec3& p) const;

  std::size_t size() const { return corners_.size(); }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // into order_ for leaves, left child otherwise
    std::uint32_t count = 0;  // 0 marks an inner node
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t first, std::uint32_t count, std::vector<Vec3>& centroids);

  std::vector<std::array<Vec3, 3>> corners_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace texmesh
