#include "texmesh/triangle_tree.hpp"

#include <algorithm>
#include <limits>

#include "texmesh/errors.hpp"

namespace texmesh {
namespace {

double box_distance_sq(const Aabb& box, const Vec3& p) {
  const Vec3 d = (box.min - p).cwiseMax(p - box.max).cwiseMax(Vec3::Zero());
  return d.squaredNorm();
}

constexpr std::uint32_t kLeafSize = 4;

}  // namespace

// Voronoi-region walk over vertices, edges and face (Ericson, RTCD 5.1.5).
SurfacePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  SurfacePoint r;
  auto finish = [&](double u, double v, double w) {
    r.barycentric = {u, v, w};
    r.point = u * a + v * b + w * c;
    r.distance = (p - r.point).norm();
    return r;
  };

  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return finish(1, 0, 0);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return finish(0, 1, 0);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return finish(1 - v, v, 0);
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return finish(0, 0, 1);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return finish(1 - w, 0, w);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return finish(0, 1 - w, w);
  }

  const double denom = va + vb + vc;
  if (!(std::abs(denom) > 0.0)) {
    // Zero-area triangle that escaped the edge tests: fall back to its vertices.
    SurfacePoint best = finish(1, 0, 0);
    for (const auto& bc : {std::array<double, 3>{0, 1, 0}, std::array<double, 3>{0, 0, 1}}) {
      SurfacePoint cand = finish(bc[0], bc[1], bc[2]);
      if (cand.distance < best.distance) best = cand;
    }
    return best;
  }
  const double v = vb / denom;
  const double w = vc / denom;
  return finish(1 - v - w, v, w);
}

TriangleTree::TriangleTree(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles) {
  if (triangles.empty()) throw EmptyInputError("nearest-point index over an empty triangle set");
  corners_.reserve(triangles.size());
  std::vector<Vec3> centroids;
  centroids.reserve(triangles.size());
  for (const auto& t : triangles) {
    corners_.push_back({vertices.at(t[0]), vertices.at(t[1]), vertices.at(t[2])});
    centroids.push_back((corners_.back()[0] + corners_.back()[1] + corners_.back()[2]) / 3.0);
  }
  order_.resize(triangles.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * triangles.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(order_.size()), centroids);
}

std::uint32_t TriangleTree::build(std::uint32_t first, std::uint32_t count, std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box{corners_[order_[first]][0], corners_[order_[first]][0]};
  Aabb cbox{centroids[order_[first]], centroids[order_[first]]};
  for (std::uint32_t i = first; i < first + count; ++i) {
    for (const auto& p : corners_[order_[i]]) {
      box.min = box.min.cwiseMin(p);
      box.max = box.max.cwiseMax(p);
    }
    cbox.min = cbox.min.cwiseMin(centroids[order_[i]]);
    cbox.max = cbox.max.cwiseMax(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= kLeafSize) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  int axis = 0;
  cbox.extent().maxCoeff(&axis);
  const auto mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](std::uint32_t l, std::uint32_t r) { return centroids[l][axis] < centroids[r][axis]; });
  const auto left = build(first, mid - first, centroids);
  const auto right = build(mid, first + count - mid, centroids);
  nodes_[index].first = left;
  nodes_[index].right = right;
  nodes_[index].count = 0;
  return index;
}

SurfacePoint TriangleTree::closest(const Vec3& p) const {
  SurfacePoint best;
  double best_sq = std::numeric_limits<double>::infinity();
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_distance_sq(node.box, p) >= best_sq) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const auto t = order_[i];
        auto cand = closest_point_on_triangle(p, corners_[t][0], corners_[t][1], corners_[t][2]);
        const double sq = cand.distance * cand.distance;
        if (sq < best_sq || (sq == best_sq && t < best.triangle)) {
          best_sq = sq;
          best = cand;
          best.triangle = t;
        }
      }
      continue;
    }
    // Visit the nearer child first.
    const double dl = box_distance_sq(nodes_[node.first].box, p);
    const double dr = box_distance_sq(nodes_[node.right].box, p);
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.first;
    } else {
      stack[top++] = node.first;
      stack[top++] = node.right;
    }
  }
  return best;
}

}  // namespace texmesh
