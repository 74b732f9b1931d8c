#include "texmesh/geometry_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "texmesh/errors.hpp"

namespace texmesh {
namespace {

// Reusable breadth-first walker; `stamp_` avoids clearing a visited array
// between queries.
class NeighbourhoodWalker {
 public:
  NeighbourhoodWalker(const TexturedMesh& mesh, const VertexGraph& graph)
      : mesh_(mesh), graph_(graph), stamp_(mesh.vertices.size(), 0) {}

  const std::vector<std::uint32_t>& collect(std::uint32_t v, double radius) {
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
    out_.clear();
    const Vec3& centre = mesh_.vertices[v];
    const double r2 = radius * radius;
    out_.push_back(v);
    stamp_[v] = epoch_;
    for (std::size_t head = 0; head < out_.size(); ++head) {
      for (auto n : graph_.neighbours(out_[head])) {
        if (stamp_[n] == epoch_) continue;
        stamp_[n] = epoch_;
        if ((mesh_.vertices[n] - centre).squaredNorm() <= r2) out_.push_back(n);
      }
    }
    return out_;
  }

 private:
  const TexturedMesh& mesh_;
  const VertexGraph& graph_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<std::uint32_t> out_;
};

}  // namespace

ScaleSet ScaleSet::from_reference(const Aabb& reference_box) {
  ScaleSet s;
  s.epsilon = 0.025 * reference_box.max_extent();
  s.radii = {2.0 * s.epsilon, 3.0 * s.epsilon, 4.0 * s.epsilon};
  return s;
}

void ScaleSet::validate() const {
  if (radii.empty()) throw ValidationError("scale set has no radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ValidationError("neighbourhood radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw ValidationError("neighbourhood radii must be increasing");
  }
}

VertexGraph::VertexGraph(const TexturedMesh& mesh) {
  const auto n = mesh.vertices.size();
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const auto a = t[i], b = t[(i + 1) % 3];
      if (a == b) continue;
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto& list = adj[v];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    offsets_[v + 1] = offsets_[v] + static_cast<std::uint32_t>(list.size());
  }
  targets_.reserve(offsets_.back());
  for (const auto& list : adj) targets_.insert(targets_.end(), list.begin(), list.end());
}

CurvatureField mean_curvature(const TexturedMesh& mesh) {
  if (mesh.triangles.empty()) throw EmptyInputError("mean curvature of a mesh without triangles");
  const auto n = mesh.vertices.size();
  const double extent = bounding_box(mesh).max_extent();
  const double area_eps = 1e-12 * extent * extent;

  std::vector<Vec3> laplace(n, Vec3::Zero());
  std::vector<double> area(n, 0.0);
  std::unordered_map<std::uint64_t, int> edge_use;
  edge_use.reserve(mesh.triangles.size() * 2);
  double total_area = 0.0;

  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const std::uint64_t a = std::min(t[i], t[(i + 1) % 3]);
      const std::uint64_t b = std::max(t[i], t[(i + 1) % 3]);
      if (a != b) ++edge_use[(a << 32) | b];
    }
    const Vec3& p0 = mesh.vertices[t[0]];
    const Vec3& p1 = mesh.vertices[t[1]];
    const Vec3& p2 = mesh.vertices[t[2]];
    const double tri_area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    if (!(tri_area >= area_eps) || tri_area == 0.0) continue;
    total_area += tri_area;

    const std::array<Vec3, 3> p{p0, p1, p2};
    std::array<double, 3> cot{};
    std::array<double, 3> dot{};
    for (int i = 0; i < 3; ++i) {
      const Vec3 u = p[(i + 1) % 3] - p[i];
      const Vec3 v = p[(i + 2) % 3] - p[i];
      dot[i] = u.dot(v);
      cot[i] = dot[i] / u.cross(v).norm();
    }
    // Edge opposite corner i joins corners i+1 and i+2.
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      const Vec3 e = p[j] - p[k];
      laplace[t[j]] += cot[i] * e;
      laplace[t[k]] -= cot[i] * e;
    }
    const int obtuse = dot[0] < 0.0 ? 0 : dot[1] < 0.0 ? 1 : dot[2] < 0.0 ? 2 : -1;
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      if (obtuse < 0) {
        area[t[i]] += ((p[i] - p[j]).squaredNorm() * cot[k] + (p[i] - p[k]).squaredNorm() * cot[j]) / 8.0;
      } else {
        area[t[i]] += tri_area * (obtuse == i ? 0.5 : 0.25);
      }
    }
  }
  if (!(total_area > area_eps)) throw DegenerateGeometryError("mesh has zero surface area");

  std::vector<char> boundary(n, 0);
  for (const auto& [key, count] : edge_use) {
    if (count == 1) {
      boundary[key >> 32] = 1;
      boundary[key & 0xffffffffULL] = 1;
    }
  }

  CurvatureField field;
  field.values.assign(n, 0.0);
  std::vector<char> interior(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (boundary[v] || !(area[v] > area_eps)) continue;
    const double h = 0.5 * laplace[v].norm() / (2.0 * area[v]);
    if (!std::isfinite(h)) continue;
    field.values[v] = h;
    interior[v] = 1;
  }
  const VertexGraph graph(mesh);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (interior[v]) continue;
    double sum = 0.0;
    int count = 0;
    for (auto nb : graph.neighbours(v)) {
      if (!interior[nb]) continue;
      sum += field.values[nb];
      ++count;
    }
    field.values[v] = count > 0 ? sum / count : 0.0;
  }
  return field;
}

CorrespondenceMap correspond(const TexturedMesh& distorted, const TriangleTree& reference_tree,
                             const TexturedMesh& reference, const CurvatureField& reference_curvature) {
  if (distorted.vertices.empty()) throw EmptyInputError("distorted mesh has no vertices");
  if (reference_curvature.values.size() != reference.vertices.size())
    throw DimensionMismatchError("reference curvature does not match reference vertex count");
  CorrespondenceMap map;
  map.entries.reserve(distorted.vertices.size());
  for (const auto& p : distorted.vertices) {
    const auto hit = reference_tree.closest(p);
    Correspondence c;
    c.triangle = hit.triangle;
    c.barycentric = hit.barycentric;
    c.distance = hit.distance;
    const auto& tri = reference.triangles[hit.triangle];
    c.curvature = 0.0;
    for (int i = 0; i < 3; ++i) c.curvature += hit.barycentric[i] * reference_curvature.values[tri[i]];
    map.entries.push_back(c);
  }
  return map;
}

CorrespondenceMap correspond(const TexturedMesh& distorted, const TexturedMesh& reference,
                             const CurvatureField& reference_curvature) {
  if (reference.triangles.empty()) throw EmptyInputError("reference mesh has no triangles");
  const TriangleTree tree(reference.vertices, reference.triangles);
  return correspond(distorted, tree, reference, reference_curvature);
}

std::vector<std::uint32_t> connected_neighbourhood(std::uint32_t v, double radius, const TexturedMesh& mesh,
                                                   const VertexGraph& graph) {
  NeighbourhoodWalker walker(mesh, graph);
  return walker.collect(v, radius);
}

std::vector<double> normalized_curvature_differences(const CurvatureField& distorted_curvature,
                                                     const CorrespondenceMap& correspondence, double stabilizer) {
  const auto n = distorted_curvature.values.size();
  if (correspondence.entries.size() != n)
    throw DimensionMismatchError("correspondence does not match distorted vertex count");
  if (!(stabilizer > 0.0)) throw ValidationError("stabilizer must be positive");
  double peak = std::numeric_limits<double>::min();
  for (std::size_t j = 0; j < n; ++j)
    peak = std::max({peak, distorted_curvature.values[j], correspondence.entries[j].curvature});
  std::vector<double> diff(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = distorted_curvature.values[j] / peak;
    const double c_hat = correspondence.entries[j].curvature / peak;
    diff[j] = (c_hat - c) / (std::max(c_hat, c) + stabilizer);
  }
  return diff;
}

double neighbourhood_deviation(std::span<const std::uint32_t> neighbourhood, std::span<const double> differences) {
  const auto k = neighbourhood.size();
  if (k < 2) return 0.0;
  double mean = 0.0;
  for (auto j : neighbourhood) mean += differences[j];
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (auto j : neighbourhood) {
    const double d = differences[j] - mean;
    var += d * d;
  }
  return std::min(1.0, std::sqrt(var / static_cast<double>(k)));
}

double local_delta(std::uint32_t v, double radius, const CurvatureField& distorted_curvature,
                   const CorrespondenceMap& correspondence, const TexturedMesh& mesh, double stabilizer) {
  if (!(radius > 0.0)) throw ValidationError("radius must be positive");
  if (v >= mesh.vertices.size()) throw ValidationError("vertex index out of range");
  const auto diff = normalized_curvature_differences(distorted_curvature, correspondence, stabilizer);
  const VertexGraph graph(mesh);
  const auto hood = connected_neighbourhood(v, radius, mesh, graph);
  return neighbourhood_deviation(hood, diff);
}

SdcdResult sdcd(const TexturedMesh& distorted, const TexturedMesh& reference, const SdcdConfig& config) {
  config.scales.validate();
  if (!(config.stabilizer > 0.0)) throw ValidationError("stabilizer must be positive");
  const auto reference_curvature = mean_curvature(reference);
  const auto distorted_curvature = mean_curvature(distorted);
  const auto corr = correspond(distorted, reference, reference_curvature);
  const auto diff = normalized_curvature_differences(distorted_curvature, corr, config.stabilizer);

  const VertexGraph graph(distorted);
  NeighbourhoodWalker walker(distorted, graph);
  const auto n = distorted.vertices.size();
  const double scale_count = static_cast<double>(config.scales.radii.size());

  SdcdResult result;
  result.per_vertex.resize(n);
  double sum_sq = 0.0;
  for (std::uint32_t v = 0; v < n; ++v) {
    double delta = 0.0;
    for (double radius : config.scales.radii) delta += neighbourhood_deviation(walker.collect(v, radius), diff);
    delta /= scale_count;
    result.per_vertex[v] = delta;
    sum_sq += delta * delta;
  }
  result.distance = std::clamp(std::sqrt(sum_sq / static_cast<double>(n)), 0.0, 1.0);
  result.similarity = 1.0 - result.distance;
  return result;
}

SdcdResult sdcd(const TexturedMesh& distorted, const TexturedMesh& reference) {
  SdcdConfig config;
  config.scales = ScaleSet::from_reference(bounding_box(reference));
  return sdcd(distorted, reference, config);
}

double geometry_rmse(const TexturedMesh& distorted, const TexturedMesh& reference) {
  if (reference.triangles.empty()) throw EmptyInputError("reference mesh has no triangles");
  if (distorted.vertices.empty()) throw EmptyInputError("distorted mesh has no vertices");
  const TriangleTree tree(reference.vertices, reference.triangles);
  double sum = 0.0;
  for (const auto& p : distorted.vertices) {
    const double d = tree.closest(p).distance;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(distorted.vertices.size()));
}

}  // namespace texmesh
