#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "texmesh/mesh.hpp"
#include "texmesh/triangle_tree.hpp"

namespace texmesh {

/// Per-vertex mean curvature magnitude, aligned with the mesh vertices.
struct CurvatureField {
  std::vector<double> values;
};

struct Correspondence {
  std::uint32_t triangle = 0;
  std::array<double, 3> barycentric{1.0, 0.0, 0.0};
  double distance = 0.0;
  double curvature = 0.0;  // reference curvature interpolated at the foot point
};

/// One entry per distorted vertex.
struct CorrespondenceMap {
  std::vector<Correspondence> entries;
};

/// Neighbourhood radii derived from the reference bounding box.
struct ScaleSet {
  double epsilon = 0.0;
  std::vector<double> radii;

  /// epsilon = 2.5% of the box's largest side, radii {2, 3, 4} x epsilon.
  static ScaleSet from_reference(const Aabb& reference_box);
  void validate() const;
};

struct SdcdConfig {
  double stabilizer = 0.01;
  ScaleSet scales;
};

struct SdcdResult {
  std::vector<double> per_vertex;
  double distance = 0.0;
  double similarity = 1.0;
};

/// Magnitude of the cotangent Laplace-Beltrami of position (mixed Voronoi
/// areas), halved. Boundary vertices and vertices without usable area take
/// the mean of their interior neighbours, or 0 when they have none.
CurvatureField mean_curvature(const TexturedMesh& mesh);

/// Nearest reference-surface point for every distorted vertex.
CorrespondenceMap correspond(const TexturedMesh& distorted, const TexturedMesh& reference,
                             const CurvatureField& reference_curvature);
CorrespondenceMap correspond(const TexturedMesh& distorted, const TriangleTree& reference_tree,
                             const TexturedMesh& reference, const CurvatureField& reference_curvature);

/// Vertex adjacency in compressed-row form.
class VertexGraph {
 public:
  explicit VertexGraph(const TexturedMesh& mesh);

  std::size_t size() const { return offsets_.size() - 1; }
  std::span<const std::uint32_t> neighbours(std::uint32_t v) const {
    return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }

 private:
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> targets_;
};

/// Vertices reachable from `v` along mesh edges without leaving the ball of
/// `radius` around v's position (v included), in discovery order.
std::vector<std::uint32_t> connected_neighbourhood(std::uint32_t v, double radius, const TexturedMesh& mesh,
                                                   const VertexGraph& graph);

/// Normalized curvature differences (C_hat - C) / (max(C_hat, C) + a), after
/// both fields are divided by their joint maximum.
std::vector<double> normalized_curvature_differences(const CurvatureField& distorted_curvature,
                                                     const CorrespondenceMap& correspondence, double stabilizer);

/// Population standard deviation of `differences` over `neighbourhood`,
/// clamped to [0, 1]. Zero for neighbourhoods smaller than two vertices.
double neighbourhood_deviation(std::span<const std::uint32_t> neighbourhood, std::span<const double> differences);

/// Local deviation at vertex `v` for one radius.
double local_delta(std::uint32_t v, double radius, const CurvatureField& distorted_curvature,
                   const CorrespondenceMap& correspondence, const TexturedMesh& mesh, double stabilizer);

SdcdResult sdcd(const TexturedMesh& distorted, const TexturedMesh& reference, const SdcdConfig& config);

/// Uses ScaleSet::from_reference(bounding_box(reference)) and a = 0.01.
SdcdResult sdcd(const TexturedMesh& distorted, const TexturedMesh& reference);

/// RMS of the distorted-to-reference surface distances.
double geometry_rmse(const TexturedMesh& distorted, const TexturedMesh& reference);

}  // namespace texmesh
