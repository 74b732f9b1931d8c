#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "texmesh/mesh.hpp"

namespace texmesh {

enum class DistortionKind { quantize, smooth, subsample, jpeg, external };

/// Parsed form of `quantize:7`, `smooth:50`, `subsample:3`, `jpeg:6`,
/// `external:path.obj`.
struct DistortionSpec {
  DistortionKind kind = DistortionKind::quantize;
  int bits = 0;
  int iterations = 0;
  double step = 0.5;
  double percent = 100.0;
  int quality = 100;
  std::filesystem::path external_path;

  static DistortionSpec parse(std::string_view text);
  std::string to_string() const;
  void validate() const;
  bool affects_texture() const { return kind == DistortionKind::subsample || kind == DistortionKind::jpeg; }
};

/// Snaps every coordinate to the centre of one of 2^bits uniform cells
/// spanning `frame` on that axis (the mesh's own box by default). Axes with
/// zero extent are left untouched.
TexturedMesh quantize(const TexturedMesh& mesh, int bits, const std::optional<Aabb>& frame = std::nullopt);

/// Synchronous uniform-weight Laplacian smoothing:
/// p <- p + step * (mean(neighbours) - p).
TexturedMesh laplacian_smooth(const TexturedMesh& mesh, int iterations, double step = 0.5);

/// Bilinear resize to round(percent / 100 * side) on each axis.
TextureImage subsample_texture(const TextureImage& img, double percent);
TextureImage resample_back(const TextureImage& img, int width, int height);

/// Baseline JPEG encode at `quality` then decode.
TextureImage jpeg_recompress(const TextureImage& img, int quality);

/// Applies a spec to a mesh (geometry kinds) or to all of its textures.
/// `external` loads the referenced OBJ and returns it as the distorted mesh.
TexturedMesh apply_distortion(const TexturedMesh& mesh, const DistortionSpec& spec);

}  // namespace texmesh
