#include "texmesh/distortion_lab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "texmesh/errors.hpp"
#include "texmesh/geometry_metrics.hpp"
#include "texmesh/image_io.hpp"
#include "texmesh/mesh_io.hpp"
#include "texmesh/texture_metrics.hpp"

namespace texmesh {
namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view spec) {
  T value{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty())
    throw ValidationError(fmt::format("invalid distortion parameter in '{}'", spec));
  return value;
}

}  // namespace

DistortionSpec DistortionSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ValidationError(fmt::format("distortion '{}' lacks ':<level>'", text));
  const auto kind = text.substr(0, colon);
  const auto arg = text.substr(colon + 1);
  DistortionSpec spec;
  if (kind == "quantize") {
    spec.kind = DistortionKind::quantize;
    spec.bits = parse_number<int>(arg, text);
  } else if (kind == "smooth") {
    spec.kind = DistortionKind::smooth;
    const auto second = arg.find(':');
    spec.iterations = parse_number<int>(arg.substr(0, second), text);
    if (second != std::string_view::npos) spec.step = parse_number<double>(arg.substr(second + 1), text);
  } else if (kind == "subsample") {
    spec.kind = DistortionKind::subsample;
    spec.percent = parse_number<double>(arg, text);
  } else if (kind == "jpeg") {
    spec.kind = DistortionKind::jpeg;
    spec.quality = parse_number<int>(arg, text);
  } else if (kind == "external") {
    spec.kind = DistortionKind::external;
    if (arg.empty()) throw ValidationError("external distortion needs a path");
    spec.external_path = std::string(arg);
  } else {
    throw ValidationError(fmt::format("unknown distortion kind '{}'", kind));
  }
  spec.validate();
  return spec;
}

std::string DistortionSpec::to_string() const {
  switch (kind) {
    case DistortionKind::quantize: return fmt::format("quantize:{}", bits);
    case DistortionKind::smooth:
      return step == 0.5 ? fmt::format("smooth:{}", iterations) : fmt::format("smooth:{}:{}", iterations, step);
    case DistortionKind::subsample: return fmt::format("subsample:{}", percent);
    case DistortionKind::jpeg: return fmt::format("jpeg:{}", quality);
    case DistortionKind::external: return "external:" + external_path.string();
  }
  return {};
}

void DistortionSpec::validate() const {
  switch (kind) {
    case DistortionKind::quantize:
      if (bits < 1 || bits > 24) throw ValidationError("quantization bits must be in [1, 24]");
      break;
    case DistortionKind::smooth:
      if (iterations < 1) throw ValidationError("smoothing iterations must be >= 1");
      if (!(step > 0.0 && step <= 1.0)) throw ValidationError("smoothing step must be in (0, 1]");
      break;
    case DistortionKind::subsample:
      if (!(percent > 0.0 && percent <= 100.0)) throw ValidationError("sub-sampling percent must be in (0, 100]");
      break;
    case DistortionKind::jpeg:
      if (quality < 1 || quality > 100) throw ValidationError("JPEG quality must be in [1, 100]");
      break;
    case DistortionKind::external:
      if (external_path.empty()) throw ValidationError("external distortion needs a path");
      break;
  }
}

TexturedMesh quantize(const TexturedMesh& mesh, int bits, const std::optional<Aabb>& frame) {
  if (bits < 1 || bits > 24) throw ValidationError("quantization bits must be in [1, 24]");
  if (mesh.vertices.empty()) return mesh;
  const Aabb box = frame.value_or(bounding_box(mesh));
  const double cells = std::ldexp(1.0, bits);
  TexturedMesh out = mesh;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = box.min[axis];
    const double extent = box.max[axis] - lo;
    if (!(extent > 0.0)) continue;
    const double cell = extent / cells;
    for (auto& p : out.vertices) {
      const double idx = std::clamp(std::floor((p[axis] - lo) / cell), 0.0, cells - 1.0);
      p[axis] = lo + (idx + 0.5) * cell;
    }
  }
  return out;
}

TexturedMesh laplacian_smooth(const TexturedMesh& mesh, int iterations, double step) {
  if (iterations < 1) throw ValidationError("smoothing iterations must be >= 1");
  if (!(step > 0.0 && step <= 1.0)) throw ValidationError("smoothing step must be in (0, 1]");
  const VertexGraph graph(mesh);
  TexturedMesh out = mesh;
  std::vector<Vec3> next(out.vertices.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::uint32_t v = 0; v < out.vertices.size(); ++v) {
      const auto nb = graph.neighbours(v);
      if (nb.empty()) {
        next[v] = out.vertices[v];
        continue;
      }
      Vec3 mean = Vec3::Zero();
      for (auto n : nb) mean += out.vertices[n];
      mean /= static_cast<double>(nb.size());
      next[v] = out.vertices[v] + step * (mean - out.vertices[v]);
    }
    out.vertices.swap(next);
  }
  return out;
}

TextureImage subsample_texture(const TextureImage& img, double percent) {
  if (!(percent > 0.0 && percent <= 100.0)) throw ValidationError("sub-sampling percent must be in (0, 100]");
  const int w = static_cast<int>(std::lround(percent / 100.0 * img.width));
  const int h = static_cast<int>(std::lround(percent / 100.0 * img.height));
  if (w < 1 || h < 1)
    throw ValidationError(fmt::format("{}% of {}x{} leaves an empty texture", percent, img.width, img.height));
  return resize_bilinear(img, w, h);
}

TextureImage resample_back(const TextureImage& img, int width, int height) { return resize_bilinear(img, width, height); }

TextureImage jpeg_recompress(const TextureImage& img, int quality) {
  if (quality < 1 || quality > 100) throw ValidationError("JPEG quality must be in [1, 100]");
  return decode_jpeg(encode_jpeg(img, quality));
}

TexturedMesh apply_distortion(const TexturedMesh& mesh, const DistortionSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case DistortionKind::quantize: return quantize(mesh, spec.bits);
    case DistortionKind::smooth: return laplacian_smooth(mesh, spec.iterations, spec.step);
    case DistortionKind::subsample: {
      TexturedMesh out = mesh;
      for (auto& tex : out.textures) tex = subsample_texture(tex, spec.percent);
      return out;
    }
    case DistortionKind::jpeg: {
      TexturedMesh out = mesh;
      for (auto& tex : out.textures) tex = jpeg_recompress(tex, spec.quality);
      return out;
    }
    case DistortionKind::external: return load_obj(spec.external_path);
  }
  return mesh;
}

}  // namespace texmesh
