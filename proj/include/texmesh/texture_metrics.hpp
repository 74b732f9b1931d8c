#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "texmesh/mesh.hpp"

namespace texmesh {

/// Row-major luminance in [0, 1].
struct LuminanceImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  LuminanceImage() = default;
  LuminanceImage(int w, int h, double fill = 0.0) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

enum class TextureMetric { rmse, ssim, ms_ssim };

TextureMetric parse_texture_metric(std::string_view name);

struct TextureQuality {
  struct Entry {
    std::size_t texture = 0;
    double value = 0.0;
  };
  std::vector<Entry> per_texture;
  double aggregate = 0.0;
};

/// Rec.601 weights (0.299, 0.587, 0.114), scaled to [0, 1].
LuminanceImage to_luminance(const TextureImage& img);

double image_rmse(const LuminanceImage& a, const LuminanceImage& b);

/// Standard SSIM parameters: 11x11 Gaussian window, sigma 1.5, K1 0.01,
/// K2 0.03, dynamic range 1. Statistics over the valid window positions only.
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

struct SsimStats {
  double ssim = 0.0;           // mean of l * c * s
  double contrast_structure = 0.0;  // mean of c * s
};

SsimStats ssim_stats(const LuminanceImage& a, const LuminanceImage& b, const SsimParams& params = {});
double ssim(const LuminanceImage& a, const LuminanceImage& b);

/// The published five-scale exponents.
inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Number of scales usable for an image: at most `max_scales`, reduced so
/// the coarsest level keeps a full window.
int ms_ssim_scale_count(int width, int height, int max_scales = 5, int window = 11);

/// 2x2 box average followed by stride 2 (odd trailing row/column dropped).
LuminanceImage downsample2(const LuminanceImage& img);

/// Multi-scale SSIM: contrast-structure at every scale except the coarsest,
/// full SSIM there. Exponents are the first `scales` published weights
/// renormalized to sum to one; negative terms are clamped to zero.
double ms_ssim(const LuminanceImage& a, const LuminanceImage& b);

/// Same with explicit per-scale exponents; `weights.size()` scales are used.
double ms_ssim(const LuminanceImage& a, const LuminanceImage& b, std::span<const double> weights);

/// Bilinear resize with pixel-centre alignment, clamped at the borders.
TextureImage resize_bilinear(const TextureImage& img, int width, int height);

/// Mean of `values` weighted by `texel_counts`.
double texel_weighted_mean(std::span<const double> values, std::span<const std::size_t> texel_counts);

/// Per-texture metric and texel-weighted aggregate. Distorted textures whose
/// size differs from the reference are bilinearly resampled to it first.
TextureQuality texture_quality(std::span<const TextureImage> distorted, std::span<const TextureImage> reference,
                               TextureMetric metric);

}  // namespace texmesh
