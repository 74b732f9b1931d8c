#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texmesh/mesh.hpp"
#include "texmesh/texture_metrics.hpp"

namespace testing {

using texmesh::LuminanceImage;
using texmesh::TextureImage;

/// Names of the procedural test images: gradient, checker, zoneplate,
/// cloud, shapes.
std::vector<std::string> test_image_names();

/// Deterministic 8-bit RGB test image.
TextureImage test_image(const std::string& name, int width, int height);

TextureImage gaussian_blur(const TextureImage& img, double sigma);
TextureImage add_noise(const TextureImage& img, double sigma, std::uint64_t seed);
/// Replaces each block x block tile by its mean blended with the original.
TextureImage blocking(const TextureImage& img, int block, double strength);
TextureImage shift_luminance(const TextureImage& img, int delta);
TextureImage uniform_noise_image(int width, int height, std::uint64_t seed);

}  // namespace testing
