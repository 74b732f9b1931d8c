#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "texmesh/mesh.hpp"

namespace texmesh {

/// Decodes PNG or baseline JPEG by magic bytes. Alpha is dropped, 16-bit
/// samples are reduced to 8 bits, gray stays single channel.
TextureImage decode_image(std::span<const std::uint8_t> bytes);
TextureImage load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const TextureImage& img);
std::vector<std::uint8_t> encode_jpeg(const TextureImage& img, int quality);
TextureImage decode_png(std::span<const std::uint8_t> bytes);
TextureImage decode_jpeg(std::span<const std::uint8_t> bytes);

void save_png(const TextureImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace texmesh
