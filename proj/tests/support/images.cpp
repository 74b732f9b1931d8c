#include "images.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace testing {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

std::vector<std::string> test_image_names() { return {"gradient", "checker", "zoneplate", "cloud", "shapes"}; }

TextureImage test_image(const std::string& name, int w, int h) {
  TextureImage img(w, h, 3);
  std::mt19937_64 rng(42);
  std::vector<double> cloud;
  if (name == "cloud") {
    // sum of random low-frequency cosines
    std::uniform_real_distribution<double> u(0.0, 1.0);
    cloud.assign(static_cast<std::size_t>(w) * h, 0.0);
    for (int k = 0; k < 24; ++k) {
      const double fx = u(rng) * 12.0, fy = u(rng) * 12.0, ph = u(rng) * 6.28, amp = 1.0 / (1.0 + fx + fy);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          cloud[static_cast<std::size_t>(y) * w + x] +=
              amp * std::cos(2 * std::numbers::pi * (fx * x / w + fy * y / h) + ph);
    }
    const auto [lo, hi] = std::minmax_element(cloud.begin(), cloud.end());
    const double l = *lo, s = *hi - *lo;
    for (auto& v : cloud) v = (v - l) / s;
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w, v = (y + 0.5) / h;
      double r = 0, g = 0, b = 0;
      if (name == "gradient") {
        r = 255 * u;
        g = 255 * v;
        b = 255 * (1 - u) * v;
      } else if (name == "checker") {
        const bool on = ((x / 16) + (y / 16)) % 2 == 0;
        r = on ? 220 : 30;
        g = on ? 200 : 60;
        b = on ? 180 : 90;
      } else if (name == "zoneplate") {
        const double d2 = (u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5);
        const double z = 0.5 + 0.5 * std::cos(500.0 * d2);
        r = g = b = 255 * z;
      } else if (name == "cloud") {
        const double c = cloud[static_cast<std::size_t>(y) * w + x];
        r = 255 * c;
        g = 200 * c + 30;
        b = 255 * (1 - c);
      } else if (name == "shapes") {
        r = g = b = 40;
        if ((u - 0.3) * (u - 0.3) + (v - 0.35) * (v - 0.35) < 0.04) r = 230, g = 60, b = 50;
        if (u > 0.55 && u < 0.9 && v > 0.2 && v < 0.6) r = 50, g = 180, b = 230;
        if (v > 0.7 && std::abs(u - 0.5) < (v - 0.7) * 1.2) r = 240, g = 230, b = 90;
        r += 20 * std::sin(40 * u);
      } else {
        throw std::invalid_argument("unknown test image " + name);
      }
      img.at(x, y, 0) = to_byte(r);
      img.at(x, y, 1) = to_byte(g);
      img.at(x, y, 2) = to_byte(b);
    }
  return img;
}

TextureImage gaussian_blur(const TextureImage& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-i * i / (2 * sigma * sigma));
  for (auto& v : k) v /= sum;
  const int w = img.width, h = img.height, c = img.channels;
  std::vector<double> tmp(img.pixels.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y, ch);
        tmp[(static_cast<std::size_t>(y) * w + x) * c + ch] = acc;
      }
  TextureImage out(w, h, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * tmp[(static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x) * c + ch];
        out.at(x, y, ch) = to_byte(acc);
      }
  return out;
}

TextureImage add_noise(const TextureImage& img, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  auto out = img;
  for (auto& p : out.pixels) p = to_byte(p + n(rng));
  return out;
}

TextureImage blocking(const TextureImage& img, int block, double strength) {
  auto out = img;
  for (int by = 0; by < img.height; by += block)
    for (int bx = 0; bx < img.width; bx += block)
      for (int ch = 0; ch < img.channels; ++ch) {
        double mean = 0;
        int n = 0;
        for (int y = by; y < std::min(by + block, img.height); ++y)
          for (int x = bx; x < std::min(bx + block, img.width); ++x) mean += img.at(x, y, ch), ++n;
        mean /= n;
        for (int y = by; y < std::min(by + block, img.height); ++y)
          for (int x = bx; x < std::min(bx + block, img.width); ++x)
            out.at(x, y, ch) = to_byte(strength * mean + (1 - strength) * img.at(x, y, ch));
      }
  return out;
}

TextureImage shift_luminance(const TextureImage& img, int delta) {
  auto out = img;
  for (auto& p : out.pixels) p = to_byte(p + delta);
  return out;
}

TextureImage uniform_noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TextureImage img(w, h, 1);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

}  // namespace testing
