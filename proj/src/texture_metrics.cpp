#include "texmesh/texture_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "texmesh/errors.hpp"

namespace texmesh {
namespace {

void require_same_size(const LuminanceImage& a, const LuminanceImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionMismatchError("image dimensions differ: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                 " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

}  // namespace

TextureMetric parse_texture_metric(std::string_view name) {
  if (name == "rmse") return TextureMetric::rmse;
  if (name == "ssim") return TextureMetric::ssim;
  if (name == "ms-ssim" || name == "ms_ssim") return TextureMetric::ms_ssim;
  throw ValidationError("unknown texture metric '" + std::string(name) + "'");
}

LuminanceImage to_luminance(const TextureImage& img) {
  img.validate();
  LuminanceImage out(img.width, img.height);
  const std::size_t n = img.texel_count();
  if (img.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = img.pixels[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = img.pixels.data() + 3 * i;
      out.values[i] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    }
  }
  return out;
}

double image_rmse(const LuminanceImage& a, const LuminanceImage& b) {
  require_same_size(a, b);
  if (a.values.empty()) throw EmptyInputError("empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.values.size()));
}

SsimStats ssim_stats(const LuminanceImage& a, const LuminanceImage& b, const SsimParams& params) {
  require_same_size(a, b);
  if (a.width < params.window || a.height < params.window)
    throw ValidationError("image smaller than the " + std::to_string(params.window) + "x" +
                          std::to_string(params.window) + " SSIM window");
  const auto k = gaussian_kernel(params.window, params.sigma);
  const int n = params.window;
  const int w = a.width, h = a.height;
  const int ow = w - n + 1, oh = h - n + 1;
  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);

  // Separable Gaussian over valid positions. Horizontally filtered rows of
  // the five moment images (a, b, a^2, b^2, ab) live in a ring of `n` rows.
  constexpr int kMoments = 5;
  std::vector<double> ring(static_cast<std::size_t>(n) * kMoments * ow);
  auto slot = [&](int row, int moment) { return ring.data() + (static_cast<std::size_t>(row % n) * kMoments + moment) * ow; };
  double sum_ssim = 0.0, sum_cs = 0.0;
  std::vector<double> acc(static_cast<std::size_t>(kMoments) * ow);
  for (int y = 0; y < h; ++y) {
    const double* ra = a.values.data() + static_cast<std::size_t>(y) * w;
    const double* rb = b.values.data() + static_cast<std::size_t>(y) * w;
    double* m0 = slot(y, 0); double* m1 = slot(y, 1); double* m2 = slot(y, 2);
    double* m3 = slot(y, 3); double* m4 = slot(y, 4);
    for (int x = 0; x < ow; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < n; ++i) {
        const double va = ra[x + i], vb = rb[x + i], wk = k[i];
        sa += wk * va;
        sb += wk * vb;
        saa += wk * va * va;
        sbb += wk * vb * vb;
        sab += wk * va * vb;
      }
      m0[x] = sa; m1[x] = sb; m2[x] = saa; m3[x] = sbb; m4[x] = sab;
    }
    if (y < n - 1) continue;
    const int top = y - n + 1;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < kMoments; ++m) {
        const double* src = slot(top + i, m);
        double* dst = acc.data() + static_cast<std::size_t>(m) * ow;
        for (int x = 0; x < ow; ++x) dst[x] += k[i] * src[x];
      }
    for (int x = 0; x < ow; ++x) {
      const double ma = acc[x], mb = acc[ow + x];
      const double va = acc[2 * ow + x] - ma * ma;
      const double vb = acc[3 * ow + x] - mb * mb;
      const double cov = acc[4 * ow + x] - ma * mb;
      const double cs = (2.0 * cov + c2) / (va + vb + c2);
      const double l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      sum_ssim += l * cs;
      sum_cs += cs;
    }
  }
  const auto count = static_cast<double>(ow) * oh;
  return {sum_ssim / count, sum_cs / count};
}

double ssim(const LuminanceImage& a, const LuminanceImage& b) { return ssim_stats(a, b).ssim; }

int ms_ssim_scale_count(int width, int height, int max_scales, int window) {
  int side = std::min(width, height);
  if (side < window) return 0;
  int scales = 1;
  while (scales < max_scales && side / 2 >= window) {
    side /= 2;
    ++scales;
  }
  return scales;
}

LuminanceImage downsample2(const LuminanceImage& img) {
  LuminanceImage out(img.width / 2, img.height / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = 0.25 * (img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) + img.at(2 * x, 2 * y + 1) +
                             img.at(2 * x + 1, 2 * y + 1));
  return out;
}

double ms_ssim(const LuminanceImage& a, const LuminanceImage& b, std::span<const double> weights) {
  require_same_size(a, b);
  const int scales = static_cast<int>(weights.size());
  if (scales < 1) throw ValidationError("MS-SSIM needs at least one scale");
  if (ms_ssim_scale_count(a.width, a.height, scales) < scales)
    throw ValidationError("image too small for " + std::to_string(scales) + " MS-SSIM scales");
  LuminanceImage x = a, y = b;
  double product = 1.0;
  for (int s = 0; s < scales; ++s) {
    const auto stats = ssim_stats(x, y);
    const double term = s + 1 == scales ? stats.ssim : stats.contrast_structure;
    product *= std::pow(std::max(term, 0.0), weights[s]);
    if (s + 1 < scales) {
      x = downsample2(x);
      y = downsample2(y);
    }
  }
  return product;
}

double ms_ssim(const LuminanceImage& a, const LuminanceImage& b) {
  require_same_size(a, b);
  const int scales = ms_ssim_scale_count(a.width, a.height);
  if (scales < 1) throw ValidationError("image smaller than the 11x11 SSIM window");
  std::vector<double> w(kMsSsimWeights.begin(), kMsSsimWeights.begin() + scales);
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return ms_ssim(a, b, w);
}

TextureImage resize_bilinear(const TextureImage& img, int width, int height) {
  img.validate();
  if (width < 1 || height < 1) throw ValidationError("resize target must be at least 1x1");
  TextureImage out(width, height, img.channels);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double tx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(x0, y0, c) * (1.0 - tx) + img.at(x1, y0, c) * tx;
        const double bottom = img.at(x0, y1, c) * (1.0 - tx) + img.at(x1, y1, c) * tx;
        const double v = top * (1.0 - ty) + bottom * ty;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

double texel_weighted_mean(std::span<const double> values, std::span<const std::size_t> texel_counts) {
  if (values.size() != texel_counts.size()) throw DimensionMismatchError("value and weight counts differ");
  if (values.empty()) throw EmptyInputError("no values to aggregate");
  double weighted = 0.0, total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    weighted += static_cast<double>(texel_counts[i]) * values[i];
    total += static_cast<double>(texel_counts[i]);
  }
  return weighted / total;
}

TextureQuality texture_quality(std::span<const TextureImage> distorted, std::span<const TextureImage> reference,
                               TextureMetric metric) {
  if (distorted.size() != reference.size())
    throw DimensionMismatchError("texture count mismatch: " + std::to_string(distorted.size()) + " vs " +
                                 std::to_string(reference.size()));
  if (reference.empty()) throw EmptyInputError("no textures to compare");
  TextureQuality q;
  std::vector<double> values;
  std::vector<std::size_t> texels;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto& ref = reference[i];
    const auto& dis = distorted[i];
    const auto ref_l = to_luminance(ref);
    const auto dis_l = to_luminance(dis.width == ref.width && dis.height == ref.height
                                        ? dis
                                        : resize_bilinear(dis, ref.width, ref.height));
    double value = 0.0;
    switch (metric) {
      case TextureMetric::rmse: value = image_rmse(dis_l, ref_l); break;
      case TextureMetric::ssim: value = ssim(dis_l, ref_l); break;
      case TextureMetric::ms_ssim: value = ms_ssim(dis_l, ref_l); break;
    }
    q.per_texture.push_back({i, value});
    values.push_back(value);
    texels.push_back(ref.texel_count());
  }
  q.aggregate = texel_weighted_mean(values, texels);
  return q;
}

}  // namespace texmesh
