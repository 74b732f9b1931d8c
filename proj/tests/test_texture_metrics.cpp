#include <doctest.h>

#include <cmath>

#include "support/images.hpp"
#include "support/oracles.hpp"
#include "texmesh/errors.hpp"
#include "texmesh/image_io.hpp"
#include "texmesh/texture_metrics.hpp"

using namespace texmesh;
using doctest::Approx;

namespace {

TextureImage jpeg_round_trip(const TextureImage& img, int quality) { return decode_image(encode_jpeg(img, quality)); }

TextureImage distort(const TextureImage& img, int kind) {
  switch (kind) {
    case 0: return testing::gaussian_blur(img, 1.8);
    case 1: return testing::add_noise(img, 12.0, 5);
    default: return jpeg_round_trip(img, 15);
  }
}

const char* kKinds[] = {"blur", "noise", "compression"};

}  // namespace

TEST_CASE("luminance conversion") {
  TextureImage white(3, 2, 3, 255), red(1, 1, 3, 0), gray(2, 2, 1, 51);
  red.at(0, 0, 0) = 255;
  for (double v : to_luminance(white).values) CHECK(v == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(to_luminance(red).values[0] - 0.299) < 1e-6);
  for (double v : to_luminance(gray).values) CHECK(v == Approx(0.2));
}

TEST_CASE("image RMSE examples") {
  LuminanceImage a(4, 4, 0.25), b(4, 4, 0.75);
  CHECK(image_rmse(a, a) == 0.0);
  CHECK(image_rmse(a, b) == Approx(0.5));
  LuminanceImage p(2, 1), q(2, 1, 1.0);
  p.at(1, 0) = 1.0;
  CHECK(image_rmse(p, q) == Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(image_rmse(a, p), DimensionMismatchError);
}

TEST_CASE("SSIM matches the window-by-window oracle") {
  for (const auto& name : testing::test_image_names()) {
    const auto ref = testing::test_image(name, 72, 64);
    const auto ref_l = to_luminance(ref);
    for (int kind = 0; kind < 3; ++kind) {
      CAPTURE(name);
      CAPTURE(kKinds[kind]);
      const auto dis_l = to_luminance(distort(ref, kind));
      const auto got = ssim_stats(dis_l, ref_l);
      const auto want = testing::ssim_oracle(dis_l, ref_l);
      CHECK(std::abs(got.ssim - want.ssim) < 1e-4);
      CHECK(std::abs(got.contrast_structure - want.cs) < 1e-4);
      CHECK(got.ssim < 1.0);
    }
    CHECK(ssim(ref_l, ref_l) == 1.0);
  }
}

TEST_CASE("SSIM against a luminance shift and against unrelated noise") {
  const auto ref_l = to_luminance(testing::test_image("cloud", 64, 64));
  auto shifted = ref_l;
  for (double& v : shifted.values) v = std::min(v + 0.1, 1.0);
  CHECK(std::abs(ssim(shifted, ref_l) - testing::ssim_oracle(shifted, ref_l).ssim) < 1e-4);

  const auto noise = to_luminance(testing::uniform_noise_image(64, 64, 3));
  const double s = ssim(noise, ref_l);
  CHECK(std::abs(s - testing::ssim_oracle(noise, ref_l).ssim) < 1e-4);
  CHECK(std::abs(s) < 0.1);
}

TEST_CASE("MS-SSIM matches the oracle at five scales") {
  for (const auto& name : testing::test_image_names()) {
    const auto ref = testing::test_image(name, 192, 180);
    const auto ref_l = to_luminance(ref);
    REQUIRE(ms_ssim_scale_count(ref_l.width, ref_l.height) == 5);
    for (int kind = 0; kind < 3; ++kind) {
      CAPTURE(name);
      CAPTURE(kKinds[kind]);
      const auto dis_l = to_luminance(distort(ref, kind));
      CHECK(std::abs(ms_ssim(dis_l, ref_l) - testing::ms_ssim_oracle(dis_l, ref_l)) < 1e-4);
    }
    CHECK(ms_ssim(ref_l, ref_l) == 1.0);
  }
}

TEST_CASE("MS-SSIM on small images uses fewer scales") {
  CHECK(ms_ssim_scale_count(176, 176) == 5);
  CHECK(ms_ssim_scale_count(175, 400) == 4);
  CHECK(ms_ssim_scale_count(22, 22) == 2);
  CHECK(ms_ssim_scale_count(11, 11) == 1);
  CHECK(ms_ssim_scale_count(10, 40) == 0);
  const auto ref = testing::test_image("shapes", 60, 50);
  const auto ref_l = to_luminance(ref), dis_l = to_luminance(testing::gaussian_blur(ref, 1.0));
  CHECK(std::abs(ms_ssim(dis_l, ref_l) - testing::ms_ssim_oracle(dis_l, ref_l)) < 1e-4);
  CHECK_THROWS_AS(ms_ssim(LuminanceImage(10, 10), LuminanceImage(10, 10)), ValidationError);
  CHECK_THROWS_AS(ssim(LuminanceImage(10, 12), LuminanceImage(10, 12)), ValidationError);
}

TEST_CASE("single-scale MS-SSIM is SSIM") {
  const double one[] = {1.0};
  for (const char* name : {"gradient", "zoneplate", "cloud"}) {
    const auto ref = testing::test_image(name, 48, 48);
    const auto ref_l = to_luminance(ref), dis_l = to_luminance(testing::add_noise(ref, 20.0, 9));
    CHECK(std::abs(ms_ssim(dis_l, ref_l, one) - ssim(dis_l, ref_l)) < 1e-6);
  }
}

TEST_CASE("SSIM and MS-SSIM are symmetric") {
  const auto ref = testing::test_image("checker", 180, 180);
  const auto a = to_luminance(ref), b = to_luminance(jpeg_round_trip(testing::add_noise(ref, 8.0, 1), 30));
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-9);
  CHECK(std::abs(ms_ssim(a, b) - ms_ssim(b, a)) < 1e-9);
}

TEST_CASE("stronger blocking scores lower") {
  const auto ref = testing::test_image("cloud", 192, 192);
  const auto ref_l = to_luminance(ref);
  const double mild = ms_ssim(to_luminance(testing::blocking(ref, 8, 0.3)), ref_l);
  const double strong = ms_ssim(to_luminance(testing::blocking(ref, 8, 0.9)), ref_l);
  CHECK(strong < mild);
  CHECK(mild < 1.0);
}

TEST_CASE("texture sets aggregate by texel count") {
  const double values[] = {1.0, 0.0};
  const std::size_t texels[] = {4096u * 4096u, 1024u * 1024u};
  CHECK(texel_weighted_mean(values, texels) == Approx(16.0 / 17.0).epsilon(1e-12));
  const double single[] = {0.37};
  const std::size_t one[] = {5};
  CHECK(texel_weighted_mean(single, one) == 0.37);

  const std::vector<TextureImage> refs{testing::test_image("gradient", 64, 64), testing::test_image("shapes", 32, 48)};
  for (auto metric : {TextureMetric::ssim, TextureMetric::ms_ssim}) {
    const auto q = texture_quality(refs, refs, metric);
    REQUIRE(q.per_texture.size() == 2);
    CHECK(q.per_texture[0].value == 1.0);
    CHECK(q.per_texture[1].value == 1.0);
    CHECK(q.aggregate == 1.0);
  }
  CHECK(texture_quality(refs, refs, TextureMetric::rmse).aggregate == 0.0);

  // a sub-sampled texture is resampled to the reference size first
  const std::vector<TextureImage> small{resize_bilinear(refs[0], 32, 32), refs[1]};
  const auto q = texture_quality(small, refs, TextureMetric::ssim);
  CHECK(q.per_texture[0].value < 1.0);
  CHECK(q.per_texture[0].value > 0.5);
  const double expected = (q.per_texture[0].value * 4096 + 1.0 * 1536) / (4096 + 1536);
  CHECK(q.aggregate == Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(texture_quality(std::vector<TextureImage>{refs[0]}, refs, TextureMetric::ssim),
                  DimensionMismatchError);
  CHECK(parse_texture_metric("ms-ssim") == TextureMetric::ms_ssim);
}
