#include <doctest.h>

#include <map>
#include <set>

#include "support/images.hpp"
#include "support/shapes.hpp"
#include "texmesh/errors.hpp"
#include "texmesh/image_io.hpp"
#include "texmesh/mesh_io.hpp"

using namespace texmesh;

namespace {

const char* kQuad =
    "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
    "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
    "f 1/1 2/2 3/3\nf 1/1 3/3 4/4\n";

std::multiset<std::pair<std::uint32_t, std::pair<double, double>>> corner_pairs(const TexturedMesh& m) {
  std::multiset<std::pair<std::uint32_t, std::pair<double, double>>> out;
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k) out.insert({m.triangles[t][k], {m.corner_uvs[t][k].x(), m.corner_uvs[t][k].y()}});
  return out;
}

void require_same(const TexturedMesh& a, const TexturedMesh& b) {
  REQUIRE(a.vertices.size() == b.vertices.size());
  REQUIRE(a.triangles == b.triangles);
  for (std::size_t i = 0; i < a.vertices.size(); ++i) CHECK(a.vertices[i] == b.vertices[i]);
  for (std::size_t t = 0; t < a.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k) CHECK(a.corner_uvs[t][k] == b.corner_uvs[t][k]);
  CHECK(a.material_of_triangle == b.material_of_triangle);
}

AssetResolver memory_resolver(std::map<std::string, std::string> libs, std::map<std::string, TextureImage> images) {
  AssetResolver r;
  r.read_material_library = [libs](const std::string& n) {
    const auto it = libs.find(n);
    if (it == libs.end()) throw ResolutionError(n, "no library " + n);
    return it->second;
  };
  r.load_texture = [images](const std::string& n) {
    const auto it = images.find(n);
    if (it == images.end()) throw ResolutionError(n, "missing texture '" + n + "'");
    return it->second;
  };
  return r;
}

}  // namespace

TEST_CASE("two-triangle quad parses as written") {
  const auto m = parse_obj(kQuad);
  CHECK(m.vertex_count() == 4);
  CHECK(m.triangle_count() == 2);
  CHECK(m.corner_uvs[1][1] == Vec2(1, 1));
  CHECK(m.corner_uvs[1][2] == Vec2(0, 1));
  CHECK(m.textures.empty());
}

TEST_CASE("seam vertex keeps distinct corner UVs") {
  const auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 0.5 0.5\n"
                           "f 1/1 2/2 3/3\nf 1/4 4/2 2/2\n");
  CHECK(m.triangles[0][0] == 0);
  CHECK(m.triangles[1][0] == 0);
  CHECK(m.corner_uvs[0][0] != m.corner_uvs[1][0]);
}

TEST_CASE("out-of-range UV index cites the face line") {
  const std::string text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 1 1\nf 1/9 2/2 3/3\n";
  try {
    parse_obj(text);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 8") != std::string::npos);
  }
}

TEST_CASE("malformed record reports its line") {
  try {
    parse_obj("v 0 0 0\nv 1 zero 0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("polygons fan-triangulate and negative indices resolve") {
  const auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv -1 0.5 0\nf -5 -4 -3 -2 -1\nf 1 2 3\n");
  CHECK(m.triangle_count() == 4);
  CHECK(m.triangles[0] == Triangle{0, 1, 2});
  CHECK(m.triangles[1] == Triangle{0, 2, 3});
  CHECK(m.triangles[2] == Triangle{0, 3, 4});
}

TEST_CASE("face count equals the sum of corners minus two") {
  const auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 2 2 0\nv 3 3 1\n"
                           "f 1 2 3\nf 1 2 3 4\nf 1 2 3 4 5 6\nvn 0 0 1\no x\ng y\n# c\nf 1//1 2//1 3//1\n");
  CHECK(m.triangle_count() == 1 + 2 + 4 + 1);
}

TEST_CASE("three identical corners are rejected") {
  CHECK_THROWS_AS(parse_obj("v 0 0 0\nf 1 1 1\n"), ValidationError);
}

TEST_CASE("materials resolve through the resolver") {
  TextureImage red(2, 2, 3, 0), blue(3, 1, 3, 9);
  const auto r = memory_resolver({{"m.mtl", "newmtl a\nmap_Kd a.png\nnewmtl b\nmap_Kd b.png\n"}},
                                 {{"a.png", red}, {"b.png", blue}});
  const auto m = parse_obj(std::string("mtllib m.mtl\n") + kQuad + "usemtl b\nf 2/2 3/3 4/4\nusemtl a\nf 1 2 4\n", &r);
  REQUIRE(m.textures.size() == 2);
  // faces before any usemtl take the first library material
  CHECK(m.material_of_triangle == std::vector<std::uint32_t>{1, 1, 0, 1});
  CHECK(m.material_names == std::vector<std::string>{"b", "a"});
  CHECK(m.textures[0] == blue);
  CHECK(m.textures[1] == red);
}

TEST_CASE("missing texture names the file") {
  const auto r = memory_resolver({{"m.mtl", "newmtl a\nmap_Kd lost.png\n"}}, {});
  try {
    parse_obj(std::string("mtllib m.mtl\nusemtl a\n") + kQuad, &r);
    FAIL("expected a resolution error");
  } catch (const ResolutionError& e) {
    CHECK(e.name() == "lost.png");
    CHECK(std::string(e.what()).find("lost.png") != std::string::npos);
  }
}

TEST_CASE("bounding box examples") {
  TexturedMesh cube;
  for (int i = 0; i < 8; ++i) cube.vertices.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  auto b = bounding_box(cube);
  CHECK(b.min == Vec3(0, 0, 0));
  CHECK(b.max == Vec3(1, 1, 1));
  CHECK(b.max_extent() == 1.0);

  TexturedMesh one;
  one.vertices = {{2, -1, 3}};
  b = bounding_box(one);
  CHECK(b.min == b.max);
  CHECK(b.max_extent() == 0.0);

  CHECK(bounding_box(std::vector<Vec3>{{0, 0, 0}, {1, 2, 0.5}}).max_extent() == 2.0);
  CHECK_THROWS_AS(bounding_box(TexturedMesh{}), EmptyInputError);
}

TEST_CASE("write then parse is the identity") {
  SUBCASE("quad") {
    const auto m = parse_obj(kQuad);
    const auto text = write_obj(m);
    int v = 0, f = 0, vt = 0;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      v += line.rfind("v ", 0) == 0;
      vt += line.rfind("vt ", 0) == 0;
      f += line.rfind("f ", 0) == 0;
    }
    CHECK(v == 4);
    CHECK(vt <= 4);
    CHECK(f == 2);
    CHECK(text.find("usemtl") == std::string::npos);
    require_same(parse_obj(text), m);
  }
  SUBCASE("seamed sphere with awkward coordinates") {
    auto m = testing::bumpy_sphere(2, 0.1, 3.0);
    for (auto& p : m.vertices) p *= 1.0 / 3.0;
    const auto back = parse_obj(write_obj(m));
    require_same(back, m);
    CHECK(corner_pairs(back) == corner_pairs(m));
  }
}

TEST_CASE("textured save and load round trip through files") {
  const auto dir = testing::scratch_dir("objio");
  auto m = testing::icosphere(1);
  m.textures = {testing::test_image("checker", 32, 16), testing::test_image("gradient", 8, 8)};
  m.material_names = {"skin", "eyes"};
  for (std::size_t t = 0; t < m.triangles.size(); ++t) m.material_of_triangle[t] = t % 2;
  save_textured_obj(m, dir / "model.obj");
  const auto back = load_obj(dir / "model.obj");
  require_same(back, m);
  REQUIRE(back.textures.size() == 2);
  CHECK(back.textures[0] == m.textures[0]);
  CHECK(back.textures[1] == m.textures[1]);
  CHECK(back.material_names == m.material_names);
}

TEST_CASE("PNG and JPEG codecs") {
  const auto img = testing::test_image("cloud", 40, 30);
  CHECK(decode_image(encode_png(img)) == img);
  TextureImage gray(5, 7, 1, 100);
  CHECK(decode_png(encode_png(gray)) == gray);
  const auto jpeg = decode_image(encode_jpeg(img, 90));
  CHECK(jpeg.width == 40);
  CHECK(jpeg.height == 30);
  CHECK(jpeg.channels == 3);
  CHECK_THROWS_AS(decode_image(std::vector<std::uint8_t>{1, 2, 3, 4}), CodecError);
  CHECK_THROWS_AS(read_file_bytes("/nonexistent/texmesh.png"), ResolutionError);
}
