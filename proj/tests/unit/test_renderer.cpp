// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "oracles/geometry_oracle.hpp"
#include "scenemark/errors.hpp"
#include "scenemark/image.hpp"
#include "scenemark/overlay.hpp"
#include "scenemark/render.hpp"
#include "scenemark/synth.hpp"
#include "support.hpp"

using namespace scenemark;
using doctest::Approx;

namespace {

PointCloud random_cloud(SplitRng& rng, std::size_t n) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.positions.emplace_back(rng.uniform(-3, 4), rng.uniform(-2, 2), rng.uniform(0, 3));
    c.colors.push_back({static_cast<std::uint8_t>(rng.below(256)),
                        static_cast<std::uint8_t>(rng.below(256)),
                        static_cast<std::uint8_t>(rng.below(256))});
  }
  return c;
}

int changed_pixels(const RgbImage& a, const RgbImage& b) {
  int n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) n += !(a.at(x, y) == b.at(x, y));
  }
  return n;
}

RgbImage gradient(int w, int h) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(x * 255 / std::max(1, w - 1)),
                     static_cast<std::uint8_t>(y * 255 / std::max(1, h - 1)), 90});
    }
  }
  return img;
}

}  // namespace

TEST_CASE("BEV of a single point is one colored pixel") {
  PointCloud c;
  c.positions = {Vec3(1.5, -0.5, 0.7)};
  c.colors = {{255, 0, 0}};
  const auto bev = render_bev(c);
  int colored = 0;
  for (int y = 0; y < bev.pixels.height(); ++y) {
    for (int x = 0; x < bev.pixels.width(); ++x) colored += !(bev.pixels.at(x, y) == Rgb{255, 255, 255});
  }
  CHECK(colored == 1);
  const Vec2 uv = bev.to_pixel(Vec2(1.5, -0.5));
  CHECK(bev.pixels.at(static_cast<int>(std::floor(uv.x())), static_cast<int>(std::floor(uv.y()))) ==
        Rgb{255, 0, 0});
}

TEST_CASE("BEV keeps the highest point of a cell") {
  PointCloud c;
  c.positions = {Vec3(0, 0, 0.1), Vec3(0, 0, 2.0), Vec3(3, 3, 0)};
  c.colors = {{0, 0, 255}, {0, 255, 0}, {9, 9, 9}};
  BevConfig cfg;
  cfg.z_clip_percentile.reset();
  const auto bev = render_bev(c, cfg);
  const auto cell = bev.cell_of(Vec2(0, 0));
  CHECK(bev.pixels.at(cell.x(), cell.y()) == Rgb{0, 255, 0});
  CHECK(bev.top_point_at(cell.x(), cell.y()) == 1);
}

TEST_CASE("BEV image up is world +y and the transform round-trips") {
  SplitRng rng(12);
  const auto c = random_cloud(rng, 200);
  const auto bev = render_bev(c);
  const Vec2 a = bev.to_pixel(Vec2(0, 0));
  const Vec2 b = bev.to_pixel(Vec2(0, 1));
  CHECK(b.y() < a.y());
  CHECK(b.x() == Approx(a.x()));
  CHECK(bev.pixels.width() == 512);
  CHECK(bev.pixels.height() == 490);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p(rng.uniform(-3, 4), rng.uniform(-2, 2));
    CHECK((bev.to_world(bev.to_pixel(p)) - p).norm() < 0.5 * bev.meters_per_pixel);
  }
  // The cloud plus margin fits inside the raster.
  for (const auto& p : c.positions) {
    const Vec2 uv = bev.to_pixel(p.head<2>());
    CHECK(uv.x() >= 3.999);
    CHECK(uv.x() <= 508.001);
    CHECK(uv.y() >= 3.999);
    CHECK(uv.y() <= 486.001);
  }
}

TEST_CASE("BEV matches a brute-force per-cell scan") {
  SplitRng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const auto c = random_cloud(rng, 3000);
    BevConfig cfg;
    cfg.width = 96;
    cfg.height = 80;
    const auto bev = render_bev(c, cfg);
    const auto& A = bev.world_to_pixel;
    const double a[6] = {A(0, 0), A(0, 1), A(0, 2), A(1, 0), A(1, 1), A(1, 2)};
    const double limit = oracle::nearest_rank_height(c, 95.0);
    REQUIRE(bev.z_clip);
    CHECK(*bev.z_clip == limit);
    const auto top = oracle::bev_top_points(c, a, cfg.width, cfg.height, limit);
    CHECK(top == bev.top_point);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const auto t = top[static_cast<std::size_t>(y) * cfg.width + x];
        const Rgb expect = t < 0 ? cfg.background : c.colors[static_cast<std::size_t>(t)];
        CHECK(bev.pixels.at(x, y) == expect);
      }
    }
  }
}

TEST_CASE("BEV rejects an empty cloud and a margin with no room") {
  CHECK_THROWS_AS(render_bev(PointCloud{}), InvalidArgument);
  PointCloud c;
  c.positions = {Vec3(0, 0, 0)};
  c.colors.resize(1);
  BevConfig cfg;
  cfg.width = 8;
  cfg.height = 8;
  cfg.margin_px = 4;
  CHECK_THROWS_AS(render_bev(c, cfg), InvalidArgument);
}

TEST_CASE("frame z-buffer") {
  const CameraIntrinsics K{40, 40, 20, 15, 40, 30};
  PointCloud one;
  one.positions = {Vec3(0, 0, 2)};
  one.colors.resize(1);
  const auto z = render_frame_zbuffer(one, CameraPose{}, K, 0);
  CHECK(z(15, 20) == 2.0);
  CHECK(z(0, 0) == kEmptyDepth);
  CHECK((z < kEmptyDepth).count() == 1);

  SplitRng rng(14);
  for (int trial = 0; trial < 4; ++trial) {
    PointCloud c;
    for (int i = 0; i < 300; ++i) {
      c.positions.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 5));
    }
    c.colors.resize(c.size());
    const Mat4 m = Mat4::Identity();
    const int radius = static_cast<int>(trial % 3);
    const auto zb = render_frame_zbuffer(c, CameraPose::from_matrix(m), K, radius);
    const auto expect = oracle::zbuffer(c, m, K.fx, K.fy, K.cx, K.cy, K.width, K.height, radius);
    for (int y = 0; y < K.height; ++y) {
      for (int x = 0; x < K.width; ++x) CHECK(zb(y, x) == expect[y * K.width + x]);
    }
  }
}

TEST_CASE("overlay with no markers returns the input") {
  const auto img = gradient(64, 48);
  const auto out = overlay_markers(img, {});
  CHECK(out.image == img);
  CHECK(out.drawn_ids.empty());
}

TEST_CASE("one marker changes only pixels near it") {
  const auto img = gradient(512, 490);
  const std::vector<PlacedMarker> m{{5, Vec2(200, 150), 100}};
  MarkerStyle style;
  const auto out = overlay_markers(img, m, style);
  CHECK(out.drawn_ids == std::vector<int>{5});
  const double r = marker_radius(style, m[0], 512);
  int fill = 0, label = 0;
  for (int y = 0; y < 490; ++y) {
    for (int x = 0; x < 512; ++x) {
      if (std::hypot(x + 0.5 - 200, y + 0.5 - 150) > r + 1.0) {
        CHECK(out.image.at(x, y) == img.at(x, y));
      } else {
        fill += out.image.at(x, y) == style.fill;
        label += out.image.at(x, y) == style.text;
      }
    }
  }
  CHECK(fill > 0);
  CHECK(label > 0);
  CHECK(overlay_markers(img, m, style).image == out.image);
}

TEST_CASE("marker radius scales with width and adaptive radius is clamped") {
  MarkerStyle s;
  const PlacedMarker m{1, Vec2(0, 0), 400};
  CHECK(marker_radius(s, m, 512) == 6.0);
  CHECK(marker_radius(s, m, 128) == 1.5);
  s.adaptive = true;
  CHECK(marker_radius(s, m, 512) == Approx(5.0));
  CHECK(marker_radius(s, {1, Vec2(0, 0), 1}, 512) == 3.0);
  CHECK(marker_radius(s, {1, Vec2(0, 0), 100000}, 512) == 14.0);
}

TEST_CASE("dropout removes floor(f * K) markers, the same ones every time") {
  std::vector<PlacedMarker> ms;
  for (int id = 1; id <= 10; ++id) ms.push_back({id, Vec2(10 + 10 * id, 60), 50});
  MarkerStyle s;
  s.dropout_fraction = 0.3;
  s.dropout_seed = 99;
  const auto img = gradient(128, 123);
  const auto a = overlay_markers(img, ms, s);
  const auto b = overlay_markers(img, ms, s);
  CHECK(a.drawn_ids.size() == 7);
  CHECK(a.dropped_ids.size() == 3);
  CHECK(a.drawn_ids == b.drawn_ids);
  CHECK(a.image == b.image);
  auto reversed = ms;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(overlay_markers(img, reversed, s).drawn_ids == a.drawn_ids);

  std::set<std::set<int>> distinct;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<int> ids{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto d = dropout_ids(ids, 0.3, seed);
    CHECK(d.size() == 3);
    distinct.insert(d);
  }
  CHECK(distinct.size() > 1);
  CHECK_THROWS_AS(dropout_ids(std::vector<int>{1}, 1.0, 0), InvalidArgument);
}

TEST_CASE("markers outside the image are skipped and counted") {
  const auto img = gradient(32, 32);
  const std::vector<PlacedMarker> ms{{1, Vec2(-5, 3), 1}, {2, Vec2(16, 16), 1}};
  const auto out = overlay_markers(img, ms);
  CHECK(out.skipped_out_of_bounds == 1);
  CHECK(out.drawn_ids == std::vector<int>{2});
}

TEST_CASE("stitch") {
  std::vector<RgbImage> tiles;
  for (int i = 0; i < 8; ++i) tiles.emplace_back(16, 12, Rgb{static_cast<std::uint8_t>(i * 30), 0, 0});
  const auto st = stitch(tiles, 2, 4);
  CHECK(st.pixels.width() == 64);
  CHECK(st.pixels.height() == 24);
  CHECK(st.pixels.at(0, 0) == tiles[0].at(0, 0));
  CHECK(st.pixels.at(16 * 3, 0) == tiles[3].at(0, 0));
  CHECK(st.pixels.at(16, 12) == tiles[5].at(0, 0));
  CHECK(stitch(std::span(tiles).first(1), 1, 1).pixels == tiles[0]);
  CHECK_THROWS_AS(stitch(std::span(tiles).first(7), 2, 4), InvalidArgument);
  tiles[2] = RgbImage(15, 12);
  CHECK_THROWS_AS(stitch(tiles, 2, 4), InvalidArgument);
}

TEST_CASE("default grid") {
  CHECK(default_grid(8) == std::pair{2, 4});
  CHECK(default_grid(32).first * default_grid(32).second == 32);
  CHECK(default_grid(1) == std::pair{1, 1});
}

TEST_CASE("resize presets") {
  CHECK(resize_preset(gradient(640, 480), Preset::base).width() == 128);
  CHECK(resize_preset(gradient(640, 480), Preset::base).height() == 123);
  const auto hd = gradient(512, 490);
  CHECK(resize_preset(hd, Preset::hd) == hd);
  const auto big = resize_preset(gradient(1296, 968), Preset::hd);
  CHECK(big.width() == 512);
  CHECK(big.height() == 490);
  CHECK(preset_info(Preset::hdm).frames == 32);
  CHECK(preset_info(Preset::hd).frames == 8);
  CHECK_THROWS_AS(parse_preset("uhd"), InvalidArgument);
  const RgbImage flat(300, 200, Rgb{10, 200, 30});
  CHECK(resize_preset(flat, Preset::base) == RgbImage(128, 123, Rgb{10, 200, 30}));
}

TEST_CASE("PNG round trip") {
  const auto img = gradient(37, 21);
  CHECK(decode_png(encode_png(img)) == img);
  CHECK_THROWS(decode_png("not a png"));
}

TEST_CASE("BEV markers of a synthetic scene land on their object's footprint") {
  SynthSpec spec;
  spec.object_count = 4;
  spec.frame_count = 1;
  const auto s = synth_scene(spec, 21);
  const auto bev = render_bev(s.bundle.cloud);
  for (const auto& inst : s.bundle.instances) {
    // Footprint: bounding rectangle of the cells the object's points win.
    const std::set<std::size_t> own(inst.point_indices.begin(), inst.point_indices.end());
    int x0 = 1 << 30, x1 = -1, y0 = 1 << 30, y1 = -1;
    for (int y = 0; y < bev.pixels.height(); ++y) {
      for (int x = 0; x < bev.pixels.width(); ++x) {
        const auto t = bev.top_point_at(x, y);
        if (t < 0 || !own.count(static_cast<std::size_t>(t))) continue;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
    REQUIRE(x1 >= 0);
    const auto cell = bev.cell_of(inst.aabb.center().head<2>());
    CHECK(cell.x() >= x0);
    CHECK(cell.x() <= x1);
    CHECK(cell.y() >= y0);
    CHECK(cell.y() <= y1);
  }
}
