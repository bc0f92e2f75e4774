#include <doctest.h>

#include <set>

#include "spda/errors.hpp"
#include "spda/test_images.hpp"

using namespace spda;

namespace {

std::set<double> levels(const Image& img) { return {img.pixels().begin(), img.pixels().end()}; }

}  // namespace

TEST_CASE("procedural images are piecewise constant with few levels") {
  const Image ridges = make_test_image(TestImageKind::ridges, 64);
  CHECK(ridges.rows() == 64);
  CHECK(ridges.cols() == 64);
  CHECK(levels(ridges).size() <= 8);
  CHECK(levels(ridges).size() >= 2);
  CHECK(levels(make_test_image(TestImageKind::constant, 32)).size() == 1);
  CHECK(levels(make_test_image(TestImageKind::flag_like, 64)).size() <= 8);
  CHECK(levels(make_test_image(TestImageKind::triangles, 64)).size() <= 8);
  for (auto kind : {TestImageKind::ridges, TestImageKind::flag_like, TestImageKind::constant,
                    TestImageKind::triangles}) {
    const Image img = make_test_image(kind, 40);
    CHECK(img == make_test_image(kind, 40));
    CHECK(img.min_value() >= 0.0);
    CHECK(img.max_value() <= 255.0);
    CHECK(img.max_value() > 0.0);
  }
}

TEST_CASE("test image kind names") {
  for (auto kind : {TestImageKind::ridges, TestImageKind::flag_like, TestImageKind::constant,
                    TestImageKind::triangles}) {
    CHECK(parse_test_image_kind(to_string(kind)) == kind);
  }
  CHECK(to_string(TestImageKind::flag_like) == "flag-like");
  CHECK_THROWS_AS(parse_test_image_kind("peppers"), InvalidArgument);
}
