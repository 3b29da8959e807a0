#include "lfsep/image.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace lfsep;

TEST_CASE("unroll is row-major") {
  Plane p(2, 2);
  p << 1, 2, 3, 4;
  const RowVector v = unroll(p);
  REQUIRE(v.size() == 4);
  CHECK(v(0) == 1);
  CHECK(v(1) == 2);
  CHECK(v(2) == 3);
  CHECK(v(3) == 4);
}

TEST_CASE("unroll of zeros is zero") {
  CHECK(unroll(Plane::Zero(3, 5)).isZero(0.0));
}

TEST_CASE("roll inverts unroll bit-exactly") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Plane p = testing::random_matrix(5, 7, rng, -1e3, 1e3);
    CHECK(roll(unroll(p), 5, 7) == p);
  }
}

TEST_CASE("roll rejects a length mismatch") {
  CHECK_THROWS_AS(roll(RowVector::Zero(5), 2, 3), InputError);
}

TEST_CASE("image construction and luma") {
  Image img(4, 6, 3, 0.25);
  CHECK(img.height() == 4);
  CHECK(img.width() == 6);
  CHECK(img.channel_count() == 3);
  img.channel(0).setConstant(1.0);
  img.channel(1).setConstant(0.0);
  img.channel(2).setConstant(0.0);
  CHECK(img.luma()(0, 0) == doctest::Approx(0.299));
  const Image gray = Image::from_plane(Plane::Constant(2, 2, 0.5));
  CHECK(gray.luma() == gray.channel(0));
}

TEST_CASE("image rejects mismatched planes") {
  std::vector<Plane> planes{Plane::Zero(2, 2), Plane::Zero(3, 2)};
  CHECK_THROWS_AS(Image(std::move(planes)), InputError);
}

TEST_CASE("disparity map range check") {
  DisparityMap d(3, 3, 1.5);
  CHECK(d.all_finite());
  CHECK(d.within(-2.0, 2.0));
  CHECK_FALSE(d.within(-1.0, 1.0));
}
