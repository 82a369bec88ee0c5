#include <doctest.h>

#include "gated/errors.hpp"
#include "gated/tensor.hpp"

using gated::Tensor;
using gated::TensorD;

TEST_CASE("construction and indexing") {
  Tensor t(2, 3, 4, 5, 1.5f);
  CHECK(t.n() == 2);
  CHECK(t.c() == 3);
  CHECK(t.h() == 4);
  CHECK(t.w() == 5);
  CHECK(t.numel() == 2 * 3 * 4 * 5);
  CHECK(t[0] == 1.5f);

  t.at(1, 2, 3, 4) = 9.f;
  CHECK(t[t.numel() - 1] == 9.f);  // NCHW: that index is the last element
  t.at(0, 0, 0, 1) = 7.f;
  CHECK(t[1] == 7.f);
}

TEST_CASE("default tensor is empty") {
  Tensor t;
  CHECK(t.empty());
  CHECK(t.numel() == 0);
}

TEST_CASE("negative dimension throws") {
  CHECK_THROWS_AS(Tensor(1, -3, 4, 4), gated::ShapeError);
}

TEST_CASE("fill and zero") {
  Tensor t(1, 1, 2, 2);
  t.fill(3.f);
  CHECK(t.at(0, 0, 1, 1) == 3.f);
  t.zero();
  CHECK(t.at(0, 0, 1, 1) == 0.f);
}

TEST_CASE("plane pointer walks channels") {
  Tensor t(2, 2, 2, 2);
  for (size_t i = 0; i < t.numel(); ++i) t[i] = float(i);
  CHECK(t.plane(0, 1)[0] == 4.f);
  CHECK(t.plane(1, 0)[0] == 8.f);
}

TEST_CASE("cast converts precision both ways") {
  Tensor t(1, 1, 1, 3);
  t[0] = 0.5f;
  t[1] = -2.f;
  t[2] = 0.125f;
  TensorD d = t.cast<double>();
  CHECK(d[1] == -2.0);
  Tensor back = d.cast<float>();
  CHECK(back[2] == 0.125f);
}

TEST_CASE("shape equality helpers") {
  Tensor a(1, 3, 4, 4), b(1, 3, 4, 4), c(1, 3, 4, 5);
  CHECK(a.same_shape(b));
  CHECK(!a.same_shape(c));
  CHECK_NOTHROW(gated::check_same_shape(a, b, "pair"));
  CHECK_THROWS_AS(gated::check_same_shape(a, c, "pair"), gated::ShapeError);
  CHECK(a.shape_str() == "(1, 3, 4, 4)");
}
