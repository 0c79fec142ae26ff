#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "mee/matrix.hpp"
#include "mee/rng.hpp"

using Catch::Approx;
using mee::Matrix;

TEST_CASE("matrix products") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});

  SECTION("plain product") {
    const Matrix c = mee::matmul(a, b);
    CHECK(c(0, 0) == 19.0);
    CHECK(c(0, 1) == 22.0);
    CHECK(c(1, 0) == 43.0);
    CHECK(c(1, 1) == 50.0);
  }

  SECTION("transposed variants agree with the explicit product") {
    const Matrix x = Matrix::from_rows({{1, -2, 0.5}, {2, 1, -1}});
    // x^T (2x3 -> 3x2) times b (2x2): matmul_at(x, b)
    const Matrix at = mee::matmul_at(x, b);
    Matrix xt(3, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j) xt(j, i) = x(i, j);
    const Matrix expected = mee::matmul(xt, b);
    for (std::size_t i = 0; i < at.size(); ++i)
      CHECK(at.data()[i] == Approx(expected.data()[i]).epsilon(1e-15));

    const Matrix bt = mee::matmul_bt(a, b);  // a times b^T
    Matrix btm(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) btm(j, i) = b(i, j);
    const Matrix expected2 = mee::matmul(a, btm);
    for (std::size_t i = 0; i < bt.size(); ++i)
      CHECK(bt.data()[i] == Approx(expected2.data()[i]).epsilon(1e-15));
  }

  SECTION("shape mismatches throw") {
    const Matrix wide(2, 3);
    CHECK_THROWS_AS(mee::matmul(wide, wide), mee::ShapeError);
    CHECK_THROWS_AS(mee::matmul_at(Matrix(2, 2), Matrix(3, 2)), mee::ShapeError);
    CHECK_THROWS_AS(mee::matmul_bt(Matrix(2, 2), Matrix(2, 3)), mee::ShapeError);
  }
}

TEST_CASE("row selection and column sums") {
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const Matrix picked = mee::take_rows(m, {2, 0});
  CHECK(picked(0, 0) == 5.0);
  CHECK(picked(1, 1) == 2.0);
  CHECK_THROWS_AS(mee::take_rows(m, {3}), mee::ShapeError);

  const auto sums = mee::column_sums(m);
  CHECK(sums[0] == 9.0);
  CHECK(sums[1] == 12.0);
}

TEST_CASE("seed derivation and shuffling") {
  SECTION("derived seeds differ across salts and masters") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t master : {1ull, 2ull, 99ull})
      for (std::uint64_t salt = 0; salt < 50; ++salt) seen.insert(mee::derive_seed(master, salt));
    CHECK(seen.size() == 150);
  }

  SECTION("shuffled_indices is a deterministic permutation") {
    const auto a = mee::shuffled_indices(100, 42);
    const auto b = mee::shuffled_indices(100, 42);
    const auto c = mee::shuffled_indices(100, 43);
    CHECK(a == b);
    CHECK(a != c);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  }
}
