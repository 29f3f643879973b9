#include <gtest/gtest.h>

#include "wearaug/tensor.hpp"

using wearaug::InvalidArgument;
using wearaug::Shape;
using wearaug::Tensor;

TEST(Tensor, SizeMatchesShapeProduct) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_THROW(Tensor({2, 0}), InvalidArgument);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST(Tensor, RowMajorOffsets) {
  Tensor t({2, 3});
  EXPECT_EQ(t.offset({1, 2}), 5u);
  EXPECT_EQ(t.offset({1, 0}), 3u);
  t.at({1, 1}) = 7.0;
  EXPECT_EQ(t[4], 7.0);
  EXPECT_THROW(t.offset({2, 0}), InvalidArgument);
  EXPECT_THROW(t.offset({0}), InvalidArgument);
}

// Exhaustive index <-> offset round trip on every shape up to [5,5,5,5].
TEST(Tensor, IndexOffsetRoundTripExhaustive) {
  for (std::size_t a = 1; a <= 5; ++a) {
    for (std::size_t b = 1; b <= 5; ++b) {
      for (std::size_t c = 1; c <= 5; ++c) {
        for (std::size_t d = 1; d <= 5; ++d) {
          Tensor t({a, b, c, d});
          std::size_t expected = 0;
          for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < b; ++j)
              for (std::size_t k = 0; k < c; ++k)
                for (std::size_t l = 0; l < d; ++l) {
                  const std::vector<std::size_t> idx{i, j, k, l};
                  const std::size_t off = t.offset(idx);
                  ASSERT_EQ(off, expected++);
                  ASSERT_EQ(t.unravel(off), idx);
                }
        }
      }
    }
  }
}

TEST(Tensor, DefaultIsScalar) {
  Tensor t;
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], 0.0);
}
