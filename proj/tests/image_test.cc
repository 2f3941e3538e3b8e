// Copyright 2026 The seedtrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "seedtrack/image.h"

#include <gtest/gtest.h>

#include "seedtrack/errors.h"

namespace seedtrack {
namespace {

TEST(ResolutionTest, ContainsIsHalfOpen) {
  const Resolution r{4, 3};
  EXPECT_TRUE(r.contains(0, 0));
  EXPECT_TRUE(r.contains(3, 2));
  EXPECT_FALSE(r.contains(4, 0));
  EXPECT_FALSE(r.contains(0, 3));
  EXPECT_FALSE(r.contains(-1, 0));
  EXPECT_EQ(r.pixels(), 12u);
  EXPECT_EQ(r.str(), "4x3");
}

TEST(BitmapTest, RowMajorInterleaved) {
  RgbImage img(Resolution{3, 2});
  img.pixel(2, 1)[1] = 7;
  EXPECT_EQ(img.data()[(1 * 3 + 2) * 3 + 1], 7);
  EXPECT_EQ(img.data().size(), 18u);
}

TEST(MaskTest, SetCountAndStorage) {
  Mask m(Resolution{5, 5});
  EXPECT_TRUE(m.none());
  m.set(1, 2);
  m.set(4, 4);
  m.set(4, 4);
  EXPECT_EQ(m.count(), 2u);
  EXPECT_EQ(m.bytes()[2 * 5 + 1], Mask::kOn);
  m.set(1, 2, false);
  EXPECT_EQ(m.count(), 1u);
}

TEST(MaskTest, UnionIntersectionSubset) {
  Mask a(Resolution{4, 4});
  Mask b(Resolution{4, 4});
  a.set(0, 0);
  a.set(1, 0);
  b.set(1, 0);
  b.set(2, 0);
  const Mask both = a & b;
  EXPECT_EQ(both.count(), 1u);
  EXPECT_TRUE(both.at(1, 0));
  EXPECT_TRUE(both.subset_of(a));
  EXPECT_FALSE(a.subset_of(b));
  Mask u = a;
  u |= b;
  EXPECT_EQ(u.count(), 3u);
  EXPECT_TRUE(a.subset_of(u));
  EXPECT_TRUE(b.subset_of(u));
}

TEST(MaskTest, MismatchedResolutionsThrow) {
  Mask a(Resolution{4, 4});
  const Mask b(Resolution{4, 5});
  EXPECT_THROW(a |= b, ResolutionMismatch);
  EXPECT_THROW((void)(a & b), ResolutionMismatch);
  EXPECT_FALSE(a.subset_of(b));
}

}  // namespace
}  // namespace seedtrack
