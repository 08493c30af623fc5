// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/format.hpp"
#include "memopt/random.hpp"

namespace memopt {
namespace {

TEST(FormatFixed, RoundsHalfUpFromShortestRepresentation) {
  EXPECT_EQ(format_fixed(0.1235, 3), "0.124");
  EXPECT_EQ(format_fixed(2.675, 2), "2.68");
  EXPECT_EQ(format_fixed(0.5, 0), "1");
  EXPECT_EQ(format_fixed(-0.0004, 3), "0.000");
  EXPECT_EQ(format_fixed(-1.2345, 3), "-1.235");
  EXPECT_EQ(format_fixed(0.912, 3), "0.912");
  EXPECT_EQ(format_fixed(12.0, 3), "12.000");
  EXPECT_EQ(format_fixed(0.9995, 3), "1.000");
}

TEST(FormatSigned, AlwaysCarriesSign) {
  EXPECT_EQ(format_signed(0.25, 3), "+0.250");
  EXPECT_EQ(format_signed(-0.25, 1), "-0.3");
  EXPECT_EQ(format_signed(0.0, 1), "+0.0");
}

TEST(Tsv, SkipsCommentsAndBlankLines) {
  const auto rows = parse_tsv("# header\n\na\t1\nb\t2\t3\n");
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[0].line, 3);
  EXPECT_EQ(rows[0].fields, (std::vector<std::string>{"a", "1"}));
  EXPECT_EQ(rows[1].fields.size(), 3U);
}

TEST(ShippedData, KnownAndUnknownNames) {
  EXPECT_TRUE(embedded_data("valence.tsv").has_value());
  EXPECT_FALSE(embedded_data("nope.tsv").has_value());
  try {
    shipped_data("nope.tsv");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(AtomicWrite, ReplacesWholeFile) {
  const auto dir = std::filesystem::temp_directory_path() / "memopt_test_common";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "out.txt").string();
  write_text_file_atomic(path, "first\n");
  write_text_file_atomic(path, "second\n");
  EXPECT_EQ(read_text_file(path), "second\n");
  std::filesystem::remove_all(dir);
}

TEST(Random, MixSeedIsDeterministicAndSaltSensitive) {
  EXPECT_EQ(mix_seed(7, 1), mix_seed(7, 1));
  EXPECT_NE(mix_seed(7, 1), mix_seed(7, 2));
  Rng a(42), b(42);
  std::vector<int> va{1, 2, 3, 4, 5, 6}, vb = va;
  shuffle_in_place(va, a);
  shuffle_in_place(vb, b);
  EXPECT_EQ(va, vb);
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform_unit(c);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace memopt
