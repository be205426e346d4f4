#include "symreg/io.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

namespace symreg::io {
namespace {

PointTable parse(const std::string& text) {
  std::istringstream in(text);
  return parse_points(in, "mem");
}

TEST(Parse, TwoColumns) {
  const auto t = parse("0 0\n1 0\n");
  EXPECT_EQ(t.dim, 2);
  ASSERT_EQ(t.size(), 2u);
  const auto s = t.as<2>();
  EXPECT_EQ(s[1], Vec<2>(1.0, 0.0));
}

TEST(Parse, CommentsBlankLinesAndCommas) {
  const auto t = parse("# header\n\n1.5, -2e-3  # trailing\n\t+3,4\r\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.coords, (std::vector<double>{1.5, -2e-3, 3.0, 4.0}));
}

TEST(Parse, ThreeColumns) {
  const auto t = parse("1 2 3\n4 5 6\n");
  EXPECT_EQ(t.dim, 3);
  EXPECT_EQ(t.as<3>()[1], Vec<3>(4, 5, 6));
  EXPECT_THROW(t.as<2>(), std::invalid_argument);
}

TEST(Parse, ErrorsCarryLineNumbers) {
  try {
    parse("0 0\n1 x\n");
    FAIL() << "no exception";
  } catch (const PointFileError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("mem:2"), std::string::npos);
  }
  try {
    parse("0 0\n\n1 2 3\n");
    FAIL() << "no exception";
  } catch (const PointFileError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("mixed"), std::string::npos);
  }
  EXPECT_THROW(parse("1\n"), PointFileError);
  EXPECT_THROW(parse("1 2 3 4\n"), PointFileError);
  EXPECT_THROW(parse("1.0.0 2\n"), PointFileError);
}

TEST(Parse, EmptyInputHasNoPoints) {
  EXPECT_EQ(parse("# nothing\n").size(), 0u);
}

TEST(File, RoundTripIsExact) {
  std::mt19937_64 rng(101);
  const auto s = testing::random_set<3>(rng, 100, 5.0);
  const auto path = std::filesystem::temp_directory_path() / "symreg_io_roundtrip.xyz";
  save_points(path, s, "first line\nsecond line");
  const auto back = load_points(path).as<3>();
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(back[i], s[i]);
  std::filesystem::remove(path);
}

TEST(File, MissingAndEmptyFilesAreErrors) {
  const auto dir = std::filesystem::temp_directory_path();
  EXPECT_THROW(load_points(dir / "symreg_does_not_exist.xyz"), std::runtime_error);
  const auto empty = dir / "symreg_io_empty.xyz";
  { std::ofstream(empty) << "# only a comment\n"; }
  EXPECT_THROW(load_points(empty), std::runtime_error);
  std::filesystem::remove(empty);
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

}  // namespace
}  // namespace symreg::io
