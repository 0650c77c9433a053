#include <gtest/gtest.h>

#include "hmit/jsonl.hpp"
#include "hmit/text.hpp"
#include "support.hpp"

using namespace hmit;

TEST(Text, CountsScalarsNotBytes) {
  EXPECT_EQ(text::count_scalars(""), 0u);
  EXPECT_EQ(text::count_scalars("abc"), 3u);
  EXPECT_EQ(text::count_scalars("判案書"), 3u);
  EXPECT_EQ(text::count_scalars("a判\xF0\x9F\x98\x80"), 3u);  // 4-byte emoji
}

TEST(Text, Utf8RoundTrip) {
  std::string s = "Hong Kong 香港 \xF0\xA0\x80\x80 end";
  EXPECT_EQ(text::encode_utf8(text::decode_utf8(s)), s);
}

TEST(Text, InvalidBytesBecomeReplacementChar) {
  auto u = text::decode_utf8("a\xFF" "b");
  ASSERT_EQ(u.size(), 3u);
  EXPECT_EQ(u[1], U'�');
}

TEST(Text, ReplaceAllCountsNonOverlapping) {
  std::string s = "aaaa";
  EXPECT_EQ(text::replace_all(s, "aa", "b"), 2u);
  EXPECT_EQ(s, "bb");
  std::string t = "判案書及判案書";
  EXPECT_EQ(text::replace_all(t, "判案書", "判決書"), 2u);
  EXPECT_EQ(t, "判決書及判決書");
  EXPECT_EQ(text::count_occurrences("x", ""), 0u);
}

TEST(Text, TrimAndSplit) {
  EXPECT_EQ(text::trim("  a b \t\n"), "a b");
  auto w = text::split_whitespace("  one two\tthree\n");
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[2], "three");
  auto lines = text::split_lines("a\nb\n");
  EXPECT_EQ(lines.size(), 2u);
}

TEST(Text, CjkLanguageTags) {
  EXPECT_TRUE(text::is_cjk_language("zh-HK"));
  EXPECT_TRUE(text::is_cjk_language("ja"));
  EXPECT_FALSE(text::is_cjk_language("en"));
  EXPECT_FALSE(text::is_cjk_language("zu"));
}

TEST(Jsonl, AtomicWriteAndDurableAppend) {
  hmit::testing::TempDir dir;
  auto p = dir / "f.jsonl";
  jsonl::write_file_atomic(p, "{\"a\":1}\n");
  jsonl::append_line_durable(p, "{\"a\":2}");
  std::vector<int> seen;
  jsonl::for_each_record(p, [&](const jsonl::Json& j, std::size_t) { seen.push_back(j["a"].get<int>()); });
  EXPECT_EQ(seen, (std::vector<int>{1, 2}));
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir.path()), {}), 1);  // no temp files left behind
}

TEST(Jsonl, ReportsLineOfBadRecord) {
  hmit::testing::TempDir dir;
  auto p = dir / "bad.jsonl";
  hmit::testing::write(p, "{\"a\":1}\n\n[1,2]\n");
  try {
    jsonl::for_each_record(p, [](const jsonl::Json&, std::size_t) {});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
  }
}
