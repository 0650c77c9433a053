#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hmit/proofread_codes.hpp"

using namespace hmit::codes;

TEST(Registry, ThirtyOneCodesInThreeCategories) {
  auto reg = registry();
  ASSERT_EQ(reg.size(), 31u);
  std::size_t acc = 0, gram = 0, style = 0;
  std::set<std::string_view> seen;
  for (const auto& c : reg) {
    seen.insert(c.code);
    acc += c.category == Category::Accuracy;
    gram += c.category == Category::Grammar;
    style += c.category == Category::UsageAndStyle;
  }
  EXPECT_EQ(seen.size(), 31u);
  EXPECT_EQ(acc, 10u);
  EXPECT_EQ(gram, 12u);
  EXPECT_EQ(style, 9u);
  EXPECT_EQ(reg.front().code, "CW");
  EXPECT_EQ(reg.back().code, "TS");
  EXPECT_TRUE(lookup("Prep"));
  EXPECT_FALSE(lookup("prep"));
  EXPECT_FALSE(lookup("XX"));
}

TEST(Canonical, HandWrittenForms) {
  std::vector<AnnotationRecord> recs{{"UT", "costs", "訟費", std::nullopt},
                                     {"PN", "Director\"s", "署長的", std::nullopt},
                                     {"OM", "a\\b\nc", std::nullopt, "keep"}};
  EXPECT_EQ(format_annotations(recs),
            R"([UT] "costs" -> "訟費"; [PN] "Director\"s" -> "署長的"; [OM] "a\\b\nc" (note: "keep"))");
  EXPECT_EQ(format_annotations({}), "NONE");
  EXPECT_EQ(parse_canonical("NONE"), std::vector<AnnotationRecord>{});
}

TEST(Canonical, RejectsDeviations) {
  for (const char* bad : {"", "none", "[UT]\"x\"", "[UT] \"\"", "[UT] \"x\" ->\"y\"", "[UT] \"x\";[CW] \"y\"",
                          "[UT] \"x\\q\"", "[] \"x\"", "[UT] \"x", "[UT] \"x\" (note: \"n\""})
    EXPECT_FALSE(parse_canonical(bad)) << bad;
}

namespace {

std::string random_text(std::mt19937_64& rng, bool allow_empty) {
  static const std::vector<std::string> atoms{"a", "Z", " ", "\"", "\\", "\n", "\r", ";", "[", "]", "->", "(",
                                              ")", "note:", "判", "案", "書", "「", "」", "：", "NONE", "\t"};
  std::size_t n = std::uniform_int_distribution<std::size_t>(allow_empty ? 0 : 1, 12)(rng);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += atoms[rng() % atoms.size()];
  return s;
}

}  // namespace

TEST(Canonical, RoundTripsRandomRecords) {
  std::mt19937_64 rng(20240611);
  auto reg = registry();
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<AnnotationRecord> recs(rng() % 5);
    for (auto& r : recs) {
      r.code = std::string(reg[rng() % reg.size()].code);
      r.excerpt = random_text(rng, false);
      if (rng() % 3) r.suggestion = random_text(rng, true);
      if (rng() % 4 == 0) r.note = random_text(rng, true);
    }
    auto line = format_annotations(recs);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    auto back = parse_canonical(line);
    ASSERT_TRUE(back) << line;
    EXPECT_EQ(*back, recs) << line;
    EXPECT_EQ(parse_annotations(line).records, recs);
  }
}

TEST(Lenient, NeverThrowsOnNoise) {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 1000; ++iter) {
    std::string line;
    if (iter % 2) {
      line = random_text(rng, true) + "[" + std::string(registry()[rng() % 31].code) + "]" + random_text(rng, true);
    } else {
      std::size_t n = rng() % 80;
      for (std::size_t i = 0; i < n; ++i) line.push_back(static_cast<char>(rng() & 0xFF));
    }
    ParseResult r;
    ASSERT_NO_THROW(r = parse_annotations(line));
    for (const auto& rec : r.records) {
      EXPECT_TRUE(lookup(rec.code)) << rec.code;
      EXPECT_FALSE(rec.excerpt.empty());
    }
  }
}

TEST(Lenient, ReadsCommonFreeFormOutput) {
  auto r = parse_annotations("1. [UT] \"costs\" should be \"訟費\"\n2. (CW) 「dismissed」 → 「駁回」");
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0], (AnnotationRecord{"UT", "costs", "訟費", std::nullopt}));
  EXPECT_EQ(r.records[1], (AnnotationRecord{"CW", "dismissed", "駁回", std::nullopt}));

  auto arrow = parse_annotations("TL: leave -> 許可");
  ASSERT_EQ(arrow.records.size(), 1u);
  EXPECT_EQ(arrow.records[0].excerpt, "leave");
  EXPECT_EQ(arrow.records[0].suggestion, "許可");

  EXPECT_TRUE(parse_annotations("None.").records.empty());
  EXPECT_TRUE(parse_annotations("None.").warnings.empty());
}

TEST(Lenient, UnknownCodesBecomeWarnings) {
  auto r = parse_annotations("[XYZ] \"a\" -> \"b\"; [UT] \"c\" -> \"d\"");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].code, "UT");
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].message.find("XYZ"), std::string::npos);
  auto none = parse_annotations("looks fine to me");
  EXPECT_TRUE(none.records.empty());
  EXPECT_FALSE(none.warnings.empty());
}
