#include <gtest/gtest.h>

#include "hmit/corpus.hpp"
#include "hmit/error.hpp"
#include "support.hpp"

using namespace hmit;
using hmit::testing::fixture;
using hmit::testing::TempDir;

// Counts below were computed from the fixture file by a separate Python
// script (len() over str, i.e. code points), not by this library.
TEST(Corpus, FixtureStatsMatchIndependentCounts) {
  auto segs = corpus::load_corpus(fixture("corpus3.jsonl"));
  ASSERT_EQ(segs.size(), 10u);
  auto st = corpus::corpus_stats(segs, {});
  EXPECT_EQ(st.document_count, 3u);
  EXPECT_EQ(st.segment_count, 10u);
  EXPECT_EQ(st.source_characters, 622u);
  EXPECT_EQ(st.target_characters, 174u);
  EXPECT_EQ(st.total_characters, 796u);
  ASSERT_EQ(st.per_year.size(), 3u);
  EXPECT_EQ(st.per_year[0], (corpus::YearStats{2021, 1, 302}));
  EXPECT_EQ(st.per_year[1], (corpus::YearStats{2022, 1, 262}));
  EXPECT_EQ(st.per_year[2], (corpus::YearStats{2023, 1, 232}));
}

TEST(Corpus, LoadSortsByKey) {
  auto segs = corpus::load_corpus(fixture("corpus3.jsonl"));
  EXPECT_EQ(segs.front().doc_id, "CACC 45/2023");
  EXPECT_EQ(segs.front().seg_id, 1);
  EXPECT_EQ(segs.back().doc_id, "HCAL 1024/2022");
  EXPECT_EQ(segs.back().seg_id, 3);
}

TEST(Corpus, CleanText) {
  EXPECT_EQ(corpus::clean_text("  a\tb \r\n\r\n  c  \n"), "a b\nc");
  EXPECT_EQ(corpus::clean_text("\n\n"), "");
}

TEST(Corpus, LoadRejectsBrokenRecords) {
  TempDir dir;
  auto p = dir / "c.jsonl";
  hmit::testing::write(p, R"({"doc_id":"A/2020","seg_id":1,"en":"x","zh-HK":"y","extra":1})" "\n");
  EXPECT_THROW(corpus::load_corpus(p), ParseError);
  hmit::testing::write(p, R"({"doc_id":"A/2020","seg_id":1,"en":"x"})" "\n");
  EXPECT_THROW(corpus::load_corpus(p), ParseError);
  hmit::testing::write(p, R"({"doc_id":"A/2020","seg_id":1,"en":"x","zh-HK":"y"})" "\n"
                          R"({"doc_id":"A/2020","seg_id":1,"en":"x","zh-HK":"y"})" "\n");
  EXPECT_THROW(corpus::load_corpus(p), ValidationError);
  hmit::testing::write(p, R"({"doc_id":"A/2020","seg_id":1,"en":"x","zh-HK":"y"})" "\n"
                          R"({"doc_id":"A/2020","seg_id":3,"en":"x","zh-HK":"y"})" "\n");
  EXPECT_THROW(corpus::load_corpus(p), ValidationError);
  hmit::testing::write(p, R"({"doc_id":"A/2020","seg_id":1,"en":"  \t ","zh-HK":"y"})" "\n");
  EXPECT_THROW(corpus::load_corpus(p), ValidationError);
}

TEST(Corpus, LoadCleansAndSaveRoundTrips) {
  TempDir dir;
  auto p = dir / "c.jsonl";
  hmit::testing::write(p, R"({"doc_id":"B/2019","seg_id":1,"en":" a\tb \r\n","zh-HK":"甲 "})" "\n");
  auto segs = corpus::load_corpus(p);
  EXPECT_EQ(segs[0].source_text, "a b");
  EXPECT_EQ(segs[0].target_text, "甲");
  corpus::save_corpus(dir / "d.jsonl", segs);
  EXPECT_EQ(corpus::load_corpus(dir / "d.jsonl"), segs);
}

TEST(Corpus, StatsNeedAYear) {
  corpus::ParallelSegment s{"no-year", 1, "a", "b"};
  EXPECT_THROW(corpus::corpus_stats({s}, {}), ValidationError);
  corpus::YearResolver years(std::map<std::string, int>{{"no-year", 2018}});
  EXPECT_EQ(corpus::corpus_stats({s}, years).per_year.at(0).year, 2018);
}

TEST(Corpus, YearResolver) {
  corpus::YearResolver y;
  EXPECT_EQ(y.year_of("FACC1/2021"), 2021);
  EXPECT_EQ(y.year_of("HCAL 1024/2022"), 2022);
  EXPECT_FALSE(y.year_of("nothing"));
  TempDir dir;
  hmit::testing::write(dir / "y.tsv", "odd-doc\t2017\n");
  EXPECT_EQ(corpus::YearResolver::from_file(dir / "y.tsv").year_of("odd-doc"), 2017);
}

TEST(Corpus, StatsRenderings) {
  auto st = corpus::corpus_stats(corpus::load_corpus(fixture("corpus3.jsonl")), {});
  auto table = corpus::format_stats_table(st);
  EXPECT_NE(table.find("796"), std::string::npos);
  auto records = corpus::format_stats_records(st);
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 4);
}

// judgment_en.txt paragraphs, counted by hand: two heading lines of the court
// name, JUDGMENT, paragraphs 1 to 4, CONCLUSION, paragraph 5.
TEST(Segmentation, HandCountedJudgment) {
  auto paras = corpus::segment_text(jsonl::read_file(fixture("judgment_en.txt")), corpus::SegmentationRules::defaults());
  ASSERT_EQ(paras.size(), 9u);
  EXPECT_EQ(paras[0], "IN THE HIGH COURT OF THE");
  EXPECT_EQ(paras[1], "HONG KONG SPECIAL ADMINISTRATIVE REGION");
  EXPECT_EQ(paras[2], "JUDGMENT");
  EXPECT_EQ(paras[3], "1.  The plaintiff claims damages for breach of\na tenancy agreement dated 1 May 2020.");
  EXPECT_EQ(paras[4], "2. The defendant admits the agreement but says\nthe premises were returned in good order.");
  EXPECT_EQ(paras[5], "3. The only issue is the condition of the premises.");
  EXPECT_EQ(paras[6], "4. I prefer the evidence of the plaintiff.");
  EXPECT_EQ(paras[7], "CONCLUSION");
  EXPECT_EQ(paras[8], "5. There will be judgment for the plaintiff.");
}

TEST(Segmentation, CanonicalSeparatorRoundTrip) {
  auto rules = corpus::SegmentationRules::defaults();
  auto paras = corpus::segment_text(jsonl::read_file(fixture("judgment_en.txt")), rules);
  std::string joined;
  for (std::size_t i = 0; i < paras.size(); ++i) joined += (i ? rules.canonical_separator : "") + paras[i];
  EXPECT_EQ(corpus::segment_text(joined, rules), paras);
}

TEST(Segmentation, RulesFromJsonMatchDefaults) {
  auto file_rules = corpus::SegmentationRules::from_json_file(std::filesystem::path(HMIT_ASSET_DIR) / "rules/segmentation.json");
  auto raw = jsonl::read_file(fixture("judgment_en.txt"));
  EXPECT_EQ(corpus::segment_text(raw, file_rules), corpus::segment_text(raw, corpus::SegmentationRules::defaults()));
  EXPECT_THROW(corpus::SegmentationRules::from_json_string(R"({"rules":[{"name":"x","pattern":"a","kind":"sideways"}]})"),
               ParseError);
}

TEST(Alignment, HandAlignedBilingualJudgment) {
  auto rules = corpus::SegmentationRules::defaults();
  auto en = corpus::segment_text(jsonl::read_file(fixture("judgment_en.txt")), rules);
  auto zh = corpus::segment_text(jsonl::read_file(fixture("judgment_zh.txt")), rules);
  auto res = corpus::align_documents(en, zh);
  ASSERT_TRUE(std::holds_alternative<corpus::AlignedPairs>(res));
  const auto& pairs = std::get<corpus::AlignedPairs>(res);
  ASSERT_EQ(pairs.size(), 9u);
  EXPECT_EQ(pairs[5].second, "3. 唯一爭議是處所的狀況。");
  EXPECT_EQ(pairs[4].second, "2. 被告人承認該協議，但指處所已\n在良好狀況下交還。");
  auto segs = corpus::to_segments("HCA 1/2020", pairs);
  EXPECT_EQ(segs.size(), 9u);
  EXPECT_NO_THROW(corpus::validate_corpus(segs));
}

TEST(Alignment, MismatchComesBackAsReport) {
  auto rules = corpus::SegmentationRules::defaults();
  auto en = corpus::segment_text(jsonl::read_file(fixture("judgment_en.txt")), rules);
  auto zh = corpus::segment_text(jsonl::read_file(fixture("judgment_zh_gap.txt")), rules);
  auto res = corpus::align_documents(en, zh);
  ASSERT_TRUE(std::holds_alternative<corpus::AlignmentReport>(res));
  const auto& rep = std::get<corpus::AlignmentReport>(res);
  EXPECT_EQ(rep.source_len, 9u);
  EXPECT_EQ(rep.target_len, 8u);
  EXPECT_EQ(rep.first_divergence, 5u);  // "3." against "4."
  EXPECT_EQ(rep.source_context.at(1), "3. The only issue is the condition of the premises.");
}
