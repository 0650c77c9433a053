#include <gtest/gtest.h>
#include <httplib.h>

#include <set>
#include <thread>

#include "hmit/error.hpp"
#include "hmit/evaluation.hpp"
#include "hmit/text.hpp"
#include "support.hpp"

using namespace hmit;
using namespace hmit::eval;
using hmit::testing::config_file;
using hmit::testing::fixture;
using hmit::testing::TempDir;

TEST(Acs, PublishedComponents) {
  EXPECT_NEAR(round_half_up(compute_acs(8.91, 9.05, 9.82).i, 2), 9.04, 0.005);
  EXPECT_NEAR(round_half_up(compute_acs(9.16, 9.36, 9.96).i, 2), 9.30, 0.005);
  // 0.6*9.32 + 0.3*9.33 + 0.1*9.92 = 9.383; printed as 9.39
  EXPECT_NEAR(compute_acs(9.32, 9.33, 9.92).i, 9.383, 1e-9);
  EXPECT_NEAR(compute_acs(9.32, 9.33, 9.92).i, 9.39, 0.01);
}

TEST(Acs, WeightsAndRanges) {
  EXPECT_NEAR(compute_acs(10, 0, 0, {0.5, 0.25, 0.25}).i, 5.0, 1e-12);
  EXPECT_THROW(compute_acs(1, 1, 1, {0.5, 0.5, 0.5}), ValidationError);
  EXPECT_THROW(compute_acs(1, 1, 1, {1.2, -0.2, 0.0}), ValidationError);
  EXPECT_THROW(compute_acs(10.5, 1, 1), ValidationError);
  EXPECT_THROW(compute_acs(-0.1, 1, 1), ValidationError);
}

TEST(Acs, HalfUpRounding) {
  EXPECT_DOUBLE_EQ(round_half_up(9.045, 2), 9.05);
  EXPECT_DOUBLE_EQ(round_half_up(1.005, 2), 1.01);
  EXPECT_DOUBLE_EQ(round_half_up(9.044999, 2), 9.04);
  EXPECT_DOUBLE_EQ(round_half_up(-1.005, 2), -1.01);
}

TEST(Delta, PublishedStrings) {
  EXPECT_EQ(format_delta(9.32, 8.91), "+4.60%");
  EXPECT_EQ(format_delta(9.36, 9.05), "+3.43%");
  EXPECT_EQ(format_delta(9.96, 9.82), "+1.43%");
  EXPECT_EQ(format_delta(9.30, 9.04), "+2.88%");
  EXPECT_EQ(format_delta(9.0, 9.0), "+0.00%");
  EXPECT_EQ(format_delta(8.0, 10.0), "-20.00%");
}

// chrF-style overlap worked by hand for "abcd" vs "abce": n=1 3/4, n=2 2/3,
// n=3 1/2, n=4 0; precision equals recall so F equals each, averaged over n.
TEST(Overlap, HandWorkedNgrams) {
  EXPECT_NEAR(char_ngram_fscore("abcd", "abce"), (0.75 + 2.0 / 3.0 + 0.5 + 0.0) / 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(char_ngram_fscore("上訴駁回", "上訴駁回"), 1.0);
  EXPECT_DOUBLE_EQ(char_ngram_fscore("", "abc"), 0.0);
  OverlapAdapter a;
  EXPECT_EQ(a.id(), "chrF-overlap");
  EXPECT_THROW(a.score({"s", "h", std::nullopt}), ValidationError);
}

TEST(Adapters, ExternalCommandOneScorePerRecord) {
  CommandAdapter cmd("len", "awk '{ print NR / 10 }'");
  auto scores = cmd.score_batch({{"a", "b", "c"}, {"d", "e", "f"}, {"g", "h", std::nullopt}});
  EXPECT_EQ(scores, (std::vector<double>{0.1, 0.2, 0.3}));
  CommandAdapter short_output("short", "head -n 1 >/dev/null; echo 0.5");
  EXPECT_THROW(short_output.score_batch({{"a", "b", "c"}, {"d", "e", "f"}}), BackendError);
  CommandAdapter failing("fail", "exit 3");
  EXPECT_THROW(failing.score_batch({{"a", "b", "c"}}), BackendError);
}

TEST(Adapters, HttpScorer) {
  httplib::Server server;
  server.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    auto body = jsonl::Json::parse(req.body);
    jsonl::Json scores = jsonl::Json::array();
    for (const auto& r : body["records"]) scores.push_back(r["mt"] == r["ref"] ? 1.0 : 0.0);
    res.set_content(jsonl::Json{{"scores", scores}}.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  HttpAdapter http("remote", "http://127.0.0.1:" + std::to_string(port) + "/score");
  auto scores = http.score_batch({{"s", "x", "x"}, {"s", "x", "y"}});
  server.stop();
  t.join();
  EXPECT_EQ(scores, (std::vector<double>{1.0, 0.0}));
}

namespace {

/// Fails every batch; marks its own matrix cell only.
class BrokenAdapter final : public MetricAdapter {
 public:
  const std::string& id() const override { return id_; }
  double score(const MetricInput&) override { throw BackendError("scorer down", true); }

 private:
  std::string id_ = "broken";
};

}  // namespace

TEST(Matrix, ElevenRowsWithBaselines) {
  auto testset = corpus::load_corpus(fixture("corpus3.jsonl"));
  auto spec = MatrixSpec::from_file(config_file("table1/table1.json"));
  ASSERT_EQ(spec.rows.size(), 11u);
  MemorySeed seed;
  agents::BackendRegistry backends;
  OverlapAdapter overlap;
  BrokenAdapter broken;
  auto report = run_config_matrix(spec, testset, seed, backends, {&overlap, &broken},
                                  prompts::RolePrompts::load(fixture("roles")));
  ASSERT_EQ(report.rows.size(), 11u);
  EXPECT_EQ(report.metric_ids, (std::vector<std::string>{"chrF-overlap", "broken"}));
  for (std::size_t i = 0; i < 11; ++i) {
    const auto& row = report.rows[i];
    EXPECT_EQ(row.name, "MAS " + std::to_string(i + 1));
    EXPECT_EQ(row.failed_segments, 0u);
    ASSERT_TRUE(row.cells[0].mean) << row.name;
    EXPECT_EQ(row.cells[0].scored, 10u);
    EXPECT_FALSE(row.cells[1].mean);
    EXPECT_FALSE(row.cells[1].error.empty());
    std::optional<std::string> expected_base;
    if (i >= 1 && i <= 4) expected_base = "MAS 1";
    if (i >= 6 && i <= 9) expected_base = "MAS 6";
    EXPECT_EQ(row.baseline, expected_base) << row.name;
    if (expected_base) {
      const auto& base = report.rows[i <= 4 ? 0 : 5];
      ASSERT_TRUE(row.cells[0].delta);
      EXPECT_DOUBLE_EQ(*row.cells[0].delta, *row.cells[0].mean - *base.cells[0].mean);
    } else {
      EXPECT_FALSE(row.cells[0].delta);
    }
  }
  EXPECT_EQ(report.rows[9].annotator, "LLM");
  EXPECT_EQ(report.rows[10].annotator, "Manual");
  EXPECT_EQ(report.rows[0].proofreader, "X");
  // manual annotations carry real corrections, so MAS 11 beats the unannotated MAS 6
  EXPECT_GT(*report.rows[10].cells[0].mean, *report.rows[5].cells[0].mean);

  auto table = format_matrix_table(report);
  EXPECT_NE(table.find("MAS 10"), std::string::npos);
  EXPECT_NE(table.find("scorer down"), std::string::npos);
  auto records = format_matrix_records(report);
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 11);
}

TEST(Matrix, BuiltInTableMatchesMatrixFile) {
  auto built = MatrixSpec::table1(config_file("table1/manual_annotations.jsonl"));
  auto file = MatrixSpec::from_file(config_file("table1/table1.json"));
  ASSERT_EQ(built.rows.size(), file.rows.size());
  for (std::size_t i = 0; i < built.rows.size(); ++i) {
    EXPECT_EQ(built.rows[i].baseline, file.rows[i].baseline) << i;
    EXPECT_EQ(built.rows[i].config.shot_summary(), file.rows[i].config.shot_summary()) << i;
    EXPECT_EQ(built.rows[i].config.name, file.rows[i].config.name) << i;
  }
}

TEST(Sentences, Splitter) {
  EXPECT_EQ(split_sentences("上訴駁回。訟費歸答辯人！完", "zh-HK"),
            (std::vector<std::string>{"上訴駁回。", "訟費歸答辯人！", "完"}));
  EXPECT_EQ(split_sentences("他說：「完。」然後離開。", "zh-HK"), (std::vector<std::string>{"他說：「完。」", "然後離開。"}));
  EXPECT_EQ(split_sentences("It is dismissed. Costs follow.", "en"),
            (std::vector<std::string>{"It is dismissed.", "Costs follow."}));
  EXPECT_EQ(split_sentences("Cap.5 applies", "en"), (std::vector<std::string>{"Cap.5 applies"}));
}

namespace {

std::vector<SystemOutput> three_systems(const std::vector<corpus::ParallelSegment>& segs) {
  std::vector<SystemOutput> out{{"GPT-4o", {}}, {"MAS 10", {}}, {"MAS 11", {}}};
  for (const auto& s : segs) {
    out[0].translations[{s.doc_id, s.seg_id}] = s.target_text;
    out[1].translations[{s.doc_id, s.seg_id}] = s.target_text + "甲。乙。";
    out[2].translations[{s.doc_id, s.seg_id}] = "丙。" + s.target_text;
  }
  return out;
}

}  // namespace

TEST(Sheet, SeededBlindedAndComplete) {
  auto segs = corpus::load_corpus(fixture("corpus3.jsonl"));
  auto systems = three_systems(segs);
  auto a = make_eval_sheet(segs, 4, systems, split_sentences, 11);
  auto b = make_eval_sheet(segs, 4, systems, split_sentences, 11);
  auto c = make_eval_sheet(segs, 4, systems, split_sentences, 12);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.mapping, b.mapping);
  EXPECT_NE(a.rows, c.rows);
  ASSERT_EQ(a.mapping.size(), 3u);
  std::set<std::string> names;
  for (const auto& [token, system] : a.mapping) {
    names.insert(system);
    EXPECT_EQ(token.find("MAS"), std::string::npos);
    EXPECT_EQ(token.find("GPT"), std::string::npos);
  }
  EXPECT_EQ(names, (std::set<std::string>{"GPT-4o", "MAS 10", "MAS 11"}));
  std::set<std::int64_t> seg_nos;
  for (const auto& r : a.rows) {
    seg_nos.insert(r.segment_no);
    EXPECT_TRUE(a.mapping.count(r.blinded_id));
    EXPECT_FALSE(r.a);
  }
  EXPECT_EQ(seg_nos, (std::set<std::int64_t>{1, 2, 3, 4}));
  EXPECT_THROW(make_eval_sheet(segs, 11, systems, split_sentences, 1), ValidationError);
  EXPECT_THROW(make_eval_sheet(segs, 2, {{"X", {}}}, split_sentences, 1), ValidationError);
}

TEST(Sheet, TsvAndMappingRoundTrip) {
  TempDir dir;
  auto segs = corpus::load_corpus(fixture("corpus3.jsonl"));
  auto sheet = make_eval_sheet(segs, 3, three_systems(segs), split_sentences, 5);
  sheet.rows[0].translation = "tab\there\nnew \\ line";
  sheet.rows[0].a = 7.5;
  sheet.rows[0].c = 8;
  sheet.rows[0].s = 10;
  write_sheet(dir / "s.tsv", sheet.rows);
  write_mapping(dir / "m.jsonl", sheet.mapping);
  EXPECT_EQ(read_sheet(dir / "s.tsv"), sheet.rows);
  EXPECT_EQ(read_mapping(dir / "m.jsonl"), sheet.mapping);
  auto written = jsonl::read_file(dir / "s.tsv");
  auto header = text::split_lines(written).front();
  EXPECT_EQ(header, "segment_no\tsentence_no\tsource\tblinded_id\ttranslation\tA\tC\tS");
  hmit::testing::write(dir / "bad.tsv", std::string(header) + "\n1\t1\tsrc\tS1\tt\t11\t1\t1\n");
  EXPECT_THROW(read_sheet(dir / "bad.tsv"), ValidationError);
}

// Every row of a system carries that system's published means, so the
// per-system means equal them exactly.
TEST(Sheet, PublishedMeansGivePublishedDeltas) {
  auto segs = corpus::load_corpus(fixture("corpus3.jsonl"));
  auto sheet = make_eval_sheet(segs, 10, three_systems(segs), split_sentences, 2024);
  const std::map<std::string, std::array<double, 3>> means{
      {"GPT-4o", {8.91, 9.05, 9.82}}, {"MAS 10", {9.32, 9.33, 9.92}}, {"MAS 11", {9.16, 9.36, 9.96}}};
  for (auto& r : sheet.rows) {
    const auto& m = means.at(sheet.mapping.at(r.blinded_id));
    r.a = m[0];
    r.c = m[1];
    r.s = m[2];
  }
  auto summary = score_eval_sheet(sheet.rows, sheet.mapping, {}, "GPT-4o");
  ASSERT_EQ(summary.systems.size(), 3u);
  const auto& base = summary.systems[0].score;
  const auto& m10 = summary.systems[1].score;
  const auto& m11 = summary.systems[2].score;
  EXPECT_EQ(summary.systems[0].system_id, "GPT-4o");
  EXPECT_EQ(format_delta(m10.a, base.a), "+4.60%");
  EXPECT_EQ(format_delta(m11.c, base.c), "+3.43%");
  EXPECT_EQ(format_delta(m11.s, base.s), "+1.43%");
  EXPECT_EQ(format_delta(m11.i, base.i), "+2.88%");
  auto table = format_eval_table(summary);
  EXPECT_NE(table.find("+4.60%"), std::string::npos);

  sheet.rows[3].s.reset();
  EXPECT_THROW(score_eval_sheet(sheet.rows, sheet.mapping, {}, "GPT-4o"), ValidationError);
  sheet.rows[3].s = 1;
  sheet.rows[3].blinded_id = "Sdeadbeef";
  EXPECT_THROW(score_eval_sheet(sheet.rows, sheet.mapping, {}, "GPT-4o"), NotFoundError);
}
