#include <gtest/gtest.h>
#include <httplib.h>

#include <condition_variable>
#include <thread>

#include "hmit/error.hpp"
#include "hmit/service.hpp"
#include "hmit/text.hpp"
#include "support.hpp"

using namespace hmit;
using namespace hmit::service;
using hmit::testing::fixture;
using hmit::testing::TempDir;
using jsonl::Json;

namespace {

/// Workspace plus a live API server on an ephemeral port.
class Api {
 public:
  explicit Api(const std::filesystem::path& root) {
    hmit::testing::write(root / "pricing.jsonl", jsonl::read_file(hmit::testing::config_file("pricing.jsonl")));
    ws_ = std::make_unique<Workspace>(WorkspaceConfig::in_directory(root));
    mount_api(server_, *ws_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  ~Api() {
    server_.stop();
    thread_.join();
  }

  Workspace& ws() { return *ws_; }

  std::pair<int, Json> get(const std::string& path) {
    auto r = client_->Get(path);
    if (!r) throw std::runtime_error("no response for " + path);
    return {r->status, parse(r->body)};
  }
  std::pair<int, std::string> get_text(const std::string& path) {
    auto r = client_->Get(path);
    if (!r) throw std::runtime_error("no response for " + path);
    return {r->status, r->body};
  }
  std::pair<int, Json> post(const std::string& path, const std::string& body) {
    auto r = client_->Post(path, body, "application/json");
    if (!r) throw std::runtime_error("no response for " + path);
    return {r->status, parse(r->body)};
  }
  std::pair<int, Json> post(const std::string& path, const Json& body) { return post(path, body.dump()); }

 private:
  static Json parse(const std::string& s) {
    try {
      return Json::parse(s);
    } catch (const std::exception&) {
      return Json(s);
    }
  }

  std::unique_ptr<Workspace> ws_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

/// Translator that holds every call until released.
class GateBackend final : public agents::AgentBackend {
 public:
  const std::string& id() const override { return id_; }
  agents::Generation generate(const std::string& prompt, const agents::GenerationParams& p) override {
    {
      std::unique_lock lock(m_);
      ++waiting_;
      cv_.notify_all();
      cv_.wait(lock, [this] { return open_; });
    }
    return inner_.generate(prompt, p);
  }
  void wait_for_first_call() {
    std::unique_lock lock(m_);
    cv_.wait(lock, [this] { return waiting_ > 0; });
  }
  void open() {
    std::lock_guard lock(m_);
    open_ = true;
    cv_.notify_all();
  }

 private:
  std::string id_ = "gate";
  agents::MockBackend inner_{agents::Role::Translator};
  std::mutex m_;
  std::condition_variable cv_;
  int waiting_ = 0;
  bool open_ = false;
};

const std::string kReplaceDoc = "/api/documents/HCMP%209%2F2023";
const std::string kPipelineDoc = "/api/documents/CACV%2077%2F2024";

void seed_replace_fixture(const std::filesystem::path& root) {
  hmit::testing::write(root / "memory/proofreading.jsonl", jsonl::read_file(fixture("replace_pm.jsonl")));
}

agents::PipelineConfig full_tap() {
  agents::PipelineConfig c;
  c.name = "full";
  c.translator.shots = 5;
  c.annotator = agents::AgentSpec{agents::Role::Annotator};
  c.proofreader = agents::AgentSpec{agents::Role::Proofreader, "mock", 5};
  return c;
}

}  // namespace

TEST(Api, HealthAndRegistry) {
  TempDir dir;
  Api api(dir.path());
  EXPECT_EQ(api.get("/api/health").second["status"], "ok");
  auto [status, reg] = api.get("/api/registry");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(reg.size(), 31u);
  EXPECT_EQ(reg[0]["code"], "CW");
}

TEST(Api, NotFound) {
  TempDir dir;
  Api api(dir.path());
  api.ws().ingest_sources(fixture("replace_sources.jsonl"));
  EXPECT_EQ(api.get("/api/documents/NOPE/segments").first, 404);
  EXPECT_EQ(api.get(kReplaceDoc + "/segments/99").first, 404);
  EXPECT_EQ(api.get(kReplaceDoc + "/segments/abc").first, 404);
  EXPECT_EQ(api.get("/api/jobs/job-000000000000").first, 404);
  EXPECT_EQ(api.get("/api/eval-sheets/nothing").first, 404);
  EXPECT_EQ(api.post(kReplaceDoc + "/segments/99/edit", Json{{"translation", "x"}}).first, 404);
}

TEST(Api, ValidationAndParseErrors) {
  TempDir dir;
  Api api(dir.path());
  api.ws().ingest_sources(fixture("pipeline10.jsonl"));
  // not yet translated
  auto [s1, b1] = api.post(kPipelineDoc + "/segments/1/edit", Json{{"translation", "譯文"}});
  EXPECT_EQ(s1, 422);
  EXPECT_NE(b1["error"].get<std::string>().find("not been translated"), std::string::npos);
  api.ws().run("CACV 77/2024", full_tap(), {1});
  EXPECT_EQ(api.post(kPipelineDoc + "/segments/1/edit", Json{{"translation", "  "}}).first, 422);
  EXPECT_EQ(api.post(kPipelineDoc + "/segments/1/edit", Json{{"wrong", "x"}}).first, 422);
  EXPECT_EQ(api.post(kPipelineDoc + "/segments/1/edit", Json{{"translation", "x"}, {"annotations", "[ZZ] oops"}}).first,
            422);
  EXPECT_EQ(api.post(kPipelineDoc + "/segments/1/edit", std::string("{not json")).first, 400);
  EXPECT_EQ(api.post(kPipelineDoc + "/replace", Json{{"find", ""}, {"replace", "x"}}).first, 422);
  EXPECT_EQ(api.post("/api/runs", Json{{"doc_id", "CACV 77/2024"}, {"config", {{"name", "x"}}}}).first, 422);
}

TEST(Api, EditIsDurableAndVersioned) {
  TempDir dir;
  {
    Api api(dir.path());
    api.ws().ingest_sources(fixture("pipeline10.jsonl"));
    api.ws().run("CACV 77/2024", full_tap(), {1, 2});
    auto [s0, before] = api.get(kPipelineDoc + "/segments/2");
    ASSERT_EQ(s0, 200);
    EXPECT_EQ(before["origin"], "pipeline");
    EXPECT_EQ(before["version"], 1);

    Json edit{{"translation", "原告人是一間在香港註冊成立的公司。"},
              {"version", 1},
              {"annotations", Json::array({{{"code", "CW"}, {"excerpt", "company"}, {"suggestion", "公司"}}})}};
    auto [s1, after] = api.post(kPipelineDoc + "/segments/2/edit", edit);
    ASSERT_EQ(s1, 200) << after.dump();
    EXPECT_EQ(after["final_translation"], "原告人是一間在香港註冊成立的公司。");
    EXPECT_EQ(after["origin"], "post-edit");
    EXPECT_EQ(after["version"], 2);
    EXPECT_EQ(after["annotations_line"], R"([CW] "company" -> "公司")");
    EXPECT_EQ(after["machine_translation"], before["machine_translation"]);

    // stale version
    auto [s2, conflict] = api.post(kPipelineDoc + "/segments/2/edit", Json{{"translation", "另一版本"}, {"version", 1}});
    EXPECT_EQ(s2, 409);
  }
  // a fresh process sees the edit in both memories
  Workspace reopened(WorkspaceConfig::in_directory(dir.path()));
  auto view = reopened.segment({"CACV 77/2024", 2});
  ASSERT_TRUE(view.entry);
  EXPECT_EQ(view.entry->final_translation, "原告人是一間在香港註冊成立的公司。");
  EXPECT_EQ(view.entry->version, 2u);
  EXPECT_EQ(reopened.translation_memory().get({"CACV 77/2024", 2})->origin, memory::Origin::PostEdit);
}

// The fixture holds 判案書 once in the final translation of segments 1, 2, 4 and 5.
TEST(Api, DocumentWideReplaceCountsOccurrences) {
  TempDir dir;
  seed_replace_fixture(dir.path());
  Api api(dir.path());
  api.ws().ingest_sources(fixture("replace_sources.jsonl"));
  auto [status, body] = api.post(kReplaceDoc + "/replace", Json{{"find", "判案書"}, {"replace", "判決書"}});
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_EQ(body["changes"], 4);
  std::vector<std::int64_t> segs;
  for (const auto& s : body["segments"]) {
    segs.push_back(s["seg_id"].get<std::int64_t>());
    EXPECT_EQ(s["version"], 2);
  }
  EXPECT_EQ(segs, (std::vector<std::int64_t>{1, 2, 4, 5}));
  auto [s3, seg3] = api.get(kReplaceDoc + "/segments/3");
  EXPECT_EQ(seg3["version"], 1);
  for (const auto& v : api.get(kReplaceDoc + "/segments").second)
    EXPECT_EQ(v["final_translation"].get<std::string>().find("判案書"), std::string::npos);
  EXPECT_EQ(api.post(kReplaceDoc + "/replace", Json{{"find", "判案書"}, {"replace", "判決書"}}).second["changes"], 0);
}

// A post-edit made between runs becomes a few-shot example of a later paragraph.
TEST(Api, PostEditFeedsLaterRuns) {
  TempDir dir;
  Api api(dir.path());
  api.ws().ingest_sources(fixture("pipeline10.jsonl"));
  api.ws().run("CACV 77/2024", full_tap(), {1, 2, 3});
  const std::string edited = "上訴人已提交經修訂的上訴通知書。";
  ASSERT_EQ(api.post(kPipelineDoc + "/segments/3/edit", Json{{"translation", edited}}).first, 200);
  auto result = api.ws().run("CACV 77/2024", full_tap(), {4}, "after-edit");
  const agents::RunLogRecord* translate = nullptr;
  for (const auto& r : result.log)
    if (r.phase == "translate") translate = &r;
  ASSERT_TRUE(translate);
  ASSERT_FALSE(translate->examples.empty());
  EXPECT_EQ(translate->examples[0], (memory::SegmentKey{"CACV 77/2024", 3}));
  EXPECT_NE(translate->prompt.find(edited), std::string::npos);
  auto log = api.get_text("/api/jobs/after-edit/runlog");
  EXPECT_EQ(log.first, 404);  // synchronous runs are not jobs
  EXPECT_NE(jsonl::read_file(api.ws().run_log_path("after-edit")).find(edited), std::string::npos);
}

TEST(Api, JobsRunInBackground) {
  TempDir dir;
  Api api(dir.path());
  api.ws().ingest_sources(fixture("pipeline10.jsonl"));
  auto [status, job] = api.post("/api/runs", Json{{"doc_id", "CACV 77/2024"}, {"config", full_tap().to_json()}});
  ASSERT_EQ(status, 202) << job.dump();
  auto id = job["job_id"].get<std::string>();
  auto done = api.ws().wait(id);
  EXPECT_EQ(done.state, JobState::Done);
  auto [s2, polled] = api.get("/api/jobs/" + id);
  EXPECT_EQ(polled["state"], "done");
  EXPECT_EQ(polled["done"], 10);
  EXPECT_EQ(polled["total"], 10);
  auto log = api.get_text("/api/jobs/" + id + "/runlog");
  EXPECT_EQ(log.first, 200);
  EXPECT_EQ(std::count(log.second.begin(), log.second.end(), '\n'), 40);  // four phases per paragraph
  EXPECT_EQ(api.get_text("/api/jobs/" + id + "/usage").first, 200);
  EXPECT_EQ(api.get("/api/jobs").second.size(), 1u);
  auto cost = api.get_text("/api/cost?runs=" + id);
  EXPECT_EQ(cost.first, 200);
  EXPECT_NE(cost.second.find("human translation cost"), std::string::npos);
}

TEST(Api, EditOfPendingSegmentConflicts) {
  TempDir dir;
  Api api(dir.path());
  api.ws().ingest_sources(fixture("pipeline10.jsonl"));
  auto gate = std::make_shared<GateBackend>();
  api.ws().backends().add_shared(gate);
  auto cfg = full_tap();
  cfg.translator.backend_id = "gate";
  auto id = api.ws().start_job("CACV 77/2024", cfg);
  gate->wait_for_first_call();
  auto [status, body] = api.post(kPipelineDoc + "/segments/5/edit", Json{{"translation", "x"}});
  EXPECT_EQ(status, 409) << body.dump();
  EXPECT_EQ(api.post(kPipelineDoc + "/replace", Json{{"find", "a"}, {"replace", "b"}}).first, 200);  // nothing translated yet
  EXPECT_EQ(api.get_text("/api/jobs/" + id + "/runlog").first, 409);
  gate->open();
  EXPECT_EQ(api.ws().wait(id).state, JobState::Done);
  EXPECT_EQ(api.post(kPipelineDoc + "/segments/5/edit", Json{{"translation", "x"}}).first, 200);
}

TEST(Api, EvalSheetServesOnlyTheBlindedSheet) {
  TempDir dir;
  Api api(dir.path());
  api.ws().ingest_sources(fixture("pipeline10.jsonl"));
  auto zero = full_tap();
  zero.name = "zero-shot";
  zero.translator.shots = 0;
  api.ws().run("CACV 77/2024", zero, {}, "run-a");
  api.ws().run("CACV 77/2024", full_tap(), {}, "run-b");
  Json req{{"systems", Json::array({{{"system_id", "SYS-ALPHA"}, {"run_id", "run-a"}},
                                    {{"system_id", "SYS-BETA"}, {"run_id", "run-b"}}})},
           {"sample_size", 4},
           {"seed", 9}};
  auto [status, created] = api.post("/api/eval-sheets", req);
  ASSERT_EQ(status, 201) << created.dump();
  auto sheet_id = created["sheet_id"].get<std::string>();
  auto [s2, tsv] = api.get_text("/api/eval-sheets/" + sheet_id);
  EXPECT_EQ(s2, 200);
  EXPECT_EQ(tsv.find("SYS-ALPHA"), std::string::npos);
  EXPECT_EQ(tsv.find("SYS-BETA"), std::string::npos);
  EXPECT_EQ(tsv.rfind("segment_no\t", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(api.ws().eval_mapping_path(sheet_id)));
  EXPECT_EQ(api.get_text("/api/eval-sheets/" + sheet_id + ".mapping").first, 404);
  EXPECT_EQ(api.get_text("/api/eval-sheets/" + sheet_id + ".mapping.jsonl").first, 404);
  EXPECT_EQ(api.get_text("/api/eval-sheets/..%2F" + sheet_id + ".mapping.jsonl").first, 404);
  auto rows = eval::read_sheet(api.ws().eval_sheet_path(sheet_id));
  auto mapping = eval::read_mapping(api.ws().eval_mapping_path(sheet_id));
  EXPECT_EQ(mapping.size(), 2u);
  for (const auto& r : rows) EXPECT_TRUE(mapping.count(r.blinded_id));
}

TEST(Api, VettingBundle) {
  TempDir dir;
  seed_replace_fixture(dir.path());
  Api api(dir.path());
  api.ws().ingest_sources(fixture("replace_sources.jsonl"));
  auto [status, body] = api.get_text(kReplaceDoc + "/vetting-bundle");
  EXPECT_EQ(status, 200);
  auto lines = text::split_lines(body);
  ASSERT_EQ(lines.size(), 5u);
  auto first = Json::parse(lines[0]);
  EXPECT_EQ(first["seg_id"], 1);
  EXPECT_EQ(first["final_translation"], "判案書於2023年6月1日頒布。");
}

TEST(Workspace, IngestIsIdempotent) {
  TempDir dir;
  Workspace ws(WorkspaceConfig::in_directory(dir.path()));
  auto r1 = ws.ingest_corpus(fixture("corpus3.jsonl"));
  EXPECT_EQ(r1.added, 10u);
  auto r2 = ws.ingest_corpus(fixture("corpus3.jsonl"));
  EXPECT_EQ(r2.added, 0u);
  EXPECT_EQ(r2.unchanged, 10u);
  EXPECT_EQ(ws.translation_memory().size(), 10u);
  EXPECT_EQ(ws.reference_corpus().size(), 10u);
  auto s1 = ws.ingest_sources(fixture("pipeline10.jsonl"));
  EXPECT_EQ(s1.added, 10u);
  EXPECT_EQ(ws.ingest_sources(fixture("pipeline10.jsonl")).unchanged, 10u);
  auto t = ws.ingest_source_text("HCA 1/2020", jsonl::read_file(fixture("judgment_en.txt")),
                                 corpus::SegmentationRules::defaults());
  EXPECT_EQ(t.added, 9u);
  EXPECT_EQ(ws.segments("HCA 1/2020").size(), 9u);
}

TEST(Workspace, ConfigFromFile) {
  TempDir dir;
  hmit::testing::write(dir / "ws.json", R"({"corpus": "data/c.jsonl", "memory": {"translation": "tm.jsonl"},
    "retry": {"attempts": 5, "initial_backoff_ms": 10, "multiplier": 3},
    "backends": [{"id": "gpt", "kind": "openai", "endpoint": "https://example.invalid/v1/chat/completions",
                  "model": "gpt-4o", "api_key_env": "HMIT_TEST_KEY"}]})");
  auto cfg = WorkspaceConfig::from_file(dir / "ws.json");
  EXPECT_EQ(cfg.root, dir.path());
  EXPECT_EQ(cfg.resolve(cfg.corpus), dir.path() / "data/c.jsonl");
  EXPECT_EQ(cfg.resolve(cfg.translation_memory), dir.path() / "tm.jsonl");
  EXPECT_EQ(cfg.retry.attempts, 5);
  ASSERT_EQ(cfg.backends.size(), 1u);
  EXPECT_EQ(cfg.backends[0].model, "gpt-4o");
  Workspace ws(cfg);
  EXPECT_TRUE(ws.backends().has("gpt"));
}
