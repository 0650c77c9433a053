// hmit: command-line front end of the legal translation workspace.
//
//   hmit ingest --config ws.json --corpus corpus.jsonl --glossary terms.tsv
//   hmit run    --config ws.json --pipeline mas10.json --doc "HCAL1/2023"
//   hmit serve  --config ws.json --port 8080

#include <httplib.h>

#include <CLI11.hpp>
#include <csignal>
#include <iostream>

#include "hmit/corpus.hpp"
#include "hmit/costing.hpp"
#include "hmit/error.hpp"
#include "hmit/evaluation.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/service.hpp"
#include "hmit/text.hpp"

namespace {

using namespace hmit;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = s.find(',', start);
    auto part = std::string(text::trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (!part.empty()) out.push_back(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::pair<std::string, std::string> split_pair(const std::string& s, const char* what) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
    throw ValidationError(std::string(what) + " must look like NAME=VALUE, got \"" + s + "\"");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

service::WorkspaceConfig load_config(const std::string& path) {
  if (path.empty()) throw ValidationError("--config is required");
  if (!std::filesystem::exists(path)) throw NotFoundError("config file not found: " + path);
  return service::WorkspaceConfig::from_file(path);
}

void print_ingest(const char* what, const service::IngestReport& r) {
  std::cout << what << ": " << r.added << " added, " << r.updated << " updated, " << r.unchanged << " unchanged\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-machine interactive legal translation workspace"};
  app.require_subcommand(1);
  std::string config_path;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Import corpus, source paragraphs, judgment text or a glossary");
  std::string corpus_file, sources_file, text_file, doc_id, rules_file, glossary_file;
  ingest->add_option("--config", config_path, "Workspace config")->required();
  ingest->add_option("--corpus", corpus_file, "Parallel corpus (doc_id, seg_id, en, zh-HK)");
  ingest->add_option("--sources", sources_file, "Paragraphs to translate (doc_id, seg_id, source)");
  ingest->add_option("--text", text_file, "Plain-text judgment to segment");
  ingest->add_option("--doc-id", doc_id, "Document id for --text");
  ingest->add_option("--rules", rules_file, "Segmentation rules (JSON)");
  ingest->add_option("--glossary", glossary_file, "Glossary (TSV or object-per-line)");

  // run
  auto* run = app.add_subcommand("run", "Run the translation pipeline over a document");
  std::string pipeline_file, run_doc, run_id, seg_list;
  run->add_option("--config", config_path, "Workspace config")->required();
  run->add_option("--pipeline", pipeline_file, "Pipeline config (JSON)")->required();
  run->add_option("--doc", run_doc, "Document id")->required();
  run->add_option("--segments", seg_list, "Comma-separated paragraph numbers");
  run->add_option("--run-id", run_id, "Run id (default: generated)");

  // matrix
  auto* matrix = app.add_subcommand("matrix", "Run a configuration matrix and report automated scores");
  std::string matrix_file, testset_file, records_out;
  std::vector<std::string> metric_cmds, metric_urls;
  bool no_overlap = false, keep_test_docs = false;
  matrix->add_option("--config", config_path, "Workspace config")->required();
  matrix->add_option("--matrix", matrix_file, "Matrix spec (JSON)")->required();
  matrix->add_option("--testset", testset_file, "Parallel test set (default: workspace corpus)");
  matrix->add_option("--records", records_out, "Write machine-readable rows here");
  matrix->add_option("--metric-cmd", metric_cmds, "ID=COMMAND external scorer");
  matrix->add_option("--metric-http", metric_urls, "ID=URL external scorer");
  matrix->add_flag("--no-overlap", no_overlap, "Drop the built-in character overlap metric");
  matrix->add_flag("--keep-test-docs", keep_test_docs, "Leave test documents in the seed translation memory");

  // sheet
  auto* sheet = app.add_subcommand("sheet", "Export a blinded human evaluation sheet");
  std::vector<std::string> sheet_systems;
  std::size_t sample = 10;
  std::uint64_t seed = 1;
  sheet->add_option("--config", config_path, "Workspace config")->required();
  sheet->add_option("--system", sheet_systems, "NAME=RUN_ID, repeatable")->required();
  sheet->add_option("--sample", sample, "Number of paragraphs to sample");
  sheet->add_option("--seed", seed, "Sampling seed");

  // score
  auto* score = app.add_subcommand("score", "Score a filled-in evaluation sheet");
  std::string sheet_file, mapping_file, baseline, weights_arg = "0.6,0.3,0.1";
  score->add_option("--config", config_path, "Workspace config");
  score->add_option("--sheet", sheet_file, "Filled sheet (TSV)")->required();
  score->add_option("--mapping", mapping_file, "Sealed mapping file")->required();
  score->add_option("--baseline", baseline, "Baseline system id");
  score->add_option("--weights", weights_arg, "alpha,beta,gamma");

  // cost
  auto* cost = app.add_subcommand("cost", "Cost report for runs, or human cost for a word count");
  std::string cost_runs;
  std::int64_t words = -1;
  cost->add_option("--config", config_path, "Workspace config")->required();
  cost->add_option("--runs", cost_runs, "Comma-separated run ids");
  cost->add_option("--words", words, "Source word count for a human-only estimate");

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP API");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--config", config_path, "Workspace config")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  std::string years_file, stats_format = "table";
  stats->add_option("--config", config_path, "Workspace config");
  stats->add_option("--corpus", corpus_file, "Corpus file (default: workspace corpus)");
  stats->add_option("--years", years_file, "doc_id -> year overrides");
  stats->add_option("--format", stats_format, "table | jsonl")->check(CLI::IsMember({"table", "jsonl"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      service::Workspace ws(load_config(config_path));
      bool any = false;
      if (!corpus_file.empty()) print_ingest("corpus", ws.ingest_corpus(corpus_file)), any = true;
      if (!sources_file.empty()) print_ingest("sources", ws.ingest_sources(sources_file)), any = true;
      if (!text_file.empty()) {
        if (doc_id.empty()) throw ValidationError("--text needs --doc-id");
        auto rules = rules_file.empty() ? corpus::SegmentationRules::defaults()
                                        : corpus::SegmentationRules::from_json_file(rules_file);
        print_ingest("paragraphs", ws.ingest_source_text(doc_id, jsonl::read_file(text_file), rules));
        any = true;
      }
      if (!glossary_file.empty()) {
        std::cout << "glossary: " << ws.ingest_glossary(glossary_file) << " entries\n";
        any = true;
      }
      if (!any) throw ValidationError("nothing to ingest");
      return 0;
    }

    if (*run) {
      service::Workspace ws(load_config(config_path));
      auto config = agents::PipelineConfig::from_file(pipeline_file);
      std::vector<std::int64_t> segs;
      for (const auto& s : split_commas(seg_list)) segs.push_back(std::stoll(s));
      auto result = ws.run(run_doc, config, segs, run_id, [](std::size_t done, std::size_t total) {
        std::cout << "[" << done << "/" << total << "]" << std::endl;
      });
      std::cout << "run " << result.run_id << ": " << result.entries.size() << " persisted, " << result.failed.size()
                << " failed\n";
      std::cout << "log " << ws.run_log_path(result.run_id).string() << "\n";
      return result.failed.empty() ? 0 : 3;
    }

    if (*matrix) {
      service::Workspace ws(load_config(config_path));
      auto spec = eval::MatrixSpec::from_file(matrix_file);
      auto testset = testset_file.empty() ? ws.reference_corpus() : corpus::load_corpus(testset_file);
      if (testset.empty()) throw ValidationError("empty test set");
      std::set<std::string> test_docs;
      for (const auto& s : testset) test_docs.insert(s.doc_id);
      eval::MemorySeed seed_mem;
      for (const auto& e : ws.translation_memory().snapshot())
        if (keep_test_docs || !test_docs.count(e.key.doc_id)) seed_mem.translation.upsert(e);
      for (const auto& e : ws.proofreading_memory().snapshot())
        if (keep_test_docs || !test_docs.count(e.key.doc_id)) seed_mem.proofreading.upsert(e);

      std::vector<std::unique_ptr<eval::MetricAdapter>> owned;
      if (!no_overlap) owned.push_back(eval::builtin_overlap_adapter());
      for (const auto& m : metric_cmds) {
        auto [id, cmd] = split_pair(m, "--metric-cmd");
        owned.push_back(std::make_unique<eval::CommandAdapter>(id, cmd));
      }
      for (const auto& m : metric_urls) {
        auto [id, url] = split_pair(m, "--metric-http");
        owned.push_back(std::make_unique<eval::HttpAdapter>(id, url));
      }
      std::vector<eval::MetricAdapter*> adapters;
      for (auto& a : owned) adapters.push_back(a.get());
      auto report = eval::run_config_matrix(spec, testset, seed_mem, ws.backends(), adapters,
                                            prompts::RolePrompts::defaults());
      std::cout << eval::format_matrix_table(report);
      if (!records_out.empty()) jsonl::write_file_atomic(records_out, eval::format_matrix_records(report));
      return 0;
    }

    if (*sheet) {
      service::Workspace ws(load_config(config_path));
      std::vector<std::pair<std::string, std::string>> systems;
      for (const auto& s : sheet_systems) systems.push_back(split_pair(s, "--system"));
      auto id = ws.export_eval_sheet(systems, sample, seed);
      std::cout << "sheet   " << ws.eval_sheet_path(id).string() << "\n";
      std::cout << "mapping " << ws.eval_mapping_path(id).string() << " (keep sealed until scoring)\n";
      return 0;
    }

    if (*score) {
      auto w = split_commas(weights_arg);
      if (w.size() != 3) throw ValidationError("--weights needs three numbers");
      eval::AcsWeights weights{std::stod(w[0]), std::stod(w[1]), std::stod(w[2])};
      auto summary = eval::score_eval_sheet(eval::read_sheet(sheet_file), eval::read_mapping(mapping_file), weights, baseline);
      std::cout << eval::format_eval_table(summary);
      return 0;
    }

    if (*cost) {
      auto cfg = load_config(config_path);
      if (words >= 0) {
        auto prices = costing::PricingTable::from_file(cfg.resolve(cfg.pricing));
        std::cout << "source words       " << words << "\n";
        std::cout << "human translation  " << costing::human_cost(words, prices, costing::HumanWork::Translation).to_string(2, true)
                  << "\n";
        std::cout << "human editing      " << costing::human_cost(words, prices, costing::HumanWork::Editing).to_string(2, true)
                  << "\n";
        if (cost_runs.empty()) return 0;
      }
      service::Workspace ws(cfg);
      std::cout << ws.cost_report(split_commas(cost_runs));
      return 0;
    }

    if (*serve) {
      service::Workspace ws(load_config(config_path));
      httplib::Server server;
      service::mount_api(server, ws);
      int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
      if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      server.listen_after_bind();
      return 0;
    }

    if (*stats) {
      std::vector<corpus::ParallelSegment> segs;
      if (!corpus_file.empty()) {
        segs = corpus::load_corpus(corpus_file);
      } else {
        service::Workspace ws(load_config(config_path));
        segs = ws.reference_corpus();
      }
      auto years = years_file.empty() ? corpus::YearResolver{} : corpus::YearResolver::from_file(years_file);
      auto st = corpus::corpus_stats(segs, years);
      std::cout << (stats_format == "jsonl" ? corpus::format_stats_records(st) : corpus::format_stats_table(st));
      return 0;
    }
  } catch (const hmit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
