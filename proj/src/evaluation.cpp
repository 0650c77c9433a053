#include "hmit/evaluation.hpp"

#include <httplib.h>

#include <cmath>
#include <limits>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/text.hpp"

namespace hmit::eval {

using jsonl::Json;

void AcsWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0) throw ValidationError("ACS weights must be non-negative");
  if (std::fabs(alpha + beta + gamma - 1.0) > 1e-9) throw ValidationError("ACS weights must sum to 1");
}

AcsScore compute_acs(double a, double c, double s, const AcsWeights& weights) {
  weights.validate();
  for (double v : {a, c, s})
    if (!(v >= 0.0 && v <= 10.0)) throw ValidationError("ACS component out of [0, 10]: " + std::to_string(v));
  return {a, c, s, weights.alpha * a + weights.beta * c + weights.gamma * s, weights};
}

double round_half_up(double v, int places) {
  double scale = std::pow(10.0, places);
  // nudge by a few ulps of the scaled value so 9.045 (stored as 9.04499...) rounds up
  double scaled = v * scale;
  double nudged = scaled + std::copysign(std::fabs(scaled) * 4 * std::numeric_limits<double>::epsilon(), scaled);
  return std::copysign(std::floor(std::fabs(nudged) + 0.5), v) / scale;
}

// ---------------------------------------------------------------------------

std::vector<double> MetricAdapter::score_batch(const std::vector<MetricInput>& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& in : batch) out.push_back(score(in));
  return out;
}

namespace {

std::u32string strip_spaces(std::string_view s) {
  std::u32string out;
  for (char32_t c : text::decode_utf8(s))
    if (!text::is_space(c)) out.push_back(c);
  return out;
}

std::unordered_map<std::u32string, int> ngrams(const std::u32string& s, std::size_t n) {
  std::unordered_map<std::u32string, int> m;
  if (s.size() < n) return m;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++m[s.substr(i, n)];
  return m;
}

}  // namespace

double char_ngram_fscore(std::string_view hypothesis, std::string_view reference, int max_n) {
  auto h = strip_spaces(hypothesis);
  auto r = strip_spaces(reference);
  double sum = 0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    auto hn = ngrams(h, static_cast<std::size_t>(n));
    auto rn = ngrams(r, static_cast<std::size_t>(n));
    std::size_t ht = h.size() >= static_cast<std::size_t>(n) ? h.size() - n + 1 : 0;
    std::size_t rt = r.size() >= static_cast<std::size_t>(n) ? r.size() - n + 1 : 0;
    if (ht == 0 && rt == 0) continue;
    ++orders;
    if (ht == 0 || rt == 0) continue;
    std::size_t match = 0;
    for (const auto& [g, cnt] : hn) {
      auto it = rn.find(g);
      if (it != rn.end()) match += static_cast<std::size_t>(std::min(cnt, it->second));
    }
    if (match == 0) continue;
    double p = static_cast<double>(match) / static_cast<double>(ht);
    double rc = static_cast<double>(match) / static_cast<double>(rt);
    sum += 2 * p * rc / (p + rc);
  }
  return orders == 0 ? 1.0 : sum / orders;
}

double OverlapAdapter::score(const MetricInput& in) {
  if (!in.reference) throw ValidationError(id_ + " needs a reference translation");
  return char_ngram_fscore(in.hypothesis, *in.reference);
}

std::unique_ptr<MetricAdapter> builtin_overlap_adapter() { return std::make_unique<OverlapAdapter>(); }

namespace {

Json input_record(const MetricInput& in) {
  Json j{{"src", in.source}, {"mt", in.hypothesis}};
  j["ref"] = in.reference ? Json(*in.reference) : Json(nullptr);
  return j;
}

double parse_score(const std::string& s, const std::string& who) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (text::trim(std::string_view(s).substr(used)).empty() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw BackendError(who + ": not a score: \"" + s + "\"", false);
}

}  // namespace

double CommandAdapter::score(const MetricInput& in) { return score_batch({in}).at(0); }

std::vector<double> CommandAdapter::score_batch(const std::vector<MetricInput>& batch) {
  if (batch.empty()) return {};
  std::string payload;
  for (const auto& in : batch) payload += jsonl::dump_line(input_record(in)) + "\n";
  auto tmp = std::filesystem::temp_directory_path() /
             ("hmit-metric-" + std::to_string(text::fnv1a64(payload + std::to_string(reinterpret_cast<std::uintptr_t>(this)))) + ".jsonl");
  jsonl::write_file_atomic(tmp, payload);
  // the subshell makes the redirect cover compound commands like "a; b"
  std::string cmd = "(" + command_ + "\n) < '" + tmp.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    std::filesystem::remove(tmp);
    throw BackendError(id_ + ": cannot start \"" + command_ + "\"", false);
  }
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = ::pclose(pipe);
  std::error_code ec;
  std::filesystem::remove(tmp, ec);
  if (status != 0) throw BackendError(id_ + ": command exited with status " + std::to_string(status), false);
  std::vector<double> scores;
  for (auto line : text::split_lines(out)) {
    auto t = text::trim(line);
    if (!t.empty()) scores.push_back(parse_score(std::string(t), id_));
  }
  if (scores.size() != batch.size())
    throw BackendError(id_ + ": expected " + std::to_string(batch.size()) + " scores, got " + std::to_string(scores.size()),
                       false);
  return scores;
}

double HttpAdapter::score(const MetricInput& in) { return score_batch({in}).at(0); }

std::vector<double> HttpAdapter::score_batch(const std::vector<MetricInput>& batch) {
  if (batch.empty()) return {};
  auto scheme_end = url_.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("metric url needs a scheme: " + url_);
  auto path_start = url_.find('/', scheme_end + 3);
  std::string host = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);

  Json body{{"records", Json::array()}};
  for (const auto& in : batch) body["records"].push_back(input_record(in));
  httplib::Client cli(host);
  cli.set_read_timeout(std::chrono::seconds(300));
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res) throw BackendError(id_ + ": " + httplib::to_string(res.error()), true);
  if (res->status != 200) throw BackendError(id_ + ": HTTP " + std::to_string(res->status), res->status >= 500);
  std::vector<double> scores;
  try {
    auto j = Json::parse(res->body);
    for (const auto& v : j.at("scores")) scores.push_back(v.get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(id_ + ": malformed response: " + e.what(), false);
  }
  if (scores.size() != batch.size()) throw BackendError(id_ + ": score count mismatch", false);
  return scores;
}

// ---------------------------------------------------------------------------
// Configuration matrix

MatrixSpec MatrixSpec::from_file(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(jsonl::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  MatrixSpec spec;
  std::vector<std::optional<std::string>> baselines;
  try {
    for (const auto& r : j.at("rows")) {
      MatrixRow row;
      if (r.at("config").is_string())
        row.config = agents::PipelineConfig::from_file(path.parent_path() / r["config"].get<std::string>());
      else
        row.config = agents::PipelineConfig::from_json(r["config"], path.parent_path());
      spec.rows.push_back(std::move(row));
      baselines.push_back(r.contains("baseline") && !r["baseline"].is_null()
                              ? std::optional<std::string>(r["baseline"].get<std::string>())
                              : std::nullopt);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  for (std::size_t i = 0; i < spec.rows.size(); ++i) {
    if (!baselines[i]) continue;
    bool found = false;
    for (std::size_t k = 0; k < spec.rows.size(); ++k) {
      if (spec.rows[k].config.name == *baselines[i]) {
        spec.rows[i].baseline = k;
        found = true;
        break;
      }
    }
    if (!found) throw ValidationError(path.string() + ": unknown baseline \"" + *baselines[i] + "\"");
  }
  return spec;
}

MatrixSpec MatrixSpec::table1(const std::filesystem::path& manual_annotations, const std::string& backend) {
  using agents::AgentSpec;
  using agents::Role;
  auto make = [&](int n, int t_shots, bool annotate, std::optional<int> p_shots) {
    agents::PipelineConfig c;
    c.name = "MAS " + std::to_string(n);
    c.translator = AgentSpec{Role::Translator, backend, t_shots, {}};
    if (annotate) c.annotator = AgentSpec{Role::Annotator, backend, 0, {}};
    if (p_shots) c.proofreader = AgentSpec{Role::Proofreader, backend, *p_shots, {}};
    return c;
  };
  MatrixSpec s;
  s.rows.push_back({make(1, 0, false, std::nullopt), std::nullopt});
  s.rows.push_back({make(2, 0, false, 0), 0});
  s.rows.push_back({make(3, 0, false, 5), 0});
  s.rows.push_back({make(4, 0, true, 0), 0});
  s.rows.push_back({make(5, 0, true, 5), 0});
  s.rows.push_back({make(6, 5, false, std::nullopt), std::nullopt});
  s.rows.push_back({make(7, 5, false, 0), 5});
  s.rows.push_back({make(8, 5, false, 5), 5});
  s.rows.push_back({make(9, 5, true, 0), 5});
  s.rows.push_back({make(10, 5, true, 5), 5});
  auto manual = make(11, 5, false, 5);
  manual.annotator = agents::ManualAnnotation{manual_annotations};
  s.rows.push_back({manual, std::nullopt});
  return s;
}

MatrixReport run_config_matrix(const MatrixSpec& spec, const std::vector<corpus::ParallelSegment>& testset,
                               const MemorySeed& seed, agents::BackendRegistry& backends,
                               const std::vector<MetricAdapter*>& adapters, const prompts::RolePrompts& roles) {
  MatrixReport report;
  for (auto* a : adapters) report.metric_ids.push_back(a->id());

  std::vector<std::vector<agents::SourceSegment>> docs;
  for (const auto& s : testset) {
    if (docs.empty() || docs.back().front().key.doc_id != s.doc_id) docs.emplace_back();
    docs.back().push_back({{s.doc_id, s.seg_id}, s.source_text});
  }

  for (const auto& row : spec.rows) {
    row.config.validate();
    memory::TranslationMemory tm(seed.translation);
    memory::ProofreadingMemory pm(seed.proofreading);
    tm.detach();
    pm.detach();
    agents::RunContext ctx{tm, pm, backends, roles, nullptr, {}};
    ctx.run_id = row.config.name;

    std::map<memory::SegmentKey, std::string> finals;
    std::size_t failed = 0;
    for (const auto& doc : docs) {
      auto result = agents::run_tap(doc, row.config, ctx);
      for (const auto& e : result.entries) finals[e.key] = e.final_translation;
      failed += result.failed.size();
    }

    std::vector<MetricInput> inputs;
    for (const auto& s : testset) {
      auto it = finals.find({s.doc_id, s.seg_id});
      if (it != finals.end()) inputs.push_back({s.source_text, it->second, s.target_text});
    }

    MatrixReport::Row out;
    out.name = row.config.name;
    auto summary = row.config.shot_summary();
    {
      // "T / A / P"
      auto p1 = summary.find(" / ");
      auto p2 = summary.find(" / ", p1 + 3);
      out.translator = summary.substr(0, p1);
      out.annotator = summary.substr(p1 + 3, p2 - p1 - 3);
      out.proofreader = summary.substr(p2 + 3);
    }
    if (row.baseline) out.baseline = spec.rows.at(*row.baseline).config.name;
    out.failed_segments = failed;
    for (auto* a : adapters) {
      MatrixCell cell;
      try {
        auto scores = a->score_batch(inputs);
        if (!scores.empty()) {
          double sum = 0;
          for (double v : scores) sum += v;
          cell.mean = sum / static_cast<double>(scores.size());
        }
        cell.scored = scores.size();
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      out.cells.push_back(std::move(cell));
    }
    report.rows.push_back(std::move(out));
  }

  for (std::size_t i = 0; i < spec.rows.size(); ++i) {
    if (!spec.rows[i].baseline) continue;
    const auto& base = report.rows.at(*spec.rows[i].baseline);
    for (std::size_t m = 0; m < adapters.size(); ++m) {
      auto& cell = report.rows[i].cells[m];
      if (cell.mean && base.cells[m].mean) cell.delta = *cell.mean - *base.cells[m].mean;
    }
  }
  return report;
}

namespace {

std::string fixed(double v, int places, bool sign = false) {
  char buf[64];
  std::snprintf(buf, sizeof buf, sign ? "%+.*f" : "%.*f", places, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  auto n = text::count_scalars(s);
  return n >= width ? s : s + std::string(width - n, ' ');
}

}  // namespace

std::string format_matrix_table(const MatrixReport& report) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"MAS", "T", "A", "P"};
  for (const auto& m : report.metric_ids) head.push_back(m);
  grid.push_back(head);
  for (const auto& r : report.rows) {
    std::vector<std::string> line{r.name, r.translator, r.annotator, r.proofreader};
    for (const auto& c : r.cells) {
      if (!c.error.empty()) {
        line.push_back("error");
      } else if (!c.mean) {
        line.push_back("-");
      } else {
        auto s = fixed(*c.mean, 4);
        if (c.delta) s += " (" + fixed(*c.delta, 4, true) + ")";
        line.push_back(s);
      }
    }
    grid.push_back(line);
  }
  std::vector<std::size_t> widths(head.size(), 0);
  for (const auto& line : grid)
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], text::count_scalars(line[i]));
  std::string out;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    std::string row;
    for (std::size_t i = 0; i < grid[l].size(); ++i) {
      if (i) row += " | ";
      row += pad(grid[l][i], widths[i]);
    }
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out += row + "\n";
    if (l == 0) {
      std::string rule;
      for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) rule += "-+-";
        rule += std::string(widths[i], '-');
      }
      out += rule + "\n";
    }
  }
  for (const auto& r : report.rows) {
    for (std::size_t m = 0; m < r.cells.size(); ++m)
      if (!r.cells[m].error.empty()) out += r.name + " " + report.metric_ids[m] + ": " + r.cells[m].error + "\n";
    if (r.failed_segments) out += r.name + ": " + std::to_string(r.failed_segments) + " segment(s) failed\n";
  }
  return out;
}

std::string format_matrix_records(const MatrixReport& report) {
  std::string out;
  for (const auto& r : report.rows) {
    Json j{{"mas", r.name}, {"t", r.translator}, {"a", r.annotator}, {"p", r.proofreader}};
    j["baseline"] = r.baseline ? Json(*r.baseline) : Json(nullptr);
    j["failed_segments"] = r.failed_segments;
    Json metrics = Json::object();
    for (std::size_t m = 0; m < r.cells.size(); ++m) {
      const auto& c = r.cells[m];
      Json cj{{"scored", c.scored}};
      cj["mean"] = c.mean ? Json(*c.mean) : Json(nullptr);
      cj["delta"] = c.delta ? Json(*c.delta) : Json(nullptr);
      if (!c.error.empty()) cj["error"] = c.error;
      metrics[report.metric_ids[m]] = cj;
    }
    j["metrics"] = metrics;
    out += jsonl::dump_line(j) + "\n";
  }
  return out;
}

}  // namespace hmit::eval
