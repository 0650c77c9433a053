#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "hmit/error.hpp"
#include "hmit/evaluation.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/text.hpp"

namespace hmit::eval {

using jsonl::Json;

namespace {

bool is_cjk_terminator(char32_t c) { return c == U'。' || c == U'！' || c == U'？'; }
bool is_latin_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }
bool is_closer(char32_t c) {
  switch (c) {
    case U'」':
    case U'』':
    case U'”':
    case U'’':
    case U'）':
    case U')':
    case U'"':
    case U'\'':
      return true;
    default:
      return false;
  }
}

// Unbiased draw in [0, n); std distributions differ across standard libraries.
std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t v = rng();
    if (v >= threshold) return v % n;
  }
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(rng, i)]);
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view input, std::string_view /*lang*/) {
  auto u = text::decode_utf8(input);
  std::vector<std::string> out;
  std::u32string cur;
  auto flush = [&] {
    auto s = text::encode_utf8(cur);
    auto t = text::trim(s);
    if (!t.empty()) out.emplace_back(t);
    cur.clear();
  };
  for (std::size_t i = 0; i < u.size(); ++i) {
    cur.push_back(u[i]);
    bool cjk = is_cjk_terminator(u[i]);
    bool latin = is_latin_terminator(u[i]);
    if (!cjk && !latin) continue;
    std::size_t j = i + 1;
    while (j < u.size() && (is_closer(u[j]) || is_cjk_terminator(u[j]) || is_latin_terminator(u[j]))) cur.push_back(u[j++]);
    if (latin && !cjk && j < u.size() && !text::is_space(u[j])) {
      i = j - 1;
      continue;
    }
    i = j - 1;
    flush();
  }
  flush();
  return out;
}

EvalSheet make_eval_sheet(const std::vector<corpus::ParallelSegment>& segments, std::size_t sample_size,
                          const std::vector<SystemOutput>& systems, const SentenceSplitter& splitter,
                          std::uint64_t seed) {
  if (systems.empty()) throw ValidationError("eval sheet needs at least one system");
  if (sample_size == 0 || sample_size > segments.size())
    throw ValidationError("cannot sample " + std::to_string(sample_size) + " of " + std::to_string(segments.size()) +
                          " segments");
  std::set<std::string> ids;
  for (const auto& s : systems)
    if (!ids.insert(s.system_id).second) throw ValidationError("duplicate system \"" + s.system_id + "\"");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(segments.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < sample_size; ++i) std::swap(idx[i], idx[i + below(rng, idx.size() - i)]);
  idx.resize(sample_size);
  std::sort(idx.begin(), idx.end());

  EvalSheet sheet;
  std::vector<std::string> blinded;
  std::set<std::string> used;
  for (std::size_t k = 0; k < systems.size(); ++k) {
    std::string token;
    do {
      char buf[32];
      std::snprintf(buf, sizeof buf, "S%08llx", static_cast<unsigned long long>(rng() & 0xffffffffULL));
      token = buf;
    } while (!used.insert(token).second);
    blinded.push_back(token);
  }
  // seeded permutation decouples token order from system order
  std::vector<std::size_t> perm(systems.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  shuffle(perm, rng);
  for (std::size_t k = 0; k < systems.size(); ++k) sheet.mapping[blinded[perm[k]]] = systems[k].system_id;

  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto& seg = segments[idx[n]];
    memory::SegmentKey key{seg.doc_id, seg.seg_id};
    auto src_sentences = splitter(seg.source_text, seg.source_lang);
    for (std::size_t k = 0; k < systems.size(); ++k) {
      auto it = systems[k].translations.find(key);
      if (it == systems[k].translations.end())
        throw ValidationError("system \"" + systems[k].system_id + "\" has no translation for " + memory::to_string(key));
      auto sentences = splitter(it->second, seg.target_lang);
      if (sentences.empty())
        throw ValidationError("translation of " + memory::to_string(key) + " by \"" + systems[k].system_id +
                              "\" has no sentences");
      bool paired = src_sentences.size() == sentences.size();
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        EvalSheetRow row;
        row.segment_no = static_cast<std::int64_t>(n + 1);
        row.sentence_no = static_cast<std::int64_t>(s + 1);
        row.source_sentence = paired ? src_sentences[s] : seg.source_text;
        row.blinded_id = blinded[perm[k]];
        row.translation = sentences[s];
        sheet.rows.push_back(std::move(row));
      }
    }
  }
  shuffle(sheet.rows, rng);
  return sheet;
}

// ---------------------------------------------------------------------------
// Sheet files

namespace {

constexpr const char* kHeader = "segment_no\tsentence_no\tsource\tblinded_id\ttranslation\tA\tC\tS";

std::string escape_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string unescape_cell(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    char n = s[++i];
    out += n == 't' ? '\t' : n == 'n' ? '\n' : n == 'r' ? '\r' : n;
  }
  return out;
}

std::string score_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

std::optional<double> parse_score_cell(std::string_view s, const std::string& where) {
  auto t = text::trim(s);
  if (t.empty()) return std::nullopt;
  double v;
  try {
    std::size_t used = 0;
    v = std::stod(std::string(t), &used);
    if (used != t.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ParseError(where + ": not a number: \"" + std::string(t) + "\"");
  }
  if (!(v >= 0 && v <= 10)) throw ValidationError(where + ": score out of [0, 10]");
  return v;
}

std::int64_t parse_int_cell(std::string_view s, const std::string& where) {
  try {
    std::size_t used = 0;
    auto v = std::stoll(std::string(s), &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(where + ": not an integer: \"" + std::string(s) + "\"");
}

}  // namespace

void write_sheet(const std::filesystem::path& path, const std::vector<EvalSheetRow>& rows) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.segment_no) + "\t" + std::to_string(r.sentence_no) + "\t" + escape_cell(r.source_sentence) +
           "\t" + escape_cell(r.blinded_id) + "\t" + escape_cell(r.translation) + "\t" + score_cell(r.a) + "\t" +
           score_cell(r.c) + "\t" + score_cell(r.s) + "\n";
  }
  jsonl::write_file_atomic(path, out);
}

std::vector<EvalSheetRow> read_sheet(const std::filesystem::path& path) {
  auto content = jsonl::read_file(path);
  auto lines = text::split_lines(content);
  std::vector<EvalSheetRow> rows;
  bool header = true;
  std::size_t line_no = 0;
  for (auto line : lines) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kHeader) throw ParseError(path.string() + ": unexpected header");
      header = false;
      continue;
    }
    if (text::trim(line).empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      cells.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    auto where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != 8) throw ParseError(where + ": expected 8 columns, got " + std::to_string(cells.size()));
    EvalSheetRow r;
    r.segment_no = parse_int_cell(cells[0], where);
    r.sentence_no = parse_int_cell(cells[1], where);
    r.source_sentence = unescape_cell(cells[2]);
    r.blinded_id = unescape_cell(cells[3]);
    r.translation = unescape_cell(cells[4]);
    r.a = parse_score_cell(cells[5], where);
    r.c = parse_score_cell(cells[6], where);
    r.s = parse_score_cell(cells[7], where);
    rows.push_back(std::move(r));
  }
  if (header) throw ParseError(path.string() + ": empty sheet");
  return rows;
}

void write_mapping(const std::filesystem::path& path, const std::map<std::string, std::string>& mapping) {
  std::string out;
  for (const auto& [blinded, system] : mapping)
    out += jsonl::dump_line(Json{{"blinded_id", blinded}, {"system_id", system}}) + "\n";
  jsonl::write_file_atomic(path, out);
}

std::map<std::string, std::string> read_mapping(const std::filesystem::path& path) {
  std::map<std::string, std::string> m;
  jsonl::for_each_record(path, [&](const Json& j, std::size_t line_no) {
    try {
      auto id = j.at("blinded_id").get<std::string>();
      if (!m.emplace(id, j.at("system_id").get<std::string>()).second)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": duplicate blinded id " + id);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return m;
}

// ---------------------------------------------------------------------------
// Scoring

EvalSummary score_eval_sheet(const std::vector<EvalSheetRow>& rows, const std::map<std::string, std::string>& mapping,
                             const AcsWeights& weights, const std::string& baseline_system) {
  weights.validate();
  struct Acc {
    double a = 0, c = 0, s = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto it = mapping.find(r.blinded_id);
    if (it == mapping.end()) throw NotFoundError("unknown blinded id \"" + r.blinded_id + "\"");
    if (!r.a || !r.c || !r.s)
      throw ValidationError("row " + std::to_string(i + 1) + " (segment " + std::to_string(r.segment_no) + ", sentence " +
                            std::to_string(r.sentence_no) + ") is not fully scored");
    auto& x = acc[it->second];
    x.a += *r.a;
    x.c += *r.c;
    x.s += *r.s;
    ++x.n;
  }
  if (!baseline_system.empty() && !acc.count(baseline_system))
    throw NotFoundError("baseline system \"" + baseline_system + "\" has no scored rows");

  EvalSummary out;
  out.baseline = baseline_system;
  auto push = [&](const std::string& id, const Acc& x) {
    double n = static_cast<double>(x.n);
    out.systems.push_back({id, compute_acs(x.a / n, x.c / n, x.s / n, weights), x.n});
  };
  if (!baseline_system.empty()) push(baseline_system, acc.at(baseline_system));
  for (const auto& [id, x] : acc)
    if (id != baseline_system) push(id, x);
  return out;
}

std::string format_delta(double value, double baseline) {
  double v = round_half_up(value, 2);
  double b = round_half_up(baseline, 2);
  if (b == 0) throw ValidationError("delta against a zero baseline");
  double pct = round_half_up(100.0 * (v - b) / b, 2);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f%%", pct == 0 ? 0.0 : pct);
  return buf;
}

std::string format_eval_table(const EvalSummary& summary) {
  const SystemEvaluation* base = nullptr;
  for (const auto& s : summary.systems)
    if (s.system_id == summary.baseline) base = &s;
  auto cell = [&](double v, double b, bool is_base) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", round_half_up(v, 2));
    std::string out = buf;
    if (base && !is_base) out += " " + format_delta(v, b);
    return out;
  };
  std::vector<std::vector<std::string>> grid{{"System", "A", "C", "S", "ACS"}};
  for (const auto& s : summary.systems) {
    bool is_base = &s == base;
    grid.push_back({s.system_id, cell(s.score.a, base ? base->score.a : 0, is_base),
                    cell(s.score.c, base ? base->score.c : 0, is_base), cell(s.score.s, base ? base->score.s : 0, is_base),
                    cell(s.score.i, base ? base->score.i : 0, is_base)});
  }
  std::vector<std::size_t> w(5, 0);
  for (const auto& row : grid)
    for (std::size_t i = 0; i < row.size(); ++i) w[i] = std::max(w[i], text::count_scalars(row[i]));
  std::string out;
  for (const auto& row : grid) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += " | ";
      line += row[i] + std::string(w[i] - text::count_scalars(row[i]), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace hmit::eval
