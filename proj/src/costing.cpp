#include "hmit/costing.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/text.hpp"

namespace hmit::costing {

using jsonl::Json;

Money Money::parse(std::string_view s) {
  auto t = text::trim(s);
  if (t.empty()) throw ParseError("empty amount");
  bool neg = false;
  if (t.front() == '-' || t.front() == '+') {
    neg = t.front() == '-';
    t.remove_prefix(1);
  }
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool any_digit = false;
  for (char c : t) {
    if (c == '.' && !seen_dot) {
      seen_dot = true;
      continue;
    }
    if (c == ',' && !seen_dot) continue;
    if (c < '0' || c > '9') throw ParseError("bad amount \"" + std::string(s) + "\"");
    any_digit = true;
    if (seen_dot) {
      if (++frac_digits > 9) throw ParseError("too many decimals in \"" + std::string(s) + "\"");
      frac = frac * 10 + (c - '0');
    } else {
      whole = whole * 10 + (c - '0');
      if (whole > INT64_MAX / kScale) throw ParseError("amount out of range \"" + std::string(s) + "\"");
    }
  }
  if (!any_digit) throw ParseError("bad amount \"" + std::string(s) + "\"");
  for (int i = frac_digits; i < 9; ++i) frac *= 10;
  auto units = whole * kScale + frac;
  return from_units(neg ? -units : units);
}

Money Money::from_double(double d) { return from_units(std::llround(d * static_cast<double>(kScale))); }

Money Money::rounded(int places) const {
  std::int64_t step = 1;
  for (int i = places; i < 9; ++i) step *= 10;
  auto mag = units_ < 0 ? -units_ : units_;
  auto r = (mag + step / 2) / step * step;
  return from_units(units_ < 0 ? -r : r);
}

std::string Money::to_string(int places, bool group) const {
  auto r = rounded(places).units();
  bool neg = r < 0;
  if (neg) r = -r;
  auto whole = r / kScale;
  auto frac = r % kScale;
  std::string w = std::to_string(whole);
  if (group) {
    std::string g;
    int n = 0;
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      if (n && n % 3 == 0) g.push_back(',');
      g.push_back(*it);
      ++n;
    }
    w.assign(g.rbegin(), g.rend());
  }
  std::string out = (neg ? "-" : "") + w;
  if (places > 0) {
    std::ostringstream fs;
    fs << std::setw(9) << std::setfill('0') << frac;
    out += "." + fs.str().substr(0, static_cast<std::size_t>(places));
  }
  return out;
}

std::size_t count_words(std::string_view text, std::string_view lang) {
  if (!text::is_cjk_language(lang)) return text::split_whitespace(text).size();
  std::size_t n = 0;
  for (char32_t c : text::decode_utf8(text))
    if (!text::is_space(c)) ++n;
  return n;
}

TokenEstimate estimate_tokens(std::string_view text) {
  std::int64_t cjk = 0;
  std::int64_t other = 0;
  for (char32_t c : text::decode_utf8(text)) {
    if (text::is_space(c)) continue;
    if (text::is_cjk(c)) {
      ++cjk;
    } else {
      ++other;
    }
  }
  return {cjk + (other + 3) / 4, true};
}

namespace {

Money price_field(const Json& j, const char* name) {
  const auto& v = j.at(name);
  if (v.is_string()) return Money::parse(v.get<std::string>());
  if (v.is_number()) return Money::from_double(v.get<double>());
  throw ParseError(std::string("bad price field ") + name);
}

}  // namespace

PricingTable PricingTable::from_file(const std::filesystem::path& path) {
  PricingTable table;
  jsonl::for_each_record(path, [&](const Json& j, std::size_t line_no) {
    try {
      if (j.contains("human_translation_per_word")) table.per_word_human_translation = price_field(j, "human_translation_per_word");
      if (j.contains("human_editing_per_word")) table.per_word_human_editing = price_field(j, "human_editing_per_word");
      if (!j.contains("backend_id")) return;
      TokenPrice p{price_field(j, "in_price"), price_field(j, "out_price"), j.value("currency", std::string("USD"))};
      if (p.input_per_1k < Money{} || p.output_per_1k < Money{}) throw ValidationError("negative price");
      table.backends[j.at("backend_id").get<std::string>()] = p;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return table;
}

Money human_cost(std::int64_t words, const PricingTable& pricing, HumanWork kind) {
  if (words < 0) throw ValidationError("negative word count");
  return (kind == HumanWork::Translation ? pricing.per_word_human_translation : pricing.per_word_human_editing) * words;
}

void UsageLedger::append(UsageEntry e) {
  if (e.input_tokens < 0 || e.output_tokens < 0) throw ValidationError("negative token count");
  entries_.push_back(std::move(e));
}

std::string UsageLedger::to_records() const {
  std::string out;
  for (const auto& [doc, words] : source_words_) {
    Json j;
    j["kind"] = "source_words";
    j["doc_id"] = doc;
    j["words"] = words;
    out += jsonl::dump_line(j) + "\n";
  }
  for (const auto& e : entries_) {
    Json j;
    j["kind"] = "usage";
    j["run_id"] = e.run_id;
    j["doc_id"] = e.doc_id;
    j["seg_id"] = e.seg_id;
    j["role"] = e.role;
    j["backend_id"] = e.backend_id;
    j["input_tokens"] = e.input_tokens;
    j["output_tokens"] = e.output_tokens;
    j["estimated"] = e.estimated;
    out += jsonl::dump_line(j) + "\n";
  }
  return out;
}

void UsageLedger::save(const std::filesystem::path& path) const { jsonl::write_file_atomic(path, to_records()); }

UsageLedger UsageLedger::load(const std::filesystem::path& path) {
  UsageLedger ledger;
  jsonl::for_each_record(path, [&](const Json& j, std::size_t line_no) {
    try {
      auto kind = j.value("kind", std::string("usage"));
      if (kind == "source_words") {
        ledger.set_source_words(j.at("doc_id").get<std::string>(), j.at("words").get<std::int64_t>());
        return;
      }
      UsageEntry e;
      e.run_id = j.value("run_id", std::string());
      e.doc_id = j.at("doc_id").get<std::string>();
      e.seg_id = j.at("seg_id").get<std::int64_t>();
      e.role = j.at("role").get<std::string>();
      e.backend_id = j.at("backend_id").get<std::string>();
      e.input_tokens = j.at("input_tokens").get<std::int64_t>();
      e.output_tokens = j.at("output_tokens").get<std::int64_t>();
      e.estimated = j.value("estimated", false);
      ledger.append(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return ledger;
}

ApiCost api_cost(const UsageLedger& ledger, const PricingTable& pricing) {
  // tokens * (price per 1K in 1e-9 units) is exact in 1e-12 units.
  std::map<std::string, __int128> per_role;
  for (const auto& e : ledger.entries()) {
    auto it = pricing.backends.find(e.backend_id);
    if (it == pricing.backends.end()) throw NotFoundError("no price for backend \"" + e.backend_id + "\"");
    per_role[e.role] += static_cast<__int128>(e.input_tokens) * it->second.input_per_1k.units() +
                        static_cast<__int128>(e.output_tokens) * it->second.output_per_1k.units();
  }
  ApiCost cost;
  __int128 total = 0;
  auto to_money = [](__int128 v) {
    auto q = (v + 500) / 1000;  // non-negative: half-up
    return Money::from_units(static_cast<std::int64_t>(q));
  };
  for (const auto& [role, v] : per_role) {
    cost.per_role[role] = to_money(v);
    total += v;
  }
  cost.total = to_money(total);
  return cost;
}

double ratio(Money numerator, Money denominator) {
  if (denominator.units() == 0) throw ValidationError("ratio with zero denominator");
  return static_cast<double>(numerator.units()) / static_cast<double>(denominator.units());
}

double percent_saving(Money cost, Money reference) {
  if (reference.units() == 0) throw ValidationError("saving against a zero reference");
  return 100.0 * static_cast<double>(reference.units() - cost.units()) / static_cast<double>(reference.units());
}

CostComparison cost_report(Money human, const std::vector<std::pair<std::string, Money>>& api_totals) {
  CostComparison report;
  report.human = human;
  for (const auto& [name, total] : api_totals) {
    if (total.units() <= 0) throw ValidationError("api cost for " + name + " must be positive");
    report.systems.push_back({name, total, ratio(human, total)});
  }
  for (const auto& a : report.systems)
    for (const auto& b : report.systems)
      if (a.system != b.system) report.savings.push_back({a.system, b.system, percent_saving(a.api_total, b.api_total)});
  return report;
}

std::string format_cost_report(const CostComparison& report, const ApiCost* breakdown) {
  std::ostringstream os;
  os << "human translation cost  " << report.human.to_string(2, true) << "\n";
  if (breakdown) {
    for (const auto& [role, m] : breakdown->per_role) os << "  api " << std::left << std::setw(18) << role << m.to_string(4) << "\n";
    os << "  api total             " << breakdown->total.to_string(4) << "\n";
  }
  os << "\n" << std::left << std::setw(16) << "system" << std::right << std::setw(12) << "api cost" << std::setw(16)
     << "human/api" << "\n";
  for (const auto& s : report.systems) {
    std::ostringstream r;
    r << std::fixed << std::setprecision(1) << s.human_ratio << "x";
    os << std::left << std::setw(16) << s.system << std::right << std::setw(12) << s.api_total.to_string(2)
       << std::setw(16) << r.str() << "\n";
  }
  if (!report.savings.empty()) os << "\n";
  for (const auto& sv : report.savings) {
    std::ostringstream p;
    p << std::fixed << std::setprecision(2) << sv.percent << "%";
    os << sv.system << " vs " << sv.reference << ": " << p.str() << " saving\n";
  }
  return os.str();
}

}  // namespace hmit::costing
