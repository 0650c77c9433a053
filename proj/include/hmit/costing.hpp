#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hmit::costing {

/// Fixed-point currency amount in units of 1e-9.
class Money {
 public:
  static constexpr std::int64_t kScale = 1'000'000'000;

  constexpr Money() = default;
  static constexpr Money from_units(std::int64_t units) {
    Money m;
    m.units_ = units;
    return m;
  }
  /// Parses a plain decimal string ("0.12", "-3", "1390.2"). Throws ParseError
  /// on anything else or on more than nine fractional digits.
  static Money parse(std::string_view s);
  /// Nearest representable amount; for prices read from JSON numbers.
  static Money from_double(double d);

  constexpr std::int64_t units() const { return units_; }
  double to_double() const { return static_cast<double>(units_) / kScale; }

  /// Rounded half-up (away from zero) to `places` decimals, optional thousands separators.
  std::string to_string(int places = 2, bool group = false) const;
  Money rounded(int places) const;

  friend constexpr Money operator+(Money a, Money b) { return from_units(a.units_ + b.units_); }
  friend constexpr Money operator-(Money a, Money b) { return from_units(a.units_ - b.units_); }
  friend constexpr Money operator*(Money a, std::int64_t n) { return from_units(a.units_ * n); }
  Money& operator+=(Money b) {
    units_ += b.units_;
    return *this;
  }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  std::int64_t units_ = 0;
};

/// Whitespace-token count for space-delimited languages; for CJK languages
/// every non-space character counts as a word.
std::size_t count_words(std::string_view text, std::string_view lang);

struct TokenEstimate {
  std::int64_t tokens = 0;
  bool estimated = true;
};

/// Fallback when a backend reports no usage: one token per CJK character plus
/// one per four other non-space characters (rounded up).
TokenEstimate estimate_tokens(std::string_view text);

struct TokenPrice {
  Money input_per_1k;
  Money output_per_1k;
  std::string currency = "USD";
};

struct PricingTable {
  Money per_word_human_translation = Money::parse("0.12");
  Money per_word_human_editing = Money::parse("0.04");
  std::map<std::string, TokenPrice, std::less<>> backends;

  /// Object-per-line records {backend_id, in_price, out_price, currency}; a
  /// record with "human_translation_per_word" / "human_editing_per_word"
  /// overrides the human rates.
  static PricingTable from_file(const std::filesystem::path& path);
};

enum class HumanWork { Translation, Editing };

Money human_cost(std::int64_t words, const PricingTable& pricing, HumanWork kind);

struct UsageEntry {
  std::string run_id;
  std::string doc_id;
  std::int64_t seg_id = 0;
  std::string role;
  std::string backend_id;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool estimated = false;

  friend bool operator==(const UsageEntry&, const UsageEntry&) = default;
};

/// Append-only token usage record of one or more runs.
class UsageLedger {
 public:
  void append(UsageEntry e);
  void set_source_words(const std::string& doc_id, std::int64_t words) { source_words_[doc_id] = words; }

  const std::vector<UsageEntry>& entries() const { return entries_; }
  const std::map<std::string, std::int64_t>& source_words() const { return source_words_; }

  std::string to_records() const;
  void save(const std::filesystem::path& path) const;
  static UsageLedger load(const std::filesystem::path& path);

 private:
  std::vector<UsageEntry> entries_;
  std::map<std::string, std::int64_t> source_words_;
};

struct ApiCost {
  std::map<std::string, Money> per_role;
  Money total;
};

/// Sum of input_tokens * in_price + output_tokens * out_price (per 1K tokens),
/// grouped by role. Rounded once, at the 1e-9 unit, after exact summation.
/// Throws NotFoundError for an unpriced backend.
ApiCost api_cost(const UsageLedger& ledger, const PricingTable& pricing);

struct SystemCost {
  std::string system;
  Money api_total;
  double human_ratio = 0;  // human cost / api cost
};

struct CostComparison {
  Money human;
  std::vector<SystemCost> systems;
  /// saving of `cheaper` relative to `reference`: (reference - cheaper) / reference, in percent
  struct Saving {
    std::string system;
    std::string reference;
    double percent = 0;
  };
  std::vector<Saving> savings;
};

/// Throws ValidationError when an api total is not positive.
CostComparison cost_report(Money human, const std::vector<std::pair<std::string, Money>>& api_totals);

double ratio(Money numerator, Money denominator);
double percent_saving(Money cost, Money reference);

std::string format_cost_report(const CostComparison& report, const ApiCost* breakdown = nullptr);

}  // namespace hmit::costing
