#include <gtest/gtest.h>

#include "hmit/corpus.hpp"
#include "hmit/error.hpp"
#include "hmit/prompts.hpp"
#include "hmit/text.hpp"
#include "support.hpp"

using namespace hmit;
using namespace hmit::prompts;
using hmit::testing::fixture;
using hmit::testing::golden;

// Goldens were rendered by a separate script from the same inputs; they are
// the reference, this library is the thing under test.
namespace {

const std::string kSrc = "The appeal is dismissed with costs to the defendant.";
const std::string kMt = "【譯】" + kSrc;
const std::string kErrors = R"([UT] "costs" -> "訟費"; [CW] "dismissed" -> "駁回")";

std::vector<memory::TranslationEntry> tm_examples() {
  auto segs = corpus::load_corpus(fixture("corpus3.jsonl"));
  std::vector<memory::TranslationEntry> out;
  for (const auto& e : memory::translation_entries_from_corpus(segs))
    if (e.key.doc_id == "FACV 3/2021") out.push_back(e);
  for (const auto& e : memory::translation_entries_from_corpus(segs))
    if (e.key == memory::SegmentKey{"HCAL 1024/2022", 1}) out.push_back(e);
  return out;
}

std::vector<memory::ProofreadingEntry> pm_examples() {
  const char* lines[] = {R"([UT] "appellant" -> "上訴人")", "NONE",
                         R"([CW] "the jury" -> "陪審團"; [OM] "dishonesty" -> "不誠實")",
                         R"([Prep] "For" -> "基於" (note: "reason clause"))",
                         R"([TL] "leave" -> "許可"; [PN] "Director\"s" -> "署長的")"};
  std::vector<memory::ProofreadingEntry> out;
  auto tm = tm_examples();
  for (std::size_t i = 0; i < tm.size(); ++i) {
    memory::ProofreadingEntry e;
    e.key = tm[i].key;
    e.source_text = tm[i].source_text;
    e.machine_translation = "【譯】" + tm[i].source_text;
    e.annotated_errors = *codes::parse_canonical(lines[i]);
    e.final_translation = tm[i].target_text;
    out.push_back(e);
  }
  return out;
}

RolePrompts roles() { return RolePrompts::load(fixture("roles")); }

std::string read_golden(const std::string& name) { return jsonl::read_file(golden(name)); }

}  // namespace

TEST(Prompts, TranslatorZeroShotGolden) {
  EXPECT_EQ(build_translator_prompt(kSrc, {}, roles().translator), read_golden("tap_t0.txt"));
}

TEST(Prompts, TranslatorFiveShotGolden) {
  auto ex = tm_examples();
  ASSERT_EQ(ex.size(), 5u);
  EXPECT_EQ(build_translator_prompt(kSrc, ex, roles().translator), read_golden("tap_t5.txt"));
}

TEST(Prompts, AnnotatorGolden) {
  EXPECT_EQ(build_annotator_prompt(kSrc, kMt, roles().annotator), read_golden("tap_a.txt"));
  EXPECT_THROW(build_annotator_prompt(kSrc, "", roles().annotator), ValidationError);
}

TEST(Prompts, ProofreaderZeroShotGolden) {
  EXPECT_EQ(build_proofreader_prompt(kSrc, kMt, kErrors, {}, roles().proofreader), read_golden("tap_p0.txt"));
}

TEST(Prompts, ProofreaderFiveShotGolden) {
  auto ex = pm_examples();
  EXPECT_EQ(build_proofreader_prompt(kSrc, kMt, kErrors, ex, roles().proofreader), read_golden("tap_p5.txt"));
}

TEST(Prompts, ExampleOrderIsKept) {
  auto ex = tm_examples();
  std::reverse(ex.begin(), ex.end());
  auto p = build_translator_prompt(kSrc, ex, roles().translator);
  EXPECT_LT(p.find("judicial review"), p.find("convicted after trial"));
}

TEST(Prompts, CodeListingExpandsInShippedRoles) {
  auto listing = proofread_code_listing();
  EXPECT_EQ(text::split_lines(listing).size(), 31u);
  EXPECT_EQ(text::split_lines(listing).front(), "CW (Accuracy): Choice of word. The word or expression is not a good choice.");
  auto shipped = RolePrompts::defaults();
  EXPECT_NE(shipped.annotator.find(listing), std::string::npos);
  EXPECT_NE(shipped.proofreader.find(listing), std::string::npos);
  EXPECT_EQ(shipped.annotator.find("{proofread_codes}"), std::string::npos);
  EXPECT_FALSE(shipped.translator.empty());
}

TEST(Prompts, LanguageNamesFromTags) {
  EXPECT_EQ(LanguageNames::for_tags("en", "zh-HK").target, "Traditional Chinese");
  EXPECT_EQ(LanguageNames::for_tags("en-GB", "zh-CN").target, "Simplified Chinese");
  auto p = build_translator_prompt("x", {}, "role", LanguageNames::for_tags("en", "zh-CN"));
  EXPECT_NE(p.find("Translate to Simplified Chinese text:"), std::string::npos);
}
