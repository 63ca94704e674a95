#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nlctg/metrics.hpp"
#include "nlctg/schema.hpp"

using namespace nlctg;

namespace {

AttributeSchema test_schema() {
    SchemaMeta meta;
    meta.label_attr_names = {"topic"};
    meta.length_attr_names = {"length"};
    meta.domains = {"text"};
    return parse_schema("0: alpha\n1: bravo", "0: short\n4: long", meta);
}

GenerationRecord rec(int label, int length, const std::string& text) {
    GenerationRecord r;
    if (label >= 0) r.target.label_id = label;
    if (length >= 0) r.target.length_id = length;
    r.text = text;
    r.token_count = static_cast<long>(ws_token_count(text));
    return r;
}

}  // namespace

TEST_CASE("label, length, and compositional accuracy") {
    AttributeSchema schema = test_schema();
    LabelOracle oracle = [](const std::string& text) {
        return text.find("aaa") != std::string::npos ? 0 : 1;
    };

    std::vector<GenerationRecord> records{
        rec(0, 0, "aaa x y"),        // label right, 3 tokens -> level 0: both right
        rec(0, 1, "aaa b c d e"),    // label right, 5 tokens -> level 1: both right
        rec(1, 0, "aaa x"),          // label wrong, length right
        rec(0, 1, "aaa x"),          // label right, length wrong
    };
    CHECK(label_accuracy(records, oracle) == Catch::Approx(0.75));
    CHECK(length_accuracy(records, schema) == Catch::Approx(0.75));
    CHECK(compositional_accuracy(records, oracle, schema) == Catch::Approx(0.5));

    // comp_acc <= min(label_acc, length_acc) always.
    CHECK(compositional_accuracy(records, oracle, schema) <=
          std::min(label_accuracy(records, oracle), length_accuracy(records, schema)));

    // Records without the relevant target are skipped, not counted wrong.
    std::vector<GenerationRecord> mixed{rec(0, -1, "aaa"), rec(-1, 0, "x y")};
    CHECK(label_accuracy(mixed, oracle) == 1.0);
    CHECK(length_accuracy(mixed, schema) == 1.0);
    CHECK_THROWS_WITH(compositional_accuracy(mixed, oracle, schema),
                      Catch::Matchers::ContainsSubstring("NoLabelTarget"));

    std::vector<GenerationRecord> no_labels{rec(-1, 0, "x")};
    CHECK_THROWS_WITH(label_accuracy(no_labels, oracle),
                      Catch::Matchers::ContainsSubstring("NoLabelTarget"));
    CHECK_THROWS_AS(label_accuracy({}, oracle), MetricError);
}

TEST_CASE("bleu4 trivial endpoints") {
    CHECK(bleu4({"the cat sat on the mat"}, {"the cat sat on the mat"}) ==
          Catch::Approx(1.0).epsilon(1e-12));
    CHECK(bleu4({"x y z w"}, {"a b c d"}) == 0.0);
    CHECK_THROWS_WITH(bleu4({}, {"a"}), Catch::Matchers::ContainsSubstring("EmptyInput"));
    CHECK_THROWS_WITH(bleu4({"a"}, {}), Catch::Matchers::ContainsSubstring("EmptyInput"));
}

TEST_CASE("bleu4 matches a hand-worked two-sentence corpus") {
    // Candidates: "a b c d e" (5 tokens) and "a b c d" (4 tokens).
    // Reference: "a b c d f" (5 tokens).
    //
    // Modified precisions, candidate 1: unigrams a,b,c,d match (4/5);
    // bigrams ab,bc,cd match (3/4); trigrams abc,bcd (2/3); 4-grams abcd (1/2).
    // Candidate 2: unigrams 4/4; bigrams 3/3; trigrams 2/2; 4-grams 1/1.
    // Pooled: p1 = 8/9, p2 = 6/7, p3 = 4/5, p4 = 2/3.
    // Lengths: c = 9, r = 10 -> BP = exp(1 - 10/9).
    std::vector<std::string> cands{"a b c d e", "a b c d"};
    std::vector<std::string> refs{"a b c d f"};
    double expected = std::exp(1.0 - 10.0 / 9.0) *
                      std::exp(0.25 * (std::log(8.0 / 9) + std::log(6.0 / 7) +
                                       std::log(4.0 / 5) + std::log(2.0 / 3)));
    CHECK(bleu4(cands, refs) == Catch::Approx(expected).epsilon(1e-9));
}

TEST_CASE("bleu4 clips counts and uses the closest reference length") {
    // "the the the the" against the reference: 'the' is clipped to the max
    // reference count 1, and no bigram matches -> score 0 unsmoothed.
    CHECK(bleu4({"the the the the"}, {"the cat sat here"}) == 0.0);

    // Closest-length matching: candidate of 4 tokens picks the 4-token
    // reference, so BP = 1 even though a 9-token reference exists.
    std::vector<std::string> refs{"a b c d", "a b c d e f g h i"};
    double with_both = bleu4({"a b c d"}, refs);
    CHECK(with_both == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bleu4 smoothing adds one to the n>=2 precision counts") {
    // Candidate "a b c d e" vs reference "a b c d f":
    // p1 = 4/5 (unsmoothed), p2 = (3+1)/(4+1), p3 = (2+1)/(3+1), p4 = (1+1)/(2+1).
    double expected = std::exp(0.25 * (std::log(4.0 / 5) + std::log(4.0 / 5) +
                                       std::log(3.0 / 4) + std::log(2.0 / 3)));
    CHECK(bleu4({"a b c d e"}, {"a b c d f"}, true) == Catch::Approx(expected).epsilon(1e-9));
}

TEST_CASE("bleu4 is invariant to reference order") {
    std::vector<std::string> cands{"a b c d e", "f g h i"};
    std::vector<std::string> refs{"a b c x y", "f g h j", "a a a a"};
    auto shuffled = refs;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(bleu4(cands, refs, true) == bleu4(cands, shuffled, true));
}

TEST_CASE("entropy4 hand-computed cases") {
    // 8 distinct 4-grams -> uniform over 8 -> 3 bits.
    CHECK(entropy4({"t1 t2 t3 t4 t5 t6 t7 t8 t9 t10 t11"}) ==
          Catch::Approx(3.0).epsilon(1e-12));
    // One repeated 4-gram -> 0 bits.
    CHECK(entropy4({"x x x x x x"}) == Catch::Approx(0.0).margin(1e-12));
    // Multiset {g1 x2, g2 x1, g3 x1} -> 1.5 bits.
    CHECK(entropy4({"a b c d", "a b c d", "e f g h", "i j k l"}) ==
          Catch::Approx(1.5).epsilon(1e-12));

    CHECK_THROWS_WITH(entropy4({"a b c"}), Catch::Matchers::ContainsSubstring("TooShort"));
}

TEST_CASE("entropy4 is order invariant and grows with new uniform mass") {
    std::vector<std::string> texts{"a b c d", "e f g h"};
    std::vector<std::string> reordered{"e f g h", "a b c d"};
    CHECK(entropy4(texts) == entropy4(reordered));

    // Uniform over 2 -> adding a text with one entirely new 4-gram gives
    // uniform over 3: entropy must not decrease.
    auto grown = texts;
    grown.push_back("p q r s");
    CHECK(entropy4(grown) >= entropy4(texts));
    CHECK(entropy4(grown) == Catch::Approx(std::log2(3.0)).epsilon(1e-12));
}

TEST_CASE("MetricsReport serializes into grouped sections") {
    MetricsReport rep;
    rep.label_acc = 0.5;
    rep.bleu = 0.25;
    rep.entropy = 3.0;
    MetricsReport sub;
    sub.comp_acc = 0.125;
    rep.strata["Z.S."] = sub;

    auto j = rep.to_json();
    CHECK(j["control_accuracy"]["label_acc"] == 0.5);
    CHECK(j["text_quality"]["bleu4_corpus"] == 0.25);
    CHECK(j["diversity"]["entropy4_bits"] == 3.0);
    CHECK(j["strata"]["Z.S."]["control_accuracy"]["comp_acc"] == 0.125);
    CHECK(!j.contains("length_acc"));

    MetricsReport empty;
    CHECK(empty.to_json().empty());
}
