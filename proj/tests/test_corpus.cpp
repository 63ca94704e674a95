#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nlctg/corpus.hpp"
#include "nlctg/command_gen.hpp"
#include "nlctg/schema.hpp"

using namespace nlctg;

namespace {

SchemaMeta test_meta() {
    SchemaMeta meta;
    meta.label_attr_names = {"topic"};
    meta.length_attr_names = {"length"};
    meta.domains = {"letter sequence"};
    return meta;
}

AttributeSchema test_schema() {
    return parse_schema("0: alpha\n1: bravo\n2: charlie",
                        "0: short\n4: medium\n8: long", test_meta());
}

ParsedGrammarFile test_grammar() {
    return parse_grammar(R"(<templates>
write a [LEN] text about [LABEL].
write a text about [LABEL].
write a [LEN] text.
<variables>
)");
}

// A deterministic corpus with controlled lengths and labels.
std::vector<Example> make_corpus(const AttributeSchema& schema, std::size_t n) {
    std::string content;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text = "w";
        for (std::size_t j = 0; j < i % 12; ++j) text += " w" + std::to_string(j);
        nlohmann::json j;
        j["text"] = text;
        j["label"] = static_cast<int>(i % 3);
        content += j.dump() + "\n";
    }
    return ingest_jsonl(content, schema, "corpus").examples;
}

}  // namespace

TEST_CASE("ingest_jsonl reads text, labels, and derived fields") {
    AttributeSchema schema = test_schema();
    std::string content = R"({"text": "a b c d e", "label": 1}
{"text": "x y", "label": "charlie"}

{"text": "one two three four five six seven eight nine", "label": "0"}
)";
    auto result = ingest_jsonl(content, schema, "src");
    REQUIRE(result.examples.size() == 3);
    CHECK(result.dropped == 0);

    const Example& e0 = result.examples[0];
    CHECK(e0.id == "src:0");
    CHECK(e0.token_count == 5);
    CHECK(e0.label_id == 1);
    CHECK(e0.length_id == 1);  // cutoff 4 inclusive
    CHECK(e0.source == "src");

    CHECK(result.examples[1].label_id == 2);  // canonical name lookup
    CHECK(result.examples[1].length_id == 0);
    CHECK(result.examples[2].label_id == 0);  // digits-in-string fallback
    CHECK(result.examples[2].length_id == 2);
}

TEST_CASE("ingest_jsonl error cases") {
    AttributeSchema schema = test_schema();
    CHECK_THROWS_WITH(ingest_jsonl(R"({"text": "a"})", schema, "s"),
                      Catch::Matchers::ContainsSubstring("MalformedRecord"));
    CHECK_THROWS_WITH(ingest_jsonl("not json", schema, "s"),
                      Catch::Matchers::ContainsSubstring("MalformedRecord"));
    CHECK_THROWS_WITH(ingest_jsonl(R"({"text": "a", "label": 7})", schema, "s"),
                      Catch::Matchers::ContainsSubstring("UnknownLabel"));
    CHECK_THROWS_WITH(ingest_jsonl(R"({"text": "a", "label": "delta"})", schema, "s"),
                      Catch::Matchers::ContainsSubstring("UnknownLabel"));
    CHECK_THROWS_WITH(ingest_jsonl("", schema, "s"),
                      Catch::Matchers::ContainsSubstring("EmptyCorpus"));
}

TEST_CASE("ingest_jsonl drops examples over max_tokens") {
    AttributeSchema schema = test_schema();
    std::string content = R"({"text": "a b c", "label": 0}
{"text": "a b c d e f", "label": 1}
)";
    IngestOptions opts;
    opts.max_tokens = 4;
    auto result = ingest_jsonl(content, schema, "s", opts);
    CHECK(result.examples.size() == 1);
    CHECK(result.dropped == 1);
}

TEST_CASE("ingest_csv parses quoted fields and either column order") {
    AttributeSchema schema = test_schema();
    std::string content =
        "label,text\n"
        "0,\"hello, quoted world\"\n"
        "bravo,\"embedded \"\"quotes\"\" here\"\n";
    auto result = ingest_csv(content, schema, "csv");
    REQUIRE(result.examples.size() == 2);
    CHECK(result.examples[0].text == "hello, quoted world");
    CHECK(result.examples[0].label_id == 0);
    CHECK(result.examples[1].text == "embedded \"quotes\" here");
    CHECK(result.examples[1].label_id == 1);

    CHECK_THROWS_WITH(ingest_csv("foo,bar\n1,2\n", schema, "csv"),
                      Catch::Matchers::ContainsSubstring("MalformedRecord"));
}

TEST_CASE("build_split partitions by the configured ratios") {
    AttributeSchema schema = test_schema();
    auto pool = make_corpus(schema, 100);
    SplitBundle b = build_split(pool, SplitKind::full(), SplitRatios{}, 7);
    CHECK(b.train_supervised.size() == 80);
    CHECK(b.val.size() == 10);
    CHECK(b.test.size() == 10);
    CHECK(b.train_lm.size() == 80);

    // Disjoint and jointly exhaustive by id.
    std::set<std::string> seen;
    for (const auto* part : {&b.train_supervised, &b.val, &b.test})
        for (const auto& e : *part) CHECK(seen.insert(e.id).second);
    CHECK(seen.size() == pool.size());

    // Deterministic in the seed, shuffled relative to input order.
    SplitBundle b2 = build_split(pool, SplitKind::full(), SplitRatios{}, 7);
    REQUIRE(b2.train_supervised.size() == b.train_supervised.size());
    for (std::size_t i = 0; i < b.train_supervised.size(); ++i)
        CHECK(b2.train_supervised[i].id == b.train_supervised[i].id);
    SplitBundle b3 = build_split(pool, SplitKind::full(), SplitRatios{}, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < b.train_supervised.size(); ++i)
        any_diff |= b3.train_supervised[i].id != b.train_supervised[i].id;
    CHECK(any_diff);
}

TEST_CASE("build_split is independent of input example order") {
    AttributeSchema schema = test_schema();
    auto pool = make_corpus(schema, 60);
    auto reversed = pool;
    std::reverse(reversed.begin(), reversed.end());
    SplitBundle a = build_split(pool, SplitKind::full(), SplitRatios{}, 3);
    SplitBundle b = build_split(reversed, SplitKind::full(), SplitRatios{}, 3);
    REQUIRE(a.test.size() == b.test.size());
    for (std::size_t i = 0; i < a.test.size(); ++i) CHECK(a.test[i].id == b.test[i].id);
}

TEST_CASE("build_split rejects bad ratios") {
    AttributeSchema schema = test_schema();
    auto pool = make_corpus(schema, 30);
    CHECK_THROWS_AS(build_split(pool, SplitKind::full(), {0.9, 0.2, 0.1}, 1), CorpusError);
    CHECK_THROWS_AS(build_split(pool, SplitKind::full(), {1.0, 0.0, 0.0}, 1), CorpusError);
}

TEST_CASE("zero-shot split removes the blocked class from supervision only") {
    AttributeSchema schema = test_schema();
    auto pool = make_corpus(schema, 120);
    const int blocked = 1;

    SplitBundle b = build_split(pool, SplitKind::zero_shot(blocked), SplitRatios{}, 5);
    for (const auto& e : b.train_supervised) CHECK(e.label_id != blocked);
    CHECK(b.train_lm.size() == b.train_supervised.size());

    SplitBundle u = build_split(pool, SplitKind::zero_shot(blocked, true), SplitRatios{}, 5);
    for (const auto& e : u.train_supervised) CHECK(e.label_id != blocked);
    bool lm_has_blocked = false;
    for (const auto& e : u.train_lm) lm_has_blocked |= e.label_id == blocked;
    CHECK(lm_has_blocked);
    CHECK(u.train_lm.size() > u.train_supervised.size());

    // Test strata partition the test set by the blocked class.
    CHECK(b.test_zero_shot.size() + b.test_regular.size() == b.test.size());
    for (const auto& e : b.test_zero_shot) CHECK(e.label_id == blocked);
    for (const auto& e : b.test_regular) CHECK(e.label_id != blocked);
    CHECK(!b.test_zero_shot.empty());
}

TEST_CASE("compositional split suppresses length for the noncomp class") {
    AttributeSchema schema = test_schema();
    auto pool = make_corpus(schema, 90);
    const int noncomp = 2;
    SplitBundle b = build_split(pool, SplitKind::compositional(noncomp), SplitRatios{}, 9);
    bool saw_noncomp = false;
    for (const auto& e : b.train_supervised) {
        if (e.label_id == noncomp) {
            saw_noncomp = true;
            CHECK(e.length_suppressed);
            CHECK(!e.attrs().length_id.has_value());
            CHECK(e.attrs().label_id == noncomp);
        } else {
            CHECK(!e.length_suppressed);
            CHECK(e.attrs().length_id.has_value());
        }
    }
    CHECK(saw_noncomp);

    fill_comp_targets(b, schema);
    REQUIRE(b.comp_test_targets.size() == schema.lengths.size());
    for (std::size_t i = 0; i < b.comp_test_targets.size(); ++i) {
        CHECK(b.comp_test_targets[i].label_id == noncomp);
        CHECK(b.comp_test_targets[i].length_id == static_cast<int>(i));
    }
}

TEST_CASE("make_command_dataset pairs each supervised example with a command") {
    AttributeSchema schema = test_schema();
    ParsedGrammarFile pg = test_grammar();
    auto pool = make_corpus(schema, 40);
    SplitBundle b = build_split(pool, SplitKind::full(), SplitRatios{}, 2);
    auto records = make_command_dataset(b, pg.grammar, schema, 77);
    REQUIRE(records.size() == b.train_supervised.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].example_id == b.train_supervised[i].id);
        CHECK(records[i].text == b.train_supervised[i].text);
        CHECK(recover_attrs(schema, records[i].command.text) == b.train_supervised[i].attrs());
    }
}

TEST_CASE("make_pair_dataset balances positives and negatives with correct labels") {
    AttributeSchema schema = test_schema();
    ParsedGrammarFile pg = test_grammar();
    auto pool = make_corpus(schema, 60);
    SplitBundle b = build_split(pool, SplitKind::full(), SplitRatios{}, 4);
    auto pairs = make_pair_dataset(b, pg.grammar, schema, PrefixPolicy{}, 21);

    REQUIRE(!pairs.empty());
    long pos = 0, neg = 0;
    std::map<std::string, Example> by_id;
    for (const auto& e : b.train_supervised) by_id[e.id] = e;

    for (const auto& p : pairs) {
        const Example& src = by_id.at(p.example_id);
        AttrSpec recovered = recover_attrs(schema, p.command_text);
        bool matches = recovered == src.attrs();
        CHECK(p.y == (matches ? 1 : 0));
        CHECK((p.y == 1) == (p.flip_mask == FlipMask::None));
        if (p.flip_mask == FlipMask::Label || p.flip_mask == FlipMask::Both)
            CHECK(recovered.label_id != src.attrs().label_id);
        if (p.flip_mask == FlipMask::Length || p.flip_mask == FlipMask::Both)
            CHECK(recovered.length_id != src.attrs().length_id);
        if (p.flip_mask == FlipMask::Label)
            CHECK(recovered.length_id == src.attrs().length_id);

        auto text_tokens = ws_tokenize(src.text);
        CHECK(p.prefix_tokens.size() <= std::min<std::size_t>(text_tokens.size(), 64));
        for (std::size_t i = 0; i < p.prefix_tokens.size(); ++i)
            CHECK(p.prefix_tokens[i] == text_tokens[i]);
        CHECK(p.is_full_text == (p.prefix_tokens.size() == text_tokens.size()));
        (p.y ? pos : neg) += 1;
    }
    CHECK(pos == neg);

    // The full text is always present as one prefix of each example.
    std::set<std::string> full_ids;
    for (const auto& p : pairs)
        if (p.is_full_text) full_ids.insert(p.example_id);
    CHECK(full_ids.size() == by_id.size());
}

TEST_CASE("make_pair_dataset refuses unflippable schemas") {
    SchemaMeta meta = test_meta();
    AttributeSchema schema = parse_schema("0: alpha", "0: short", meta);
    ParsedGrammarFile pg = test_grammar();
    std::string content = R"({"text": "a b c", "label": 0}
{"text": "d e", "label": 0}
{"text": "f g h", "label": 0}
{"text": "i j", "label": 0}
{"text": "k l m", "label": 0}
)";
    auto pool = ingest_jsonl(content, schema, "s").examples;
    SplitBundle b = build_split(pool, SplitKind::full(), {0.6, 0.2, 0.2}, 1);
    CHECK_THROWS_WITH(make_pair_dataset(b, pg.grammar, schema, PrefixPolicy{}, 1),
                      Catch::Matchers::ContainsSubstring("CannotFlip"));
}

TEST_CASE("plan_mixture computes examples-proportional rates with a cap") {
    auto plan = plan_mixture({{"a", 100}, {"b", 400}, {"c", 1000}}, 500);
    REQUIRE(plan.components.size() == 3);
    // Capped sizes 100, 400, 500 -> total 1000.
    CHECK(plan.components[0].rate == Catch::Approx(0.1));
    CHECK(plan.components[1].rate == Catch::Approx(0.4));
    CHECK(plan.components[2].rate == Catch::Approx(0.5));
    CHECK(plan.artificial_limit == 500);

    CHECK_THROWS_AS(plan_mixture({{"a", 0}}, 10), CorpusError);
    CHECK_THROWS_AS(plan_mixture({{"a", 5}}, 0), CorpusError);
}

TEST_CASE("sample_mixture draws per the plan and cycles each stream") {
    AttributeSchema schema = test_schema();
    auto pool = make_corpus(schema, 30);
    std::vector<Example> small(pool.begin(), pool.begin() + 3);
    std::vector<Example> large(pool.begin() + 3, pool.begin() + 27);

    auto plan = plan_mixture({{"small", small.size()}, {"large", large.size()}}, 100);
    auto mixed = sample_mixture(plan, {small, large}, 2000, 11);
    CHECK(mixed.size() == 2000);

    long from_small = 0;
    std::set<std::string> small_ids;
    for (const auto& e : small) small_ids.insert(e.id);
    for (const auto& e : mixed) from_small += small_ids.count(e.id);
    // Expected rate 3/27; binomial sd over 2000 draws is about 7.
    double expect = 2000.0 * 3.0 / 27.0;
    CHECK(std::abs(from_small - expect) < 60);

    CHECK_THROWS_AS(sample_mixture(plan, {small}, 10, 1), CorpusError);
}
