#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "nlctg/schema.hpp"

using namespace nlctg;

namespace {

SchemaMeta test_meta() {
    SchemaMeta meta;
    meta.label_attr_names = {"topic", "theme"};
    meta.length_attr_names = {"length", "size"};
    meta.domains = {"letter sequence"};
    return meta;
}

AttributeSchema simple_schema() {
    return parse_schema("0: alpha, the alpha family\n1: bravo\n2: charlie",
                        "0: short, brief\n18: medium\n28: long, lengthy", test_meta());
}

}  // namespace

TEST_CASE("parse_schema builds labels and lengths in id order") {
    AttributeSchema s = simple_schema();
    REQUIRE(s.labels.size() == 3);
    CHECK(s.labels[0].canonical == "alpha");
    CHECK(s.labels[0].verbalizers == std::vector<std::string>{"alpha", "the alpha family"});
    CHECK(s.labels[2].id == 2);

    REQUIRE(s.lengths.size() == 3);
    CHECK(s.lengths[0].cutoff == 0);
    CHECK(s.lengths[1].cutoff == 18);
    CHECK(s.lengths[2].cutoff == 28);
    CHECK(s.lengths[1].id == 1);
}

TEST_CASE("label lines sort by id regardless of file order") {
    AttributeSchema s =
        parse_schema("2: charlie\n0: alpha\n1: bravo", "0: short\n10: long", test_meta());
    CHECK(s.labels[0].canonical == "alpha");
    CHECK(s.labels[2].canonical == "charlie");
}

TEST_CASE("length_level_of uses inclusive lower bounds") {
    AttributeSchema s = simple_schema();
    CHECK(s.length_level_of(0) == 0);
    CHECK(s.length_level_of(17) == 0);
    CHECK(s.length_level_of(18) == 1);
    CHECK(s.length_level_of(27) == 1);
    CHECK(s.length_level_of(28) == 2);
    CHECK(s.length_level_of(1000) == 2);
}

TEST_CASE("paper cutoff presets assign levels at the documented boundaries") {
    // Two-bucket-boundary preset (cutoffs 0/43/56) and the four-boundary
    // preset (0/43/72/104/144), as inclusive lower bounds.
    AttributeSchema ag =
        parse_schema("0: x\n1: y", "0: short\n43: medium\n56: long", test_meta());
    CHECK(ag.length_level_of(42) == 0);
    CHECK(ag.length_level_of(43) == 1);
    CHECK(ag.length_level_of(55) == 1);
    CHECK(ag.length_level_of(56) == 2);

    AttributeSchema yelp = parse_schema(
        "0: x\n1: y", "0: l0\n43: l1\n72: l2\n104: l3\n144: l4", test_meta());
    REQUIRE(yelp.lengths.size() == 5);
    CHECK(yelp.length_level_of(42) == 0);
    CHECK(yelp.length_level_of(43) == 1);
    CHECK(yelp.length_level_of(71) == 1);
    CHECK(yelp.length_level_of(72) == 2);
    CHECK(yelp.length_level_of(103) == 2);
    CHECK(yelp.length_level_of(104) == 3);
    CHECK(yelp.length_level_of(143) == 3);
    CHECK(yelp.length_level_of(144) == 4);
}

TEST_CASE("invert_verbalizer folds case and whitespace") {
    AttributeSchema s = simple_schema();
    auto o = s.invert_verbalizer("The  ALPHA   Family");
    CHECK(o.kind == AttributeSchema::Owner::Kind::Label);
    CHECK(o.id == 0);

    auto l = s.invert_verbalizer("Lengthy");
    CHECK(l.kind == AttributeSchema::Owner::Kind::Length);
    CHECK(l.id == 2);

    CHECK(!s.try_invert_verbalizer("unknown phrase").has_value());
    CHECK_THROWS_AS(s.invert_verbalizer("unknown phrase"), SchemaError);
}

TEST_CASE("label_by_name matches the canonical verbalizer") {
    AttributeSchema s = simple_schema();
    CHECK(s.label_by_name("Bravo").id == 1);
    CHECK_THROWS_AS(s.label_by_name("the alpha family"), SchemaError);  // not canonical
}

TEST_CASE("parse_schema error codes") {
    auto expect = [](const char* labels, const char* lengths, const std::string& code) {
        try {
            parse_schema(labels, lengths, test_meta());
            FAIL("expected SchemaError containing " << code);
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find(code) != std::string::npos);
        }
    };

    expect("0: a\n2: b", "0: s\n10: l", "NonContiguousIds");
    expect("1: a\n2: b", "0: s\n10: l", "NonContiguousIds");
    expect("0: a\n0: b", "0: s\n10: l", "DuplicateId");
    expect("0: a\n1: b", "0: s\n10: l\n10: x", "CutoffNotIncreasing");
    expect("0: a\n1: b", "0: s\n5: m\n4: l", "CutoffNotIncreasing");
    expect("0: a\n1: b", "1: s\n10: l", "CutoffNotIncreasing");  // first must be 0
    expect("0: a\n1: b", "", "CutoffNotIncreasing");
    expect("", "0: s\n10: l", "EmptyVerbalizerList");
    expect("0: a\n1:", "0: s\n10: l", "EmptyVerbalizerList");
    expect("x: a", "0: s\n10: l", "MalformedSection");
    expect("0 a", "0: s\n10: l", "MalformedSection");
    expect("0: a, A", "0: s\n10: l", "AmbiguousVerbalizer");  // repeat within one line
    expect("0: a\n1: a", "0: s\n10: l", "AmbiguousVerbalizer");  // across classes
    expect("0: a\n1: b", "0: s\n10: a", "AmbiguousVerbalizer");  // label vs length
}

TEST_CASE("finalize requires attribute-name and domain verbalizers") {
    SchemaMeta meta = test_meta();
    meta.domains.clear();
    CHECK_THROWS_AS(parse_schema("0: a\n1: b", "0: s\n10: l", meta), SchemaError);
}

TEST_CASE("derive_balanced_cutoffs splits evenly on a hand case") {
    // 9 values, 3 buckets of 3: targets #(x<c) >= 3 and >= 6.
    std::vector<long> counts{5, 5, 5, 10, 10, 10, 20, 20, 20};
    auto cutoffs = derive_balanced_cutoffs(counts, 3);
    REQUIRE(cutoffs.size() == 3);
    CHECK(cutoffs[0] == 0);
    CHECK(cutoffs[1] == 6);   // smallest c with #(x < c) >= 3
    CHECK(cutoffs[2] == 11);  // smallest c with #(x < c) >= 6

    // Each bucket then holds exactly 3 of the values.
    AttributeSchema s =
        parse_schema("0: a\n1: b", "0: s\n6: m\n11: l", test_meta());
    int per_level[3] = {0, 0, 0};
    for (long v : counts) ++per_level[s.length_level_of(v)];
    CHECK(per_level[0] == 3);
    CHECK(per_level[1] == 3);
    CHECK(per_level[2] == 3);
}

TEST_CASE("derive_balanced_cutoffs skips duplicates to stay strictly increasing") {
    std::vector<long> counts{3, 3, 3, 3, 3, 7};
    auto cutoffs = derive_balanced_cutoffs(counts, 2);
    CHECK(cutoffs == std::vector<long>{0, 4});
}

TEST_CASE("derive_balanced_cutoffs degenerate inputs") {
    CHECK_THROWS_WITH(derive_balanced_cutoffs({1, 2, 3}, 1),
                      Catch::Matchers::ContainsSubstring("DegenerateDistribution"));
    CHECK_THROWS_WITH(derive_balanced_cutoffs({1, 2}, 3),
                      Catch::Matchers::ContainsSubstring("DegenerateDistribution"));
    CHECK_THROWS_WITH(derive_balanced_cutoffs({4, 4, 4, 4}, 2),
                      Catch::Matchers::ContainsSubstring("DegenerateDistribution"));
}
