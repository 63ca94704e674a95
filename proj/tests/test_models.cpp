#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "nlctg/experiment.hpp"
#include "nlctg/models.hpp"

using namespace nlctg;

namespace {

std::vector<std::vector<std::string>> tiny_corpus() {
    return {{"a", "b", "a"}, {"a", "b"}, {"b", "a"}};
}

}  // namespace

TEST_CASE("Vocabulary reserves the special ids") {
    Vocabulary v;
    CHECK(v.size() == 4);
    CHECK(v.id_or_unk("<bos>") == Vocabulary::kBos);
    CHECK(v.id_or_unk("<eos>") == Vocabulary::kEos);
    CHECK(v.id_or_unk("<sep>") == Vocabulary::kSep);
    CHECK(v.id_or_unk("<unk>") == Vocabulary::kUnk);

    TokenId a = v.add("apple");
    CHECK(a == 4);
    CHECK(v.add("apple") == a);  // idempotent
    CHECK(v.id_or_unk("missing") == Vocabulary::kUnk);

    std::vector<std::string> words{"apple", "missing"};
    TokenSeq ids = v.encode(words);
    CHECK(ids == TokenSeq{4, Vocabulary::kUnk});
    CHECK(v.decode(ids) == std::vector<std::string>{"apple", "<unk>"});
}

TEST_CASE("NGramLm token probabilities follow the add-alpha closed form") {
    // Order 2, alpha 0.5. Corpus: "a b a", "a b", "b a".
    NGramLm lm = train_ngram(tiny_corpus(), 2, 0.5);
    const double V = static_cast<double>(lm.vocab().size());  // 4 reserved + a + b = 6
    REQUIRE(V == 6.0);
    TokenId a = lm.vocab().id_or_unk("a"), b = lm.vocab().id_or_unk("b");

    // Context <bos>: 3 starts, "a" twice, "b" once.
    CHECK(lm.token_probability({}, a) == Catch::Approx((2 + 0.5) / (3 + 0.5 * V)).epsilon(1e-12));
    CHECK(lm.token_probability({}, b) == Catch::Approx((1 + 0.5) / (3 + 0.5 * V)).epsilon(1e-12));
    // Context "a": occurrences followed by b, b, <eos>, <eos>.
    TokenSeq ctx_a{a};
    CHECK(lm.token_probability(ctx_a, b) ==
          Catch::Approx((2 + 0.5) / (4 + 0.5 * V)).epsilon(1e-12));
    CHECK(lm.token_probability(ctx_a, Vocabulary::kEos) ==
          Catch::Approx((2 + 0.5) / (4 + 0.5 * V)).epsilon(1e-12));
    // Unseen context backs off to uniform.
    TokenSeq ctx_unk{Vocabulary::kUnk};
    CHECK(lm.token_probability(ctx_unk, a) == Catch::Approx(1.0 / V).epsilon(1e-12));

    // Only the most recent order-1 tokens matter.
    TokenSeq long_ctx{b, b, b, a};
    CHECK(lm.token_probability(long_ctx, b) == lm.token_probability(ctx_a, b));
}

TEST_CASE("next_distribution agrees with token_probability and sums to one") {
    NGramLm lm = train_ngram(tiny_corpus(), 2, 0.1);
    TokenSeq ctx{lm.vocab().id_or_unk("a")};
    auto dist = lm.next_distribution(ctx);
    REQUIRE(dist.size() == lm.vocab().size());
    double total = 0.0;
    for (std::size_t t = 0; t < dist.size(); ++t) {
        CHECK(dist[t] ==
              Catch::Approx(lm.token_probability(ctx, static_cast<TokenId>(t))).epsilon(1e-12));
        total += dist[t];
    }
    CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perplexity of an untrained-context LM equals the vocabulary size") {
    // A fresh LM whose contexts are all unseen scores every token 1/|V|,
    // so perplexity is exactly |V|.
    NGramLm lm(2, 0.1);
    lm.vocab().add("x");
    lm.vocab().add("y");
    double ppl = lm.perplexity({{"x", "y", "x"}, {"y"}});
    CHECK(ppl == Catch::Approx(static_cast<double>(lm.vocab().size())).epsilon(1e-12));
}

TEST_CASE("NGramLm JSON round trip preserves the distribution") {
    NGramLm lm = train_ngram(tiny_corpus(), 3, 0.25);
    NGramLm back = NGramLm::from_json(lm.to_json());
    CHECK(back.order() == 3);
    CHECK(back.alpha() == 0.25);
    CHECK(back.vocab() == lm.vocab());
    TokenSeq ctx{lm.vocab().id_or_unk("a"), lm.vocab().id_or_unk("b")};
    auto d1 = lm.next_distribution(ctx);
    auto d2 = back.next_distribution(ctx);
    REQUIRE(d1.size() == d2.size());
    for (std::size_t t = 0; t < d1.size(); ++t) CHECK(d1[t] == d2[t]);
}

TEST_CASE("train_ngram assigns the same probabilities under corpus reordering") {
    // Token ids follow first occurrence, so reordering the corpus may permute
    // the vocabulary; the model must still be the same when queried by word.
    auto corpus = tiny_corpus();
    auto reversed = corpus;
    std::reverse(reversed.begin(), reversed.end());
    NGramLm fwd = train_ngram(corpus, 2, 0.1);
    NGramLm rev = train_ngram(reversed, 2, 0.1);
    std::set<std::string> fwd_tokens(fwd.vocab().tokens().begin(), fwd.vocab().tokens().end());
    std::set<std::string> rev_tokens(rev.vocab().tokens().begin(), rev.vocab().tokens().end());
    CHECK(fwd_tokens == rev_tokens);
    for (const std::string& ctx : {"a", "b"})
        for (const std::string& next : {"a", "b"}) {
            TokenSeq fctx{fwd.vocab().id_or_unk(ctx)};
            TokenSeq rctx{rev.vocab().id_or_unk(ctx)};
            CHECK(fwd.token_probability(fctx, fwd.vocab().id_or_unk(next)) ==
                  rev.token_probability(rctx, rev.vocab().id_or_unk(next)));
        }
    CHECK_THROWS_AS(train_ngram({}, 2, 0.1), ModelError);
    CHECK_THROWS_AS(NGramLm(0, 0.1), ModelError);
    CHECK_THROWS_AS(NGramLm(2, 0.0), ModelError);
}

TEST_CASE("prefix_features emit the documented channels") {
    std::vector<std::string> tokens{"a1", "f2", "<eos>"};
    auto feats = prefix_features(tokens);
    auto has = [&](const std::string& f) {
        return std::find(feats.begin(), feats.end(), f) != feats.end();
    };
    CHECK(has("u:a1"));
    CHECK(has("u:f2"));
    CHECK(has("u:<eos>"));
    CHECK(has("b:a1|f2"));
    CHECK(has("b:f2|<eos>"));
    CHECK(has("@len:2"));      // content length excludes the trailing <eos>
    CHECK(has("@endlen:2"));
    CHECK(has("@endlenb:0"));  // width-4 bucket of 2

    auto open = prefix_features(std::vector<std::string>{"a1", "f2"});
    CHECK(std::find(open.begin(), open.end(), "@endlen:2") == open.end());
    CHECK(std::find(open.begin(), open.end(), "@len:2") != open.end());

    // Length marker caps at len_cap.
    std::vector<std::string> long_prefix(80, "x");
    auto capped = prefix_features(long_prefix);
    CHECK(std::find(capped.begin(), capped.end(), "@len:64") != capped.end());
}

TEST_CASE("naive bayes posterior matches the hand-computed smoothed form") {
    // Single-token prefixes so the feature set is {u:t, @len:1}.
    NaiveBayesDiscriminator nb(2, 1.0);
    nb.add(std::vector<std::string>{"x"}, 0);
    nb.add(std::vector<std::string>{"x"}, 0);
    nb.add(std::vector<std::string>{"y"}, 1);

    // Feature vocab: {u:x, u:y, @len:1} -> fv = 3.
    // Class 0: priors (2+1)/(3+2); feats u:x count 2 of 4, @len:1 count 2 of 4.
    // Class 1: prior (1+1)/(3+2); feats u:x count 0 of 2, @len:1 count 1 of 2.
    double l0 = std::log(3.0 / 5) + std::log((2 + 1) / (4 + 3.0)) + std::log((2 + 1) / (4 + 3.0));
    double l1 = std::log(2.0 / 5) + std::log((0 + 1) / (2 + 3.0)) + std::log((1 + 1) / (2 + 3.0));
    double p0 = std::exp(l0) / (std::exp(l0) + std::exp(l1));

    auto post = nb.posterior(std::vector<std::string>{"x"});
    REQUIRE(post.size() == 2);
    CHECK(post[0] == Catch::Approx(p0).epsilon(1e-12));
    CHECK(post[0] + post[1] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("train_nb requires every class to appear") {
    std::vector<std::pair<std::vector<std::string>, int>> pairs = {
        {{"x"}, 0}, {{"y"}, 0}};
    CHECK_THROWS_WITH(train_nb(pairs, 2), Catch::Matchers::ContainsSubstring("MissingClassExamples"));
}

TEST_CASE("naive bayes JSON round trip") {
    NaiveBayesDiscriminator nb(3, 0.5);
    nb.add(std::vector<std::string>{"x", "y"}, 0);
    nb.add(std::vector<std::string>{"y"}, 1);
    nb.add(std::vector<std::string>{"z", "z"}, 2);
    auto back = NaiveBayesDiscriminator::from_json(nb.to_json());
    for (auto prefix : {std::vector<std::string>{"x"}, {"y", "z"}, {"q"}}) {
        auto p1 = nb.posterior(prefix);
        auto p2 = back.posterior(prefix);
        for (std::size_t c = 0; c < p1.size(); ++c)
            CHECK(p1[c] == Catch::Approx(p2[c]).epsilon(1e-12));
    }
}

TEST_CASE("binary heads are one-vs-rest naive bayes") {
    std::vector<std::pair<std::vector<std::string>, int>> pairs = {
        {{"x"}, 0}, {{"x"}, 0}, {{"y"}, 1}, {{"z"}, 2}};
    BinaryHeads heads = train_binary_heads(pairs, 3);
    CHECK(heads.num_options() == 3);

    // Head 0 must agree with a hand-built binary NB (y=1 iff class 0).
    NaiveBayesDiscriminator ref(2, 1.0);
    ref.add(std::vector<std::string>{"x"}, 1);
    ref.add(std::vector<std::string>{"x"}, 1);
    ref.add(std::vector<std::string>{"y"}, 0);
    ref.add(std::vector<std::string>{"z"}, 0);
    std::vector<std::string> probe{"x"};
    CHECK(heads.probability(0, probe) == Catch::Approx(ref.posterior(probe)[1]).epsilon(1e-12));

    auto back = BinaryHeads::from_json(heads.to_json());
    CHECK(back.probability(1, probe) == Catch::Approx(heads.probability(1, probe)).epsilon(1e-12));
}

TEST_CASE("normalize_command_token strips edges and lowercases") {
    CHECK(normalize_command_token("Craft") == "craft");
    CHECK(normalize_command_token("alpha,") == "alpha");
    CHECK(normalize_command_token("\"Bravo.\"") == "bravo");
    CHECK(normalize_command_token("medium-sized") == "medium-sized");
    CHECK(normalize_command_token("...") == "");
}

TEST_CASE("alignment features pair prefixes with command bigrams and trigrams only") {
    std::vector<std::string> cmd{"Write", "a", "short", "text."};
    std::vector<std::string> prefix{"a1", "f2"};
    auto feats = alignment_features(cmd, prefix);

    auto has = [&](const std::string& f) {
        return std::find(feats.begin(), feats.end(), f) != feats.end();
    };
    CHECK(has("c:short"));
    CHECK(has("cb:a|short"));
    CHECK(has("xb:a|short~u:a1"));
    CHECK(has("xt:write|a|short~u:a1"));
    CHECK(has("xb:a|short~@len:2"));

    for (const auto& f : feats) {
        // No bare-unigram command pairing, and prefix bigrams stay unpaired.
        CHECK(f.rfind("x:", 0) != 0);
        if (f.rfind("xb:", 0) == 0 || f.rfind("xt:", 0) == 0)
            CHECK(f.find("~b:") == std::string::npos);
    }
}

TEST_CASE("alignment training separates linearly separable pairs") {
    std::vector<AlignmentPair> pairs;
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        AlignmentPair p;
        bool pos = i % 2 == 0;
        p.command_tokens = {"write", "about", pos ? "alpha" : "bravo", "topic"};
        p.prefix_tokens = {"a1", "a2"};
        p.y = pos ? 1 : 0;
        pairs.push_back(p);
    }
    AlignmentTrainConfig cfg;
    cfg.epochs = 10;
    cfg.dim = 1 << 12;
    auto result = train_alignment(pairs, cfg);
    CHECK(result.train_accuracy == 1.0);

    std::vector<std::string> prefix{"a1", "a2"};
    std::vector<std::string> pos_cmd{"write", "about", "alpha", "topic"};
    std::vector<std::string> neg_cmd{"write", "about", "bravo", "topic"};
    CHECK(result.model.predict(pos_cmd, prefix) > 0.9);
    CHECK(result.model.predict(neg_cmd, prefix) < 0.1);

    std::vector<AlignmentPair> single(pairs.begin(), pairs.begin() + 1);
    CHECK_THROWS_WITH(train_alignment(single, cfg),
                      Catch::Matchers::ContainsSubstring("SingleClassData"));
}

TEST_CASE("AdaGrad and l2 training paths run and remain deterministic") {
    std::vector<AlignmentPair> pairs;
    for (int i = 0; i < 60; ++i) {
        AlignmentPair p;
        p.command_tokens = {"make", "it", i % 2 ? "short" : "long"};
        p.prefix_tokens = {i % 2 ? "f1" : "f2"};
        p.y = i % 2;
        pairs.push_back(p);
    }
    AlignmentTrainConfig cfg;
    cfg.schedule = SgdSchedule::AdaGrad;
    cfg.l2 = 1e-4;
    cfg.dim = 1 << 12;
    cfg.seed = 9;
    auto r1 = train_alignment(pairs, cfg);
    auto r2 = train_alignment(pairs, cfg);
    CHECK(r1.train_accuracy == r2.train_accuracy);
    std::vector<std::string> probe_cmd{"make", "it", "short"};
    std::vector<std::string> probe_prefix{"f1"};
    CHECK(r1.model.predict(probe_cmd, probe_prefix) ==
          r2.model.predict(probe_cmd, probe_prefix));
    CHECK(r1.train_accuracy > 0.9);
}

TEST_CASE("alignment logistic gradient matches central finite differences") {
    AlignmentModel model(1 << 10, 0x9e3779b97f4a7c15ULL);
    Rng rng(17);
    for (auto& w : model.weights()) w = (rng.uniform01() - 0.5) * 0.2;

    std::vector<std::string> cmd{"write", "a", "short", "alpha", "text"};
    std::vector<std::string> prefix{"a1", "f2", "a3", "<eos>"};
    auto x = model.hashed(cmd, prefix);
    const int y = 1;

    auto loss = [&](const AlignmentModel& m) {
        double z = m.decision(x);
        double p = 1.0 / (1.0 + std::exp(-z));
        return y ? -std::log(p) : -std::log(1.0 - p);
    };

    double p = 1.0 / (1.0 + std::exp(-model.decision(x)));
    double g = p - y;  // dL/dz
    const double h = 1e-6;
    for (std::size_t i = 0; i < std::min<std::size_t>(x.size(), 10); ++i) {
        auto [idx, v] = x[i];
        double analytic = g * v;
        AlignmentModel plus = model, minus = model;
        plus.weights()[idx] += h;
        minus.weights()[idx] -= h;
        double numeric = (loss(plus) - loss(minus)) / (2 * h);
        CHECK(std::abs(analytic - numeric) / std::max(1e-12, std::abs(numeric)) < 1e-5);
    }
}

TEST_CASE("AlignmentModel JSON round trip preserves predictions") {
    std::vector<AlignmentPair> pairs;
    for (int i = 0; i < 40; ++i) {
        AlignmentPair p;
        p.command_tokens = {"topic", i % 2 ? "alpha" : "bravo"};
        p.prefix_tokens = {i % 2 ? "a1" : "b1"};
        p.y = i % 2;
        pairs.push_back(p);
    }
    AlignmentTrainConfig cfg;
    cfg.dim = 1 << 12;
    auto model = train_alignment(pairs, cfg).model;
    auto back = AlignmentModel::from_json(model.to_json());
    CHECK(back.dim() == model.dim());
    CHECK(back.hash_seed() == model.hash_seed());
    std::vector<std::string> cmd{"topic", "alpha"};
    std::vector<std::string> prefix{"a1"};
    CHECK(back.predict(cmd, prefix) == model.predict(cmd, prefix));
}

TEST_CASE("BoundAlignmentAdapter reproduces AlignmentModel::predict exactly") {
    // The adapter caches per-feature weight sums; it must stay numerically
    // identical to the unfactored model on the same feature space.
    AlignmentModel model(1 << 14, 0x9e3779b97f4a7c15ULL);
    Rng rng(23);
    for (auto& w : model.weights()) w = (rng.uniform01() - 0.5);
    model.bias() = 0.3;

    Vocabulary vocab;
    std::vector<std::string> words{"a1", "a2", "b1", "f1", "f2", "<eos>"};
    for (const auto& w : words) vocab.add(w);

    std::vector<std::vector<std::string>> commands = {
        {"Please", "write", "a", "short", "text", "about", "alpha."},
        {"Make", "the", "theme", "bravo", "and", "the", "size", "long."},
        {"alpha"},
    };
    std::vector<std::vector<std::string>> prefixes = {
        {},
        {"a1"},
        {"a1", "f2", "a2"},
        {"a1", "f2", "a2", "<eos>"},
        {"b1", "b1", "f1", "f1", "f2"},
    };

    for (const auto& cmd : commands) {
        BoundAlignmentAdapter adapter(model, vocab, cmd);
        for (const auto& prefix : prefixes) {
            TokenSeq ids = vocab.encode(prefix);
            double via_adapter = adapter.alignment_probability({}, ids);
            double direct = model.predict(cmd, vocab.decode(ids));
            INFO("cmd0=" << cmd[0] << " plen=" << prefix.size());
            CHECK(via_adapter == Catch::Approx(direct).epsilon(1e-12));
        }
    }
}
