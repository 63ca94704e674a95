#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlctg/decode.hpp"
#include "nlctg/errors.hpp"
#include "nlctg/hash.hpp"
#include "nlctg/rng.hpp"
#include "nlctg/tokenize.hpp"

namespace nlctg {

class Vocabulary {
  public:
    static constexpr TokenId kBos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kSep = 2;
    static constexpr TokenId kUnk = 3;

    Vocabulary() {
        for (const char* t : {"<bos>", "<eos>", "<sep>", "<unk>"}) add(t);
    }

    TokenId add(const std::string& token) {
        auto it = index_.find(token);
        if (it != index_.end()) return it->second;
        TokenId id = static_cast<TokenId>(tokens_.size());
        tokens_.push_back(token);
        index_[token] = id;
        return id;
    }

    TokenId id_or_unk(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? kUnk : it->second;
    }

    const std::string& token(TokenId id) const { return tokens_.at(id); }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    TokenSeq encode(std::span<const std::string> words) const {
        TokenSeq out;
        out.reserve(words.size());
        for (const auto& w : words) out.push_back(id_or_unk(w));
        return out;
    }

    std::vector<std::string> decode(std::span<const TokenId> ids) const {
        std::vector<std::string> out;
        out.reserve(ids.size());
        for (TokenId id : ids) out.push_back(token(id));
        return out;
    }

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::map<std::string, TokenId> index_;
};

// Add-alpha smoothed n-gram LM over the Vocabulary; the desk-scale base
// model, and (trained on command <sep> text concatenations) the
// prefix-conditioned variant.
class NGramLm : public LmScorer {
  public:
    NGramLm() = default;
    NGramLm(int order, double alpha) : order_(order), alpha_(alpha) {
        if (order < 1) throw ModelError("train_ngram: order must be >= 1");
        if (!(alpha > 0)) throw ModelError("train_ngram: alpha must be positive");
    }

    int order() const { return order_; }
    double alpha() const { return alpha_; }
    const Vocabulary& vocab() const { return vocab_; }
    Vocabulary& vocab() { return vocab_; }

    void add_sequence(std::span<const std::string> words) {
        TokenSeq ids;
        ids.reserve(words.size());
        for (const auto& w : words) ids.push_back(vocab_.add(w));
        add_ids(ids);
    }

    void add_ids(const TokenSeq& ids) {
        TokenSeq padded(order_ - 1, Vocabulary::kBos);
        padded.insert(padded.end(), ids.begin(), ids.end());
        padded.push_back(Vocabulary::kEos);
        for (std::size_t i = order_ - 1; i < padded.size(); ++i) {
            TokenSeq ctx(padded.begin() + (i - (order_ - 1)), padded.begin() + i);
            auto& c = counts_[ctx];
            ++c.total;
            ++c.next[padded[i]];
        }
        trained_ = true;
    }

    std::size_t vocab_size() const override { return vocab_.size(); }
    TokenId eos_id() const override { return Vocabulary::kEos; }

    double token_probability(std::span<const TokenId> prefix, TokenId next) const {
        TokenSeq ctx = context_of(prefix);
        double v = static_cast<double>(vocab_.size());
        auto it = counts_.find(ctx);
        if (it == counts_.end()) return 1.0 / v;
        double total = static_cast<double>(it->second.total);
        auto nit = it->second.next.find(next);
        double c = nit == it->second.next.end() ? 0.0 : static_cast<double>(nit->second);
        return (c + alpha_) / (total + alpha_ * v);
    }

    std::vector<double> next_distribution(std::span<const TokenId> prefix) const override {
        const std::size_t v = vocab_.size();
        std::vector<double> out(v, 0.0);
        TokenSeq ctx = context_of(prefix);
        auto it = counts_.find(ctx);
        if (it == counts_.end()) {
            for (auto& p : out) p = 1.0 / static_cast<double>(v);
            return out;
        }
        double denom = static_cast<double>(it->second.total) + alpha_ * static_cast<double>(v);
        for (std::size_t t = 0; t < v; ++t) out[t] = alpha_ / denom;
        for (const auto& [tok, c] : it->second.next)
            out[tok] = (static_cast<double>(c) + alpha_) / denom;
        return out;
    }

    // exp of mean negative log-likelihood per token, EOS included.
    double perplexity(const std::vector<std::vector<std::string>>& texts) const {
        if (texts.empty()) throw ModelError("perplexity: no texts");
        double nll = 0.0;
        long tokens = 0;
        for (const auto& words : texts) {
            TokenSeq ids = vocab_.encode(words);
            TokenSeq prefix;
            for (std::size_t i = 0; i <= ids.size(); ++i) {
                TokenId next = i < ids.size() ? ids[i] : Vocabulary::kEos;
                nll -= std::log(token_probability(prefix, next));
                ++tokens;
                if (i < ids.size()) prefix.push_back(ids[i]);
            }
        }
        return std::exp(nll / static_cast<double>(tokens));
    }

    bool trained() const { return trained_; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = "ngram";
        j["version"] = 1;
        j["order"] = order_;
        j["alpha"] = alpha_;
        j["vocab"] = vocab_.tokens();
        nlohmann::json ctxs = nlohmann::json::array();
        for (const auto& [ctx, c] : counts_) {
            nlohmann::json next = nlohmann::json::array();
            for (const auto& [tok, n] : c.next) next.push_back({tok, n});
            ctxs.push_back({ctx, c.total, next});
        }
        j["contexts"] = std::move(ctxs);
        return j;
    }

    static NGramLm from_json(const nlohmann::json& j) {
        if (j.at("kind") != "ngram") throw ModelError("model container is not an ngram LM");
        NGramLm lm(j.at("order").get<int>(), j.at("alpha").get<double>());
        Vocabulary v;
        auto tokens = j.at("vocab").get<std::vector<std::string>>();
        for (std::size_t i = 4; i < tokens.size(); ++i) v.add(tokens[i]);
        lm.vocab_ = std::move(v);
        for (const auto& entry : j.at("contexts")) {
            TokenSeq ctx = entry.at(0).get<TokenSeq>();
            auto& c = lm.counts_[ctx];
            c.total = entry.at(1).get<long>();
            for (const auto& pair : entry.at(2)) c.next[pair.at(0).get<TokenId>()] = pair.at(1).get<long>();
        }
        lm.trained_ = true;
        return lm;
    }

  private:
    struct ContextCount {
        long total = 0;
        std::map<TokenId, long> next;
    };

    TokenSeq context_of(std::span<const TokenId> prefix) const {
        TokenSeq ctx;
        std::size_t need = order_ - 1;
        if (prefix.size() < need) ctx.assign(need - prefix.size(), Vocabulary::kBos);
        std::size_t from = prefix.size() > need ? prefix.size() - need : 0;
        ctx.insert(ctx.end(), prefix.begin() + from, prefix.end());
        return ctx;
    }

    int order_ = 3;
    double alpha_ = 0.1;
    Vocabulary vocab_;
    std::map<TokenSeq, ContextCount> counts_;
    bool trained_ = false;
};

inline NGramLm train_ngram(const std::vector<std::vector<std::string>>& corpus, int order,
                           double alpha) {
    if (corpus.empty()) throw ModelError("EmptyCorpus: train_ngram");
    NGramLm lm(order, alpha);
    // Two passes: the vocabulary is complete before any counts are added.
    for (const auto& seq : corpus)
        for (const auto& w : seq) lm.vocab().add(w);
    for (const auto& seq : corpus) lm.add_ids(lm.vocab().encode(seq));
    return lm;
}

// Prefix features shared by the discriminators: unigrams, bigrams, the
// prefix-length marker, and an end-of-text/length conjunction when the
// prefix terminates with <eos>. The conjunction is what lets a bag model
// judge whether stopping here satisfies a length target.
inline std::vector<std::string> prefix_features(std::span<const std::string> tokens,
                                                std::size_t len_cap = 64) {
    std::vector<std::string> out;
    bool ended = !tokens.empty() && tokens.back() == "<eos>";
    std::size_t content_len = tokens.size() - (ended ? 1 : 0);
    for (const auto& t : tokens) out.push_back("u:" + t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
        out.push_back("b:" + tokens[i] + "|" + tokens[i + 1]);
    std::size_t marker = std::min(content_len, len_cap);
    out.push_back("@len:" + std::to_string(marker));
    if (ended) {
        out.push_back("@endlen:" + std::to_string(marker));
        // Coarse width-4 stop-position bucket: exact-position conjunctions
        // are too sparse to train stably, the bucket sees 4x the data.
        out.push_back("@endlenb:" + std::to_string(marker / 4));
    }
    return out;
}

// Multinomial naive Bayes with Laplace smoothing over prefix features; the
// desk-scale multiclass future discriminator.
class NaiveBayesDiscriminator {
  public:
    NaiveBayesDiscriminator() = default;
    NaiveBayesDiscriminator(int num_classes, double laplace = 1.0)
        : num_classes_(num_classes), laplace_(laplace), class_counts_(num_classes, 0),
          feat_counts_(num_classes), feat_totals_(num_classes, 0) {}

    int num_classes() const { return num_classes_; }

    void add(std::span<const std::string> prefix_tokens, int cls) {
        ++class_counts_.at(cls);
        for (const auto& f : prefix_features(prefix_tokens)) {
            ++feat_counts_[cls][f];
            ++feat_totals_[cls];
            feature_vocab_.insert(f);
        }
    }

    std::vector<double> posterior(std::span<const std::string> prefix_tokens) const {
        auto feats = prefix_features(prefix_tokens);
        long total_examples = 0;
        for (long c : class_counts_) total_examples += c;
        double fv = static_cast<double>(feature_vocab_.size());
        std::vector<double> logp(num_classes_);
        for (int c = 0; c < num_classes_; ++c) {
            logp[c] = std::log((static_cast<double>(class_counts_[c]) + laplace_) /
                               (static_cast<double>(total_examples) + laplace_ * num_classes_));
            double denom = static_cast<double>(feat_totals_[c]) + laplace_ * fv;
            for (const auto& f : feats) {
                auto it = feat_counts_[c].find(f);
                double count = it == feat_counts_[c].end() ? 0.0 : static_cast<double>(it->second);
                logp[c] += std::log((count + laplace_) / denom);
            }
        }
        double mx = *std::max_element(logp.begin(), logp.end());
        double z = 0.0;
        std::vector<double> out(num_classes_);
        for (int c = 0; c < num_classes_; ++c) {
            out[c] = std::exp(logp[c] - mx);
            z += out[c];
        }
        for (double& p : out) p /= z;
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = "naive_bayes";
        j["version"] = 1;
        j["num_classes"] = num_classes_;
        j["laplace"] = laplace_;
        j["class_counts"] = class_counts_;
        nlohmann::json fc = nlohmann::json::array();
        for (const auto& m : feat_counts_) {
            nlohmann::json cls = nlohmann::json::array();
            for (const auto& [f, c] : m) cls.push_back({f, c});
            fc.push_back(std::move(cls));
        }
        j["feat_counts"] = std::move(fc);
        return j;
    }

    static NaiveBayesDiscriminator from_json(const nlohmann::json& j) {
        if (j.at("kind") != "naive_bayes") throw ModelError("model container is not naive_bayes");
        NaiveBayesDiscriminator nb(j.at("num_classes").get<int>(), j.at("laplace").get<double>());
        nb.class_counts_ = j.at("class_counts").get<std::vector<long>>();
        int c = 0;
        for (const auto& cls : j.at("feat_counts")) {
            for (const auto& pair : cls) {
                std::string f = pair.at(0).get<std::string>();
                long n = pair.at(1).get<long>();
                nb.feat_counts_[c][f] = n;
                nb.feat_totals_[c] += n;
                nb.feature_vocab_.insert(f);
            }
            ++c;
        }
        return nb;
    }

  private:
    int num_classes_ = 0;
    double laplace_ = 1.0;
    std::vector<long> class_counts_;
    std::vector<std::map<std::string, long>> feat_counts_;
    std::vector<long> feat_totals_;
    std::set<std::string> feature_vocab_;
};

inline NaiveBayesDiscriminator train_nb(
    const std::vector<std::pair<std::vector<std::string>, int>>& pairs, int num_classes,
    double laplace = 1.0) {
    NaiveBayesDiscriminator nb(num_classes, laplace);
    std::vector<long> seen(num_classes, 0);
    for (const auto& [prefix, cls] : pairs) {
        nb.add(prefix, cls);
        ++seen.at(cls);
    }
    for (int c = 0; c < num_classes; ++c)
        if (seen[c] == 0) throw ModelError("MissingClassExamples: class " + std::to_string(c));
    return nb;
}

// One-vs-rest binary naive Bayes per attribute option.
class BinaryHeads {
  public:
    BinaryHeads() = default;
    explicit BinaryHeads(int num_options, double laplace = 1.0) {
        for (int i = 0; i < num_options; ++i) heads_.emplace_back(2, laplace);
    }

    int num_options() const { return static_cast<int>(heads_.size()); }

    void add(std::span<const std::string> prefix_tokens, int true_option) {
        for (int o = 0; o < num_options(); ++o)
            heads_[o].add(prefix_tokens, o == true_option ? 1 : 0);
    }

    double probability(int option, std::span<const std::string> prefix_tokens) const {
        return heads_.at(option).posterior(prefix_tokens)[1];
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = "binary_heads";
        j["version"] = 1;
        nlohmann::json heads = nlohmann::json::array();
        for (const auto& h : heads_) heads.push_back(h.to_json());
        j["heads"] = std::move(heads);
        return j;
    }

    static BinaryHeads from_json(const nlohmann::json& j) {
        if (j.at("kind") != "binary_heads") throw ModelError("model container is not binary_heads");
        BinaryHeads b;
        for (const auto& h : j.at("heads"))
            b.heads_.push_back(NaiveBayesDiscriminator::from_json(h));
        return b;
    }

  private:
    std::vector<NaiveBayesDiscriminator> heads_;
};

inline BinaryHeads train_binary_heads(
    const std::vector<std::pair<std::vector<std::string>, int>>& pairs, int num_options,
    double laplace = 1.0) {
    BinaryHeads heads(num_options, laplace);
    std::vector<long> seen(num_options, 0);
    for (const auto& [prefix, option] : pairs) {
        heads.add(prefix, option);
        ++seen.at(option);
    }
    for (int o = 0; o < num_options; ++o)
        if (seen[o] == 0) throw ModelError("MissingClassExamples: option " + std::to_string(o));
    return heads;
}

inline bool is_stopword(const std::string& word) {
    static const std::set<std::string> stop = {
        "a",    "an",   "the",  "and", "or",   "of",   "to",   "in", "on",   "for",
        "with", "is",   "are",  "be",  "that", "this", "it",   "i",  "want", "me",
        "my",   "you",  "your", "as",  "at",   "by",   "do",   "so", "not",  "have",
        "has",  "its",  "was",  "were"};
    std::string core;
    for (char c : word)
        if (std::isalpha(static_cast<unsigned char>(c)))
            core.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return stop.count(core) > 0;
}

// Command tokens come from postprocessed sentences, so they carry case and
// punctuation ("Craft", "alpha,"). Features must see the bare word or the
// same command phrased at a sentence boundary would not match.
inline std::string normalize_command_token(const std::string& token) {
    std::size_t b = 0, e = token.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
    std::string out;
    for (std::size_t i = b; i < e; ++i)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(token[i]))));
    return out;
}

// The command-side feature material, reusable across every prefix scored
// against the same command.
struct CommandFeatureContext {
    std::vector<std::string> bigrams;   // normalized bigrams
    std::vector<std::string> trigrams;  // normalized trigrams
    std::vector<std::string> own;       // the c:/cb: feature strings
};

inline CommandFeatureContext command_feature_context(
    std::span<const std::string> command_tokens) {
    CommandFeatureContext ctx;
    std::vector<std::string> norm;
    for (const auto& t : command_tokens) {
        std::string n = normalize_command_token(t);
        if (!n.empty()) norm.push_back(std::move(n));
    }
    for (const auto& n : norm) ctx.own.push_back("c:" + n);
    for (std::size_t i = 0; i + 1 < norm.size(); ++i) {
        std::string b = norm[i] + "|" + norm[i + 1];
        ctx.own.push_back("cb:" + b);
        ctx.bigrams.push_back(std::move(b));
    }
    for (std::size_t i = 0; i + 2 < norm.size(); ++i)
        ctx.trigrams.push_back(norm[i] + "|" + norm[i + 1] + "|" + norm[i + 2]);
    return ctx;
}

// Feature strings for the alignment discriminator: prefix features,
// command unigrams/bigrams, and command-context x prefix co-occurrence
// pairs. The command side of each pair is a bigram or trigram, never a
// bare unigram: the discriminator has to judge the attribute words in
// their phrasal context, the way a sequence encoder would. A position-free
// unigram channel would transfer to any wording and wash out the very
// coverage differences the template-generalization comparison measures.
inline std::vector<std::string> alignment_features(std::span<const std::string> command_tokens,
                                                   std::span<const std::string> prefix_tokens) {
    std::vector<std::string> out;
    auto pfeats = prefix_features(prefix_tokens);
    out.insert(out.end(), pfeats.begin(), pfeats.end());

    auto ctx = command_feature_context(command_tokens);
    out.insert(out.end(), ctx.own.begin(), ctx.own.end());

    // Pair every command bigram / trigram with the prefix unigram and
    // marker features.
    for (const auto& pf : pfeats) {
        if (pf.rfind("b:", 0) == 0) continue;  // prefix bigrams stay unpaired
        for (const auto& cb : ctx.bigrams) out.push_back("xb:" + cb + "~" + pf);
        for (const auto& ct : ctx.trigrams) out.push_back("xt:" + ct + "~" + pf);
    }
    return out;
}

// Logistic regression over hashed alignment features.
class AlignmentModel {
  public:
    AlignmentModel() = default;
    AlignmentModel(std::size_t dim, std::uint64_t hash_seed)
        : dim_(dim), hash_seed_(hash_seed), weights_(dim, 0.0) {}

    std::size_t dim() const { return dim_; }
    std::uint64_t hash_seed() const { return hash_seed_; }
    std::vector<double>& weights() { return weights_; }
    const std::vector<double>& weights() const { return weights_; }
    double& bias() { return bias_; }
    double bias() const { return bias_; }

    std::vector<std::pair<std::size_t, double>> hashed(
        std::span<const std::string> command_tokens,
        std::span<const std::string> prefix_tokens) const {
        std::map<std::size_t, double> acc;
        for (const auto& f : alignment_features(command_tokens, prefix_tokens))
            acc[fnv1a64(f, hash_seed_) % dim_] += 1.0;
        return {acc.begin(), acc.end()};
    }

    double decision(std::span<const std::pair<std::size_t, double>> x) const {
        double z = bias_;
        for (const auto& [idx, v] : x) z += weights_[idx] * v;
        return z;
    }

    double predict(std::span<const std::string> command_tokens,
                   std::span<const std::string> prefix_tokens) const {
        double z = decision(hashed(command_tokens, prefix_tokens));
        return 1.0 / (1.0 + std::exp(-z));
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = "alignment";
        j["version"] = 1;
        j["dim"] = dim_;
        j["hash_seed"] = hash_seed_;
        j["bias"] = bias_;
        // Sparse storage: most hash slots are never touched.
        nlohmann::json w = nlohmann::json::array();
        for (std::size_t i = 0; i < dim_; ++i)
            if (weights_[i] != 0.0) w.push_back({i, weights_[i]});
        j["weights"] = std::move(w);
        return j;
    }

    static AlignmentModel from_json(const nlohmann::json& j) {
        if (j.at("kind") != "alignment") throw ModelError("model container is not alignment");
        AlignmentModel m(j.at("dim").get<std::size_t>(), j.at("hash_seed").get<std::uint64_t>());
        m.bias_ = j.at("bias").get<double>();
        for (const auto& pair : j.at("weights"))
            m.weights_[pair.at(0).get<std::size_t>()] = pair.at(1).get<double>();
        return m;
    }

  private:
    std::size_t dim_ = 1 << 18;
    std::uint64_t hash_seed_ = 0x9e3779b97f4a7c15ULL;
    std::vector<double> weights_;
    double bias_ = 0.0;
};

enum class SgdSchedule {
    InvSqrt,   // global lr / sqrt(t)
    AdaGrad,   // per-coordinate lr / sqrt(sum g^2); rare features keep
               // near-full steps, which the marker-conjunction features need
};

struct AlignmentTrainConfig {
    int epochs = 5;
    double learning_rate = 0.1;  // decayed per `schedule`
    double l2 = 0.0;             // applied to the coordinates touched by each example
    SgdSchedule schedule = SgdSchedule::InvSqrt;
    std::size_t dim = 1 << 18;
    std::uint64_t hash_seed = 0x9e3779b97f4a7c15ULL;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

struct AlignmentPair {
    std::vector<std::string> command_tokens;
    std::vector<std::string> prefix_tokens;
    int y = 0;
};

struct AlignmentTrainResult {
    AlignmentModel model;
    double train_accuracy = 0.0;
};

inline AlignmentTrainResult train_alignment(const std::vector<AlignmentPair>& pairs,
                                            const AlignmentTrainConfig& cfg = {}) {
    bool has_pos = false, has_neg = false;
    for (const auto& p : pairs) (p.y ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw ModelError("SingleClassData: need both labels");

    AlignmentModel model(cfg.dim, cfg.hash_seed);
    std::vector<std::vector<std::pair<std::size_t, double>>> hashed;
    hashed.reserve(pairs.size());
    for (const auto& p : pairs) hashed.push_back(model.hashed(p.command_tokens, p.prefix_tokens));

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(cfg.seed);
    std::vector<double> grad_sq;
    if (cfg.schedule == SgdSchedule::AdaGrad) grad_sq.assign(cfg.dim + 1, 0.0);
    long t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) rng.shuffle(order);
        for (std::size_t idx : order) {
            ++t;
            double z = model.decision(hashed[idx]);
            double p = 1.0 / (1.0 + std::exp(-z));
            double g = p - static_cast<double>(pairs[idx].y);
            if (cfg.schedule == SgdSchedule::InvSqrt) {
                double lr = cfg.learning_rate / std::sqrt(static_cast<double>(t));
                for (const auto& [f, v] : hashed[idx])
                    model.weights()[f] -= lr * (g * v + cfg.l2 * model.weights()[f]);
                model.bias() -= lr * g;
            } else {
                constexpr double eps = 1e-8;
                for (const auto& [f, v] : hashed[idx]) {
                    double gf = g * v + cfg.l2 * model.weights()[f];
                    grad_sq[f] += gf * gf;
                    model.weights()[f] -= cfg.learning_rate * gf / (std::sqrt(grad_sq[f]) + eps);
                }
                grad_sq[cfg.dim] += g * g;
                model.bias() -= cfg.learning_rate * g / (std::sqrt(grad_sq[cfg.dim]) + eps);
            }
        }
    }

    long correct = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double z = model.decision(hashed[i]);
        if ((z >= 0.0 ? 1 : 0) == pairs[i].y) ++correct;
    }
    return {std::move(model),
            static_cast<double>(correct) / static_cast<double>(pairs.size())};
}

// ---- adapters onto the decode-engine interfaces ---------------------------

// Maps token ids back to words for the string-feature discriminators.
class NbAttrAdapter : public AttrDiscriminator {
  public:
    NbAttrAdapter(const NaiveBayesDiscriminator& nb, const Vocabulary& vocab)
        : nb_(nb), vocab_(vocab) {}

    std::size_t num_options() const override { return nb_.num_classes(); }

    std::vector<double> option_distribution(std::span<const TokenId> prefix) const override {
        return nb_.posterior(vocab_.decode(prefix));
    }

  private:
    const NaiveBayesDiscriminator& nb_;
    const Vocabulary& vocab_;
};

class BinaryHeadsAdapter : public BinaryHeadDiscriminator {
  public:
    BinaryHeadsAdapter(const BinaryHeads& heads, const Vocabulary& vocab)
        : heads_(heads), vocab_(vocab) {}

    std::size_t num_options() const override { return heads_.num_options(); }

    double head_probability(int option, std::span<const TokenId> prefix) const override {
        return heads_.probability(option, vocab_.decode(prefix));
    }

  private:
    const BinaryHeads& heads_;
    const Vocabulary& vocab_;
};

class AlignmentAdapter : public AlignmentDiscriminator {
  public:
    AlignmentAdapter(const AlignmentModel& model, const Vocabulary& vocab)
        : model_(model), vocab_(vocab) {}

    double alignment_probability(std::span<const TokenId> command,
                                 std::span<const TokenId> prefix) const override {
        return model_.predict(vocab_.decode(command), vocab_.decode(prefix));
    }

  private:
    const AlignmentModel& model_;
    const Vocabulary& vocab_;
};

}  // namespace nlctg
