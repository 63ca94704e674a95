#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlctg/errors.hpp"
#include "nlctg/rng.hpp"
#include "nlctg/schema.hpp"

namespace nlctg {

using TokenId = int;
using TokenSeq = std::vector<TokenId>;

// Autoregressive base model: full next-token distribution given a prefix.
class LmScorer {
  public:
    virtual ~LmScorer() = default;
    virtual std::size_t vocab_size() const = 0;
    virtual TokenId eos_id() const = 0;
    virtual std::vector<double> next_distribution(std::span<const TokenId> prefix) const = 0;
};

// Multiclass future discriminator: P(a | x_{1:i}) over one attribute's options.
class AttrDiscriminator {
  public:
    virtual ~AttrDiscriminator() = default;
    virtual std::size_t num_options() const = 0;
    virtual std::vector<double> option_distribution(std::span<const TokenId> prefix) const = 0;
};

// One independent binary head per option: P(y_a = 1 | x_{1:i}).
class BinaryHeadDiscriminator {
  public:
    virtual ~BinaryHeadDiscriminator() = default;
    virtual std::size_t num_options() const = 0;
    virtual double head_probability(int option, std::span<const TokenId> prefix) const = 0;
};

// Command/prefix alignment: P(y_c = 1 | x_{1:i}) for a fixed command c.
class AlignmentDiscriminator {
  public:
    virtual ~AlignmentDiscriminator() = default;
    virtual double alignment_probability(std::span<const TokenId> command,
                                         std::span<const TokenId> prefix) const = 0;
};

enum class DecodeMethod { PrefixOnly, Fudge, FudgeBinary, FudgeNl };

inline const char* decode_method_name(DecodeMethod m) {
    switch (m) {
        case DecodeMethod::PrefixOnly: return "prefix";
        case DecodeMethod::Fudge: return "fudge";
        case DecodeMethod::FudgeBinary: return "fudge-binary";
        case DecodeMethod::FudgeNl: return "fudge-nl";
    }
    return "";
}

struct DecodeConfig {
    DecodeMethod method = DecodeMethod::PrefixOnly;
    int k = 20;
    double lambda = 1.0;
    int candidate_cap = 200;
    int max_new_tokens = 64;
    std::uint64_t seed = 0;
};

// The discriminator side of a decode call. For fudge/fudge_binary, one
// discriminator per controlled attribute plus the target option; for
// fudge_nl, the alignment model plus the command tokens.
struct ControlSpec {
    struct AttrTarget {
        const AttrDiscriminator* discriminator = nullptr;
        int option = 0;
    };
    struct BinaryTarget {
        const BinaryHeadDiscriminator* discriminator = nullptr;
        int option = 0;
    };
    std::vector<AttrTarget> attr_targets;
    std::vector<BinaryTarget> binary_targets;
    const AlignmentDiscriminator* alignment = nullptr;
    TokenSeq command;
    // Discriminators judge the generated continuation only; a non-zero
    // offset strips the prompt (command + separator) from their view.
    std::size_t prefix_offset = 0;
};

struct TokenProb {
    TokenId token;
    double prob;
};

namespace detail {

inline void check_control(const DecodeConfig& config, const ControlSpec& control) {
    switch (config.method) {
        case DecodeMethod::PrefixOnly: break;
        case DecodeMethod::Fudge:
            if (control.attr_targets.empty())
                throw DecodeError("ControlMismatch: fudge needs attribute discriminators");
            break;
        case DecodeMethod::FudgeBinary:
            if (control.binary_targets.empty())
                throw DecodeError("ControlMismatch: fudge-binary needs binary heads");
            break;
        case DecodeMethod::FudgeNl:
            if (control.alignment == nullptr)
                throw DecodeError("ControlMismatch: fudge-nl needs an alignment discriminator");
            break;
    }
}

inline double control_weight(const DecodeConfig& config, const ControlSpec& control,
                             std::span<const TokenId> full_extended) {
    std::span<const TokenId> extended =
        control.prefix_offset < full_extended.size()
            ? full_extended.subspan(control.prefix_offset)
            : full_extended.subspan(full_extended.size());
    switch (config.method) {
        case DecodeMethod::PrefixOnly: return 1.0;
        case DecodeMethod::Fudge: {
            double w = 1.0;
            for (const auto& t : control.attr_targets) {
                auto dist = t.discriminator->option_distribution(extended);
                w *= dist.at(t.option);
            }
            return w;
        }
        case DecodeMethod::FudgeBinary: {
            double w = 1.0;
            for (const auto& t : control.binary_targets)
                w *= t.discriminator->head_probability(t.option, extended);
            return w;
        }
        case DecodeMethod::FudgeNl:
            return control.alignment->alignment_probability(control.command, extended);
    }
    return 1.0;
}

}  // namespace detail

// One step of discriminator-reweighted decoding: restrict to the
// candidate_cap most probable base tokens, multiply in w(t)^lambda, and
// renormalize. lambda=1 realizes the product decompositions literally on
// the restricted candidate set; lambda=0 is the base restriction.
inline std::vector<TokenProb> next_token_distribution(const DecodeConfig& config,
                                                      const LmScorer& base,
                                                      const ControlSpec& control,
                                                      std::span<const TokenId> prefix) {
    detail::check_control(config, control);
    auto base_dist = base.next_distribution(prefix);
    const std::size_t vocab = base_dist.size();
    std::size_t cap = std::min<std::size_t>(config.candidate_cap, vocab);

    std::vector<TokenId> order(vocab);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
        if (base_dist[a] != base_dist[b]) return base_dist[a] > base_dist[b];
        return a < b;
    });
    order.resize(cap);

    std::vector<TokenProb> out;
    out.reserve(cap);
    double total = 0.0;
    TokenSeq extended(prefix.begin(), prefix.end());
    extended.push_back(0);
    for (TokenId t : order) {
        extended.back() = t;
        double w = detail::control_weight(config, control, extended);
        double score = base_dist[t] * std::pow(w, config.lambda);
        out.push_back({t, score});
        total += score;
    }
    if (!(total > 0.0))
        throw DecodeError("NumericalUnderflow: all candidate scores are zero");
    for (auto& tp : out) tp.prob /= total;
    std::stable_sort(out.begin(), out.end(), [](const TokenProb& a, const TokenProb& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return a.token < b.token;
    });
    return out;
}

namespace detail {

// Top-k truncation + renormalization of a step distribution.
inline std::vector<TokenProb> truncate_top_k(std::vector<TokenProb> dist, int k) {
    if (static_cast<int>(dist.size()) > k) dist.resize(k);
    double total = 0.0;
    for (const auto& tp : dist) total += tp.prob;
    for (auto& tp : dist) tp.prob /= total;
    return dist;
}

}  // namespace detail

// Top-k sampling loop; the prompt (command + separator for NL methods) is
// supplied by the caller and not part of the returned sequence.
inline TokenSeq sample_sequence(const DecodeConfig& config, const LmScorer& base,
                                const ControlSpec& control, const TokenSeq& prompt_tokens) {
    Rng rng(config.seed);
    TokenSeq context = prompt_tokens;
    TokenSeq generated;
    for (int step = 0; step < config.max_new_tokens; ++step) {
        auto dist = detail::truncate_top_k(
            next_token_distribution(config, base, control, context), config.k);
        std::vector<double> probs;
        probs.reserve(dist.size());
        for (const auto& tp : dist) probs.push_back(tp.prob);
        TokenId t = dist[rng.weighted_index(probs)].token;
        if (t == base.eos_id()) break;
        generated.push_back(t);
        context.push_back(t);
    }
    return generated;
}

// Exact joint distribution of sample_sequence over all sequences up to
// `horizon` tokens, with identical candidate restriction and top-k
// truncation. The brute-force oracle for sampler tests.
inline std::map<TokenSeq, double> enumerate_conditional(const DecodeConfig& config,
                                                        const LmScorer& base,
                                                        const ControlSpec& control,
                                                        const TokenSeq& prompt_tokens,
                                                        int horizon) {
    double states = 1.0;
    for (int i = 0; i < horizon; ++i) states *= static_cast<double>(base.vocab_size());
    if (states > 1e6) throw DecodeError("TooLarge: |vocab|^horizon exceeds 1e6");

    std::map<TokenSeq, double> out;
    auto walk = [&](auto&& self, TokenSeq& context, TokenSeq& generated, double prob,
                    int depth) -> void {
        if (depth == horizon) {
            out[generated] += prob;
            return;
        }
        auto dist = detail::truncate_top_k(
            next_token_distribution(config, base, control, context), config.k);
        for (const auto& tp : dist) {
            if (tp.token == base.eos_id()) {
                out[generated] += prob * tp.prob;
                continue;
            }
            context.push_back(tp.token);
            generated.push_back(tp.token);
            self(self, context, generated, prob * tp.prob, depth + 1);
            context.pop_back();
            generated.pop_back();
        }
    };
    TokenSeq context = prompt_tokens;
    TokenSeq generated;
    walk(walk, context, generated, 1.0, 0);
    return out;
}

}  // namespace nlctg
