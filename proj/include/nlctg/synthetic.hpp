#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nlctg/rng.hpp"
#include "nlctg/tokenize.hpp"

namespace nlctg {

// Letter-language corpus: 30 tokens in 4 topic groups (a*, b*, c*, d*)
// plus shared fillers (f*). A text of topic t draws each token from group
// t with probability in_group, otherwise from the fillers. Ground truth is
// recoverable from the text itself (majority group), which is what makes
// the language usable as its own label oracle.
struct SyntheticConfig {
    std::size_t train_size = 5000;
    std::size_t test_size = 500;
    std::uint64_t seed = 17;
    int num_labels = 4;
    int tokens_per_group = 6;
    int num_fillers = 6;
    int min_len = 5;
    int max_len = 40;
    double in_group = 0.7;
};

struct SyntheticText {
    std::string text;
    int label = 0;
};

struct SyntheticCorpus {
    SyntheticConfig config;
    std::vector<SyntheticText> train;
    std::vector<SyntheticText> test;
};

inline std::string synthetic_group_token(int group, int index) {
    return std::string(1, static_cast<char>('a' + group)) + std::to_string(index + 1);
}

inline std::string synthetic_filler_token(int index) {
    return "f" + std::to_string(index + 1);
}

inline SyntheticText make_synthetic_text(const SyntheticConfig& cfg, int label, Rng& rng) {
    int len = cfg.min_len + static_cast<int>(rng.uniform_index(cfg.max_len - cfg.min_len + 1));
    std::vector<std::string> tokens;
    tokens.reserve(len);
    for (int i = 0; i < len; ++i) {
        if (rng.uniform01() < cfg.in_group)
            tokens.push_back(
                synthetic_group_token(label, static_cast<int>(rng.uniform_index(cfg.tokens_per_group))));
        else
            tokens.push_back(synthetic_filler_token(static_cast<int>(rng.uniform_index(cfg.num_fillers))));
    }
    return {join(tokens), label};
}

inline SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& cfg = {}) {
    SyntheticCorpus out;
    out.config = cfg;
    Rng train_rng = Rng::substream(cfg.seed, 0);
    Rng test_rng = Rng::substream(cfg.seed, 1);
    for (std::size_t i = 0; i < cfg.train_size; ++i) {
        int label = static_cast<int>(i % cfg.num_labels);
        out.train.push_back(make_synthetic_text(cfg, label, train_rng));
    }
    for (std::size_t i = 0; i < cfg.test_size; ++i) {
        int label = static_cast<int>(i % cfg.num_labels);
        out.test.push_back(make_synthetic_text(cfg, label, test_rng));
    }
    return out;
}

// Majority topic group of the tokens; fillers and unknown tokens do not
// vote. Ties break to the lowest group id.
inline int synthetic_label_oracle(const std::string& text, int num_labels = 4) {
    std::array<long, 26> counts{};
    for (const auto& tok : ws_tokenize(text)) {
        char c = tok[0];
        if (c >= 'a' && c < 'a' + num_labels) ++counts[c - 'a'];
    }
    int best = 0;
    for (int g = 1; g < num_labels; ++g)
        if (counts[g] > counts[best]) best = g;
    return best;
}

}  // namespace nlctg
