#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlctg/errors.hpp"
#include "nlctg/schema.hpp"
#include "nlctg/tokenize.hpp"

namespace nlctg {

struct GenerationRecord {
    AttrSpec target;
    std::string text;
    long token_count = 0;
};

// text -> predicted label id. Desk-scale runs use the synthetic generator's
// ground-truth rule; the neural judge is out of scope and pluggable.
using LabelOracle = std::function<int(const std::string&)>;

inline double length_accuracy(const std::vector<GenerationRecord>& records,
                              const AttributeSchema& schema) {
    if (records.empty()) throw MetricError("length_accuracy: no records");
    long hits = 0, total = 0;
    for (const auto& r : records) {
        if (!r.target.length_id) continue;
        ++total;
        if (schema.length_level_of(r.token_count) == *r.target.length_id) ++hits;
    }
    if (total == 0) throw MetricError("NoLengthTarget: no record has a length target");
    return static_cast<double>(hits) / static_cast<double>(total);
}

inline double label_accuracy(const std::vector<GenerationRecord>& records,
                             const LabelOracle& oracle) {
    if (records.empty()) throw MetricError("label_accuracy: no records");
    long hits = 0, total = 0;
    for (const auto& r : records) {
        if (!r.target.label_id) continue;
        ++total;
        if (oracle(r.text) == *r.target.label_id) ++hits;
    }
    if (total == 0) throw MetricError("NoLabelTarget: no record has a label target");
    return static_cast<double>(hits) / static_cast<double>(total);
}

inline double compositional_accuracy(const std::vector<GenerationRecord>& records,
                                     const LabelOracle& oracle, const AttributeSchema& schema) {
    if (records.empty()) throw MetricError("compositional_accuracy: no records");
    long hits = 0, total = 0;
    for (const auto& r : records) {
        if (!r.target.label_id || !r.target.length_id) continue;
        ++total;
        if (oracle(r.text) == *r.target.label_id &&
            schema.length_level_of(r.token_count) == *r.target.length_id)
            ++hits;
    }
    if (total == 0) throw MetricError("NoLabelTarget: no record has both targets");
    return static_cast<double>(hits) / static_cast<double>(total);
}

// Corpus-level BLEU-4: clipped modified precisions, geometric mean over
// n = 1..4, brevity penalty with closest-reference-length matching.
// Optional add-1 smoothing on the n >= 2 precision counts.
inline double bleu4(const std::vector<std::string>& candidates,
                    const std::vector<std::string>& references, bool smooth = false) {
    if (candidates.empty() || references.empty()) throw MetricError("EmptyInput: bleu4");

    std::vector<std::vector<std::string>> ref_tokens;
    ref_tokens.reserve(references.size());
    for (const auto& r : references) ref_tokens.push_back(ws_tokenize(r));

    long match[4] = {0, 0, 0, 0};
    long total[4] = {0, 0, 0, 0};
    long cand_len = 0, eff_ref_len = 0;

    for (const auto& cand : candidates) {
        auto ctoks = ws_tokenize(cand);
        cand_len += static_cast<long>(ctoks.size());

        long best_ref = static_cast<long>(ref_tokens[0].size());
        for (const auto& rt : ref_tokens) {
            long len = static_cast<long>(rt.size());
            long c = static_cast<long>(ctoks.size());
            if (std::llabs(len - c) < std::llabs(best_ref - c) ||
                (std::llabs(len - c) == std::llabs(best_ref - c) && len < best_ref))
                best_ref = len;
        }
        eff_ref_len += best_ref;

        for (int n = 1; n <= 4; ++n) {
            if (static_cast<int>(ctoks.size()) < n) continue;
            std::map<std::string, long> cand_counts;
            for (std::size_t i = 0; i + n <= ctoks.size(); ++i) {
                std::string g;
                for (int j = 0; j < n; ++j) g += (j ? "\x1f" + ctoks[i + j] : ctoks[i + j]);
                ++cand_counts[g];
            }
            // Clip against the max count over all references.
            std::map<std::string, long> max_ref;
            for (const auto& rt : ref_tokens) {
                std::map<std::string, long> rc;
                for (std::size_t i = 0; i + n <= rt.size(); ++i) {
                    std::string g;
                    for (int j = 0; j < n; ++j) g += (j ? "\x1f" + rt[i + j] : rt[i + j]);
                    ++rc[g];
                }
                for (const auto& [g, c] : rc) max_ref[g] = std::max(max_ref[g], c);
            }
            for (const auto& [g, c] : cand_counts) {
                total[n - 1] += c;
                auto it = max_ref.find(g);
                if (it != max_ref.end()) match[n - 1] += std::min(c, it->second);
            }
        }
    }

    double log_prec = 0.0;
    for (int n = 0; n < 4; ++n) {
        double num = static_cast<double>(match[n]);
        double den = static_cast<double>(total[n]);
        if (smooth && n >= 1) {
            num += 1.0;
            den += 1.0;
        }
        if (num <= 0.0 || den <= 0.0) return 0.0;
        log_prec += 0.25 * std::log(num / den);
    }
    double bp = cand_len < eff_ref_len
                    ? std::exp(1.0 - static_cast<double>(eff_ref_len) / static_cast<double>(cand_len))
                    : 1.0;
    return bp * std::exp(log_prec);
}

// Shannon entropy (bits) of the empirical token 4-gram distribution.
inline double entropy4(const std::vector<std::string>& texts) {
    std::map<std::string, long> counts;
    long total = 0;
    for (const auto& t : texts) {
        auto toks = ws_tokenize(t);
        for (std::size_t i = 0; i + 4 <= toks.size(); ++i) {
            std::string g = toks[i];
            for (int j = 1; j < 4; ++j) g += "\x1f" + toks[i + j];
            ++counts[g];
            ++total;
        }
    }
    if (total == 0) throw MetricError("TooShort: no text has >= 4 tokens");
    double h = 0.0;
    for (const auto& [g, c] : counts) {
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

struct MetricsReport {
    std::optional<double> label_acc;
    std::optional<double> length_acc;
    std::optional<double> comp_acc;
    std::optional<double> bleu;
    std::optional<double> entropy;
    std::optional<double> ppl;
    std::map<std::string, MetricsReport> strata;

    nlohmann::json to_json() const {
        nlohmann::json j;
        nlohmann::json diversity, quality, control;
        if (entropy) diversity["entropy4_bits"] = *entropy;
        if (ppl) quality["perplexity"] = *ppl;
        if (bleu) quality["bleu4_corpus"] = *bleu;
        if (label_acc) control["label_acc"] = *label_acc;
        if (length_acc) control["length_acc"] = *length_acc;
        if (comp_acc) control["comp_acc"] = *comp_acc;
        if (!diversity.empty()) j["diversity"] = diversity;
        if (!quality.empty()) j["text_quality"] = quality;
        if (!control.empty()) j["control_accuracy"] = control;
        if (!strata.empty()) {
            nlohmann::json s;
            for (const auto& [name, sub] : strata) s[name] = sub.to_json();
            j["strata"] = s;
        }
        return j;
    }
};

}  // namespace nlctg
