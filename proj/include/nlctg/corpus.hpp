#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlctg/command_gen.hpp"
#include "nlctg/errors.hpp"
#include "nlctg/grammar.hpp"
#include "nlctg/rng.hpp"
#include "nlctg/schema.hpp"
#include "nlctg/tokenize.hpp"

namespace nlctg {

struct Example {
    std::string id;
    std::string text;
    long token_count = 0;
    int label_id = 0;
    int length_id = 0;
    std::string source;
    // Set by compositional splits: command/prefix builders must omit the
    // length attribute for this example.
    bool length_suppressed = false;

    AttrSpec attrs() const {
        AttrSpec a;
        a.label_id = label_id;
        if (!length_suppressed) a.length_id = length_id;
        return a;
    }
};

struct SplitKind {
    enum class Type { Full, TemplateSet, ZeroShot, Compositional };

    Type type = Type::Full;
    std::string template_set_id;  // T20 | T40 | HELDOUT20
    int blocked_label_id = -1;
    bool unblock_lm = false;
    int noncomp_label_id = -1;

    static SplitKind full() { return {}; }
    static SplitKind template_set(std::string id) {
        SplitKind k;
        k.type = Type::TemplateSet;
        k.template_set_id = std::move(id);
        return k;
    }
    static SplitKind zero_shot(int blocked, bool unblock_lm = false) {
        SplitKind k;
        k.type = Type::ZeroShot;
        k.blocked_label_id = blocked;
        k.unblock_lm = unblock_lm;
        return k;
    }
    static SplitKind compositional(int noncomp) {
        SplitKind k;
        k.type = Type::Compositional;
        k.noncomp_label_id = noncomp;
        return k;
    }
};

struct SplitBundle {
    SplitKind kind;
    std::uint64_t seed = 0;
    std::vector<Example> train_supervised;
    std::vector<Example> train_lm;
    std::vector<Example> val;
    std::vector<Example> test;
    // Zero-shot strata of `test`.
    std::vector<Example> test_zero_shot;
    std::vector<Example> test_regular;
    // Compositional evaluation targets: the blocked label paired with every
    // length level.
    std::vector<AttrSpec> comp_test_targets;
};

enum class FlipMask { None, Label, Length, Both };

inline const char* flip_mask_name(FlipMask m) {
    switch (m) {
        case FlipMask::None: return "none";
        case FlipMask::Label: return "label";
        case FlipMask::Length: return "length";
        case FlipMask::Both: return "both";
    }
    return "";
}

struct PairExample {
    std::string command_text;
    std::vector<std::string> prefix_tokens;
    int y = 0;  // 1 iff flip_mask == None
    FlipMask flip_mask = FlipMask::None;
    bool is_full_text = false;  // prefix covers the whole source text
    std::string example_id;
};

struct IngestResult {
    std::vector<Example> examples;
    std::size_t dropped = 0;  // over max_tokens
};

struct IngestOptions {
    long max_tokens = -1;  // -1: no limit
};

namespace detail {

inline int resolve_label(const AttributeSchema& schema, const nlohmann::json& label,
                         std::size_t line_no) {
    if (label.is_number_integer()) {
        int id = label.get<int>();
        if (id < 0 || id >= static_cast<int>(schema.labels.size()))
            throw CorpusError("UnknownLabel: id " + std::to_string(id) + " (line " +
                              std::to_string(line_no) + ")");
        return id;
    }
    if (label.is_string()) {
        std::string name = label.get<std::string>();
        for (const auto& c : schema.labels)
            if (fold_phrase(c.canonical) == fold_phrase(name)) return c.id;
        // Fall back to digits-in-string.
        try {
            std::size_t used = 0;
            int id = std::stoi(name, &used);
            if (used == name.size() && id >= 0 && id < static_cast<int>(schema.labels.size()))
                return id;
        } catch (const std::exception&) {
        }
        throw CorpusError("UnknownLabel: '" + name + "' (line " + std::to_string(line_no) + ")");
    }
    throw CorpusError("MalformedRecord: line " + std::to_string(line_no));
}

inline Example make_example(const AttributeSchema& schema, std::string text, int label_id,
                            const std::string& source, std::size_t index) {
    Example e;
    e.id = source + ":" + std::to_string(index);
    e.text = std::move(text);
    e.token_count = static_cast<long>(ws_token_count(e.text));
    e.label_id = label_id;
    e.length_id = schema.length_level_of(e.token_count);
    e.source = source;
    return e;
}

// Minimal CSV with RFC-4180 quoting, header `text,label` (either order).
inline std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < content.size(); ++i) {
        char c = content[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            if (row.size() > 1 || !row[0].empty()) rows.push_back(std::move(row));
            row.clear();
        } else {
            field.push_back(c);
        }
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

inline IngestResult ingest_jsonl(std::string_view content, const AttributeSchema& schema,
                                 const std::string& source_name, const IngestOptions& opts = {}) {
    IngestResult out;
    std::size_t line_no = 0, index = 0;
    std::size_t start = 0;
    std::string text(content);
    text += "\n";
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\n') continue;
        std::string line = trim(std::string_view(text).substr(start, i - start));
        start = i + 1;
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j.contains("label") ||
            !j["text"].is_string())
            throw CorpusError("MalformedRecord: line " + std::to_string(line_no));
        int label_id = detail::resolve_label(schema, j["label"], line_no);
        Example e = detail::make_example(schema, j["text"].get<std::string>(), label_id,
                                         source_name, index++);
        if (opts.max_tokens >= 0 && e.token_count > opts.max_tokens) {
            ++out.dropped;
            continue;
        }
        out.examples.push_back(std::move(e));
    }
    if (out.examples.empty()) throw CorpusError("EmptyCorpus: " + source_name);
    return out;
}

inline IngestResult ingest_csv(std::string_view content, const AttributeSchema& schema,
                               const std::string& source_name, const IngestOptions& opts = {}) {
    auto rows = detail::parse_csv(content);
    if (rows.empty()) throw CorpusError("EmptyCorpus: " + source_name);
    std::size_t text_col = std::string::npos, label_col = std::string::npos;
    for (std::size_t c = 0; c < rows[0].size(); ++c) {
        std::string h = to_lower(trim(rows[0][c]));
        if (h == "text") text_col = c;
        if (h == "label") label_col = c;
    }
    if (text_col == std::string::npos || label_col == std::string::npos)
        throw CorpusError("MalformedRecord: CSV header must contain text,label columns");
    IngestResult out;
    std::size_t index = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() <= std::max(text_col, label_col))
            throw CorpusError("MalformedRecord: line " + std::to_string(r + 1));
        int label_id = detail::resolve_label(schema, nlohmann::json(rows[r][label_col]), r + 1);
        Example e = detail::make_example(schema, rows[r][text_col], label_id, source_name, index++);
        if (opts.max_tokens >= 0 && e.token_count > opts.max_tokens) {
            ++out.dropped;
            continue;
        }
        out.examples.push_back(std::move(e));
    }
    if (out.examples.empty()) throw CorpusError("EmptyCorpus: " + source_name);
    return out;
}

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

inline SplitBundle build_split(const std::vector<Example>& examples, const SplitKind& kind,
                               const SplitRatios& ratios, std::uint64_t seed) {
    if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0 ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw CorpusError("build_split: ratios must be positive and sum to 1");

    std::vector<Example> pool = examples;
    std::sort(pool.begin(), pool.end(),
              [](const Example& a, const Example& b) { return a.id < b.id; });
    Rng rng(seed);
    rng.shuffle(pool);

    const std::size_t n = pool.size();
    std::size_t n_train = static_cast<std::size_t>(ratios.train * n);
    std::size_t n_val = static_cast<std::size_t>(ratios.val * n);

    SplitBundle out;
    out.kind = kind;
    out.seed = seed;
    std::vector<Example> train(pool.begin(), pool.begin() + n_train);
    out.val.assign(pool.begin() + n_train, pool.begin() + n_train + n_val);
    out.test.assign(pool.begin() + n_train + n_val, pool.end());

    switch (kind.type) {
        case SplitKind::Type::Full:
        case SplitKind::Type::TemplateSet:
            // Template sets restrict the downstream command builder, not
            // the example partition.
            out.train_supervised = train;
            out.train_lm = train;
            break;
        case SplitKind::Type::ZeroShot: {
            for (const auto& e : train)
                if (e.label_id != kind.blocked_label_id) out.train_supervised.push_back(e);
            out.train_lm = kind.unblock_lm ? train : out.train_supervised;
            for (const auto& e : out.test)
                (e.label_id == kind.blocked_label_id ? out.test_zero_shot : out.test_regular)
                    .push_back(e);
            if (out.test_zero_shot.empty())
                throw CorpusError("EmptyStratum: zero-shot test stratum for label " +
                                  std::to_string(kind.blocked_label_id));
            break;
        }
        case SplitKind::Type::Compositional: {
            out.train_supervised = train;
            for (auto& e : out.train_supervised)
                if (e.label_id == kind.noncomp_label_id) e.length_suppressed = true;
            out.train_lm = out.train_supervised;
            break;
        }
    }

    if (out.train_supervised.empty()) throw CorpusError("EmptyStratum: train_supervised");
    if (out.val.empty()) throw CorpusError("EmptyStratum: val");
    if (out.test.empty()) throw CorpusError("EmptyStratum: test");
    return out;
}

// Compositional evaluation targets need the schema's length levels, so they
// are filled in separately from the partition.
inline void fill_comp_targets(SplitBundle& bundle, const AttributeSchema& schema) {
    if (bundle.kind.type != SplitKind::Type::Compositional) return;
    bundle.comp_test_targets.clear();
    for (const auto& l : schema.lengths) {
        AttrSpec a;
        a.label_id = bundle.kind.noncomp_label_id;
        a.length_id = l.id;
        bundle.comp_test_targets.push_back(a);
    }
}

struct CommandTextRecord {
    Command command;
    std::string text;
    std::string example_id;
};

inline std::vector<CommandTextRecord> make_command_dataset(const SplitBundle& split,
                                                           const Grammar& g,
                                                           const AttributeSchema& schema,
                                                           std::uint64_t seed) {
    std::vector<CommandTextRecord> out;
    out.reserve(split.train_supervised.size());
    for (std::size_t i = 0; i < split.train_supervised.size(); ++i) {
        const Example& e = split.train_supervised[i];
        Rng rng = Rng::substream(seed, i);
        out.push_back({generate_command(g, schema, e.attrs(), rng), e.text, e.id});
    }
    return out;
}

struct PrefixPolicy {
    double sample_rate = 0.25;
    std::size_t max_prefix = 64;
    bool always_include_full = true;  // the full text is always one prefix
};

namespace detail {

inline AttrSpec flip_attrs(const AttributeSchema& schema, const AttrSpec& attrs, FlipMask mask,
                           Rng& rng) {
    AttrSpec out = attrs;
    auto flip_label = [&] {
        std::size_t alt = rng.uniform_index(schema.labels.size() - 1);
        int v = static_cast<int>(alt);
        if (v >= *attrs.label_id) ++v;
        out.label_id = v;
    };
    auto flip_length = [&] {
        std::size_t alt = rng.uniform_index(schema.lengths.size() - 1);
        int v = static_cast<int>(alt);
        if (v >= *attrs.length_id) ++v;
        out.length_id = v;
    };
    if (mask == FlipMask::Label || mask == FlipMask::Both) flip_label();
    if (mask == FlipMask::Length || mask == FlipMask::Both) flip_length();
    return out;
}

inline std::vector<FlipMask> feasible_flips(const AttributeSchema& schema, const AttrSpec& attrs) {
    bool label_ok = attrs.label_id && schema.labels.size() > 1;
    bool length_ok = attrs.length_id && schema.lengths.size() > 1;
    std::vector<FlipMask> out;
    if (label_ok) out.push_back(FlipMask::Label);
    if (length_ok) out.push_back(FlipMask::Length);
    if (label_ok && length_ok) out.push_back(FlipMask::Both);
    return out;
}

}  // namespace detail

// One positive and one negative pair per sampled prefix length, so the two
// streams are exactly balanced.
inline std::vector<PairExample> make_pair_dataset(const SplitBundle& split, const Grammar& g,
                                                  const AttributeSchema& schema,
                                                  const PrefixPolicy& policy, std::uint64_t seed) {
    std::vector<PairExample> out;
    for (std::size_t i = 0; i < split.train_supervised.size(); ++i) {
        const Example& e = split.train_supervised[i];
        Rng rng = Rng::substream(seed, i);
        AttrSpec attrs = e.attrs();
        auto flips = detail::feasible_flips(schema, attrs);
        if (flips.empty())
            throw CorpusError("CannotFlip: no attribute of example " + e.id + " can be flipped");

        auto tokens = ws_tokenize(e.text);
        if (tokens.empty()) continue;
        std::size_t limit = std::min(tokens.size(), policy.max_prefix);
        std::vector<std::size_t> prefix_lengths;
        for (std::size_t len = 1; len <= limit; ++len)
            if (rng.uniform01() < policy.sample_rate) prefix_lengths.push_back(len);
        if (policy.always_include_full || prefix_lengths.empty()) {
            std::size_t full_len = std::min(tokens.size(), policy.max_prefix);
            if (std::find(prefix_lengths.begin(), prefix_lengths.end(), full_len) ==
                prefix_lengths.end())
                prefix_lengths.push_back(full_len);
        }

        for (std::size_t len : prefix_lengths) {
            std::vector<std::string> prefix(tokens.begin(), tokens.begin() + len);
            bool full = len == tokens.size();

            PairExample pos;
            pos.command_text = generate_command(g, schema, attrs, rng).text;
            pos.prefix_tokens = prefix;
            pos.y = 1;
            pos.flip_mask = FlipMask::None;
            pos.is_full_text = full;
            pos.example_id = e.id;
            out.push_back(std::move(pos));

            FlipMask mask = flips[rng.uniform_index(flips.size())];
            AttrSpec neg_attrs = detail::flip_attrs(schema, attrs, mask, rng);
            PairExample neg;
            neg.command_text = generate_command(g, schema, neg_attrs, rng).text;
            neg.prefix_tokens = std::move(prefix);
            neg.y = 0;
            neg.flip_mask = mask;
            neg.is_full_text = full;
            neg.example_id = e.id;
            out.push_back(std::move(neg));
        }
    }
    return out;
}

struct MixtureComponent {
    std::string name;
    std::size_t size = 0;
    double rate = 0.0;
};

struct MixturePlan {
    std::vector<MixtureComponent> components;
    std::size_t artificial_limit = 0;
};

// Examples-proportional mixing: rate_i = min(size_i, limit) / sum_j min(size_j, limit).
inline MixturePlan plan_mixture(const std::vector<std::pair<std::string, std::size_t>>& datasets,
                                std::size_t artificial_limit) {
    if (artificial_limit == 0) throw CorpusError("plan_mixture: artificial limit must be positive");
    MixturePlan plan;
    plan.artificial_limit = artificial_limit;
    double total = 0.0;
    for (const auto& [name, size] : datasets) {
        if (size == 0) throw CorpusError("plan_mixture: dataset " + name + " is empty");
        total += static_cast<double>(std::min(size, artificial_limit));
    }
    for (const auto& [name, size] : datasets) {
        double capped = static_cast<double>(std::min(size, artificial_limit));
        plan.components.push_back({name, size, capped / total});
    }
    return plan;
}

inline std::vector<Example> sample_mixture(const MixturePlan& plan,
                                           const std::vector<std::vector<Example>>& streams,
                                           std::size_t total, std::uint64_t seed) {
    if (streams.size() != plan.components.size())
        throw CorpusError("sample_mixture: stream count does not match plan");
    std::vector<double> rates;
    for (const auto& c : plan.components) rates.push_back(c.rate);
    std::vector<std::size_t> cursors(streams.size(), 0);
    std::vector<Example> out;
    out.reserve(total);
    Rng rng(seed);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t s = rng.weighted_index(rates);
        const auto& stream = streams[s];
        if (stream.empty()) throw CorpusError("sample_mixture: empty stream " + plan.components[s].name);
        out.push_back(stream[cursors[s] % stream.size()]);
        ++cursors[s];
    }
    return out;
}

}  // namespace nlctg
