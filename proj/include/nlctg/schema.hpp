#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlctg/errors.hpp"
#include "nlctg/tokenize.hpp"

namespace nlctg {

struct LabelClass {
    int id = 0;
    std::string canonical;  // first verbalizer
    std::vector<std::string> verbalizers;

    bool operator==(const LabelClass&) const = default;
};

struct LengthLevel {
    int id = 0;
    long cutoff = 0;  // inclusive lower bound on token count
    std::vector<std::string> verbalizers;

    bool operator==(const LengthLevel&) const = default;
};

// The categorical attribute tuple: label and/or length, at least one set.
struct AttrSpec {
    std::optional<int> label_id;
    std::optional<int> length_id;

    bool operator==(const AttrSpec&) const = default;
    bool valid() const { return label_id.has_value() || length_id.has_value(); }
};

struct SchemaMeta {
    std::vector<std::string> label_attr_names;   // e.g. "topic"
    std::vector<std::string> length_attr_names;  // e.g. "length"
    std::vector<std::string> domains;            // e.g. "AG news report"
    std::string tokenizer_id = kWhitespaceTokenizerId;
};

class AttributeSchema {
  public:
    std::vector<LabelClass> labels;
    std::vector<LengthLevel> lengths;
    std::vector<std::string> label_attr_names;
    std::vector<std::string> length_attr_names;
    std::vector<std::string> domains;
    std::string tokenizer_id;

    // Highest level whose cutoff does not exceed token_count.
    int length_level_of(long token_count) const {
        int level = 0;
        for (const auto& l : lengths)
            if (l.cutoff <= token_count) level = l.id;
        return level;
    }

    struct Owner {
        enum class Kind { Label, Length } kind;
        int id;
    };

    std::optional<Owner> try_invert_verbalizer(std::string_view phrase) const {
        auto it = verbalizer_owner_.find(fold_phrase(phrase));
        if (it == verbalizer_owner_.end()) return std::nullopt;
        return it->second;
    }

    Owner invert_verbalizer(std::string_view phrase) const {
        auto o = try_invert_verbalizer(phrase);
        if (!o) throw SchemaError("UnknownVerbalizer: '" + std::string(phrase) + "'");
        return *o;
    }

    const LabelClass& label_by_name(std::string_view name) const {
        for (const auto& c : labels)
            if (fold_phrase(c.canonical) == fold_phrase(name)) return c;
        throw SchemaError("UnknownLabel: '" + std::string(name) + "'");
    }

    void finalize() {
        if (label_attr_names.empty() || length_attr_names.empty() || domains.empty())
            throw SchemaError("EmptyVerbalizerList: attribute-name/domain verbalizers");
        verbalizer_owner_.clear();
        auto add = [&](const std::string& v, Owner owner) {
            std::string key = fold_phrase(v);
            auto [it, inserted] = verbalizer_owner_.emplace(key, owner);
            if (!inserted && (it->second.kind != owner.kind || it->second.id != owner.id))
                throw SchemaError("AmbiguousVerbalizer: '" + v + "'");
        };
        for (const auto& c : labels)
            for (const auto& v : c.verbalizers) add(v, {Owner::Kind::Label, c.id});
        for (const auto& l : lengths)
            for (const auto& v : l.verbalizers) add(v, {Owner::Kind::Length, l.id});
    }

  private:
    std::map<std::string, Owner> verbalizer_owner_;
};

namespace detail {

// Lines of form `key: v1, v2, ...`.
inline std::vector<std::pair<long, std::vector<std::string>>> parse_id_lines(
    std::string_view section, const char* what) {
    std::vector<std::pair<long, std::vector<std::string>>> out;
    std::size_t start = 0;
    std::string text(section);
    text += "\n";
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\n') continue;
        std::string line = trim(std::string_view(text).substr(start, i - start));
        start = i + 1;
        if (line.empty() || line[0] == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string::npos)
            throw SchemaError(std::string("MalformedSection: expected 'id: verbalizers' in ") +
                              what + " section: '" + line + "'");
        std::string key = trim(std::string_view(line).substr(0, colon));
        long id = 0;
        try {
            std::size_t used = 0;
            id = std::stol(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw SchemaError(std::string("MalformedSection: non-numeric key in ") + what +
                              " section: '" + key + "'");
        }
        std::vector<std::string> verbalizers;
        std::string rest = line.substr(colon + 1);
        std::size_t vstart = 0;
        for (std::size_t j = 0; j <= rest.size(); ++j) {
            if (j == rest.size() || rest[j] == ',') {
                std::string v = trim(std::string_view(rest).substr(vstart, j - vstart));
                if (!v.empty()) verbalizers.push_back(v);
                vstart = j + 1;
            }
        }
        if (verbalizers.empty())
            throw SchemaError(std::string("EmptyVerbalizerList: ") + what + " " + key);
        for (std::size_t a = 0; a < verbalizers.size(); ++a)
            for (std::size_t b = a + 1; b < verbalizers.size(); ++b)
                if (fold_phrase(verbalizers[a]) == fold_phrase(verbalizers[b]))
                    throw SchemaError("AmbiguousVerbalizer: '" + verbalizers[a] + "' repeated");
        out.push_back({id, std::move(verbalizers)});
    }
    return out;
}

}  // namespace detail

inline AttributeSchema parse_schema(std::string_view label_section, std::string_view length_section,
                                    const SchemaMeta& meta) {
    AttributeSchema schema;
    schema.label_attr_names = meta.label_attr_names;
    schema.length_attr_names = meta.length_attr_names;
    schema.domains = meta.domains;
    schema.tokenizer_id = meta.tokenizer_id;

    auto label_lines = detail::parse_id_lines(label_section, "label");
    std::sort(label_lines.begin(), label_lines.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i + 1 < label_lines.size(); ++i)
        if (label_lines[i].first == label_lines[i + 1].first)
            throw SchemaError("DuplicateId: label " + std::to_string(label_lines[i].first));
    for (std::size_t i = 0; i < label_lines.size(); ++i) {
        if (label_lines[i].first != static_cast<long>(i))
            throw SchemaError("NonContiguousIds: label ids must be 0..n-1");
        schema.labels.push_back({static_cast<int>(i), label_lines[i].second.front(),
                                 label_lines[i].second});
    }
    if (schema.labels.empty()) throw SchemaError("EmptyVerbalizerList: no label classes");

    auto length_lines = detail::parse_id_lines(length_section, "length");
    for (std::size_t i = 0; i + 1 < length_lines.size(); ++i)
        if (length_lines[i].first >= length_lines[i + 1].first)
            throw SchemaError("CutoffNotIncreasing: " + std::to_string(length_lines[i + 1].first));
    if (length_lines.empty() || length_lines.front().first != 0)
        throw SchemaError("CutoffNotIncreasing: first length cutoff must be 0");
    for (std::size_t i = 0; i < length_lines.size(); ++i)
        schema.lengths.push_back(
            {static_cast<int>(i), length_lines[i].first, length_lines[i].second});

    schema.finalize();
    return schema;
}

// Smallest cutoffs that split `token_counts` into n_len buckets of (near)
// equal size: cutoff j is the least integer c with #(x < c) >= floor(j*N/n).
inline std::vector<long> derive_balanced_cutoffs(std::vector<long> token_counts, int n_len) {
    if (n_len < 2) throw SchemaError("DegenerateDistribution: n_len must be >= 2");
    if (static_cast<int>(token_counts.size()) < n_len)
        throw SchemaError("DegenerateDistribution: fewer examples than levels");
    std::sort(token_counts.begin(), token_counts.end());
    {
        long distinct = 1;
        for (std::size_t i = 1; i < token_counts.size(); ++i)
            if (token_counts[i] != token_counts[i - 1]) ++distinct;
        if (distinct < n_len)
            throw SchemaError("DegenerateDistribution: fewer distinct values than levels");
    }
    const std::size_t n = token_counts.size();
    std::vector<long> cutoffs{0};
    for (int j = 1; j < n_len; ++j) {
        std::size_t target = j * n / n_len;
        std::size_t pos = target == 0 ? 0 : target - 1;
        long c = token_counts[pos] + 1;
        while (c <= cutoffs.back() && pos + 1 < n) c = token_counts[++pos] + 1;
        if (c <= cutoffs.back())
            throw SchemaError("DegenerateDistribution: cannot place strictly increasing cutoffs");
        cutoffs.push_back(c);
    }
    return cutoffs;
}

}  // namespace nlctg
