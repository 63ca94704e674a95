#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nlctg/errors.hpp"
#include "nlctg/grammar.hpp"
#include "nlctg/rng.hpp"
#include "nlctg/schema.hpp"

namespace nlctg {

struct DerivationStep {
    std::string lhs;
    std::size_t alternative;

    bool operator==(const DerivationStep&) const = default;
};

struct Command {
    std::string text;
    AttrSpec attrs;
    std::size_t template_index = 0;
    std::vector<DerivationStep> derivation;  // top-down left-to-right choices
    std::vector<std::string> slot_fills;     // left-to-right verbalizer picks
    std::string grammar_hash;
};

inline constexpr std::size_t kDefaultRejectionBound = 10000;

// "a"/"an" agreement exceptions: words whose spelling disagrees with their
// initial sound.
inline bool starts_with_vowel_sound(const std::string& word) {
    static const std::set<std::string> consonant_sound = {"university", "user", "one", "unique",
                                                          "european"};
    static const std::set<std::string> vowel_sound = {"hour", "honest"};
    std::string core;
    for (char c : word) {
        if (std::isalpha(static_cast<unsigned char>(c)))
            core.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!core.empty())
            break;
    }
    if (core.empty()) return false;
    if (consonant_sound.count(core)) return false;
    if (vowel_sound.count(core)) return true;
    char first = core[0];
    return first == 'a' || first == 'e' || first == 'i' || first == 'o' || first == 'u';
}

// Fixes simple grammar errors left by verbalization: article agreement,
// space runs, sentence-initial capitalization, terminal punctuation.
inline std::string postprocess(const std::string& raw) {
    auto tokens = ws_tokenize(raw);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        bool vowel_next = starts_with_vowel_sound(tokens[i + 1]);
        if ((tokens[i] == "a" || tokens[i] == "A") && vowel_next)
            tokens[i] += "n";
        else if (tokens[i] == "an" && !vowel_next)
            tokens[i] = "a";
        else if (tokens[i] == "An" && !vowel_next)
            tokens[i] = "A";
    }
    std::string text = join(tokens);
    for (char& c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            break;
        }
    }
    if (!text.empty() && text.back() != '.' && text.back() != '!' && text.back() != '?')
        text += ".";
    return text;
}

namespace detail {

struct Expansion {
    std::vector<Symbol> skeleton;  // terminals and slots
    std::vector<DerivationStep> steps;
};

inline Expansion expand_template(const Grammar& g, std::size_t template_index, Rng& rng) {
    Expansion out;
    // Top-down left-to-right weighted expansion.
    std::vector<Symbol> pending(g.seed_templates[template_index].rhs);
    std::size_t pos = 0;
    while (pos < pending.size()) {
        const Symbol& s = pending[pos];
        if (s.kind != Symbol::Kind::Nonterminal) {
            out.skeleton.push_back(s);
            ++pos;
            continue;
        }
        const Rule* rule = g.find_rule(s.text);
        if (!rule) throw GrammarError("DanglingNonterminal: " + s.text);
        std::vector<double> weights;
        weights.reserve(rule->alternatives.size());
        for (const auto& a : rule->alternatives)
            weights.push_back(static_cast<double>(a.weight));
        std::size_t choice = rng.weighted_index(weights);
        out.steps.push_back({rule->lhs, choice});
        const auto& rhs = rule->alternatives[choice].rhs;
        pending.erase(pending.begin() + pos);
        pending.insert(pending.begin() + pos, rhs.begin(), rhs.end());
    }
    return out;
}

// Exact slot-requirement match: one value slot per present attribute, none
// for absent ones, and name slots only where the attribute is present.
inline bool matches_requirements(const std::vector<Symbol>& skeleton, const AttrSpec& attrs) {
    int label_vals = 0, length_vals = 0;
    bool label_names = false, length_names = false;
    for (const auto& s : skeleton) {
        if (s.kind != Symbol::Kind::Slot) continue;
        switch (s.slot) {
            case SlotKind::LabelValue: ++label_vals; break;
            case SlotKind::LengthValue: ++length_vals; break;
            case SlotKind::LabelName: label_names = true; break;
            case SlotKind::LengthName: length_names = true; break;
            case SlotKind::Domain: break;
        }
    }
    if (label_vals != (attrs.label_id ? 1 : 0)) return false;
    if (length_vals != (attrs.length_id ? 1 : 0)) return false;
    if (label_names && !attrs.label_id) return false;
    if (length_names && !attrs.length_id) return false;
    return true;
}

inline const std::vector<std::string>& verbalizer_pool(const AttributeSchema& schema,
                                                       const AttrSpec& attrs, SlotKind slot) {
    switch (slot) {
        case SlotKind::LabelValue:
            if (!attrs.label_id) throw GenerationError("UnsatisfiedSlot: [LABEL]");
            return schema.labels.at(*attrs.label_id).verbalizers;
        case SlotKind::LengthValue:
            if (!attrs.length_id) throw GenerationError("UnsatisfiedSlot: [LEN]");
            return schema.lengths.at(*attrs.length_id).verbalizers;
        case SlotKind::LabelName: return schema.label_attr_names;
        case SlotKind::LengthName: return schema.length_attr_names;
        case SlotKind::Domain: return schema.domains;
    }
    throw GenerationError("UnsatisfiedSlot: unknown slot kind");
}

inline std::string realize(const std::vector<Symbol>& skeleton,
                           const std::vector<std::string>& slot_fills) {
    std::string text;
    std::size_t fill = 0;
    for (const auto& s : skeleton) {
        if (s.kind == Symbol::Kind::Terminal)
            text += s.text;
        else
            text += slot_fills.at(fill++);
    }
    return text;
}

}  // namespace detail

inline Command generate_command(const Grammar& g, const AttributeSchema& schema,
                                const AttrSpec& attrs, Rng& rng,
                                std::size_t rejection_bound = kDefaultRejectionBound) {
    if (!attrs.valid()) throw GenerationError("UnsatisfiedSlot: AttrSpec has no attribute");

    std::vector<double> template_weights;
    template_weights.reserve(g.seed_templates.size());
    for (const auto& t : g.seed_templates)
        template_weights.push_back(static_cast<double>(t.weight));

    for (std::size_t attempt = 0; attempt < rejection_bound; ++attempt) {
        std::size_t ti = rng.weighted_index(template_weights);
        auto expansion = detail::expand_template(g, ti, rng);
        if (!detail::matches_requirements(expansion.skeleton, attrs)) continue;

        Command cmd;
        cmd.attrs = attrs;
        cmd.template_index = ti;
        cmd.derivation = std::move(expansion.steps);
        cmd.grammar_hash = g.source_hash;
        for (const auto& s : expansion.skeleton) {
            if (s.kind != Symbol::Kind::Slot) continue;
            const auto& pool = detail::verbalizer_pool(schema, attrs, s.slot);
            cmd.slot_fills.push_back(pool[rng.uniform_index(pool.size())]);
        }
        cmd.text = postprocess(detail::realize(expansion.skeleton, cmd.slot_fills));
        return cmd;
    }
    throw GenerationError("NoFeasibleTemplate: no template matched the slot requirements within " +
                          std::to_string(rejection_bound) + " attempts");
}

// Re-runs a recorded derivation; reproduces the command text exactly.
inline std::string replay_command(const Grammar& g, const Command& cmd) {
    std::vector<Symbol> pending(g.seed_templates.at(cmd.template_index).rhs);
    std::vector<Symbol> skeleton;
    std::size_t step = 0, pos = 0;
    while (pos < pending.size()) {
        const Symbol& s = pending[pos];
        if (s.kind != Symbol::Kind::Nonterminal) {
            skeleton.push_back(s);
            ++pos;
            continue;
        }
        const auto& rec = cmd.derivation.at(step++);
        if (rec.lhs != s.text) throw GenerationError("Replay: derivation does not fit grammar");
        const auto& rhs = g.find_rule(s.text)->alternatives.at(rec.alternative).rhs;
        pending.erase(pending.begin() + pos);
        pending.insert(pending.begin() + pos, rhs.begin(), rhs.end());
    }
    return postprocess(detail::realize(skeleton, cmd.slot_fills));
}

struct BatchError {
    std::size_t index;
    std::string message;
};

// Deterministic given seed; element i owns substream (seed, i) so results
// are independent of processing order.
inline std::vector<Command> generate_batch(const Grammar& g, const AttributeSchema& schema,
                                           const std::vector<AttrSpec>& attr_list,
                                           std::uint64_t seed) {
    std::vector<Command> out;
    out.reserve(attr_list.size());
    std::vector<BatchError> errors;
    for (std::size_t i = 0; i < attr_list.size(); ++i) {
        Rng rng = Rng::substream(seed, i);
        try {
            out.push_back(generate_command(g, schema, attr_list[i], rng));
        } catch (const Error& e) {
            errors.push_back({i, e.what()});
        }
    }
    if (!errors.empty()) {
        std::string msg = "generate_batch: " + std::to_string(errors.size()) + " failures:";
        for (const auto& e : errors)
            msg += "\n  [" + std::to_string(e.index) + "] " + e.message;
        throw GenerationError(msg);
    }
    return out;
}

// Recovers the attribute assignment a command text encodes by scanning for
// schema verbalizers (longest match first). Used by tests and the pair
// builder to confirm slot filling.
inline AttrSpec recover_attrs(const AttributeSchema& schema, const std::string& text) {
    std::vector<std::pair<std::string, AttributeSchema::Owner>> hits;
    std::string folded = fold_phrase(text);
    auto scan = [&](const std::string& verbalizer, AttributeSchema::Owner owner) {
        std::string needle = fold_phrase(verbalizer);
        std::size_t at = 0;
        while ((at = folded.find(needle, at)) != std::string::npos) {
            bool left_ok = at == 0 || !std::isalnum(static_cast<unsigned char>(folded[at - 1]));
            std::size_t end = at + needle.size();
            bool right_ok =
                end == folded.size() || !std::isalnum(static_cast<unsigned char>(folded[end]));
            if (left_ok && right_ok) hits.push_back({needle, owner});
            at = end;
        }
    };
    for (const auto& c : schema.labels)
        for (const auto& v : c.verbalizers) scan(v, {AttributeSchema::Owner::Kind::Label, c.id});
    for (const auto& l : schema.lengths)
        for (const auto& v : l.verbalizers) scan(v, {AttributeSchema::Owner::Kind::Length, l.id});

    // A shorter verbalizer fully contained in a longer one of the same
    // owner is the same mention, not a second attribute.
    AttrSpec attrs;
    for (const auto& [needle, owner] : hits) {
        bool shadowed = false;
        for (const auto& [other, other_owner] : hits) {
            if (other.size() > needle.size() && other.find(needle) != std::string::npos &&
                other_owner.kind == owner.kind && other_owner.id == owner.id)
                shadowed = true;
        }
        if (shadowed) continue;
        if (owner.kind == AttributeSchema::Owner::Kind::Label) {
            if (attrs.label_id && *attrs.label_id != owner.id)
                throw GenerationError("recover_attrs: conflicting label verbalizers in '" + text +
                                      "'");
            attrs.label_id = owner.id;
        } else {
            if (attrs.length_id && *attrs.length_id != owner.id)
                throw GenerationError("recover_attrs: conflicting length verbalizers in '" + text +
                                      "'");
            attrs.length_id = owner.id;
        }
    }
    return attrs;
}

}  // namespace nlctg
