#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlctg/errors.hpp"
#include "nlctg/hash.hpp"
#include "nlctg/tokenize.hpp"

namespace nlctg {

using Weight = boost::multiprecision::cpp_rational;

// Attribute placeholders that may appear on a rule RHS but never on a LHS.
enum class SlotKind { LabelValue, LabelName, LengthValue, LengthName, Domain };

inline const char* slot_token(SlotKind k) {
    switch (k) {
        case SlotKind::LabelValue: return "[LABEL]";
        case SlotKind::LabelName: return "[LABEL-NAME]";
        case SlotKind::LengthValue: return "[LEN]";
        case SlotKind::LengthName: return "[LEN-NAME]";
        case SlotKind::Domain: return "[DOMAIN]";
    }
    return "";
}

inline std::optional<SlotKind> slot_from_name(std::string_view name) {
    if (name == "LABEL") return SlotKind::LabelValue;
    if (name == "LABEL-NAME") return SlotKind::LabelName;
    if (name == "LEN") return SlotKind::LengthValue;
    if (name == "LEN-NAME") return SlotKind::LengthName;
    if (name == "DOMAIN") return SlotKind::Domain;
    return std::nullopt;
}

struct Symbol {
    enum class Kind { Terminal, Nonterminal, Slot };

    Kind kind = Kind::Terminal;
    std::string text;  // terminal text (verbatim) or nonterminal name
    SlotKind slot = SlotKind::LabelValue;

    static Symbol terminal(std::string t) { return {Kind::Terminal, std::move(t), {}}; }
    static Symbol nonterminal(std::string name) { return {Kind::Nonterminal, std::move(name), {}}; }
    static Symbol make_slot(SlotKind k) { return {Kind::Slot, {}, k}; }

    bool operator==(const Symbol& o) const {
        if (kind != o.kind) return false;
        if (kind == Kind::Slot) return slot == o.slot;
        return text == o.text;
    }
};

struct Alternative {
    std::vector<Symbol> rhs;
    Weight weight = 1;

    bool operator==(const Alternative&) const = default;
};

struct Rule {
    std::string lhs;
    std::vector<Alternative> alternatives;

    bool operator==(const Rule&) const = default;
};

struct SeedTemplate {
    std::vector<Symbol> rhs;
    Weight weight = 1;

    bool operator==(const SeedTemplate&) const = default;
};

class Grammar {
  public:
    std::vector<SeedTemplate> seed_templates;
    std::vector<Rule> rules;  // file order, for faithful serialization
    std::string source_hash;  // sha-256 of the raw grammar file bytes

    const Rule* find_rule(std::string_view name) const {
        auto it = rule_index_.find(std::string(name));
        return it == rule_index_.end() ? nullptr : &rules[it->second];
    }

    void rebuild_index() {
        rule_index_.clear();
        for (std::size_t i = 0; i < rules.size(); ++i) rule_index_[rules[i].lhs] = i;
    }

    // Structural equality; source_hash is provenance, not content.
    bool operator==(const Grammar& o) const {
        return seed_templates == o.seed_templates && rules == o.rules;
    }

  private:
    std::unordered_map<std::string, std::size_t> rule_index_;
};

// parse_grammar also hands back the <label>/<length> sections verbatim for
// the schema layer to consume.
struct ParsedGrammarFile {
    Grammar grammar;
    std::string label_section;
    std::string length_section;
};

struct Diagnostic {
    std::string code;
    std::string detail;

    bool operator==(const Diagnostic&) const = default;
};

struct Derivation {
    std::size_t template_index = 0;
    std::vector<Symbol> skeleton;  // terminals and slots only
    Weight probability = 0;
};

namespace detail {

inline bool valid_nonterminal_name(std::string_view name) {
    if (name.empty()) return false;
    if (name[0] < 'A' || name[0] > 'Z') return false;
    for (char c : name.substr(1)) {
        if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-')) return false;
    }
    return true;
}

// Parses a `*w` weight suffix (integer or `p/q`); returns the remaining text.
inline std::pair<std::string, Weight> split_weight_suffix(std::string_view alt) {
    std::string text = trim(alt);
    auto star = text.rfind('*');
    if (star == std::string::npos || star == 0) return {text, Weight(1)};
    std::string w = trim(std::string_view(text).substr(star + 1));
    if (w.empty()) return {text, Weight(1)};
    bool numeric = true;
    int slashes = 0;
    for (char c : w) {
        if (c == '/') ++slashes;
        else if (!std::isdigit(static_cast<unsigned char>(c))) numeric = false;
    }
    if (!numeric || slashes > 1) return {text, Weight(1)};
    Weight weight;
    if (slashes == 1) {
        auto pos = w.find('/');
        std::string num = w.substr(0, pos), den = w.substr(pos + 1);
        if (num.empty() || den.empty()) return {text, Weight(1)};
        weight = Weight(boost::multiprecision::cpp_int(num), boost::multiprecision::cpp_int(den));
    } else {
        weight = Weight(boost::multiprecision::cpp_int(w));
    }
    if (weight <= 0) throw GrammarError("NonPositiveWeight: '" + std::string(alt) + "'");
    return {trim(std::string_view(text).substr(0, star)), weight};
}

inline std::vector<Symbol> parse_rhs(std::string_view text, std::string_view where) {
    std::vector<Symbol> out;
    std::string literal;
    auto flush = [&] {
        if (!literal.empty()) {
            out.push_back(Symbol::terminal(literal));
            literal.clear();
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '[') {
            auto close = text.find(']', i);
            if (close == std::string_view::npos)
                throw GrammarError("MalformedSection: unterminated '[' in " + std::string(where));
            std::string name(text.substr(i + 1, close - i - 1));
            if (auto k = slot_from_name(name)) {
                flush();
                out.push_back(Symbol::make_slot(*k));
            } else if (valid_nonterminal_name(name)) {
                flush();
                out.push_back(Symbol::nonterminal(name));
            } else {
                throw GrammarError("MalformedSection: bad bracketed token [" + name + "] in " +
                                   std::string(where));
            }
            i = close;
        } else if (text[i] == ']') {
            throw GrammarError("MalformedSection: stray ']' in " + std::string(where));
        } else {
            literal.push_back(text[i]);
        }
    }
    flush();
    if (out.empty()) throw GrammarError("EmptyAlternative: in " + std::string(where));
    return out;
}

inline std::string rhs_to_string(const std::vector<Symbol>& rhs) {
    std::string out;
    for (const auto& s : rhs) {
        switch (s.kind) {
            case Symbol::Kind::Terminal: out += s.text; break;
            case Symbol::Kind::Nonterminal: out += "[" + s.text + "]"; break;
            case Symbol::Kind::Slot: out += slot_token(s.slot); break;
        }
    }
    return out;
}

inline std::string weight_to_string(const Weight& w) {
    std::string num = boost::multiprecision::numerator(w).str();
    std::string den = boost::multiprecision::denominator(w).str();
    return den == "1" ? num : num + "/" + den;
}

}  // namespace detail

// Validates the structural invariants: no dangling references, unit cycles,
// non-terminating expansion, and attribute-slot coverage of the templates.
inline void validate_grammar(const Grammar& g) {
    if (g.seed_templates.empty()) throw GrammarError("MalformedSection: no seed templates");
    auto check_refs = [&](const std::vector<Symbol>& rhs) {
        for (const auto& s : rhs) {
            if (s.kind == Symbol::Kind::Nonterminal && g.find_rule(s.text) == nullptr)
                throw GrammarError("DanglingNonterminal: " + s.text);
        }
    };
    for (const auto& t : g.seed_templates) check_refs(t.rhs);
    for (const auto& r : g.rules)
        for (const auto& a : r.alternatives) check_refs(a.rhs);

    // Unit-production graph must be acyclic.
    std::map<std::string, std::vector<std::string>> unit_edges;
    for (const auto& r : g.rules) {
        for (const auto& a : r.alternatives) {
            if (a.rhs.size() == 1 && a.rhs[0].kind == Symbol::Kind::Nonterminal)
                unit_edges[r.lhs].push_back(a.rhs[0].text);
        }
    }
    std::map<std::string, int> color;  // 0 unvisited, 1 in progress, 2 done
    std::vector<std::string> stack;
    auto dfs = [&](auto&& self, const std::string& u) -> void {
        color[u] = 1;
        stack.push_back(u);
        for (const auto& v : unit_edges[u]) {
            if (color[v] == 1) {
                std::string cycle;
                for (const auto& n : stack) cycle += n + " ";
                throw GrammarError("CycleWithoutEscape: unit cycle through " + cycle + v);
            }
            if (color[v] == 0) self(self, v);
        }
        color[u] = 2;
        stack.pop_back();
    };
    for (const auto& r : g.rules)
        if (color[r.lhs] == 0) dfs(dfs, r.lhs);

    // Every nonterminal must be able to derive a finite string: least
    // fixpoint of "some alternative is built from terminating pieces".
    std::set<std::string> terminating;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : g.rules) {
            if (terminating.count(r.lhs)) continue;
            for (const auto& a : r.alternatives) {
                bool ok = true;
                for (const auto& s : a.rhs)
                    if (s.kind == Symbol::Kind::Nonterminal && !terminating.count(s.text)) ok = false;
                if (ok) {
                    terminating.insert(r.lhs);
                    changed = true;
                    break;
                }
            }
        }
    }
    std::vector<std::string> stuck;
    for (const auto& r : g.rules)
        if (!terminating.count(r.lhs)) stuck.push_back(r.lhs);
    if (!stuck.empty()) throw GrammarError("CycleWithoutEscape: " + join(stuck, ", "));

    // Slot coverage: some template must be able to verbalize a label and
    // some template a length.
    std::map<std::string, std::set<SlotKind>> may_slots;
    changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : g.rules) {
            auto& mine = may_slots[r.lhs];
            std::size_t before = mine.size();
            for (const auto& a : r.alternatives) {
                for (const auto& s : a.rhs) {
                    if (s.kind == Symbol::Kind::Slot) mine.insert(s.slot);
                    if (s.kind == Symbol::Kind::Nonterminal) {
                        const auto& sub = may_slots[s.text];
                        mine.insert(sub.begin(), sub.end());
                    }
                }
            }
            if (mine.size() != before) changed = true;
        }
    }
    bool have_label = false, have_length = false;
    for (const auto& t : g.seed_templates) {
        std::set<SlotKind> slots;
        for (const auto& s : t.rhs) {
            if (s.kind == Symbol::Kind::Slot) slots.insert(s.slot);
            if (s.kind == Symbol::Kind::Nonterminal) {
                const auto& sub = may_slots[s.text];
                slots.insert(sub.begin(), sub.end());
            }
        }
        if (slots.count(SlotKind::LabelValue)) have_label = true;
        if (slots.count(SlotKind::LengthValue)) have_length = true;
    }
    if (!have_label)
        throw GrammarError("MalformedSection: no seed template can produce a [LABEL] slot");
    if (!have_length)
        throw GrammarError("MalformedSection: no seed template can produce a [LEN] slot");
}

inline ParsedGrammarFile parse_grammar(std::string_view source) {
    ParsedGrammarFile out;
    out.grammar.source_hash = Sha256::of(source);

    std::string normalized(source);
    std::string no_cr;
    no_cr.reserve(normalized.size());
    for (char c : normalized)
        if (c != '\r') no_cr.push_back(c);

    std::vector<std::string> lines;
    {
        std::string cur;
        for (char c : no_cr) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        lines.push_back(cur);
    }

    enum class Section { None, Templates, Variables, Label, Length };
    Section current = Section::None;
    std::set<std::string> seen_sections;
    std::set<std::string> seen_lhs;

    auto enter = [&](const std::string& header) {
        if (seen_sections.count(header))
            throw GrammarError("MalformedSection: duplicate section " + header);
        seen_sections.insert(header);
        if (header == "<templates>") return Section::Templates;
        if (header == "<variables>") return Section::Variables;
        if (header == "<label>") return Section::Label;
        if (header == "<length>") return Section::Length;
        throw GrammarError("MalformedSection: unknown section " + header);
    };

    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        std::string line = trim(lines[ln]);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '<' && line.back() == '>') {
            current = enter(line);
            continue;
        }
        std::string where = "line " + std::to_string(ln + 1);
        switch (current) {
            case Section::None:
                throw GrammarError("MalformedSection: content before any section header (" + where +
                                   ")");
            case Section::Templates: {
                auto [text, weight] = detail::split_weight_suffix(line);
                out.grammar.seed_templates.push_back({detail::parse_rhs(text, where), weight});
                break;
            }
            case Section::Variables: {
                auto colon = line.find("]:");
                if (colon == std::string::npos || line[0] != '[')
                    throw GrammarError("MalformedSection: expected '[LHS]: ...' at " + where);
                std::string name = line.substr(1, colon - 1);
                if (slot_from_name(name))
                    throw GrammarError("MalformedSection: slot token [" + name +
                                       "] cannot be a rule LHS (" + where + ")");
                if (!detail::valid_nonterminal_name(name))
                    throw GrammarError("MalformedSection: bad nonterminal name [" + name + "] (" +
                                       where + ")");
                if (!seen_lhs.insert(name).second)
                    throw GrammarError("MalformedSection: duplicate rule for [" + name + "] (" +
                                       where + ")");
                Rule rule{name, {}};
                std::string body = line.substr(colon + 2);
                std::size_t start = 0;
                // '|' splits alternatives; it never occurs inside terminals
                // of this format.
                for (std::size_t i = 0; i <= body.size(); ++i) {
                    if (i == body.size() || body[i] == '|') {
                        std::string alt = body.substr(start, i - start);
                        auto [text, weight] = detail::split_weight_suffix(alt);
                        if (trim(text).empty()) throw GrammarError("EmptyAlternative: in " + where);
                        rule.alternatives.push_back({detail::parse_rhs(text, where), weight});
                        start = i + 1;
                    }
                }
                out.grammar.rules.push_back(std::move(rule));
                break;
            }
            case Section::Label:
                if (!out.label_section.empty()) out.label_section += "\n";
                out.label_section += line;
                break;
            case Section::Length:
                if (!out.length_section.empty()) out.length_section += "\n";
                out.length_section += line;
                break;
        }
    }

    if (!seen_sections.count("<templates>"))
        throw GrammarError("MalformedSection: missing <templates> section");
    if (!seen_sections.count("<variables>"))
        throw GrammarError("MalformedSection: missing <variables> section");

    out.grammar.rebuild_index();
    validate_grammar(out.grammar);
    return out;
}

inline std::string serialize_grammar(const Grammar& g, std::string_view label_section = "",
                                     std::string_view length_section = "") {
    std::string out = "<templates>\n";
    for (const auto& t : g.seed_templates) {
        out += detail::rhs_to_string(t.rhs);
        if (t.weight != 1) out += " *" + detail::weight_to_string(t.weight);
        out += "\n";
    }
    out += "<variables>\n";
    for (const auto& r : g.rules) {
        out += "[" + r.lhs + "]:";
        for (std::size_t i = 0; i < r.alternatives.size(); ++i) {
            out += (i == 0 ? " " : " | ");
            out += trim(detail::rhs_to_string(r.alternatives[i].rhs));
            if (r.alternatives[i].weight != 1)
                out += " *" + detail::weight_to_string(r.alternatives[i].weight);
        }
        out += "\n";
    }
    if (!label_section.empty()) out += "<label>\n" + std::string(label_section) + "\n";
    if (!length_section.empty()) out += "<length>\n" + std::string(length_section) + "\n";
    return out;
}

// Exhaustive expansion of every seed template with exact rational
// probabilities; the sampling oracle used throughout the tests.
inline std::vector<Derivation> enumerate_derivations(const Grammar& g, std::size_t max_count) {
    Weight template_total = 0;
    for (const auto& t : g.seed_templates) template_total += t.weight;

    std::vector<Derivation> out;
    auto expand = [&](auto&& self, const std::vector<Symbol>& pending, std::size_t pos,
                      std::vector<Symbol>& acc, Weight prob, std::size_t template_index) -> void {
        if (pos == pending.size()) {
            if (out.size() >= max_count)
                throw GrammarError("TooManyDerivations: more than " + std::to_string(max_count));
            out.push_back({template_index, acc, prob});
            return;
        }
        const Symbol& s = pending[pos];
        if (s.kind != Symbol::Kind::Nonterminal) {
            acc.push_back(s);
            self(self, pending, pos + 1, acc, prob, template_index);
            acc.pop_back();
            return;
        }
        const Rule* rule = g.find_rule(s.text);
        if (!rule) throw GrammarError("DanglingNonterminal: " + s.text);
        Weight total = 0;
        for (const auto& a : rule->alternatives) total += a.weight;
        for (const auto& a : rule->alternatives) {
            std::vector<Symbol> next = a.rhs;
            next.insert(next.end(), pending.begin() + pos + 1, pending.end());
            self(self, next, 0, acc, prob * a.weight / total, template_index);
        }
    };

    for (std::size_t ti = 0; ti < g.seed_templates.size(); ++ti) {
        std::vector<Symbol> acc;
        expand(expand, g.seed_templates[ti].rhs, 0, acc,
               Weight(g.seed_templates[ti].weight) / template_total, ti);
    }
    return out;
}

inline std::vector<Diagnostic> lint_grammar(const Grammar& g) {
    std::vector<Diagnostic> out;

    std::set<std::string> reachable;
    auto visit = [&](auto&& self, const std::vector<Symbol>& rhs) -> void {
        for (const auto& s : rhs) {
            if (s.kind != Symbol::Kind::Nonterminal || reachable.count(s.text)) continue;
            reachable.insert(s.text);
            if (const Rule* r = g.find_rule(s.text))
                for (const auto& a : r->alternatives) self(self, a.rhs);
        }
    };
    for (const auto& t : g.seed_templates) visit(visit, t.rhs);
    for (const auto& r : g.rules)
        if (!reachable.count(r.lhs)) out.push_back({"UnreachableNonterminal", r.lhs});

    // Per-template possible attribute-value slots (through expansion).
    std::map<std::string, std::set<SlotKind>> may_slots;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : g.rules) {
            auto& mine = may_slots[r.lhs];
            std::size_t before = mine.size();
            for (const auto& a : r.alternatives)
                for (const auto& s : a.rhs) {
                    if (s.kind == Symbol::Kind::Slot) mine.insert(s.slot);
                    if (s.kind == Symbol::Kind::Nonterminal) {
                        const auto& sub = may_slots[s.text];
                        mine.insert(sub.begin(), sub.end());
                    }
                }
            if (mine.size() != before) changed = true;
        }
    }
    for (std::size_t ti = 0; ti < g.seed_templates.size(); ++ti) {
        std::set<SlotKind> slots;
        for (const auto& s : g.seed_templates[ti].rhs) {
            if (s.kind == Symbol::Kind::Slot) slots.insert(s.slot);
            if (s.kind == Symbol::Kind::Nonterminal) {
                const auto& sub = may_slots[s.text];
                slots.insert(sub.begin(), sub.end());
            }
        }
        if (!slots.count(SlotKind::LabelValue) && !slots.count(SlotKind::LengthValue))
            out.push_back({"SlotFreeTemplate", std::to_string(ti)});
    }

    auto check_terminals = [&](const std::vector<Symbol>& rhs, const std::string& where) {
        for (const auto& s : rhs)
            if (s.kind == Symbol::Kind::Terminal && s.text.find("  ") != std::string::npos)
                out.push_back({"DoubleSpaceTerminal", where});
    };
    for (std::size_t ti = 0; ti < g.seed_templates.size(); ++ti)
        check_terminals(g.seed_templates[ti].rhs, "template " + std::to_string(ti));
    for (const auto& r : g.rules)
        for (const auto& a : r.alternatives) check_terminals(a.rhs, r.lhs);

    return out;
}

}  // namespace nlctg
