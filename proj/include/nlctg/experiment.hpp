#pragma once

// Desk-scale experiment harness: wires the synthetic letter-language
// corpus, the PCFG/template-set grammars, the reference models, and the
// decode engine into the full-data, template-generalization, zero-shot,
// and compositional pipelines, and emits one consolidated JSON report.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "nlctg/command_gen.hpp"
#include "nlctg/corpus.hpp"
#include "nlctg/decode.hpp"
#include "nlctg/grammar.hpp"
#include "nlctg/metrics.hpp"
#include "nlctg/models.hpp"
#include "nlctg/rng.hpp"
#include "nlctg/schema.hpp"
#include "nlctg/synthetic.hpp"
#include "nlctg/tokenize.hpp"

namespace nlctg {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct E2EConfig {
    std::uint64_t seed = 17;
    std::size_t train_size = 5000;
    std::size_t test_size = 500;
    int n_len = 3;
    int lm_order = 3;
    double lm_alpha = 0.1;
    double nb_laplace = 1.0;
    int decode_k = 20;
    int candidate_cap = 200;
    int max_new_tokens = 48;
    double lambda = 6.0;
    int alignment_epochs = 8;
    double alignment_lr = 0.1;
    double alignment_l2 = 0.0;
    std::size_t full_generations = 80;      // per method, full-data block
    std::size_t heldout_generations = 240;   // per regime, template block
    std::size_t zs_generations = 48;        // per stratum, zero-shot block
    std::size_t comp_generations = 36;      // per regime, compositional block
    std::size_t bleu_references = 100;
    PrefixPolicy prefix_policy{};
};

// All grammar/sidecar file contents, so the harness itself never touches
// the filesystem.
struct E2EInputs {
    std::string pcfg_source;
    std::string t20_source;
    std::string heldout_source;
    SchemaMeta meta;
};

inline SchemaMeta parse_schema_meta(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    SchemaMeta meta;
    meta.label_attr_names = j.at("label_attr_names").get<std::vector<std::string>>();
    meta.length_attr_names = j.at("length_attr_names").get<std::vector<std::string>>();
    meta.domains = j.at("domains").get<std::vector<std::string>>();
    if (j.contains("tokenizer_id")) meta.tokenizer_id = j.at("tokenizer_id").get<std::string>();
    return meta;
}

// Schema from a grammar file's label/length sections with the length
// cutoffs replaced by corpus-derived balanced ones (the file's cutoffs are
// defaults; cutoffs are data artifacts, not method constants).
inline AttributeSchema make_schema_with_cutoffs(const ParsedGrammarFile& pg, const SchemaMeta& meta,
                                                const std::vector<long>& cutoffs) {
    AttributeSchema schema = parse_schema(pg.label_section, pg.length_section, meta);
    if (cutoffs.size() != schema.lengths.size())
        throw SchemaError("make_schema_with_cutoffs: cutoff count does not match length levels");
    for (std::size_t i = 0; i < cutoffs.size(); ++i) schema.lengths[i].cutoff = cutoffs[i];
    schema.finalize();
    return schema;
}

struct SyntheticWorld {
    SyntheticCorpus corpus;
    ParsedGrammarFile pcfg;
    ParsedGrammarFile t20;
    ParsedGrammarFile heldout;
    AttributeSchema schema;
    std::vector<long> cutoffs;
    std::vector<Example> train;
    std::vector<Example> test;
};

inline std::vector<Example> to_examples(const std::vector<SyntheticText>& texts,
                                        const AttributeSchema& schema, const std::string& source) {
    std::vector<Example> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Example e;
        e.id = source + ":" + std::to_string(i);
        e.text = texts[i].text;
        e.token_count = static_cast<long>(ws_token_count(e.text));
        e.label_id = texts[i].label;
        e.length_id = schema.length_level_of(e.token_count);
        e.source = source;
        out.push_back(std::move(e));
    }
    return out;
}

inline SyntheticWorld build_synthetic_world(const E2EConfig& cfg, const E2EInputs& in) {
    SyntheticWorld w;
    SyntheticConfig scfg;
    scfg.train_size = cfg.train_size;
    scfg.test_size = cfg.test_size;
    scfg.seed = cfg.seed;
    w.corpus = make_synthetic_corpus(scfg);

    w.pcfg = parse_grammar(in.pcfg_source);
    w.t20 = parse_grammar(in.t20_source);
    w.heldout = parse_grammar(in.heldout_source);

    std::vector<long> counts;
    counts.reserve(w.corpus.train.size());
    for (const auto& t : w.corpus.train) counts.push_back(static_cast<long>(ws_token_count(t.text)));
    w.cutoffs = derive_balanced_cutoffs(counts, cfg.n_len);

    w.schema = make_schema_with_cutoffs(w.pcfg, in.meta, w.cutoffs);
    w.train = to_examples(w.corpus.train, w.schema, "synthetic-train");
    w.test = to_examples(w.corpus.test, w.schema, "synthetic-test");
    return w;
}

// ---- discriminator training data -----------------------------------------

// Prefix/class pairs for the categorical discriminators. Full-text
// prefixes get a trailing <eos> so the models can learn when stopping
// satisfies a length target -- the same convention the pair builder and
// the decode adapters use.
struct AttrPrefixData {
    std::vector<std::pair<std::vector<std::string>, int>> label_pairs;
    std::vector<std::pair<std::vector<std::string>, int>> length_pairs;
};

inline AttrPrefixData make_attr_prefix_data(const std::vector<Example>& examples,
                                            const PrefixPolicy& policy, std::uint64_t seed) {
    AttrPrefixData out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const Example& e = examples[i];
        Rng rng = Rng::substream(seed, i);
        auto tokens = ws_tokenize(e.text);
        if (tokens.empty()) continue;
        std::size_t limit = std::min(tokens.size(), policy.max_prefix);
        std::vector<std::size_t> lens;
        for (std::size_t len = 1; len <= limit; ++len)
            if (rng.uniform01() < policy.sample_rate) lens.push_back(len);
        if (policy.always_include_full || lens.empty()) {
            std::size_t full = std::min(tokens.size(), policy.max_prefix);
            if (std::find(lens.begin(), lens.end(), full) == lens.end()) lens.push_back(full);
        }
        for (std::size_t len : lens) {
            std::vector<std::string> prefix(tokens.begin(), tokens.begin() + len);
            if (len == tokens.size()) prefix.push_back("<eos>");
            out.label_pairs.push_back({prefix, e.label_id});
            if (!e.length_suppressed) out.length_pairs.push_back({prefix, e.length_id});
        }
    }
    return out;
}

inline std::vector<AlignmentPair> to_alignment_pairs(const std::vector<PairExample>& pairs) {
    std::vector<AlignmentPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        AlignmentPair a;
        a.command_tokens = ws_tokenize(p.command_text);
        a.prefix_tokens = p.prefix_tokens;
        if (p.is_full_text) a.prefix_tokens.push_back("<eos>");
        a.y = p.y;
        out.push_back(std::move(a));
    }
    return out;
}

// ---- trained model bundle -------------------------------------------------

struct TrainedModels {
    NGramLm base_lm;    // plain text LM
    NGramLm prefix_lm;  // command <sep> text LM
    NaiveBayesDiscriminator nb_label;
    NaiveBayesDiscriminator nb_length;
    BinaryHeads heads_label;
    BinaryHeads heads_length;
    AlignmentModel align;
    double align_train_acc = 0.0;
    bool has_categorical = false;
    bool has_alignment = false;
};

struct TrainFlags {
    bool categorical = true;  // NB + binary heads (impossible on zero-shot splits)
    bool alignment = true;
};

inline TrainedModels train_models(const SplitBundle& split, const Grammar& command_grammar,
                                  const AttributeSchema& schema, const E2EConfig& cfg,
                                  std::uint64_t seed, const TrainFlags& flags = {}) {
    TrainedModels m;

    std::vector<std::vector<std::string>> lm_corpus;
    lm_corpus.reserve(split.train_lm.size());
    for (const auto& e : split.train_lm) lm_corpus.push_back(ws_tokenize(e.text));
    m.base_lm = train_ngram(lm_corpus, cfg.lm_order, cfg.lm_alpha);

    auto cmd_records = make_command_dataset(split, command_grammar, schema,
                                            Rng::substream(seed, 1).next_u64());
    std::vector<std::vector<std::string>> prefix_corpus;
    prefix_corpus.reserve(cmd_records.size());
    for (const auto& r : cmd_records) {
        auto seq = ws_tokenize(r.command.text);
        seq.push_back("<sep>");
        auto text = ws_tokenize(r.text);
        seq.insert(seq.end(), text.begin(), text.end());
        prefix_corpus.push_back(std::move(seq));
    }
    m.prefix_lm = train_ngram(prefix_corpus, cfg.lm_order, cfg.lm_alpha);

    if (flags.categorical) {
        auto attr_data = make_attr_prefix_data(split.train_supervised, cfg.prefix_policy,
                                               Rng::substream(seed, 2).next_u64());
        m.nb_label = train_nb(attr_data.label_pairs, static_cast<int>(schema.labels.size()),
                              cfg.nb_laplace);
        m.nb_length = train_nb(attr_data.length_pairs, static_cast<int>(schema.lengths.size()),
                               cfg.nb_laplace);
        m.heads_label = train_binary_heads(attr_data.label_pairs,
                                           static_cast<int>(schema.labels.size()), cfg.nb_laplace);
        m.heads_length = train_binary_heads(attr_data.length_pairs,
                                            static_cast<int>(schema.lengths.size()),
                                            cfg.nb_laplace);
        m.has_categorical = true;
    }

    if (flags.alignment) {
        auto pairs = make_pair_dataset(split, command_grammar, schema, cfg.prefix_policy,
                                       Rng::substream(seed, 3).next_u64());
        AlignmentTrainConfig acfg;
        acfg.epochs = cfg.alignment_epochs;
        acfg.learning_rate = cfg.alignment_lr;
        acfg.l2 = cfg.alignment_l2;
        acfg.schedule = SgdSchedule::AdaGrad;
        acfg.seed = Rng::substream(seed, 4).next_u64();
        auto result = train_alignment(to_alignment_pairs(pairs), acfg);
        m.align = std::move(result.model);
        m.align_train_acc = result.train_accuracy;
        m.has_alignment = true;
    }
    return m;
}

// ---- decode-time alignment adapter with command-side caching --------------

// Binds one command (as words, so held-out command vocabulary survives) to
// the alignment model and caches per-prefix-feature weight sums. Scoring a
// candidate then costs O(|prefix|) map lookups instead of re-hashing the
// full command x prefix feature product.
class BoundAlignmentAdapter : public AlignmentDiscriminator {
  public:
    BoundAlignmentAdapter(const AlignmentModel& model, const Vocabulary& vocab,
                          std::vector<std::string> command_tokens)
        : model_(model), vocab_(vocab), ctx_(command_feature_context(command_tokens)) {
        base_z_ = model_.bias();
        for (const auto& f : ctx_.own) base_z_ += weight_of(f);
    }

    double alignment_probability(std::span<const TokenId> /*command*/,
                                 std::span<const TokenId> prefix) const override {
        auto words = vocab_.decode(prefix);
        double z = base_z_;
        for (const auto& pf : prefix_features(words)) {
            z += weight_of(pf);
            if (pf.rfind("b:", 0) != 0) z += paired_weight(pf);
        }
        return 1.0 / (1.0 + std::exp(-z));
    }

  private:
    double weight_of(const std::string& feature) const {
        auto [it, inserted] = feat_cache_.try_emplace(feature, 0.0);
        if (inserted)
            it->second = model_.weights()[fnv1a64(feature, model_.hash_seed()) % model_.dim()];
        return it->second;
    }

    double paired_weight(const std::string& pf) const {
        auto [it, inserted] = pair_cache_.try_emplace(pf, 0.0);
        if (inserted) {
            double z = 0.0;
            for (const auto& cb : ctx_.bigrams) z += weight_of("xb:" + cb + "~" + pf);
            for (const auto& ct : ctx_.trigrams) z += weight_of("xt:" + ct + "~" + pf);
            it->second = z;
        }
        return it->second;
    }

    const AlignmentModel& model_;
    const Vocabulary& vocab_;
    CommandFeatureContext ctx_;
    double base_z_ = 0.0;
    mutable std::unordered_map<std::string, double> feat_cache_;
    mutable std::unordered_map<std::string, double> pair_cache_;
};

// ---- decoding harness -----------------------------------------------------

struct EvalSpec {
    DecodeMethod method = DecodeMethod::PrefixOnly;
    double lambda = 1.0;
    const Grammar* command_grammar = nullptr;  // for prefix / fudge-nl commands
    const AlignmentModel* align_override = nullptr;
};

struct GeneratedSample {
    std::string text;
    long token_count = 0;
    AttrSpec target;
    std::string command_text;
};

inline GeneratedSample generate_one(const E2EConfig& cfg, const TrainedModels& m,
                                    const AttributeSchema& schema, const EvalSpec& spec,
                                    const AttrSpec& target, std::uint64_t seed) {
    GeneratedSample out;
    out.target = target;

    const bool needs_command =
        spec.method == DecodeMethod::PrefixOnly || spec.method == DecodeMethod::FudgeNl;
    std::vector<std::string> cmd_tokens;
    if (needs_command) {
        if (spec.command_grammar == nullptr)
            throw DecodeError("ControlMismatch: method needs a command grammar");
        Rng crng = Rng::substream(seed, 1);
        Command cmd = generate_command(*spec.command_grammar, schema, target, crng);
        out.command_text = cmd.text;
        cmd_tokens = ws_tokenize(cmd.text);
    }

    const NGramLm& base = spec.method == DecodeMethod::PrefixOnly ? m.prefix_lm : m.base_lm;

    DecodeConfig dc;
    dc.method = spec.method;
    dc.k = cfg.decode_k;
    dc.lambda = spec.lambda;
    dc.candidate_cap = cfg.candidate_cap;
    dc.max_new_tokens = cfg.max_new_tokens;
    dc.seed = Rng::substream(seed, 2).next_u64();

    ControlSpec control;
    TokenSeq prompt;
    std::optional<NbAttrAdapter> nb_label_ad, nb_length_ad;
    std::optional<BinaryHeadsAdapter> hd_label_ad, hd_length_ad;
    std::optional<BoundAlignmentAdapter> align_ad;

    switch (spec.method) {
        case DecodeMethod::PrefixOnly: {
            prompt = base.vocab().encode(cmd_tokens);
            prompt.push_back(Vocabulary::kSep);
            break;
        }
        case DecodeMethod::Fudge: {
            if (!m.has_categorical) throw DecodeError("ControlMismatch: no categorical models");
            if (target.label_id) {
                nb_label_ad.emplace(m.nb_label, base.vocab());
                control.attr_targets.push_back({&*nb_label_ad, *target.label_id});
            }
            if (target.length_id) {
                nb_length_ad.emplace(m.nb_length, base.vocab());
                control.attr_targets.push_back({&*nb_length_ad, *target.length_id});
            }
            break;
        }
        case DecodeMethod::FudgeBinary: {
            if (!m.has_categorical) throw DecodeError("ControlMismatch: no categorical models");
            if (target.label_id) {
                hd_label_ad.emplace(m.heads_label, base.vocab());
                control.binary_targets.push_back({&*hd_label_ad, *target.label_id});
            }
            if (target.length_id) {
                hd_length_ad.emplace(m.heads_length, base.vocab());
                control.binary_targets.push_back({&*hd_length_ad, *target.length_id});
            }
            break;
        }
        case DecodeMethod::FudgeNl: {
            const AlignmentModel* model = spec.align_override;
            if (model == nullptr) {
                if (!m.has_alignment) throw DecodeError("ControlMismatch: no alignment model");
                model = &m.align;
            }
            align_ad.emplace(*model, base.vocab(), cmd_tokens);
            control.alignment = &*align_ad;
            prompt = base.vocab().encode(cmd_tokens);
            prompt.push_back(Vocabulary::kSep);
            control.prefix_offset = prompt.size();
            break;
        }
    }

    TokenSeq generated = sample_sequence(dc, base, control, prompt);
    auto words = base.vocab().decode(generated);
    out.text = join(words);
    out.token_count = static_cast<long>(words.size());
    return out;
}

inline std::vector<GeneratedSample> generate_many(const E2EConfig& cfg, const TrainedModels& m,
                                                  const AttributeSchema& schema,
                                                  const EvalSpec& spec,
                                                  const std::vector<AttrSpec>& targets,
                                                  std::uint64_t seed) {
    std::vector<GeneratedSample> out;
    out.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
        out.push_back(generate_one(cfg, m, schema, spec, targets[i],
                                   Rng::substream(seed, i).next_u64()));
    return out;
}

// Round-robin attribute targets drawn from a pool of evaluation examples.
inline std::vector<AttrSpec> targets_from_examples(const std::vector<Example>& pool,
                                                   std::size_t count) {
    if (pool.empty()) throw CorpusError("EmptyStratum: no evaluation examples");
    std::vector<AttrSpec> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        AttrSpec a;
        a.label_id = pool[i % pool.size()].label_id;
        a.length_id = pool[i % pool.size()].length_id;
        out.push_back(a);
    }
    return out;
}

// Every (label, length) combination, repeated until `count` targets.
inline std::vector<AttrSpec> all_combo_targets(const AttributeSchema& schema, std::size_t count) {
    std::vector<AttrSpec> combos;
    for (const auto& l : schema.labels)
        for (const auto& len : schema.lengths) {
            AttrSpec a;
            a.label_id = l.id;
            a.length_id = len.id;
            combos.push_back(a);
        }
    std::vector<AttrSpec> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(combos[i % combos.size()]);
    return out;
}

struct EvalOptions {
    bool with_bleu = false;
    bool with_entropy = false;
    bool with_ppl = false;
    std::vector<std::string> references;  // for BLEU
    const NGramLm* ppl_lm = nullptr;
};

inline MetricsReport score_samples(const std::vector<GeneratedSample>& samples,
                                   const AttributeSchema& schema, const LabelOracle& oracle,
                                   const EvalOptions& opts = {}) {
    std::vector<GenerationRecord> records;
    std::vector<std::string> texts;
    records.reserve(samples.size());
    for (const auto& s : samples) {
        records.push_back({s.target, s.text, s.token_count});
        texts.push_back(s.text);
    }
    MetricsReport rep;
    bool any_label = false, any_length = false;
    for (const auto& r : records) {
        any_label = any_label || r.target.label_id.has_value();
        any_length = any_length || r.target.length_id.has_value();
    }
    if (any_label) rep.label_acc = label_accuracy(records, oracle);
    if (any_length) rep.length_acc = length_accuracy(records, schema);
    if (any_label && any_length) rep.comp_acc = compositional_accuracy(records, oracle, schema);
    if (opts.with_bleu) rep.bleu = bleu4(texts, opts.references, /*smooth=*/true);
    if (opts.with_entropy) rep.entropy = entropy4(texts);
    if (opts.with_ppl && opts.ppl_lm != nullptr) {
        std::vector<std::vector<std::string>> toks;
        toks.reserve(texts.size());
        for (const auto& t : texts) toks.push_back(ws_tokenize(t));
        rep.ppl = opts.ppl_lm->perplexity(toks);
    }
    return rep;
}

// ---- named sub-experiments (reused by the acceptance suite) ---------------

// Criterion-10 shape: FUDGE label accuracy as a function of lambda.
inline std::map<double, double> fudge_lambda_sweep(const E2EConfig& cfg, const TrainedModels& m,
                                                   const SyntheticWorld& w,
                                                   const std::vector<double>& lambdas,
                                                   std::size_t generations, std::uint64_t seed) {
    std::vector<AttrSpec> targets;
    targets.reserve(generations);
    for (std::size_t i = 0; i < generations; ++i) {
        AttrSpec a;
        a.label_id = static_cast<int>(i % w.schema.labels.size());
        targets.push_back(a);
    }
    LabelOracle oracle = [&](const std::string& text) {
        return synthetic_label_oracle(text, static_cast<int>(w.schema.labels.size()));
    };
    std::map<double, double> out;
    for (double lambda : lambdas) {
        EvalSpec spec;
        spec.method = DecodeMethod::Fudge;
        spec.lambda = lambda;
        auto samples = generate_many(cfg, m, w.schema, spec, targets, seed);
        out[lambda] = *score_samples(samples, w.schema, oracle).label_acc;
    }
    return out;
}

struct TemplateGeneralizationResult {
    MetricsReport t20_metrics;
    MetricsReport pcfg_metrics;
    double t20_align_train_acc = 0.0;
    double pcfg_align_train_acc = 0.0;
    double gap() const { return *pcfg_metrics.comp_acc - *t20_metrics.comp_acc; }
};

// Criterion-9 shape: alignment discriminators trained on T20 vs PCFG
// commands, both evaluated with FUDGE-NL decoding driven by HELDOUT20
// commands.
inline TemplateGeneralizationResult run_template_generalization(const E2EConfig& cfg,
                                                                const SyntheticWorld& w,
                                                                const TrainedModels& base_models,
                                                                std::uint64_t seed) {
    SplitBundle split = build_split(w.train, SplitKind::template_set("T20"), SplitRatios{},
                                    Rng::substream(seed, 10).next_u64());

    AlignmentTrainConfig acfg;
    acfg.epochs = cfg.alignment_epochs;
    acfg.learning_rate = cfg.alignment_lr;
    acfg.l2 = cfg.alignment_l2;
    acfg.schedule = SgdSchedule::AdaGrad;

    auto train_regime = [&](const Grammar& g, std::uint64_t s) {
        auto pairs = make_pair_dataset(split, g, w.schema, cfg.prefix_policy, s);
        acfg.seed = Rng::substream(s, 1).next_u64();
        return train_alignment(to_alignment_pairs(pairs), acfg);
    };
    auto t20 = train_regime(w.t20.grammar, Rng::substream(seed, 11).next_u64());
    auto pcfg = train_regime(w.pcfg.grammar, Rng::substream(seed, 12).next_u64());

    auto targets = all_combo_targets(w.schema, cfg.heldout_generations);
    LabelOracle oracle = [&](const std::string& text) {
        return synthetic_label_oracle(text, static_cast<int>(w.schema.labels.size()));
    };
    auto eval_regime = [&](const AlignmentModel& model) {
        EvalSpec spec;
        spec.method = DecodeMethod::FudgeNl;
        spec.lambda = cfg.lambda;
        spec.command_grammar = &w.heldout.grammar;
        spec.align_override = &model;
        auto samples = generate_many(cfg, base_models, w.schema, spec, targets,
                                     Rng::substream(seed, 13).next_u64());
        return score_samples(samples, w.schema, oracle);
    };

    TemplateGeneralizationResult out;
    out.t20_align_train_acc = t20.train_accuracy;
    out.pcfg_align_train_acc = pcfg.train_accuracy;
    out.t20_metrics = eval_regime(t20.model);
    out.pcfg_metrics = eval_regime(pcfg.model);
    return out;
}

// ---- the consolidated end-to-end run --------------------------------------

inline nlohmann::json run_synthetic_e2e(const E2EConfig& cfg, const E2EInputs& in) {
    SyntheticWorld w = build_synthetic_world(cfg, in);
    LabelOracle oracle = [&](const std::string& text) {
        return synthetic_label_oracle(text, static_cast<int>(w.schema.labels.size()));
    };

    nlohmann::json report;
    report["config"] = {
        {"seed", cfg.seed},
        {"train_size", cfg.train_size},
        {"test_size", cfg.test_size},
        {"length_cutoffs", w.cutoffs},
        {"lambda", cfg.lambda},
        {"k", cfg.decode_k},
        {"candidate_cap", cfg.candidate_cap},
        {"generator", Rng::generator_id()},
        {"tokenizer", w.schema.tokenizer_id},
        {"pcfg_hash", w.pcfg.grammar.source_hash},
    };

    // --- block 1: full data, all four methods ------------------------------
    SplitBundle full_split = build_split(w.train, SplitKind::full(), SplitRatios{},
                                         Rng::substream(cfg.seed, 100).next_u64());
    TrainedModels full_models =
        train_models(full_split, w.pcfg.grammar, w.schema, cfg,
                     Rng::substream(cfg.seed, 101).next_u64());

    std::vector<std::string> references;
    {
        Rng ref_rng = Rng::substream(cfg.seed, 102);
        for (std::size_t i = 0; i < std::min(cfg.bleu_references, w.test.size()); ++i)
            references.push_back(w.test[ref_rng.uniform_index(w.test.size())].text);
    }

    auto full_targets = targets_from_examples(w.test, cfg.full_generations);
    nlohmann::json full_block;
    for (DecodeMethod method : {DecodeMethod::PrefixOnly, DecodeMethod::Fudge,
                                DecodeMethod::FudgeBinary, DecodeMethod::FudgeNl}) {
        EvalSpec spec;
        spec.method = method;
        spec.lambda = method == DecodeMethod::PrefixOnly ? 0.0 : cfg.lambda;
        spec.command_grammar = &w.pcfg.grammar;
        auto samples = generate_many(cfg, full_models, w.schema, spec, full_targets,
                                     Rng::substream(cfg.seed, 103).next_u64());
        EvalOptions opts;
        opts.with_bleu = true;
        opts.with_entropy = true;
        opts.with_ppl = true;
        opts.references = references;
        opts.ppl_lm = &full_models.base_lm;
        full_block[decode_method_name(method)] =
            score_samples(samples, w.schema, oracle, opts).to_json();
    }
    report["full_data"] = std::move(full_block);

    // --- block 2: T20 vs PCFG on held-out templates ------------------------
    auto tg = run_template_generalization(cfg, w, full_models,
                                          Rng::substream(cfg.seed, 104).next_u64());
    report["template_generalization"] = {
        {"t20",
         {{"comp_acc", *tg.t20_metrics.comp_acc},
          {"label_acc", *tg.t20_metrics.label_acc},
          {"length_acc", *tg.t20_metrics.length_acc},
          {"align_train_acc", tg.t20_align_train_acc}}},
        {"pcfg",
         {{"comp_acc", *tg.pcfg_metrics.comp_acc},
          {"label_acc", *tg.pcfg_metrics.label_acc},
          {"length_acc", *tg.pcfg_metrics.length_acc},
          {"align_train_acc", tg.pcfg_align_train_acc}}},
        {"gap_comp_acc", tg.gap()},
    };

    // --- block 3: zero-shot strata (NL methods only) -----------------------
    nlohmann::json zs_block;
    {
        const int blocked = 0;
        for (bool unblock_lm : {false, true}) {
            SplitBundle zs_split =
                build_split(w.train, SplitKind::zero_shot(blocked, unblock_lm), SplitRatios{},
                            Rng::substream(cfg.seed, 105).next_u64());
            TrainFlags flags;
            flags.categorical = false;  // blocked class has no discriminator data
            TrainedModels zs_models =
                train_models(zs_split, w.pcfg.grammar, w.schema, cfg,
                             Rng::substream(cfg.seed, 106).next_u64(), flags);

            std::vector<Example> zs_pool, reg_pool;
            for (const auto& e : w.test)
                (e.label_id == blocked ? zs_pool : reg_pool).push_back(e);
            auto zs_targets = targets_from_examples(zs_pool, cfg.zs_generations);
            auto reg_targets = targets_from_examples(reg_pool, cfg.zs_generations);

            nlohmann::json variant;
            for (DecodeMethod method : {DecodeMethod::PrefixOnly, DecodeMethod::FudgeNl}) {
                EvalSpec spec;
                spec.method = method;
                spec.lambda = method == DecodeMethod::PrefixOnly ? 0.0 : cfg.lambda;
                spec.command_grammar = &w.pcfg.grammar;
                MetricsReport rep;
                rep.strata["Z.S."] = score_samples(
                    generate_many(cfg, zs_models, w.schema, spec, zs_targets,
                                  Rng::substream(cfg.seed, 107).next_u64()),
                    w.schema, oracle);
                rep.strata["Reg."] = score_samples(
                    generate_many(cfg, zs_models, w.schema, spec, reg_targets,
                                  Rng::substream(cfg.seed, 108).next_u64()),
                    w.schema, oracle);
                variant[decode_method_name(method)] = rep.to_json();
            }
            zs_block[unblock_lm ? "unblock_lm" : "blocked"] = std::move(variant);
        }
        zs_block["blocked_label"] = blocked;
    }
    report["zero_shot"] = std::move(zs_block);

    // --- block 4: compositional split with Orig./Test/Diff structure -------
    nlohmann::json comp_block;
    {
        const int noncomp = 0;
        SplitBundle comp_split = build_split(w.train, SplitKind::compositional(noncomp),
                                             SplitRatios{},
                                             Rng::substream(cfg.seed, 109).next_u64());
        fill_comp_targets(comp_split, w.schema);
        TrainedModels comp_models =
            train_models(comp_split, w.pcfg.grammar, w.schema, cfg,
                         Rng::substream(cfg.seed, 110).next_u64());

        std::vector<AttrSpec> targets;
        for (std::size_t i = 0; i < cfg.comp_generations; ++i)
            targets.push_back(comp_split.comp_test_targets[i % comp_split.comp_test_targets.size()]);

        for (DecodeMethod method : {DecodeMethod::PrefixOnly, DecodeMethod::FudgeNl}) {
            EvalSpec spec;
            spec.method = method;
            spec.lambda = method == DecodeMethod::PrefixOnly ? 0.0 : cfg.lambda;
            spec.command_grammar = &w.pcfg.grammar;
            double test_acc = *score_samples(
                                   generate_many(cfg, comp_models, w.schema, spec, targets,
                                                 Rng::substream(cfg.seed, 111).next_u64()),
                                   w.schema, oracle)
                                   .comp_acc;
            double orig_acc = *score_samples(
                                   generate_many(cfg, full_models, w.schema, spec, targets,
                                                 Rng::substream(cfg.seed, 112).next_u64()),
                                   w.schema, oracle)
                                   .comp_acc;
            comp_block[decode_method_name(method)] = {
                {"orig", orig_acc}, {"test", test_acc}, {"diff", orig_acc - test_acc}};
        }
        comp_block["noncomp_label"] = noncomp;
    }
    report["compositional"] = std::move(comp_block);

    return report;
}

}  // namespace nlctg
