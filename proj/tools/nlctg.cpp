// nlctg -- command-line front end for the PCFG command toolkit.
//
// Subcommands: grammar-check, generate, split, pairs, train, decode, eval,
// synthetic-e2e. Every data-producing subcommand writes JSONL plus a run
// manifest recording the effective config, input hashes, and seed.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlctg/command_gen.hpp"
#include "nlctg/corpus.hpp"
#include "nlctg/decode.hpp"
#include "nlctg/experiment.hpp"
#include "nlctg/grammar.hpp"
#include "nlctg/hash.hpp"
#include "nlctg/metrics.hpp"
#include "nlctg/models.hpp"
#include "nlctg/schema.hpp"
#include "nlctg/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nlctg;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
}

struct ManifestBuilder {
    json j;

    ManifestBuilder(const std::string& subcommand, std::uint64_t seed) {
        j["subcommand"] = subcommand;
        j["seed"] = seed;
        j["version"] = kVersion;
        j["generator"] = Rng::generator_id();
        j["timestamp"] = iso_timestamp();
        j["inputs"] = json::object();
        j["config"] = json::object();
        j["outputs"] = json::array();
    }

    void input(const std::string& name, const std::string& path, const std::string& content) {
        j["inputs"][name] = {{"path", path}, {"sha256", Sha256::of(content)}};
    }
    void config(const std::string& key, json value) { j["config"][key] = std::move(value); }
    void output(const fs::path& path) { j["outputs"].push_back(path.string()); }

    void write(const fs::path& out_dir, const std::string& stem) {
        write_file(out_dir / (stem + "_manifest.json"), j.dump(2) + "\n");
    }
};

AttributeSchema schema_from_files(const std::string& grammar_source,
                                  const std::string& meta_source,
                                  const ParsedGrammarFile** parsed_out,
                                  ParsedGrammarFile& storage) {
    storage = parse_grammar(grammar_source);
    if (parsed_out) *parsed_out = &storage;
    return parse_schema(storage.label_section, storage.length_section,
                        parse_schema_meta(meta_source));
}

IngestResult ingest_path(const std::string& path, const AttributeSchema& schema,
                         const IngestOptions& opts) {
    std::string content = read_text_file(path);
    std::string source = fs::path(path).stem().string();
    if (fs::path(path).extension() == ".csv") return ingest_csv(content, schema, source, opts);
    return ingest_jsonl(content, schema, source, opts);
}

SplitKind parse_split_kind(const std::string& kind, const std::string& template_set, int blocked,
                           bool unblock_lm, int noncomp) {
    if (kind == "full") return SplitKind::full();
    if (kind == "template-set") return SplitKind::template_set(template_set);
    if (kind == "zero-shot") {
        if (blocked < 0) throw Error("zero-shot split needs --blocked <label id>");
        return SplitKind::zero_shot(blocked, unblock_lm);
    }
    if (kind == "compositional") {
        if (noncomp < 0) throw Error("compositional split needs --noncomp <label id>");
        return SplitKind::compositional(noncomp);
    }
    throw Error("unknown split kind: " + kind);
}

json example_ids(const std::vector<Example>& v) {
    json out = json::array();
    for (const auto& e : v) out.push_back(e.id);
    return out;
}

std::string command_jsonl(const std::vector<Command>& commands, std::uint64_t seed) {
    std::string out;
    for (const auto& c : commands) {
        json j;
        j["text"] = c.text;
        if (c.attrs.label_id) j["label_id"] = *c.attrs.label_id;
        if (c.attrs.length_id) j["length_id"] = *c.attrs.length_id;
        j["template_index"] = c.template_index;
        json deriv = json::array();
        for (const auto& s : c.derivation) deriv.push_back({s.lhs, s.alternative});
        j["derivation"] = std::move(deriv);
        j["slot_fills"] = c.slot_fills;
        j["grammar_hash"] = c.grammar_hash;
        j["seed"] = seed;
        out += j.dump() + "\n";
    }
    return out;
}

// ---- subcommand state -----------------------------------------------------

struct Options {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string config_path;

    std::string grammar_path;
    std::string meta_path;
    std::string input_path;
    std::string output_name;

    bool strict = false;

    std::size_t count = 100;
    int label = -1;
    int length = -1;

    std::string kind = "full";
    std::string template_set = "T20";
    int blocked = -1;
    bool unblock_lm = false;
    int noncomp = -1;
    double ratio_train = 0.8, ratio_val = 0.1, ratio_test = 0.1;
    long max_tokens = -1;
    int derive_cutoffs = 0;

    double pair_rate = 0.25;
    std::size_t pair_cap = 64;

    std::string model_kind = "ngram";
    int order = 3;
    double alpha = 0.1;
    double laplace = 1.0;
    int epochs = 5;
    double learning_rate = 0.1;

    std::string method = "prefix";
    int k = 20;
    double lambda = 1.0;
    int cap = 200;
    int max_new_tokens = 64;
    std::string lm_path;
    std::string nb_label_path, nb_length_path;
    std::string heads_label_path, heads_length_path;
    std::string alignment_path;
    std::string command_text;
    std::size_t generations = 1;

    std::string references_path;
    std::size_t e2e_size = 5000;
};

// Applies --config JSON values underneath explicit flags: flags win because
// CLI11 parses after the defaults are overwritten here.
void apply_config_file(Options& o) {
    if (o.config_path.empty()) return;
    json j = json::parse(read_text_file(o.config_path));
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seed", o.seed);
    get("k", o.k);
    get("lambda", o.lambda);
    get("cap", o.cap);
    get("max_new_tokens", o.max_new_tokens);
    get("order", o.order);
    get("alpha", o.alpha);
    get("laplace", o.laplace);
    get("epochs", o.epochs);
    get("learning_rate", o.learning_rate);
    get("pair_rate", o.pair_rate);
    get("pair_cap", o.pair_cap);
    get("max_tokens", o.max_tokens);
}

DecodeMethod parse_method(const std::string& name) {
    if (name == "prefix") return DecodeMethod::PrefixOnly;
    if (name == "fudge") return DecodeMethod::Fudge;
    if (name == "fudge-binary") return DecodeMethod::FudgeBinary;
    if (name == "fudge-nl") return DecodeMethod::FudgeNl;
    throw Error("unknown method: " + name);
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_grammar_check(const Options& o) {
    std::string source;
    try {
        source = read_text_file(o.grammar_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        ParsedGrammarFile parsed = parse_grammar(source);
        auto diagnostics = lint_grammar(parsed.grammar);
        for (const auto& d : diagnostics)
            std::cout << "warning: " << d.code << ": " << d.detail << "\n";
        std::cout << "ok: " << parsed.grammar.seed_templates.size() << " templates, "
                  << parsed.grammar.rules.size() << " rules, sha256 "
                  << parsed.grammar.source_hash << "\n";
        if (o.strict && !diagnostics.empty()) return 1;
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_generate(const Options& o) {
    std::string grammar_source = read_text_file(o.grammar_path);
    std::string meta_source = read_text_file(o.meta_path);
    ParsedGrammarFile storage;
    AttributeSchema schema = schema_from_files(grammar_source, meta_source, nullptr, storage);

    std::vector<AttrSpec> targets;
    if (o.label >= 0 || o.length >= 0) {
        AttrSpec a;
        if (o.label >= 0) a.label_id = o.label;
        if (o.length >= 0) a.length_id = o.length;
        targets.assign(o.count, a);
    } else {
        targets = all_combo_targets(schema, o.count);
    }
    auto commands = generate_batch(storage.grammar, schema, targets, o.seed);

    fs::path out = fs::path(o.out_dir) / (o.output_name.empty() ? "commands.jsonl" : o.output_name);
    write_file(out, command_jsonl(commands, o.seed));

    ManifestBuilder m("generate", o.seed);
    m.input("grammar", o.grammar_path, grammar_source);
    m.input("meta", o.meta_path, meta_source);
    m.config("count", o.count);
    if (o.label >= 0) m.config("label", o.label);
    if (o.length >= 0) m.config("length", o.length);
    m.output(out);
    m.write(o.out_dir, "generate");
    std::cout << "wrote " << commands.size() << " commands to " << out.string() << "\n";
    return 0;
}

int cmd_split(const Options& o) {
    std::string grammar_source = read_text_file(o.grammar_path);
    std::string meta_source = read_text_file(o.meta_path);
    std::string corpus_source = read_text_file(o.input_path);
    ParsedGrammarFile storage;
    AttributeSchema schema = schema_from_files(grammar_source, meta_source, nullptr, storage);

    IngestOptions iopts;
    iopts.max_tokens = o.max_tokens;
    auto ingested = ingest_path(o.input_path, schema, iopts);

    if (o.derive_cutoffs >= 2) {
        std::vector<long> counts;
        for (const auto& e : ingested.examples) counts.push_back(e.token_count);
        auto cutoffs = derive_balanced_cutoffs(counts, o.derive_cutoffs);
        for (std::size_t i = 0; i < cutoffs.size(); ++i) schema.lengths[i].cutoff = cutoffs[i];
        schema.finalize();
        for (auto& e : ingested.examples) e.length_id = schema.length_level_of(e.token_count);
    }

    SplitKind kind = parse_split_kind(o.kind, o.template_set, o.blocked, o.unblock_lm, o.noncomp);
    SplitRatios ratios{o.ratio_train, o.ratio_val, o.ratio_test};
    SplitBundle bundle = build_split(ingested.examples, kind, ratios, o.seed);
    fill_comp_targets(bundle, schema);

    json j;
    j["kind"] = o.kind;
    if (kind.type == SplitKind::Type::TemplateSet) j["template_set"] = o.template_set;
    if (kind.type == SplitKind::Type::ZeroShot) {
        j["blocked"] = o.blocked;
        j["unblock_lm"] = o.unblock_lm;
    }
    if (kind.type == SplitKind::Type::Compositional) j["noncomp"] = o.noncomp;
    j["seed"] = o.seed;
    j["grammar_hash"] = storage.grammar.source_hash;
    j["dropped_over_max_tokens"] = ingested.dropped;
    j["train_supervised"] = example_ids(bundle.train_supervised);
    j["train_lm"] = example_ids(bundle.train_lm);
    j["val"] = example_ids(bundle.val);
    j["test"] = example_ids(bundle.test);
    if (!bundle.test_zero_shot.empty()) {
        j["test_zero_shot"] = example_ids(bundle.test_zero_shot);
        j["test_regular"] = example_ids(bundle.test_regular);
    }
    if (!bundle.comp_test_targets.empty()) {
        json targets = json::array();
        for (const auto& t : bundle.comp_test_targets)
            targets.push_back({{"label_id", *t.label_id}, {"length_id", *t.length_id}});
        j["comp_test_targets"] = std::move(targets);
    }

    fs::path out = fs::path(o.out_dir) / (o.output_name.empty() ? "split.json" : o.output_name);
    write_file(out, j.dump(2) + "\n");

    ManifestBuilder m("split", o.seed);
    m.input("grammar", o.grammar_path, grammar_source);
    m.input("meta", o.meta_path, meta_source);
    m.input("corpus", o.input_path, corpus_source);
    m.config("kind", o.kind);
    m.config("ratios", {o.ratio_train, o.ratio_val, o.ratio_test});
    m.config("max_tokens", o.max_tokens);
    m.output(out);
    m.write(o.out_dir, "split");
    std::cout << "wrote split manifest to " << out.string() << "\n";
    return 0;
}

int cmd_pairs(const Options& o) {
    std::string grammar_source = read_text_file(o.grammar_path);
    std::string meta_source = read_text_file(o.meta_path);
    std::string corpus_source = read_text_file(o.input_path);
    ParsedGrammarFile storage;
    AttributeSchema schema = schema_from_files(grammar_source, meta_source, nullptr, storage);

    IngestOptions iopts;
    iopts.max_tokens = o.max_tokens;
    auto ingested = ingest_path(o.input_path, schema, iopts);
    SplitKind kind = parse_split_kind(o.kind, o.template_set, o.blocked, o.unblock_lm, o.noncomp);
    SplitBundle bundle = build_split(ingested.examples, kind,
                                     {o.ratio_train, o.ratio_val, o.ratio_test}, o.seed);

    PrefixPolicy policy;
    policy.sample_rate = o.pair_rate;
    policy.max_prefix = o.pair_cap;
    auto pairs = make_pair_dataset(bundle, storage.grammar, schema, policy, o.seed);

    std::string out_text;
    for (const auto& p : pairs) {
        json j;
        j["command"] = p.command_text;
        j["prefix"] = p.prefix_tokens;
        j["y"] = p.y;
        j["flip"] = flip_mask_name(p.flip_mask);
        j["is_full_text"] = p.is_full_text;
        j["example_id"] = p.example_id;
        out_text += j.dump() + "\n";
    }
    fs::path out = fs::path(o.out_dir) / (o.output_name.empty() ? "pairs.jsonl" : o.output_name);
    write_file(out, out_text);

    ManifestBuilder m("pairs", o.seed);
    m.input("grammar", o.grammar_path, grammar_source);
    m.input("meta", o.meta_path, meta_source);
    m.input("corpus", o.input_path, corpus_source);
    m.config("kind", o.kind);
    m.config("pair_rate", o.pair_rate);
    m.config("pair_cap", o.pair_cap);
    m.output(out);
    m.write(o.out_dir, "pairs");
    std::cout << "wrote " << pairs.size() << " pairs to " << out.string() << "\n";
    return 0;
}

int cmd_train(const Options& o) {
    ManifestBuilder m("train", o.seed);
    json model_json;

    if (o.model_kind == "ngram") {
        std::string corpus_source = read_text_file(o.input_path);
        m.input("corpus", o.input_path, corpus_source);
        // One whitespace-tokenized sequence per non-blank line; JSONL rows
        // with a "text" field are also accepted.
        std::vector<std::vector<std::string>> seqs;
        std::istringstream in(corpus_source);
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '{') {
                json j = json::parse(line);
                seqs.push_back(ws_tokenize(j.at("text").get<std::string>()));
            } else {
                seqs.push_back(ws_tokenize(line));
            }
        }
        model_json = train_ngram(seqs, o.order, o.alpha).to_json();
        m.config("order", o.order);
        m.config("alpha", o.alpha);
    } else if (o.model_kind == "alignment") {
        std::string pairs_source = read_text_file(o.input_path);
        m.input("pairs", o.input_path, pairs_source);
        std::vector<AlignmentPair> pairs;
        std::istringstream in(pairs_source);
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty()) continue;
            json j = json::parse(line);
            AlignmentPair p;
            p.command_tokens = ws_tokenize(j.at("command").get<std::string>());
            p.prefix_tokens = j.at("prefix").get<std::vector<std::string>>();
            if (j.value("is_full_text", false)) p.prefix_tokens.push_back("<eos>");
            p.y = j.at("y").get<int>();
            pairs.push_back(std::move(p));
        }
        AlignmentTrainConfig cfg;
        cfg.epochs = o.epochs;
        cfg.learning_rate = o.learning_rate;
        cfg.seed = o.seed;
        auto result = train_alignment(pairs, cfg);
        model_json = result.model.to_json();
        m.config("epochs", o.epochs);
        m.config("learning_rate", o.learning_rate);
        m.config("train_accuracy", result.train_accuracy);
        std::cout << "train accuracy " << result.train_accuracy << "\n";
    } else if (o.model_kind == "nb" || o.model_kind == "binary-heads") {
        // Input: pairs JSONL; class = label_id (or length_id via --length).
        std::string pairs_source = read_text_file(o.input_path);
        m.input("pairs", o.input_path, pairs_source);
        std::vector<std::pair<std::vector<std::string>, int>> data;
        int num_classes = 0;
        std::istringstream in(pairs_source);
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty()) continue;
            json j = json::parse(line);
            auto prefix = j.at("prefix").get<std::vector<std::string>>();
            if (j.value("is_full_text", false)) prefix.push_back("<eos>");
            int cls = j.at("class").get<int>();
            num_classes = std::max(num_classes, cls + 1);
            data.push_back({std::move(prefix), cls});
        }
        model_json = o.model_kind == "nb"
                         ? train_nb(data, num_classes, o.laplace).to_json()
                         : train_binary_heads(data, num_classes, o.laplace).to_json();
        m.config("laplace", o.laplace);
    } else {
        throw Error("unknown model kind: " + o.model_kind);
    }

    fs::path out = fs::path(o.out_dir) / (o.output_name.empty() ? "model.json" : o.output_name);
    write_file(out, model_json.dump() + "\n");
    m.config("model", o.model_kind);
    m.output(out);
    m.write(o.out_dir, "train");
    std::cout << "wrote model to " << out.string() << "\n";
    return 0;
}

int cmd_decode(const Options& o) {
    std::string lm_source = read_text_file(o.lm_path);
    NGramLm lm = NGramLm::from_json(json::parse(lm_source));

    DecodeConfig dc;
    dc.method = parse_method(o.method);
    dc.k = o.k;
    dc.lambda = o.lambda;
    dc.candidate_cap = o.cap;
    dc.max_new_tokens = o.max_new_tokens;

    ManifestBuilder m("decode", o.seed);
    m.input("lm", o.lm_path, lm_source);
    m.config("method", o.method);
    m.config("k", o.k);
    m.config("lambda", o.lambda);
    m.config("cap", o.cap);

    std::optional<NaiveBayesDiscriminator> nb_label, nb_length;
    std::optional<BinaryHeads> heads_label, heads_length;
    std::optional<AlignmentModel> alignment;
    std::optional<NbAttrAdapter> nb_label_ad, nb_length_ad;
    std::optional<BinaryHeadsAdapter> hd_label_ad, hd_length_ad;
    std::optional<BoundAlignmentAdapter> align_ad;

    ControlSpec control;
    TokenSeq prompt;
    std::vector<std::string> cmd_tokens = ws_tokenize(o.command_text);

    switch (dc.method) {
        case DecodeMethod::PrefixOnly:
            if (!cmd_tokens.empty()) {
                prompt = lm.vocab().encode(cmd_tokens);
                prompt.push_back(Vocabulary::kSep);
            }
            break;
        case DecodeMethod::Fudge:
            if (o.label >= 0) {
                std::string src = read_text_file(o.nb_label_path);
                m.input("nb_label", o.nb_label_path, src);
                nb_label = NaiveBayesDiscriminator::from_json(json::parse(src));
                nb_label_ad.emplace(*nb_label, lm.vocab());
                control.attr_targets.push_back({&*nb_label_ad, o.label});
            }
            if (o.length >= 0) {
                std::string src = read_text_file(o.nb_length_path);
                m.input("nb_length", o.nb_length_path, src);
                nb_length = NaiveBayesDiscriminator::from_json(json::parse(src));
                nb_length_ad.emplace(*nb_length, lm.vocab());
                control.attr_targets.push_back({&*nb_length_ad, o.length});
            }
            break;
        case DecodeMethod::FudgeBinary:
            if (o.label >= 0) {
                std::string src = read_text_file(o.heads_label_path);
                m.input("heads_label", o.heads_label_path, src);
                heads_label = BinaryHeads::from_json(json::parse(src));
                hd_label_ad.emplace(*heads_label, lm.vocab());
                control.binary_targets.push_back({&*hd_label_ad, o.label});
            }
            if (o.length >= 0) {
                std::string src = read_text_file(o.heads_length_path);
                m.input("heads_length", o.heads_length_path, src);
                heads_length = BinaryHeads::from_json(json::parse(src));
                hd_length_ad.emplace(*heads_length, lm.vocab());
                control.binary_targets.push_back({&*hd_length_ad, o.length});
            }
            break;
        case DecodeMethod::FudgeNl: {
            std::string src = read_text_file(o.alignment_path);
            m.input("alignment", o.alignment_path, src);
            alignment = AlignmentModel::from_json(json::parse(src));
            align_ad.emplace(*alignment, lm.vocab(), cmd_tokens);
            control.alignment = &*align_ad;
            prompt = lm.vocab().encode(cmd_tokens);
            prompt.push_back(Vocabulary::kSep);
            control.prefix_offset = prompt.size();
            break;
        }
    }

    std::string out_text;
    for (std::size_t i = 0; i < o.generations; ++i) {
        dc.seed = Rng::substream(o.seed, i).next_u64();
        TokenSeq generated = sample_sequence(dc, lm, control, prompt);
        auto words = lm.vocab().decode(generated);
        json j;
        j["generated_text"] = join(words);
        j["token_count"] = words.size();
        j["method"] = o.method;
        j["lambda"] = o.lambda;
        j["k"] = o.k;
        j["seed"] = dc.seed;
        if (!o.command_text.empty()) j["command"] = o.command_text;
        if (o.label >= 0) j["label_id"] = o.label;
        if (o.length >= 0) j["length_id"] = o.length;
        out_text += j.dump() + "\n";
    }

    fs::path out = fs::path(o.out_dir) / (o.output_name.empty() ? "decoded.jsonl" : o.output_name);
    write_file(out, out_text);
    m.output(out);
    m.write(o.out_dir, "decode");
    std::cout << "wrote " << o.generations << " generations to " << out.string() << "\n";
    return 0;
}

int cmd_eval(const Options& o) {
    std::string grammar_source = read_text_file(o.grammar_path);
    std::string meta_source = read_text_file(o.meta_path);
    std::string gen_source = read_text_file(o.input_path);
    ParsedGrammarFile storage;
    AttributeSchema schema = schema_from_files(grammar_source, meta_source, nullptr, storage);

    std::vector<GenerationRecord> records;
    std::vector<std::string> texts;
    std::istringstream in(gen_source);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        json j = json::parse(line);
        GenerationRecord r;
        r.text = j.at("generated_text").get<std::string>();
        r.token_count = static_cast<long>(ws_token_count(r.text));
        if (j.contains("label_id")) r.target.label_id = j.at("label_id").get<int>();
        if (j.contains("length_id")) r.target.length_id = j.at("length_id").get<int>();
        texts.push_back(r.text);
        records.push_back(std::move(r));
    }
    if (records.empty()) throw Error("eval: no generation records in " + o.input_path);

    LabelOracle oracle = [&](const std::string& text) {
        return synthetic_label_oracle(text, static_cast<int>(schema.labels.size()));
    };
    MetricsReport rep;
    bool any_label = false, any_length = false;
    for (const auto& r : records) {
        any_label = any_label || r.target.label_id.has_value();
        any_length = any_length || r.target.length_id.has_value();
    }
    if (any_label) rep.label_acc = label_accuracy(records, oracle);
    if (any_length) rep.length_acc = length_accuracy(records, schema);
    if (any_label && any_length) rep.comp_acc = compositional_accuracy(records, oracle, schema);
    try {
        rep.entropy = entropy4(texts);
    } catch (const MetricError&) {
    }

    ManifestBuilder m("eval", o.seed);
    m.input("grammar", o.grammar_path, grammar_source);
    m.input("meta", o.meta_path, meta_source);
    m.input("generations", o.input_path, gen_source);
    if (!o.references_path.empty()) {
        std::string ref_source = read_text_file(o.references_path);
        m.input("references", o.references_path, ref_source);
        std::vector<std::string> refs;
        std::istringstream rin(ref_source);
        std::string rline;
        while (std::getline(rin, rline)) {
            rline = trim(rline);
            if (rline.empty()) continue;
            if (rline.front() == '{')
                refs.push_back(json::parse(rline).at("text").get<std::string>());
            else
                refs.push_back(rline);
        }
        rep.bleu = bleu4(texts, refs, /*smooth=*/true);
    }

    fs::path out = fs::path(o.out_dir) / (o.output_name.empty() ? "eval.json" : o.output_name);
    write_file(out, rep.to_json().dump(2) + "\n");
    m.output(out);
    m.write(o.out_dir, "eval");
    std::cout << rep.to_json().dump(2) << "\n";
    return 0;
}

int cmd_synthetic_e2e(const Options& o, const std::string& data_dir, bool lambda_set) {
    E2EConfig cfg;
    cfg.seed = o.seed == 0 ? 17 : o.seed;
    cfg.train_size = o.e2e_size;
    cfg.test_size = std::max<std::size_t>(o.e2e_size / 5, 60);
    if (lambda_set) cfg.lambda = o.lambda;

    E2EInputs in;
    in.pcfg_source = read_text_file(data_dir + "/synthetic.grammar");
    in.t20_source = read_text_file(data_dir + "/templates_t20.grammar");
    in.heldout_source = read_text_file(data_dir + "/templates_heldout20.grammar");
    in.meta = parse_schema_meta(read_text_file(data_dir + "/synthetic_meta.json"));

    json report = run_synthetic_e2e(cfg, in);

    fs::path out = fs::path(o.out_dir) / (o.output_name.empty() ? "e2e_report.json" : o.output_name);
    write_file(out, report.dump(2) + "\n");

    ManifestBuilder m("synthetic-e2e", cfg.seed);
    m.input("pcfg", data_dir + "/synthetic.grammar", in.pcfg_source);
    m.input("t20", data_dir + "/templates_t20.grammar", in.t20_source);
    m.input("heldout", data_dir + "/templates_heldout20.grammar", in.heldout_source);
    m.config("train_size", cfg.train_size);
    m.config("test_size", cfg.test_size);
    m.config("lambda", cfg.lambda);
    m.output(out);
    m.write(o.out_dir, "synthetic_e2e");
    std::cout << "wrote report to " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nlctg: PCFG command toolkit for controlled text generation"};
    app.require_subcommand(1);
    Options o;
    std::string data_dir = "data";

    app.add_option("--seed", o.seed, "random seed")->capture_default_str();
    app.add_option("--config", o.config_path, "JSON config file");
    app.add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();

    auto* check = app.add_subcommand("grammar-check", "parse and lint a grammar file");
    check->add_option("grammar", o.grammar_path, "grammar file")->required();
    check->add_flag("--strict", o.strict, "treat lint warnings as errors");

    auto* gen = app.add_subcommand("generate", "generate commands from a grammar");
    gen->add_option("--grammar", o.grammar_path)->required();
    gen->add_option("--meta", o.meta_path, "schema sidecar JSON")->required();
    gen->add_option("--count", o.count)->capture_default_str();
    gen->add_option("--label", o.label, "fixed label id");
    gen->add_option("--length", o.length, "fixed length level id");
    gen->add_option("--out", o.output_name, "output file name");

    auto* split = app.add_subcommand("split", "build a train/val/test split");
    split->add_option("--input", o.input_path, "corpus JSONL or CSV")->required();
    split->add_option("--grammar", o.grammar_path)->required();
    split->add_option("--meta", o.meta_path)->required();
    split->add_option("--kind", o.kind, "full | template-set | zero-shot | compositional")
        ->capture_default_str();
    split->add_option("--template-set", o.template_set, "T20 | T40 | HELDOUT20");
    split->add_option("--blocked", o.blocked, "zero-shot blocked label id");
    split->add_flag("--unblock-lm", o.unblock_lm, "keep blocked class in the LM stream");
    split->add_option("--noncomp", o.noncomp, "compositional non-comp label id");
    split->add_option("--train-ratio", o.ratio_train)->capture_default_str();
    split->add_option("--val-ratio", o.ratio_val)->capture_default_str();
    split->add_option("--test-ratio", o.ratio_test)->capture_default_str();
    split->add_option("--max-tokens", o.max_tokens, "drop longer examples");
    split->add_option("--derive-cutoffs", o.derive_cutoffs,
                      "re-derive balanced length cutoffs for n levels");
    split->add_option("--out", o.output_name);

    auto* pairs = app.add_subcommand("pairs", "build discriminator pair data");
    pairs->add_option("--input", o.input_path)->required();
    pairs->add_option("--grammar", o.grammar_path)->required();
    pairs->add_option("--meta", o.meta_path)->required();
    pairs->add_option("--kind", o.kind)->capture_default_str();
    pairs->add_option("--blocked", o.blocked);
    pairs->add_flag("--unblock-lm", o.unblock_lm);
    pairs->add_option("--noncomp", o.noncomp);
    pairs->add_option("--rate", o.pair_rate, "prefix sampling rate")->capture_default_str();
    pairs->add_option("--cap", o.pair_cap, "prefix length cap")->capture_default_str();
    pairs->add_option("--max-tokens", o.max_tokens);
    pairs->add_option("--out", o.output_name);

    auto* train = app.add_subcommand("train", "train a reference model");
    train->add_option("--model", o.model_kind, "ngram | nb | binary-heads | alignment")
        ->capture_default_str();
    train->add_option("--input", o.input_path)->required();
    train->add_option("--order", o.order)->capture_default_str();
    train->add_option("--alpha", o.alpha)->capture_default_str();
    train->add_option("--laplace", o.laplace)->capture_default_str();
    train->add_option("--epochs", o.epochs)->capture_default_str();
    train->add_option("--learning-rate", o.learning_rate)->capture_default_str();
    train->add_option("--out", o.output_name);

    auto* decode = app.add_subcommand("decode", "controlled decoding");
    decode->add_option("--method", o.method, "prefix | fudge | fudge-binary | fudge-nl")
        ->capture_default_str();
    decode->add_option("--lm", o.lm_path, "n-gram LM model JSON")->required();
    decode->add_option("--k", o.k)->capture_default_str();
    decode->add_option("--lambda", o.lambda)->capture_default_str();
    decode->add_option("--cap", o.cap)->capture_default_str();
    decode->add_option("--max-new-tokens", o.max_new_tokens)->capture_default_str();
    decode->add_option("--nb-label", o.nb_label_path);
    decode->add_option("--nb-length", o.nb_length_path);
    decode->add_option("--heads-label", o.heads_label_path);
    decode->add_option("--heads-length", o.heads_length_path);
    decode->add_option("--alignment", o.alignment_path);
    decode->add_option("--command", o.command_text, "command text for NL methods");
    decode->add_option("--label", o.label, "target label id");
    decode->add_option("--length", o.length, "target length level id");
    decode->add_option("--generations", o.generations)->capture_default_str();
    decode->add_option("--out", o.output_name);

    auto* eval = app.add_subcommand("eval", "score generation output");
    eval->add_option("--input", o.input_path, "decode output JSONL")->required();
    eval->add_option("--grammar", o.grammar_path)->required();
    eval->add_option("--meta", o.meta_path)->required();
    eval->add_option("--references", o.references_path, "reference texts for BLEU");
    eval->add_option("--out", o.output_name);

    auto* e2e = app.add_subcommand("synthetic-e2e", "run the synthetic end-to-end experiment");
    e2e->add_option("--size", o.e2e_size, "training corpus size")->capture_default_str();
    e2e->add_option("--lambda", o.lambda)->capture_default_str();
    e2e->add_option("--data-dir", data_dir, "directory with the shipped grammars")
        ->capture_default_str();
    e2e->add_option("--out", o.output_name);

    CLI11_PARSE(app, argc, argv);

    try {
        apply_config_file(o);
        if (check->parsed()) return cmd_grammar_check(o);
        if (gen->parsed()) return cmd_generate(o);
        if (split->parsed()) return cmd_split(o);
        if (pairs->parsed()) return cmd_pairs(o);
        if (train->parsed()) return cmd_train(o);
        if (decode->parsed()) return cmd_decode(o);
        if (eval->parsed()) return cmd_eval(o);
        if (e2e->parsed()) return cmd_synthetic_e2e(o, data_dir, e2e->count("--lambda") > 0);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return std::string(e.what()).rfind("cannot read file", 0) == 0 ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
