#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "citeidx/backward_aug.hpp"
#include "citeidx/binio.hpp"
#include "citeidx/bm25.hpp"
#include "citeidx/citation_eval.hpp"
#include "citeidx/config.hpp"
#include "citeidx/corpus.hpp"
#include "citeidx/decode_constraint.hpp"
#include "citeidx/forward_aug.hpp"
#include "citeidx/http_clients.hpp"
#include "citeidx/hybrid_harness.hpp"
#include "citeidx/parallel.hpp"
#include "citeidx/passive_index.hpp"
#include "citeidx/simd.hpp"
#include "citeidx/trainset.hpp"

namespace citeidx::cli {

namespace fs = std::filesystem;

namespace {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::string client;
  int jobs = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
};

struct Ctx {
  PipelineConfig cfg;
  fs::path out;
  std::shared_ptr<const Tokenizer> tokenizer;
  PromptSet prompts;
  unsigned jobs = 1;
  std::ostream& stdout_;
  std::ostream& stderr_;

  fs::path path(const std::string& name) const { return out / name; }

  fs::path require(const std::string& name, const std::string& producer) const {
    fs::path p = path(name);
    if (!fs::exists(p)) throw ValidationError("missing " + p.string() + " (run `citeidx " + producer + "` first)");
    return p;
  }
};

Ctx make_ctx(const Globals& g, std::ostream& out, std::ostream& err) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = PipelineConfig::load(g.config_path);
  cfg.apply_env();
  if (!g.client.empty()) cfg.client = g.client;
  if (g.jobs >= 0) cfg.jobs = static_cast<unsigned>(g.jobs);
  if (g.seed_set) cfg.seed = g.seed;
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  cfg.validate();
  Ctx ctx{cfg, cfg.output_dir, make_tokenizer(cfg.tokenizer), PromptSet::defaults(), resolve_jobs(cfg.jobs), out, err};
  if (!cfg.prompts_dir.empty()) ctx.prompts = PromptSet::load(cfg.prompts_dir);
  fs::create_directories(ctx.out);
  return ctx;
}

// Re-validates after subcommand flags have been folded into the config.
void refresh(Ctx& ctx) { ctx.cfg.validate(); }

std::shared_ptr<const GeneratorClient> make_generator(const Ctx& ctx) {
  if (ctx.cfg.client == "http") return std::make_shared<HttpGenerator>(ctx.cfg.http);
  auto gen = std::make_shared<MockGenerator>(ctx.cfg.seed);
  gen->noisy_citation_rate(ctx.cfg.mock_noisy_rate);
  return gen;
}

std::shared_ptr<const ScorerClient> make_scorer(const Ctx& ctx) {
  if (ctx.cfg.client == "http") return std::make_shared<HttpScorer>(ctx.cfg.http);
  return std::make_shared<MockScorer>(ctx.cfg.seed);
}

std::shared_ptr<const EmbedderClient> make_embedder(const Ctx& ctx) {
  if (ctx.cfg.client == "http") return std::make_shared<HttpEmbedder>(ctx.cfg.http, ctx.cfg.embedding_dim);
  return std::make_shared<MockEmbedder>(ctx.cfg.embedding_dim, ctx.cfg.seed);
}

std::shared_ptr<const EntailmentClient> make_entailment(const Ctx& ctx) {
  if (ctx.cfg.client == "http")
    return std::make_shared<GeneratorEntailment>(make_generator(ctx), ctx.cfg.entailment_threshold);
  return std::make_shared<MockEntailment>(ctx.cfg.entailment_threshold);
}

void emit_stats(const Ctx& ctx, const std::string& stage, const json& stats) {
  fs::create_directories(ctx.path("stats"));
  std::ofstream f(ctx.path("stats") / (stage + ".json"), std::ios::binary | std::ios::trunc);
  json doc = ctx.cfg.header(stage + "_stats").to_json();
  doc["stats"] = stats;
  f << doc.dump(2) << "\n";
  ctx.stdout_ << "stats " << stage << " " << stats.dump(2) << "\n";
}

void report_diagnostics(const Ctx& ctx, const std::vector<std::string>& diags, std::size_t limit = 20) {
  for (std::size_t i = 0; i < diags.size() && i < limit; ++i) ctx.stderr_ << "warning: " << diags[i] << "\n";
  if (diags.size() > limit) ctx.stderr_ << "warning: ... " << diags.size() - limit << " more\n";
}

Corpus load_titled_corpus(const Ctx& ctx, TitleRegistry& registry) {
  Corpus corpus = read_corpus(ctx.require("corpus.jsonl", "ingest"));
  registry = read_registry(ctx.require("registry.jsonl", "titles"));
  apply_registry(corpus, registry);
  return corpus;
}

std::vector<Chunk> load_chunks(const Ctx& ctx) {
  std::vector<Chunk> chunks;
  read_jsonl(ctx.require("chunks.jsonl", "chunk"), [&](const json& j, std::size_t) { chunks.push_back(chunk_from_json(j)); });
  return chunks;
}

InvertedIndex load_or_build_index(const Ctx& ctx, const std::vector<Chunk>& chunks) {
  if (fs::exists(ctx.path("index.bin"))) {
    InvertedIndex idx = InvertedIndex::load(ctx.path("index.bin"));
    bool consistent = idx.n_chunks() == chunks.size();
    for (std::uint32_t i = 0; consistent && i < chunks.size(); ++i)
      consistent = idx.ref(i).doc_key == chunks[i].doc_key && idx.ref(i).chunk_index == chunks[i].chunk_index;
    if (consistent) return idx;
    ctx.stderr_ << "warning: index.bin does not match chunks.jsonl; rebuilding in memory\n";
  }
  return InvertedIndex::build(chunks, ctx.cfg.bm25, ctx.jobs);
}

template <typename T, typename Fn>
std::vector<T> read_records(const fs::path& p, Fn&& from_json) {
  std::vector<T> out;
  read_jsonl(p, [&](const json& j, std::size_t) { out.push_back(from_json(j)); });
  return out;
}

void write_records(const Ctx& ctx, const std::string& name, const std::string& kind, const std::vector<PretrainRecord>& rs) {
  JsonlWriter w(ctx.path(name), ctx.cfg.header(kind));
  for (const auto& r : rs) w.write(record_to_json(r));
  w.close();
}

std::size_t token_sum(const std::vector<PretrainRecord>& rs) {
  std::size_t n = 0;
  for (const auto& r : rs) n += r.token_count;
  return n;
}

double ratio(std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; }

// ---------------------------------------------------------------------------

int cmd_ingest(Ctx& ctx, std::vector<std::string> files, const std::string& source) {
  if (files.empty()) files = ctx.cfg.corpus_paths;
  if (files.empty()) throw ValidationError("ingest: no input files (pass paths or set corpus.paths)");
  ctx.cfg.corpus_paths = files;
  if (!source.empty()) ctx.cfg.default_source = source;
  Corpus corpus;
  IngestStats stats;
  std::size_t cross_file_duplicates = 0;
  for (const auto& f : files) {
    if (!fs::exists(f)) throw ValidationError("ingest: no such file: " + f);
    Corpus part = ingest(fs::path(f), parse_source(ctx.cfg.default_source), *ctx.tokenizer, stats);
    for (auto& d : part.docs()) {
      if (corpus.find(d.doc_key)) {
        ++cross_file_duplicates;
        stats.diagnostics.push_back(f + ": duplicate doc_key '" + d.doc_key + "' skipped");
        continue;
      }
      corpus.add(std::move(d));
    }
  }
  corpus.sort_canonical();
  write_corpus(ctx.path("corpus.jsonl"), corpus, ctx.cfg.header("corpus"));
  report_diagnostics(ctx, stats.diagnostics);
  emit_stats(ctx, "ingest",
             {{"records", stats.records},
              {"documents", corpus.size()},
              {"skipped_empty", stats.skipped_empty},
              {"malformed", stats.malformed},
              {"cross_file_duplicates", cross_file_duplicates},
              {"tokens", corpus.total_tokens()}});
  return 0;
}

int cmd_titles(Ctx& ctx) {
  Corpus corpus = read_corpus(ctx.require("corpus.jsonl", "ingest"));
  auto gen = make_generator(ctx);
  TitleOptions opts;
  opts.max_rename_attempts = ctx.cfg.max_rename_attempts;
  opts.rename_prompt = ctx.prompts.title_rename;
  opts.prompt_words = ctx.cfg.rename_prompt_words;
  TitleRegistry registry = assign_unique_titles(corpus, *gen, opts);
  write_registry(ctx.path("registry.jsonl"), registry, ctx.cfg.header("registry"));
  TitleTrie trie = TitleTrie::build(registry, *ctx.tokenizer);
  trie.save(ctx.path("titles.trie"));
  std::size_t fallback = 0;
  for (const auto& e : registry.rename_log()) fallback += e.attempt == 0;
  emit_stats(ctx, "titles",
             {{"documents", corpus.size()},
              {"titles", registry.size()},
              {"renamed", registry.rename_log().size()},
              {"integer_fallbacks", fallback},
              {"trie_nodes", trie.node_count()},
              {"prefix_collisions", trie.prefix_collisions()}});
  return 0;
}

int cmd_titles_check(Ctx& ctx, const std::string& file) {
  TitleRegistry registry = read_registry(ctx.require("registry.jsonl", "titles"));
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("titles check: cannot open " + file);
  std::string line;
  std::size_t line_no = 0, lines = 0, citations = 0, invalid = 0, malformed = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::string text = line;
    if (line.front() == '{') {
      try {
        json j = json::parse(line);
        if (j.contains("_header")) continue;
        for (const char* key : {"model_answer", "answer", "text"})
          if (j.contains(key) && j[key].is_string()) {
            text = j[key].get<std::string>();
            break;
          }
      } catch (const json::exception&) {
      }
    }
    ++lines;
    try {
      citations += find_markers(text, ctx.cfg.markers).size();
      for (const auto& bad : invalid_citations(text, registry, ctx.cfg.markers)) {
        ++invalid;
        ctx.stdout_ << file << ":" << line_no << ": citation not in registry: " << bad << "\n";
      }
    } catch (const MarkerError& e) {
      ++malformed;
      ctx.stdout_ << file << ":" << line_no << ": " << e.what() << "\n";
    }
  }
  ctx.stdout_ << "stats titles-check "
              << json{{"lines", lines}, {"citations", citations}, {"invalid", invalid}, {"malformed", malformed}}.dump()
              << "\n";
  return invalid + malformed == 0 ? 0 : 1;
}

int cmd_chunk(Ctx& ctx, std::size_t words) {
  if (words) ctx.cfg.chunk_words = words;
  refresh(ctx);
  Corpus corpus = read_corpus(ctx.require("corpus.jsonl", "ingest"));
  auto chunks = chunk_corpus(corpus, ctx.cfg.chunk_words, ctx.jobs);
  JsonlWriter w(ctx.path("chunks.jsonl"), ctx.cfg.header("chunks"));
  std::size_t n_words = 0;
  for (const auto& c : chunks) {
    n_words += c.words.size();
    w.write(chunk_to_json(c));
  }
  w.close();
  emit_stats(ctx, "chunk",
             {{"documents", corpus.size()}, {"chunks", chunks.size()}, {"words", n_words}, {"words_per_chunk", ctx.cfg.chunk_words}});
  return 0;
}

int cmd_index(Ctx& ctx, const std::string& dump) {
  auto chunks = load_chunks(ctx);
  auto index = InvertedIndex::build(chunks, ctx.cfg.bm25, ctx.jobs);
  index.save(ctx.path("index.bin"));
  if (!dump.empty()) {
    std::ofstream f(dump, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("index: cannot write " + dump);
    index.dump_postings(f);
  }
  emit_stats(ctx, "index",
             {{"chunks", index.n_chunks()},
              {"terms", index.n_terms()},
              {"avg_chunk_length", index.avg_doc_length()},
              {"simd", std::string(simd::isa_name(simd::active().isa))}});
  return 0;
}

int cmd_emit_passive(Ctx& ctx, const std::string& variant_name, std::size_t window, bool no_terminal) {
  const Variant variant = parse_variant(variant_name);
  if (variant != Variant::passive && variant != Variant::repeat && variant != Variant::repeat_plus)
    throw ValidationError("emit-passive: --variant must be passive, repeat or repeat+");
  if (window) ctx.cfg.passive_window = window;
  if (no_terminal) ctx.cfg.repeat_terminal = false;
  refresh(ctx);
  TitleRegistry registry;
  Corpus corpus = load_titled_corpus(ctx, registry);
  std::vector<PretrainRecord> records;
  json stats;
  std::string name;
  if (variant == Variant::passive) {
    PassiveAudit audit;
    records = emit_passive(corpus, registry, *ctx.tokenizer, {ctx.cfg.passive_window, ctx.cfg.markers, ctx.jobs}, &audit);
    stats = {{"window_tokens", audit.window_tokens},
             {"title_tokens", audit.title_tokens},
             {"identity_holds", audit.identity_holds()}};
    name = "passive";
  } else if (variant == Variant::repeat) {
    records = emit_repeat(corpus, registry, *ctx.tokenizer, {ctx.cfg.markers, ctx.cfg.repeat_terminal, ctx.jobs});
    name = "repeat";
  } else {
    records = emit_repeat_plus(corpus, registry, *ctx.tokenizer, {ctx.cfg.markers, ctx.cfg.seed, ctx.jobs});
    name = "repeat_plus";
  }
  write_records(ctx, name + ".jsonl", name, records);
  const std::size_t tokens = token_sum(records);
  stats["records"] = records.size();
  stats["tokens"] = tokens;
  stats["base_tokens"] = corpus.total_tokens();
  stats["multiplier"] = ratio(tokens, corpus.total_tokens());
  emit_stats(ctx, "emit-" + name, stats);
  return 0;
}

int cmd_augment_forward(Ctx& ctx, std::size_t n_max) {
  if (n_max) ctx.cfg.n_max = n_max;
  refresh(ctx);
  TitleRegistry registry;
  Corpus corpus = load_titled_corpus(ctx, registry);
  auto gen = make_generator(ctx);
  ForwardOptions opts;
  opts.n_max = ctx.cfg.n_max;
  opts.prompts = ctx.prompts;
  opts.markers = ctx.cfg.markers;
  opts.fuzzy_threshold = ctx.cfg.fuzzy_threshold;
  opts.in_flight = ctx.cfg.client == "http" ? ctx.cfg.in_flight : ctx.jobs;
  ForwardStats stats;
  auto pairs = run_forward(corpus, registry, *gen, opts, stats);
  JsonlWriter pw(ctx.path("forward_pairs.jsonl"), ctx.cfg.header("forward_pairs"));
  std::vector<PretrainRecord> records;
  std::map<std::string, std::size_t> repairs;
  for (const auto& qa : pairs) {
    pw.write(forward_qa_to_json(qa));
    for (const auto& e : qa.repair_log) ++repairs[e.kind];
    records.push_back(forward_record(qa, *ctx.tokenizer));
  }
  pw.close();
  write_records(ctx, "forward.jsonl", "forward", records);
  report_diagnostics(ctx, stats.diagnostics);
  const std::size_t tokens = token_sum(records);
  emit_stats(ctx, "augment-forward",
             {{"documents", stats.documents},
              {"documents_skipped", stats.documents_skipped},
              {"entities", stats.entities},
              {"responses_unparseable", stats.responses_unparseable},
              {"pairs_kept", stats.pairs_kept},
              {"pairs_dropped", stats.pairs_dropped},
              {"generator_failures", stats.generator_failures},
              {"repairs", repairs},
              {"tokens", tokens},
              {"base_tokens", corpus.total_tokens()},
              {"multiplier", ratio(tokens, corpus.total_tokens())}});
  return 0;
}

int cmd_augment_backward(Ctx& ctx, std::size_t per_doc, bool lenient) {
  if (per_doc) ctx.cfg.per_doc_seeds = per_doc;
  if (lenient) ctx.cfg.lenient = true;
  refresh(ctx);
  TitleRegistry registry;
  Corpus corpus = load_titled_corpus(ctx, registry);
  auto chunks = load_chunks(ctx);
  InvertedIndex index = load_or_build_index(ctx, chunks);
  Bm25Retriever retriever(index);
  auto gen = make_generator(ctx);
  BackwardOptions opts;
  opts.per_doc_seeds = ctx.cfg.per_doc_seeds;
  opts.seed = ctx.cfg.seed;
  opts.cluster.retrieve_k = ctx.cfg.retrieve_k;
  opts.cluster.max_candidates = ctx.cfg.max_candidates;
  opts.filter.fuzzy_threshold = ctx.cfg.fuzzy_threshold;
  opts.filter.lenient = ctx.cfg.lenient;
  opts.prompts = ctx.prompts;
  opts.markers = ctx.cfg.markers;
  opts.in_flight = ctx.cfg.client == "http" ? ctx.cfg.in_flight : ctx.jobs;
  BackwardStats stats;
  auto out = run_backward(corpus, registry, chunks, retriever, *gen, *ctx.tokenizer, opts, stats);
  JsonlWriter pw(ctx.path("backward_pairs.jsonl"), ctx.cfg.header("backward_pairs"));
  for (const auto& p : out.pairs) pw.write(backward_pair_to_json(p));
  pw.close();
  write_records(ctx, "backward.jsonl", "backward", out.records);
  report_diagnostics(ctx, stats.diagnostics);
  const std::size_t tokens = token_sum(out.records);
  const std::size_t judged = stats.kept + stats.filtered;
  emit_stats(ctx, "augment-backward",
             {{"seeds", stats.seeds},
              {"clusters", stats.clusters},
              {"clusters_skipped", stats.clusters_skipped},
              {"cluster_sizes", {{"2", stats.cluster_sizes[2]}, {"3", stats.cluster_sizes[3]}, {"4", stats.cluster_sizes[4]}}},
              {"kept", stats.kept},
              {"filtered", stats.filtered},
              {"filter_rate", ratio(stats.filtered, judged)},
              {"filter_reasons", stats.filter_reasons},
              {"generator_failures", stats.generator_failures},
              {"tokens", tokens},
              {"base_tokens", corpus.total_tokens()},
              {"multiplier", ratio(tokens, corpus.total_tokens())}});
  return 0;
}

int cmd_emit_trainset(Ctx& ctx, const std::vector<std::string>& include) {
  Corpus corpus = read_corpus(ctx.require("corpus.jsonl", "ingest"));
  static const std::vector<std::pair<std::string, std::string>> sources = {
      {"passive", "passive.jsonl"}, {"repeat", "repeat.jsonl"},   {"repeat+", "repeat_plus.jsonl"},
      {"forward", "forward.jsonl"}, {"backward", "backward.jsonl"}};
  std::set<std::string> wanted;
  for (const auto& v : include) wanted.insert(std::string(to_string(parse_variant(v))));
  Bookkeeping book;
  book.base_tokens = corpus.total_tokens();
  JsonlWriter w(ctx.path("trainset.jsonl"), ctx.cfg.header("trainset"));
  std::vector<std::string> used;
  for (const auto& [variant, file] : sources) {
    if (!wanted.empty() && !wanted.count(variant)) continue;
    if (!fs::exists(ctx.path(file))) {
      if (wanted.count(variant)) throw ValidationError("emit-trainset: requested variant missing: " + ctx.path(file).string());
      continue;
    }
    used.push_back(file);
    read_jsonl(ctx.path(file), [&](const json& j, std::size_t) {
      PretrainRecord r = record_from_json(j);
      book.add(r);
      w.write(record_to_json(r));
    });
  }
  w.close();
  if (used.empty()) throw ValidationError("emit-trainset: no record files found in " + ctx.out.string());
  const std::string text = format_bookkeeping(book);
  std::ofstream(ctx.path("trainset_report.txt"), std::ios::binary | std::ios::trunc) << text;
  ctx.stdout_ << text;
  json stats = book.to_json();
  stats["inputs"] = used;
  stats["records"] = w.records();
  emit_stats(ctx, "emit-trainset", stats);
  return 0;
}

int cmd_evaluate(Ctx& ctx, const std::string& items_path, bool bypass, bool audit) {
  if (items_path.empty()) throw ValidationError("evaluate: --items is required");
  TitleRegistry registry;
  Corpus corpus = load_titled_corpus(ctx, registry);
  auto items = read_records<EvalItem>(items_path, eval_item_from_json);
  EvidenceStore evidence(corpus, registry, ctx.tokenizer, ctx.cfg.evidence_chunk_tokens, ctx.cfg.evidence_max_chunks);
  auto entail = make_entailment(ctx);
  auto gen = make_generator(ctx);
  EvalOptions opts;
  opts.markers = ctx.cfg.markers;
  opts.prompts = ctx.prompts;
  opts.bypass_decomposition = bypass;
  opts.shortform_audit = audit;
  opts.jobs = ctx.jobs;
  auto report = evaluate_items(items, evidence, *entail, gen.get(), opts);
  JsonlWriter w(ctx.path("metrics.jsonl"), ctx.cfg.header("metrics"));
  for (const auto& r : report.rows) w.write(r);
  w.write({{"summary", report.summary}});
  w.close();
  emit_stats(ctx, "evaluate", report.summary);
  return 0;
}

std::vector<ForwardQA> load_forward_pairs(const Ctx& ctx) {
  return read_records<ForwardQA>(ctx.require("forward_pairs.jsonl", "augment-forward"), forward_qa_from_json);
}

int cmd_probe(Ctx& ctx, const std::string& mode_name, std::size_t k, std::size_t candidates, const std::string& items_path) {
  const ProbeMode mode = parse_probe_mode(mode_name);
  if (k) ctx.cfg.probe_k = k;
  if (candidates) ctx.cfg.probe_candidates = candidates;
  refresh(ctx);
  TitleRegistry registry;
  Corpus corpus = load_titled_corpus(ctx, registry);
  std::vector<ProbeItem> items;
  if (!items_path.empty()) {
    items = read_records<ProbeItem>(items_path, [](const json& j) {
      return ProbeItem{j.value("id", ""), j.at("doc_key").get<std::string>(), j.value("question", ""),
                       j.value("answer", "")};
    });
  } else if (mode == ProbeMode::full_doc || mode == ProbeMode::partial_doc) {
    items = document_probe_items(corpus);
  } else if (mode == ProbeMode::gold_qa) {
    std::size_t n = 0;
    for (const auto& qa : load_forward_pairs(ctx))
      items.push_back({"fwd-" + std::to_string(n++), qa.doc_key, collapse_whitespace(strip_markers(qa.question, ctx.cfg.markers)),
                       qa.answer});
  } else {
    throw ValidationError("probe: --mode model_qa needs --items with model answers");
  }
  auto scorer = make_scorer(ctx);
  ProbeOptions opts;
  opts.mode = mode;
  opts.k = ctx.cfg.probe_k;
  opts.candidates = ctx.cfg.probe_candidates;
  opts.seed = ctx.cfg.seed;
  opts.jobs = ctx.jobs;
  auto rep = memorization_probe(corpus, registry, *scorer, items, opts);
  JsonlWriter w(ctx.path("probe_" + std::string(to_string(mode)) + ".jsonl"), ctx.cfg.header("probe"));
  for (const auto& r : rep.rows)
    w.write({{"id", r.id}, {"true_title", r.true_title}, {"rank", r.rank}, {"top_title", r.top_title}});
  json summary = {{"mode", to_string(mode)}, {"items", rep.items},      {"dropped", rep.dropped},
                  {"k", rep.k},              {"hit_at_1", rep.hit_at_1}, {"hit_at_k", rep.hit_at_k}};
  w.write({{"summary", summary}});
  w.close();
  report_diagnostics(ctx, rep.diagnostics);
  emit_stats(ctx, "probe-" + std::string(to_string(mode)), summary);
  return 0;
}

int cmd_distinctiveness(Ctx& ctx, const std::string& bins_spec, const std::string& items_path) {
  if (!bins_spec.empty()) ctx.cfg.rank_bins = RankBins::parse(bins_spec).upper;
  refresh(ctx);
  TitleRegistry registry = read_registry(ctx.require("registry.jsonl", "titles"));
  std::vector<DistinctItem> items;
  if (!items_path.empty()) {
    items = read_records<DistinctItem>(items_path, [&](const json& j) {
      std::string title = j.contains("title") ? j.at("title").get<std::string>()
                                              : registry.title_of(j.at("doc_key").get<std::string>());
      std::string statement = j.contains("statement") ? j.at("statement").get<std::string>()
                                                      : j.value("question", "") + " " + j.value("answer", "");
      return DistinctItem{j.value("id", ""), trim(statement), title};
    });
  } else {
    std::size_t n = 0;
    for (const auto& qa : load_forward_pairs(ctx))
      items.push_back({"fwd-" + std::to_string(n++),
                       collapse_whitespace(strip_markers(qa.question, ctx.cfg.markers) + " " + qa.answer),
                       registry.title_of(qa.doc_key)});
  }
  RankBins bins;
  bins.upper = ctx.cfg.rank_bins;
  if (bins.upper.size() + 1 != bins.names.size()) bins = RankBins::parse(bins_spec);
  auto embedder = make_embedder(ctx);
  auto rep = title_distinctiveness(items, registry.titles(), *embedder, bins, ctx.jobs);
  JsonlWriter w(ctx.path("distinctiveness.jsonl"), ctx.cfg.header("distinctiveness"));
  for (const auto& r : rep.rows) w.write({{"id", r.id}, {"true_title", r.true_title}, {"rank", r.rank}, {"bin", r.bin}});
  json per_bin = json::array();
  for (std::size_t b = 0; b < rep.bin_counts.size(); ++b)
    per_bin.push_back({{"bin", bins.names[b]}, {"count", rep.bin_counts[b]}, {"mean_rank", rep.bin_mean_rank[b]}});
  json summary = {{"items", rep.rows.size()}, {"titles", rep.n_titles}, {"mean_rank", rep.mean_rank}, {"bins", per_bin}};
  w.write({{"summary", summary}});
  w.close();
  emit_stats(ctx, "distinctiveness", summary);
  return 0;
}

RankedList sparse_doc_list(const InvertedIndex& index, std::string_view query, std::size_t retrieve_k, std::size_t want) {
  RankedList list;
  list.provider = Provider::sparse;
  std::set<std::string> seen;
  for (const auto& hit : index.retrieve(query, retrieve_k)) {
    const auto& ref = index.ref(hit.chunk);
    if (!seen.insert(ref.doc_key).second) continue;
    list.entries.push_back({ref.doc_key, hit.score, Provider::sparse});
    if (list.entries.size() >= want) break;
  }
  return list;
}

int cmd_hybrid(Ctx& ctx, double quality, const std::vector<std::string>& strategy_names, std::size_t trials,
               const std::string& items_path, const std::string& dense_path) {
  if (quality >= 0) ctx.cfg.hybrid_quality = quality;
  if (trials) ctx.cfg.hybrid_trials = trials;
  refresh(ctx);
  TitleRegistry registry;
  Corpus corpus = load_titled_corpus(ctx, registry);
  auto chunks = load_chunks(ctx);
  InvertedIndex index = load_or_build_index(ctx, chunks);

  std::vector<RouteItem> items;
  if (!items_path.empty()) {
    items = read_records<RouteItem>(items_path, [](const json& j) {
      RouteItem it{j.value("id", ""), j.at("question").get<std::string>(), {}, j.value("gold_doc_key", "")};
      if (j.contains("gold_answers")) it.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
      if (j.contains("gold_answer")) it.gold_answers.push_back(j.at("gold_answer").get<std::string>());
      return it;
    });
  } else {
    std::set<std::string> seen;
    std::size_t n = 0;
    for (const auto& qa : load_forward_pairs(ctx)) {
      std::string q = collapse_whitespace(strip_markers(qa.question, ctx.cfg.markers));
      if (!seen.insert(qa.doc_key + "\n" + q).second) continue;
      auto sentences = sentence_spans(qa.answer);
      std::string gold = sentences.empty() ? trim(qa.answer) : std::string(sentences.front().of(qa.answer));
      items.push_back({"fwd-" + std::to_string(n++), q, {gold}, qa.doc_key});
    }
  }

  std::map<std::string, RankedList> dense_runs;
  if (!dense_path.empty()) {
    read_jsonl(dense_path, [&](const json& j, std::size_t) {
      RankedList l;
      l.provider = Provider::dense;
      auto keys = j.at("doc_keys").get<std::vector<std::string>>();
      auto scores = j.value("scores", std::vector<double>{});
      for (std::size_t i = 0; i < keys.size(); ++i)
        l.entries.push_back({keys[i], i < scores.size() ? scores[i] : static_cast<double>(keys.size() - i), Provider::dense});
      dense_runs[j.at("id").get<std::string>()] = std::move(l);
    });
  }
  const std::size_t want = std::max<std::size_t>(ctx.cfg.hybrid_slots * 2, 10);
  std::vector<RankedList> sparse, dense;
  for (const auto& it : items) {
    sparse.push_back(sparse_doc_list(index, it.question, ctx.cfg.retrieve_k, want));
    if (auto d = dense_runs.find(it.id); d != dense_runs.end()) {
      dense.push_back(d->second);
    } else {
      if (it.gold_doc_key.empty()) throw ValidationError("hybrid: item " + it.id + " has no dense run and no gold_doc_key");
      dense.push_back(oracle_dense_list(it, sparse.back()));
    }
  }

  auto gen = make_generator(ctx);
  RouteContext rctx{*gen, corpus, registry, ctx.prompts, ctx.cfg.markers};
  HybridOptions opts;
  opts.quality = ctx.cfg.hybrid_quality;
  opts.trials = ctx.cfg.hybrid_trials;
  opts.seed = ctx.cfg.seed;
  opts.slots = ctx.cfg.hybrid_slots;
  opts.jobs = ctx.cfg.client == "http" ? ctx.cfg.in_flight : ctx.jobs;
  if (!strategy_names.empty()) {
    opts.strategies.clear();
    for (const auto& s : strategy_names) opts.strategies.push_back(parse_strategy(s));
  }
  auto run = run_hybrid(items, sparse, dense, rctx, opts);
  JsonlWriter w(ctx.path("hybrid.jsonl"), ctx.cfg.header("hybrid"));
  for (const auto& r : run.results) w.write(routed_result_to_json(r));
  w.close();
  auto slices = conflict_slices(run.per_item);
  const std::string table = format_slice_table(slices);
  std::ofstream(ctx.path("slices.txt"), std::ios::binary | std::ios::trunc) << table;
  ctx.stdout_ << table;

  std::map<std::string, std::pair<double, std::size_t>> acc;
  std::map<std::string, std::size_t> abstained;
  for (const auto& r : run.results) {
    auto& a = acc[std::string(to_string(r.strategy))];
    a.first += r.correctness;
    ++a.second;
    abstained[std::string(to_string(r.strategy))] += r.abstained;
  }
  json per = json::object();
  for (const auto& [s, a] : acc)
    per[s] = {{"accuracy", a.second ? a.first / static_cast<double>(a.second) : 0.0}, {"abstained", abstained[s]}};
  report_diagnostics(ctx, run.diagnostics);
  emit_stats(ctx, "hybrid",
             {{"items", items.size()},
              {"quality", opts.quality},
              {"trials", opts.trials},
              {"dropped", run.dropped},
              {"short_lists", run.short_lists},
              {"strategies", per},
              {"slices",
               {{SliceReport::kNames[0], slices.proportion(0)},
                {SliceReport::kNames[1], slices.proportion(1)},
                {SliceReport::kNames[2], slices.proportion(2)}}}});
  return 0;
}

int cmd_report(Ctx& ctx) {
  if (!fs::exists(ctx.out)) throw ValidationError("report: no output directory " + ctx.out.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(ctx.out))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::size_t problems = 0;
  const std::string current = ctx.cfg.hash();
  auto problem = [&](const fs::path& p, const std::string& msg) {
    ++problems;
    ctx.stdout_ << "FAIL " << fs::relative(p, ctx.out).string() << ": " << msg << "\n";
  };
  for (const auto& p : files) {
    const auto ext = p.extension().string();
    const std::string rel = fs::relative(p, ctx.out).string();
    try {
      if (ext == ".jsonl") {
        auto header = read_header(p);
        if (!header) {
          problem(p, "missing artifact header");
          continue;
        }
        if (config_hash(header->config) != header->config_hash) {
          problem(p, "config_hash does not match embedded config");
          continue;
        }
        std::size_t records = 0, bad = 0;
        read_jsonl(p, [&](const json&, std::size_t) { ++records; }, [&](std::size_t, const std::string&) { ++bad; });
        if (bad) {
          problem(p, std::to_string(bad) + " unparseable lines");
          continue;
        }
        ctx.stdout_ << "ok   " << rel << "  kind=" << header->kind << " records=" << records
                    << " config=" << header->config_hash << (header->config_hash == current ? " (current)" : "") << "\n";
      } else if (ext == ".json") {
        std::ifstream in(p, std::ios::binary);
        json doc = json::parse(in);
        auto header = ArtifactHeader::from_line(doc);
        if (!header || config_hash(header->config) != header->config_hash) {
          problem(p, "missing or inconsistent header");
          continue;
        }
        ctx.stdout_ << "ok   " << rel << "  kind=" << header->kind << " config=" << header->config_hash << "\n";
      } else if (ext == ".bin" || ext == ".trie") {
        auto bytes = binio::read_file(p);
        if (ext == ".bin") {
          auto idx = InvertedIndex::deserialize(bytes);
          ctx.stdout_ << "ok   " << rel << "  bm25_index chunks=" << idx.n_chunks() << " terms=" << idx.n_terms() << "\n";
        } else {
          auto trie = TitleTrie::deserialize(bytes);
          ctx.stdout_ << "ok   " << rel << "  title_trie titles=" << trie.title_count() << " nodes=" << trie.node_count() << "\n";
        }
      }
    } catch (const std::exception& e) {
      problem(p, e.what());
    }
  }
  if (fs::exists(ctx.path("trainset_report.txt"))) {
    std::ifstream in(ctx.path("trainset_report.txt"));
    ctx.stdout_ << "\n" << in.rdbuf();
  }
  ctx.stdout_ << (problems ? "report: " + std::to_string(problems) + " problem(s)\n" : std::string("report: all artifacts consistent\n"));
  return problems ? 1 : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"citeidx: internal-citation data pipeline and evaluation harness"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "YAML pipeline configuration");
  app.add_option("--client", g.client, "Model clients: mock or http")->check(CLI::IsMember({"mock", "http"}));
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--out", g.out_dir, "Output directory");

  std::vector<std::string> ingest_files;
  std::string ingest_source;
  auto* ingest = app.add_subcommand("ingest", "Read line-delimited documents into corpus.jsonl");
  ingest->add_option("files", ingest_files, "Input .jsonl files");
  ingest->add_option("--source", ingest_source, "Default source label for records without one");

  auto* titles = app.add_subcommand("titles", "Assign unique titles; write registry.jsonl and titles.trie");
  std::string check_file;
  auto* titles_check = titles->add_subcommand("check", "Verify that every citation in a file is a registry title");
  titles_check->add_option("file", check_file, "Answers file (plain text or .jsonl)")->required();

  std::size_t words = 0;
  auto* chunk = app.add_subcommand("chunk", "Split documents into W-word chunks");
  chunk->add_option("--words", words, "Words per chunk");

  std::string dump;
  auto* index = app.add_subcommand("index", "Build the BM25 index over chunks");
  index->add_option("--dump-postings", dump, "Write a text dump of all postings");

  std::string variant = "passive";
  std::size_t window = 0;
  bool no_terminal = false;
  auto* passive = app.add_subcommand("emit-passive", "Emit passive, repeat or repeat+ records");
  passive->add_option("--variant", variant, "passive | repeat | repeat+");
  passive->add_option("--window", window, "Tokens per passive piece");
  passive->add_flag("--no-terminal", no_terminal, "Repeat: omit the marker at the end of the document");

  std::size_t n_max = 0;
  auto* forward = app.add_subcommand("augment-forward", "Entity-anchored QA pairs naming the document");
  forward->add_option("--n-max", n_max, "Entities per document");

  std::size_t per_doc = 0;
  bool lenient = false;
  auto* backward = app.add_subcommand("augment-backward", "Cross-document instruction/answer pairs with citations");
  backward->add_option("--per-doc-seeds", per_doc, "Seed chunks per document");
  backward->add_flag("--lenient", lenient, "Accept any registry title, not only the cluster's");

  std::vector<std::string> include;
  auto* trainset = app.add_subcommand("emit-trainset", "Combine record files and report token multipliers");
  trainset->add_option("--include", include, "Variants to include (default: every file present)")->delimiter(',');

  std::string items_path;
  bool bypass = false;
  bool audit = false;
  auto* evaluate = app.add_subcommand("evaluate", "Correctness and citation metrics");
  evaluate->add_option("--items", items_path, "Evaluation items (.jsonl)");
  evaluate->add_flag("--bypass-decomposition", bypass, "One claim per parsed statement instead of the generator");
  evaluate->add_flag("--shortform-audit", audit, "Check whether non-gold short-form citations entail the answer");

  std::string mode = "full_doc";
  std::size_t k = 0, candidates = 0;
  auto* probe = app.add_subcommand("probe", "Memorization probe: rank candidate titles by log-probability");
  probe->add_option("--mode", mode, "full_doc | partial_doc | gold_qa | model_qa");
  probe->add_option("--k", k, "Report hit@k");
  probe->add_option("--candidates", candidates, "Candidate pool size (0 = all titles)");
  probe->add_option("--items", items_path, "Probe items (.jsonl)");

  std::string bins;
  auto* distinct = app.add_subcommand("distinctiveness", "Rank of the true title by embedding similarity");
  distinct->add_option("--bins", bins, "Rank thresholds, e.g. 3,30,300");
  distinct->add_option("--items", items_path, "Statements (.jsonl)");

  double quality = -1;
  std::vector<std::string> strategies;
  std::size_t trials = 0;
  std::string dense_path;
  auto* hybrid = app.add_subcommand("hybrid", "Routing strategies under mixed retrieval quality");
  hybrid->add_option("--quality", quality, "Dense share q in [0, 1]")->check(CLI::Range(0.0, 1.0));
  hybrid->add_option("--strategy", strategies, "internal,external,joint,fallback,oracle")->delimiter(',');
  hybrid->add_option("--trials", trials, "Mixing trials per item");
  hybrid->add_option("--items", items_path, "Route items (.jsonl)");
  hybrid->add_option("--dense", dense_path, "Dense run file (.jsonl of {id, doc_keys, scores?})");

  auto* report = app.add_subcommand("report", "Verify artifact headers and print bookkeeping");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    Ctx ctx = make_ctx(g, out, err);
    if (*ingest) return cmd_ingest(ctx, ingest_files, ingest_source);
    if (*titles_check) return cmd_titles_check(ctx, check_file);
    if (*titles) return cmd_titles(ctx);
    if (*chunk) return cmd_chunk(ctx, words);
    if (*index) return cmd_index(ctx, dump);
    if (*passive) return cmd_emit_passive(ctx, variant, window, no_terminal);
    if (*forward) return cmd_augment_forward(ctx, n_max);
    if (*backward) return cmd_augment_backward(ctx, per_doc, lenient);
    if (*trainset) return cmd_emit_trainset(ctx, include);
    if (*evaluate) return cmd_evaluate(ctx, items_path, bypass, audit);
    if (*probe) return cmd_probe(ctx, mode, k, candidates, items_path);
    if (*distinct) return cmd_distinctiveness(ctx, bins, items_path);
    if (*hybrid) return cmd_hybrid(ctx, quality, strategies, trials, items_path, dense_path);
    if (*report) return cmd_report(ctx);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace citeidx::cli
