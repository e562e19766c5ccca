#include "citeidx/citation_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "citeidx/parallel.hpp"
#include "citeidx/rng.hpp"
#include "citeidx/simd.hpp"

namespace citeidx {

double em_recall(std::string_view answer, const std::vector<std::string>& gold) {
  if (gold.empty()) throw std::invalid_argument("em_recall: empty gold list");
  std::size_t hit = 0;
  for (const auto& g : gold)
    if (!g.empty() && answer.find(g) != std::string_view::npos) ++hit;
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

PrecisionRecall shortform_citation_metrics(const std::vector<std::string>& citations, std::string_view gold_title) {
  if (citations.empty()) return {0.0, 0.0};
  const auto match = static_cast<std::size_t>(std::count(citations.begin(), citations.end(), gold_title));
  return {static_cast<double>(match) / static_cast<double>(citations.size()), match > 0 ? 1.0 : 0.0};
}

namespace {

void add_unique(std::vector<std::string>& v, std::string s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(std::move(s));
}

}  // namespace

std::vector<Claim> claims_from_answer(std::string_view answer, const MarkerFormat& fmt) {
  std::vector<Claim> claims;
  for (auto& s : parse_citations(answer, fmt).statements) claims.push_back({std::move(s.text), std::move(s.citations)});
  return claims;
}

std::vector<Claim> decompose_claims(std::string_view question, std::string_view answer, const GeneratorClient& gen,
                                    const PromptSet& prompts, const MarkerFormat& fmt) {
  const std::string reply = generate(
      gen, fill_template(prompts.claim_decomposition, {{"question", std::string(question)}, {"answer", std::string(answer)}}));
  std::vector<Claim> claims;
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    auto eol = reply.find('\n', pos);
    std::string_view line = std::string_view(reply).substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    if (!trim(line).empty()) {
      auto parsed = parse_citations(line, fmt);
      Claim c;
      c.text = parsed.plain_text();
      for (auto& t : parsed.all_citations()) add_unique(c.citations, std::move(t));
      if (!c.text.empty() || !c.citations.empty()) claims.push_back(std::move(c));
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  return claims;
}

// ---------------------------------------------------------------------------

EvidenceStore::EvidenceStore(const Corpus& corpus, const TitleRegistry& registry,
                             std::shared_ptr<const Tokenizer> tokenizer, std::size_t chunk_tokens,
                             std::size_t max_chunks)
    : corpus_(corpus),
      registry_(registry),
      tokenizer_(std::move(tokenizer)),
      chunk_tokens_(chunk_tokens),
      max_chunks_(max_chunks) {
  if (chunk_tokens_ == 0) throw std::invalid_argument("EvidenceStore: chunk_tokens must be >= 1");
  if (max_chunks_ == 0) throw std::invalid_argument("EvidenceStore: max_chunks must be >= 1");
}

const EvidenceStore::Entry* EvidenceStore::entry(std::string_view title) const {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(title); it != cache_.end()) return it->second.get();
  auto doc_key = registry_.doc_for(title);
  if (!doc_key) return nullptr;
  const Document* doc = corpus_.find(*doc_key);
  auto e = std::make_unique<Entry>();
  if (doc) {
    auto spans = tokenizer_->spans(doc->content);
    for (std::size_t s = 0; s < spans.size(); s += chunk_tokens_) {
      const std::size_t end = std::min(spans.size(), s + chunk_tokens_);
      e->segments.emplace_back(doc->content.substr(spans[s].begin, spans[end - 1].end - spans[s].begin));
    }
    if (e->segments.size() > max_chunks_) {
      std::vector<Chunk> chunks;
      for (std::size_t i = 0; i < e->segments.size(); ++i) {
        Chunk c;
        c.doc_key = *doc_key;
        c.chunk_index = i;
        for (auto w : split_words(e->segments[i])) c.words.emplace_back(w);
        chunks.push_back(std::move(c));
      }
      try {
        e->index = std::make_unique<InvertedIndex>(InvertedIndex::build(chunks));
      } catch (const std::exception&) {
        e->index.reset();
      }
    }
  }
  auto* raw = e.get();
  cache_.emplace(std::string(title), std::move(e));
  return raw;
}

std::vector<std::string> EvidenceStore::segments(std::string_view title) const {
  const Entry* e = entry(title);
  return e ? e->segments : std::vector<std::string>{};
}

std::optional<std::vector<std::string>> EvidenceStore::evidence(std::string_view title, std::string_view claim) const {
  const Entry* e = entry(title);
  if (!e) return std::nullopt;
  if (e->segments.size() <= max_chunks_) return e->segments;
  std::vector<std::size_t> picked;
  if (e->index) {
    for (const auto& hit : e->index->retrieve(claim, max_chunks_)) picked.push_back(e->index->ref(hit.chunk).chunk_index);
  }
  for (std::size_t i = 0; picked.size() < max_chunks_ && i < e->segments.size(); ++i)
    if (std::find(picked.begin(), picked.end(), i) == picked.end()) picked.push_back(i);
  std::vector<std::string> out;
  for (std::size_t i : picked) out.push_back(e->segments[i]);
  return out;
}

LongFormResult longform_citation_metrics(const std::vector<Claim>& claims, const EvidenceStore& evidence,
                                         const EntailmentClient& entailment) {
  LongFormResult r;
  r.claims = claims.size();
  for (const auto& claim : claims) {
    bool claim_supported = false;
    for (const auto& title : claim.citations) {
      ++r.citations;
      auto chunks = evidence.evidence(title, claim.text);
      if (!chunks) {
        r.invalid.push_back(title);
        continue;
      }
      bool supported = false;
      for (const auto& chunk : *chunks) {
        if (entailment.entails(chunk, claim.text)) {
          supported = true;
          break;
        }
      }
      if (supported) {
        ++r.supported_citations;
        claim_supported = true;
      }
    }
    if (claim_supported) ++r.supported_claims;
  }
  r.pr.precision = r.citations ? static_cast<double>(r.supported_citations) / static_cast<double>(r.citations) : 0.0;
  r.pr.recall = r.claims ? static_cast<double>(r.supported_claims) / static_cast<double>(r.claims) : 0.0;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

json claim_to_json(const Claim& c) { return {{"text", c.text}, {"citations", c.citations}}; }

}  // namespace

EvalItem eval_item_from_json(const json& j) {
  EvalItem it;
  it.id = j.value("id", "");
  it.question = j.value("question", "");
  it.model_answer = j.at("model_answer").get<std::string>();
  if (j.contains("gold_title")) it.gold_title = j.at("gold_title").get<std::string>();
  if (j.contains("gold_answers")) it.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
  if (j.contains("gold_answer")) it.gold_answers.push_back(j.at("gold_answer").get<std::string>());
  if (j.contains("claims")) {
    std::vector<Claim> claims;
    for (const auto& c : j.at("claims"))
      claims.push_back({c.at("text").get<std::string>(), c.value("citations", std::vector<std::string>{})});
    it.claims = std::move(claims);
  }
  return it;
}

json eval_item_to_json(const EvalItem& item) {
  json j = {{"id", item.id}, {"question", item.question}, {"model_answer", item.model_answer}};
  if (item.gold_title) j["gold_title"] = *item.gold_title;
  if (!item.gold_answers.empty()) j["gold_answers"] = item.gold_answers;
  if (item.claims) {
    json cs = json::array();
    for (const auto& c : *item.claims) cs.push_back(claim_to_json(c));
    j["claims"] = cs;
  }
  return j;
}

ShortFormAudit shortform_entailment_audit(const std::vector<std::string>& citations, std::string_view gold_title,
                                          std::string_view answer, const EvidenceStore& evidence,
                                          const EntailmentClient& entailment) {
  ShortFormAudit a;
  for (const auto& c : citations) {
    if (c == gold_title) continue;
    ++a.non_gold;
    auto chunks = evidence.evidence(c, answer);
    if (!chunks) continue;
    for (const auto& chunk : *chunks)
      if (entailment.entails(chunk, answer)) {
        ++a.entailing;
        break;
      }
  }
  return a;
}

MetricsReport evaluate_items(const std::vector<EvalItem>& items, const EvidenceStore& evidence,
                             const EntailmentClient& entailment, const GeneratorClient* decomposer,
                             const EvalOptions& opts) {
  struct Row {
    json row;
    bool ok = false;
    bool has_correctness = false;
    double correctness = 0.0;
    PrecisionRecall pr;
    bool no_citation = false;
    std::size_t invalid = 0;
    ShortFormAudit audit;
  };
  auto rows = parallel_map(items.size(), opts.jobs, [&](std::size_t i) {
    const EvalItem& it = items[i];
    Row r;
    r.row = {{"id", it.id}};
    try {
      if (!it.gold_answers.empty()) {
        r.correctness = em_recall(strip_markers(it.model_answer, opts.markers), it.gold_answers);
        r.has_correctness = true;
        r.row["correctness"] = r.correctness;
      }
      if (it.gold_title) {
        r.row["kind"] = "short";
        auto cites = parse_citations(it.model_answer, opts.markers).all_citations();
        std::vector<std::string> uniq;
        for (auto& c : cites) add_unique(uniq, std::move(c));
        const std::string gold = normalize_title(*it.gold_title);
        r.pr = shortform_citation_metrics(uniq, gold);
        r.no_citation = uniq.empty();
        r.row["citations"] = uniq;
        if (opts.shortform_audit) {
          r.audit = shortform_entailment_audit(uniq, gold, strip_markers(it.model_answer, opts.markers), evidence,
                                               entailment);
          r.row["audit"] = {{"non_gold", r.audit.non_gold}, {"entailing", r.audit.entailing}};
        }
      } else {
        r.row["kind"] = "long";
        std::vector<Claim> claims;
        if (it.claims) {
          claims = *it.claims;
        } else if (opts.bypass_decomposition || !decomposer) {
          claims = claims_from_answer(it.model_answer, opts.markers);
        } else {
          claims = decompose_claims(it.question, it.model_answer, *decomposer, opts.prompts, opts.markers);
        }
        auto lf = longform_citation_metrics(claims, evidence, entailment);
        r.pr = lf.pr;
        r.no_citation = lf.citations == 0;
        r.invalid = lf.invalid.size();
        r.row["claims"] = lf.claims;
        r.row["supported_claims"] = lf.supported_claims;
        r.row["n_citations"] = lf.citations;
        r.row["supported_citations"] = lf.supported_citations;
        r.row["invalid_citations"] = lf.invalid;
      }
      r.row["citation_precision"] = r.pr.precision;
      r.row["citation_recall"] = r.pr.recall;
      r.ok = true;
    } catch (const std::exception& e) {
      r.row["error"] = e.what();
    }
    return r;
  });

  MetricsReport report;
  std::size_t ok = 0, errors = 0, with_corr = 0, no_cite = 0, invalid = 0;
  ShortFormAudit audit;
  double sum_p = 0, sum_r = 0, sum_c = 0;
  for (auto& r : rows) {
    if (r.ok) {
      ++ok;
      sum_p += r.pr.precision;
      sum_r += r.pr.recall;
      no_cite += r.no_citation ? 1 : 0;
      invalid += r.invalid;
      audit.non_gold += r.audit.non_gold;
      audit.entailing += r.audit.entailing;
      if (r.has_correctness) {
        ++with_corr;
        sum_c += r.correctness;
      }
    } else {
      ++errors;
    }
    report.rows.push_back(std::move(r.row));
  }
  auto mean = [](double s, std::size_t n) { return n ? s / static_cast<double>(n) : 0.0; };
  report.summary = {{"items", items.size()},
                    {"evaluated", ok},
                    {"errors", errors},
                    {"correctness", mean(sum_c, with_corr)},
                    {"correctness_items", with_corr},
                    {"citation_precision", mean(sum_p, ok)},
                    {"citation_recall", mean(sum_r, ok)},
                    {"no_citation_rate", mean(static_cast<double>(no_cite), ok)},
                    {"invalid_citations", invalid}};
  if (opts.shortform_audit)
    report.summary["shortform_audit"] = {{"non_gold_citations", audit.non_gold},
                                         {"entailing", audit.entailing},
                                         {"rate", mean(static_cast<double>(audit.entailing), audit.non_gold)}};
  return report;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ProbeMode m) {
  switch (m) {
    case ProbeMode::full_doc: return "full_doc";
    case ProbeMode::partial_doc: return "partial_doc";
    case ProbeMode::gold_qa: return "gold_qa";
    case ProbeMode::model_qa: return "model_qa";
  }
  return "full_doc";
}

ProbeMode parse_probe_mode(std::string_view s) {
  std::string k = to_lower_ascii(s);
  std::erase(k, '-');
  std::erase(k, '_');
  if (k == "fulldoc") return ProbeMode::full_doc;
  if (k == "partialdoc") return ProbeMode::partial_doc;
  if (k == "goldqa") return ProbeMode::gold_qa;
  if (k == "modelqa") return ProbeMode::model_qa;
  throw std::invalid_argument("unknown probe mode: " + std::string(s));
}

std::vector<ProbeItem> document_probe_items(const Corpus& corpus) {
  std::vector<ProbeItem> items;
  for (const auto& d : corpus.docs()) items.push_back({d.doc_key, d.doc_key, "", ""});
  return items;
}

std::string probe_context(const ProbeItem& item, const Corpus& corpus, const ProbeOptions& opts) {
  switch (opts.mode) {
    case ProbeMode::full_doc:
    case ProbeMode::partial_doc: {
      const Document* doc = corpus.find(item.doc_key);
      if (!doc) throw std::invalid_argument("probe item references unknown document: " + item.doc_key);
      if (opts.mode == ProbeMode::full_doc) return doc->content;
      auto words = word_spans(doc->content);
      if (words.empty()) return "";
      const std::size_t len = (words.size() + 2) / 3;
      std::size_t start = (words.size() - len) / 2;
      if (opts.random_segment) {
        Rng rng(derive_seed(opts.seed, "partial:" + item.doc_key));
        start = rng.below(words.size() - len + 1);
      }
      return doc->content.substr(words[start].begin, words[start + len - 1].end - words[start].begin);
    }
    case ProbeMode::gold_qa:
    case ProbeMode::model_qa:
      return "Question: " + item.question + "\nAnswer: " + item.answer;
  }
  return "";
}

std::vector<std::string> probe_candidates(const ProbeItem& item, const std::string& true_title,
                                          const std::vector<std::string>& all_titles, const ProbeOptions& opts) {
  if (opts.candidates == 0 || opts.candidates >= all_titles.size()) return all_titles;
  std::vector<std::string> others;
  for (const auto& t : all_titles)
    if (t != true_title) others.push_back(t);
  Rng rng(derive_seed(opts.seed, "candidates:" + item.id));
  std::vector<std::string> out{true_title};
  for (std::size_t i : rng.sample_without_replacement(others.size(), std::min(others.size(), opts.candidates - 1)))
    out.push_back(others[i]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::string, double>> rank_titles(const ScorerClient& scorer, std::string_view context,
                                                        const std::vector<std::string>& candidates) {
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(candidates.size());
  for (const auto& t : candidates) scored.emplace_back(t, score_sequence(scorer, context, t));
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return scored;
}

ProbeReport memorization_probe(const Corpus& corpus, const TitleRegistry& registry, const ScorerClient& scorer,
                               const std::vector<ProbeItem>& items, const ProbeOptions& opts) {
  if (opts.k == 0) throw std::invalid_argument("memorization_probe: k must be >= 1");
  const auto all_titles = registry.titles();
  struct Out {
    std::optional<ProbeRow> row;
    std::string error;
  };
  auto results = parallel_map(items.size(), opts.jobs, [&](std::size_t i) {
    Out o;
    const ProbeItem& it = items[i];
    try {
      const std::string& truth = registry.title_of(it.doc_key);
      auto ranked = rank_titles(scorer, probe_context(it, corpus, opts) + opts.cue,
                                probe_candidates(it, truth, all_titles, opts));
      ProbeRow row{it.id, truth, 0, ranked.front().first};
      for (std::size_t r = 0; r < ranked.size(); ++r)
        if (ranked[r].first == truth) row.rank = r + 1;
      o.row = std::move(row);
    } catch (const std::exception& e) {
      o.error = it.id + ": " + e.what();
    }
    return o;
  });
  ProbeReport rep;
  rep.mode = opts.mode;
  rep.k = opts.k;
  std::size_t h1 = 0, hk = 0;
  for (auto& o : results) {
    if (!o.row) {
      ++rep.dropped;
      rep.diagnostics.push_back(o.error);
      continue;
    }
    h1 += o.row->rank == 1;
    hk += o.row->rank <= opts.k;
    rep.rows.push_back(std::move(*o.row));
  }
  rep.items = rep.rows.size();
  if (rep.items) {
    rep.hit_at_1 = static_cast<double>(h1) / static_cast<double>(rep.items);
    rep.hit_at_k = static_cast<double>(hk) / static_cast<double>(rep.items);
  }
  return rep;
}

// ---------------------------------------------------------------------------

std::size_t RankBins::bin_of(std::size_t rank) const {
  for (std::size_t i = 0; i < upper.size(); ++i)
    if (rank <= upper[i]) return i;
  return upper.size();
}

RankBins RankBins::parse(std::string_view spec) {
  RankBins b;
  b.upper.clear();
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto comma = spec.find(',', pos);
    std::string part = trim(spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("bins: expected comma-separated rank thresholds, got '" + std::string(spec) + "'");
    std::size_t v = std::stoull(part);
    if (!b.upper.empty() && v <= b.upper.back()) throw std::invalid_argument("bins: thresholds must increase");
    b.upper.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (b.upper.size() + 1 != b.names.size()) {
    b.names.clear();
    for (std::size_t i = 0; i <= b.upper.size(); ++i) b.names.push_back("bin" + std::to_string(i + 1));
  }
  return b;
}

DistinctReport title_distinctiveness(const std::vector<DistinctItem>& items, const std::vector<std::string>& titles,
                                     const EmbedderClient& embedder, const RankBins& bins, unsigned jobs) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < titles.size(); ++i) index.emplace(titles[i], i);
  for (const auto& it : items)
    if (!index.count(it.true_title)) throw std::invalid_argument("true title not among titles: " + it.true_title);

  const std::size_t dim = embedder.dimension();
  auto title_vecs = parallel_map(titles.size(), jobs, [&](std::size_t i) { return embed(embedder, titles[i]); });
  std::vector<double> matrix(titles.size() * dim);
  for (std::size_t i = 0; i < titles.size(); ++i) std::copy(title_vecs[i].begin(), title_vecs[i].end(), matrix.begin() + static_cast<std::ptrdiff_t>(i * dim));

  auto ranks = parallel_map(items.size(), jobs, [&](std::size_t i) {
    auto v = embed(embedder, items[i].statement);
    std::vector<double> sims(titles.size());
    simd::gemv(matrix, dim, v, sims);
    const double truth = sims[index.at(items[i].true_title)];
    return 1 + simd::count_greater(sims, truth + kSimilarityTieEpsilon);
  });

  DistinctReport rep;
  rep.n_titles = titles.size();
  rep.bin_counts.assign(bins.upper.size() + 1, 0);
  std::vector<double> sums(bins.upper.size() + 1, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::size_t b = bins.bin_of(ranks[i]);
    rep.rows.push_back({items[i].id, items[i].true_title, ranks[i], bins.names.at(b)});
    ++rep.bin_counts[b];
    sums[b] += static_cast<double>(ranks[i]);
    total += static_cast<double>(ranks[i]);
  }
  for (std::size_t b = 0; b < sums.size(); ++b)
    rep.bin_mean_rank.push_back(rep.bin_counts[b] ? sums[b] / static_cast<double>(rep.bin_counts[b]) : 0.0);
  rep.mean_rank = items.empty() ? 0.0 : total / static_cast<double>(items.size());
  return rep;
}

}  // namespace citeidx
