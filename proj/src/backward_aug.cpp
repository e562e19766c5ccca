#include "citeidx/backward_aug.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "citeidx/parallel.hpp"

namespace citeidx {

namespace {

json ref_to_json(const ChunkRef& r) { return {{"doc_key", r.doc_key}, {"chunk_index", r.chunk_index}}; }

ChunkRef ref_from_json(const json& j) {
  return {j.at("doc_key").get<std::string>(), j.at("chunk_index").get<std::uint64_t>()};
}

}  // namespace

json backward_pair_to_json(const BackwardPair& p) {
  json members = json::array();
  for (const auto& m : p.cluster.members) members.push_back(ref_to_json(m));
  json j = {{"status", p.status == PairStatus::kept ? "kept" : "filtered"},
            {"cluster", {{"seed", ref_to_json(p.cluster.seed)}, {"members", members}, {"draw", p.cluster.draw}}},
            {"instruction", p.instruction},
            {"answer", p.answer},
            {"cited_titles", p.cited_titles}};
  if (!p.filter_reason.empty()) j["filter_reason"] = p.filter_reason;
  return j;
}

BackwardPair backward_pair_from_json(const json& j) {
  BackwardPair p;
  const auto status = j.at("status").get<std::string>();
  if (status != "kept" && status != "filtered") throw std::invalid_argument("unknown pair status: " + status);
  p.status = status == "kept" ? PairStatus::kept : PairStatus::filtered;
  const auto& c = j.at("cluster");
  p.cluster.seed = ref_from_json(c.at("seed"));
  for (const auto& m : c.at("members")) p.cluster.members.push_back(ref_from_json(m));
  p.cluster.draw = c.value("draw", std::uint64_t{0});
  p.instruction = j.at("instruction").get<std::string>();
  p.answer = j.at("answer").get<std::string>();
  p.cited_titles = j.at("cited_titles").get<std::vector<std::string>>();
  p.filter_reason = j.value("filter_reason", "");
  return p;
}

std::vector<ChunkRef> sample_seed_chunks(const std::vector<std::pair<std::string, std::size_t>>& chunk_counts,
                                         std::size_t per_doc, std::uint64_t seed) {
  std::vector<ChunkRef> out;
  for (const auto& [doc_key, n] : chunk_counts) {
    if (n == 0) continue;
    Rng rng(derive_seed(seed, "seed-chunks:" + doc_key));
    for (std::size_t idx : rng.sample_without_replacement(n, std::min(per_doc, n))) out.push_back({doc_key, idx});
  }
  return out;
}

std::optional<ChunkCluster> form_cluster(const ChunkRetriever& retriever, const RefOf& ref_of, const ChunkRef& seed,
                                         std::string_view seed_text, Rng& rng, const ClusterOptions& opts) {
  std::vector<ChunkRef> candidates;
  std::set<std::string, std::less<>> seen{seed.doc_key};
  for (const auto& hit : retriever.retrieve(seed_text, opts.retrieve_k)) {
    const ChunkRef& r = ref_of(hit.chunk);
    if (!seen.insert(r.doc_key).second) continue;
    candidates.push_back(r);
    if (candidates.size() >= opts.max_candidates) break;
  }
  if (candidates.empty()) return std::nullopt;
  const auto m = static_cast<std::size_t>(rng.between(opts.min_extra, opts.max_extra));
  ChunkCluster cluster;
  cluster.seed = seed;
  cluster.members.push_back(seed);
  for (std::size_t i : rng.sample_without_replacement(candidates.size(), std::min(m, candidates.size())))
    cluster.members.push_back(candidates[i]);
  return cluster;
}

BackwardPair parse_backward_response(std::string_view response, const ChunkCluster& cluster) {
  BackwardPair pair;
  pair.cluster = cluster;
  const std::string text = trim(response);
  auto paragraphs = paragraph_spans(text);
  if (paragraphs.size() < 2) {
    pair.status = PairStatus::filtered;
    pair.filter_reason = "unparseable";
    pair.answer = text;
    return pair;
  }
  pair.instruction = trim(paragraphs.front().of(text));
  pair.answer = trim(std::string_view(text).substr(paragraphs[1].begin));
  std::vector<MarkerSpan> spans;
  try {
    spans = find_markers(pair.answer, MarkerFormat::source_tags());
  } catch (const MarkerError&) {
    pair.status = PairStatus::filtered;
    pair.filter_reason = "malformed markers";
    return pair;
  }
  if (spans.empty()) {
    pair.status = PairStatus::filtered;
    pair.filter_reason = "no citations";
    return pair;
  }
  for (const auto& s : spans) {
    std::string t = trim(s.inner.of(pair.answer));
    if (std::find(pair.cited_titles.begin(), pair.cited_titles.end(), t) == pair.cited_titles.end())
      pair.cited_titles.push_back(std::move(t));
  }
  return pair;
}

BackwardPair generate_backward_pair(const ChunkCluster& cluster, const ClusterDocs& docs, const GeneratorClient& gen,
                                    const PromptSet& prompts) {
  const std::string prompt = fill_template(prompts.backward_pair, {{"documents", render_documents(docs)}});
  return parse_backward_response(generate(gen, prompt), cluster);
}

bool is_noisy_citation(std::string_view citation) {
  static const std::regex prefixed(
      R"(^(?:documents?|docs?|titles?|sources?|passages?)(?![a-z])\s*(?:[:#=_\-.(\[]|\d|$|(?:one|two|three|four|five|six|seven|eight|nine|ten|[a-z])\b))",
      std::regex::icase);
  static const std::regex ordinal(
      R"(^(?:[\[(#]?\d+[\])]?|\d+(?:st|nd|rd|th)|first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth)$)",
      std::regex::icase);
  const std::string s = collapse_whitespace(citation);
  if (s.empty()) return true;
  return std::regex_search(s, prefixed) || std::regex_match(s, ordinal);
}

namespace {

void filter(BackwardPair& pair, std::string reason) {
  pair.status = PairStatus::filtered;
  pair.filter_reason = std::move(reason);
}

std::optional<std::string> resolve(std::string_view raw, const std::vector<std::string>& titles, double threshold) {
  const std::string norm = normalize_title(raw);
  for (const auto& t : titles)
    if (t == norm) return t;
  double best = -1.0;
  const std::string* best_title = nullptr;
  for (const auto& t : titles) {
    double r = title_similarity(norm, t);
    if (r > best) {
      best = r;
      best_title = &t;
    }
  }
  if (best_title && best >= threshold) return *best_title;
  return std::nullopt;
}

}  // namespace

BackwardPair filter_invalid_citations(BackwardPair pair, const TitleRegistry& registry,
                                      const std::vector<std::string>& cluster_titles, const FilterOptions& opts) {
  if (pair.status == PairStatus::filtered) return pair;
  std::vector<MarkerSpan> spans;
  try {
    spans = find_markers(pair.answer, MarkerFormat::source_tags());
  } catch (const MarkerError&) {
    filter(pair, "malformed markers");
    return pair;
  }
  if (spans.empty()) {
    filter(pair, "no citations");
    return pair;
  }
  std::vector<std::string> canonical;
  for (const auto& s : spans) {
    std::string_view raw = s.inner.of(pair.answer);
    if (is_noisy_citation(raw)) {
      filter(pair, "noisy citation: " + collapse_whitespace(raw));
      return pair;
    }
    const std::string norm = normalize_title(raw);
    const bool in_cluster = std::find(cluster_titles.begin(), cluster_titles.end(), norm) != cluster_titles.end();
    std::optional<std::string> title;
    if (!in_cluster && registry.contains_title(norm)) {
      if (!opts.lenient) {
        filter(pair, "cluster-external citation: " + collapse_whitespace(raw));
        return pair;
      }
      title = norm;
    } else {
      title = resolve(raw, cluster_titles, opts.fuzzy_threshold);
    }
    if (!title) {
      filter(pair, "unresolved citation: " + collapse_whitespace(raw));
      return pair;
    }
    canonical.push_back(std::move(*title));
  }
  std::string answer;
  std::size_t pos = 0;
  const auto tags = MarkerFormat::source_tags();
  pair.cited_titles.clear();
  for (std::size_t i = 0; i < spans.size(); ++i) {
    answer.append(pair.answer, pos, spans[i].outer.begin - pos);
    answer += tags.wrap(canonical[i]);
    pos = spans[i].outer.end;
    if (std::find(pair.cited_titles.begin(), pair.cited_titles.end(), canonical[i]) == pair.cited_titles.end())
      pair.cited_titles.push_back(canonical[i]);
  }
  answer.append(pair.answer, pos);
  pair.answer = std::move(answer);
  return pair;
}

std::optional<PretrainRecord> finalize_markers(BackwardPair& pair, const Tokenizer& tokenizer,
                                               const MarkerFormat& fmt) {
  if (pair.status == PairStatus::filtered) return std::nullopt;
  std::vector<MarkerSpan> spans;
  try {
    spans = find_markers(pair.answer, MarkerFormat::source_tags());
  } catch (const MarkerError&) {
    filter(pair, "malformed markers");
    return std::nullopt;
  }
  if (spans.empty()) {
    filter(pair, "no citations");
    return std::nullopt;
  }
  std::string answer;
  std::size_t pos = 0;
  for (const auto& s : spans) {
    answer.append(pair.answer, pos, s.outer.begin - pos);
    answer += fmt.wrap(s.inner.of(pair.answer));
    pos = s.outer.end;
  }
  answer.append(pair.answer, pos);
  if (!markers_well_formed(answer, fmt) || answer.find("<source>") != std::string::npos ||
      answer.find("</source>") != std::string::npos) {
    filter(pair, "malformed markers");
    return std::nullopt;
  }
  PretrainRecord r;
  r.variant = Variant::backward;
  for (const auto& m : pair.cluster.members) r.doc_keys.push_back(m.doc_key);
  r.piece_index = pair.cluster.draw;
  r.text = pair.instruction + "\n\n" + answer;
  r.token_count = tokenizer.count(r.text);
  return r;
}

BackwardOutput run_backward(const Corpus& corpus, const TitleRegistry& registry, const std::vector<Chunk>& chunks,
                            const ChunkRetriever& retriever, const GeneratorClient& gen, const Tokenizer& tokenizer,
                            const BackwardOptions& opts, BackwardStats& stats) {
  std::map<ChunkRef, std::size_t> position;
  std::vector<ChunkRef> refs;
  refs.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    refs.push_back({chunks[i].doc_key, chunks[i].chunk_index});
    position.emplace(refs.back(), i);
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& c : chunks) ++counts[c.doc_key];
  std::vector<std::pair<std::string, std::size_t>> chunk_counts;
  for (const auto& d : corpus.docs()) chunk_counts.emplace_back(d.doc_key, counts.count(d.doc_key) ? counts[d.doc_key] : 0);

  auto seeds = sample_seed_chunks(chunk_counts, opts.per_doc_seeds, opts.seed);
  std::sort(seeds.begin(), seeds.end());
  stats.seeds += seeds.size();

  struct Out {
    std::optional<BackwardPair> pair;
    std::optional<PretrainRecord> record;
    std::size_t cluster_size = 0;
    std::string failure;
  };
  RefOf ref_of = [&](std::uint32_t id) -> const ChunkRef& { return refs.at(id); };

  auto results = parallel_map(seeds.size(), opts.in_flight, [&](std::size_t i) {
    Out o;
    const ChunkRef& seed = seeds[i];
    const Chunk& seed_chunk = chunks[position.at(seed)];
    Rng rng(derive_seed(opts.seed, "cluster:" + seed.doc_key + ":" + std::to_string(seed.chunk_index)));
    auto cluster = form_cluster(retriever, ref_of, seed, seed_chunk.text(), rng, opts.cluster);
    if (!cluster) return o;
    cluster->draw = i;
    o.cluster_size = cluster->members.size();
    ClusterDocs docs;
    std::vector<std::string> titles;
    for (const auto& m : cluster->members) {
      titles.push_back(registry.title_of(m.doc_key));
      docs.emplace_back(titles.back(), chunks[position.at(m)].text());
    }
    BackwardPair pair;
    try {
      pair = generate_backward_pair(*cluster, docs, gen, opts.prompts);
    } catch (const ClientError& e) {
      o.failure = seed.doc_key + "#" + std::to_string(seed.chunk_index) + ": " + e.what();
      return o;
    }
    pair = filter_invalid_citations(std::move(pair), registry, titles, opts.filter);
    o.record = finalize_markers(pair, tokenizer, opts.markers);
    o.pair = std::move(pair);
    return o;
  });

  BackwardOutput out;
  for (auto& r : results) {
    if (!r.failure.empty()) {
      ++stats.clusters;
      ++stats.generator_failures;
      stats.diagnostics.push_back(r.failure);
      continue;
    }
    if (!r.pair) {
      ++stats.clusters_skipped;
      continue;
    }
    ++stats.clusters;
    if (r.cluster_size < stats.cluster_sizes.size()) ++stats.cluster_sizes[r.cluster_size];
    if (r.pair->status == PairStatus::kept) {
      ++stats.kept;
      out.records.push_back(std::move(*r.record));
    } else {
      ++stats.filtered;
      auto reason = r.pair->filter_reason.substr(0, r.pair->filter_reason.find(':'));
      ++stats.filter_reasons[reason];
    }
    out.pairs.push_back(std::move(*r.pair));
  }
  return out;
}

}  // namespace citeidx
