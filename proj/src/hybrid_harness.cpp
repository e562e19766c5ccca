#include "citeidx/hybrid_harness.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "citeidx/citation_eval.hpp"
#include "citeidx/decode_constraint.hpp"
#include "citeidx/parallel.hpp"

namespace citeidx {

std::string_view to_string(Provider p) {
  switch (p) {
    case Provider::sparse: return "sparse";
    case Provider::dense: return "dense";
    case Provider::mixed: return "mixed";
  }
  return "sparse";
}

std::vector<std::string> RankedList::doc_keys() const {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.doc_key);
  return out;
}

RankedList mix_retrieval(const RankedList& sparse, const RankedList& dense, double quality, Rng& rng,
                         std::size_t slots) {
  if (quality < 0.0 || quality > 1.0) throw std::invalid_argument("mix_retrieval: quality must be in [0, 1]");
  RankedList out;
  out.provider = Provider::mixed;
  std::set<std::string> used;
  std::size_t pos[2] = {0, 0};
  const RankedList* src[2] = {&sparse, &dense};
  auto next_from = [&](int s) -> const RankedEntry* {
    auto& p = pos[s];
    while (p < src[s]->entries.size() && used.count(src[s]->entries[p].doc_key)) ++p;
    return p < src[s]->entries.size() ? &src[s]->entries[p++] : nullptr;
  };
  for (std::size_t slot = 0; slot < slots; ++slot) {
    const int pick = rng.bernoulli(quality) ? 1 : 0;
    int from = pick;
    const RankedEntry* e = next_from(pick);
    if (!e) {
      from = 1 - pick;
      e = next_from(from);
    }
    if (!e) break;
    RankedEntry copy = *e;
    copy.provenance = from == 1 ? Provider::dense : Provider::sparse;
    used.insert(copy.doc_key);
    out.entries.push_back(std::move(copy));
  }
  out.short_list = out.entries.size() < slots;
  return out;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::internal: return "internal";
    case Strategy::external: return "external";
    case Strategy::joint: return "joint";
    case Strategy::fallback: return "fallback";
    case Strategy::oracle: return "oracle";
  }
  return "internal";
}

Strategy parse_strategy(std::string_view s) {
  for (auto st : {Strategy::internal, Strategy::external, Strategy::joint, Strategy::fallback, Strategy::oracle})
    if (to_string(st) == s) return st;
  throw std::invalid_argument("unknown strategy: " + std::string(s));
}

json routed_result_to_json(const RoutedResult& r) {
  json j = {{"id", r.id},
            {"strategy", to_string(r.strategy)},
            {"quality", r.quality},
            {"trial", r.trial},
            {"answer", r.answer},
            {"citations", r.citations},
            {"abstained", r.abstained},
            {"correctness", r.correctness}};
  if (!r.selected.empty()) j["selected"] = r.selected;
  return j;
}

RoutedResult routed_result_from_json(const json& j) {
  RoutedResult r;
  r.id = j.at("id").get<std::string>();
  r.strategy = parse_strategy(j.at("strategy").get<std::string>());
  r.quality = j.value("quality", 0.0);
  r.trial = j.value("trial", std::size_t{0});
  r.answer = j.value("answer", "");
  r.citations = j.value("citations", std::vector<std::string>{});
  r.abstained = j.value("abstained", false);
  r.correctness = j.value("correctness", 0.0);
  r.selected = j.value("selected", "");
  return r;
}

namespace {

std::string render_list(const RankedList& list, const RouteContext& ctx) {
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto& e : list.entries) {
    const Document* d = ctx.corpus.find(e.doc_key);
    if (!d) throw std::invalid_argument("retrieved document not in corpus: " + e.doc_key);
    docs.emplace_back(ctx.registry.title_of(e.doc_key), d->content);
  }
  return render_documents(docs);
}

RoutedResult finish(Strategy s, const RouteItem& item, std::string completion, const RouteContext& ctx) {
  RoutedResult r;
  r.id = item.id;
  r.strategy = s;
  std::string answer = trim(completion);
  if (s == Strategy::joint && starts_with_icase(answer, "Sufficiency:")) {
    auto eol = answer.find('\n');
    answer = eol == std::string::npos ? "" : trim(answer.substr(eol + 1));
  }
  r.abstained = answer.find(kAbstainMarker) != std::string::npos;
  r.answer = std::move(answer);
  try {
    for (auto& c : parse_citations(r.answer, ctx.markers).all_citations())
      if (std::find(r.citations.begin(), r.citations.end(), c) == r.citations.end()) r.citations.push_back(std::move(c));
  } catch (const MarkerError&) {
    r.citations.clear();
  }
  if (!r.abstained && !item.gold_answers.empty())
    r.correctness = em_recall(strip_markers(r.answer, ctx.markers), item.gold_answers);
  return r;
}

}  // namespace

RoutedResult route(Strategy strategy, const RouteItem& item, const RouteContext& ctx, const RankedList* retrieved) {
  switch (strategy) {
    case Strategy::internal:
      return finish(strategy, item, generate(ctx.gen, fill_template(ctx.prompts.internal_answer, {{"question", item.question}})),
                    ctx);
    case Strategy::external:
    case Strategy::joint: {
      if (!retrieved) throw std::invalid_argument(std::string(to_string(strategy)) + " routing needs a retrieved list");
      const std::string& tmpl = strategy == Strategy::external ? ctx.prompts.external_answer : ctx.prompts.joint_answer;
      return finish(strategy, item,
                    generate(ctx.gen, fill_template(tmpl, {{"documents", render_list(*retrieved, ctx)},
                                                           {"question", item.question}})),
                    ctx);
    }
    case Strategy::fallback: {
      RoutedResult ext = route(Strategy::external, item, ctx, retrieved);
      RoutedResult r = ext.abstained ? route(Strategy::joint, item, ctx, retrieved) : std::move(ext);
      r.selected = to_string(r.strategy);
      r.strategy = Strategy::fallback;
      return r;
    }
    case Strategy::oracle:
      throw std::invalid_argument("oracle is selected from internal and external results, not routed");
  }
  throw std::invalid_argument("unknown strategy");
}

RoutedResult oracle_select(const RoutedResult& internal, const RoutedResult& external) {
  const bool ext = external.correctness > internal.correctness;
  RoutedResult r = ext ? external : internal;
  r.selected = ext ? "external" : "internal";
  r.strategy = Strategy::oracle;
  return r;
}

SliceReport conflict_slices(const std::vector<ItemResults>& items, double threshold) {
  SliceReport rep;
  std::map<Strategy, std::array<double, 3>> sums;
  std::map<Strategy, std::array<std::size_t, 3>> counts;
  for (const auto& item : items) {
    auto in = item.find(Strategy::internal);
    auto ex = item.find(Strategy::external);
    if (in == item.end() || ex == item.end()) continue;
    const bool i1 = in->second.correctness >= threshold;
    const bool e1 = ex->second.correctness >= threshold;
    const std::size_t slice = (!i1 && e1) ? 0 : (i1 && !e1) ? 1 : 2;
    ++rep.counts[slice];
    ++rep.total;
    for (const auto& [s, r] : item) {
      sums[s][slice] += r.correctness >= threshold ? 1.0 : 0.0;
      ++counts[s][slice];
    }
  }
  for (const auto& [s, c] : counts) {
    auto& acc = rep.accuracy[s];
    for (std::size_t k = 0; k < 3; ++k) acc[k] = c[k] ? sums[s][k] / static_cast<double>(c[k]) : 0.0;
  }
  return rep;
}

std::string format_slice_table(const SliceReport& report) {
  std::ostringstream out;
  out << fmt::format("{:<14}{:>10}{:>8}", "Slice", "Share", "N");
  for (const auto& [s, _] : report.accuracy) out << fmt::format("{:>10}", to_string(s));
  out << "\n";
  for (std::size_t k = 0; k < 3; ++k) {
    out << fmt::format("{:<14}{:>9.1f}%{:>8}", SliceReport::kNames[k], 100.0 * report.proportion(k), report.counts[k]);
    for (const auto& [s, acc] : report.accuracy) out << fmt::format("{:>10.3f}", acc[k]);
    out << "\n";
  }
  out << fmt::format("{:<14}{:>9.1f}%{:>8}\n", "Total", report.total ? 100.0 : 0.0, report.total);
  return out.str();
}

RankedList oracle_dense_list(const RouteItem& item, const RankedList& sparse) {
  RankedList out;
  out.provider = Provider::dense;
  double score = static_cast<double>(sparse.entries.size() + 1);
  out.entries.push_back({item.gold_doc_key, score, Provider::dense});
  for (const auto& e : sparse.entries) {
    if (e.doc_key == item.gold_doc_key) continue;
    score -= 1.0;
    out.entries.push_back({e.doc_key, score, Provider::dense});
  }
  return out;
}

HybridRun run_hybrid(const std::vector<RouteItem>& items, const std::vector<RankedList>& sparse,
                     const std::vector<RankedList>& dense, const RouteContext& ctx, const HybridOptions& opts) {
  if (sparse.size() != items.size() || dense.size() != items.size())
    throw std::invalid_argument("run_hybrid: one sparse and one dense list per item required");
  const std::size_t trials = std::max<std::size_t>(1, opts.trials);
  std::set<Strategy> wanted(opts.strategies.begin(), opts.strategies.end());
  std::set<Strategy> needed = wanted;
  if (wanted.count(Strategy::oracle)) {
    needed.insert(Strategy::internal);
    needed.insert(Strategy::external);
  }
  needed.erase(Strategy::oracle);

  struct Out {
    ItemResults results;
    bool short_list = false;
    std::string error;
  };
  auto outs = parallel_map(items.size() * trials, opts.jobs, [&](std::size_t n) {
    const std::size_t i = n / trials, t = n % trials;
    Out o;
    Rng rng(derive_seed(opts.seed, "mix:" + items[i].id + ":" + std::to_string(t)));
    RankedList mixed = mix_retrieval(sparse[i], dense[i], opts.quality, rng, opts.slots);
    o.short_list = mixed.short_list;
    try {
      for (Strategy s : needed) {
        RoutedResult r = route(s, items[i], ctx, &mixed);
        r.quality = opts.quality;
        r.trial = t;
        o.results.emplace(s, std::move(r));
      }
      if (wanted.count(Strategy::oracle))
        o.results.emplace(Strategy::oracle, oracle_select(o.results.at(Strategy::internal), o.results.at(Strategy::external)));
    } catch (const std::exception& e) {
      o.error = items[i].id + " (trial " + std::to_string(t) + "): " + e.what();
      o.results.clear();
    }
    return o;
  });

  HybridRun run;
  for (auto& o : outs) {
    run.short_lists += o.short_list ? 1 : 0;
    if (!o.error.empty()) {
      ++run.dropped;
      run.diagnostics.push_back(std::move(o.error));
      continue;
    }
    for (Strategy s : opts.strategies)
      if (auto it = o.results.find(s); it != o.results.end()) run.results.push_back(it->second);
    run.per_item.push_back(std::move(o.results));
  }
  return run;
}

}  // namespace citeidx
