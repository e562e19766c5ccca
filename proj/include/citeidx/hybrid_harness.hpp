#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeidx/corpus.hpp"
#include "citeidx/markers.hpp"
#include "citeidx/model_io.hpp"
#include "citeidx/prompts.hpp"
#include "citeidx/rng.hpp"

namespace citeidx {

enum class Provider { sparse, dense, mixed };
std::string_view to_string(Provider p);

struct RankedEntry {
  std::string doc_key;
  double score = 0.0;
  Provider provenance = Provider::sparse;
  bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
  Provider provider = Provider::sparse;
  std::vector<RankedEntry> entries;
  /// Set by mix_retrieval when fewer distinct documents than slots were available.
  bool short_list = false;

  std::vector<std::string> doc_keys() const;
};

/// Each slot comes from `dense` with probability q, otherwise from `sparse`.
/// Both sources are consumed in order, documents already placed are skipped, and
/// an exhausted source is backfilled from the other one.
RankedList mix_retrieval(const RankedList& sparse, const RankedList& dense, double quality, Rng& rng,
                         std::size_t slots = 5);

enum class Strategy { internal, external, joint, fallback, oracle };
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct RouteItem {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;
  std::string gold_doc_key;
};

struct RoutedResult {
  std::string id;
  Strategy strategy = Strategy::internal;
  std::string answer;
  std::vector<std::string> citations;
  bool abstained = false;
  double correctness = 0.0;
  double quality = 0.0;
  std::size_t trial = 0;
  /// Fallback: "external" or "joint"; oracle: "internal" or "external".
  std::string selected;
};

json routed_result_to_json(const RoutedResult& r);
RoutedResult routed_result_from_json(const json& j);

struct RouteContext {
  const GeneratorClient& gen;
  const Corpus& corpus;
  const TitleRegistry& registry;
  PromptSet prompts = PromptSet::defaults();
  MarkerFormat markers;
};

/// Internal answers closed-book; external answers from the retrieved documents
/// and may abstain with kAbstainMarker; joint sees the documents and may mix
/// retrieved and remembered citations; fallback runs external and re-routes to
/// joint on abstention. Oracle is not routable (see oracle_select). Throws
/// std::invalid_argument when a retrieval strategy gets no list, and ClientError
/// when the generator fails.
RoutedResult route(Strategy strategy, const RouteItem& item, const RouteContext& ctx,
                   const RankedList* retrieved = nullptr);

/// The result with higher correctness; internal on ties.
RoutedResult oracle_select(const RoutedResult& internal, const RoutedResult& external);

using ItemResults = std::map<Strategy, RoutedResult>;

struct SliceReport {
  static constexpr std::array<const char*, 3> kNames = {"Int=0,Ext=1", "Int=1,Ext=0", "No conflict"};
  std::array<std::size_t, 3> counts{};
  std::size_t total = 0;
  /// Mean binarized correctness per strategy and slice.
  std::map<Strategy, std::array<double, 3>> accuracy;

  double proportion(std::size_t slice) const {
    return total ? static_cast<double>(counts[slice]) / static_cast<double>(total) : 0.0;
  }
};

/// Partitions items by binarized internal/external correctness. Items missing
/// either result are skipped.
SliceReport conflict_slices(const std::vector<ItemResults>& items, double threshold = 0.5);

/// Plain-text table: one row per slice with proportion and per-strategy accuracy.
std::string format_slice_table(const SliceReport& report);

/// Stand-in dense provider: the gold document first, then the sparse list
/// without it, with decreasing synthetic scores.
RankedList oracle_dense_list(const RouteItem& item, const RankedList& sparse);

struct HybridOptions {
  double quality = 0.5;
  std::vector<Strategy> strategies = {Strategy::internal, Strategy::external, Strategy::joint, Strategy::fallback,
                                      Strategy::oracle};
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::size_t slots = 5;
  unsigned jobs = 1;
};

struct HybridRun {
  std::vector<RoutedResult> results;   // (item, trial, strategy) order
  std::vector<ItemResults> per_item;   // one entry per (item, trial)
  std::size_t dropped = 0;
  std::size_t short_lists = 0;
  std::vector<std::string> diagnostics;
};

/// Mixes retrieval per (item, trial) with a seed derived from (seed, id, trial)
/// and routes every requested strategy. Oracle needs internal and external
/// results and computes them when not requested.
HybridRun run_hybrid(const std::vector<RouteItem>& items, const std::vector<RankedList>& sparse,
                     const std::vector<RankedList>& dense, const RouteContext& ctx, const HybridOptions& opts);

}  // namespace citeidx
