#include "citeidx/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <thread>
#include <unordered_set>

#include "citeidx/prompts.hpp"
#include "citeidx/rng.hpp"
#include "citeidx/simd.hpp"
#include "citeidx/text.hpp"

namespace citeidx {

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
  double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt);
  ms = std::min(ms, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

std::string generate(const GeneratorClient& client, std::string_view prompt, const SleepFn& sleep) {
  if (trim(prompt).empty()) throw ClientError(ClientError::Kind::contract, "generate: empty prompt");
  const RetryPolicy policy = client.retry_policy();
  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, policy.max_attempts); ++attempt) {
    try {
      return client.complete_once(prompt);
    } catch (const TransientError& e) {
      last_error = e.what();
      if (attempt + 1 < policy.max_attempts) {
        auto delay = policy.delay_for(attempt);
        if (sleep) {
          sleep(delay);
        } else {
          std::this_thread::sleep_for(delay);
        }
      }
    }
  }
  throw ClientError(ClientError::Kind::exhausted,
                    "generator retries exhausted (" + client.describe() + "): " + last_error);
}

// ---------------------------------------------------------------------------
// MockGenerator

MockGenerator& MockGenerator::add(std::string prompt, std::string completion) {
  table_[std::move(prompt)] = std::move(completion);
  return *this;
}

MockGenerator& MockGenerator::respond_with(Responder responder) {
  responder_ = std::move(responder);
  return *this;
}

MockGenerator& MockGenerator::fail_first(int n) {
  fail_first_ = n;
  return *this;
}

MockGenerator& MockGenerator::noisy_citation_rate(double p) {
  noisy_rate_ = p;
  return *this;
}

RetryPolicy MockGenerator::retry_policy() const {
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(0);
  p.max_delay = std::chrono::milliseconds(0);
  return p;
}

std::string MockGenerator::describe() const { return "mock(seed=" + std::to_string(seed_) + ")"; }

std::string MockGenerator::complete_once(std::string_view prompt) const {
  const std::uint64_t n = calls_.fetch_add(1);
  if (n < static_cast<std::uint64_t>(fail_first_)) throw TransientError("mock transient failure");
  if (auto it = table_.find(prompt); it != table_.end()) return it->second;
  if (responder_) {
    if (auto r = responder_(prompt)) return *r;
  }
  return synthesize(prompt);
}

namespace {

std::string between(std::string_view text, std::string_view open, std::string_view close) {
  auto b = text.find(open);
  if (b == std::string_view::npos) return {};
  b += open.size();
  auto e = close.empty() ? std::string_view::npos : text.find(close, b);
  return std::string(text.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
}

std::string line_after(std::string_view text, std::string_view label) {
  auto b = text.find(label);
  if (b == std::string_view::npos) return {};
  b += label.size();
  auto e = text.find('\n', b);
  return trim(text.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
}

bool is_upper_ascii(char c) { return c >= 'A' && c <= 'Z'; }

std::string strip_edge_punct(std::string_view w) {
  std::size_t b = 0, e = w.size();
  auto punct = [](char c) { return !(std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80); };
  while (b < e && punct(w[b])) ++b;
  while (e > b && punct(w[e - 1])) --e;
  return std::string(w.substr(b, e - b));
}

const std::set<std::string, std::less<>> kFunctionWords = {
    "A", "An", "And", "As", "At", "But", "By", "For", "From", "He", "Her", "His", "However", "I", "If", "In",
    "It", "Its", "Of", "On", "She", "So", "The", "Their", "There", "These", "They", "This", "Those", "To",
    "We", "When", "While", "With"};

// Runs of capitalized words, in order of first appearance; sentence-initial
// function words are skipped.
std::vector<std::string> capitalized_phrases(std::string_view doc, std::size_t limit) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::vector<std::string> run;
  auto flush = [&] {
    if (!run.empty()) {
      std::string phrase = join(run, " ");
      if (seen.insert(to_lower_ascii(phrase)).second) out.push_back(phrase);
      run.clear();
    }
  };
  for (auto w : split_words(doc)) {
    std::string core = strip_edge_punct(w);
    bool cap = !core.empty() && (is_upper_ascii(core[0]) || std::isdigit(static_cast<unsigned char>(core[0])));
    if (cap && run.empty() && kFunctionWords.count(core)) continue;
    if (cap) run.push_back(core);
    bool ends_phrase = !cap || (!w.empty() && !std::isalnum(static_cast<unsigned char>(w.back())));
    if (ends_phrase) flush();
    if (out.size() >= limit) break;
  }
  flush();
  if (out.size() > limit) out.resize(limit);
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_rendered_documents(std::string_view block) {
  std::vector<std::pair<std::string, std::string>> docs;
  std::size_t pos = 0;
  while ((pos = block.find("Title: ", pos)) != std::string_view::npos) {
    auto eol = block.find('\n', pos);
    if (eol == std::string_view::npos) break;
    std::string title = trim(block.substr(pos + 7, eol - pos - 7));
    std::string content;
    if (block.substr(eol + 1).starts_with("Content: ")) {
      auto cb = eol + 1 + 9;
      auto ce = block.find("\n\nTitle: ", cb);
      auto ce2 = block.find("\n\nQuestion: ", cb);
      ce = std::min(ce, ce2);
      content = trim(block.substr(cb, ce == std::string_view::npos ? std::string_view::npos : ce - cb));
      pos = ce == std::string_view::npos ? block.size() : ce;
    } else {
      pos = eol;
    }
    docs.emplace_back(std::move(title), std::move(content));
  }
  return docs;
}

std::string first_sentence(std::string_view text) {
  auto spans = sentence_spans(text);
  if (spans.empty()) return trim(text);
  return std::string(spans.front().of(text));
}

double term_coverage(std::string_view premise, std::string_view claim) {
  auto claim_terms = analyze_terms(claim);
  if (claim_terms.empty()) return 0.0;
  auto premise_terms = analyze_terms(premise);
  std::unordered_set<std::string> have(premise_terms.begin(), premise_terms.end());
  std::set<std::string> uniq(claim_terms.begin(), claim_terms.end());
  std::size_t hit = 0;
  for (auto& t : uniq) hit += have.count(t);
  return static_cast<double>(hit) / static_cast<double>(uniq.size());
}

std::string synth_entities(std::string_view prompt) {
  std::string doc = between(prompt, "Document: ", "\n\nOnly return the 20");
  auto ents = capitalized_phrases(doc, 20);
  if (ents.empty()) {
    for (auto w : split_words(doc)) {
      auto core = strip_edge_punct(w);
      if (core.size() >= 6) ents.push_back(core);
      if (ents.size() >= 5) break;
    }
  }
  return join(ents, "\n");
}

std::string synth_forward(std::string_view prompt, Rng& rng) {
  std::string title = line_after(prompt, "\nTitle: ");
  std::string doc = between(prompt, "\nDocument: ", "\n\n\nEntity: ");
  std::string entity = line_after(prompt, "\n\n\nEntity: ");
  auto sentences = sentence_spans(doc);
  std::vector<std::string> support;
  for (auto s : sentences) {
    if (s.of(doc).find(entity) != std::string_view::npos) support.emplace_back(s.of(doc));
  }
  if (support.empty()) support.push_back(first_sentence(doc));

  static constexpr const char* kWh[] = {"How", "What", "When", "Where", "Why", "If"};
  auto title_words = split_words(title);
  const int pairs = static_cast<int>(rng.between(1, 3));
  std::string out;
  for (int k = 0; k < pairs; ++k) {
    std::string mention;
    double roll = rng.unit();
    if (roll < 0.6 || title_words.size() < 2) {
      mention = " in the document titled <source>" + title + "</source>";
    } else if (roll < 0.85) {
      std::vector<std::string_view> head(title_words.begin(), title_words.begin() + static_cast<long>((title_words.size() + 1) / 2));
      mention = " in the document titled \"" + join(head, " ") + "\"";
    } else {
      mention = "";
    }
    const char* wh = kWh[rng.below(6)];
    out += "**Question " + std::to_string(k + 1) + ":**\n";
    out += std::string(wh) + " is " + entity + " relevant" + mention + "?\n\n";
    out += "**Answer:**\n";
    out += join(support, " ") + "\n\n";
  }
  return out;
}

std::string synth_backward(std::string_view prompt, Rng& rng, double noisy_rate) {
  std::string block = between(prompt, "document</source> to indicate where the information came from.\n",
                              "\n\nReturn the instruction in the first paragraph");
  auto docs = parse_rendered_documents(block);
  if (docs.empty()) return "No documents were provided.";
  std::vector<std::string> topics;
  for (auto& [t, c] : docs) {
    auto phr = capitalized_phrases(c, 1);
    topics.push_back(phr.empty() ? t : phr.front());
  }
  std::string out = "Explain how " + join(topics, " and ") + " relate to one another, drawing on the facts about each.\n\n";
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::string cite = docs[i].first;
    if (noisy_rate > 0 && rng.unit() < noisy_rate) cite = "document " + std::to_string(i + 1);
    out += first_sentence(docs[i].second) + " <source>" + cite + "</source>";
    out += i + 1 < docs.size() ? "\n\n" : "\n";
  }
  return out;
}

std::string synth_rename(std::string_view prompt, Rng& rng) {
  std::string title = line_after(prompt, "Current title: ");
  std::string doc = between(prompt, "\nDocument: ", "\n\nReturn only the new title");
  auto phrases = capitalized_phrases(doc, 8);
  std::erase_if(phrases, [&](const std::string& p) { return to_lower_ascii(p) == to_lower_ascii(title); });
  std::string qualifier;
  if (!phrases.empty()) {
    qualifier = phrases[rng.below(phrases.size())];
  } else {
    auto words = split_words(doc);
    qualifier = words.empty() ? "untitled" : strip_edge_punct(words[rng.below(words.size())]);
  }
  if (title.empty()) return qualifier;
  return title + " (" + qualifier + ")";
}

std::string synth_decompose(std::string_view prompt) {
  std::string answer = between(prompt, "\nAnswer: ", "");
  answer = trim(answer);
  // Keep trailing citation markers with the sentence they follow.
  std::vector<std::string> lines;
  for (auto s : sentence_spans(answer)) {
    std::string sent(s.of(answer));
    if (!lines.empty() && sent.starts_with("<|")) {
      lines.back() += " " + sent;
    } else {
      lines.push_back(sent);
    }
  }
  return join(lines, "\n");
}

std::string synth_external(std::string_view prompt, bool joint) {
  std::string_view docs_region = prompt;
  if (!joint) {
    auto p = prompt.find("Answer: [INSUFFICIENT]\n");
    docs_region = p == std::string_view::npos ? prompt : prompt.substr(p + 23);
  }
  auto docs = parse_rendered_documents(docs_region);
  std::string question = line_after(prompt, "\nQuestion: ");
  auto qpos = prompt.rfind("\nQuestion: ");
  if (qpos != std::string_view::npos) question = line_after(prompt.substr(qpos), "\nQuestion: ");
  double best = -1;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double cov = term_coverage(docs[i].second, question);
    if (cov > best) {
      best = cov;
      best_i = i;
    }
  }
  bool sufficient = !docs.empty() && best >= 0.3;
  if (!joint && !sufficient) return std::string(kAbstainMarker);
  std::string answer;
  if (!docs.empty()) answer = first_sentence(docs[best_i].second) + " <|" + docs[best_i].first + "|>";
  if (joint) return std::string("Sufficiency: ") + (sufficient ? "yes" : "no") + "\n" + answer;
  return answer;
}

}  // namespace

std::string MockGenerator::synthesize(std::string_view prompt) const {
  Rng rng(derive_seed(seed_, prompt));
  if (prompt.starts_with("You will be given a document. Your task is to extract")) return synth_entities(prompt);
  if (prompt.starts_with("You will be given a document, its title, and an entity")) return synth_forward(prompt, rng);
  if (prompt.starts_with("You will be provided with multiple documents")) return synth_backward(prompt, rng, noisy_rate_);
  if (prompt.starts_with("The following document needs a short")) return synth_rename(prompt, rng);
  if (prompt.starts_with("Decompose the answer below")) return synth_decompose(prompt);
  if (prompt.starts_with("Answer the question using only the documents")) return synth_external(prompt, false);
  if (prompt.starts_with("You are given retrieved documents")) return synth_external(prompt, true);
  if (prompt.starts_with("Answer the question using what you know")) return "I do not recall a source for this.";
  if (prompt.starts_with("Premise: ")) {
    std::string premise = line_after(prompt, "Premise: ");
    std::string claim = line_after(prompt, "\nClaim: ");
    return term_coverage(premise, claim) >= 0.5 ? "yes" : "no";
  }
  return "mock-" + hex64(rng.next());
}

// ---------------------------------------------------------------------------
// Scorers

double score_sequence(const ScorerClient& client, std::string_view context, std::string_view continuation) {
  if (trim(continuation).empty())
    throw ClientError(ClientError::Kind::contract, "score_sequence: empty continuation");
  double s = client.score(context, continuation);
  if (!std::isfinite(s) || s > 0.0) throw ClientError(ClientError::Kind::bad_response, "scorer returned invalid log-probability");
  return s;
}

double MockScorer::token_logprob(std::uint64_t state, std::string_view token) {
  std::uint64_t h = mix64(state ^ (fnv1a64(token) * 0x9e3779b97f4a7c15ULL));
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return -(0.01 + 10.0 * u);
}

double MockScorer::score(std::string_view context, std::string_view continuation) const {
  std::uint64_t state = mix64(seed_);
  for (auto w : split_words(context)) state = mix64(state ^ fnv1a64(w));
  double total = 0.0;
  for (auto w : split_words(continuation)) {
    total += token_logprob(state, w);
    state = mix64(state ^ fnv1a64(w));
  }
  return total;
}

double BiasedScorer::score(std::string_view context, std::string_view continuation) const {
  double s = base_->score(context, continuation);
  return preferred_(context, continuation) ? s : s - penalty_;
}

// ---------------------------------------------------------------------------
// Embeddings

Embedding embed(const EmbedderClient& client, std::string_view text) {
  if (trim(text).empty()) throw ClientError(ClientError::Kind::contract, "embed: empty text");
  Embedding v = client.embed(text);
  if (v.size() != client.dimension()) throw ClientError(ClientError::Kind::bad_response, "embedder dimension mismatch");
  return v;
}

double similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ClientError(ClientError::Kind::contract, "similarity: dimension mismatch");
  double uv = simd::dot(u, v);
  double uu = simd::dot(u, u);
  double vv = simd::dot(v, v);
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
}

Embedding MockEmbedder::embed(std::string_view text) const {
  std::string s = "^" + to_lower_ascii(collapse_whitespace(text)) + "$";
  Embedding v(dim_, 0.0);
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
    std::uint64_t h = mix64(seed_ ^ fnv1a64(std::string_view(s).substr(i, 3)));
    v[h % dim_] += 1.0;
  }
  double norm = std::sqrt(simd::dot(v, v));
  if (norm > 0) {
    for (auto& x : v) x /= norm;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Entailment

MockEntailment& MockEntailment::set(std::string premise, std::string claim, double score) {
  table_[{std::move(premise), std::move(claim)}] = score;
  return *this;
}

double MockEntailment::score(std::string_view premise, std::string_view claim) const {
  calls_.fetch_add(1);
  auto it = table_.find(std::pair<std::string, std::string>(premise, claim));
  if (it != table_.end()) return it->second;
  return term_coverage(premise, claim);
}

double GeneratorEntailment::score(std::string_view premise, std::string_view claim) const {
  std::string prompt = fill_template(PromptSet::defaults().entailment_judge,
                                     {{"premise", std::string(premise)}, {"claim", std::string(claim)}});
  std::string reply = to_lower_ascii(trim(generate(*gen_, prompt)));
  return reply.starts_with("yes") ? 1.0 : 0.0;
}

}  // namespace citeidx
