#include "citeidx/prompts.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace citeidx {

namespace {

constexpr const char* kEntityExtraction =
    "You will be given a document. Your task is to extract important entities mentioned in the text.\n"
    "\n"
    "Entities include names of people, organizations, locations, dates, and other identifiable items. "
    "Use the categories below as a guide:\n"
    "\t\xE2\x80\xA2\tPeople & Organizations \xE2\x80\x93 Person, Organization\n"
    "\t\xE2\x80\xA2\tLocations \xE2\x80\x93 Country, City, Facility, Region\n"
    "\t\xE2\x80\xA2\tTemporal \xE2\x80\x93 Date, Time\n"
    "\t\xE2\x80\xA2\tEvents \xE2\x80\x93 Historical or notable events\n"
    "\t\xE2\x80\xA2\tObjects \xE2\x80\x93 Products, Works of art, Laws/Policies\n"
    "\t\xE2\x80\xA2\tConcepts \xE2\x80\x93 Theories, Fields, Ideologies\n"
    "\t\xE2\x80\xA2\tQuantities \xE2\x80\x93 Numbers, Money, Rankings\n"
    "\t\xE2\x80\xA2\tBiological/Chemical \xE2\x80\x93 Species, Compounds\n"
    "\t\xE2\x80\xA2\tOther \xE2\x80\x93 Named documents, Tasks, Technologies\n"
    "\n"
    "Document: [document]\n"
    "\n"
    "Only return the 20 most important entities based on their relevance to the main topics of the "
    "document, where each entity is separated by a newline. In your output, only return the important "
    "entities themselves, and do not return any other information like their categories or types.\n";

constexpr const char* kForwardQa =
    "You will be given a document, its title, and an entity from the document. Your task is to generate "
    "detailed questions that explore the relationship between a given entity and the document. "
    "Specifically, ask how, what, when, where, why, or if the entity is related to the content of the "
    "document. In each of your questions, you should include the entity and the document title. The "
    "questions should require a detailed answer.\n"
    "\n"
    "For each question you create, provide a detailed, elaborated answer that explains the relationship "
    "between the entity and the document. The answer should be based on the content of the document and "
    "should not include any external information.\n"
    "\n"
    "Title: [title]\n"
    "Document: [document]\n"
    "\n"
    "\n"
    "Entity: [entity]\n";

constexpr const char* kBackwardPair =
    "You will be provided with multiple documents. Your task is to construct a self-contained "
    "instruction-answer pair that requires a language model to synthesize information from two or more "
    "of these documents in order to generate the correct answer.\n"
    "\n"
    "The instruction should:\n"
    "\t\xE2\x80\xA2\tBe clear, specific, and fully self-contained, so it can be understood without access "
    "to or mention of the original documents.\n"
    "\t\xE2\x80\xA2\tPrompt the model to integrate, compare, or reason across multiple sources of "
    "information.\n"
    "\t\xE2\x80\xA2\tAvoid phrases like \xE2\x80\x9Cin the provided documents\xE2\x80\x9D, \xE2\x80\x9C"
    "based on the above\xE2\x80\x9D, or anything that references the existence of documents.\n"
    "\n"
    "The answer must:\n"
    "\t\xE2\x80\xA2\tBe derived by combining or reconciling information from multiple documents.\n"
    "\t\xE2\x80\xA2\tAttribute every factual claim using the format <source>The title of the "
    "document</source> to indicate where the information came from.\n"
    "\n"
    "[documents]\n"
    "\n"
    "Return the instruction in the first paragraph and the answer in the following paragraphs.\n";

constexpr const char* kTitleRename =
    "The following document needs a short, descriptive, human-readable title that is different from "
    "titles already in use.\n"
    "\n"
    "Current title: [title]\n"
    "Titles already in use: [taken]\n"
    "Document: [document]\n"
    "\n"
    "Return only the new title on a single line.\n";

constexpr const char* kClaimDecomposition =
    "Decompose the answer below into self-contained factual claims. Write one claim per line, and end "
    "each line with the citations the answer attaches to that claim, in the form <|Title|>. If a claim "
    "has no citation, write the claim alone.\n"
    "\n"
    "Question: [question]\n"
    "Answer: [answer]\n";

constexpr const char* kInternalAnswer =
    "Answer the question using what you know. After each statement, cite the title of the document it "
    "comes from as <|Title|>.\n"
    "\n"
    "Question: [question]\n"
    "Answer:";

constexpr const char* kExternalAnswer =
    "Answer the question using only the documents provided. After each statement, cite the supporting "
    "document title as <|Title|>. If the documents do not contain enough information to answer, reply "
    "with [INSUFFICIENT] and nothing else.\n"
    "\n"
    "Example 1\n"
    "Title: Harbor Lighthouse Restoration\n"
    "Content: The lighthouse reopened in 2019 after a four-year restoration funded by the county.\n"
    "Question: When did the lighthouse reopen?\n"
    "Answer: It reopened in 2019 after a four-year restoration. <|Harbor Lighthouse Restoration|>\n"
    "\n"
    "Example 2\n"
    "Title: Valley Orchard Cooperative\n"
    "Content: The cooperative grows apples and pears on 40 hectares.\n"
    "Title: Regional Rail Timetable\n"
    "Content: Trains to the valley run hourly on weekdays.\n"
    "Question: What fruit does the cooperative grow, and how often do trains reach the valley?\n"
    "Answer: The cooperative grows apples and pears. <|Valley Orchard Cooperative|> Trains run hourly on "
    "weekdays. <|Regional Rail Timetable|>\n"
    "\n"
    "Example 3\n"
    "Title: City Library Annual Report\n"
    "Content: Visitor numbers rose by twelve percent.\n"
    "Question: Who designed the library building?\n"
    "Answer: [INSUFFICIENT]\n"
    "\n"
    "[documents]\n"
    "\n"
    "Question: [question]\n"
    "Answer:";

constexpr const char* kJointAnswer =
    "You are given retrieved documents that may or may not be sufficient to answer the question. First "
    "write one line starting with \"Sufficiency:\" stating whether the documents suffice. Then answer the "
    "question, combining the documents with what you know. After each statement, cite the title of the "
    "document it comes from as <|Title|>, whether that document was retrieved or recalled.\n"
    "\n"
    "[documents]\n"
    "\n"
    "Question: [question]\n";

constexpr const char* kEntailmentJudge =
    "Premise: [premise]\n"
    "Claim: [claim]\n"
    "\n"
    "Does the premise entail the claim? Answer yes or no.\n";

}  // namespace

PromptSet PromptSet::defaults() {
  return PromptSet{kEntityExtraction, kForwardQa,     kBackwardPair, kTitleRename,    kClaimDecomposition,
                   kInternalAnswer,   kExternalAnswer, kJointAnswer,  kEntailmentJudge};
}

std::vector<std::pair<std::string, std::string*>> PromptSet::named() {
  return {{"entity_extraction", &entity_extraction}, {"forward_qa", &forward_qa},
          {"backward_pair", &backward_pair},         {"title_rename", &title_rename},
          {"claim_decomposition", &claim_decomposition}, {"internal_answer", &internal_answer},
          {"external_answer", &external_answer},     {"joint_answer", &joint_answer},
          {"entailment_judge", &entailment_judge}};
}

std::vector<std::pair<std::string, const std::string*>> PromptSet::named() const {
  std::vector<std::pair<std::string, const std::string*>> out;
  for (auto& [name, ptr] : const_cast<PromptSet*>(this)->named()) out.emplace_back(name, ptr);
  return out;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet set = defaults();
  if (dir.empty()) return set;
  for (auto& [name, slot] : set.named()) {
    auto path = dir / (name + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read prompt template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    *slot = ss.str();
  }
  return set;
}

void PromptSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (auto& [name, slot] : named()) {
    std::ofstream out(dir / (name + ".txt"), std::ios::binary | std::ios::trunc);
    out << *slot;
  }
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '[') {
      auto close = tmpl.find(']', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string render_documents(const std::vector<std::pair<std::string, std::string>>& title_content) {
  std::string out;
  for (std::size_t i = 0; i < title_content.size(); ++i) {
    if (i) out += "\n\n";
    out += "Title: " + title_content[i].first + "\nContent: " + title_content[i].second;
  }
  return out;
}

}  // namespace citeidx
