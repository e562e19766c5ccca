#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace citeidx {

/// Editable prompt templates. Placeholders are bracketed names such as
/// [document], [title], [entity], [documents], [question], [answer].
struct PromptSet {
  std::string entity_extraction;
  std::string forward_qa;
  std::string backward_pair;
  std::string title_rename;
  std::string claim_decomposition;
  std::string internal_answer;
  std::string external_answer;
  std::string joint_answer;
  std::string entailment_judge;

  static PromptSet defaults();
  /// Defaults overridden by any `<name>.txt` present in `dir`.
  static PromptSet load(const std::filesystem::path& dir);
  /// Writes every template as `<name>.txt`.
  void save(const std::filesystem::path& dir) const;

  std::vector<std::pair<std::string, std::string*>> named();
  std::vector<std::pair<std::string, const std::string*>> named() const;
};

/// Replaces every occurrence of each "[key]" with its value, in one left-to-right
/// pass, so substituted text is never re-scanned.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Sentinel an external-only answer starts with when the retrieved documents are insufficient.
inline constexpr std::string_view kAbstainMarker = "[INSUFFICIENT]";

/// Rendering of retrieved or clustered documents inside a prompt.
std::string render_documents(const std::vector<std::pair<std::string, std::string>>& title_content);

}  // namespace citeidx
