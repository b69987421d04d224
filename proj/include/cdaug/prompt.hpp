#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cdaug/core.hpp"

namespace cdaug {

/// Placeholder name -> replacement text.
using Bindings = std::map<std::string, std::string, std::less<>>;

/// Names of every `{NAME}` placeholder in order of first appearance. A
/// placeholder name is one or more of [A-Z0-9_ ] containing at least one
/// letter; any other brace text is literal.
std::vector<std::string> placeholders_in(std::string_view pattern);

/// Single-pass substitution. Replacement text is never rescanned.
/// Throws Error(kValidation) naming the first unbound placeholder.
std::string substitute(std::string_view pattern, const Bindings& bindings);

/// Splits an input composed per `layout` back into its fields. Literal
/// separators are matched left to right; the last field takes the rest.
/// Throws Error(kValidation) when the input does not follow the layout.
Bindings decompose_input(std::string_view layout, std::string_view input);

/// True if `input` can be decomposed by `layout`.
bool matches_layout(std::string_view layout, std::string_view input);

struct PromptTemplate {
  TaskId task = TaskId::kMovieTag;
  std::string system_text;
  std::string user_pattern;

  std::vector<std::string> placeholders() const;
};

struct RenderedPrompt {
  std::string system;
  std::string user;

  friend bool operator==(const RenderedPrompt&, const RenderedPrompt&) = default;
};

/// Byte-exact substitution over both the system text and the user pattern.
RenderedPrompt render_prompt(const PromptTemplate& prompt, const Bindings& bindings);

inline constexpr std::string_view kHistoryPlaceholder = "RETRIEVED USER HISTORY";

/// Templates for one task: the query prompt used to answer an input and the
/// rewrite prompt used to synthesize similar inputs.
struct TaskPrompts {
  TaskId task = TaskId::kMovieTag;
  int version = 1;
  PromptTemplate query;
  PromptTemplate rewrite;
};

/// One JSON template file per task, `<prompts dir>/<task wire name>.json`.
class PromptCatalog {
 public:
  static PromptCatalog load_directory(const std::filesystem::path& directory);
  static TaskPrompts parse_file(std::string_view json_text);

  void add(TaskPrompts prompts);
  bool contains(TaskId task) const;
  /// Throws Error(kNotFound) naming the task.
  const TaskPrompts& at(TaskId task) const;

 private:
  std::map<TaskId, TaskPrompts> prompts_;
};

}  // namespace cdaug
