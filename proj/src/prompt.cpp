#include "cdaug/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "cdaug/error.hpp"

namespace cdaug {

namespace {

struct Segment {
  bool is_placeholder = false;
  std::string_view text;  // literal text or placeholder name
};

bool is_name_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == ' ';
}

/// Returns the placeholder name if `pattern[open]` starts a valid `{NAME}`.
std::optional<std::string_view> placeholder_at(std::string_view pattern, std::size_t open) {
  const auto close = pattern.find('}', open + 1);
  if (close == std::string_view::npos) return std::nullopt;
  const auto name = pattern.substr(open + 1, close - open - 1);
  if (name.empty()) return std::nullopt;
  bool has_letter = false;
  for (const char c : name) {
    if (!is_name_char(c)) return std::nullopt;
    if (c >= 'A' && c <= 'Z') has_letter = true;
  }
  if (!has_letter) return std::nullopt;
  return name;
}

std::vector<Segment> split_pattern(std::string_view pattern) {
  std::vector<Segment> segments;
  std::size_t literal_start = 0;
  std::size_t pos = 0;
  while ((pos = pattern.find('{', pos)) != std::string_view::npos) {
    if (auto name = placeholder_at(pattern, pos)) {
      if (pos > literal_start) {
        segments.push_back({false, pattern.substr(literal_start, pos - literal_start)});
      }
      segments.push_back({true, *name});
      pos += name->size() + 2;
      literal_start = pos;
    } else {
      ++pos;
    }
  }
  if (literal_start < pattern.size()) {
    segments.push_back({false, pattern.substr(literal_start)});
  }
  return segments;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::vector<std::string> placeholders_in(std::string_view pattern) {
  std::vector<std::string> names;
  for (const auto& segment : split_pattern(pattern)) {
    if (!segment.is_placeholder) continue;
    if (std::find(names.begin(), names.end(), segment.text) == names.end()) {
      names.emplace_back(segment.text);
    }
  }
  return names;
}

std::string substitute(std::string_view pattern, const Bindings& bindings) {
  std::string out;
  out.reserve(pattern.size());
  for (const auto& segment : split_pattern(pattern)) {
    if (!segment.is_placeholder) {
      out.append(segment.text);
      continue;
    }
    auto it = bindings.find(segment.text);
    if (it == bindings.end()) {
      throw Error(ErrorKind::kValidation,
                  "missing binding for placeholder " + std::string(segment.text));
    }
    out.append(it->second);
  }
  return out;
}

Bindings decompose_input(std::string_view layout, std::string_view input) {
  const auto segments = split_pattern(layout);
  Bindings fields;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& segment = segments[i];
    if (!segment.is_placeholder) {
      if (input.substr(pos, segment.text.size()) != segment.text) {
        throw Error(ErrorKind::kValidation, "input does not follow layout '" + std::string(layout) + "'");
      }
      pos += segment.text.size();
      continue;
    }
    const bool last = i + 1 == segments.size();
    std::size_t end = input.size();
    if (!last) {
      if (segments[i + 1].is_placeholder) {
        throw Error(ErrorKind::kValidation, "layout has adjacent placeholders: " + std::string(layout));
      }
      end = input.find(segments[i + 1].text, pos);
      if (end == std::string_view::npos) {
        throw Error(ErrorKind::kValidation, "input does not follow layout '" + std::string(layout) + "'");
      }
    }
    fields.emplace(std::string(segment.text), std::string(input.substr(pos, end - pos)));
    pos = end;
  }
  if (pos != input.size()) {
    throw Error(ErrorKind::kValidation, "trailing text after layout '" + std::string(layout) + "'");
  }
  return fields;
}

bool matches_layout(std::string_view layout, std::string_view input) {
  try {
    decompose_input(layout, input);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<std::string> PromptTemplate::placeholders() const {
  auto names = placeholders_in(system_text);
  for (auto& name : placeholders_in(user_pattern)) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
  }
  return names;
}

RenderedPrompt render_prompt(const PromptTemplate& prompt, const Bindings& bindings) {
  return {substitute(prompt.system_text, bindings), substitute(prompt.user_pattern, bindings)};
}

TaskPrompts PromptCatalog::parse_file(std::string_view json_text) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    TaskPrompts prompts;
    prompts.task = parse_task_id(doc.at("task").get<std::string>());
    prompts.version = doc.value("version", 1);
    auto read_template = [&](const char* key) {
      const auto& node = doc.at(key);
      return PromptTemplate{prompts.task, node.at("system").get<std::string>(),
                            node.at("user").get<std::string>()};
    };
    prompts.query = read_template("query");
    prompts.rewrite = read_template("rewrite");
    return prompts;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("malformed prompt template: ") + e.what());
  }
}

PromptCatalog PromptCatalog::load_directory(const std::filesystem::path& directory) {
  PromptCatalog catalog;
  for (const TaskId task : all_tasks()) {
    const auto path = directory / (std::string(to_string(task)) + ".json");
    if (!std::filesystem::exists(path)) continue;
    auto prompts = parse_file(read_text(path));
    if (prompts.task != task) {
      throw Error(ErrorKind::kValidation, path.string() + " declares task " +
                                              std::string(to_string(prompts.task)));
    }
    catalog.add(std::move(prompts));
  }
  return catalog;
}

void PromptCatalog::add(TaskPrompts prompts) {
  const TaskId task = prompts.task;
  prompts_.insert_or_assign(task, std::move(prompts));
}

bool PromptCatalog::contains(TaskId task) const { return prompts_.contains(task); }

const TaskPrompts& PromptCatalog::at(TaskId task) const {
  auto it = prompts_.find(task);
  if (it == prompts_.end()) {
    throw Error(ErrorKind::kNotFound, "no prompt template for task " + std::string(to_string(task)));
  }
  return it->second;
}

}  // namespace cdaug
