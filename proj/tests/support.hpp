#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "cdaug/backend.hpp"
#include "cdaug/core.hpp"
#include "cdaug/entailment.hpp"
#include "cdaug/error.hpp"
#include "cdaug/prompt.hpp"
#include "cdaug/selection.hpp"

namespace cdaug::test {

inline std::filesystem::path data_dir() { return CDAUG_TEST_DATA_DIR; }
inline std::filesystem::path fixtures_dir() { return CDAUG_TEST_FIXTURES_DIR; }

inline TaskManifest load_manifest() { return TaskManifest::load(data_dir() / "tasks.json"); }
inline PromptCatalog load_catalog() { return PromptCatalog::load_directory(data_dir() / "prompts"); }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cdaug-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& token : tokens) {
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

/// `count` distinct lowercase words w0, w1, ... prefixed by `stem`.
inline std::vector<std::string> distinct_words(const std::string& stem, std::size_t count) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < count; ++i) words.push_back(stem + std::to_string(i));
  return words;
}

/// Words drawn from a small vocabulary so repeats and overlaps are common.
inline std::vector<std::string> random_words(std::mt19937_64& rng, std::size_t length, std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < length; ++i) words.push_back("t" + std::to_string(pick(rng)));
  return words;
}

inline std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Movie-tag profile whose history inputs are `items` runs of 10 distinct
/// words each.
inline UserProfile movie_tag_profile(const std::string& user_id, std::size_t items) {
  static const char* kTags[] = {"comedy", "action", "classic", "romance", "fantasy"};
  UserProfile profile{user_id, TaskId::kMovieTag, {}};
  for (std::size_t i = 0; i < items; ++i) {
    profile.history.push_back({join(distinct_words("m" + std::to_string(i) + "w", 10)), kTags[i % 5],
                               static_cast<std::int64_t>(i)});
  }
  return profile;
}

/// Headline-generation profile, a generation-task counterpart of the above.
inline UserProfile headline_profile(const std::string& user_id, std::size_t items) {
  UserProfile profile{user_id, TaskId::kNewsHeadline, {}};
  for (std::size_t i = 0; i < items; ++i) {
    profile.history.push_back({join(distinct_words("a" + std::to_string(i) + "w", 12)),
                               join(distinct_words("h" + std::to_string(i) + "w", 4)),
                               static_cast<std::int64_t>(i)});
  }
  return profile;
}

struct SelectionCase {
  UserProfile profile;
  std::vector<SyntheticSample> samples;
};

/// Random profile plus perturbed variants of its inputs: rotations, drops,
/// insertions and fresh text, so every filter both passes and fails.
inline SelectionCase random_selection_case(std::mt19937_64& rng, TaskId task, std::size_t sample_count) {
  SelectionCase c;
  c.profile.user_id = "rand";
  c.profile.task = task;
  const auto items = uniform(rng, 1, 4);
  const bool classification = kind_of(task) == TaskKind::kClassification;
  for (std::size_t i = 0; i < items; ++i) {
    c.profile.history.push_back({join(random_words(rng, uniform(rng, 1, 14), 9)),
                                 classification ? "comedy" : join(random_words(rng, 3, 9)),
                                 static_cast<std::int64_t>(i)});
  }
  for (std::size_t n = 0; n < sample_count; ++n) {
    SyntheticSample s;
    s.source_index = uniform(rng, 0, items - 1);
    s.variant_index = n + 1;
    std::vector<std::string> words;
    {
      std::string source = c.profile.history[s.source_index].input;
      std::size_t start = 0;
      while (start < source.size()) {
        auto end = source.find(' ', start);
        if (end == std::string::npos) end = source.size();
        words.push_back(source.substr(start, end - start));
        start = end + 1;
      }
    }
    switch (uniform(rng, 0, 4)) {
      case 0:
        std::rotate(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(uniform(rng, 0, words.size() - 1)),
                    words.end());
        break;
      case 1:
        for (auto drops = uniform(rng, 0, words.size() - 1); drops > 0; --drops) {
          words.erase(words.begin() + static_cast<std::ptrdiff_t>(uniform(rng, 0, words.size() - 1)));
        }
        break;
      case 2:
        for (auto adds = uniform(rng, 1, 10); adds > 0; --adds) {
          words.insert(words.begin() + static_cast<std::ptrdiff_t>(uniform(rng, 0, words.size())),
                       "t" + std::to_string(uniform(rng, 0, 12)));
        }
        break;
      case 3:
        words = random_words(rng, uniform(rng, 0, 16), 12);
        break;
      default:
        break;
    }
    s.input = join(words);
    s.output = classification ? "ignored" : join(random_words(rng, 2, 9));
    c.samples.push_back(std::move(s));
  }
  return c;
}

inline FilterThresholds random_thresholds(std::mt19937_64& rng) {
  FilterThresholds t;
  t.scf = uniform_real(rng, 0.0, 1.05);
  t.tdf = uniform_real(rng, 0.0, 1.0);
  t.min_len_ratio = uniform_real(rng, 0.0, 1.2);
  t.max_len_ratio = t.min_len_ratio + uniform_real(rng, 0.0, 2.0);
  t.tdf_measure = uniform(rng, 0, 3) == 0 ? DiversityMeasure::kRecall : DiversityMeasure::kF1;
  return t;
}

/// Always throws Error(kTransport).
class DeadBackend final : public ChatBackend {
 public:
  BackendCapability capability() const override { return {"dead", true}; }
  std::string complete(const ChatRequest&) override {
    ++calls;
    throw Error(ErrorKind::kTransport, "backend down");
  }
  std::atomic<int> calls{0};
};

/// Fails every call whose sample_index is listed, otherwise delegates to the mock.
class SelectiveBackend final : public ChatBackend {
 public:
  explicit SelectiveBackend(std::vector<std::size_t> failing) : failing_(std::move(failing)) {}
  BackendCapability capability() const override { return {"selective", true}; }
  std::string complete(const ChatRequest& request) override {
    ++calls;
    for (auto index : failing_) {
      if (index == request.sample_index) return "   ";
    }
    return mock_.complete(request);
  }
  std::atomic<int> calls{0};

 private:
  std::vector<std::size_t> failing_;
  MockChatBackend mock_;
};

/// Fails the first call of every request, then answers like the mock.
class FlakyBackend final : public ChatBackend {
 public:
  BackendCapability capability() const override { return {"flaky", true}; }
  std::string complete(const ChatRequest& request) override {
    if (calls++ % 2 == 0) throw Error(ErrorKind::kTransport, "transient");
    return mock_.complete(request);
  }
  std::atomic<int> calls{0};

 private:
  MockChatBackend mock_;
};

class DeadScorer final : public EntailmentScorer {
 public:
  BackendCapability capability() const override { return {"dead-nli", true}; }
  double entail_prob(std::string_view, std::string_view) override {
    throw Error(ErrorKind::kTransport, "nli down");
  }
};

/// Throws when the hypothesis contains `poison`, else lexical.
class PoisonScorer final : public EntailmentScorer {
 public:
  explicit PoisonScorer(std::string poison) : poison_(std::move(poison)) {}
  BackendCapability capability() const override { return {"poison-nli", true}; }
  double entail_prob(std::string_view premise, std::string_view hypothesis) override {
    if (hypothesis.find(poison_) != std::string_view::npos || premise.find(poison_) != std::string_view::npos) {
      throw Error(ErrorKind::kTransport, "nli refused");
    }
    return lexical_entail_prob(premise, hypothesis);
  }

 private:
  std::string poison_;
};

}  // namespace cdaug::test
