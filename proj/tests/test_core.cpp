#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cdaug/codec.hpp"
#include "cdaug/core.hpp"
#include "cdaug/error.hpp"
#include "cdaug/job_store.hpp"
#include "support.hpp"

namespace cdaug {
namespace {

std::vector<std::string> rules(const ValidationResult& result) {
  std::vector<std::string> out;
  for (const auto& v : result.violations) out.push_back(v.rule);
  return out;
}

TEST(TaskId, WireNamesRoundTrip) {
  for (TaskId task : all_tasks()) {
    EXPECT_EQ(parse_task_id(to_string(task)), task);
    EXPECT_EQ(parse_task_id(descriptive_name(task)), task);
  }
  EXPECT_EQ(all_tasks().size(), 6u);
  EXPECT_EQ(parse_task_id("LaMP-2"), TaskId::kMovieTag);
  EXPECT_THROW(parse_task_id("lamp6"), Error);
}

TEST(TaskId, Kinds) {
  EXPECT_EQ(kind_of(TaskId::kCitationId), TaskKind::kClassification);
  EXPECT_EQ(kind_of(TaskId::kMovieTag), TaskKind::kClassification);
  EXPECT_EQ(kind_of(TaskId::kProductRating), TaskKind::kClassification);
  EXPECT_EQ(kind_of(TaskId::kNewsHeadline), TaskKind::kGeneration);
  EXPECT_EQ(kind_of(TaskId::kScholarlyTitle), TaskKind::kGeneration);
  EXPECT_EQ(kind_of(TaskId::kTweetParaphrase), TaskKind::kGeneration);
}

TEST(TaskManifest, ShippedManifestLabels) {
  const auto manifest = test::load_manifest();
  EXPECT_EQ(manifest.labels(TaskId::kMovieTag).size(), 15u);
  EXPECT_EQ(manifest.labels(TaskId::kProductRating), (std::vector<std::string>{"1", "2", "3", "4", "5"}));
  EXPECT_EQ(manifest.labels(TaskId::kCitationId), (std::vector<std::string>{"[1]", "[2]"}));
  EXPECT_TRUE(manifest.labels(TaskId::kNewsHeadline).empty());
  EXPECT_TRUE(manifest.is_label(TaskId::kMovieTag, "twist ending"));
  EXPECT_FALSE(manifest.is_label(TaskId::kMovieTag, "horror"));
}

TEST(TaskManifest, RejectsIncompleteManifest) {
  EXPECT_THROW(TaskManifest::parse(R"({"tasks": []})"), Error);
  EXPECT_THROW(TaskManifest::parse("not json"), Error);
  auto doc = nlohmann::json::parse(read_file(test::data_dir() / "tasks.json"));
  doc["tasks"][1]["labels"] = nlohmann::json::array();
  EXPECT_THROW(TaskManifest::parse(doc.dump()), Error);
}

TEST(Validation, AcceptsFixtureProfiles) {
  const auto manifest = test::load_manifest();
  for (const auto& entry : std::filesystem::directory_iterator(test::fixtures_dir() / "profiles")) {
    const auto profile = decode_profile(read_file(entry.path()));
    const auto result = validate_profile(profile, manifest);
    EXPECT_TRUE(result.ok()) << entry.path() << ": " << describe(result);
  }
}

TEST(Validation, ReportsEveryViolation) {
  const auto manifest = test::load_manifest();
  UserProfile profile{"", TaskId::kMovieTag,
                      {{"a fine film", "comedy", 5},
                       {"", "comedy", 6},
                       {"---", "action", 7},
                       {"another film", "horror", 8},
                       {"late entry", "classic", 1},
                       {"no tag", "", 9}}};
  const auto result = validate_profile(profile, manifest);
  EXPECT_EQ(rules(result), (std::vector<std::string>{"non-empty-user-id", "non-empty-input", "input-has-tokens",
                                                     "label-in-set", "sorted-timestamps", "non-empty-output"}));
  EXPECT_EQ(result.violations[1].index, 1u);
  EXPECT_FALSE(result.violations[0].index.has_value());
}

TEST(Validation, EmptyHistory) {
  const auto result = validate_profile({"u", TaskId::kNewsHeadline, {}}, test::load_manifest());
  EXPECT_EQ(rules(result), (std::vector<std::string>{"non-empty-history"}));
}

TEST(Validation, CitationLayoutAndGenerationOutputs) {
  const auto manifest = test::load_manifest();
  UserProfile citation{"u", TaskId::kCitationId, {{"a title without options", "[1]", 0}}};
  EXPECT_EQ(rules(validate_profile(citation, manifest)), (std::vector<std::string>{"input-layout"}));
  citation.history[0].input = "Title here [1]: first ref [2]: second ref";
  EXPECT_TRUE(validate_profile(citation, manifest).ok());

  UserProfile headline{"u", TaskId::kNewsHeadline, {{"some article body", "any headline at all", 0}}};
  EXPECT_TRUE(validate_profile(headline, manifest).ok());
}

TEST(Validation, EqualTimestampsAreSorted) {
  UserProfile profile{"u", TaskId::kNewsHeadline, {{"x y", "h", 3}, {"x z", "h", 3}}};
  EXPECT_TRUE(validate_profile(profile, test::load_manifest()).ok());
}

LabeledDataset as_dataset(const UserProfile& profile) {
  LabeledDataset dataset{profile.user_id, profile.task, {}};
  for (std::size_t i = 0; i < profile.history.size(); ++i) {
    dataset.samples.push_back({profile.history[i].input, profile.history[i].output, Provenance::kReal, i, {}});
  }
  return dataset;
}

TEST(DatasetStats, MatchesFrozenFixtureValues) {
  const auto expected = nlohmann::json::parse(read_file(test::fixtures_dir() / "expected_stats.json"));
  std::map<std::string, std::vector<LabeledDataset>> by_task;
  for (const auto& entry : std::filesystem::directory_iterator(test::fixtures_dir() / "profiles")) {
    const auto profile = decode_profile(read_file(entry.path()));
    by_task[std::string(to_string(profile.task))].push_back(as_dataset(profile));
  }
  ASSERT_EQ(by_task.size(), 6u);
  for (const auto& [task, datasets] : by_task) {
    const auto& want = expected.at(task);
    const auto stats = dataset_stats(datasets);
    const auto q = want.at("num_queries").get<double>();
    EXPECT_EQ(stats.num_queries, want.at("num_queries").get<std::size_t>()) << task;
    EXPECT_DOUBLE_EQ(stats.num_history, want.at("num_history").get<double>()) << task;
    EXPECT_DOUBLE_EQ(stats.mean_input_tokens, want.at("input_tokens_total").get<double>() / q) << task;
    EXPECT_DOUBLE_EQ(stats.mean_output_tokens, want.at("output_tokens_total").get<double>() / q) << task;
  }
}

TEST(DatasetStats, EmptyInputRejected) {
  EXPECT_THROW(dataset_stats(std::span<const LabeledDataset>{}), Error);
}

TEST(FilteredDataset, LabeledConversionRoundTrip) {
  FilteredDataset filtered{"u", TaskId::kMovieTag, {{0, 2, "in a", "comedy", {}}, {1, 1, "in b", "action", {}}}};
  EXPECT_EQ(FilteredDataset::from_labeled(filtered.to_labeled()), filtered);
  auto labeled = filtered.to_labeled();
  labeled.samples[0].provenance = Provenance::kReal;
  EXPECT_THROW(FilteredDataset::from_labeled(labeled), Error);
}

}  // namespace
}  // namespace cdaug
