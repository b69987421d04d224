#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cdaug/codec.hpp"
#include "cdaug/error.hpp"
#include "support.hpp"

namespace cdaug {
namespace {

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"a",  "Z",  " ",  "\"", "\\", "\n", "\t", "{", "}",
                                                  "[1]", "é", "日本", "😀", ",",  ":",  "0", "\x01"};
  std::string out;
  for (auto n = test::uniform(rng, 0, 12); n > 0; --n) out += pieces[test::uniform(rng, 0, pieces.size() - 1)];
  return out;
}

LabeledDataset random_dataset(std::mt19937_64& rng) {
  LabeledDataset dataset{random_text(rng) + "u", all_tasks()[test::uniform(rng, 0, 5)], {}};
  for (auto n = test::uniform(rng, 0, 6); n > 0; --n) {
    LabeledSample sample{random_text(rng), random_text(rng), Provenance::kReal, std::nullopt, std::nullopt};
    if (test::uniform(rng, 0, 1)) {
      sample.provenance = Provenance::kSynthetic;
      sample.source_index = test::uniform(rng, 0, 9);
      sample.variant_index = test::uniform(rng, 1, 5);
    } else if (test::uniform(rng, 0, 1)) {
      sample.source_index = test::uniform(rng, 0, 9);
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

TEST(Codec, ProfileRoundTripProperty) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    UserProfile profile{random_text(rng), all_tasks()[test::uniform(rng, 0, 5)], {}};
    for (auto n = test::uniform(rng, 0, 5); n > 0; --n) {
      profile.history.push_back({random_text(rng), random_text(rng), static_cast<std::int64_t>(rng() >> 1)});
    }
    const auto bytes = encode_profile(profile);
    ASSERT_EQ(decode_profile(bytes), profile);
    ASSERT_EQ(encode_profile(decode_profile(bytes)), bytes);
  }
}

TEST(Codec, DatasetRoundTripProperty) {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 300; ++trial) {
    const auto dataset = random_dataset(rng);
    const auto bytes = encode_dataset(dataset);
    ASSERT_EQ(decode_dataset(bytes, dataset.user_id, dataset.task), dataset);
    ASSERT_EQ(encode_dataset(decode_dataset(bytes, dataset.user_id, dataset.task)), bytes);
  }
}

TEST(Codec, RecordsAreSortedKeyJsonLines) {
  LabeledDataset dataset{"u1", TaskId::kMovieTag, {{"in", "comedy", Provenance::kSynthetic, 0, 2}}};
  EXPECT_EQ(encode_dataset(dataset),
            "{\"input\":\"in\",\"output\":\"comedy\",\"provenance\":\"synthetic\",\"source_index\":0,"
            "\"task\":\"lamp2\",\"user_id\":\"u1\",\"variant_index\":2}\n");
}

TEST(Codec, NonAsciiIsNotEscaped) {
  LabeledDataset dataset{"u", TaskId::kTweetParaphrase, {{"café", "日本", Provenance::kReal, 0, std::nullopt}}};
  const auto bytes = encode_dataset(dataset);
  EXPECT_NE(bytes.find("café"), std::string::npos);
  EXPECT_NE(bytes.find("日本"), std::string::npos);
}

TEST(Codec, DecodeRejectsForeignRecords) {
  LabeledDataset dataset{"u1", TaskId::kMovieTag, {{"in", "comedy", Provenance::kReal, 0, std::nullopt}}};
  const auto bytes = encode_dataset(dataset);
  EXPECT_THROW(decode_dataset(bytes, "u2", TaskId::kMovieTag), Error);
  EXPECT_THROW(decode_dataset(bytes, "u1", TaskId::kProductRating), Error);
  EXPECT_THROW(decode_dataset(""), Error);
  EXPECT_EQ(decode_dataset(bytes + "\n\n"), dataset);
}

TEST(Codec, MalformedLinesAreValidationErrors) {
  try {
    decode_records("{\"input\": 1}\n");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  }
  EXPECT_THROW(decode_records("not json\n"), Error);
  EXPECT_THROW(decode_profile("{\"user_id\":\"u\",\"task\":\"lamp9\",\"history\":[]}"), Error);
}

TEST(Codec, ThresholdsWithUnboundedRatio) {
  FilterThresholds t;
  t.max_len_ratio = std::numeric_limits<double>::infinity();
  t.tdf_measure = DiversityMeasure::kRecall;
  const nlohmann::json j = t;
  EXPECT_TRUE(j.at("max_len_ratio").is_null());
  const auto back = j.get<FilterThresholds>();
  EXPECT_TRUE(std::isinf(back.max_len_ratio));
  EXPECT_EQ(back.tdf_measure, DiversityMeasure::kRecall);
  EXPECT_THROW(nlohmann::json({{"tdf_measure", "bleu"}}).get<FilterThresholds>(), Error);
}

TEST(Codec, GenerationConfigRejectsNegativeK) {
  EXPECT_THROW(nlohmann::json({{"k", -1}}).get<GenerationConfig>(), Error);
  const auto config = nlohmann::json({{"k", 3}, {"seed", 9}}).get<GenerationConfig>();
  EXPECT_EQ(config.k, 3u);
  EXPECT_EQ(config.seed, 9u);
  EXPECT_EQ(nlohmann::json(config).get<GenerationConfig>(), config);
}

TEST(Codec, ReportsRoundTrip) {
  std::vector<FilterReport> reports(2);
  reports[0] = {0, 1, 1.0, 0.75, 0.9, 1.0, true, false, true, false, std::nullopt};
  reports[1] = {1, 3, 0.0, 0.0, 0.5, 0.5, false, true, true, false, std::string("nli down")};
  EXPECT_EQ(decode_reports(encode_reports(reports)), reports);
}

}  // namespace
}  // namespace cdaug
