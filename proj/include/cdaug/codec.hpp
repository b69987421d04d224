#pragma once

// Canonical wire encoding: one compact JSON object per line, keys sorted,
// UTF-8 passed through unescaped, LF terminated. encode(decode(x)) == x for
// any x produced by an encoder here.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdaug/augment.hpp"
#include "cdaug/core.hpp"
#include "cdaug/selection.hpp"

namespace cdaug {

void to_json(nlohmann::json& j, const HistoryPair& pair);
void from_json(const nlohmann::json& j, HistoryPair& pair);
void to_json(nlohmann::json& j, const UserProfile& profile);
void from_json(const nlohmann::json& j, UserProfile& profile);
void to_json(nlohmann::json& j, const GenerationConfig& config);
void from_json(const nlohmann::json& j, GenerationConfig& config);
void to_json(nlohmann::json& j, const FilterThresholds& thresholds);
void from_json(const nlohmann::json& j, FilterThresholds& thresholds);
void to_json(nlohmann::json& j, const FilterReport& report);
void from_json(const nlohmann::json& j, FilterReport& report);

/// Compact dump; invalid UTF-8 raises Error(kValidation).
std::string canonical_dump(const nlohmann::json& j);

/// Parse wrapper that raises Error(kValidation) instead of json exceptions.
nlohmann::json parse_json(std::string_view text);

std::string encode_profile(const UserProfile& profile);
UserProfile decode_profile(std::string_view text);

struct DatasetRecord {
  std::string user_id;
  TaskId task = TaskId::kMovieTag;
  LabeledSample sample;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

std::string encode_record(const DatasetRecord& record);
std::vector<DatasetRecord> decode_records(std::string_view bytes);

std::string encode_dataset(const LabeledDataset& dataset);
/// Every record must belong to `user_id` and `task`; empty bytes give an
/// empty dataset.
LabeledDataset decode_dataset(std::string_view bytes, std::string_view user_id, TaskId task);
/// Infers user and task from the first record. Throws on empty input.
LabeledDataset decode_dataset(std::string_view bytes);

std::string encode_filtered(const FilteredDataset& dataset);

std::string encode_reports(std::span<const FilterReport> reports);
std::vector<FilterReport> decode_reports(std::string_view bytes);

}  // namespace cdaug
