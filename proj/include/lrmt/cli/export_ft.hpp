#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrmt/aligner.hpp"

namespace lrmt::cli {

struct ExportOptions {
  std::string src_lang = "src";
  std::string tgt_lang = "tgt";
  std::string prefix = "translate {src} to {tgt}: ";  // {src} and {tgt} are replaced by the language tags
};

/// JSON Schema (draft 2020-12 subset) for one fine-tuning record.
nlohmann::json ft_schema();

/// {input_text, target_text, src_lang, tgt_lang, split, origin_id, index, group, augmented}
nlohmann::json ft_record(const aligner::SplitItem& item, const std::string& split, const ExportOptions& options);

/// Writes <dir>/{train,test,validation}.jsonl and <dir>/schema.json.
void export_ft(const aligner::DatasetSplit& split, const std::filesystem::path& dir, const ExportOptions& options);

/// Checks `doc` against the schema keywords type, required, properties,
/// additionalProperties, enum, minLength and minimum. Returns one message per
/// violation; empty means valid.
std::vector<std::string> validate_json(const nlohmann::json& schema, const nlohmann::json& doc);

/// Validates every line of a JSONL file; throws DataError naming the first bad
/// line. Returns the number of records.
std::size_t validate_jsonl(const nlohmann::json& schema, const std::filesystem::path& path);

}  // namespace lrmt::cli
