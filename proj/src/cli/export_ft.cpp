#include "lrmt/cli/export_ft.hpp"

#include <fstream>

#include "lrmt/error.hpp"

namespace lrmt::cli {

using nlohmann::json;

namespace {

std::string expand(std::string text, const std::string& key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
    text.replace(pos, key.size(), value);
  return text;
}

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

void check(const json& schema, const json& doc, const std::string& where, std::vector<std::string>& errors) {
  if (auto t = schema.find("type"); t != schema.end() && !has_type(doc, t->get<std::string>())) {
    errors.push_back(where + ": expected " + t->get<std::string>());
    return;
  }
  if (auto e = schema.find("enum"); e != schema.end()) {
    bool found = false;
    for (const auto& option : *e) found = found || option == doc;
    if (!found) errors.push_back(where + ": value " + doc.dump() + " not allowed");
  }
  if (auto m = schema.find("minLength"); m != schema.end() && doc.is_string() &&
      utf8_length(doc.get<std::string>()) < m->get<std::size_t>())
    errors.push_back(where + ": shorter than " + std::to_string(m->get<std::size_t>()));
  if (auto m = schema.find("minimum"); m != schema.end() && doc.is_number() && doc.get<double>() < m->get<double>())
    errors.push_back(where + ": below minimum " + m->dump());
  if (!doc.is_object()) return;

  if (auto r = schema.find("required"); r != schema.end())
    for (const auto& key : *r)
      if (!doc.contains(key.get<std::string>())) errors.push_back(where + ": missing " + key.get<std::string>());
  const json empty = json::object();
  const auto& props = schema.contains("properties") ? schema.at("properties") : empty;
  const bool closed = schema.value("additionalProperties", true) == false;
  for (const auto& [key, value] : doc.items()) {
    if (props.contains(key))
      check(props.at(key), value, where + "." + key, errors);
    else if (closed)
      errors.push_back(where + ": unexpected property " + key);
  }
}

}  // namespace

json ft_schema() {
  auto text = json{{"type", "string"}, {"minLength", 1}};
  return json{
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "lrmt fine-tuning record"},
      {"type", "object"},
      {"required", {"input_text", "target_text", "src_lang", "tgt_lang", "split", "origin_id", "index", "group",
                    "augmented"}},
      {"additionalProperties", false},
      {"properties",
       {{"input_text", text},
        {"target_text", text},
        {"src_lang", text},
        {"tgt_lang", text},
        {"split", {{"type", "string"}, {"enum", {"train", "test", "validation"}}}},
        {"origin_id", text},
        {"index", {{"type", "integer"}, {"minimum", 0}}},
        {"group", {{"type", "string"}, {"enum", {"one2one", "variable"}}}},
        {"augmented", {{"type", "boolean"}}}}},
  };
}

json ft_record(const aligner::SplitItem& item, const std::string& split, const ExportOptions& options) {
  auto prefix = expand(expand(options.prefix, "{src}", options.src_lang), "{tgt}", options.tgt_lang);
  return json{{"input_text", prefix + item.src},
              {"target_text", item.tgt},
              {"src_lang", options.src_lang},
              {"tgt_lang", options.tgt_lang},
              {"split", split},
              {"origin_id", item.origin_id},
              {"index", item.index},
              {"group", std::string(aligner::to_string(item.group))},
              {"augmented", item.augmented}};
}

void export_ft(const aligner::DatasetSplit& split, const std::filesystem::path& dir, const ExportOptions& options) {
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const std::vector<aligner::SplitItem>*> parts[] = {
      {"train", &split.train}, {"test", &split.test}, {"validation", &split.validation}};
  for (const auto& [name, items] : parts) {
    auto path = dir / (std::string(name) + ".jsonl");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& item : *items) out << ft_record(item, name, options).dump() << '\n';
  }
  std::ofstream schema(dir / "schema.json", std::ios::binary | std::ios::trunc);
  schema << ft_schema().dump(2) << '\n';
}

std::vector<std::string> validate_json(const json& schema, const json& doc) {
  std::vector<std::string> errors;
  check(schema, doc, "$", errors);
  return errors;
}

std::size_t validate_jsonl(const json& schema, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    auto errors = validate_json(schema, doc);
    if (!errors.empty()) throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + errors.front());
    ++n;
  }
  return n;
}

}  // namespace lrmt::cli
