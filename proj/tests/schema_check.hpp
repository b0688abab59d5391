#pragma once
// Just enough of the JSON-schema vocabulary to validate the shipped report
// schemas: type, required, properties, additionalProperties, items, enum,
// minItems/maxItems and $ref into #/definitions.

#include <json.hpp>
#include <string>
#include <vector>

namespace schema_check {

using nlohmann::json;

inline bool type_matches(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  return false;
}

inline const json* resolve_ref(const json& root, const std::string& ref) {
  if (ref.empty() || ref[0] != '#') return nullptr;
  const json* at = &root;
  std::size_t pos = 1;
  while (pos < ref.size()) {
    if (ref[pos] == '/') {
      ++pos;
      continue;
    }
    const std::size_t next = ref.find('/', pos);
    const std::string key =
        ref.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!at->is_object() || !at->contains(key)) return nullptr;
    at = &(*at)[key];
    pos = next == std::string::npos ? ref.size() : next;
  }
  return at;
}

inline void check_node(const json& value, const json& schema, const json& root,
                       const std::string& path, std::vector<std::string>& errors) {
  if (schema.contains("$ref")) {
    const json* target = resolve_ref(root, schema["$ref"].get<std::string>());
    if (!target) {
      errors.push_back(path + ": unresolvable $ref " +
                       schema["$ref"].get<std::string>());
      return;
    }
    check_node(value, *target, root, path, errors);
    return;
  }
  if (schema.contains("type") &&
      !type_matches(value, schema["type"].get<std::string>())) {
    errors.push_back(path + ": expected type " + schema["type"].get<std::string>() +
                     ", got " + std::string(value.type_name()));
    return;
  }
  if (schema.contains("enum")) {
    bool hit = false;
    for (const json& option : schema["enum"]) hit = hit || option == value;
    if (!hit) errors.push_back(path + ": value not in enum");
  }
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const json& key : schema["required"])
        if (!value.contains(key.get<std::string>()))
          errors.push_back(path + ": missing required key '" +
                           key.get<std::string>() + "'");
    const json props =
        schema.contains("properties") ? schema["properties"] : json::object();
    for (const auto& [key, sub] : value.items()) {
      if (props.contains(key))
        check_node(sub, props[key], root, path + "/" + key, errors);
      else if (schema.contains("additionalProperties") &&
               schema["additionalProperties"].is_object())
        check_node(sub, schema["additionalProperties"], root, path + "/" + key,
                   errors);
    }
  }
  if (value.is_array()) {
    if (schema.contains("minItems") &&
        value.size() < schema["minItems"].get<std::size_t>())
      errors.push_back(path + ": too few items");
    if (schema.contains("maxItems") &&
        value.size() > schema["maxItems"].get<std::size_t>())
      errors.push_back(path + ": too many items");
    if (schema.contains("items")) {
      std::size_t i = 0;
      for (const json& item : value)
        check_node(item, schema["items"], root,
                   path + "/" + std::to_string(i++), errors);
    }
  }
}

inline std::vector<std::string> validate(const json& value, const json& schema) {
  std::vector<std::string> errors;
  check_node(value, schema, schema, "$", errors);
  return errors;
}

}  // namespace schema_check
