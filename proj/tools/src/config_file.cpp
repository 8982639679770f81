#include "fisheyedist_tools/config_file.hpp"

#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace fisheyedist::cli {

namespace {

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

void flatten(const nlohmann::json& obj, std::vector<std::string>& parents,
             std::vector<CLI::ConfigItem>& out) {
  for (const auto& [key, value] : obj.items()) {
    if (value.is_object()) {
      parents.push_back(key);
      flatten(value, parents, out);
      parents.pop_back();
      continue;
    }
    if (value.is_null()) continue;
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& v : value) {
        if (v.is_structured()) {
          throw CLI::ConfigError("config key '" + item.fullname() + "' holds a nested value");
        }
        item.inputs.push_back(scalar_text(v));
      }
    } else {
      item.inputs.push_back(scalar_text(value));
    }
    out.push_back(std::move(item));
  }
}

}  // namespace

std::vector<CLI::ConfigItem> JsonOrTomlConfig::from_config(std::istream& input) const {
  const std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || text[first] != '{') {
    std::istringstream toml(text);
    return CLI::ConfigTOML::from_config(toml);
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  flatten(doc, parents, items);
  return items;
}

}  // namespace fisheyedist::cli
