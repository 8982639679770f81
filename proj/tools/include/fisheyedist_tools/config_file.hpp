#pragma once

#include <CLI11.hpp>
#include <istream>
#include <vector>

namespace fisheyedist::cli {

/// Config reader for `--config`. Files whose first non-blank character is
/// `{` are read as JSON, anything else as TOML. In both, a table named after
/// a subcommand holds that subcommand's options:
///
///   {"train": {"epochs": 50, "hidden": [32, 32]}}
///
///   [train]
///   epochs = 50
class JsonOrTomlConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace fisheyedist::cli
