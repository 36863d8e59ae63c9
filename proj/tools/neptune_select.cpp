// Copyright 2026 The Neptune Select Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "neptune/config.hpp"
#include "neptune/core_model.hpp"
#include "neptune/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace neptune::cli;

  CLI::App app{"Attribute-aware active sampling for maritime detection data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "neptune-select 1.0.0");

  std::string config_path;
  std::map<std::string, std::string> overrides;
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key = value configuration file")->required();
    for (const auto& key : known_keys()) {
      sub->add_option_function<std::string>(
          "--" + key.name, [&overrides, k = key.name](const std::string& v) { overrides[k] = v; },
          key.help + " (default: " + (key.default_value.empty() ? "unset" : key.default_value) +
              ")");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  RunConfig config;
  try {
    config.merge_file(config_path);
    for (const auto& [k, v] : overrides) config.set(k, v);
  } catch (const neptune::ValidationError& e) {
    std::cerr << "neptune-select " << command << ": " << e.what() << "\n";
    return kValidation;
  } catch (const neptune::IoError& e) {
    std::cerr << "neptune-select " << command << ": " << e.what() << "\n";
    return kIo;
  }
  return execute(command, config, std::cout, std::cerr);
}
