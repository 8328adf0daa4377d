#include <cstdlib>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "commands.hpp"
#include "run_config.hpp"

namespace {

const char* describe(const std::string& command) {
  if (command == "features") return "Build topology embeddings from association networks";
  if (command == "train") return "Train and test the model over the configured seeds";
  if (command == "evaluate") return "Score a dataset with a saved checkpoint";
  if (command == "ablate") return "Compare the full model with its ablation variants";
  if (command == "coldstart") return "Cold-start evaluation over visible-entity fractions";
  if (command == "casestudy") return "Hold out every pair of the given entities and predict them";
  if (command == "sweep") return "Grid over batch_size, lr, hidden or the negative ratio";
  if (command == "synth") return "Write a planted-factor synthetic dataset";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace llm3dti::cli;

  CLI::App app{"Drug-target interaction prediction with structural and text embeddings"};
  app.require_subcommand(1);

  struct Slot {
    CLI::App* sub = nullptr;
    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::map<std::string, Slot> slots;
  for (const auto& name : command_names()) {
    Slot& slot = slots[name];
    slot.sub = app.add_subcommand(name, describe(name));
    slot.sub->add_option("-c,--config", slot.config_file, "key = value configuration file");
    for (const auto& key : config_keys()) {
      std::string help = key.help;
      if (!key.default_value.empty()) help += " [" + key.default_value + "]";
      slot.options[key.name] = slot.sub->add_option("--" + key.name, slot.values[key.name], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (auto& [name, slot] : slots) {
    if (!slot.sub->parsed()) continue;
    try {
      RunConfig cfg;
      if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
        cfg.set("output.root", root);
      }
      if (!slot.config_file.empty()) cfg.load_file(slot.config_file);
      for (const auto& [key, opt] : slot.options) {
        if (opt->count() > 0) cfg.set(key, slot.values[key]);
      }
      run_command(name, cfg, std::cerr);
      return 0;
    } catch (...) {
      return exit_code_for_current_exception(std::cerr);
    }
  }
  return 2;
}
