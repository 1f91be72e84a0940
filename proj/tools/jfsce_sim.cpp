// Command-line front end for the experiment harness.
//
//   jfsce_sim run <config>        run every [experiment.<id>] section
//   jfsce_sim list-experiments
//   jfsce_sim describe <id>       print the effective defaults
//   jfsce_sim loopback <config>   one loopback instance from a [loopback] section
//
// Exit status: 0 success, 1 configuration or usage error, 2 runtime failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "jfsce/harness.hpp"
#include "jfsce/rng.hpp"

namespace fs = std::filesystem;
using namespace jfsce;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::optional<std::string> methods;
  std::optional<std::string> scale;
  std::string out = ".";
};

Scale resolve_scale(const Overrides& o, const KeyValues& global, const KeyValues& section) {
  std::string name = "full";
  if (auto it = global.find("scale"); it != global.end()) name = it->second;
  if (auto it = section.find("scale"); it != section.end()) name = it->second;
  if (o.scale) name = *o.scale;
  const auto s = parse_scale(name);
  if (!s) throw ConfigError("unknown scale '" + name + "' (expected small or full)");
  return *s;
}

ExperimentConfig build(ExperimentId id, const Overrides& o, const KeyValues& global, const KeyValues& section) {
  ExperimentConfig cfg = preset(id, resolve_scale(o, global, section));
  apply_overrides(cfg, global);
  apply_overrides(cfg, section);
  KeyValues cli;
  if (o.seed) cli["seed"] = std::to_string(*o.seed);
  if (o.trials) cli["trials"] = std::to_string(*o.trials);
  if (o.threads) cli["threads"] = std::to_string(*o.threads);
  if (o.methods) cli["methods"] = *o.methods;
  apply_overrides(cfg, cli);
  cfg.validate();
  return cfg;
}

std::string file_stem(ExperimentId id) {
  std::string s(experiment_name(id));
  for (char& c : s)
    if (c == '-') c = '_';
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

int cmd_run(const std::string& config_path, const Overrides& o) {
  const ConfigFile file = load_config_file(config_path);
  std::vector<std::pair<ExperimentId, const ConfigSection*>> jobs;
  for (const auto& s : file.sections) {
    if (s.name.rfind("experiment.", 0) != 0) continue;
    const std::string id = s.name.substr(11);
    const auto parsed = parse_experiment(id);
    if (!parsed) throw ConfigError("unknown experiment section [" + s.name + "]");
    jobs.emplace_back(*parsed, &s);
  }
  if (jobs.empty()) throw ConfigError(config_path + ": no [experiment.<id>] sections");

  std::vector<ExperimentConfig> configs;
  for (const auto& [id, section] : jobs) configs.push_back(build(id, o, file.global, section->values));

  fs::create_directories(o.out);
  for (const auto& cfg : configs) {
    std::cerr << "running " << experiment_name(cfg.id) << " (" << cfg.trials << " trials)\n";
    const ExperimentResult res = run_experiment(cfg);
    const fs::path csv = fs::path(o.out) / (file_stem(cfg.id) + ".csv");
    emit_csv(res.rows, csv);
    std::cout << csv.string() << "\n";
    if (cfg.timing) {
      const fs::path slopes = fs::path(o.out) / (file_stem(cfg.id) + "_slopes.csv");
      write_text(slopes, format_slopes_csv(res.slopes));
      std::cout << slopes.string() << "\n";
    }
  }
  return 0;
}

int cmd_list() {
  for (ExperimentId id : all_experiments())
    std::cout << experiment_name(id) << "\t" << experiment_summary(id) << "\n";
  return 0;
}

int cmd_describe(const std::string& name, const Overrides& o) {
  const auto id = parse_experiment(name);
  if (!id) throw ConfigError("unknown experiment '" + name + "'");
  std::cout << describe(build(*id, o, {}, {}));
  return 0;
}

int cmd_loopback(const std::string& config_path, const Overrides& o) {
  const ConfigFile file = load_config_file(config_path);
  const ConfigSection* section = file.find("loopback");
  if (!section) throw ConfigError(config_path + ": missing [loopback] section");

  KeyValues values = section->values;
  std::optional<std::string> iq_path;
  if (auto it = values.find("iq_dump"); it != values.end()) {
    iq_path = it->second;
    values.erase(it);
  }
  if (values.find("trials") == values.end() && file.global.find("trials") == file.global.end())
    values["trials"] = "1";
  ExperimentConfig cfg = build(ExperimentId::loopback_index, o, file.global, values);
  cfg.index_grid = {static_cast<double>(cfg.loopback.channel_index)};
  cfg.validate();

  const ExperimentResult res = run_experiment(cfg);
  fs::create_directories(o.out);
  const fs::path csv = fs::path(o.out) / "loopback.csv";
  emit_csv(res.rows, csv);
  for (const auto& r : res.rows)
    std::cout << r.method << "\tmse_db=" << format_number(r.mse_db) << "\tfailures=" << r.failures << "\n";
  std::cout << csv.string() << "\n";

  if (iq_path) {
    // Same instance as the first trial.
    const std::uint64_t seed = derive_seed(cfg.seed, {0, 0});
    const double sigma2 = noise_variance_from_snr_db(cfg.snr_db);
    const LoopbackRun run = run_loopback(cfg.loopback, NoiseSpec{sigma2, derive_seed(seed, {3})}, derive_seed(seed, {2}));
    const fs::path p = fs::path(o.out) / *iq_path;
    write_iq_dump(p, run.stream, cfg.loopback, sigma2, seed);
    std::cout << p.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint frame synchronization and sparse channel estimation experiments"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--trials", o.trials, "Monte Carlo trials per grid point");
    sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
    sub->add_option("--methods", o.methods, "comma-separated method list");
    sub->add_option("--scale", o.scale, "preset: small or full");
    sub->add_option("--out", o.out, "output directory");
  };

  std::string config_path, experiment;
  auto* run = app.add_subcommand("run", "run the experiments listed in a config file");
  run->add_option("config", config_path, "config file")->required();
  add_common(run);
  auto* list = app.add_subcommand("list-experiments", "list experiment ids");
  auto* desc = app.add_subcommand("describe", "print the defaults of one experiment");
  desc->add_option("experiment", experiment, "experiment id")->required();
  add_common(desc);
  auto* loop = app.add_subcommand("loopback", "run one loopback instance from a config file");
  loop->add_option("config", config_path, "config file")->required();
  add_common(loop);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (*run) return cmd_run(config_path, o);
    if (*list) return cmd_list();
    if (*desc) return cmd_describe(experiment, o);
    if (*loop) return cmd_loopback(config_path, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << app.help();
  return 1;
}
