#pragma once

// Command-line front end: subcommand dispatch, flag overrides, artifact
// writing and exit-status policy (0 ok, 2 invalid input, 3 failed --assert).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "szego/cli/config.hpp"
#include "szego/cli/experiments.hpp"

namespace szego::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitAssert = 3;

struct Invocation {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
  std::string experiment;  // validate only
  bool assert_verdict = false;
};

inline Json assemble_config(const Invocation& inv) {
  Json root = inv.config_path.empty() ? Json::object() : load_json_file(inv.config_path);
  // Materialize the default ensemble and symbols so overrides can target their fields.
  if (!root.contains("dist")) root["dist"] = {{"kind", "uniform"}, {"half_width", 1.0}};
  if (!root.contains("a")) root["a"] = {{"kind", "fermi"}, {"beta", 3.0}, {"fermi_energy", 0.0}};
  if (!root.contains("phi")) root["phi"] = {{"kind", "renyi"}, {"alpha", 2.0}};
  for (const auto& o : inv.overrides) apply_override(root, o);
  if (inv.seed) root["seed"] = *inv.seed;
  if (inv.threads) root["threads"] = *inv.threads;
  if (inv.out) root["out"] = *inv.out;
  return root;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("out", "cannot write '" + path.string() + "'");
  f << text;
}

inline int run_validate(const Invocation& inv, std::ostream& out) {
  const Json root = assemble_config(inv);
  const ExperimentConfig c = parse_config(root, inv.experiment);
  Json report;
  report["schema_version"] = kSchemaVersion;
  report["experiment"] = c.experiment;
  report["seed"] = c.seed;
  report["config_echo"] = c.echo;
  report["status"] = "ok";
  report["warnings"] = c.warnings;
  out << report.dump(2) << "\n";
  return kExitOk;
}

inline int run_command(const Invocation& inv, std::ostream& out) {
  const Json root = assemble_config(inv);
  const ExperimentConfig c = parse_config(root, inv.command);
  for (const auto& w : c.warnings) out << "warning: " << w << "\n";

  const RunResult res = run_experiment(c, Parallelism{static_cast<unsigned>(c.threads)});

  const std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("out", "cannot create directory '" + c.out + "': " + ec.message());
  write_file(dir / "report.json", res.report.dump(2) + "\n");
  for (const auto& t : res.tables) write_file(dir / t.file(), t.str());

  for (const auto& line : res.summary) out << line << "\n";
  out << "wrote " << (dir / "report.json").string();
  for (const auto& t : res.tables) out << ", " << t.file();
  out << "\n";

  if (c.experiment == "selftest" && !res.pass) return kExitAssert;
  if (inv.assert_verdict && res.has_verdict && !res.pass) return kExitAssert;
  return kExitOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Szego-type restricted traces for the 1D Anderson model"};
  app.require_subcommand(1);
  Invocation inv;

  auto add_common = [&inv](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "Experiment config (JSON)");
    sub->add_option("--seed", inv.seed, "Master seed (overrides the config)");
    sub->add_option("--threads", inv.threads, "Worker cap; 0 uses all available cores");
    sub->add_option("--out", inv.out, "Output directory");
    sub->add_option("--set", inv.overrides, "Override a config field: dotted.path=value (repeatable)");
  };
  for (const auto& kind : experiment_kinds()) {
    CLI::App* sub = app.add_subcommand(kind, "Run the " + kind + " experiment");
    add_common(sub);
    sub->add_flag("--assert", inv.assert_verdict, "Exit 3 when the statistical verdict fails");
    sub->callback([&inv, kind] { inv.command = kind; });
  }
  CLI::App* val = app.add_subcommand("validate", "Check a config without running numerics");
  add_common(val);
  val->add_option("--experiment", inv.experiment, "Experiment kind when the config does not name one");
  val->callback([&inv] { inv.command = "validate"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (inv.command == "validate") return run_validate(inv, out);
    return run_command(inv, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace szego::cli
