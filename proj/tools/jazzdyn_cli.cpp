#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jazzdyn/pipeline/config.hpp"
#include "jazzdyn/pipeline/run.hpp"
#include "jazzdyn/pipeline/toy.hpp"

namespace jp = jazzdyn::pipeline;

namespace {

constexpr const char* kOutEnv = "JAZZDYN_OUT_DIR";

struct Common {
  std::string config;
  std::string out;
  int jobs = 0;
  std::vector<std::string> stages;
};

void print_error(const std::string& code, const std::string& msg) {
  nlohmann::json j = {{"status", "fatal"}, {"code", code}, {"message", msg}};
  std::cerr << j.dump() << '\n';
}

int execute(const Common& c, std::set<jp::Stage> stages) {
  jp::RunConfig cfg;
  try {
    cfg = jp::validate_config(c.config);
  } catch (const jazzdyn::Error& e) {
    print_error(std::string(jazzdyn::to_string(e.code())), e.what());
    return 1;
  }
  // --out beats the environment, which beats the config file
  if (const char* env = std::getenv(kOutEnv); env && *env) cfg.out_dir = env;
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.jobs > 0) cfg.jobs = c.jobs;
  if (!c.stages.empty()) {
    stages.clear();
    try {
      for (const auto& s : c.stages) stages.insert(jp::stage_from_string(s));
    } catch (const jazzdyn::Error& e) {
      print_error(std::string(jazzdyn::to_string(e.code())), e.what());
      return 1;
    }
  }
  if (!stages.empty()) cfg.stages = stages;

  const auto rep = jp::run(cfg);
  if (rep.fatal) {
    print_error(rep.fatal_code, rep.fatal_message);
    return rep.exit_code();
  }
  std::cout << "config hash " << rep.config_hash << "\n";
  for (const auto& [name, st] : rep.stages) std::cout << "  " << name << ": " << jp::to_string(st) << "\n";
  std::cout << rep.pieces_ok.size() << " pieces, " << rep.files.size() << " files, " << rep.warnings.size()
            << " warnings, " << rep.errors.size() << " errors in " << rep.wall_time_sec << " s -> "
            << cfg.out_dir.string() << "\n";
  for (const auto& e : rep.errors)
    std::cerr << "error [" << e.stage << "] " << (e.piece_id.empty() ? "" : e.piece_id + ": ") << e.message << "\n";
  for (const auto& w : rep.warnings)
    std::cerr << "warning [" << w.stage << "] " << (w.piece_id.empty() ? "" : w.piece_id + ": ") << w.message << "\n";
  return rep.exit_code();
}

void add_common(CLI::App* sub, Common& c, bool with_stage) {
  sub->add_option("--config", c.config, "configuration file (key = value lines)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory (overrides $JAZZDYN_OUT_DIR and out_dir)");
  sub->add_option("--jobs", c.jobs, "worker threads for per-piece work")->check(CLI::PositiveNumber);
  if (with_stage) sub->add_option("--stage", c.stages, "restrict to these stages (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jazzdyn: statistical-learning dynamics and amplitude-envelope analysis of jazz solos"};
  app.set_version_flag("--version", std::string(JAZZDYN_VERSION));
  app.require_subcommand(1);

  Common common;
  struct Sub {
    const char* name;
    const char* help;
    std::set<jp::Stage> stages;
  };
  const std::vector<Sub> subs = {
      {"ingest", "parse the corpus and write canonical pieces and symbol sequences", {jp::Stage::Ingest}},
      {"dynamics", "learn per-piece models and write surprise/entropy series", {jp::Stage::Dynamics}},
      {"embed", "t-SNE embeddings of the dynamics feature matrices", {jp::Stage::Embed}},
      {"acoustics", "synthesize, demodulate, scalograms and horizontal rates", {jp::Stage::Acoustics}},
      {"report", "grouped spectra, rate densities and annotated embeddings", {jp::Stage::Report}},
      {"run-all", "every configured stage", {}},
  };
  std::vector<CLI::App*> apps;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, common, std::string(s.name) == "run-all");
    apps.push_back(sub);
  }

  std::string vcfg;
  auto* validate = app.add_subcommand("validate", "check a configuration file and print its canonical form");
  validate->add_option("--config", vcfg, "configuration file")->required()->check(CLI::ExistingFile);

  jp::ToyCorpusSpec toy;
  std::string toy_dir;
  auto* mk = app.add_subcommand("make-toy-corpus", "write a small synthetic MIDI corpus with manifest and config");
  mk->add_option("--dir", toy_dir, "target directory")->required();
  mk->add_option("--pieces", toy.pieces, "number of pieces")->check(CLI::PositiveNumber);
  mk->add_option("--notes", toy.notes, "notes per piece")->check(CLI::Range(2, 100000));
  mk->add_option("--seed", toy.seed, "generator seed");
  mk->add_option("--corrupt", toy.corrupt_index, "0-based index of a piece whose MIDI file gets truncated");

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (apps[i]->parsed()) return execute(common, subs[i].stages);
    if (validate->parsed()) {
      const auto cfg = jp::validate_config(vcfg);
      std::cout << jp::canonical_config(cfg, true) << "config_hash=" << jp::config_hash(cfg) << "\n";
      return 0;
    }
    if (mk->parsed()) {
      std::cout << jp::write_toy_corpus(toy_dir, toy).string() << "\n";
      return 0;
    }
  } catch (const jazzdyn::Error& e) {
    print_error(std::string(jazzdyn::to_string(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return 1;
  }
  return 1;
}
