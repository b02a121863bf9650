#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "jazzdyn/pipeline/config.hpp"
#include "jazzdyn/pipeline/run.hpp"
#include "jazzdyn/pipeline/toy.hpp"

using namespace jazzdyn;
using namespace jazzdyn::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("jazzdyn_pipeline_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Io;
}

std::string what_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunConfig toy_config(const fs::path& dir, int pieces, int corrupt = -1, int notes = 60) {
  ToyCorpusSpec spec;
  spec.pieces = pieces;
  spec.notes = notes;
  spec.corrupt_index = corrupt;
  write_toy_corpus(dir / "corpus", spec);
  auto cfg = validate_config(dir / "corpus" / "config.txt");
  cfg.tsne.iterations = 300;
  return cfg;
}

}  // namespace

TEST(Config, MinimalAppliesDefaults) {
  const auto c = parse_config_string("manifest = m.csv\n", {}, false);
  EXPECT_EQ(c.manifest, fs::path("m.csv"));
  EXPECT_EQ(c.dyn.hbsl.alpha, 1.0);
  EXPECT_EQ(c.dyn.hbsl.gate_constant, 5.0);
  EXPECT_EQ(c.tsne.perplexity, 2.0);
  EXPECT_EQ(c.tsne.early_exaggeration, 20.0);
  EXPECT_EQ(c.tsne.seed, 40u);
  EXPECT_EQ(c.demod.cutoff, 40.0);
  EXPECT_EQ(c.dyn.hbsl.max_levels, 3);
  EXPECT_EQ(c.sample_rate, 16000.0);
  EXPECT_EQ(c.prominence, 0.05);
  EXPECT_EQ(c.stages.size(), 5u);
}

TEST(Config, UnknownKeyIsNamed) {
  EXPECT_EQ(code_of([] { parse_config_string("manifest = m.csv\ntsne.perplexty = 3\n", {}, false); }),
            Errc::UnknownKey);
  EXPECT_NE(what_of([] { parse_config_string("manifest = m.csv\ntsne.perplexty = 3\n", {}, false); })
                .find("tsne.perplexty"),
            std::string::npos);
}

TEST(Config, BadValuesAreNamed) {
  EXPECT_EQ(code_of([] { parse_config_string("manifest = m\nhbsl.c = -1\n", {}, false); }), Errc::BadValue);
  EXPECT_NE(what_of([] { parse_config_string("manifest = m\nhbsl.c = -1\n", {}, false); }).find("hbsl.c"),
            std::string::npos);
  for (const char* bad : {"hbsl.alpha = 0", "hbsl.max_levels = 0", "tsne.seed = x", "acoustics.cutoff = 9000",
                          "report.group_keys = album", "stages = ingest,plot", "embed.measures = loudness",
                          "acoustics.write_wav = maybe", "jobs = 0", "just words"}) {
    const std::string text = std::string("manifest = m\n") + bad + "\n";
    EXPECT_EQ(code_of([&] { parse_config_string(text, {}, false); }), Errc::BadValue) << bad;
  }
  EXPECT_NE(what_of([] { parse_config_string("manifest = m\nreport.group_keys = album\n", {}, false); })
                .find("report.group_keys"),
            std::string::npos);
}

TEST(Config, MissingManifestAndPaths) {
  EXPECT_EQ(code_of([] { parse_config_string("hbsl.c = 4\n", {}, false); }), Errc::MissingRequired);
  EXPECT_EQ(code_of([] { parse_config_string("manifest = /nonexistent/manifest.csv\n"); }), Errc::BadValue);
  EXPECT_EQ(code_of([] { parse_config_string("manifest = a\nmanifest = b\n", {}, false); }), Errc::BadValue);
}

TEST(Config, CommentsQuotesAndRelativePaths) {
  const auto c = parse_config_string("# header\nmanifest = \"m.csv\"  # trailing\n\nembed.domains = pitch, rhythm\n",
                                     "/base", false);
  EXPECT_EQ(c.manifest, fs::path("/base/m.csv"));
  EXPECT_EQ(c.embed_domains.size(), 2u);
}

TEST(Config, HashTracksComputationOnly) {
  const auto base = parse_config_string("manifest = m\n", {}, false);
  const auto h = config_hash(base);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, config_hash(parse_config_string("manifest = m\nout_dir = elsewhere\njobs = 8\n", {}, false)));
  std::set<std::string> seen = {h};
  for (const char* change :
       {"hbsl.alpha = 0.5", "hbsl.c = 4", "hbsl.max_levels = 2", "hbsl.order = 2", "hbsl.learning_mode = corpus_primed",
        "symbolize.bins_per_octave = 3", "symbolize.pitch_mode = pitch_class", "tsne.perplexity = 3", "tsne.seed = 41",
        "tsne.iterations = 999", "acoustics.cutoff = 30", "acoustics.prominence = 0.1", "acoustics.sample_rate = 22050",
        "embed.measures = surprise", "dynamics.zscore_rows = true", "csv.pitch = note"}) {
    const auto c = parse_config_string(std::string("manifest = m\n") + change + "\n", {}, false);
    EXPECT_TRUE(seen.insert(config_hash(c)).second) << change;
  }
}

TEST(Config, StagePrerequisites) {
  EXPECT_EQ(with_prerequisites({Stage::Embed}), (std::set<Stage>{Stage::Ingest, Stage::Dynamics, Stage::Embed}));
  EXPECT_EQ(with_prerequisites({Stage::Report}).size(), 5u);
  EXPECT_EQ(with_prerequisites({Stage::Acoustics}), (std::set<Stage>{Stage::Ingest, Stage::Acoustics}));
}

TEST(GroupReport, DecadeStyleAndBadKey) {
  Outputs out;
  for (auto [id, year, style] : {std::tuple{"a", 1954, "bebop"}, std::tuple{"b", 1957, "cool"}}) {
    corpus::Piece p;
    p.id = id;
    p.set_year(year);
    p.style = style;
    out.pieces.push_back(p);
    PieceAcoustics pa;
    pa.band_means = {1.0, 2.0};
    pa.rates = {0.5, 0.5};
    out.acoustics[id] = pa;
  }
  const auto dec = group_report(out, "decade");
  ASSERT_EQ(dec.spectra.means.size(), 1u);
  EXPECT_EQ(dec.spectra.means.begin()->first, "1950");
  EXPECT_EQ(dec.densities.size(), 1u);
  const auto sty = group_report(out, "style");
  EXPECT_EQ(sty.spectra.means.size(), 2u);
  EXPECT_EQ(sty.densities.size(), 2u);
  EXPECT_EQ(code_of([&] { group_report(out, "album"); }), Errc::BadValue);

  out.acoustics["b"].rates.clear();
  out.acoustics["b"].band_means.clear();
  const auto missing = group_report(out, "style");
  EXPECT_EQ(missing.spectra.means.count("cool"), 0u);
  EXPECT_EQ(missing.warnings.size(), 2u);
}

TEST(Run, ToyCorpusInventory) {
  const auto dir = scratch("inventory");
  auto cfg = toy_config(dir, 3);
  cfg.out_dir = dir / "out";
  const auto rep = run(cfg);
  ASSERT_FALSE(rep.fatal) << rep.fatal_message;
  EXPECT_EQ(rep.exit_code(), 0);
  for (const auto& [name, st] : rep.stages) EXPECT_EQ(st, StageStatus::Ok) << name;
  int dyn = 0, emb = 0;
  for (const auto& f : rep.files) {
    dyn += f.rfind("dynamics/", 0) == 0;
    emb += f.rfind("embedding/", 0) == 0;
  }
  EXPECT_EQ(dyn, 9);
  EXPECT_EQ(emb, 2);
  for (const char* f : {"acoustics/rates.csv", "acoustics/density.csv", "acoustics/cycles.csv",
                        "acoustics/band_power.csv", "report/spectra_by_decade.csv", "report/density_by_style.csv",
                        "run_manifest.json"}) {
    EXPECT_TRUE(std::find(rep.files.begin(), rep.files.end(), f) != rep.files.end()) << f;
    EXPECT_TRUE(fs::exists(cfg.out_dir / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(slurp(cfg.out_dir / "run_manifest.json"));
  EXPECT_EQ(manifest["config_hash"], rep.config_hash);
  for (const auto& f : rep.files)
    if (f != "run_manifest.json") {
      EXPECT_TRUE(std::find(manifest["files"].begin(), manifest["files"].end(), f) != manifest["files"].end()) << f;
    }
}

TEST(Run, TruncatedMidiIsIsolated) {
  const auto dir = scratch("isolation");
  auto clean = toy_config(dir / "clean", 3);
  clean.out_dir = dir / "clean_out";
  clean.stages = {Stage::Ingest, Stage::Dynamics, Stage::Acoustics};
  auto bad = toy_config(dir / "bad", 3, 1);
  bad.out_dir = dir / "bad_out";
  bad.stages = clean.stages;
  const auto a = run(clean);
  const auto b = run(bad);
  ASSERT_FALSE(b.fatal);
  EXPECT_EQ(b.exit_code(), 2);
  EXPECT_EQ(b.pieces_ok, (std::vector<std::string>{"toy_001", "toy_003"}));
  ASSERT_EQ(b.errors.size(), 1u);
  EXPECT_EQ(b.errors[0].piece_id, "toy_002");
  EXPECT_EQ(b.errors[0].code, "TruncatedTrack");
  EXPECT_NE(b.errors[0].message.find("toy_002.mid"), std::string::npos);

  // numbers for the surviving pieces do not move
  for (const char* f : {"pieces/toy_001.csv", "pieces/toy_003.csv", "acoustics/scalogram/toy_003.csv"})
    EXPECT_EQ(slurp(clean.out_dir / f), slurp(bad.out_dir / f)) << f;
  auto rows_without = [](const std::string& text, const std::string& drop) {
    std::istringstream in(text);
    std::string line, keep;
    while (std::getline(in, line))
      if (line.rfind(drop + ",", 0) != 0) keep += line + "\n";
    return keep;
  };
  for (const char* f : {"dynamics/pitch_surprise.csv", "dynamics/rhythm_entropy.csv", "acoustics/rates.csv"})
    EXPECT_EQ(rows_without(slurp(clean.out_dir / f), "toy_002"), slurp(bad.out_dir / f)) << f;
  (void)a;
}

TEST(Run, ByteIdenticalAcrossRunsAndJobCounts) {
  const auto dir = scratch("determinism");
  auto cfg = toy_config(dir, 4, -1, 50);
  cfg.out_dir = dir / "one";
  cfg.jobs = 1;
  const auto a = run(cfg);
  cfg.out_dir = dir / "two";
  cfg.jobs = 3;
  const auto b = run(cfg);
  ASSERT_EQ(a.files, b.files);
  for (const auto& f : a.files) EXPECT_EQ(slurp(dir / "one" / f), slurp(dir / "two" / f)) << f;
}

TEST(Run, FatalConditions) {
  const auto dir = scratch("fatal");
  {
    std::ofstream(dir / "empty.csv") << "id,path,performer,year,style,instrument\n";
  }
  RunConfig cfg;
  cfg.manifest = dir / "empty.csv";
  cfg.out_dir = dir / "out";
  const auto rep = run(cfg);
  EXPECT_TRUE(rep.fatal);
  EXPECT_EQ(rep.exit_code(), 1);
  EXPECT_TRUE(fs::exists(dir / "out" / "run_error.json"));

  {
    std::ofstream(dir / "blocker") << "x";
  }
  auto good = toy_config(dir, 3);
  good.out_dir = dir / "blocker" / "out";
  const auto r2 = run(good);
  EXPECT_TRUE(r2.fatal);
  EXPECT_EQ(r2.exit_code(), 1);
}

TEST(Run, CorpusPrimedAndSnapshots) {
  const auto dir = scratch("primed");
  auto cfg = toy_config(dir, 3, -1, 40);
  cfg.out_dir = dir / "out";
  cfg.learning_mode = LearningMode::CorpusPrimed;
  cfg.stages = {Stage::Dynamics};
  const auto rep = run(cfg);
  ASSERT_FALSE(rep.fatal);
  EXPECT_EQ(rep.exit_code(), 0);
  EXPECT_EQ(rep.stages.at("acoustics"), StageStatus::Skipped);

  cfg.learning_mode = LearningMode::PerPiece;
  cfg.write_snapshots = true;
  cfg.out_dir = dir / "snap";
  const auto r2 = run(cfg);
  EXPECT_TRUE(fs::exists(dir / "snap" / "models" / "toy_001.pitch.json"));
  EXPECT_EQ(r2.exit_code(), 0);
}
