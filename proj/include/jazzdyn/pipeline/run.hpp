#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jazzdyn/acoustics/cycles.hpp"
#include "jazzdyn/acoustics/scalogram.hpp"
#include "jazzdyn/acoustics/signal.hpp"
#include "jazzdyn/acoustics/wav.hpp"
#include "jazzdyn/corpus/manifest.hpp"
#include "jazzdyn/corpus/symbolize.hpp"
#include "jazzdyn/dynamics/dynamics.hpp"
#include "jazzdyn/embedding/tsne.hpp"
#include "jazzdyn/hbsl/snapshot.hpp"
#include "jazzdyn/pipeline/config.hpp"
#include "jazzdyn/pipeline/pool.hpp"

#ifndef JAZZDYN_VERSION
#define JAZZDYN_VERSION "0.1.0"
#endif

namespace jazzdyn::pipeline {

struct Issue {
  std::string piece_id;  // empty for stage-level problems
  std::string stage;
  std::string code;
  std::string message;
};

enum class StageStatus { Ok, Partial, Failed, Skipped };

inline std::string to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Ok: return "ok";
    case StageStatus::Partial: return "partial";
    case StageStatus::Failed: return "failed";
    case StageStatus::Skipped: return "skipped";
  }
  return "?";
}

struct RunReport {
  std::map<std::string, StageStatus> stages;
  std::vector<Issue> warnings;
  std::vector<Issue> errors;
  std::vector<std::string> pieces_ok;
  double wall_time_sec = 0.0;
  std::string config_hash;
  std::vector<std::string> files;  // relative to the output directory, sorted
  bool fatal = false;
  std::string fatal_code;
  std::string fatal_message;

  int exit_code() const {
    if (fatal) return 1;
    if (!errors.empty()) return 2;
    for (const auto& [name, st] : stages)
      if (st == StageStatus::Partial || st == StageStatus::Failed) return 2;
    return 0;
  }
};

struct PieceAcoustics {
  std::vector<double> band_means;  // empty when the scalogram could not be computed
  std::vector<double> cycle_lengths;
  std::vector<double> rates;
  double min_envelope = 0.0;
  double out_of_band = 0.0;
  std::size_t frames = 0;
};

// Everything later stages and group_report read.
struct Outputs {
  std::vector<corpus::Piece> pieces;  // sorted by id
  std::vector<dynamics::PieceDynamics> dynamics;
  std::map<std::string, std::vector<embedding::EmbeddedPoint>> embeddings;  // "<domain>_<measure>"
  std::vector<double> band_frequencies;
  std::map<std::string, PieceAcoustics> acoustics;  // piece id -> results

  std::optional<dynamics::RowMetadata> meta_of(const std::string& id) const {
    for (const auto& p : pieces)
      if (p.id == id) return dynamics::RowMetadata::of(p);
    return std::nullopt;
  }
};

struct GroupTables {
  dynamics::GroupKey key = dynamics::GroupKey::Decade;
  acoustics::GroupedSpectra spectra;
  std::map<std::string, std::vector<double>> densities;  // label -> density over rate bins
  std::map<std::string, std::size_t> rate_counts;
  std::map<std::string, std::vector<std::pair<embedding::EmbeddedPoint, std::string>>> embeddings;
  std::vector<std::string> warnings;
};

inline GroupTables group_report(const Outputs& out, dynamics::GroupKey key) {
  GroupTables g;
  g.key = key;
  std::vector<std::string> expected;
  for (const auto& p : out.pieces) expected.push_back(dynamics::group_label(dynamics::RowMetadata::of(p), key));
  std::sort(expected.begin(), expected.end());
  expected.erase(std::unique(expected.begin(), expected.end()), expected.end());

  std::vector<std::pair<dynamics::RowMetadata, std::vector<double>>> spectra;
  std::map<std::string, std::vector<double>> pooled;
  for (const auto& p : out.pieces) {
    auto it = out.acoustics.find(p.id);
    if (it == out.acoustics.end()) continue;
    const auto meta = dynamics::RowMetadata::of(p);
    if (!it->second.band_means.empty()) spectra.emplace_back(meta, it->second.band_means);
    if (!it->second.rates.empty()) {
      auto& r = pooled[dynamics::group_label(meta, key)];
      r.insert(r.end(), it->second.rates.begin(), it->second.rates.end());
    }
  }
  if (!out.acoustics.empty()) {
    g.spectra = acoustics::mean_power_by_group(spectra, key, expected);
    g.warnings = g.spectra.warnings;
    for (const auto& label : expected) {
      auto it = pooled.find(label);
      if (it == pooled.end()) {
        g.warnings.push_back(std::string(to_string(Errc::EmptyGroup)) + ": " + dynamics::to_string(key) + " '" +
                             label + "' has no horizontal rates; omitted");
        continue;
      }
      g.densities[label] = acoustics::rate_density(it->second);
      g.rate_counts[label] = it->second.size();
    }
  }
  for (const auto& [name, pts] : out.embeddings) {
    auto& rows = g.embeddings[name];
    for (const auto& pt : pts) {
      const auto meta = out.meta_of(pt.piece_id);
      rows.emplace_back(pt, meta ? dynamics::group_label(*meta, key) : std::string("unknown"));
    }
  }
  return g;
}

inline GroupTables group_report(const Outputs& out, const std::string& key) {
  return group_report(out, dynamics::group_key_from_string(key));
}

namespace run_detail {

inline std::string safe_name(const std::string& id) {
  std::string s = id;
  for (auto& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  if (s.empty() || s == "." || s == "..") s = "_" + s;
  return s;
}

class Writer {
 public:
  explicit Writer(fs::path root) : root_(std::move(root)) {}

  void text(const std::string& rel, const std::string& content) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::Io, "cannot write " + p.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error(Errc::Io, "write failed for " + p.string());
    files_.insert(rel);
  }

  template <class Fn>
  void csv(const std::string& rel, Fn&& fill) {
    std::ostringstream os;
    fill(os);
    text(rel, os.str());
  }

  const std::set<std::string>& files() const { return files_; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::set<std::string> files_;
};

inline Issue issue_of(const std::string& piece, const std::string& stage, const std::exception& e) {
  if (auto* je = dynamic_cast<const Error*>(&e)) return {piece, stage, std::string(to_string(je->code())), je->what()};
  return {piece, stage, "Internal", e.what()};
}

inline std::string name_of(corpus::Domain d, dynamics::Measure m) {
  return corpus::to_string(d) + "_" + dynamics::to_string(m);
}

inline nlohmann::json issue_json(const Issue& i) {
  return {{"piece_id", i.piece_id}, {"stage", i.stage}, {"code", i.code}, {"message", i.message}};
}

inline PieceAcoustics analyse_piece(const corpus::Piece& piece, const RunConfig& cfg, std::vector<std::string>& notes,
                                    std::string* scalogram_csv, std::string* env_wav, std::string* car_wav,
                                    std::vector<double>* freqs) {
  PieceAcoustics pa;
  const auto wave = acoustics::zscore(acoustics::synthesize(piece, cfg.sample_rate));
  const auto full = acoustics::demodulate(wave, cfg.demod);
  pa.min_envelope = *std::min_element(full.envelope.begin(), full.envelope.end());
  pa.out_of_band = acoustics::out_of_band_fraction(full.envelope, full.rate, full.cutoff);
  if (pa.min_envelope < 0.0) notes.push_back("envelope invariant violated: negative envelope");
  if (pa.out_of_band > 0.05)
    notes.push_back("envelope invariant violated: out-of-band power fraction " + fmt9(pa.out_of_band));
  if (env_wav) {
    *env_wav = acoustics::encode_wav({full.rate, full.envelope});
    *car_wav = acoustics::encode_wav({full.rate, full.carrier});
  }
  const auto env = acoustics::decimate(full, cfg.frame_rate);
  pa.frames = env.envelope.size();
  try {
    const auto sc = acoustics::scalogram(env, cfg.scalo);
    pa.band_means = sc.band_means();
    *freqs = sc.frequencies;
    if (scalogram_csv) {
      std::ostringstream os;
      acoustics::write_scalogram_csv(os, sc);
      *scalogram_csv = os.str();
    }
  } catch (const Error& e) {
    notes.push_back(std::string(e.what()) + "; excluded from spectra");
  }
  try {
    const auto cs = acoustics::horizontal_rates(acoustics::detect_troughs(env, cfg.prominence), env.rate);
    pa.cycle_lengths = cs.cycle_lengths;
    pa.rates = cs.horizontal_rates;
  } catch (const Error& e) {
    notes.push_back(std::string(e.what()) + "; excluded from rates");
  }
  return pa;
}

}  // namespace run_detail

// Executes the configured stages (plus their prerequisites) and writes every
// output under cfg.out_dir. Never throws for piece-level problems; fatal
// conditions come back as report.fatal.
inline RunReport run(const RunConfig& cfg_in, Outputs* keep = nullptr) {
  using namespace run_detail;
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = cfg_in;
  cfg.stages = with_prerequisites(cfg.stages);
  RunReport rep;
  rep.config_hash = config_hash(cfg);
  for (Stage s : kStages) rep.stages[to_string(s)] = StageStatus::Skipped;

  auto finish = [&](Writer* w) {
    rep.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (w) rep.files.assign(w->files().begin(), w->files().end());
    return rep;
  };
  auto fatal = [&](const std::string& code, const std::string& msg, Writer* w) {
    rep.fatal = true;
    rep.fatal_code = code;
    rep.fatal_message = msg;
    if (w) {
      try {
        nlohmann::json j = {{"status", "fatal"}, {"code", code}, {"message", msg}, {"config_hash", rep.config_hash}};
        w->text("run_error.json", j.dump(2) + "\n");
      } catch (const std::exception&) {
      }
    }
    return finish(w);
  };

  // output directory must be creatable and writable
  Writer w(cfg.out_dir);
  try {
    fs::create_directories(cfg.out_dir);
    const fs::path probe = cfg.out_dir / ".jazzdyn_probe";
    {
      std::ofstream f(probe);
      if (!f) throw Error(Errc::Io, "output directory is not writable: " + cfg.out_dir.string());
    }
    fs::remove(probe);
    fs::remove(cfg.out_dir / "run_error.json");
  } catch (const Error& e) {
    return fatal(std::string(to_string(e.code())), e.what(), nullptr);
  } catch (const std::exception& e) {
    return fatal("Io", std::string("output directory is not usable: ") + e.what(), nullptr);
  }

  Outputs local;
  Outputs& out = keep ? *keep : local;
  out = {};

  // ingest
  corpus::Manifest manifest;
  try {
    manifest = corpus::load_manifest(cfg.manifest);
  } catch (const Error& e) {
    return fatal(std::string(to_string(e.code())), e.what(), &w);
  }
  for (const auto& msg : manifest.warnings) rep.warnings.push_back({"", "ingest", "Manifest", msg});
  if (manifest.entries.empty()) return fatal("EmptyCorpus", "manifest lists no pieces: " + cfg.manifest.string(), &w);

  struct Ingested {
    std::optional<corpus::Piece> piece;
    dynamics::DomainSequences seqs;
    std::vector<std::string> warnings;
    std::optional<Issue> error;
  };
  std::vector<Ingested> ing(manifest.entries.size());
  parallel_for(ing.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    try {
      auto lp = corpus::load_piece(e, cfg.csv);
      ing[i].seqs = dynamics::symbolize_all(lp.piece, cfg.dyn);
      ing[i].warnings = std::move(lp.warnings);
      ing[i].piece = std::move(lp.piece);
    } catch (const std::exception& ex) {
      auto is = issue_of(e.id, "ingest", ex);
      is.message = e.path.filename().string() + ": " + is.message;
      ing[i].error = is;
    }
  });
  std::vector<std::size_t> order(ing.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return manifest.entries[a].id < manifest.entries[b].id; });
  std::vector<const dynamics::DomainSequences*> seqs;
  try {
    for (std::size_t i : order) {
      const auto& id = manifest.entries[i].id;
      for (const auto& msg : ing[i].warnings) rep.warnings.push_back({id, "ingest", "Warning", msg});
      if (ing[i].error) {
        rep.errors.push_back(*ing[i].error);
        continue;
      }
      const auto& p = *ing[i].piece;
      w.csv("pieces/" + safe_name(p.id) + ".csv", [&](std::ostream& os) { corpus::write_piece_csv(os, p); });
      for (corpus::Domain d : corpus::kDomains)
        w.text("symbols/" + safe_name(p.id) + "." + corpus::to_string(d) + ".json",
               corpus::to_json(ing[i].seqs.get(d)).dump() + "\n");
      out.pieces.push_back(p);
      seqs.push_back(&ing[i].seqs);
      rep.pieces_ok.push_back(p.id);
    }
  } catch (const Error& e) {
    return fatal(std::string(to_string(e.code())), e.what(), &w);
  }
  if (out.pieces.empty()) return fatal("EmptyCorpus", "no piece could be ingested", &w);
  rep.stages["ingest"] = rep.errors.empty() ? StageStatus::Ok : StageStatus::Partial;

  try {
    // dynamics
    if (cfg.stages.count(Stage::Dynamics)) {
      bool partial = false;
      if (cfg.learning_mode == LearningMode::CorpusPrimed) {
        out.dynamics = dynamics::corpus_primed_dynamics(out.pieces, cfg.dyn);
      } else {
        std::vector<std::optional<dynamics::PieceDynamics>> res(out.pieces.size());
        std::vector<std::optional<Issue>> errs(out.pieces.size());
        std::vector<std::vector<std::pair<std::string, std::string>>> snaps(out.pieces.size());
        parallel_for(out.pieces.size(), cfg.jobs, [&](std::size_t i) {
          try {
            res[i] = dynamics::per_piece_dynamics(out.pieces[i], cfg.dyn);
            if (cfg.write_snapshots)
              for (corpus::Domain d : corpus::kDomains) {
                const auto h = hbsl::learn_hierarchy(seqs[i]->get(d), cfg.dyn.hbsl);
                snaps[i].emplace_back(corpus::to_string(d), hbsl::snapshot(h.model).dump(1) + "\n");
              }
          } catch (const std::exception& ex) {
            errs[i] = issue_of(out.pieces[i].id, "dynamics", ex);
          }
        });
        for (std::size_t i = 0; i < res.size(); ++i) {
          if (errs[i]) {
            rep.errors.push_back(*errs[i]);
            partial = true;
            continue;
          }
          out.dynamics.push_back(std::move(*res[i]));
          for (const auto& [d, js] : snaps[i]) w.text("models/" + safe_name(out.pieces[i].id) + "." + d + ".json", js);
        }
      }
      for (corpus::Domain d : corpus::kDomains)
        for (dynamics::Measure m : dynamics::kMeasures) {
          std::vector<const dynamics::DynamicsSeries*> sel;
          for (const auto& pd : out.dynamics)
            if (const auto* s = pd.find(d, m)) sel.push_back(s);
          w.csv("dynamics/" + name_of(d, m) + ".csv", [&](std::ostream& os) { dynamics::write_dynamics_csv(os, sel); });
        }
      rep.stages["dynamics"] = partial ? StageStatus::Partial : StageStatus::Ok;
    }

    // embed
    if (cfg.stages.count(Stage::Embed)) {
      bool failed = false;
      for (corpus::Domain d : cfg.embed_domains)
        for (dynamics::Measure m : cfg.embed_measures) {
          const auto name = name_of(d, m);
          try {
            const auto fm = dynamics::build_feature_matrix(out.dynamics, d, m, cfg.zscore_rows);
            w.csv("features/" + name + ".csv", [&](std::ostream& os) { dynamics::write_feature_matrix_csv(os, fm); });
            auto pts = embedding::tsne(fm, cfg.tsne);
            w.csv("embedding/" + name + ".csv", [&](std::ostream& os) { embedding::write_embedding_csv(os, pts); });
            out.embeddings[name] = std::move(pts);
          } catch (const Error& e) {
            rep.errors.push_back({"", "embed", std::string(to_string(e.code())), name + ": " + e.what()});
            failed = true;
          }
        }
      rep.stages["embed"] = failed ? (out.embeddings.empty() ? StageStatus::Failed : StageStatus::Partial)
                                   : StageStatus::Ok;
    }

    // acoustics
    if (cfg.stages.count(Stage::Acoustics)) {
      const std::size_t n = out.pieces.size();
      std::vector<std::optional<PieceAcoustics>> res(n);
      std::vector<std::vector<std::string>> notes(n);
      std::vector<std::optional<Issue>> errs(n);
      std::vector<std::string> sc_csv(n), env_wav(n), car_wav(n);
      std::vector<std::vector<double>> freqs(n);
      parallel_for(n, cfg.jobs, [&](std::size_t i) {
        try {
          res[i] = analyse_piece(out.pieces[i], cfg, notes[i], cfg.write_scalograms ? &sc_csv[i] : nullptr,
                                 cfg.write_wav ? &env_wav[i] : nullptr, cfg.write_wav ? &car_wav[i] : nullptr,
                                 &freqs[i]);
        } catch (const std::exception& ex) {
          errs[i] = issue_of(out.pieces[i].id, "acoustics", ex);
        }
      });
      bool partial = false;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& id = out.pieces[i].id;
        for (const auto& msg : notes[i]) rep.warnings.push_back({id, "acoustics", "Warning", msg});
        if (errs[i]) {
          rep.errors.push_back(*errs[i]);
          partial = true;
          continue;
        }
        if (out.band_frequencies.empty() && !freqs[i].empty()) out.band_frequencies = freqs[i];
        if (!sc_csv[i].empty()) w.text("acoustics/scalogram/" + safe_name(id) + ".csv", sc_csv[i]);
        if (!env_wav[i].empty()) {
          w.text("acoustics/wav/" + safe_name(id) + ".envelope.wav", env_wav[i]);
          w.text("acoustics/wav/" + safe_name(id) + ".carrier.wav", car_wav[i]);
        }
        out.acoustics[id] = std::move(*res[i]);
      }
      if (out.band_frequencies.empty())
        out.band_frequencies = acoustics::log_spaced(cfg.scalo.f_min, cfg.scalo.f_max, cfg.scalo.bands);

      std::vector<double> pooled;
      w.csv("acoustics/band_power.csv", [&](std::ostream& os) {
        os << "piece_id,performer,year,decade,style,instrument";
        for (double f : out.band_frequencies) os << ",hz_" << fmt9(f);
        os << '\n';
        for (const auto& p : out.pieces) {
          auto it = out.acoustics.find(p.id);
          if (it == out.acoustics.end() || it->second.band_means.empty()) continue;
          os << corpus::csv_quote(p.id) << ',' << corpus::csv_quote(p.performer) << ',' << p.year << ',' << p.decade
             << ',' << corpus::csv_quote(p.style) << ',' << corpus::csv_quote(p.instrument);
          for (double v : it->second.band_means) os << ',' << fmt9(v);
          os << '\n';
        }
      });
      w.csv("acoustics/cycles.csv", [&](std::ostream& os) {
        os << "piece_id,cycle_index,length_sec\n";
        for (const auto& [id, pa] : out.acoustics)
          for (std::size_t k = 0; k < pa.cycle_lengths.size(); ++k)
            os << corpus::csv_quote(id) << ',' << k << ',' << fmt9(pa.cycle_lengths[k]) << '\n';
      });
      w.csv("acoustics/rates.csv", [&](std::ostream& os) {
        os << "piece_id,rate\n";
        for (const auto& [id, pa] : out.acoustics)
          for (double r : pa.rates) {
            os << corpus::csv_quote(id) << ',' << fmt9(r) << '\n';
            pooled.push_back(r);
          }
      });
      w.csv("acoustics/density.csv",
            [&](std::ostream& os) { acoustics::write_density_csv(os, acoustics::rate_density(pooled)); });
      w.csv("acoustics/envelope_checks.csv", [&](std::ostream& os) {
        os << "piece_id,frames,min_envelope,out_of_band_fraction\n";
        for (const auto& [id, pa] : out.acoustics)
          os << corpus::csv_quote(id) << ',' << pa.frames << ',' << fmt9(pa.min_envelope) << ','
             << fmt9(pa.out_of_band) << '\n';
      });
      rep.stages["acoustics"] = partial ? StageStatus::Partial : StageStatus::Ok;
    }

    // report
    if (cfg.stages.count(Stage::Report)) {
      for (auto key : cfg.group_keys) {
        const auto g = group_report(out, key);
        const auto k = dynamics::to_string(key);
        for (const auto& msg : g.warnings) rep.warnings.push_back({"", "report", "EmptyGroup", msg});
        w.csv("report/spectra_by_" + k + ".csv",
              [&](std::ostream& os) { acoustics::write_group_spectra_csv(os, g.spectra, out.band_frequencies, key); });
        w.csv("report/density_by_" + k + ".csv", [&](std::ostream& os) {
          os << k << ",n_rates,bin_center,probability\n";
          for (const auto& [label, dens] : g.densities)
            for (std::size_t b = 0; b < dens.size(); ++b)
              os << corpus::csv_quote(label) << ',' << g.rate_counts.at(label) << ','
                 << fmt9(acoustics::rate_bin_center(b)) << ',' << fmt9(dens[b]) << '\n';
        });
        for (const auto& [name, rows] : g.embeddings)
          w.csv("report/embedding_" + name + "_by_" + k + ".csv", [&](std::ostream& os) {
            os << "piece_id,x,y," << k << '\n';
            for (const auto& [pt, label] : rows)
              os << corpus::csv_quote(pt.piece_id) << ',' << fmt9(pt.x) << ',' << fmt9(pt.y) << ','
                 << corpus::csv_quote(label) << '\n';
          });
      }
      rep.stages["report"] = StageStatus::Ok;
    }

    // run manifest: deterministic, so wall time is left out
    nlohmann::json cfgj = nlohmann::json::object();
    for (const auto& [k, key] : config_detail::keys())
      if (key.hashed) cfgj[k] = key.get(cfg);
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [k, st] : rep.stages) stages[k] = to_string(st);
    nlohmann::json warns = nlohmann::json::array(), errs = nlohmann::json::array();
    for (const auto& i : rep.warnings) warns.push_back(issue_json(i));
    for (const auto& i : rep.errors) errs.push_back(issue_json(i));
    nlohmann::json files(w.files());
    nlohmann::json j = {{"tool", "jazzdyn"},
                        {"version", JAZZDYN_VERSION},
                        {"config_hash", rep.config_hash},
                        {"config", cfgj},
                        {"stages", stages},
                        {"pieces_ok", rep.pieces_ok},
                        {"warnings", warns},
                        {"errors", errs},
                        {"files", files},
                        {"exit_code", rep.exit_code()}};
    w.text("run_manifest.json", j.dump(2) + "\n");
  } catch (const Error& e) {
    return fatal(std::string(to_string(e.code())), e.what(), &w);
  } catch (const std::exception& e) {
    return fatal("Io", e.what(), &w);
  }
  return finish(&w);
}

}  // namespace jazzdyn::pipeline
