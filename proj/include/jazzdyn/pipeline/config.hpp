#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jazzdyn/acoustics/cycles.hpp"
#include "jazzdyn/acoustics/scalogram.hpp"
#include "jazzdyn/acoustics/signal.hpp"
#include "jazzdyn/corpus/csv.hpp"
#include "jazzdyn/dynamics/dynamics.hpp"
#include "jazzdyn/embedding/tsne.hpp"
#include "jazzdyn/error.hpp"
#include "jazzdyn/format.hpp"
#include "jazzdyn/hbsl/snapshot.hpp"

namespace jazzdyn::pipeline {

namespace fs = std::filesystem;

enum class Stage { Ingest, Dynamics, Embed, Acoustics, Report };

inline constexpr std::array<Stage, 5> kStages = {Stage::Ingest, Stage::Dynamics, Stage::Embed, Stage::Acoustics,
                                                 Stage::Report};

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Dynamics: return "dynamics";
    case Stage::Embed: return "embed";
    case Stage::Acoustics: return "acoustics";
    case Stage::Report: return "report";
  }
  return "?";
}

inline Stage stage_from_string(const std::string& s) {
  for (Stage st : kStages)
    if (to_string(st) == s) return st;
  throw Error(Errc::BadValue, "stages: unknown stage '" + s + "'");
}

// Adds every stage the requested ones depend on.
inline std::set<Stage> with_prerequisites(std::set<Stage> s) {
  if (s.count(Stage::Report)) {
    s.insert(Stage::Embed);
    s.insert(Stage::Acoustics);
  }
  if (s.count(Stage::Embed)) s.insert(Stage::Dynamics);
  if (!s.empty()) s.insert(Stage::Ingest);
  return s;
}

enum class LearningMode { PerPiece, CorpusPrimed };

struct RunConfig {
  fs::path manifest;
  fs::path out_dir = "jazzdyn_out";
  int jobs = 1;
  std::set<Stage> stages{kStages.begin(), kStages.end()};

  corpus::CsvSchema csv;
  dynamics::DynamicsConfig dyn;
  LearningMode learning_mode = LearningMode::PerPiece;
  bool zscore_rows = false;
  bool write_snapshots = false;

  std::vector<corpus::Domain> embed_domains = {corpus::Domain::Pitch};
  std::vector<dynamics::Measure> embed_measures = {dynamics::Measure::BayesianSurprise, dynamics::Measure::Entropy};
  embedding::TsneConfig tsne;

  double sample_rate = 16000.0;
  acoustics::DemodConfig demod;
  double frame_rate = 200.0;
  acoustics::ScalogramConfig scalo;
  double prominence = 0.05;
  bool write_scalograms = true;
  bool write_wav = false;

  std::vector<dynamics::GroupKey> group_keys = {dynamics::kGroupKeys.begin(), dynamics::kGroupKeys.end()};
};

namespace config_detail {

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) {
    cur = corpus::trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

// One entry per accepted key: how to apply a value and how to print the current one.
struct Key {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool hashed = true;  // false for keys that cannot change any numeric output
};

inline double real(const std::string& k, const std::string& v) {
  double d = 0;
  if (!parse_double(v, d)) throw Error(Errc::BadValue, k + ": '" + v + "' is not a number");
  return d;
}

inline double positive(const std::string& k, const std::string& v) {
  const double d = real(k, v);
  if (!(d > 0)) throw Error(Errc::BadValue, k + ": must be positive, got " + v);
  return d;
}

inline long long integer(const std::string& k, const std::string& v, long long lo) {
  long long i = 0;
  if (!parse_int(v, i)) throw Error(Errc::BadValue, k + ": '" + v + "' is not an integer");
  if (i < lo) throw Error(Errc::BadValue, k + ": must be >= " + std::to_string(lo) + ", got " + v);
  return i;
}

inline bool boolean(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(Errc::BadValue, k + ": '" + v + "' is not a boolean");
}

template <class T>
T rethrow_as(const std::string& k, const std::function<T()>& f) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string prefix = std::string(to_string(Errc::BadValue)) + ": ";
    std::string msg = e.what();
    if (msg.rfind(prefix + k + ":", 0) == 0) throw;
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw Error(Errc::BadValue, k + ": " + msg);
  }
}

inline const std::map<std::string, Key>& keys() {
  using D = corpus::Domain;
  using M = dynamics::Measure;
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> t;
    auto num = [](double x) { return fmt_exact(x); };
    auto bl = [](bool b) { return std::string(b ? "true" : "false"); };

    t["manifest"] = {[](RunConfig& c, const std::string& v) { c.manifest = v; },
                     [](const RunConfig& c) { return c.manifest.generic_string(); }};
    t["out_dir"] = {[](RunConfig& c, const std::string& v) { c.out_dir = v; },
                    [](const RunConfig& c) { return c.out_dir.generic_string(); }, false};
    t["jobs"] = {[](RunConfig& c, const std::string& v) { c.jobs = static_cast<int>(integer("jobs", v, 1)); },
                 [](const RunConfig& c) { return std::to_string(c.jobs); }, false};
    t["stages"] = {[](RunConfig& c, const std::string& v) {
                     std::set<Stage> s;
                     for (const auto& x : split_list(v)) s.insert(stage_from_string(x));
                     if (s.empty()) throw Error(Errc::BadValue, "stages: empty stage list");
                     c.stages = s;
                   },
                   [](const RunConfig& c) {
                     std::vector<std::string> v;
                     for (Stage s : c.stages) v.push_back(to_string(s));
                     return join(v);
                   }};

    for (const char* col : {"onset", "duration", "pitch", "velocity", "performer", "year", "style", "instrument"}) {
      const std::string name = col;
      auto field = [name](corpus::CsvSchema& s) -> std::string& {
        if (name == "onset") return s.onset;
        if (name == "duration") return s.duration;
        if (name == "pitch") return s.pitch;
        if (name == "velocity") return s.velocity;
        if (name == "performer") return s.performer;
        if (name == "year") return s.year;
        if (name == "style") return s.style;
        return s.instrument;
      };
      t["csv." + name] = {[field](RunConfig& c, const std::string& v) { field(c.csv) = v; },
                          [field](const RunConfig& c) {
                            auto s = c.csv;
                            return field(s);
                          }};
    }

    t["hbsl.alpha"] = {[](RunConfig& c, const std::string& v) { c.dyn.hbsl.alpha = positive("hbsl.alpha", v); },
                       [num](const RunConfig& c) { return num(c.dyn.hbsl.alpha); }};
    t["hbsl.c"] = {[](RunConfig& c, const std::string& v) { c.dyn.hbsl.gate_constant = positive("hbsl.c", v); },
                   [num](const RunConfig& c) { return num(c.dyn.hbsl.gate_constant); }};
    t["hbsl.max_levels"] = {
        [](RunConfig& c, const std::string& v) { c.dyn.hbsl.max_levels = static_cast<int>(integer("hbsl.max_levels", v, 1)); },
        [](const RunConfig& c) { return std::to_string(c.dyn.hbsl.max_levels); }};
    t["hbsl.order"] = {
        [](RunConfig& c, const std::string& v) { c.dyn.hbsl.order = static_cast<int>(integer("hbsl.order", v, 1)); },
        [](const RunConfig& c) { return std::to_string(c.dyn.hbsl.order); }};
    t["hbsl.probability_norm"] = {
        [](RunConfig& c, const std::string& v) {
          if (v == "alphabet_size") c.dyn.hbsl.probability_norm = hbsl::ProbabilityNorm::AlphabetSize;
          else if (v == "raw") c.dyn.hbsl.probability_norm = hbsl::ProbabilityNorm::Raw;
          else throw Error(Errc::BadValue, "hbsl.probability_norm: expected alphabet_size or raw, got '" + v + "'");
        },
        [](const RunConfig& c) { return hbsl::to_string(c.dyn.hbsl.probability_norm); }};
    t["hbsl.reliability_norm"] = {
        [](RunConfig& c, const std::string& v) {
          if (v == "median") c.dyn.hbsl.reliability_norm = hbsl::ReliabilityNorm::Median;
          else if (v == "raw") c.dyn.hbsl.reliability_norm = hbsl::ReliabilityNorm::Raw;
          else throw Error(Errc::BadValue, "hbsl.reliability_norm: expected median or raw, got '" + v + "'");
        },
        [](const RunConfig& c) { return hbsl::to_string(c.dyn.hbsl.reliability_norm); }};
    t["hbsl.variance_target"] = {
        [](RunConfig& c, const std::string& v) {
          if (v == "symbol") c.dyn.hbsl.variance_target = hbsl::VarianceTarget::Symbol;
          else if (v == "total") c.dyn.hbsl.variance_target = hbsl::VarianceTarget::Total;
          else throw Error(Errc::BadValue, "hbsl.variance_target: expected symbol or total, got '" + v + "'");
        },
        [](const RunConfig& c) { return hbsl::to_string(c.dyn.hbsl.variance_target); }};
    t["hbsl.learning_mode"] = {
        [](RunConfig& c, const std::string& v) {
          if (v == "per_piece") c.learning_mode = LearningMode::PerPiece;
          else if (v == "corpus_primed") c.learning_mode = LearningMode::CorpusPrimed;
          else throw Error(Errc::BadValue, "hbsl.learning_mode: expected per_piece or corpus_primed, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.learning_mode == LearningMode::PerPiece ? "per_piece" : "corpus_primed");
        }};

    t["symbolize.pitch_mode"] = {
        [](RunConfig& c, const std::string& v) {
          if (v == "midi_number") c.dyn.pitch_mode = corpus::PitchMode::MidiNumber;
          else if (v == "pitch_class") c.dyn.pitch_mode = corpus::PitchMode::PitchClass;
          else throw Error(Errc::BadValue, "symbolize.pitch_mode: expected midi_number or pitch_class, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.dyn.pitch_mode == corpus::PitchMode::MidiNumber ? "midi_number" : "pitch_class");
        }};
    t["symbolize.bins_per_octave"] = {
        [](RunConfig& c, const std::string& v) {
          c.dyn.bins_per_octave = static_cast<int>(integer("symbolize.bins_per_octave", v, 1));
        },
        [](const RunConfig& c) { return std::to_string(c.dyn.bins_per_octave); }};
    t["symbolize.rhythm_clamp"] = {
        [](RunConfig& c, const std::string& v) { c.dyn.rhythm_clamp = static_cast<int>(integer("symbolize.rhythm_clamp", v, 0)); },
        [](const RunConfig& c) { return std::to_string(c.dyn.rhythm_clamp); }};

    t["dynamics.zscore_rows"] = {[](RunConfig& c, const std::string& v) { c.zscore_rows = boolean("dynamics.zscore_rows", v); },
                                 [bl](const RunConfig& c) { return bl(c.zscore_rows); }};
    t["dynamics.write_snapshots"] = {
        [](RunConfig& c, const std::string& v) { c.write_snapshots = boolean("dynamics.write_snapshots", v); },
        [bl](const RunConfig& c) { return bl(c.write_snapshots); }};

    t["embed.domains"] = {[](RunConfig& c, const std::string& v) {
                            std::vector<D> out;
                            for (const auto& x : split_list(v))
                              out.push_back(rethrow_as<D>("embed.domains", [&] { return corpus::domain_from_string(x); }));
                            if (out.empty()) throw Error(Errc::BadValue, "embed.domains: empty list");
                            c.embed_domains = out;
                          },
                          [](const RunConfig& c) {
                            std::vector<std::string> v;
                            for (D d : c.embed_domains) v.push_back(corpus::to_string(d));
                            return join(v);
                          }};
    t["embed.measures"] = {[](RunConfig& c, const std::string& v) {
                             std::vector<M> out;
                             for (const auto& x : split_list(v))
                               out.push_back(rethrow_as<M>("embed.measures", [&] { return dynamics::measure_from_string(x); }));
                             if (out.empty()) throw Error(Errc::BadValue, "embed.measures: empty list");
                             c.embed_measures = out;
                           },
                           [](const RunConfig& c) {
                             std::vector<std::string> v;
                             for (M m : c.embed_measures) v.push_back(dynamics::to_string(m));
                             return join(v);
                           }};

    t["tsne.perplexity"] = {[](RunConfig& c, const std::string& v) { c.tsne.perplexity = positive("tsne.perplexity", v); },
                            [num](const RunConfig& c) { return num(c.tsne.perplexity); }};
    t["tsne.early_exaggeration"] = {
        [](RunConfig& c, const std::string& v) { c.tsne.early_exaggeration = positive("tsne.early_exaggeration", v); },
        [num](const RunConfig& c) { return num(c.tsne.early_exaggeration); }};
    t["tsne.seed"] = {[](RunConfig& c, const std::string& v) {
                        c.tsne.seed = static_cast<std::uint64_t>(integer("tsne.seed", v, 0));
                      },
                      [](const RunConfig& c) { return std::to_string(c.tsne.seed); }};
    t["tsne.iterations"] = {
        [](RunConfig& c, const std::string& v) { c.tsne.iterations = static_cast<int>(integer("tsne.iterations", v, 1)); },
        [](const RunConfig& c) { return std::to_string(c.tsne.iterations); }};
    t["tsne.exaggeration_iters"] = {
        [](RunConfig& c, const std::string& v) {
          c.tsne.exaggeration_iters = static_cast<int>(integer("tsne.exaggeration_iters", v, 0));
        },
        [](const RunConfig& c) { return std::to_string(c.tsne.exaggeration_iters); }};
    t["tsne.learning_rate"] = {
        [](RunConfig& c, const std::string& v) { c.tsne.learning_rate = positive("tsne.learning_rate", v); },
        [num](const RunConfig& c) { return num(c.tsne.learning_rate); }};
    t["tsne.momentum_switch"] = {
        [](RunConfig& c, const std::string& v) {
          c.tsne.momentum_switch = static_cast<int>(integer("tsne.momentum_switch", v, 0));
        },
        [](const RunConfig& c) { return std::to_string(c.tsne.momentum_switch); }};

    t["acoustics.sample_rate"] = {
        [](RunConfig& c, const std::string& v) { c.sample_rate = positive("acoustics.sample_rate", v); },
        [num](const RunConfig& c) { return num(c.sample_rate); }};
    t["acoustics.cutoff"] = {[](RunConfig& c, const std::string& v) { c.demod.cutoff = positive("acoustics.cutoff", v); },
                             [num](const RunConfig& c) { return num(c.demod.cutoff); }};
    t["acoustics.iterations"] = {
        [](RunConfig& c, const std::string& v) { c.demod.iterations = static_cast<int>(integer("acoustics.iterations", v, 0)); },
        [](const RunConfig& c) { return std::to_string(c.demod.iterations); }};
    t["acoustics.frame_rate"] = {
        [](RunConfig& c, const std::string& v) { c.frame_rate = positive("acoustics.frame_rate", v); },
        [num](const RunConfig& c) { return num(c.frame_rate); }};
    t["acoustics.prominence"] = {
        [](RunConfig& c, const std::string& v) {
          c.prominence = real("acoustics.prominence", v);
          if (!(c.prominence >= 0.0 && c.prominence < 1.0))
            throw Error(Errc::BadValue, "acoustics.prominence: must be in [0, 1), got " + v);
        },
        [num](const RunConfig& c) { return num(c.prominence); }};
    t["acoustics.bands"] = {
        [](RunConfig& c, const std::string& v) { c.scalo.bands = static_cast<int>(integer("acoustics.bands", v, 1)); },
        [](const RunConfig& c) { return std::to_string(c.scalo.bands); }};
    t["acoustics.f_min"] = {[](RunConfig& c, const std::string& v) { c.scalo.f_min = positive("acoustics.f_min", v); },
                            [num](const RunConfig& c) { return num(c.scalo.f_min); }};
    t["acoustics.f_max"] = {[](RunConfig& c, const std::string& v) { c.scalo.f_max = positive("acoustics.f_max", v); },
                            [num](const RunConfig& c) { return num(c.scalo.f_max); }};
    t["acoustics.write_scalograms"] = {
        [](RunConfig& c, const std::string& v) { c.write_scalograms = boolean("acoustics.write_scalograms", v); },
        [bl](const RunConfig& c) { return bl(c.write_scalograms); }};
    t["acoustics.write_wav"] = {[](RunConfig& c, const std::string& v) { c.write_wav = boolean("acoustics.write_wav", v); },
                                [bl](const RunConfig& c) { return bl(c.write_wav); }};

    t["report.group_keys"] = {[](RunConfig& c, const std::string& v) {
                                std::vector<dynamics::GroupKey> out;
                                for (const auto& x : split_list(v))
                                  out.push_back(rethrow_as<dynamics::GroupKey>(
                                      "report.group_keys", [&] { return dynamics::group_key_from_string(x); }));
                                if (out.empty()) throw Error(Errc::BadValue, "report.group_keys: empty list");
                                c.group_keys = out;
                              },
                              [](const RunConfig& c) {
                                std::vector<std::string> v;
                                for (auto k : c.group_keys) v.push_back(dynamics::to_string(k));
                                return join(v);
                              }};
    return t;
  }();
  return table;
}

}  // namespace config_detail

// Cross-field checks that single keys cannot express.
inline void check_consistency(const RunConfig& c) {
  if (c.manifest.empty()) throw Error(Errc::MissingRequired, "manifest: required key is missing");
  c.dyn.hbsl.validate();
  c.tsne.validate();
  if (!(c.sample_rate > 2.0 * c.demod.cutoff))
    throw Error(Errc::BadValue, "acoustics.cutoff: must be below half of acoustics.sample_rate");
  if (!(c.frame_rate > 2.0 * c.demod.cutoff))
    throw Error(Errc::BadValue, "acoustics.frame_rate: must exceed twice acoustics.cutoff");
  if (!(c.scalo.f_max > c.scalo.f_min)) throw Error(Errc::BadValue, "acoustics.f_max: must exceed acoustics.f_min");
  if (!(c.scalo.f_max <= c.frame_rate / 2.0))
    throw Error(Errc::BadValue, "acoustics.f_max: must not exceed half of acoustics.frame_rate");
}

// Parses `key = value` lines ('#' starts a comment). Relative paths resolve
// against `base_dir`. Every key is optional except manifest.
inline RunConfig parse_config(std::istream& in, const fs::path& base_dir = {}, bool check_paths = true) {
  RunConfig c;
  const auto& table = config_detail::keys();
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = corpus::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::BadValue, "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = corpus::trim(line.substr(0, eq));
    std::string value = corpus::trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    auto it = table.find(key);
    if (it == table.end()) throw Error(Errc::UnknownKey, key + ": unknown configuration key");
    if (!seen.insert(key).second) throw Error(Errc::BadValue, key + ": given more than once");
    if (value.empty()) throw Error(Errc::BadValue, key + ": empty value");
    it->second.set(c, value);
  }
  if (!c.manifest.empty() && c.manifest.is_relative() && !base_dir.empty()) c.manifest = base_dir / c.manifest;
  if (c.out_dir.is_relative() && !base_dir.empty() && seen.count("out_dir")) c.out_dir = base_dir / c.out_dir;
  check_consistency(c);
  if (check_paths && !fs::is_regular_file(c.manifest))
    throw Error(Errc::BadValue, "manifest: file not found: " + c.manifest.string());
  return c;
}

inline RunConfig parse_config_string(const std::string& text, const fs::path& base_dir = {}, bool check_paths = true) {
  std::istringstream in(text);
  return parse_config(in, base_dir, check_paths);
}

inline RunConfig validate_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::Io, "cannot open config " + file.string());
  return parse_config(in, file.parent_path());
}

// Sorted key=value dump of every computation-relevant setting.
inline std::string canonical_config(const RunConfig& c, bool include_unhashed = false) {
  std::string s;
  for (const auto& [k, key] : config_detail::keys())
    if (key.hashed || include_unhashed) s += k + "=" + key.get(c) + "\n";
  return s;
}

inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char ch : canonical_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace jazzdyn::pipeline
