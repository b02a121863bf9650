#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "jazzdyn/corpus/csv.hpp"
#include "jazzdyn/corpus/symbolize.hpp"
#include "jazzdyn/corpus/types.hpp"
#include "jazzdyn/error.hpp"
#include "jazzdyn/format.hpp"
#include "jazzdyn/hbsl/model.hpp"

namespace jazzdyn::dynamics {

using corpus::Domain;

enum class Measure { Surprise, BayesianSurprise, Entropy };

inline constexpr std::array<Measure, 3> kMeasures = {Measure::Surprise, Measure::BayesianSurprise,
                                                     Measure::Entropy};

inline std::string to_string(Measure m) {
  switch (m) {
    case Measure::Surprise: return "surprise";
    case Measure::BayesianSurprise: return "bayesian_surprise";
    case Measure::Entropy: return "entropy";
  }
  return "?";
}

inline Measure measure_from_string(const std::string& s) {
  if (s == "surprise") return Measure::Surprise;
  if (s == "bayesian_surprise") return Measure::BayesianSurprise;
  if (s == "entropy") return Measure::Entropy;
  throw Error(Errc::BadValue, "unknown measure '" + s + "'");
}

struct DynamicsSeries {
  std::string piece_id;
  Domain domain = Domain::Pitch;
  Measure measure = Measure::Surprise;
  std::vector<double> values;  // bits, one per level-0 event
  int alphabet_size = 0;
};

struct RowMetadata {
  std::string piece_id;
  std::string performer = "unknown";
  int year = 0;
  int decade = 0;
  std::string style = "unknown";
  std::string instrument = "unknown";

  static RowMetadata of(const corpus::Piece& p) {
    return {p.id, p.performer, p.year, p.decade, p.style, p.instrument};
  }
};

enum class GroupKey { Decade, Style, Instrument, Performer };

inline constexpr std::array<GroupKey, 4> kGroupKeys = {GroupKey::Decade, GroupKey::Style, GroupKey::Instrument,
                                                       GroupKey::Performer};

inline std::string to_string(GroupKey k) {
  switch (k) {
    case GroupKey::Decade: return "decade";
    case GroupKey::Style: return "style";
    case GroupKey::Instrument: return "instrument";
    case GroupKey::Performer: return "performer";
  }
  return "?";
}

inline GroupKey group_key_from_string(const std::string& s) {
  for (auto k : kGroupKeys)
    if (to_string(k) == s) return k;
  throw Error(Errc::BadValue, "group_key '" + s + "' is not one of decade, style, instrument, performer");
}

inline std::string group_label(const RowMetadata& m, GroupKey k) {
  switch (k) {
    case GroupKey::Decade: return std::to_string(m.decade);
    case GroupKey::Style: return m.style;
    case GroupKey::Instrument: return m.instrument;
    case GroupKey::Performer: return m.performer;
  }
  return "";
}

struct PieceDynamics {
  RowMetadata meta;
  std::vector<DynamicsSeries> series;  // 3 domains x 3 measures

  const DynamicsSeries* find(Domain d, Measure m) const {
    for (const auto& s : series)
      if (s.domain == d && s.measure == m) return &s;
    return nullptr;
  }
};

struct DynamicsConfig {
  hbsl::HbslConfig hbsl;
  corpus::PitchMode pitch_mode = corpus::PitchMode::MidiNumber;
  int bins_per_octave = 4;
  int rhythm_clamp = 8;
};

// Linear interpolation onto target_len evenly spaced positions; endpoints are kept exactly.
inline std::vector<double> interpolate_series(const std::vector<double>& values, std::size_t target_len) {
  if (values.empty()) throw Error(Errc::EmptyInput, "cannot interpolate an empty series");
  if (target_len == 0) throw Error(Errc::BadValue, "target length must be >= 1");
  const std::size_t n = values.size();
  std::vector<double> out(target_len);
  if (target_len == 1 || n == 1) {
    std::fill(out.begin(), out.end(), values[0]);
    return out;
  }
  for (std::size_t j = 0; j < target_len; ++j) {
    const double x = static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
    const auto i = std::min(static_cast<std::size_t>(x), n - 1);
    if (i + 1 >= n) {
      out[j] = values[n - 1];
      continue;
    }
    const double f = x - static_cast<double>(i);
    const double a = values[i], b = values[i + 1];
    out[j] = std::clamp(a + f * (b - a), std::min(a, b), std::max(a, b));
  }
  return out;
}

inline std::vector<DynamicsSeries> series_from(const hbsl::HierarchyResult& res, const corpus::SymbolSequence& seq) {
  std::vector<DynamicsSeries> out;
  for (Measure m : kMeasures) {
    DynamicsSeries s{seq.piece_id, seq.domain, m, {}, seq.alphabet_size()};
    s.values.reserve(res.dynamics.size());
    for (const auto& r : res.dynamics)
      s.values.push_back(m == Measure::Surprise           ? r.surprise_bits
                         : m == Measure::BayesianSurprise ? r.bayesian_surprise_bits
                                                          : r.entropy_bits);
    out.push_back(std::move(s));
  }
  return out;
}

struct DomainSequences {
  corpus::SymbolSequence pitch, rhythm, joint;

  const corpus::SymbolSequence& get(Domain d) const {
    return d == Domain::Pitch ? pitch : d == Domain::Rhythm ? rhythm : joint;
  }
};

inline DomainSequences symbolize_all(const corpus::Piece& piece, const DynamicsConfig& cfg) {
  DomainSequences s;
  s.pitch = corpus::symbolize_pitch(piece, cfg.pitch_mode);
  s.rhythm = corpus::symbolize_rhythm(piece, cfg.bins_per_octave, cfg.rhythm_clamp);
  s.joint = corpus::symbolize_joint(s.pitch, s.rhythm);
  return s;
}

// Fresh model per domain, flat prior: within-piece learning curves.
inline PieceDynamics per_piece_dynamics(const corpus::Piece& piece, const DynamicsConfig& cfg = {}) {
  if (piece.events.size() < 2)
    throw Error(Errc::TooFewEvents, "piece '" + piece.id + "' needs at least 2 events");
  const auto seqs = symbolize_all(piece, cfg);
  PieceDynamics out{RowMetadata::of(piece), {}};
  for (Domain d : corpus::kDomains) {
    const auto& seq = seqs.get(d);
    auto res = hbsl::learn_hierarchy(seq, cfg.hbsl);
    auto s = series_from(res, seq);
    out.series.insert(out.series.end(), s.begin(), s.end());
  }
  return out;
}

struct FeatureMatrix {
  Domain domain = Domain::Pitch;
  Measure measure = Measure::Surprise;
  std::size_t row_length = 0;
  std::vector<std::vector<double>> rows;
  std::vector<RowMetadata> metadata;
};

inline FeatureMatrix build_feature_matrix(const std::vector<PieceDynamics>& corpus_dynamics, Domain domain,
                                          Measure measure, bool zscore_rows = false) {
  std::vector<std::pair<const RowMetadata*, const DynamicsSeries*>> picked;
  for (const auto& pd : corpus_dynamics)
    if (const auto* s = pd.find(domain, measure); s && !s->values.empty()) picked.emplace_back(&pd.meta, s);
  if (picked.size() < 2)
    throw Error(Errc::InsufficientPieces, std::to_string(picked.size()) + " piece(s) selected for " +
                                              corpus::to_string(domain) + "/" + to_string(measure));
  std::sort(picked.begin(), picked.end(),
            [](const auto& a, const auto& b) { return a.first->piece_id < b.first->piece_id; });

  FeatureMatrix fm;
  fm.domain = domain;
  fm.measure = measure;
  for (const auto& [meta, s] : picked) fm.row_length = std::max(fm.row_length, s->values.size());
  for (const auto& [meta, s] : picked) {
    auto row = interpolate_series(s->values, fm.row_length);
    if (zscore_rows) {
      double mean = 0, var = 0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(row.size());
      for (double v : row) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(row.size()));
      for (double& v : row) v = sd > 0 ? (v - mean) / sd : 0.0;
    }
    fm.rows.push_back(std::move(row));
    fm.metadata.push_back(*meta);
  }
  return fm;
}

// Level-0 counts keyed by labels, accumulated across pieces.
using LabelCounts = std::map<std::pair<std::vector<std::string>, std::string>, double>;

namespace detail {

// Orders labels like "62", "-4" or "62|-4" numerically field by field.
inline bool label_less(const std::string& a, const std::string& b) {
  auto fields = [](const std::string& s) {
    std::vector<long long> v;
    std::size_t start = 0;
    while (true) {
      auto bar = s.find('|', start);
      long long x = 0;
      parse_int(s.substr(start, bar == std::string::npos ? std::string::npos : bar - start), x);
      v.push_back(x);
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    return v;
  };
  auto fa = fields(a), fb = fields(b);
  if (fa != fb) return fa < fb;
  return a < b;
}

inline corpus::SymbolSequence reencode(const corpus::SymbolSequence& seq, const std::vector<std::string>& alphabet,
                                       const std::map<std::string, int>& ids) {
  corpus::SymbolSequence out = seq;
  out.alphabet = alphabet;
  for (auto& s : out.symbols) s = ids.at(seq.alphabet[s]);
  return out;
}

}  // namespace detail

// Corpus-primed mode: pieces share one alphabet per domain and each piece starts
// from the level-0 counts of all pieces performed in strictly earlier years.
inline std::vector<PieceDynamics> corpus_primed_dynamics(const std::vector<corpus::Piece>& pieces,
                                                         const DynamicsConfig& cfg = {}) {
  std::vector<const corpus::Piece*> order;
  for (const auto& p : pieces) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->year != b->year ? a->year < b->year : a->id < b->id;
  });

  std::vector<DomainSequences> seqs;
  for (const auto* p : order) seqs.push_back(symbolize_all(*p, cfg));

  std::vector<PieceDynamics> out;
  for (const auto* p : order) out.push_back({RowMetadata::of(*p), {}});

  for (Domain d : corpus::kDomains) {
    std::vector<std::string> alphabet;
    for (const auto& s : seqs) alphabet.insert(alphabet.end(), s.get(d).alphabet.begin(), s.get(d).alphabet.end());
    std::sort(alphabet.begin(), alphabet.end(), detail::label_less);
    alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
    std::map<std::string, int> ids;
    for (std::size_t i = 0; i < alphabet.size(); ++i) ids[alphabet[i]] = static_cast<int>(i);

    LabelCounts accumulated, pending;
    int pending_year = order.empty() ? 0 : order.front()->year;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i]->year != pending_year) {
        for (const auto& [k, v] : pending) accumulated[k] += v;
        pending.clear();
        pending_year = order[i]->year;
      }
      const auto seq = detail::reencode(seqs[i].get(d), alphabet, ids);
      hbsl::HbslModel model(static_cast<int>(alphabet.size()), cfg.hbsl);
      for (const auto& [key, w] : accumulated) {
        hbsl::Context ctx;
        for (const auto& lab : key.first) ctx.push_back(lab == "START" ? hbsl::kStart : ids.at(lab));
        model.prime(ctx, ids.at(key.second), w);
      }
      hbsl::HierarchyResult res{std::move(model), {}, {}};
      for (int s : seq.symbols) res.dynamics.push_back(res.model.observe(s));
      res.model.finish();

      hbsl::Context ctx(static_cast<std::size_t>(cfg.hbsl.order), hbsl::kStart);
      for (int s : seq.symbols) {
        std::vector<std::string> key;
        for (int c : ctx) key.push_back(c == hbsl::kStart ? "START" : alphabet[c]);
        pending[{key, alphabet[s]}] += 1.0;
        ctx.erase(ctx.begin());
        ctx.push_back(s);
      }
      auto s = series_from(res, seq);
      out[i].series.insert(out[i].series.end(), s.begin(), s.end());
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.meta.piece_id < b.meta.piece_id; });
  return out;
}

inline void write_dynamics_csv(std::ostream& out, const std::vector<const DynamicsSeries*>& series) {
  out << "piece_id,domain,measure,event_index,value\n";
  for (const auto* s : series)
    for (std::size_t i = 0; i < s->values.size(); ++i)
      out << corpus::csv_quote(s->piece_id) << ',' << corpus::to_string(s->domain) << ',' << to_string(s->measure)
          << ',' << i << ',' << fmt9(s->values[i]) << '\n';
}

inline void write_feature_matrix_csv(std::ostream& out, const FeatureMatrix& fm) {
  out << "piece_id,performer,year,decade,style,instrument";
  for (std::size_t j = 0; j < fm.row_length; ++j) out << ",t" << j;
  out << '\n';
  for (std::size_t r = 0; r < fm.rows.size(); ++r) {
    const auto& m = fm.metadata[r];
    out << corpus::csv_quote(m.piece_id) << ',' << corpus::csv_quote(m.performer) << ',' << m.year << ','
        << m.decade << ',' << corpus::csv_quote(m.style) << ',' << corpus::csv_quote(m.instrument);
    for (double v : fm.rows[r]) out << ',' << fmt9(v);
    out << '\n';
  }
}

}  // namespace jazzdyn::dynamics
