#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "jazzdyn/corpus/types.hpp"
#include "jazzdyn/error.hpp"

namespace jazzdyn::corpus {

enum class Domain { Pitch, Rhythm, PitchRhythm };

inline constexpr std::array<Domain, 3> kDomains = {Domain::Pitch, Domain::Rhythm, Domain::PitchRhythm};

inline std::string to_string(Domain d) {
  switch (d) {
    case Domain::Pitch: return "pitch";
    case Domain::Rhythm: return "rhythm";
    case Domain::PitchRhythm: return "pitch_rhythm";
  }
  return "?";
}

inline Domain domain_from_string(const std::string& s) {
  if (s == "pitch") return Domain::Pitch;
  if (s == "rhythm") return Domain::Rhythm;
  if (s == "pitch_rhythm") return Domain::PitchRhythm;
  throw Error(Errc::BadValue, "unknown domain '" + s + "'");
}

enum class PitchMode { MidiNumber, PitchClass };

// Onsets closer than this are one rhythmic event.
inline constexpr double kOnsetMergeSec = 1e-3;

struct SymbolSequence {
  std::string piece_id;
  Domain domain = Domain::Pitch;
  std::vector<int> symbols;
  std::vector<std::string> alphabet;  // id -> label; labels unique
  // Pitch domain only: onset group of each symbol (chords share a group).
  std::vector<int> onset_group;

  int alphabet_size() const { return static_cast<int>(alphabet.size()); }
};

namespace detail {

// Assigns ids in ascending key order so ids are independent of first appearance.
template <typename Key, typename LabelFn>
SymbolSequence encode(const std::vector<Key>& keys, LabelFn label) {
  std::map<Key, int> ids;
  for (const auto& k : keys) ids.emplace(k, 0);
  SymbolSequence seq;
  int next = 0;
  for (auto& [k, id] : ids) {
    id = next++;
    seq.alphabet.push_back(label(k));
  }
  seq.symbols.reserve(keys.size());
  for (const auto& k : keys) seq.symbols.push_back(ids.at(k));
  return seq;
}

// Onset groups: events whose onsets lie within kOnsetMergeSec of the group's first onset.
inline std::vector<int> onset_groups(const std::vector<NoteEvent>& events, std::vector<double>* group_onsets) {
  std::vector<int> group(events.size());
  double start = 0;
  int g = -1;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (g < 0 || events[i].onset - start > kOnsetMergeSec) {
      ++g;
      start = events[i].onset;
      if (group_onsets) group_onsets->push_back(start);
    }
    group[i] = g;
  }
  return group;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline SymbolSequence symbolize_pitch(const Piece& piece, PitchMode mode = PitchMode::MidiNumber) {
  if (piece.events.empty()) throw Error(Errc::EmptyPiece, "piece '" + piece.id + "' has no events");
  std::vector<int> keys;
  keys.reserve(piece.events.size());
  for (const auto& e : piece.events) keys.push_back(mode == PitchMode::PitchClass ? e.pitch % 12 : e.pitch);
  auto seq = detail::encode(keys, [](int k) { return std::to_string(k); });
  seq.piece_id = piece.id;
  seq.domain = Domain::Pitch;
  seq.onset_group = detail::onset_groups(piece.events, nullptr);
  return seq;
}

// Log-ratio IOI bins relative to the piece's median IOI; tempo invariant.
inline SymbolSequence symbolize_rhythm(const Piece& piece, int bins_per_octave = 4, int clamp = 8) {
  std::vector<double> onsets;
  detail::onset_groups(piece.events, &onsets);
  if (onsets.size() < 2)
    throw Error(Errc::TooFewEvents, "piece '" + piece.id + "' has fewer than 2 distinct onsets");
  std::vector<double> ioi(onsets.size() - 1);
  for (std::size_t i = 0; i + 1 < onsets.size(); ++i) ioi[i] = onsets[i + 1] - onsets[i];
  const double med = detail::median(ioi);
  std::vector<int> keys;
  keys.reserve(ioi.size());
  for (double d : ioi) {
    const long bin = std::lround(bins_per_octave * std::log2(d / med));
    keys.push_back(static_cast<int>(std::clamp<long>(bin, -clamp, clamp)));
  }
  auto seq = detail::encode(keys, [](int k) { return std::to_string(k); });
  seq.piece_id = piece.id;
  seq.domain = Domain::Rhythm;
  return seq;
}

// Pairs IOI i with the pitch that ends it (the top note of onset group i+1).
inline SymbolSequence symbolize_joint(const SymbolSequence& pitch, const SymbolSequence& rhythm) {
  if (pitch.piece_id != rhythm.piece_id)
    throw Error(Errc::PieceMismatch, "'" + pitch.piece_id + "' vs '" + rhythm.piece_id + "'");
  if (pitch.domain != Domain::Pitch || rhythm.domain != Domain::Rhythm)
    throw Error(Errc::PieceMismatch, "expected a pitch and a rhythm sequence");

  std::vector<int> group = pitch.onset_group;
  if (group.empty()) {
    group.resize(pitch.symbols.size());
    for (std::size_t i = 0; i < group.size(); ++i) group[i] = static_cast<int>(i);
  }
  const int ngroups = group.empty() ? 0 : group.back() + 1;
  if (ngroups != static_cast<int>(rhythm.symbols.size()) + 1)
    throw Error(Errc::PieceMismatch, "pitch onset groups do not match rhythm length");
  std::vector<int> top(ngroups, -1);
  for (std::size_t i = 0; i < pitch.symbols.size(); ++i) top[group[i]] = pitch.symbols[i];

  std::vector<std::pair<int, int>> keys;
  keys.reserve(rhythm.symbols.size());
  for (std::size_t i = 0; i < rhythm.symbols.size(); ++i) keys.emplace_back(top[i + 1], rhythm.symbols[i]);
  auto seq = detail::encode(keys, [&](const std::pair<int, int>& k) {
    return pitch.alphabet[k.first] + "|" + rhythm.alphabet[k.second];
  });
  seq.piece_id = pitch.piece_id;
  seq.domain = Domain::PitchRhythm;
  return seq;
}

inline nlohmann::json to_json(const SymbolSequence& s) {
  return nlohmann::json{{"piece_id", s.piece_id},
                        {"domain", to_string(s.domain)},
                        {"K", s.alphabet_size()},
                        {"alphabet", s.alphabet},
                        {"symbols", s.symbols}};
}

}  // namespace jazzdyn::corpus
