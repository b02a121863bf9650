#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace jazzdyn::corpus {

struct NoteEvent {
  double onset = 0.0;     // seconds
  double duration = 0.0;  // seconds, > 0
  int pitch = 60;         // MIDI note number, 0..127
  int velocity = 64;

  friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

// Canonical event order: onset, then pitch ascending.
inline bool event_less(const NoteEvent& a, const NoteEvent& b) {
  if (a.onset != b.onset) return a.onset < b.onset;
  if (a.pitch != b.pitch) return a.pitch < b.pitch;
  if (a.duration != b.duration) return a.duration < b.duration;
  return a.velocity < b.velocity;
}

inline void sort_events(std::vector<NoteEvent>& events) {
  std::stable_sort(events.begin(), events.end(), event_less);
}

inline int decade_of(int year) {
  int r = year % 10;
  if (r < 0) r += 10;
  return year - r;
}

struct Piece {
  std::string id;
  std::string performer = "unknown";
  int year = 0;
  int decade = 0;
  std::string style = "unknown";
  std::string instrument = "unknown";
  std::vector<NoteEvent> events;

  void set_year(int y) {
    year = y;
    decade = decade_of(y);
  }

  friend bool operator==(const Piece&, const Piece&) = default;
};

namespace detail {

inline std::string normalize_key(std::string_view s) {
  std::string out;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

struct Alias {
  std::string_view key;
  std::string_view canonical;
};

}  // namespace detail

inline constexpr std::array<std::string_view, 8> kStyles = {
    "bebop", "cool", "free", "fusion", "hardbop", "postbop", "swing", "traditional"};

inline constexpr std::array<std::string_view, 13> kInstruments = {
    "alto saxophone", "bass clarinet",    "baritone saxophone", "clarinet", "cornet",
    "guitar",         "piano",            "soprano saxophone",  "trombone", "trumpet",
    "tenor saxophone", "c melody tenor saxophone", "vibraphone"};

// Maps free-form style labels onto the eight corpus styles, else "unknown".
inline std::string canonical_style(std::string_view raw) {
  const std::string k = detail::normalize_key(raw);
  for (auto s : kStyles)
    if (k == detail::normalize_key(s)) return std::string(s);
  static constexpr std::array<detail::Alias, 3> aliases = {{
      {"hardbebop", "hardbop"}, {"trad", "traditional"}, {"neworleans", "traditional"}}};
  for (const auto& a : aliases)
    if (k == a.key) return std::string(a.canonical);
  return "unknown";
}

// Accepts full names and the usual two/three letter abbreviations.
inline std::string canonical_instrument(std::string_view raw) {
  const std::string k = detail::normalize_key(raw);
  for (auto s : kInstruments)
    if (k == detail::normalize_key(s)) return std::string(s);
  static constexpr std::array<detail::Alias, 20> aliases = {{
      {"as", "alto saxophone"},        {"altosax", "alto saxophone"},
      {"bcl", "bass clarinet"},        {"bassclarinette", "bass clarinet"},
      {"bs", "baritone saxophone"},    {"barisax", "baritone saxophone"},
      {"cl", "clarinet"},              {"cor", "cornet"},
      {"g", "guitar"},                 {"p", "piano"},
      {"ss", "soprano saxophone"},     {"sopranosax", "soprano saxophone"},
      {"tb", "trombone"},              {"tp", "trumpet"},
      {"ts", "tenor saxophone"},       {"tenorsax", "tenor saxophone"},
      {"ts-c", "c melody tenor saxophone"}, {"tsc", "c melody tenor saxophone"},
      {"cmelodytenorsax", "c melody tenor saxophone"}, {"vib", "vibraphone"}}};
  for (const auto& a : aliases)
    if (k == detail::normalize_key(a.key)) return std::string(a.canonical);
  return "unknown";
}

}  // namespace jazzdyn::corpus
