#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "jazzdyn/corpus/types.hpp"
#include "jazzdyn/error.hpp"
#include "jazzdyn/format.hpp"

namespace jazzdyn::corpus {

// RFC-4180-ish field splitter: commas, double-quoted fields, "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

// Column names for the per-note CSV export. Empty metadata names disable the column.
struct CsvSchema {
  std::string onset = "onset";
  std::string duration = "duration";
  std::string pitch = "pitch";
  std::string velocity = "velocity";
  std::string performer = "performer";
  std::string year = "year";
  std::string style = "style";
  std::string instrument = "instrument";

  static CsvSchema canonical() {
    CsvSchema s;
    s.onset = "onset_sec";
    s.duration = "duration_sec";
    return s;
  }
};

struct CsvParseResult {
  Piece piece;
  std::vector<std::string> warnings;
};

inline CsvParseResult parse_corpus_csv(std::istream& in, const CsvSchema& schema = {},
                                       std::string piece_id = {}) {
  CsvParseResult result;
  result.piece.id = std::move(piece_id);

  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MissingColumn, "no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
    line.erase(0, 3);

  std::map<std::string, std::size_t> columns;
  {
    auto header = split_csv_line(line);
    for (std::size_t i = 0; i < header.size(); ++i) columns.emplace(trim(header[i]), i);
  }
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  };
  auto require = [&](const std::string& name) {
    auto c = find(name);
    if (!c) throw Error(Errc::MissingColumn, "column '" + name + "' not in header");
    return *c;
  };
  const std::size_t c_onset = require(schema.onset);
  const std::size_t c_dur = require(schema.duration);
  const std::size_t c_pitch = require(schema.pitch);
  const auto c_vel = find(schema.velocity);
  const auto c_perf = find(schema.performer);
  const auto c_year = find(schema.year);
  const auto c_style = find(schema.style);
  const auto c_inst = find(schema.instrument);

  bool have_meta = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    auto field = [&](std::size_t c) -> std::string_view {
      return c < f.size() ? std::string_view(f[c]) : std::string_view();
    };
    double onset = 0, dur = 0;
    long long pitch = 0, vel = 64;
    std::string why;
    if (!parse_double(field(c_onset), onset) || onset < 0) why = "bad onset";
    else if (!parse_double(field(c_dur), dur) || dur <= 0) why = "bad duration";
    else if (!parse_int(field(c_pitch), pitch) || pitch < 0 || pitch > 127) why = "bad pitch";
    else if (c_vel && !trim(field(*c_vel)).empty() &&
             (!parse_int(field(*c_vel), vel) || vel < 0 || vel > 127))
      why = "bad velocity";
    if (!why.empty()) {
      result.warnings.push_back(std::string(to_string(Errc::UnparsableRow)) + ": row " +
                                std::to_string(row) + " skipped (" + why + ")");
      continue;
    }
    result.piece.events.push_back({onset, dur, static_cast<int>(pitch), static_cast<int>(vel)});

    if (!have_meta) {
      have_meta = true;
      if (c_perf && !trim(field(*c_perf)).empty()) result.piece.performer = trim(field(*c_perf));
      long long y = 0;
      if (c_year && parse_int(field(*c_year), y)) result.piece.set_year(static_cast<int>(y));
      if (c_style) result.piece.style = canonical_style(field(*c_style));
      if (c_inst) result.piece.instrument = canonical_instrument(field(*c_inst));
    }
  }
  if (result.piece.events.empty()) {
    if (row == 0) throw Error(Errc::EmptyPiece, "no data rows");
    throw Error(Errc::UnparsableRow, "no parsable rows out of " + std::to_string(row));
  }
  sort_events(result.piece.events);
  return result;
}

inline CsvParseResult parse_corpus_csv_string(const std::string& text, const CsvSchema& schema = {},
                                              std::string piece_id = {}) {
  std::istringstream in(text);
  return parse_corpus_csv(in, schema, std::move(piece_id));
}

// Canonical piece CSV: onset_sec,duration_sec,pitch,velocity.
inline void write_piece_csv(std::ostream& out, const Piece& piece) {
  out << "onset_sec,duration_sec,pitch,velocity\n";
  for (const auto& e : piece.events)
    out << fmt_exact(e.onset) << ',' << fmt_exact(e.duration) << ',' << e.pitch << ','
        << e.velocity << '\n';
}

inline std::string piece_csv_string(const Piece& piece) {
  std::ostringstream out;
  write_piece_csv(out, piece);
  return out.str();
}

}  // namespace jazzdyn::corpus
