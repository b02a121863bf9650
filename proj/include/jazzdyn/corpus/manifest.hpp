#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jazzdyn/corpus/csv.hpp"
#include "jazzdyn/corpus/midi.hpp"
#include "jazzdyn/corpus/types.hpp"
#include "jazzdyn/error.hpp"

namespace jazzdyn::corpus {

// One manifest row: id,path,performer,year,style,instrument
struct ManifestEntry {
  std::string id;
  std::filesystem::path path;  // resolved against the manifest's directory
  std::string performer = "unknown";
  int year = 0;
  std::string style = "unknown";
  std::string instrument = "unknown";
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;
};

inline Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  Manifest m;
  std::string line;
  if (!std::getline(in, line)) return m;
  std::map<std::string, std::size_t> cols;
  {
    auto header = split_csv_line(line);
    for (std::size_t i = 0; i < header.size(); ++i) cols.emplace(trim(header[i]), i);
  }
  for (const char* name : {"id", "path"})
    if (!cols.count(name)) throw Error(Errc::MissingColumn, std::string("manifest column '") + name + "'");
  auto opt = [&](const char* name) -> std::optional<std::size_t> {
    auto it = cols.find(name);
    return it == cols.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  };
  const auto c_perf = opt("performer"), c_year = opt("year"), c_style = opt("style"),
             c_inst = opt("instrument");

  std::set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    auto field = [&](std::size_t c) { return c < f.size() ? trim(f[c]) : std::string(); };
    ManifestEntry e;
    e.id = field(cols["id"]);
    const std::string rel = field(cols["path"]);
    if (e.id.empty() || rel.empty()) {
      m.warnings.push_back("manifest row " + std::to_string(row) + " skipped (missing id or path)");
      continue;
    }
    if (!seen.insert(e.id).second) {
      m.warnings.push_back("manifest row " + std::to_string(row) + " skipped (duplicate id '" + e.id + "')");
      continue;
    }
    e.path = std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : base_dir / rel;
    if (c_perf && !field(*c_perf).empty()) e.performer = field(*c_perf);
    long long y = 0;
    if (c_year && parse_int(field(*c_year), y)) e.year = static_cast<int>(y);
    if (c_style) e.style = canonical_style(field(*c_style));
    if (c_inst) e.instrument = canonical_instrument(field(*c_inst));
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct LoadedPiece {
  Piece piece;
  std::vector<std::string> warnings;
};

// Loads the file behind a manifest entry (.mid/.midi or per-note .csv) and
// binds the manifest metadata. File-embedded metadata is not trusted.
inline LoadedPiece load_piece(const ManifestEntry& entry, const CsvSchema& schema = {}) {
  LoadedPiece out;
  std::string ext = entry.path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".csv") {
    std::ifstream in(entry.path);
    if (!in) throw Error(Errc::Io, "cannot open " + entry.path.string());
    auto parsed = parse_corpus_csv(in, schema, entry.id);
    out.piece = std::move(parsed.piece);
    out.warnings = std::move(parsed.warnings);
  } else {
    out.piece = parse_midi(read_bytes(entry.path));
  }
  // Manifest values win; per-note CSV metadata only fills gaps.
  out.piece.id = entry.id;
  if (entry.performer != "unknown") out.piece.performer = entry.performer;
  if (entry.year != 0) out.piece.set_year(entry.year);
  if (entry.style != "unknown") out.piece.style = entry.style;
  if (entry.instrument != "unknown") out.piece.instrument = entry.instrument;
  if (out.piece.events.empty()) throw Error(Errc::EmptyPiece, "no note events in " + entry.path.string());
  return out;
}

}  // namespace jazzdyn::corpus
