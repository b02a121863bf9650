#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "jazzdyn/corpus/csv.hpp"
#include "jazzdyn/corpus/midi.hpp"
#include "jazzdyn/corpus/types.hpp"
#include "jazzdyn/embedding/rng.hpp"
#include "jazzdyn/error.hpp"

namespace jazzdyn::pipeline {

// Synthetic solo corpus: two era generators that differ only in their pitch
// transition structure and share one rhythm generator.
struct ToyCorpusSpec {
  int pieces = 3;
  int notes = 120;
  std::uint64_t seed = 7;
  int corrupt_index = -1;  // this piece's MIDI file is truncated on disk
};

namespace toy_detail {

struct Era {
  const char* style;
  int first_year;
  std::vector<int> scale;
  std::vector<int> moves;  // scale-degree steps, drawn uniformly
  std::array<const char*, 3> performers;
  std::array<const char*, 2> instruments;
};

inline const std::array<Era, 2>& eras() {
  static const std::array<Era, 2> e = {{
      {"bebop", 1950, {60, 62, 64, 65, 67, 69, 71, 72}, {-1, -1, 1, 1, 0, 2, -2}, {"Parker", "Gillespie", "Navarro"},
       {"alto saxophone", "trumpet"}},
      {"fusion", 1970, {48, 50, 52, 55, 57, 60, 62, 64, 67, 69, 72, 74, 76, 79, 81},
       {-4, -3, 3, 4, -5, 5, 2, -2}, {"Brecker", "Shorter", "Hubbard"}, {"tenor saxophone", "soprano saxophone"}},
  }};
  return e;
}

}  // namespace toy_detail

inline int toy_era(int index) { return index % 2; }

inline corpus::Piece toy_piece(int index, const ToyCorpusSpec& spec) {
  const auto& era = toy_detail::eras()[static_cast<std::size_t>(toy_era(index))];
  embedding::GaussianSource rng(spec.seed * 1000003ULL + static_cast<std::uint64_t>(index));
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n; };

  corpus::Piece p;
  char id[32];
  std::snprintf(id, sizeof id, "toy_%03d", index + 1);
  p.id = id;
  p.performer = era.performers[pick(era.performers.size())];
  p.set_year(era.first_year + static_cast<int>(pick(10)));
  p.style = era.style;
  p.instrument = era.instruments[pick(era.instruments.size())];

  // shared rhythm: straight eighths mostly, some quarters, some swung pairs
  const double beat = 60.0 / (130.0 + 50.0 * rng.uniform());
  std::vector<double> iois;
  while (static_cast<int>(iois.size()) < spec.notes) {
    const double u = rng.uniform();
    if (u < 0.6) {
      iois.push_back(0.5 * beat);
    } else if (u < 0.8) {
      iois.push_back(beat);
    } else {
      iois.push_back(2.0 * beat / 3.0);
      iois.push_back(beat / 3.0);
    }
  }
  iois.resize(static_cast<std::size_t>(spec.notes));

  int degree = static_cast<int>(era.scale.size() / 2);
  double t = 0.25;
  for (double ioi : iois) {
    p.events.push_back({t, 0.7 * ioi, era.scale[static_cast<std::size_t>(degree)], 70 + static_cast<int>(pick(30))});
    degree += era.moves[pick(era.moves.size())];
    const int top = static_cast<int>(era.scale.size()) - 1;
    if (degree < 0) degree = -degree;
    if (degree > top) degree = 2 * top - degree;
    degree = std::clamp(degree, 0, top);
    t += ioi;
  }
  return p;
}

inline std::vector<corpus::Piece> toy_pieces(const ToyCorpusSpec& spec) {
  std::vector<corpus::Piece> out;
  for (int i = 0; i < spec.pieces; ++i) out.push_back(toy_piece(i, spec));
  return out;
}

// Writes <dir>/midi/*.mid, <dir>/manifest.csv and <dir>/config.txt; returns the manifest path.
inline std::filesystem::path write_toy_corpus(const std::filesystem::path& dir, const ToyCorpusSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "midi");
  std::ofstream man(dir / "manifest.csv", std::ios::binary);
  if (!man) throw Error(Errc::Io, "cannot write " + (dir / "manifest.csv").string());
  man << "id,path,performer,year,style,instrument\n";
  for (int i = 0; i < spec.pieces; ++i) {
    const auto p = toy_piece(i, spec);
    auto bytes = corpus::encode_midi(p);
    if (i == spec.corrupt_index) bytes.resize(std::min<std::size_t>(bytes.size(), 40));
    const fs::path rel = fs::path("midi") / (p.id + ".mid");
    std::ofstream f(dir / rel, std::ios::binary);
    if (!f) throw Error(Errc::Io, "cannot write " + (dir / rel).string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    man << p.id << ',' << rel.generic_string() << ',' << corpus::csv_quote(p.performer) << ',' << p.year << ','
        << p.style << ',' << corpus::csv_quote(p.instrument) << '\n';
  }
  std::ofstream cfg(dir / "config.txt", std::ios::binary);
  cfg << "# toy corpus run\nmanifest = manifest.csv\n";
  return dir / "manifest.csv";
}

}  // namespace jazzdyn::pipeline
