#include <gtest/gtest.h>

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "jazzdyn/corpus/csv.hpp"
#include "jazzdyn/corpus/manifest.hpp"
#include "jazzdyn/corpus/midi.hpp"
#include "jazzdyn/corpus/symbolize.hpp"

using namespace jazzdyn;
using namespace jazzdyn::corpus;

namespace {

using Bytes = std::vector<std::uint8_t>;

Bytes header(std::uint16_t format, std::uint16_t ntracks, std::uint16_t division) {
  return {'M', 'T', 'h', 'd', 0, 0, 0, 6,
          static_cast<std::uint8_t>(format >> 8), static_cast<std::uint8_t>(format),
          static_cast<std::uint8_t>(ntracks >> 8), static_cast<std::uint8_t>(ntracks),
          static_cast<std::uint8_t>(division >> 8), static_cast<std::uint8_t>(division)};
}

Bytes track(const Bytes& body) {
  Bytes t = {'M', 'T', 'r', 'k', static_cast<std::uint8_t>(body.size() >> 24),
             static_cast<std::uint8_t>(body.size() >> 16), static_cast<std::uint8_t>(body.size() >> 8),
             static_cast<std::uint8_t>(body.size())};
  t.insert(t.end(), body.begin(), body.end());
  return t;
}

Bytes cat(Bytes a, const Bytes& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// C4 on at tick 0, off at tick 480 (delta 480 = 0x83 0x60), end of track.
const Bytes kC4Body = {0x00, 0x90, 60, 100, 0x83, 0x60, 0x80, 60, 0, 0x00, 0xFF, 0x2F, 0x00};

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::Io;
}

Piece piece_from(std::vector<std::pair<double, int>> onset_pitch, double dur = 0.1) {
  Piece p;
  p.id = "p";
  for (auto [o, pitch] : onset_pitch) p.events.push_back({o, dur, pitch, 64});
  sort_events(p.events);
  return p;
}

}  // namespace

TEST(ParseMidi, SingleNoteDefaultTempo) {
  auto piece = parse_midi(cat(header(0, 1, 480), track(kC4Body)));
  ASSERT_EQ(piece.events.size(), 1u);
  EXPECT_DOUBLE_EQ(piece.events[0].onset, 0.0);
  EXPECT_DOUBLE_EQ(piece.events[0].duration, 0.5);
  EXPECT_EQ(piece.events[0].pitch, 60);
  EXPECT_EQ(piece.events[0].velocity, 100);
}

TEST(ParseMidi, TempoMetaEventScalesDuration) {
  // 300000 us/quarter = 0x04 0x93 0xE0; 480 ticks at PPQ 480 is one quarter = 0.3 s.
  Bytes body = {0x00, 0xFF, 0x51, 0x03, 0x04, 0x93, 0xE0};
  body.insert(body.end(), kC4Body.begin(), kC4Body.end());
  auto piece = parse_midi(cat(header(0, 1, 480), track(body)));
  ASSERT_EQ(piece.events.size(), 1u);
  EXPECT_NEAR(piece.events[0].duration, 480.0 * 300000.0 / 480.0 / 1e6, 1e-15);
}

TEST(ParseMidi, TempoChangeMidNote) {
  // Tempo 500000 for the first 240 ticks, then 250000: 0.25 s + 0.125 s.
  Bytes body = {0x00, 0x90, 60, 100, 0x81, 0x70, 0xFF, 0x51, 0x03, 0x03, 0xD0, 0x90,
                0x81, 0x70, 0x80, 60, 0, 0x00, 0xFF, 0x2F, 0x00};
  auto piece = parse_midi(cat(header(0, 1, 480), track(body)));
  ASSERT_EQ(piece.events.size(), 1u);
  EXPECT_NEAR(piece.events[0].duration, 0.375, 1e-12);
}

TEST(ParseMidi, TruncatedTrackChunk) {
  Bytes file = cat(header(0, 1, 480), track(kC4Body));
  file.resize(file.size() - 4);
  EXPECT_EQ(code_of([&] { parse_midi(file); }), Errc::TruncatedTrack);
}

TEST(ParseMidi, TruncatedEventInsideTrack) {
  Bytes body = {0x00, 0x90, 60};  // note-on missing its velocity byte
  EXPECT_EQ(code_of([&] { parse_midi(cat(header(0, 1, 480), track(body))); }), Errc::TruncatedTrack);
}

TEST(ParseMidi, HeaderErrors) {
  Bytes bad_magic = cat(header(0, 1, 480), track(kC4Body));
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { parse_midi(bad_magic); }), Errc::MalformedHeader);
  EXPECT_EQ(code_of([&] { parse_midi(Bytes{'M', 'T', 'h'}); }), Errc::MalformedHeader);
  EXPECT_EQ(code_of([&] { parse_midi(cat(header(0, 1, 0xE728), track(kC4Body))); }),
            Errc::UnsupportedTimeDivision);
  EXPECT_EQ(code_of([&] { parse_midi(cat(header(2, 1, 480), track(kC4Body))); }), Errc::MalformedHeader);
}

TEST(ParseMidi, RunningStatusAndVelocityZeroNoteOff) {
  // Note-on 60, then running-status note-on 60 vel 0 (off) and note-on 64, off via vel 0.
  Bytes body = {0x00, 0x90, 60, 90, 0x83, 0x60, 60, 0, 0x00, 64, 80, 0x83, 0x60, 64, 0, 0x00, 0xFF, 0x2F, 0x00};
  auto piece = parse_midi(cat(header(0, 1, 480), track(body)));
  ASSERT_EQ(piece.events.size(), 2u);
  EXPECT_EQ(piece.events[0].pitch, 60);
  EXPECT_DOUBLE_EQ(piece.events[1].onset, 0.5);
  EXPECT_EQ(piece.events[1].pitch, 64);
  EXPECT_DOUBLE_EQ(piece.events[1].duration, 0.5);
}

TEST(ParseMidi, UnterminatedNoteClosedAtEndOfTrack) {
  Bytes body = {0x00, 0x90, 67, 90, 0x87, 0x40, 0xFF, 0x2F, 0x00};  // EOT at tick 960
  auto piece = parse_midi(cat(header(0, 1, 480), track(body)));
  ASSERT_EQ(piece.events.size(), 1u);
  EXPECT_DOUBLE_EQ(piece.events[0].duration, 1.0);
}

TEST(ParseMidi, FormatOneTempoTrackAppliesToAllTracks) {
  Bytes tempo = {0x00, 0xFF, 0x51, 0x03, 0x04, 0x93, 0xE0, 0x00, 0xFF, 0x2F, 0x00};
  auto piece = parse_midi(cat(cat(header(1, 2, 480), track(tempo)), track(kC4Body)));
  ASSERT_EQ(piece.events.size(), 1u);
  EXPECT_NEAR(piece.events[0].duration, 0.3, 1e-15);
}

TEST(ParseMidi, EncodeThenParseRecoversEvents) {
  auto p = piece_from({{0.0, 60}, {0.5, 62}, {0.75, 64}, {0.75, 67}}, 0.25);
  auto q = parse_midi(encode_midi(p));
  ASSERT_EQ(q.events.size(), p.events.size());
  for (std::size_t i = 0; i < p.events.size(); ++i) {
    EXPECT_NEAR(q.events[i].onset, p.events[i].onset, 1e-9);
    EXPECT_NEAR(q.events[i].duration, p.events[i].duration, 1e-9);
    EXPECT_EQ(q.events[i].pitch, p.events[i].pitch);
  }
}

// Every byte string yields a Piece or a typed Error; nothing else escapes.
TEST(ParseMidi, FuzzNeverThrowsUntypedErrors) {
  std::mt19937 rng(7);
  const Bytes valid = encode_midi(piece_from({{0.0, 60}, {0.5, 62}, {1.0, 64}, {1.25, 65}}));
  int parsed = 0, typed = 0;
  for (int iter = 0; iter < 4000; ++iter) {
    Bytes b;
    if (iter % 3 == 0) {
      b.resize(rng() % 64);
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    } else {
      b = valid;
      const int flips = 1 + static_cast<int>(rng() % 6);
      for (int f = 0; f < flips; ++f) b[rng() % b.size()] = static_cast<std::uint8_t>(rng());
      if (iter % 3 == 2) b.resize(rng() % (b.size() + 1));
    }
    try {
      auto piece = parse_midi(b);
      for (const auto& e : piece.events) {
        ASSERT_GT(e.duration, 0.0);
        ASSERT_GE(e.onset, 0.0);
        ASSERT_GE(e.pitch, 0);
        ASSERT_LE(e.pitch, 127);
      }
      ++parsed;
    } catch (const Error&) {
      ++typed;
    }
  }
  EXPECT_GT(parsed, 0);
  EXPECT_GT(typed, 0);
}

TEST(ParseCorpusCsv, WellFormedRows) {
  auto r = parse_corpus_csv_string("onset,duration,pitch\n0,0.5,60\n0.5,0.5,62\n1.0,0.5,64\n");
  EXPECT_EQ(r.piece.events.size(), 3u);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(r.piece.performer, "unknown");
  EXPECT_EQ(r.piece.year, 0);
}

TEST(ParseCorpusCsv, RowsSortedByOnset) {
  auto r = parse_corpus_csv_string("onset,duration,pitch\n1.0,0.5,64\n0,0.5,60\n0.5,0.5,62\n");
  ASSERT_EQ(r.piece.events.size(), 3u);
  EXPECT_EQ(r.piece.events[0].pitch, 60);
  EXPECT_EQ(r.piece.events[1].pitch, 62);
  EXPECT_EQ(r.piece.events[2].pitch, 64);
}

TEST(ParseCorpusCsv, BadRowSkippedWithWarning) {
  auto r = parse_corpus_csv_string("onset,duration,pitch\n0,0.5,60\n0.5,0.5,abc\n1.0,0.5,64\n");
  EXPECT_EQ(r.piece.events.size(), 2u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("row 2"), std::string::npos);
}

TEST(ParseCorpusCsv, MissingColumnAndMetadata) {
  EXPECT_EQ(code_of([] { parse_corpus_csv_string("onset,pitch\n0,60\n"); }), Errc::MissingColumn);
  CsvSchema schema;
  schema.onset = "start";
  auto r = parse_corpus_csv_string(
      "start,duration,pitch,performer,year,style,instrument\n0,1,60,Art Pepper,1957,COOL,as\n", schema);
  EXPECT_EQ(r.piece.performer, "Art Pepper");
  EXPECT_EQ(r.piece.year, 1957);
  EXPECT_EQ(r.piece.decade, 1950);
  EXPECT_EQ(r.piece.style, "cool");
  EXPECT_EQ(r.piece.instrument, "alto saxophone");
}

TEST(ParseCorpusCsv, CanonicalRoundTripIsExact) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    Piece p;
    p.id = "rt";
    for (int i = 0; i < 20; ++i)
      p.events.push_back({u(rng), 0.001 + u(rng) / 10, static_cast<int>(rng() % 128), static_cast<int>(rng() % 128)});
    sort_events(p.events);
    auto back = parse_corpus_csv_string(piece_csv_string(p), CsvSchema::canonical(), "rt");
    EXPECT_EQ(back.piece, p);
  }
}

TEST(Manifest, BindsMetadataAndResolvesPaths) {
  std::istringstream in(
      "id,path,performer,year,style,instrument\n"
      "a,solos/a.mid,Miles Davis,1959,Cool,tp\n"
      "b,solos/b.csv,,1954,bebop,unknown-horn\n"
      "a,dup.mid,,,,\n");
  auto m = parse_manifest(in, "/corpus");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[0].path, std::filesystem::path("/corpus/solos/a.mid"));
  EXPECT_EQ(m.entries[0].instrument, "trumpet");
  EXPECT_EQ(m.entries[1].performer, "unknown");
  EXPECT_EQ(m.entries[1].instrument, "unknown");
  EXPECT_EQ(m.warnings.size(), 1u);
}

TEST(SymbolizePitch, MidiNumbers) {
  auto s = symbolize_pitch(piece_from({{0, 60}, {1, 62}, {2, 60}}));
  EXPECT_EQ(s.domain, Domain::Pitch);
  EXPECT_EQ(s.alphabet_size(), 2);
  EXPECT_EQ(s.symbols, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(s.alphabet, (std::vector<std::string>{"60", "62"}));
}

TEST(SymbolizePitch, PitchClassFoldsOctaves) {
  auto s = symbolize_pitch(piece_from({{0, 60}, {1, 72}}), PitchMode::PitchClass);
  EXPECT_EQ(s.alphabet_size(), 1);
  EXPECT_EQ(s.symbols, (std::vector<int>{0, 0}));
}

TEST(SymbolizePitch, EmptyPiece) {
  Piece p;
  EXPECT_EQ(code_of([&] { symbolize_pitch(p); }), Errc::EmptyPiece);
}

TEST(SymbolizePitch, MidiLabelsModTwelveMatchPitchClassUpToRelabeling) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, int>> ev;
    for (int i = 0; i < 30; ++i) ev.emplace_back(i * 0.25, 40 + static_cast<int>(rng() % 40));
    auto p = piece_from(ev);
    auto midi = symbolize_pitch(p);
    auto pc = symbolize_pitch(p, PitchMode::PitchClass);
    ASSERT_EQ(midi.symbols.size(), pc.symbols.size());
    std::map<int, int> relabel;  // pitch-class label -> pc symbol id
    for (std::size_t i = 0; i < midi.symbols.size(); ++i) {
      const int cls = std::stoi(midi.alphabet[midi.symbols[i]]) % 12;
      auto [it, fresh] = relabel.emplace(cls, pc.symbols[i]);
      EXPECT_EQ(it->second, pc.symbols[i]);
    }
    EXPECT_EQ(static_cast<int>(relabel.size()), pc.alphabet_size());
  }
}

TEST(SymbolizeRhythm, IsochronousIsAllZero) {
  auto s = symbolize_rhythm(piece_from({{0, 60}, {0.5, 62}, {1.0, 64}, {1.5, 65}}));
  EXPECT_EQ(s.alphabet, (std::vector<std::string>{"0"}));
  EXPECT_EQ(s.symbols, (std::vector<int>{0, 0, 0}));
}

TEST(SymbolizeRhythm, LogRatioBins) {
  // IOIs [0.25, 0.5, 0.5], median 0.5: round(4 * log2(0.5)) = -4.
  auto s = symbolize_rhythm(piece_from({{0, 60}, {0.25, 62}, {0.75, 64}, {1.25, 65}}));
  ASSERT_EQ(s.symbols.size(), 3u);
  EXPECT_EQ(s.alphabet[s.symbols[0]], "-4");
  EXPECT_EQ(s.alphabet[s.symbols[1]], "0");
  EXPECT_EQ(s.alphabet[s.symbols[2]], "0");
}

TEST(SymbolizeRhythm, ClampAndTooFewEvents) {
  auto s = symbolize_rhythm(piece_from({{0, 60}, {0.001 * 2, 62}, {10.0, 64}, {20.0, 65}}), 4, 8);
  for (const auto& label : s.alphabet) {
    EXPECT_GE(std::stoi(label), -8);
    EXPECT_LE(std::stoi(label), 8);
  }
  EXPECT_EQ(code_of([] { symbolize_rhythm(piece_from({{0, 60}})); }), Errc::TooFewEvents);
  // A chord is one onset.
  EXPECT_EQ(code_of([] { symbolize_rhythm(piece_from({{0, 60}, {0.0005, 64}})); }), Errc::TooFewEvents);
}

TEST(SymbolizeRhythm, TempoInvariant) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ioi(0.05, 1.5), lambda(0.2, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<double, int>> ev;
    double t = 0;
    for (int i = 0; i < 25; ++i) {
      ev.emplace_back(t, 60);
      t += ioi(rng);
    }
    const double l = lambda(rng);
    auto scaled = ev;
    for (auto& [o, p] : scaled) o *= l;
    auto a = symbolize_rhythm(piece_from(ev));
    auto b = symbolize_rhythm(piece_from(scaled));
    EXPECT_EQ(a.symbols, b.symbols);
    EXPECT_EQ(a.alphabet, b.alphabet);
  }
}

TEST(SymbolizeJoint, PairsPitchWithPrecedingInterval) {
  auto p = piece_from({{0, 60}, {0.5, 62}, {1.0, 60}});
  auto joint = symbolize_joint(symbolize_pitch(p), symbolize_rhythm(p));
  EXPECT_EQ(joint.domain, Domain::PitchRhythm);
  EXPECT_EQ(joint.alphabet_size(), 2);
  ASSERT_EQ(joint.symbols.size(), 2u);
  EXPECT_EQ(joint.alphabet[joint.symbols[0]], "62|0");
  EXPECT_EQ(joint.alphabet[joint.symbols[1]], "60|0");
}

TEST(SymbolizeJoint, SamePitchDifferentRhythm) {
  auto p = piece_from({{0, 60}, {0.25, 60}, {0.75, 60}, {1.25, 60}});
  auto joint = symbolize_joint(symbolize_pitch(p), symbolize_rhythm(p));
  EXPECT_EQ(joint.alphabet_size(), 2);
}

TEST(SymbolizeJoint, ChordUsesTopNote) {
  auto p = piece_from({{0, 60}, {0.5, 64}, {0.5, 67}, {1.0, 62}});
  auto joint = symbolize_joint(symbolize_pitch(p), symbolize_rhythm(p));
  ASSERT_EQ(joint.symbols.size(), 2u);
  EXPECT_EQ(joint.alphabet[joint.symbols[0]], "67|0");
}

TEST(SymbolizeJoint, PieceMismatch) {
  auto a = piece_from({{0, 60}, {0.5, 62}});
  auto b = a;
  b.id = "other";
  EXPECT_EQ(code_of([&] { symbolize_joint(symbolize_pitch(a), symbolize_rhythm(b)); }), Errc::PieceMismatch);
}

TEST(SymbolSequence, JsonShape) {
  auto j = to_json(symbolize_pitch(piece_from({{0, 60}, {1, 62}})));
  EXPECT_EQ(j["K"], 2);
  EXPECT_EQ(j["domain"], "pitch");
  EXPECT_EQ(j["symbols"], nlohmann::json({0, 1}));
}
