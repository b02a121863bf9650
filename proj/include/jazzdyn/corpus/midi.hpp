#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jazzdyn/corpus/types.hpp"
#include "jazzdyn/error.hpp"

namespace jazzdyn::corpus {

namespace midi_detail {

inline constexpr std::uint32_t kDefaultTempo = 500000;  // µs per quarter, 120 BPM

class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, Errc on_short) : data_(data), on_short_(on_short) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= data_.size(); }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint8_t peek() {
    need(1);
    return data_[pos_];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = (std::uint32_t{data_[pos_]} << 24) | (std::uint32_t{data_[pos_ + 1]} << 16) |
                      (std::uint32_t{data_[pos_ + 2]} << 8) | std::uint32_t{data_[pos_ + 3]};
    pos_ += 4;
    return v;
  }
  std::uint32_t varlen() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if (!(b & 0x80)) return v;
    }
    throw Error(Errc::MalformedTrack, "variable-length quantity longer than 4 bytes");
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) { bytes(n); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(on_short_, "unexpected end of data");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  Errc on_short_;
};

struct RawNote {
  std::uint64_t on_tick;
  std::uint64_t off_tick;
  int pitch;
  int velocity;
};

struct TempoChange {
  std::uint64_t tick;
  std::uint32_t usec_per_quarter;
};

// Piecewise-linear tick -> seconds conversion over a sorted tempo list.
class TempoMap {
 public:
  TempoMap(std::vector<TempoChange> changes, std::uint16_t ppq) : ppq_(ppq) {
    std::stable_sort(changes.begin(), changes.end(),
                     [](const auto& a, const auto& b) { return a.tick < b.tick; });
    segments_.push_back({0, 0.0, kDefaultTempo});
    for (const auto& c : changes) {
      auto& last = segments_.back();
      double start = last.seconds + seconds_in(last.usec, c.tick - last.tick);
      if (c.tick == last.tick) {
        last.usec = c.usec_per_quarter;
      } else {
        segments_.push_back({c.tick, start, c.usec_per_quarter});
      }
    }
  }

  double seconds(std::uint64_t tick) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), tick,
                               [](std::uint64_t t, const Segment& s) { return t < s.tick; });
    const Segment& s = *std::prev(it);
    return s.seconds + seconds_in(s.usec, tick - s.tick);
  }

 private:
  struct Segment {
    std::uint64_t tick;
    double seconds;
    std::uint32_t usec;
  };

  double seconds_in(std::uint32_t usec, std::uint64_t ticks) const {
    return static_cast<double>(ticks) * static_cast<double>(usec) / (1e6 * ppq_);
  }

  std::uint16_t ppq_;
  std::vector<Segment> segments_;
};

inline void parse_track(std::span<const std::uint8_t> body, std::vector<RawNote>& notes,
                        std::vector<TempoChange>& tempi) {
  Reader r(body, Errc::TruncatedTrack);
  std::uint64_t tick = 0;
  std::uint8_t running = 0;
  // (channel, pitch) -> FIFO of (on tick, velocity)
  std::map<std::pair<int, int>, std::deque<std::pair<std::uint64_t, int>>> open;

  auto note_off = [&](int ch, int pitch) {
    auto it = open.find({ch, pitch});
    if (it == open.end() || it->second.empty()) return;  // stray note-off
    auto [on, vel] = it->second.front();
    it->second.pop_front();
    notes.push_back({on, tick, pitch, vel});
  };

  while (!r.done()) {
    tick += r.varlen();
    std::uint8_t status = r.peek();
    if (status & 0x80) {
      r.u8();
    } else {
      if (running == 0) throw Error(Errc::MalformedTrack, "data byte without running status");
      status = running;
    }

    if (status < 0xF0) {
      running = status;
      const int type = status & 0xF0;
      const int ch = status & 0x0F;
      const int d1 = r.u8() & 0x7F;
      const int d2 = (type == 0xC0 || type == 0xD0) ? 0 : (r.u8() & 0x7F);
      if (type == 0x90 && d2 > 0) {
        open[{ch, d1}].emplace_back(tick, d2);
      } else if (type == 0x80 || type == 0x90) {
        note_off(ch, d1);
      }
    } else if (status == 0xF0 || status == 0xF7) {
      running = 0;
      r.skip(r.varlen());
    } else if (status == 0xFF) {
      running = 0;
      const std::uint8_t meta = r.u8();
      const std::uint32_t len = r.varlen();
      auto payload = r.bytes(len);
      if (meta == 0x51 && len >= 3) {
        std::uint32_t usec = (std::uint32_t{payload[0]} << 16) | (std::uint32_t{payload[1]} << 8) |
                             std::uint32_t{payload[2]};
        if (usec > 0) tempi.push_back({tick, usec});
      } else if (meta == 0x2F) {
        break;
      }
    } else {
      throw Error(Errc::MalformedTrack, "unexpected system status byte in track");
    }
  }

  // Unterminated notes end with the track.
  for (auto& [key, queue] : open)
    for (auto [on, vel] : queue) notes.push_back({on, tick, key.second, vel});
}

}  // namespace midi_detail

// Parses a format 0/1 Standard MIDI File with metrical (PPQ) time division.
// Only events are filled in; metadata comes from the corpus manifest.
inline Piece parse_midi(std::span<const std::uint8_t> bytes) {
  using namespace midi_detail;
  Reader r(bytes, Errc::MalformedHeader);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), "MThd"))
    throw Error(Errc::MalformedHeader, "missing MThd magic");
  const std::uint32_t header_len = r.u32();
  if (header_len < 6) throw Error(Errc::MalformedHeader, "header chunk shorter than 6 bytes");
  const std::uint16_t format = r.u16();
  const std::uint16_t ntracks = r.u16();
  const std::uint16_t division = r.u16();
  r.skip(header_len - 6);
  if (format > 1) throw Error(Errc::MalformedHeader, "SMF format " + std::to_string(format) + " not supported");
  if (division & 0x8000) throw Error(Errc::UnsupportedTimeDivision, "SMPTE time division");
  if (division == 0) throw Error(Errc::MalformedHeader, "zero ticks per quarter note");

  std::vector<RawNote> raw;
  std::vector<TempoChange> tempi;
  Reader chunks(bytes.subspan(r.pos()), Errc::TruncatedTrack);
  int tracks_seen = 0;
  while (tracks_seen < ntracks) {
    if (chunks.remaining() < 8)
      throw Error(Errc::TruncatedTrack, "expected " + std::to_string(ntracks) + " tracks, found " +
                                            std::to_string(tracks_seen));
    auto id = chunks.bytes(4);
    const std::uint32_t len = chunks.u32();
    if (len > chunks.remaining())
      throw Error(Errc::TruncatedTrack, "chunk length " + std::to_string(len) + " exceeds remaining " +
                                            std::to_string(chunks.remaining()) + " bytes");
    auto body = chunks.bytes(len);
    if (!std::equal(id.begin(), id.end(), "MTrk")) continue;  // alien chunk
    parse_track(body, raw, tempi);
    ++tracks_seen;
  }

  TempoMap tempo(std::move(tempi), division);
  Piece piece;
  piece.events.reserve(raw.size());
  for (const auto& n : raw) {
    if (n.off_tick <= n.on_tick) continue;
    const double on = tempo.seconds(n.on_tick);
    const double off = tempo.seconds(n.off_tick);
    if (!(off > on)) continue;
    piece.events.push_back({on, off - on, n.pitch, n.velocity});
  }
  sort_events(piece.events);
  return piece;
}

inline Piece parse_midi(const std::vector<std::uint8_t>& bytes) {
  return parse_midi(std::span<const std::uint8_t>(bytes));
}

// Writes a format-0 file, one tempo event at tick 0. Used for fixtures and toy corpora.
inline std::vector<std::uint8_t> encode_midi(const Piece& piece, std::uint16_t ppq = 480,
                                             std::uint32_t usec_per_quarter = 500000) {
  struct Ev {
    std::uint64_t tick;
    int order;  // note-offs before note-ons at the same tick
    std::uint8_t status, d1, d2;
  };
  const double ticks_per_sec = 1e6 * ppq / usec_per_quarter;
  std::vector<Ev> evs;
  for (const auto& e : piece.events) {
    auto on = static_cast<std::uint64_t>(std::llround(e.onset * ticks_per_sec));
    auto off = static_cast<std::uint64_t>(std::llround((e.onset + e.duration) * ticks_per_sec));
    if (off <= on) off = on + 1;
    const auto p = static_cast<std::uint8_t>(std::clamp(e.pitch, 0, 127));
    const auto v = static_cast<std::uint8_t>(std::clamp(e.velocity, 1, 127));
    evs.push_back({on, 1, 0x90, p, v});
    evs.push_back({off, 0, 0x80, p, 0});
  }
  std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
  });

  std::vector<std::uint8_t> track;
  auto put_varlen = [&](std::uint64_t v) {
    std::uint8_t buf[10];
    int n = 0;
    buf[n++] = v & 0x7F;
    while (v >>= 7) buf[n++] = static_cast<std::uint8_t>(0x80 | (v & 0x7F));
    while (n) track.push_back(buf[--n]);
  };
  put_varlen(0);
  track.insert(track.end(), {0xFF, 0x51, 0x03, static_cast<std::uint8_t>(usec_per_quarter >> 16),
                             static_cast<std::uint8_t>(usec_per_quarter >> 8),
                             static_cast<std::uint8_t>(usec_per_quarter)});
  std::uint64_t last = 0;
  for (const auto& e : evs) {
    put_varlen(e.tick - last);
    last = e.tick;
    track.insert(track.end(), {e.status, e.d1, e.d2});
  }
  put_varlen(0);
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 0, 0, 1,
                                   static_cast<std::uint8_t>(ppq >> 8), static_cast<std::uint8_t>(ppq),
                                   'M', 'T', 'r', 'k'};
  const auto len = static_cast<std::uint32_t>(track.size());
  out.insert(out.end(), {static_cast<std::uint8_t>(len >> 24), static_cast<std::uint8_t>(len >> 16),
                         static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)});
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

}  // namespace jazzdyn::corpus
