#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "jazzdyn/hbsl/model.hpp"

namespace jazzdyn::hbsl {

inline std::string to_string(ProbabilityNorm n) { return n == ProbabilityNorm::AlphabetSize ? "alphabet_size" : "raw"; }
inline std::string to_string(ReliabilityNorm n) { return n == ReliabilityNorm::Median ? "median" : "raw"; }
inline std::string to_string(VarianceTarget t) { return t == VarianceTarget::Symbol ? "symbol" : "total"; }

inline nlohmann::json to_json(const HbslConfig& c) {
  return {{"alpha", c.alpha},
          {"gate_constant", c.gate_constant},
          {"max_levels", c.max_levels},
          {"order", c.order},
          {"probability_norm", to_string(c.probability_norm)},
          {"reliability_norm", to_string(c.reliability_norm)},
          {"variance_target", to_string(c.variance_target)}};
}

// Deterministic snapshot: nlohmann objects keep keys sorted, contexts and
// symbols are written as global ids ("START" for the start pad).
inline nlohmann::json snapshot(const HbslModel& model) {
  using nlohmann::json;
  json levels = json::array();
  for (const auto& lv : model.levels()) {
    json counts = json::object();
    for (const auto& [ctx, row] : lv.dm.counts()) {
      std::string key;
      for (std::size_t i = 0; i < ctx.size(); ++i) {
        if (i) key += ',';
        key += ctx[i] == kStart ? std::string("START") : std::to_string(lv.alphabet[ctx[i]]);
      }
      json cell = json::object();
      for (std::size_t s = 0; s < row.size(); ++s)
        if (row[s] != 0.0) cell[std::to_string(lv.alphabet[s])] = row[s];
      counts[key] = std::move(cell);
    }
    levels.push_back({{"level_index", lv.dm.level_index()},
                      {"order", lv.dm.order()},
                      {"alpha", lv.dm.alpha()},
                      {"K", lv.dm.alphabet_size()},
                      {"alphabet", lv.alphabet},
                      {"events", lv.events},
                      {"counts", std::move(counts)}});
  }
  json chunks = json::array();
  for (const auto& c : model.chunks())
    chunks.push_back({{"chunk_id", c.chunk_id},
                      {"children", c.children},
                      {"level_index", c.level_index},
                      {"created_at", c.created_at}});
  return {{"config", to_json(model.config())},
          {"observed_events", model.observed_events()},
          {"levels", std::move(levels)},
          {"chunks", std::move(chunks)}};
}

}  // namespace jazzdyn::hbsl
