// Copyright 2026 The KVQG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kvqg/annotation.hpp"
#include "kvqg/dataset.hpp"
#include "kvqg/kg_store.hpp"
#include "kvqg/ranker.hpp"
#include "kvqg/text_extract.hpp"

namespace kvqg {

struct CaptionRecord {
  std::string id;
  std::string image;
  std::string caption;
  nlohmann::json provenance = nlohmann::json::object();
};

// Caption file: JSON array of objects with "id", optional "image",
// optional "provenance", and either "caption" or "captions" plus "source".
// source "nwpu" draws one caption with the seed (mixed with the record
// position); source "textrs" joins them.
inline std::vector<CaptionRecord> captions_from_json(const nlohmann::json& j, uint64_t seed) {
  if (!j.is_array()) throw SchemaError("caption file must hold a JSON array");
  std::vector<CaptionRecord> out;
  for (size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    const auto where = "caption record " + std::to_string(i);
    if (!e.is_object() || !e.contains("id") || !e["id"].is_string())
      throw SchemaError("missing field id at " + where);
    CaptionRecord r;
    r.id = e["id"].get<std::string>();
    r.image = e.value("image", "");
    r.provenance = e.value("provenance", nlohmann::json::object());
    if (e.contains("caption")) {
      if (!e["caption"].is_string()) throw SchemaError("field caption at " + where + " is not a string");
      r.caption = e["caption"].get<std::string>();
    } else if (e.contains("captions")) {
      auto caps = e["captions"].get<std::vector<std::string>>();
      const auto source = text::lower(e.value("source", ""));
      if (source == "nwpu") {
        r.caption = ingest_nwpu_caption(caps, seed + i);
      } else if (source == "textrs") {
        r.caption = ingest_textrs_caption(caps);
      } else {
        throw SchemaError("field source at " + where + " must be nwpu or textrs");
      }
      if (!r.provenance.contains("dataset_name")) r.provenance["dataset_name"] = source;
    } else {
      throw SchemaError("missing field caption at " + where);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<CaptionRecord> load_captions(const std::filesystem::path& path, uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open caption file " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw SchemaError("caption file " + path.string() + " is not valid JSON");
  return captions_from_json(j, seed);
}

struct CaptionRanking {
  CaptionRecord record;
  std::vector<std::string> objects;
  std::vector<NounChunk> chunks;
  std::vector<Candidate> candidates;  // before filtering
  std::vector<RankedCandidate> ranked;  // after both phases and top-k
};

struct RankOptions {
  ScoreBand topic_band;
  ScoreBand sentence_band;
  size_t k = 10;
};

inline CaptionRanking retrieve(const CaptionRecord& rec, const TextExtractor& extractor,
                               const KnowledgeIndex& index) {
  CaptionRanking r;
  r.record = rec;
  const auto tokens = extractor.tag(rec.caption);
  r.chunks = extractor.chunk(tokens);
  r.objects = extractor.extract_nouns(rec.caption);
  r.candidates = build_candidates(r.objects, index);
  return r;
}

inline CaptionRanking rank_caption(const CaptionRecord& rec, const TextExtractor& extractor,
                                   const KnowledgeIndex& index, const Scorer& scorer,
                                   const RankOptions& opt) {
  auto r = retrieve(rec, extractor, index);
  const CaptionRef ref{rec.id, rec.caption};
  auto kept = filter_by_topic(r.candidates, scorer, opt.topic_band, ref);
  r.ranked = top_k(rank_by_sentence(kept, scorer, opt.sentence_band, ref), opt.k);
  return r;
}

inline nlohmann::json record_json(const CaptionRanking& r) {
  nlohmann::json chunks = nlohmann::json::array();
  for (const auto& c : r.chunks) chunks.push_back(chunk_json(c));
  return {{"id", r.record.id},
          {"image", r.record.image},
          {"caption", r.record.caption},
          {"provenance", r.record.provenance},
          {"objects", r.objects},
          {"chunks", chunks}};
}

inline nlohmann::json candidates_json(const CaptionRanking& r) {
  auto j = record_json(r);
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : r.candidates) j["candidates"].push_back(candidate_json(c));
  return j;
}

inline nlohmann::json ranking_json(const CaptionRanking& r) {
  auto j = record_json(r);
  j["candidate_count"] = r.candidates.size();
  j["ranked"] = nlohmann::json::array();
  for (const auto& c : r.ranked) j["ranked"].push_back(ranked_json(c));
  return j;
}

// Rank output -> annotation tasks, keeping at most k candidates each.
inline std::vector<AnnotationTask> assemble_tasks(const nlohmann::json& ranking, size_t k) {
  if (!ranking.is_array()) throw SchemaError("rank output must be a JSON array");
  std::vector<AnnotationTask> tasks;
  for (size_t i = 0; i < ranking.size(); ++i) {
    const auto& e = ranking[i];
    try {
      AnnotationTask t;
      t.id = e.at("id").get<std::string>();
      t.image = e.value("image", "");
      t.caption = e.at("caption").get<std::string>();
      t.provenance = e.value("provenance", nlohmann::json::object());
      for (const auto& c : e.at("ranked")) {
        if (t.candidates.size() == k) break;
        t.candidates.push_back(ranked_from_json(c));
      }
      for (const auto& c : e.value("chunks", nlohmann::json::array()))
        t.answer_chunks.push_back(chunk_from_json(c));
      tasks.push_back(std::move(t));
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError("rank record " + std::to_string(i) + ": " + ex.what());
    }
  }
  return tasks;
}

}  // namespace kvqg
