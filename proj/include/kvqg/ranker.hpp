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

// Two-phase triplet ranking. Candidates are the one-step neighbors of the
// caption's object nouns. Phase one keeps candidates whose external entity has
// a topic score inside the band; phase two scores the verbalized triplet
// against the caption, keeps in-band candidates and sorts them descending.

#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "kvqg/kg_store.hpp"
#include "kvqg/scorer.hpp"
#include "kvqg/verbalizer.hpp"

namespace kvqg {

// Inclusive score interval.
struct ScoreBand {
  double lo = 0.2;
  double hi = 0.8;

  bool valid() const { return 0.0 <= lo && lo <= hi && hi <= 1.0; }
  bool contains(double s) const { return lo <= s && s <= hi; }

  static ScoreBand checked(double lo, double hi) {
    ScoreBand b{lo, hi};
    if (!b.valid())
      throw ValidationError("score band must satisfy 0 <= lo <= hi <= 1, got [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return b;
  }
};

struct CaptionRef {
  std::string id;
  std::string text;
};

struct Candidate {
  KnowledgeTriplet triplet;
  std::string object_entity;    // endpoint drawn from the caption's nouns
  std::string external_entity;  // the other endpoint
  double topic_score = 0.0;
};

struct RankedCandidate {
  KnowledgeTriplet triplet;
  std::string object_entity;
  std::string external_entity;
  double topic_score = 0.0;
  double sentence_score = 0.0;
  std::string sentence;  // verbalization scored against the caption
};

// Union of neighbors over the object list, first occurrence wins. The
// external entity is the endpoint not in `objects`; when both are, it is the
// endpoint that was not queried.
inline std::vector<Candidate> build_candidates(std::span<const std::string> objects,
                                               const KnowledgeIndex& index) {
  std::unordered_set<std::string> in_obj(objects.begin(), objects.end());
  std::unordered_set<const KnowledgeTriplet*> seen;
  std::vector<Candidate> out;
  for (const auto& o : objects) {
    for (uint32_t id : index.neighbor_ids(o)) {
      const KnowledgeTriplet& t = index.edges()[id];
      if (!seen.insert(&t).second) continue;
      Candidate c;
      c.triplet = t;
      const bool head_in = in_obj.contains(t.head);
      const bool tail_in = in_obj.contains(t.tail);
      if (head_in && tail_in) {
        c.object_entity = o;
        c.external_entity = (t.head == o) ? t.tail : t.head;
      } else if (head_in) {
        c.object_entity = t.head;
        c.external_entity = t.tail;
      } else {
        c.object_entity = t.tail;
        c.external_entity = t.head;
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

// Keeps candidates with band.lo <= topic(caption, external) <= band.hi, in
// input order, recording the score. Scorer failures propagate.
inline std::vector<Candidate> filter_by_topic(std::vector<Candidate> candidates,
                                              const Scorer& scorer, const ScoreBand& band,
                                              const CaptionRef& caption) {
  std::vector<ScorePair> pairs;
  pairs.reserve(candidates.size());
  for (const auto& c : candidates) pairs.push_back({caption.id, caption.text, c.external_entity});
  const auto scores = scorer.score_batch(pairs);
  std::vector<Candidate> kept;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double s = clamp_score(scores[i]);
    if (!band.contains(s)) continue;
    candidates[i].topic_score = s;
    kept.push_back(std::move(candidates[i]));
  }
  return kept;
}

// Orders by sentence score descending, then verbalization ascending.
inline bool ranked_before(const RankedCandidate& x, const RankedCandidate& y) {
  if (x.sentence_score != y.sentence_score) return x.sentence_score > y.sentence_score;
  return x.sentence < y.sentence;
}

inline std::vector<RankedCandidate> rank_by_sentence(const std::vector<Candidate>& candidates,
                                                     const Scorer& scorer,
                                                     const ScoreBand& band,
                                                     const CaptionRef& caption) {
  std::vector<std::string> sentences;
  sentences.reserve(candidates.size());
  for (const auto& c : candidates) sentences.push_back(verbalize(c.triplet).text);
  std::vector<ScorePair> pairs;
  pairs.reserve(candidates.size());
  for (const auto& s : sentences) pairs.push_back({caption.id, caption.text, s});
  const auto scores = scorer.score_batch(pairs);

  std::vector<RankedCandidate> out;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double s = clamp_score(scores[i]);
    if (!band.contains(s)) continue;
    const auto& c = candidates[i];
    out.push_back({c.triplet, c.object_entity, c.external_entity, c.topic_score, s,
                   std::move(sentences[i])});
  }
  std::sort(out.begin(), out.end(), ranked_before);
  return out;
}

inline std::vector<RankedCandidate> top_k(std::vector<RankedCandidate> ranked, size_t k = 10) {
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

inline nlohmann::json triplet_json(const KnowledgeTriplet& t) {
  return {{"head", t.head}, {"relation", std::string(relation_name(t.relation))}, {"tail", t.tail}};
}

inline nlohmann::json candidate_json(const Candidate& c) {
  auto j = triplet_json(c.triplet);
  j["object_entity"] = c.object_entity;
  j["external_entity"] = c.external_entity;
  return j;
}

inline nlohmann::json ranked_json(const RankedCandidate& r) {
  auto j = triplet_json(r.triplet);
  j["object_entity"] = r.object_entity;
  j["external_entity"] = r.external_entity;
  j["topic_score"] = r.topic_score;
  j["sentence_score"] = r.sentence_score;
  j["sentence"] = r.sentence;
  return j;
}

}  // namespace kvqg
