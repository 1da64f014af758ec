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

// Dataset records: caption ingestion, sample validation, the seeded
// train/validation split, corpus statistics and the canonical JSON file
// format.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kvqg/common.hpp"
#include "kvqg/kg_store.hpp"
#include "kvqg/relation.hpp"
#include "kvqg/text_extract.hpp"
#include "kvqg/verbalizer.hpp"

namespace kvqg {

// Triplet as stored in a sample. The relation stays a string so that a file
// with an unknown relation still loads and validate() can report it.
struct SampleTriplet {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const SampleTriplet&) const = default;
};

struct Sample {
  std::string id;
  std::string image;
  std::string caption;
  SampleTriplet triplet;
  std::string knowledge_sentence;
  std::string question;
  std::string answer;
  // {"dataset_name": ..., "scene_class": ...}; extra keys are preserved.
  nlohmann::json provenance = nlohmann::json::object();

  bool operator==(const Sample&) const = default;
};

inline nlohmann::json to_json(const Sample& s) {
  return {{"id", s.id},
          {"image", s.image},
          {"caption", s.caption},
          {"triplet", {{"head", s.triplet.head},
                       {"relation", s.triplet.relation},
                       {"tail", s.triplet.tail}}},
          {"knowledge_sentence", s.knowledge_sentence},
          {"question", s.question},
          {"answer", s.answer},
          {"provenance", s.provenance}};
}

// `position` is the record's index in its file, used in error messages.
inline Sample sample_from_json(const nlohmann::json& j, size_t position) {
  auto where = [&](const std::string& field) {
    std::string msg = "missing field " + field + " at sample " + std::to_string(position);
    if (j.is_object() && j.contains("id") && j["id"].is_string())
      msg += " (id " + j["id"].get<std::string>() + ")";
    return msg;
  };
  if (!j.is_object()) throw SchemaError("sample " + std::to_string(position) + " is not an object");
  auto str = [&](const nlohmann::json& obj, const char* field, const std::string& label) {
    if (!obj.contains(field)) throw SchemaError(where(label));
    if (!obj[field].is_string())
      throw SchemaError("field " + label + " at sample " + std::to_string(position) +
                        " is not a string");
    return obj[field].get<std::string>();
  };
  Sample s;
  s.id = str(j, "id", "id");
  s.image = str(j, "image", "image");
  s.caption = str(j, "caption", "caption");
  if (!j.contains("triplet")) throw SchemaError(where("triplet"));
  const auto& t = j["triplet"];
  if (!t.is_object())
    throw SchemaError("field triplet at sample " + std::to_string(position) + " is not an object");
  s.triplet.head = str(t, "head", "triplet.head");
  s.triplet.relation = str(t, "relation", "triplet.relation");
  s.triplet.tail = str(t, "tail", "triplet.tail");
  s.knowledge_sentence = str(j, "knowledge_sentence", "knowledge_sentence");
  s.question = str(j, "question", "question");
  s.answer = str(j, "answer", "answer");
  if (!j.contains("provenance")) throw SchemaError(where("provenance"));
  if (!j["provenance"].is_object())
    throw SchemaError("field provenance at sample " + std::to_string(position) +
                      " is not an object");
  s.provenance = j["provenance"];
  str(s.provenance, "dataset_name", "provenance.dataset_name");
  return s;
}

inline std::vector<Sample> samples_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("dataset file must hold a JSON array");
  std::vector<Sample> out;
  out.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i) out.push_back(sample_from_json(j[i], i));
  return out;
}

// Canonical form: sorted keys, two-space indent, trailing newline.
inline std::string serialize_samples(std::span<const Sample> samples) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : samples) arr.push_back(to_json(s));
  return arr.dump(2) + "\n";
}

inline std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("dataset " + path.string() + " is not valid JSON: " + e.what());
  }
  return samples_from_json(j);
}

inline void save_dataset(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path.string());
  out << serialize_samples(samples);
  if (!out) throw IoError("failed writing dataset " + path.string());
}

// ---------------------------------------------------------------------------
// Caption ingestion

// NWPU-style: each image has several detailed captions; pick one uniformly
// with a seeded draw.
inline std::string ingest_nwpu_caption(std::span<const std::string> captions, uint64_t seed) {
  if (captions.empty()) throw ValidationError("no captions to choose from");
  SeededRng rng(seed);
  return captions[static_cast<size_t>(rng.below(captions.size()))];
}

// TextRS-style: short captions are merged into one text, joined with ". ".
// A sentence's own terminal periods never double up with the separator.
inline std::string ingest_textrs_caption(std::span<const std::string> captions) {
  std::vector<std::string> parts;
  for (const auto& c : captions) {
    auto t = text::trim(c);
    if (!t.empty()) parts.emplace_back(t);
  }
  if (parts.empty()) throw ValidationError("no captions to combine");
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    std::string_view p = parts[i];
    const bool last = i + 1 == parts.size();
    size_t periods = 0;
    while (!p.empty() && p.back() == '.') {
      p.remove_suffix(1);
      ++periods;
    }
    p = text::trim(p);
    out += p;
    if (!last) {
      out += ". ";
    } else if (periods > 0) {
      out += '.';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string code;
  std::string message;

  bool operator==(const Violation&) const = default;
};

namespace detail {

inline std::string collapse_ws(std::string_view s) { return text::join(text::split_ws(s), " "); }

// Sentences a sample's triplet and answer can legitimately verbalize to.
inline std::vector<std::string> admissible_sentences(const KnowledgeTriplet& t,
                                                     const std::string& answer,
                                                     const Singularizer& singularize) {
  std::vector<std::string> out{verbalize(t).text};
  const auto words = text::split_ws(answer);
  if (words.empty()) return out;
  const std::string surface = text::join(words, " ");
  std::vector<std::string> heads{singularize(text::lower(words.back()))};
  // Endpoints that close the answer, with or without its last word made singular.
  auto last_singular = words;
  last_singular.back() = heads.front();
  const std::string lowered = text::lower(surface);
  const std::string lowered_sing = text::lower(text::join(last_singular, " "));
  for (const auto& endpoint : {t.head, t.tail}) {
    const std::string e = normalize_concept(endpoint);
    if (e.empty()) continue;
    for (const auto& a : {lowered, lowered_sing})
      if (a == e || text::ends_with(a, " " + e)) heads.push_back(e);
  }
  for (const auto& h : heads) {
    try {
      out.push_back(verbalize(t, NounChunk{h, surface, 0, words.size()}).text);
    } catch (const ValidationError&) {
    }
  }
  return out;
}

}  // namespace detail

// Checks every sample invariant and reports all violations.
inline std::vector<Violation> validate(const Sample& s, const Singularizer& singularize = {}) {
  std::vector<Violation> v;
  auto blank = [](const std::string& x) { return text::trim(x).empty(); };
  if (blank(s.id)) v.push_back({"empty-id", "sample id is empty"});
  if (blank(s.caption)) v.push_back({"empty-caption", "caption is empty"});
  if (blank(s.knowledge_sentence))
    v.push_back({"empty-knowledge-sentence", "knowledge sentence is empty"});
  if (blank(s.question)) v.push_back({"empty-question", "question is empty"});
  if (blank(s.answer)) v.push_back({"empty-answer", "answer is empty"});
  if (blank(s.triplet.head) || blank(s.triplet.tail))
    v.push_back({"empty-triplet-endpoint", "triplet head or tail is empty"});
  auto rel = parse_relation(s.triplet.relation);
  if (!rel)
    v.push_back({"relation-not-in-R", "relation '" + s.triplet.relation +
                                          "' is not one of the 14 supported relations"});
  if (!blank(s.answer) && !blank(s.caption) &&
      !text::contains_icase(s.caption, text::trim(s.answer)))
    v.push_back({"answer-not-in-caption", "answer '" + s.answer + "' does not occur in the caption"});

  if (rel && !blank(s.triplet.head) && !blank(s.triplet.tail) && !blank(s.knowledge_sentence)) {
    KnowledgeTriplet t{s.triplet.head, *rel, s.triplet.tail, 1.0};
    std::string got = detail::collapse_ws(s.knowledge_sentence);
    if (!got.empty() && got.back() == '.') got.pop_back();
    bool ok = false;
    for (const auto& want : detail::admissible_sentences(t, s.answer, singularize))
      ok = ok || detail::collapse_ws(want) == got;
    if (!ok)
      v.push_back({"knowledge-sentence-mismatch",
                   "knowledge sentence is not the verbalization of the triplet"});
  }
  return v;
}

// ---------------------------------------------------------------------------
// Split

struct SplitSpec {
  unsigned train_ratio = 4;
  unsigned val_ratio = 1;
  uint64_t seed = 0;
};

struct SplitResult {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

// Validation size for n samples: round(n * val / (train + val)).
inline size_t validation_size(size_t n, const SplitSpec& spec) {
  if (spec.train_ratio == 0 || spec.val_ratio == 0)
    throw ValidationError("split ratios must be positive");
  const double share =
      static_cast<double>(spec.val_ratio) / static_cast<double>(spec.train_ratio + spec.val_ratio);
  return static_cast<size_t>(std::llround(static_cast<double>(n) * share));
}

// Seeded shuffle, then the first n - v go to train and the rest to val.
inline SplitResult split(std::vector<Sample> samples, const SplitSpec& spec) {
  const size_t n_val = validation_size(samples.size(), spec);
  SeededRng rng(spec.seed);
  rng.shuffle(samples);
  SplitResult r;
  const size_t n_train = samples.size() - n_val;
  r.train.assign(std::make_move_iterator(samples.begin()),
                 std::make_move_iterator(samples.begin() + static_cast<ptrdiff_t>(n_train)));
  r.val.assign(std::make_move_iterator(samples.begin() + static_cast<ptrdiff_t>(n_train)),
               std::make_move_iterator(samples.end()));
  return r;
}

// ---------------------------------------------------------------------------
// Statistics

struct DatasetStats {
  size_t samples = 0;
  double avg_len_q = 0.0;
  double avg_len_c = 0.0;
  std::map<size_t, size_t> len_q_histogram;
  size_t nouns = 0;
  size_t verbs = 0;
  size_t adjectives = 0;
  double avg_obj_c = 0.0;
  size_t kg_entities = 0;
  size_t kg_relations = 0;
  size_t kg_triplets = 0;

  nlohmann::json to_json() const {
    nlohmann::json hist = nlohmann::json::object();
    for (auto [len, count] : len_q_histogram) hist[std::to_string(len)] = count;
    return {{"samples", samples},
            {"avg_len_q", avg_len_q},
            {"avg_len_c", avg_len_c},
            {"len_q_histogram", hist},
            {"vocab", {{"nouns", nouns}, {"verbs", verbs}, {"adjectives", adjectives}}},
            {"avg_obj_c", avg_obj_c},
            {"kg", {{"entities", kg_entities}, {"relations", kg_relations}, {"triplets", kg_triplets}}}};
  }
};

// Whitespace tokens, not counting a terminal "?" (attached or standalone).
inline size_t question_length(std::string_view q) {
  auto words = text::split_ws(q);
  if (words.empty()) return 0;
  std::string& last = words.back();
  while (!last.empty() && last.back() == '?') last.pop_back();
  if (last.empty()) words.pop_back();
  return words.size();
}

inline DatasetStats compute_stats(std::span<const Sample> samples, const TextExtractor& extractor) {
  DatasetStats st;
  st.samples = samples.size();
  std::set<std::string> nouns, verbs, adjs, entities, relations;
  std::set<std::tuple<std::string, std::string, std::string>> triplets;
  double len_q = 0, len_c = 0, obj_c = 0;
  for (const auto& s : samples) {
    const size_t lq = question_length(s.question);
    len_q += static_cast<double>(lq);
    ++st.len_q_histogram[lq];
    len_c += static_cast<double>(text::split_ws(s.caption).size());
    obj_c += static_cast<double>(extractor.extract_nouns(s.caption).size());
    for (const auto& t : extractor.tag(s.question)) {
      switch (t.tag) {
        case PosTag::kNoun: nouns.insert(extractor.lemma(t)); break;
        case PosTag::kVerb: verbs.insert(extractor.lemma(t)); break;
        case PosTag::kAdj: adjs.insert(extractor.lemma(t)); break;
        default: break;
      }
    }
    const std::string h = normalize_concept(s.triplet.head);
    const std::string tl = normalize_concept(s.triplet.tail);
    entities.insert(h);
    entities.insert(tl);
    relations.insert(s.triplet.relation);
    triplets.emplace(h, s.triplet.relation, tl);
  }
  if (!samples.empty()) {
    const auto n = static_cast<double>(samples.size());
    st.avg_len_q = len_q / n;
    st.avg_len_c = len_c / n;
    st.avg_obj_c = obj_c / n;
  }
  st.nouns = nouns.size();
  st.verbs = verbs.size();
  st.adjectives = adjs.size();
  st.kg_entities = entities.size();
  st.kg_relations = relations.size();
  st.kg_triplets = triplets.size();
  return st;
}

}  // namespace kvqg
