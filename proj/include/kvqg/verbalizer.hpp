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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kvqg/kg_store.hpp"
#include "kvqg/relation.hpp"
#include "kvqg/text_extract.hpp"

namespace kvqg {

// Relation -> sentence predicate, indexed like kAllRelations.
inline constexpr std::array<std::string_view, kNumRelations> kRelationTemplates = {
    "has a",             // HasA
    "is used for",       // UsedFor
    "is capable of",     // CapableOf
    "is at location of", // AtLocation
    "has",               // HasSubEvent
    "has prerequisite",  // HasPrerequisite
    "has a property",    // HasProperty
    "causes",            // Causes
    "is created by",     // CreatedBy
    "is defined as",     // DefinedAs
    "desires",           // Desires
    "is made of",        // MadeOf
    "not desires",       // NotDesires
    "receives action",   // ReceivesAction
};

inline std::string_view relation_template(RelationType r) {
  return kRelationTemplates[static_cast<size_t>(r)];
}

inline std::vector<std::pair<RelationType, std::string_view>> render_all_templates() {
  std::vector<std::pair<RelationType, std::string_view>> out;
  out.reserve(kNumRelations);
  for (auto r : kAllRelations) out.emplace_back(r, relation_template(r));
  return out;
}

// {"AtLocation": "is at location of", ...}; shared with the annotation UI.
inline nlohmann::json templates_json() {
  nlohmann::json j = nlohmann::json::object();
  for (auto [r, t] : render_all_templates()) j[std::string(relation_name(r))] = t;
  return j;
}

struct KnowledgeSentence {
  std::string text;
  KnowledgeTriplet source;
  std::optional<NounChunk> substituted_chunk;
};

// Renders "head predicate tail". With a chunk, the endpoint whose label equals
// the chunk's head noun is replaced by the chunk surface; the head is tried
// first. A chunk matching neither endpoint is a ValidationError.
inline KnowledgeSentence verbalize(const KnowledgeTriplet& t,
                                   const std::optional<NounChunk>& chunk = std::nullopt) {
  std::string subject = t.head;
  std::string object = t.tail;
  if (chunk) {
    const std::string head = normalize_concept(chunk->head_noun);
    if (!head.empty() && head == normalize_concept(t.head)) {
      subject = chunk->surface;
    } else if (!head.empty() && head == normalize_concept(t.tail)) {
      object = chunk->surface;
    } else {
      throw ValidationError("chunk '" + chunk->surface + "' (head '" + chunk->head_noun +
                            "') matches neither '" + t.head + "' nor '" + t.tail + "'");
    }
  }
  KnowledgeSentence s;
  s.text = subject + " " + std::string(relation_template(t.relation)) + " " + object;
  s.source = t;
  s.substituted_chunk = chunk;
  return s;
}

}  // namespace kvqg
