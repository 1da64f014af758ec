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
#include <bitset>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kvqg/common.hpp"

namespace kvqg {

// The closed set of commonsense relations retained from the knowledge graph.
// Any other relation label is filtered out at parse time.
enum class RelationType : uint8_t {
  kHasA,
  kUsedFor,
  kCapableOf,
  kAtLocation,
  kHasSubEvent,
  kHasPrerequisite,
  kHasProperty,
  kCauses,
  kCreatedBy,
  kDefinedAs,
  kDesires,
  kMadeOf,
  kNotDesires,
  kReceivesAction,
};

inline constexpr size_t kNumRelations = 14;

inline constexpr std::array<RelationType, kNumRelations> kAllRelations = {
    RelationType::kHasA,          RelationType::kUsedFor,
    RelationType::kCapableOf,     RelationType::kAtLocation,
    RelationType::kHasSubEvent,   RelationType::kHasPrerequisite,
    RelationType::kHasProperty,   RelationType::kCauses,
    RelationType::kCreatedBy,     RelationType::kDefinedAs,
    RelationType::kDesires,       RelationType::kMadeOf,
    RelationType::kNotDesires,    RelationType::kReceivesAction,
};

inline constexpr std::array<std::string_view, kNumRelations> kRelationNames = {
    "HasA",      "UsedFor",     "CapableOf",  "AtLocation",      "HasSubEvent",
    "HasPrerequisite", "HasProperty", "Causes", "CreatedBy",     "DefinedAs",
    "Desires",   "MadeOf",      "NotDesires", "ReceivesAction",
};

inline std::string_view relation_name(RelationType r) {
  return kRelationNames[static_cast<size_t>(r)];
}

// Accepts "AtLocation" or a relation URI such as "/r/AtLocation".
inline std::optional<RelationType> parse_relation(std::string_view label) {
  if (label.starts_with("/r/")) label.remove_prefix(3);
  while (!label.empty() && label.back() == '/') label.remove_suffix(1);
  for (size_t i = 0; i < kNumRelations; ++i) {
    if (kRelationNames[i] == label) return kAllRelations[i];
  }
  return std::nullopt;
}

// Subset of the relation set used to filter dumps.
class RelationSet {
 public:
  RelationSet() = default;

  static RelationSet all() {
    RelationSet s;
    s.bits_.set();
    return s;
  }

  // Parses a comma-separated list of relation names. Unknown names throw.
  static RelationSet parse(std::string_view csv) {
    RelationSet s;
    for (auto part : text::split(csv, ',')) {
      part = text::trim(part);
      if (part.empty()) continue;
      auto r = parse_relation(part);
      if (!r) throw SchemaError("unknown relation '" + std::string(part) + "'");
      s.insert(*r);
    }
    return s;
  }

  void insert(RelationType r) { bits_.set(static_cast<size_t>(r)); }
  bool contains(RelationType r) const { return bits_.test(static_cast<size_t>(r)); }
  size_t size() const { return bits_.count(); }

 private:
  std::bitset<kNumRelations> bits_;
};

}  // namespace kvqg
