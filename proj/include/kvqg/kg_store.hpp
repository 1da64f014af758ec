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

// Knowledge graph store: parses ConceptNet assertion dumps into a
// relation-filtered edge list with a concept adjacency index, and answers
// one-step neighborhood queries.

#pragma once

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kvqg/common.hpp"
#include "kvqg/relation.hpp"

namespace kvqg {

struct KnowledgeTriplet {
  std::string head;
  RelationType relation = RelationType::kHasA;
  std::string tail;
  double weight = 1.0;  // dump metadata; never read by ranking

  // Identity ignores weight.
  bool same_edge(const KnowledgeTriplet& o) const {
    return relation == o.relation && head == o.head && tail == o.tail;
  }
  std::string key() const {
    std::string k;
    k.reserve(head.size() + tail.size() + 20);
    k += head;
    k += '\t';
    k += relation_name(relation);
    k += '\t';
    k += tail;
    return k;
  }
};

// Maps a concept URI ("/c/en/mobile_houses/n") or a plain label to the
// canonical label form: URI prefix and sense suffix dropped, underscores as
// spaces, lowercase, single inner spaces. Idempotent.
inline std::string normalize_concept(std::string_view raw) {
  std::string_view s = text::trim(raw);
  std::string_view term = s;
  if (text::starts_with_icase(s, "/c/")) {
    auto parts = text::split(s, '/');
    // "", "c", lang, term, pos, sense...
    term = parts.size() > 3 ? parts[3] : std::string_view{};
  }
  std::string out;
  out.reserve(term.size());
  bool pending_space = false;
  for (char c : term) {
    if (c == '_' || text::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  // A plain label such as "_/c/en/x" reads as a URI once cleaned; URI output
  // never contains '/', so one more pass reaches the fixed point.
  if (text::starts_with_icase(out, "/c/")) return normalize_concept(out);
  return out;
}

struct IndexCounts {
  size_t entities = 0;
  size_t relations = 0;
  size_t triplets = 0;

  bool operator==(const IndexCounts&) const = default;
};

// Immutable once built; safe to share between concurrent readers.
class KnowledgeIndex {
 public:
  KnowledgeIndex() = default;

  std::span<const KnowledgeTriplet> edges() const { return edges_; }
  const IndexCounts& counts() const { return counts_; }
  bool empty() const { return edges_.empty(); }

  // Edge ids touching `concept` as head or tail, in insertion order.
  std::span<const uint32_t> neighbor_ids(std::string_view concept_label) const {
    auto it = adjacency_.find(std::string(concept_label));
    if (it == adjacency_.end()) return {};
    return it->second;
  }

  std::vector<KnowledgeTriplet> neighbors(std::string_view concept_label) const {
    std::vector<KnowledgeTriplet> out;
    for (uint32_t id : neighbor_ids(concept_label)) out.push_back(edges_[id]);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : edges_)
      edges.push_back({e.head, std::string(relation_name(e.relation)), e.tail, e.weight});
    return {{"format", "kvqg-index"}, {"version", 1}, {"edges", std::move(edges)}};
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write index file " + path.string());
    out << to_json().dump() << '\n';
    if (!out) throw IoError("failed writing index file " + path.string());
  }

  static KnowledgeIndex from_json(const nlohmann::json& j);

  static KnowledgeIndex load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read index file " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("index file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
  }

 private:
  friend class IndexBuilder;

  std::vector<KnowledgeTriplet> edges_;
  std::unordered_map<std::string, std::vector<uint32_t>> adjacency_;
  IndexCounts counts_;
};

// Single-writer construction. Duplicate (head, relation, tail) edges collapse
// to one entry keeping the maximum weight and the first insertion position.
class IndexBuilder {
 public:
  // Returns false when the edge was a duplicate.
  bool add(KnowledgeTriplet t) {
    auto [it, inserted] = by_key_.try_emplace(t.key(), static_cast<uint32_t>(index_.edges_.size()));
    if (!inserted) {
      auto& existing = index_.edges_[it->second];
      existing.weight = std::max(existing.weight, t.weight);
      return false;
    }
    const uint32_t id = it->second;
    index_.adjacency_[t.head].push_back(id);
    if (t.tail != t.head) index_.adjacency_[t.tail].push_back(id);
    relations_.insert(t.relation);
    index_.edges_.push_back(std::move(t));
    return true;
  }

  KnowledgeIndex build() && {
    index_.counts_.entities = index_.adjacency_.size();
    index_.counts_.relations = relations_.size();
    index_.counts_.triplets = index_.edges_.size();
    by_key_.clear();
    return std::move(index_);
  }

 private:
  KnowledgeIndex index_;
  std::unordered_map<std::string, uint32_t> by_key_;
  std::unordered_set<RelationType> relations_;
};

inline KnowledgeIndex KnowledgeIndex::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "kvqg-index")
    throw SchemaError("not a kvqg-index document");
  if (!j.contains("edges") || !j["edges"].is_array())
    throw SchemaError("index document has no edges array");
  IndexBuilder b;
  size_t n = 0;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 4 || !e[0].is_string() || !e[1].is_string() ||
        !e[2].is_string() || !e[3].is_number())
      throw SchemaError("malformed edge at position " + std::to_string(n));
    auto rel = parse_relation(e[1].get<std::string>());
    if (!rel) throw SchemaError("unknown relation at edge " + std::to_string(n));
    b.add({e[0].get<std::string>(), *rel, e[2].get<std::string>(), e[3].get<double>()});
    ++n;
  }
  return std::move(b).build();
}

struct SkipEntry {
  size_t line = 0;  // 1-based
  std::string reason;
};

struct DumpParseResult {
  KnowledgeIndex index;
  std::vector<SkipEntry> skipped;
  size_t lines = 0;
  size_t filtered = 0;    // well-formed but outside the relation or language filter
  size_t duplicates = 0;

  // One "line<TAB>reason" entry per skipped line.
  std::string skip_report() const {
    std::string out;
    for (const auto& s : skipped) {
      out += std::to_string(s.line);
      out += '\t';
      out += s.reason;
      out += '\n';
    }
    return out;
  }
};

namespace detail {

inline constexpr std::string_view kEnglishPrefix = "/c/en/";

// Feeds one dump line into the builder. Returns a skip reason on malformed
// input, an empty string otherwise.
inline std::string ingest_dump_line(std::string_view line, const RelationSet& relations,
                                    IndexBuilder& builder, DumpParseResult& result) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto fields = text::split(line, '\t');
  if (fields.size() != 5)
    return "expected 5 tab-separated fields, got " + std::to_string(fields.size());
  const std::string_view rel_uri = fields[1];
  if (!rel_uri.starts_with("/r/")) return "relation is not a /r/ URI";
  if (!fields[2].starts_with("/c/") || !fields[3].starts_with("/c/"))
    return "start or end is not a /c/ concept URI";
  auto rel = parse_relation(rel_uri);
  if (!rel || !relations.contains(*rel) || !fields[2].starts_with(kEnglishPrefix) ||
      !fields[3].starts_with(kEnglishPrefix)) {
    ++result.filtered;
    return {};
  }
  KnowledgeTriplet t{normalize_concept(fields[2]), *rel, normalize_concept(fields[3]), 1.0};
  if (t.head.empty() || t.tail.empty()) return "empty concept label";
  auto meta = nlohmann::json::parse(fields[4], nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded() || !meta.is_object()) return "metadata is not a JSON object";
  if (auto w = meta.find("weight"); w != meta.end()) {
    if (!w->is_number()) return "weight is not a number";
    t.weight = w->get<double>();
    if (t.weight < 0) return "negative weight";
  }
  if (!builder.add(std::move(t))) ++result.duplicates;
  return {};
}

// Calls `next_line(std::string&)` until it returns false.
template <typename NextLine>
DumpParseResult parse_lines(NextLine&& next_line, const RelationSet& relations) {
  DumpParseResult result;
  IndexBuilder builder;
  std::string line;
  while (next_line(line)) {
    ++result.lines;
    if (text::trim(line).empty()) continue;
    auto reason = ingest_dump_line(line, relations, builder, result);
    if (!reason.empty()) result.skipped.push_back({result.lines, std::move(reason)});
  }
  result.index = std::move(builder).build();
  return result;
}

}  // namespace detail

inline DumpParseResult parse_dump(std::istream& in,
                                  const RelationSet& relations = RelationSet::all()) {
  return detail::parse_lines(
      [&in](std::string& line) { return static_cast<bool>(std::getline(in, line)); },
      relations);
}

// Reads a dump from disk; files ending in ".gz" are decompressed on the fly.
inline DumpParseResult parse_dump_file(const std::filesystem::path& path,
                                       const RelationSet& relations = RelationSet::all()) {
  if (path.extension() == ".gz") {
    std::unique_ptr<gzFile_s, int (*)(gzFile)> gz(gzopen(path.c_str(), "rb"), gzclose);
    if (!gz) throw IoError("cannot open dump " + path.string());
    std::vector<char> buf(1 << 16);
    bool failed = false;
    auto next = [&](std::string& line) {
      line.clear();
      while (true) {
        if (gzgets(gz.get(), buf.data(), static_cast<int>(buf.size())) == nullptr) {
          int err = 0;
          gzerror(gz.get(), &err);
          if (err != Z_OK && err != Z_STREAM_END) failed = true;
          return !line.empty();
        }
        line += buf.data();
        if (!line.empty() && line.back() == '\n') {
          line.pop_back();
          return true;
        }
      }
    };
    auto result = detail::parse_lines(next, relations);
    if (failed) throw IoError("corrupt gzip stream in " + path.string());
    return result;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dump " + path.string());
  return parse_dump(in, relations);
}

}  // namespace kvqg
