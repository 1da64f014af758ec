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

// Similarity scorers used by the two ranking phases. A scorer maps a batch of
// (caption, text) pairs to scores in [0, 1]:
//
//   LexicalScorer    Jaccard overlap of content tokens; deterministic and
//                    dependency-free, the default for tests and bare runs.
//   ScoreFileScorer  replays precomputed scores from a JSON Lines file keyed
//                    on (caption_id, key).
//   RemoteScorer     POSTs pairs to an HTTP scoring service.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kvqg/common.hpp"
#include "kvqg/text_extract.hpp"

namespace kvqg {

class ScorerError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "scorer"; }
};

struct ScorePair {
  std::string_view caption_id;
  std::string_view a;  // caption text
  std::string_view b;  // entity label or verbalized triplet
};

inline double clamp_score(double s) {
  if (std::isnan(s)) return 0.0;
  return std::clamp(s, 0.0, 1.0);
}

class Scorer {
 public:
  virtual ~Scorer() = default;

  // One score per pair, same order, each clamped to [0, 1].
  virtual std::vector<double> score_batch(std::span<const ScorePair> pairs) const = 0;

  double score(std::string_view a, std::string_view b, std::string_view caption_id = {}) const {
    ScorePair p{caption_id, a, b};
    return score_batch({&p, 1}).front();
  }
};

class LexicalScorer final : public Scorer {
 public:
  LexicalScorer() = default;
  explicit LexicalScorer(Singularizer singularizer) : singularize_(std::move(singularizer)) {}

  std::vector<double> score_batch(std::span<const ScorePair> pairs) const override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(jaccard(content_tokens(p.a), content_tokens(p.b)));
    return out;
  }

  // Lowercased, singularized tokens minus punctuation and function words.
  std::set<std::string> content_tokens(std::string_view s) const {
    static const std::unordered_set<std::string_view> kStop = {
        "a", "an", "the", "of", "in", "on", "at", "to", "for", "with", "by", "and",
        "or", "is", "are", "was", "were", "be", "it", "its", "this", "that", "these",
        "those", "there", "some", "as", "from", "has", "have", "not", "into", "near"};
    std::set<std::string> out;
    for (const auto& t : tokenize(s)) {
      std::string w = text::lower(t.surface);
      if (w.size() == 1 && text::is_punct(w[0])) continue;
      if (kStop.contains(w)) continue;
      out.insert(singularize_(w));
    }
    return out;
  }

  static double jaccard(const std::set<std::string>& x, const std::set<std::string>& y) {
    if (x.empty() && y.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& w : x) inter += y.count(w);
    const size_t uni = x.size() + y.size() - inter;
    return clamp_score(static_cast<double>(inter) / static_cast<double>(uni));
  }

 private:
  Singularizer singularize_;
};

// Score file: JSON Lines of {"caption_id": str, "key": str, "score": number}.
class ScoreFileScorer final : public Scorer {
 public:
  static ScoreFileScorer load(std::istream& in, const std::string& source = "score file") {
    ScoreFileScorer s;
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::trim(line).empty()) continue;
      auto where = source + ":" + std::to_string(n);
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) throw SchemaError(where + ": not a JSON object");
      for (const char* f : {"caption_id", "key"})
        if (!j.contains(f) || !j[f].is_string())
          throw SchemaError(where + ": missing string field " + f);
      if (!j.contains("score") || !j["score"].is_number())
        throw SchemaError(where + ": missing numeric field score");
      const double score = clamp_score(j["score"].get<double>());
      auto k = make_key(j["caption_id"].get<std::string>(), j["key"].get<std::string>());
      auto [it, inserted] = s.scores_.emplace(std::move(k), score);
      if (!inserted && it->second != score)
        throw SchemaError(where + ": conflicting duplicate score for key '" +
                          j["key"].get<std::string>() + "'");
    }
    return s;
  }

  static ScoreFileScorer load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open score file " + path.string());
    return load(in, path.string());
  }

  std::vector<double> score_batch(std::span<const ScorePair> pairs) const override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
      auto it = scores_.find(make_key(p.caption_id, p.b));
      if (it == scores_.end())
        throw ScorerError("no score for caption '" + std::string(p.caption_id) + "' key '" +
                          std::string(p.b) + "'");
      out.push_back(it->second);
    }
    return out;
  }

  size_t size() const { return scores_.size(); }

 private:
  static std::string make_key(std::string_view caption_id, std::string_view key) {
    std::string k(caption_id);
    k += '\x1f';
    k += key;
    return k;
  }

  std::unordered_map<std::string, double> scores_;
};

// Client for POST /score {"pairs": [{"a", "b"}]} -> {"scores": [...]}.
// Any non-200 reply, transport failure or malformed body is a TransportError.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(std::string base_url, int timeout_seconds = 30)
      : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  }

  std::vector<double> score_batch(std::span<const ScorePair> pairs) const override {
    if (pairs.empty()) return {};
    nlohmann::json body;
    body["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs) body["pairs"].push_back({{"a", p.a}, {"b", p.b}});

    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    auto res = client.Post("/score", body.dump(), "application/json");
    if (!res)
      throw TransportError("scorer at " + base_url_ + " unreachable: " +
                           httplib::to_string(res.error()));
    if (res->status != 200)
      throw TransportError("scorer at " + base_url_ + " returned HTTP " +
                           std::to_string(res->status));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("scores") || !j["scores"].is_array())
      throw TransportError("scorer at " + base_url_ + " sent a malformed body");
    const auto& scores = j["scores"];
    if (scores.size() != pairs.size())
      throw TransportError("scorer returned " + std::to_string(scores.size()) +
                           " scores for " + std::to_string(pairs.size()) + " pairs");
    std::vector<double> out;
    out.reserve(scores.size());
    for (const auto& s : scores) {
      if (!s.is_number()) throw TransportError("scorer returned a non-numeric score");
      out.push_back(clamp_score(s.get<double>()));
    }
    return out;
  }

 private:
  std::string base_url_;
  int timeout_seconds_;
};

}  // namespace kvqg
