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

// Corpus-level text generation metrics: BLEU-1..4, METEOR (exact matching
// only), ROUGE-L and CIDEr. Candidates and references share one
// preprocessing step (lowercase, punctuation tokens removed).

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "kvqg/common.hpp"
#include "kvqg/text_extract.hpp"

namespace kvqg::metrics {

using Tokens = std::vector<std::string>;

struct EvalItem {
  std::string id;
  Tokens candidate;
  std::vector<Tokens> references;
};

using EvalCorpus = std::vector<EvalItem>;

inline Tokens preprocess(std::string_view text) {
  Tokens out;
  for (auto& t : tokenize(text)) {
    if (t.surface.size() == 1 && text::is_punct(t.surface[0])) continue;
    out.push_back(text::lower(t.surface));
  }
  return out;
}

inline void check_corpus(const EvalCorpus& corpus) {
  if (corpus.empty()) throw ValidationError("evaluation corpus is empty");
  for (const auto& item : corpus)
    if (item.references.empty())
      throw ValidationError("item '" + item.id + "' has no references");
}

// Eval file: JSON Lines of {"id", "candidate": str, "references": [str...]}.
inline EvalCorpus read_eval_jsonl(std::istream& in, const std::string& source = "eval input") {
  EvalCorpus corpus;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    const auto where = source + ":" + std::to_string(n);
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SchemaError(where + ": not a JSON object");
    if (!j.contains("candidate") || !j["candidate"].is_string())
      throw SchemaError(where + ": missing string field candidate");
    if (!j.contains("references") || !j["references"].is_array() || j["references"].empty())
      throw SchemaError(where + ": references must be a non-empty array");
    EvalItem item;
    if (j.contains("id")) item.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    else item.id = std::to_string(corpus.size());
    item.candidate = preprocess(j["candidate"].get<std::string>());
    for (const auto& r : j["references"]) {
      if (!r.is_string()) throw SchemaError(where + ": references must be strings");
      item.references.push_back(preprocess(r.get<std::string>()));
    }
    corpus.push_back(std::move(item));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// BLEU

using NgramCounts = std::map<std::vector<std::string>, size_t>;

inline NgramCounts count_ngrams(const Tokens& tokens, size_t n) {
  NgramCounts counts;
  if (n == 0 || tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[Tokens(tokens.begin() + static_cast<ptrdiff_t>(i),
                    tokens.begin() + static_cast<ptrdiff_t>(i + n))];
  return counts;
}

struct ClippedCount {
  size_t matches = 0;  // candidate n-grams, each clipped to its max reference count
  size_t total = 0;    // candidate n-grams
};

inline ClippedCount clipped_count(const Tokens& candidate, const std::vector<Tokens>& references,
                                  size_t n) {
  ClippedCount c;
  const auto cand = count_ngrams(candidate, n);
  NgramCounts max_ref;
  for (const auto& r : references)
    for (const auto& [g, k] : count_ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
  for (const auto& [g, k] : cand) {
    c.total += k;
    if (auto it = max_ref.find(g); it != max_ref.end()) c.matches += std::min(k, it->second);
  }
  return c;
}

// Reference length closest to the candidate's; ties go to the shorter one.
inline size_t closest_ref_length(size_t cand_len, const std::vector<Tokens>& references) {
  size_t best = references.front().size();
  for (const auto& r : references) {
    const auto d = [&](size_t len) {
      return len > cand_len ? len - cand_len : cand_len - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

inline double brevity_penalty(double cand_len, double ref_len) {
  if (cand_len <= 0) return 0.0;
  return cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
}

enum class BleuSmoothing { kNone, kAddOneSentence };

namespace detail {

struct BleuAccum {
  std::vector<double> matches, totals;
  double cand_len = 0, ref_len = 0;

  explicit BleuAccum(size_t max_n) : matches(max_n, 0.0), totals(max_n, 0.0) {}

  void add(const EvalItem& item) {
    for (size_t n = 1; n <= matches.size(); ++n) {
      auto c = clipped_count(item.candidate, item.references, n);
      matches[n - 1] += static_cast<double>(c.matches);
      totals[n - 1] += static_cast<double>(c.total);
    }
    cand_len += static_cast<double>(item.candidate.size());
    ref_len += static_cast<double>(closest_ref_length(item.candidate.size(), item.references));
  }

  // [b1..b_max]. add_one smooths orders >= 2 with (m + 1) / (t + 1).
  std::vector<double> scores(bool add_one) const {
    std::vector<double> out;
    const double bp = brevity_penalty(cand_len, ref_len);
    double log_sum = 0.0;
    bool zero = false;
    for (size_t k = 0; k < matches.size(); ++k) {
      double m = matches[k], t = totals[k];
      if (add_one && k > 0) {
        m += 1.0;
        t += 1.0;
      }
      if (m <= 0.0 || t <= 0.0) zero = true;
      else log_sum += std::log(m / t);
      out.push_back(zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(k + 1)));
    }
    return out;
  }
};

inline void check_order(size_t max_n) {
  if (max_n < 1 || max_n > 4) throw ValidationError("BLEU order must be within 1..4");
}

}  // namespace detail

// Corpus BLEU with per-reference clipping and brevity penalty. With
// kAddOneSentence the result is instead the mean of smoothed sentence BLEU.
inline std::vector<double> bleu(const EvalCorpus& corpus, size_t max_n = 4,
                                BleuSmoothing smoothing = BleuSmoothing::kNone) {
  check_corpus(corpus);
  detail::check_order(max_n);
  if (smoothing == BleuSmoothing::kNone) {
    detail::BleuAccum acc(max_n);
    for (const auto& item : corpus) acc.add(item);
    return acc.scores(false);
  }
  std::vector<double> sum(max_n, 0.0);
  for (const auto& item : corpus) {
    detail::BleuAccum acc(max_n);
    acc.add(item);
    auto s = acc.scores(true);
    for (size_t k = 0; k < max_n; ++k) sum[k] += s[k];
  }
  for (auto& s : sum) s /= static_cast<double>(corpus.size());
  return sum;
}

inline std::vector<double> sentence_bleu(const EvalItem& item, size_t max_n = 4,
                                         BleuSmoothing smoothing = BleuSmoothing::kNone) {
  detail::check_order(max_n);
  detail::BleuAccum acc(max_n);
  acc.add(item);
  return acc.scores(smoothing == BleuSmoothing::kAddOneSentence);
}

// ---------------------------------------------------------------------------
// METEOR

struct MeteorAlignment {
  size_t matches = 0;
  size_t chunks = 0;
};

namespace detail {

// Exact-match alignment with the maximum number of matches and, among those,
// the fewest chunks. Memoized search over (candidate position, previous
// reference position, used reference positions).
class MeteorAligner {
 public:
  MeteorAligner(const Tokens& cand, const Tokens& ref) : cand_(cand), ref_(ref) {
    std::unordered_map<std::string, size_t> rc, cc;
    for (const auto& w : ref_) ++rc[w];
    for (const auto& w : cand_) ++cc[w];
    for (size_t j = 0; j < ref_.size(); ++j) ref_pos_[ref_[j]].push_back(j);
    for (const auto& [w, k] : cc) {
      auto it = rc.find(w);
      const size_t m = it == rc.end() ? 0 : std::min(k, it->second);
      needed_[w] = m;
      matches_ += m;
    }
    used_.assign(ref_.size(), false);
  }

  MeteorAlignment run() {
    if (matches_ == 0) return {};
    // later_[i] = occurrences of cand_[i] at positions > i
    later_.assign(cand_.size(), 0);
    std::unordered_map<std::string, size_t> seen;
    for (size_t i = cand_.size(); i-- > 0;) later_[i] = seen[cand_[i]]++;
    const size_t chunks = solve(0, kNone);
    return {matches_, chunks};
  }

 private:
  static constexpr size_t kNone = std::numeric_limits<size_t>::max();
  static constexpr size_t kInf = std::numeric_limits<size_t>::max() / 4;

  std::string state_key(size_t i, size_t prev) const {
    std::string k = std::to_string(i) + ":" + (prev == kNone ? "-" : std::to_string(prev)) + ":";
    for (bool u : used_) k += u ? '1' : '0';
    return k;
  }

  size_t solve(size_t i, size_t prev) {
    if (i == cand_.size()) return 0;
    auto key = state_key(i, prev);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const std::string& w = cand_[i];
    size_t best = kInf;
    size_t& need = needed_[w];
    if (need > 0) {
      for (size_t j : ref_pos_[w]) {
        if (used_[j]) continue;
        const size_t cost = (prev != kNone && j == prev + 1) ? 0 : 1;
        used_[j] = true;
        --need;
        const size_t rest = solve(i + 1, j);
        ++need;
        used_[j] = false;
        if (rest != kInf) best = std::min(best, cost + rest);
      }
    }
    if (later_[i] >= need) best = std::min(best, solve(i + 1, kNone));
    memo_.emplace(std::move(key), best);
    return best;
  }

  const Tokens& cand_;
  const Tokens& ref_;
  std::unordered_map<std::string, std::vector<size_t>> ref_pos_;
  std::unordered_map<std::string, size_t> needed_;
  std::vector<bool> used_;
  std::vector<size_t> later_;
  std::unordered_map<std::string, size_t> memo_;
  size_t matches_ = 0;
};

}  // namespace detail

inline MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference) {
  return detail::MeteorAligner(candidate, reference).run();
}

// Fmean * (1 - penalty) against one reference.
inline double meteor_sentence(const Tokens& candidate, const Tokens& reference) {
  const auto a = meteor_align(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(a.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

inline double meteor_item(const EvalItem& item) {
  double best = 0.0;
  for (const auto& r : item.references) best = std::max(best, meteor_sentence(item.candidate, r));
  return best;
}

inline double meteor(const EvalCorpus& corpus) {
  check_corpus(corpus);
  double sum = 0.0;
  for (const auto& item : corpus) sum += meteor_item(item);
  return sum / static_cast<double>(corpus.size());
}

// ---------------------------------------------------------------------------
// ROUGE-L

inline size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<size_t> row(b.size() + 1, 0), prev(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j)
      row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
    std::swap(row, prev);
  }
  return prev[b.size()];
}

inline double rouge_l_sentence(const Tokens& candidate, const Tokens& reference, double beta) {
  const size_t l = lcs_length(candidate, reference);
  if (l == 0) return 0.0;
  const double r = static_cast<double>(l) / static_cast<double>(reference.size());
  const double p = static_cast<double>(l) / static_cast<double>(candidate.size());
  const double b2 = beta * beta;
  return ((1.0 + b2) * r * p) / (r + b2 * p);
}

inline double rouge_l_item(const EvalItem& item, double beta = 1.2) {
  double best = 0.0;
  for (const auto& r : item.references)
    best = std::max(best, rouge_l_sentence(item.candidate, r, beta));
  return best;
}

inline double rouge_l(const EvalCorpus& corpus, double beta = 1.2) {
  check_corpus(corpus);
  double sum = 0.0;
  for (const auto& item : corpus) sum += rouge_l_item(item, beta);
  return sum / static_cast<double>(corpus.size());
}

// ---------------------------------------------------------------------------
// CIDEr

// Per-item CIDEr scores. Document frequencies come from the reference sets,
// one document per item; idf = log(N) - log(max(1, df)).
inline std::vector<double> cider_items(const EvalCorpus& corpus, size_t max_n = 4,
                                       double scale = 10.0) {
  check_corpus(corpus);
  if (max_n < 1) throw ValidationError("CIDEr order must be >= 1");
  const double log_n = std::log(static_cast<double>(corpus.size()));
  std::vector<double> item_scores(corpus.size(), 0.0);
  for (size_t n = 1; n <= max_n; ++n) {
    std::map<Tokens, size_t> df;
    for (const auto& item : corpus) {
      std::set<Tokens> doc;
      for (const auto& r : item.references)
        for (const auto& [g, k] : count_ngrams(r, n)) doc.insert(g);
      for (const auto& g : doc) ++df[g];
    }
    auto idf = [&](const Tokens& g) {
      auto it = df.find(g);
      const double d = it == df.end() ? 1.0 : static_cast<double>(std::max<size_t>(1, it->second));
      return log_n - std::log(d);
    };
    auto vec = [&](const Tokens& toks) {
      std::map<Tokens, double> v;
      for (const auto& [g, k] : count_ngrams(toks, n)) v[g] = static_cast<double>(k) * idf(g);
      return v;
    };
    auto norm = [](const std::map<Tokens, double>& v) {
      double s = 0.0;
      for (const auto& [g, x] : v) s += x * x;
      return std::sqrt(s);
    };
    for (size_t i = 0; i < corpus.size(); ++i) {
      const auto& item = corpus[i];
      const auto vc = vec(item.candidate);
      const double nc = norm(vc);
      double sum = 0.0;
      for (const auto& r : item.references) {
        const auto vr = vec(r);
        const double nr = norm(vr);
        if (nc == 0.0 || nr == 0.0) continue;
        double dot = 0.0;
        for (const auto& [g, x] : vc)
          if (auto it = vr.find(g); it != vr.end()) dot += x * it->second;
        sum += dot / (nc * nr);
      }
      item_scores[i] += sum / static_cast<double>(item.references.size());
    }
  }
  for (auto& s : item_scores) s = scale * s / static_cast<double>(max_n);
  return item_scores;
}

inline double cider(const EvalCorpus& corpus, size_t max_n = 4, double scale = 10.0) {
  const auto items = cider_items(corpus, max_n, scale);
  double sum = 0.0;
  for (double s : items) sum += s;
  return sum / static_cast<double>(items.size());
}

// ---------------------------------------------------------------------------
// Report

struct MetricOptions {
  size_t bleu_order = 4;
  BleuSmoothing smoothing = BleuSmoothing::kNone;
  double rouge_beta = 1.2;
  double cider_scale = 10.0;
};

struct ItemScores {
  std::string id;
  std::vector<double> bleu;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

struct MetricReport {
  std::vector<double> bleu;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::vector<ItemScores> items;

  nlohmann::json to_json(bool per_item) const {
    nlohmann::json j = {{"bleu", bleu}, {"meteor", meteor}, {"rouge_l", rouge_l}, {"cider", cider}};
    for (size_t k = 0; k < bleu.size(); ++k) j["bleu_" + std::to_string(k + 1)] = bleu[k];
    if (per_item) {
      j["per_item"] = nlohmann::json::array();
      for (const auto& it : items)
        j["per_item"].push_back({{"id", it.id},
                                 {"bleu", it.bleu},
                                 {"meteor", it.meteor},
                                 {"rouge_l", it.rouge_l},
                                 {"cider", it.cider}});
    }
    return j;
  }
};

inline MetricReport evaluate(const EvalCorpus& corpus, const MetricOptions& opt = {}) {
  check_corpus(corpus);
  MetricReport rep;
  rep.bleu = bleu(corpus, opt.bleu_order, opt.smoothing);
  rep.meteor = meteor(corpus);
  rep.rouge_l = rouge_l(corpus, opt.rouge_beta);
  const auto cid = cider_items(corpus, 4, opt.cider_scale);
  double sum = 0.0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto& item = corpus[i];
    rep.items.push_back({item.id, sentence_bleu(item, opt.bleu_order, opt.smoothing),
                         meteor_item(item), rouge_l_item(item, opt.rouge_beta), cid[i]});
    sum += cid[i];
  }
  rep.cider = sum / static_cast<double>(corpus.size());
  return rep;
}

}  // namespace kvqg::metrics
