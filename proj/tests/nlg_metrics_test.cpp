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


#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "kvqg/nlg_metrics.hpp"
#include "oracles.hpp"

namespace kvqg::metrics {
namespace {

Tokens toks(std::string_view s) { return preprocess(s); }

EvalItem item(std::string_view cand, std::vector<std::string_view> refs, std::string id = "x") {
  EvalItem it{std::move(id), toks(cand), {}};
  for (auto r : refs) it.references.push_back(toks(r));
  return it;
}

Tokens random_tokens(std::mt19937& rng, size_t max_len, size_t vocab) {
  Tokens t(rng() % (max_len + 1));
  for (auto& w : t) w = "w" + std::to_string(rng() % vocab);
  return t;
}

EvalCorpus random_corpus(std::mt19937& rng, size_t items, size_t max_len, size_t vocab) {
  EvalCorpus c;
  for (size_t i = 0; i < items; ++i) {
    EvalItem it{std::to_string(i), random_tokens(rng, max_len, vocab), {}};
    const size_t nref = 1 + rng() % 3;
    for (size_t r = 0; r < nref; ++r) it.references.push_back(random_tokens(rng, max_len, vocab));
    c.push_back(std::move(it));
  }
  return c;
}

// Corpus BLEU rebuilt from the naive clipping oracle.
std::vector<double> bleu_oracle(const EvalCorpus& corpus, size_t max_n) {
  std::vector<double> m(max_n, 0), t(max_n, 0);
  double c = 0, r = 0;
  for (const auto& it : corpus) {
    for (size_t n = 1; n <= max_n; ++n) {
      auto [mm, tt] = oracle::clipped_matches(it.candidate, it.references, n);
      m[n - 1] += static_cast<double>(mm);
      t[n - 1] += static_cast<double>(tt);
    }
    c += static_cast<double>(it.candidate.size());
    size_t best = it.references[0].size();
    for (const auto& ref : it.references) {
      const auto d = [&](size_t x) { return x > it.candidate.size() ? x - it.candidate.size() : it.candidate.size() - x; };
      if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best)) best = ref.size();
    }
    r += static_cast<double>(best);
  }
  const double bp = c == 0 ? 0.0 : (c < r ? std::exp(1 - r / c) : 1.0);
  std::vector<double> out;
  double log_sum = 0;
  for (size_t n = 1; n <= max_n; ++n) {
    if (m[n - 1] == 0 || t[n - 1] == 0) {
      for (size_t k = n; k <= max_n; ++k) out.push_back(0.0);
      break;
    }
    log_sum += std::log(m[n - 1] / t[n - 1]);
    out.push_back(bp * std::exp(log_sum / static_cast<double>(n)));
  }
  return out;
}

// Plain CIDEr with n-grams as space-joined strings.
std::vector<double> cider_oracle(const EvalCorpus& corpus, size_t max_n, double scale) {
  using Vec = std::unordered_map<std::string, double>;
  auto grams = [](const Tokens& t, size_t n) {
    std::unordered_map<std::string, double> g;
    for (size_t i = 0; i + n <= t.size(); ++i) {
      std::string s;
      for (size_t k = i; k < i + n; ++k) s += t[k] + " ";
      g[s] += 1;
    }
    return g;
  };
  const double N = static_cast<double>(corpus.size());
  std::vector<double> out(corpus.size(), 0.0);
  for (size_t n = 1; n <= max_n; ++n) {
    std::unordered_map<std::string, double> df;
    for (const auto& it : corpus) {
      std::unordered_map<std::string, bool> in_doc;
      for (const auto& r : it.references)
        for (const auto& [g, c] : grams(r, n)) in_doc[g] = true;
      for (const auto& [g, b] : in_doc) df[g] += 1;
    }
    auto weigh = [&](Vec v) {
      for (auto& [g, x] : v) x *= std::log(N / std::max(1.0, df.count(g) ? df[g] : 0.0));
      return v;
    };
    for (size_t i = 0; i < corpus.size(); ++i) {
      const auto vc = weigh(grams(corpus[i].candidate, n));
      double acc = 0;
      for (const auto& r : corpus[i].references) {
        const auto vr = weigh(grams(r, n));
        double dot = 0, a = 0, b = 0;
        for (const auto& [g, x] : vc) {
          a += x * x;
          auto it = vr.find(g);
          if (it != vr.end()) dot += x * it->second;
        }
        for (const auto& [g, y] : vr) b += y * y;
        if (a > 0 && b > 0) acc += dot / std::sqrt(a * b);
      }
      out[i] += acc / static_cast<double>(corpus[i].references.size());
    }
  }
  for (auto& x : out) x *= scale / static_cast<double>(max_n);
  return out;
}

TEST(Preprocess, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(toks("What is near the Harbor?"), (Tokens{"what", "is", "near", "the", "harbor"}));
  EXPECT_TRUE(toks("?!").empty());
}

TEST(Bleu, Examples) {
  EvalCorpus same = {item("a boat is in the water", {"a boat is in the water"})};
  EXPECT_EQ(bleu(same), (std::vector<double>{1.0, 1.0, 1.0, 1.0}));

  auto c = clipped_count(toks("the the the the the the the"), {toks("the cat is on the mat")}, 1);
  EXPECT_EQ(c.matches, 2u);
  EXPECT_EQ(c.total, 7u);
  EvalCorpus papineni = {item("the the the the the the the", {"the cat is on the mat"})};
  EXPECT_NEAR(bleu(papineni, 1)[0], 2.0 / 7.0, 1e-12);

  EvalCorpus short_cand = {item("a b c", {"a b c d e f"})};
  EXPECT_NEAR(bleu(short_cand, 1)[0], std::exp(-1.0), 1e-12);

  EXPECT_THROW(bleu({}), ValidationError);
  EXPECT_THROW(bleu(same, 5), ValidationError);
  EXPECT_THROW(bleu({EvalItem{"x", toks("a"), {}}}), ValidationError);
}

TEST(Bleu, ClosestReferenceLengthPrefersShorterOnTie) {
  EXPECT_EQ(closest_ref_length(4, {toks("a b c"), toks("a b c d e")}), 3u);
  EXPECT_EQ(closest_ref_length(4, {toks("a b c d e"), toks("a b c")}), 3u);
}

TEST(Bleu, Smoothing) {
  EvalCorpus c = {item("a boat near water", {"a boat is in the water"}),
                  item("green trees", {"many green trees"})};
  const auto plain = bleu(c, 4, BleuSmoothing::kNone);
  const auto smooth = bleu(c, 4, BleuSmoothing::kAddOneSentence);
  EXPECT_EQ(plain[3], 0.0);
  EXPECT_GT(smooth[3], 0.0);
  // second item by hand: c=2, r=3, p1=2/2, p2=(1+1)/(1+1)
  const auto s2 = sentence_bleu(c[1], 2, BleuSmoothing::kAddOneSentence);
  EXPECT_NEAR(s2[1], std::exp(1.0 - 3.0 / 2.0), 1e-12);
}

TEST(Bleu, MatchesOracleOnRandomCorpora) {
  std::mt19937 rng(21);
  for (int iter = 0; iter < 300; ++iter) {
    auto c = random_corpus(rng, 1 + rng() % 5, 8, 5);
    const auto got = bleu(c, 4);
    const auto want = bleu_oracle(c, 4);
    for (size_t n = 0; n < 4; ++n) ASSERT_NEAR(got[n], want[n], 1e-12) << "iter " << iter;
  }
}

TEST(Bleu, ClippingMatchesOracle) {
  std::mt19937 rng(22);
  for (int iter = 0; iter < 500; ++iter) {
    const auto cand = random_tokens(rng, 10, 4);
    std::vector<Tokens> refs;
    for (size_t r = 0, k = 1 + rng() % 3; r < k; ++r) refs.push_back(random_tokens(rng, 10, 4));
    for (size_t n = 1; n <= 4; ++n) {
      const auto got = clipped_count(cand, refs, n);
      const auto [m, t] = oracle::clipped_matches(cand, refs, n);
      ASSERT_EQ(got.matches, m);
      ASSERT_EQ(got.total, t);
    }
  }
}

TEST(Meteor, Examples) {
  EvalCorpus none = {item("a b c", {"d e f"})};
  EXPECT_EQ(meteor(none), 0.0);
  EvalCorpus same = {item("one two three four five six", {"one two three four five six"})};
  EXPECT_NEAR(meteor(same), 1.0 - 0.5 / 216.0, 1e-12);
  EXPECT_NEAR(meteor(same), 0.99769, 5e-6);
  EvalCorpus reversed = {item("f e d c b a", {"a b c d e f"})};
  EXPECT_NEAR(meteor(reversed), 0.5, 1e-12);
  EXPECT_THROW(meteor({}), ValidationError);
}

TEST(Meteor, BestReferenceWins) {
  EvalCorpus c = {item("a b c", {"x y z", "a b c"})};
  EXPECT_NEAR(meteor(c), 1.0 - 0.5 / 27.0, 1e-12);
}

TEST(Meteor, AlignmentMatchesExhaustiveOracle) {
  std::mt19937 rng(23);
  for (int iter = 0; iter < 1000; ++iter) {
    const auto cand = random_tokens(rng, 7, 3);
    const auto ref = random_tokens(rng, 7, 3);
    const auto got = meteor_align(cand, ref);
    const auto [m, chunks] = oracle::meteor_min_chunks(cand, ref);
    ASSERT_EQ(got.matches, m);
    ASSERT_EQ(got.chunks, chunks);
  }
}

TEST(RougeL, Examples) {
  EvalCorpus same = {item("a b c", {"a b c"})};
  EXPECT_DOUBLE_EQ(rouge_l(same), 1.0);
  EXPECT_EQ(lcs_length(toks("a c d"), toks("a b c d")), 3u);
  const double r = 0.75, p = 1.0, b2 = 1.44;
  EvalCorpus sub = {item("a c d", {"a b c d"})};
  EXPECT_NEAR(rouge_l(sub), (1 + b2) * r * p / (r + b2 * p), 1e-12);
  EvalCorpus disjoint = {item("a b", {"c d"})};
  EXPECT_EQ(rouge_l(disjoint), 0.0);
  EXPECT_THROW(rouge_l({}), ValidationError);
}

TEST(RougeL, LcsMatchesEnumerationOracle) {
  std::mt19937 rng(24);
  for (int iter = 0; iter < 1000; ++iter) {
    const auto a = random_tokens(rng, 10, 4);
    const auto b = random_tokens(rng, 10, 4);
    ASSERT_EQ(lcs_length(a, b), oracle::lcs_by_enumeration(a, b));
  }
}

TEST(Cider, DegenerateCases) {
  EvalCorpus one = {item("a boat in the water", {"a boat in the water"})};
  EXPECT_EQ(cider(one), 0.0);

  EvalCorpus two = {item("a boat in the water", {"a boat in the water"}),
                    item("green trees near houses", {"tall trees near houses"})};
  const auto items = cider_items(two);
  EXPECT_NEAR(items[0], 10.0, 1e-9);
  EXPECT_NEAR(cider_items(two, 4, 3.5)[0], 3.5, 1e-9);

  EvalCorpus disjoint = {item("a b", {"c d"}), item("e f", {"e f"})};
  EXPECT_EQ(cider_items(disjoint)[0], 0.0);
  EXPECT_THROW(cider({}), ValidationError);
}

TEST(Cider, MatchesOracleOnRandomCorpora) {
  std::mt19937 rng(25);
  for (int iter = 0; iter < 200; ++iter) {
    auto c = random_corpus(rng, 1 + rng() % 6, 8, 6);
    const auto got = cider_items(c);
    const auto want = cider_oracle(c, 4, 10.0);
    for (size_t i = 0; i < c.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(Properties, RangesOnRandomCorpora) {
  std::mt19937 rng(26);
  for (int iter = 0; iter < 300; ++iter) {
    auto c = random_corpus(rng, 1 + rng() % 6, 9, 5);
    const auto rep = evaluate(c);
    for (double b : rep.bleu) {
      ASSERT_GE(b, 0.0);
      ASSERT_LE(b, 1.0);
    }
    ASSERT_GE(rep.meteor, 0.0);
    ASSERT_LE(rep.meteor, 1.0);
    ASSERT_GE(rep.rouge_l, 0.0);
    ASSERT_LE(rep.rouge_l, 1.0 + 1e-15);
    ASSERT_GE(rep.cider, 0.0);
  }
}

TEST(Properties, InvariantUnderRelabeling) {
  std::mt19937 rng(27);
  for (int iter = 0; iter < 100; ++iter) {
    auto c = random_corpus(rng, 1 + rng() % 5, 8, 6);
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto relabel = [&](Tokens t) {
      for (auto& w : t) w = "v" + std::to_string(perm[std::stoi(w.substr(1))]);
      return t;
    };
    auto d = c;
    for (auto& it : d) {
      it.candidate = relabel(it.candidate);
      for (auto& r : it.references) r = relabel(r);
    }
    const auto a = evaluate(c), b = evaluate(d);
    for (size_t n = 0; n < 4; ++n) ASSERT_NEAR(a.bleu[n], b.bleu[n], 1e-12);
    ASSERT_NEAR(a.meteor, b.meteor, 1e-12);
    ASSERT_NEAR(a.rouge_l, b.rouge_l, 1e-12);
    ASSERT_NEAR(a.cider, b.cider, 1e-9);
  }
}

// Per-item METEOR, ROUGE-L and sentence BLEU never drop when a reference
// is duplicated. CIDEr divides by the reference count, so a duplicate can
// only leave its mean unchanged when it repeats every reference.
TEST(Properties, DuplicateReferenceNeverDecreases) {
  std::mt19937 rng(28);
  for (int iter = 0; iter < 300; ++iter) {
    auto c = random_corpus(rng, 1 + rng() % 4, 8, 5);
    auto d = c;
    const size_t k = rng() % d.size();
    d[k].references.push_back(d[k].references[rng() % d[k].references.size()]);
    const auto a = evaluate(c), b = evaluate(d);
    for (size_t i = 0; i < c.size(); ++i) {
      ASSERT_GE(b.items[i].meteor, a.items[i].meteor - 1e-12);
      ASSERT_GE(b.items[i].rouge_l, a.items[i].rouge_l - 1e-12);
      for (size_t n = 0; n < 4; ++n) ASSERT_GE(b.items[i].bleu[n], a.items[i].bleu[n] - 1e-12);
    }
    auto e = c;
    for (auto& it : e) {
      const auto refs = it.references;
      it.references.insert(it.references.end(), refs.begin(), refs.end());
    }
    const auto ce = cider_items(e), cc = cider_items(c);
    for (size_t i = 0; i < c.size(); ++i) ASSERT_GE(ce[i], cc[i] - 1e-9);
  }
}

TEST(Report, IdentityCorpus) {
  EvalCorpus c;
  for (int i = 0; i < 50; ++i)
    c.push_back(item("what is the item number " + std::to_string(i) + " made of",
                     {"what is the item number " + std::to_string(i) + " made of"},
                     std::to_string(i)));
  const auto rep = evaluate(c);
  EXPECT_EQ(rep.bleu, (std::vector<double>{1.0, 1.0, 1.0, 1.0}));
  EXPECT_EQ(rep.rouge_l, 1.0);
  for (size_t i = 0; i < c.size(); ++i) {
    const double m = static_cast<double>(c[i].candidate.size());
    EXPECT_GE(rep.items[i].meteor, 1.0 - 0.5 / (m * m * m) - 1e-15);
  }
  const auto j = rep.to_json(true);
  EXPECT_EQ(j.at("bleu_1"), 1.0);
  EXPECT_EQ(j.at("per_item").size(), 50u);
}

TEST(EvalInput, ReadsJsonLines) {
  std::istringstream in(R"({"id":"q1","candidate":"What is near the boat?","references":["What is near the boat ?"]}

{"candidate":"a","references":["a","b"]}
)");
  auto c = read_eval_jsonl(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].id, "q1");
  EXPECT_EQ(c[0].candidate, c[0].references[0]);
  EXPECT_EQ(c[1].id, "1");
  std::istringstream bad(R"({"candidate":"a","references":[]})");
  EXPECT_THROW(read_eval_jsonl(bad), SchemaError);
}

}  // namespace
}  // namespace kvqg::metrics
