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

// Caption tokenization, lexicon-driven part-of-speech tagging and noun chunk
// extraction. Everything here is deterministic: the same caption and lexicon
// always produce the same tokens, tags and chunks.

#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kvqg/common.hpp"

namespace kvqg {

enum class PosTag : uint8_t { kNoun, kVerb, kAdj, kNum, kDet, kOther };

inline std::string_view pos_name(PosTag t) {
  switch (t) {
    case PosTag::kNoun: return "NOUN";
    case PosTag::kVerb: return "VERB";
    case PosTag::kAdj: return "ADJ";
    case PosTag::kNum: return "NUM";
    case PosTag::kDet: return "DET";
    case PosTag::kOther: return "OTHER";
  }
  return "OTHER";
}

inline std::optional<PosTag> parse_pos(std::string_view s) {
  if (s == "NOUN") return PosTag::kNoun;
  if (s == "VERB") return PosTag::kVerb;
  if (s == "ADJ") return PosTag::kAdj;
  if (s == "NUM") return PosTag::kNum;
  if (s == "DET") return PosTag::kDet;
  if (s == "OTHER") return PosTag::kOther;
  return std::nullopt;
}

struct Token {
  std::string surface;
  size_t position = 0;
  PosTag tag = PosTag::kOther;
};

struct NounChunk {
  std::string head_noun;  // lemma of the last NOUN in the span
  std::string surface;    // original casing, tokens joined by single spaces
  size_t begin = 0;       // token span [begin, end)
  size_t end = 0;
};

namespace detail {

inline bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 ||
         static_cast<unsigned char>(c) >= 0x80;
}

// Reads "key<TAB>value[<TAB>extra]" lines; blank lines and '#' comments skip.
template <typename Fn>
void read_tsv(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = text::split(t, '\t');
    if (fields.size() < 2)
      throw SchemaError(source + ":" + std::to_string(n) + ": expected word<TAB>value");
    fn(fields, n);
  }
}

inline std::ifstream open_or_throw(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " " + path.string());
  return in;
}

}  // namespace detail

// Splits on whitespace and punctuation. Punctuation becomes its own token,
// except hyphens and apostrophes inside words and decimal separators inside
// numbers. Case is preserved.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back({std::move(current), tokens.size(), PosTag::kOther});
      current.clear();
    }
  };
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (text::is_space(c)) {
      flush();
      continue;
    }
    if (text::is_punct(c)) {
      const bool prev_word = i > 0 && detail::is_alnum(text[i - 1]) && !current.empty();
      const bool next_word = i + 1 < text.size() && detail::is_alnum(text[i + 1]);
      const bool joiner = (c == '-' || c == '\'') && prev_word && next_word;
      const bool decimal = (c == '.' || c == ',') && prev_word && next_word &&
                           text::is_digit(text[i - 1]) && text::is_digit(text[i + 1]);
      if (joiner || decimal) {
        current += c;
        continue;
      }
      flush();
      tokens.push_back({std::string(1, c), tokens.size(), PosTag::kOther});
      continue;
    }
    current += c;
  }
  flush();
  return tokens;
}

// Word -> tag table, with optional lemma per entry. Keys are lowercase.
class Lexicon {
 public:
  struct Entry {
    PosTag tag = PosTag::kOther;
    std::string lemma;  // empty when the file gives none
  };

  Lexicon() = default;

  static Lexicon load(std::istream& in, const std::string& source = "lexicon") {
    Lexicon lex;
    detail::read_tsv(in, source, [&](const auto& f, size_t n) {
      auto tag = parse_pos(text::trim(f[1]));
      if (!tag)
        throw SchemaError(source + ":" + std::to_string(n) + ": unknown tag '" +
                          std::string(f[1]) + "'");
      Entry e{*tag, f.size() > 2 ? text::lower(text::trim(f[2])) : std::string{}};
      lex.entries_.insert_or_assign(text::lower(text::trim(f[0])), std::move(e));
    });
    return lex;
  }

  static Lexicon load_file(const std::filesystem::path& path) {
    auto in = detail::open_or_throw(path, "lexicon");
    return load(in, path.string());
  }

  void add(std::string_view word, PosTag tag, std::string lemma = {}) {
    entries_.insert_or_assign(text::lower(word), Entry{tag, std::move(lemma)});
  }

  const Entry* find(std::string_view lower_word) const {
    auto it = entries_.find(std::string(lower_word));
    return it == entries_.end() ? nullptr : &it->second;
  }

  size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, Entry> entries_;
};

// Plural -> singular by rule table with an exception list.
class Singularizer {
 public:
  Singularizer() = default;

  static Singularizer load(std::istream& in, const std::string& source = "exceptions") {
    Singularizer s;
    detail::read_tsv(in, source, [&](const auto& f, size_t) {
      s.exceptions_.insert_or_assign(text::lower(text::trim(f[0])),
                                     text::lower(text::trim(f[1])));
    });
    return s;
  }

  static Singularizer load_file(const std::filesystem::path& path) {
    auto in = detail::open_or_throw(path, "singularization exceptions");
    return load(in, path.string());
  }

  void add_exception(std::string_view plural, std::string_view singular) {
    exceptions_.insert_or_assign(text::lower(plural), text::lower(singular));
  }

  // Input is expected lowercase.
  std::string operator()(std::string_view w) const {
    if (auto it = exceptions_.find(std::string(w)); it != exceptions_.end()) return it->second;
    using text::ends_with;
    if (w.size() <= 3) return std::string(w);
    if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is"))
      return std::string(w);
    if (ends_with(w, "ies") && w.size() > 4)
      return std::string(w.substr(0, w.size() - 3)) + "y";
    if (ends_with(w, "sses") || ends_with(w, "ches") || ends_with(w, "shes") ||
        ends_with(w, "xes") || ends_with(w, "zes"))
      return std::string(w.substr(0, w.size() - 2));
    if (ends_with(w, "s")) return std::string(w.substr(0, w.size() - 1));
    return std::string(w);
  }

 private:
  std::unordered_map<std::string, std::string> exceptions_;
};

namespace detail {

inline bool looks_numeric(std::string_view w) {
  bool digit = false;
  for (char c : w) {
    if (text::is_digit(c)) {
      digit = true;
    } else if (c != '.' && c != ',') {
      return false;
    }
  }
  return digit;
}

inline PosTag suffix_tag(std::string_view w) {
  using text::ends_with;
  if (looks_numeric(w)) return PosTag::kNum;
  if (w.size() > 4 && ends_with(w, "ing")) return PosTag::kVerb;
  if (w.size() > 3 && ends_with(w, "ed")) return PosTag::kVerb;
  if (w.size() > 3 && ends_with(w, "ly")) return PosTag::kOther;
  for (std::string_view s : {"ous", "ful", "ive", "able", "ible", "less", "ish", "ic", "al"})
    if (w.size() > s.size() + 2 && ends_with(w, s)) return PosTag::kAdj;
  for (std::string_view s : {"tion", "sion", "ment", "ness", "ity"})
    if (w.size() > s.size() + 2 && ends_with(w, s)) return PosTag::kNoun;
  if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss")) return PosTag::kNoun;
  return PosTag::kOther;
}

}  // namespace detail

// Fills in tags: lexicon first, then suffix heuristics, else OTHER.
inline std::vector<Token> tag_pos(std::vector<Token> tokens, const Lexicon& lexicon) {
  for (auto& t : tokens) {
    const std::string w = text::lower(t.surface);
    if (const auto* e = lexicon.find(w)) {
      t.tag = e->tag;
    } else if (w.size() == 1 && text::is_punct(w[0])) {
      t.tag = PosTag::kOther;
    } else {
      t.tag = detail::suffix_tag(w);
    }
  }
  // "a small square": an adjective closing a determiner-led phrase with no
  // noun after it is read as the noun.
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].tag != PosTag::kDet) continue;
    size_t j = i + 1;
    while (j < tokens.size() && (tokens[j].tag == PosTag::kAdj || tokens[j].tag == PosTag::kNum)) ++j;
    if (j == i + 1 || tokens[j - 1].tag != PosTag::kAdj) continue;
    if (j < tokens.size() && tokens[j].tag == PosTag::kNoun) continue;
    tokens[j - 1].tag = PosTag::kNoun;
  }
  return tokens;
}

// Bundles the lexicon and singularizer behind the caption-level operations.
class TextExtractor {
 public:
  TextExtractor(Lexicon lexicon, Singularizer singularizer)
      : lexicon_(std::move(lexicon)), singularize_(std::move(singularizer)) {}

  static TextExtractor load(const std::filesystem::path& lexicon_path,
                            const std::filesystem::path& exceptions_path) {
    return TextExtractor(Lexicon::load_file(lexicon_path),
                         Singularizer::load_file(exceptions_path));
  }

  const Lexicon& lexicon() const { return lexicon_; }
  const Singularizer& singularizer() const { return singularize_; }

  std::vector<Token> tag(std::string_view caption) const {
    return tag_pos(tokenize(caption), lexicon_);
  }

  // Lemma of a tagged token: the lexicon's lemma when given, the singular
  // form for nouns, the lowercase surface otherwise.
  std::string lemma(const Token& t) const {
    const std::string w = text::lower(t.surface);
    if (const auto* e = lexicon_.find(w); e && !e->lemma.empty()) return e->lemma;
    if (t.tag == PosTag::kNoun) return singularize_(w);
    return w;
  }

  // Lemma of the last word of a phrase, treated as a noun.
  std::string head_lemma(std::string_view phrase) const {
    auto words = text::split_ws(phrase);
    if (words.empty()) return {};
    return lemma(Token{words.back(), 0, PosTag::kNoun});
  }

  // Distinct noun lemmas in first-occurrence order.
  std::vector<std::string> extract_nouns(std::string_view caption) const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& t : tag(caption)) {
      if (t.tag != PosTag::kNoun) continue;
      auto l = lemma(t);
      if (seen.insert(l).second) out.push_back(std::move(l));
    }
    return out;
  }

  // Maximal runs of DET/NUM/ADJ/NOUN tokens, trimmed to end on a NOUN.
  std::vector<NounChunk> extract_noun_chunks(std::string_view caption) const {
    return chunk(tag(caption));
  }

  std::vector<NounChunk> chunk(const std::vector<Token>& tokens) const {
    auto in_chunk = [](PosTag t) {
      return t == PosTag::kDet || t == PosTag::kNum || t == PosTag::kAdj || t == PosTag::kNoun;
    };
    std::vector<NounChunk> chunks;
    size_t i = 0;
    while (i < tokens.size()) {
      if (!in_chunk(tokens[i].tag)) {
        ++i;
        continue;
      }
      size_t j = i;
      while (j < tokens.size() && in_chunk(tokens[j].tag)) ++j;
      size_t end = j;
      while (end > i && tokens[end - 1].tag != PosTag::kNoun) --end;
      if (end > i) {
        NounChunk c;
        c.begin = i;
        c.end = end;
        c.head_noun = lemma(tokens[end - 1]);
        for (size_t k = i; k < end; ++k) {
          if (k > i) c.surface += ' ';
          c.surface += tokens[k].surface;
        }
        chunks.push_back(std::move(c));
      }
      i = j;
    }
    return chunks;
  }

 private:
  Lexicon lexicon_;
  Singularizer singularize_;
};

}  // namespace kvqg
