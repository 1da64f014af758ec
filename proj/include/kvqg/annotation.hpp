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

// Annotation task store. Tasks come from an assembly run (ranked candidates
// per caption); annotators pick a candidate, write a question and confirm an
// answer chunk. Every state change is appended to a JSON Lines log, and
// opening a store replays that log, so the log alone reproduces the state.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "kvqg/dataset.hpp"
#include "kvqg/ranker.hpp"
#include "kvqg/text_extract.hpp"
#include "kvqg/verbalizer.hpp"

namespace kvqg {

enum class TaskStatus { kPending, kDone, kSkipped };

inline std::string_view status_name(TaskStatus s) {
  switch (s) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kDone: return "done";
    case TaskStatus::kSkipped: return "skipped";
  }
  return "pending";
}

inline std::optional<TaskStatus> parse_status(std::string_view s) {
  if (s == "pending") return TaskStatus::kPending;
  if (s == "done") return TaskStatus::kDone;
  if (s == "skipped") return TaskStatus::kSkipped;
  return std::nullopt;
}

struct AnnotationTask {
  std::string id;
  std::string image;
  std::string caption;
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<RankedCandidate> candidates;  // sorted, at most k
  std::vector<NounChunk> answer_chunks;     // noun chunks of the caption
  TaskStatus status = TaskStatus::kPending;

  // Chunks whose head noun is the candidate's object endpoint.
  std::vector<size_t> suggested_chunks(size_t candidate_index) const {
    std::vector<size_t> out;
    const auto& obj = candidates.at(candidate_index).object_entity;
    for (size_t i = 0; i < answer_chunks.size(); ++i)
      if (normalize_concept(answer_chunks[i].head_noun) == normalize_concept(obj)) out.push_back(i);
    return out;
  }
};

inline nlohmann::json chunk_json(const NounChunk& c) {
  return {{"head_noun", c.head_noun}, {"surface", c.surface}, {"begin", c.begin}, {"end", c.end}};
}

inline NounChunk chunk_from_json(const nlohmann::json& j) {
  return {j.at("head_noun").get<std::string>(), j.at("surface").get<std::string>(),
          j.at("begin").get<size_t>(), j.at("end").get<size_t>()};
}

inline RankedCandidate ranked_from_json(const nlohmann::json& j) {
  auto rel = parse_relation(j.at("relation").get<std::string>());
  if (!rel) throw SchemaError("unknown relation '" + j.at("relation").get<std::string>() + "'");
  RankedCandidate r;
  r.triplet = {j.at("head").get<std::string>(), *rel, j.at("tail").get<std::string>(), 1.0};
  r.object_entity = j.at("object_entity").get<std::string>();
  r.external_entity = j.at("external_entity").get<std::string>();
  r.topic_score = j.at("topic_score").get<double>();
  r.sentence_score = j.at("sentence_score").get<double>();
  r.sentence = j.value("sentence", verbalize(r.triplet).text);
  return r;
}

// The task file form; status is not part of it (it lives in the log).
inline nlohmann::json task_json(const AnnotationTask& t, bool with_status) {
  nlohmann::json cands = nlohmann::json::array();
  for (size_t i = 0; i < t.candidates.size(); ++i) {
    auto c = ranked_json(t.candidates[i]);
    c["suggested_chunks"] = t.suggested_chunks(i);
    cands.push_back(std::move(c));
  }
  nlohmann::json chunks = nlohmann::json::array();
  for (const auto& c : t.answer_chunks) chunks.push_back(chunk_json(c));
  nlohmann::json j = {{"id", t.id},
                      {"image", t.image},
                      {"caption", t.caption},
                      {"provenance", t.provenance},
                      {"candidates", std::move(cands)},
                      {"answer_chunks", std::move(chunks)}};
  if (with_status) j["status"] = status_name(t.status);
  return j;
}

inline AnnotationTask task_from_json(const nlohmann::json& j, size_t position) {
  try {
    AnnotationTask t;
    t.id = j.at("id").get<std::string>();
    t.image = j.at("image").get<std::string>();
    t.caption = j.at("caption").get<std::string>();
    t.provenance = j.value("provenance", nlohmann::json::object());
    for (const auto& c : j.at("candidates")) t.candidates.push_back(ranked_from_json(c));
    for (const auto& c : j.value("answer_chunks", nlohmann::json::array()))
      t.answer_chunks.push_back(chunk_from_json(c));
    if (!std::is_sorted(t.candidates.begin(), t.candidates.end(), ranked_before))
      throw SchemaError("candidates of task " + t.id + " are not in ranked order");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("task " + std::to_string(position) + ": " + e.what());
  }
}

inline std::vector<AnnotationTask> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open task file " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw SchemaError("task file must hold a JSON array");
  std::vector<AnnotationTask> tasks;
  for (size_t i = 0; i < j.size(); ++i) tasks.push_back(task_from_json(j[i], i));
  return tasks;
}

// Submission rejected by sample validation; carries every violation.
class RejectedError : public ValidationError {
 public:
  explicit RejectedError(std::vector<Violation> v)
      : ValidationError("annotation rejected: " + codes(v)), violations_(std::move(v)) {}
  const char* kind() const noexcept override { return "rejected"; }
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string codes(const std::vector<Violation>& v) {
    std::vector<std::string> c;
    for (const auto& x : v) c.push_back(x.code);
    return text::join(c, ", ");
  }
  std::vector<Violation> violations_;
};

class UninitializedError : public ConflictError {
 public:
  UninitializedError() : ConflictError("task store is not initialized") {}
  const char* kind() const noexcept override { return "uninitialized"; }
};

struct TaskSummary {
  std::string id;
  std::string image;
  std::string caption;
  TaskStatus status = TaskStatus::kPending;
  size_t candidates = 0;
};

struct Progress {
  size_t pending = 0;
  size_t done = 0;
  size_t skipped = 0;
  size_t total() const { return pending + done + skipped; }
};

// Concurrent readers, one writer at a time. Submissions are atomic: the log
// append and the status flip happen together or not at all.
class TaskStore {
 public:
  explicit TaskStore(Singularizer singularizer = {}) : singularize_(std::move(singularizer)) {}

  // Loads tasks and replays the log at `log_path` (created if absent).
  void initialize(std::vector<AnnotationTask> tasks, std::filesystem::path log_path) {
    std::unique_lock lock(mu_);
    tasks_.clear();
    order_.clear();
    samples_.clear();
    for (auto& t : tasks) {
      t.status = TaskStatus::kPending;
      auto id = t.id;
      if (!tasks_.emplace(id, std::move(t)).second)
        throw SchemaError("duplicate task id " + id);
      order_.push_back(id);
    }
    std::sort(order_.begin(), order_.end());
    log_path_ = std::move(log_path);
    replay_locked();
    initialized_ = true;
  }

  bool initialized() const {
    std::shared_lock lock(mu_);
    return initialized_;
  }

  // Tasks ordered by id; pages are 1-based and a page past the end is empty.
  std::vector<TaskSummary> list_tasks(std::optional<TaskStatus> status, size_t page = 1,
                                      size_t page_size = 20) const {
    std::shared_lock lock(mu_);
    require_init();
    if (page == 0 || page_size == 0) throw ValidationError("page and page_size start at 1");
    std::vector<TaskSummary> matching;
    for (const auto& id : order_) {
      const auto& t = tasks_.at(id);
      if (status && t.status != *status) continue;
      matching.push_back({t.id, t.image, t.caption, t.status, t.candidates.size()});
    }
    const size_t begin = (page - 1) * page_size;
    if (begin >= matching.size()) return {};
    const size_t end = std::min(matching.size(), begin + page_size);
    return {matching.begin() + static_cast<ptrdiff_t>(begin),
            matching.begin() + static_cast<ptrdiff_t>(end)};
  }

  AnnotationTask get_task(const std::string& id) const {
    std::shared_lock lock(mu_);
    require_init();
    return find(id);
  }

  Sample submit(const std::string& id, size_t candidate_index, const std::string& question,
                const std::string& answer) {
    std::unique_lock lock(mu_);
    require_init();
    AnnotationTask& t = find(id);
    if (t.status != TaskStatus::kPending)
      throw ConflictError("task " + id + " is already " + std::string(status_name(t.status)));
    if (candidate_index >= t.candidates.size())
      throw ValidationError("candidate index " + std::to_string(candidate_index) +
                            " out of range for task " + id);
    Sample s = build_sample(t, t.candidates[candidate_index], question, answer);
    if (auto v = validate(s, singularize_); !v.empty()) throw RejectedError(std::move(v));
    append_locked({{"event", "submit"},
                   {"task_id", id},
                   {"candidate_index", candidate_index},
                   {"sample", to_json(s)}});
    t.status = TaskStatus::kDone;
    samples_.push_back(s);
    return s;
  }

  void skip(const std::string& id) {
    std::unique_lock lock(mu_);
    require_init();
    AnnotationTask& t = find(id);
    if (t.status != TaskStatus::kPending)
      throw ConflictError("task " + id + " is already " + std::string(status_name(t.status)));
    append_locked({{"event", "skip"}, {"task_id", id}});
    t.status = TaskStatus::kSkipped;
  }

  Progress progress() const {
    std::shared_lock lock(mu_);
    Progress p;
    for (const auto& [id, t] : tasks_) {
      switch (t.status) {
        case TaskStatus::kPending: ++p.pending; break;
        case TaskStatus::kDone: ++p.done; break;
        case TaskStatus::kSkipped: ++p.skipped; break;
      }
    }
    return p;
  }

  // Persisted samples in submission order.
  std::vector<Sample> samples() const {
    std::shared_lock lock(mu_);
    return samples_;
  }

  // Statuses and samples; two stores with equal snapshots are in the same state.
  nlohmann::json snapshot() const {
    std::shared_lock lock(mu_);
    nlohmann::json statuses = nlohmann::json::object();
    for (const auto& [id, t] : tasks_) statuses[id] = status_name(t.status);
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : samples_) samples.push_back(to_json(s));
    return {{"statuses", statuses}, {"samples", samples}};
  }

 private:
  void require_init() const {
    if (!initialized_) throw UninitializedError();
  }

  const AnnotationTask& find(const std::string& id) const {
    auto it = tasks_.find(id);
    if (it == tasks_.end()) throw NotFoundError("no task with id " + id);
    return it->second;
  }
  AnnotationTask& find(const std::string& id) {
    auto it = tasks_.find(id);
    if (it == tasks_.end()) throw NotFoundError("no task with id " + id);
    return it->second;
  }

  // The knowledge sentence substitutes the answer for the object endpoint
  // when the answer is a chunk headed by that endpoint.
  Sample build_sample(const AnnotationTask& t, const RankedCandidate& c,
                      const std::string& question, const std::string& answer) const {
    Sample s;
    s.id = t.id;
    s.image = t.image;
    s.caption = t.caption;
    s.triplet = {c.triplet.head, std::string(relation_name(c.triplet.relation)), c.triplet.tail};
    s.question = std::string(text::trim(question));
    s.answer = text::join(text::split_ws(answer), " ");
    s.provenance = t.provenance;
    if (!s.provenance.contains("dataset_name")) s.provenance["dataset_name"] = "";

    std::optional<NounChunk> chunk;
    for (const auto& ch : t.answer_chunks) {
      if (text::lower(ch.surface) == text::lower(s.answer) &&
          normalize_concept(ch.head_noun) == normalize_concept(c.object_entity)) {
        chunk = ch;
        chunk->surface = s.answer;
        break;
      }
    }
    if (!chunk && !s.answer.empty()) {
      auto words = text::split_ws(s.answer);
      const std::string head = singularize_(text::lower(words.back()));
      if (head == normalize_concept(c.object_entity))
        chunk = NounChunk{head, s.answer, 0, words.size()};
    }
    try {
      s.knowledge_sentence = verbalize(c.triplet, chunk).text;
    } catch (const ValidationError&) {
      s.knowledge_sentence = verbalize(c.triplet).text;
    }
    return s;
  }

  void append_locked(const nlohmann::json& event) {
    std::ofstream out(log_path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to annotation log " + log_path_.string());
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw IoError("failed writing annotation log " + log_path_.string());
  }

  void replay_locked() {
    std::ifstream in(log_path_, std::ios::binary);
    if (!in) return;  // fresh store
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::trim(line).empty()) continue;
      const auto where = log_path_.string() + ":" + std::to_string(n);
      auto e = nlohmann::json::parse(line, nullptr, false);
      if (e.is_discarded() || !e.is_object() || !e.contains("task_id") || !e["task_id"].is_string())
        throw SchemaError(where + ": malformed log event");
      const auto id = e["task_id"].get<std::string>();
      auto it = tasks_.find(id);
      if (it == tasks_.end()) throw SchemaError(where + ": unknown task " + id);
      if (it->second.status != TaskStatus::kPending)
        throw SchemaError(where + ": task " + id + " changed state twice");
      const auto event = e.value("event", "");
      if (event == "skip") {
        it->second.status = TaskStatus::kSkipped;
      } else if (event == "submit") {
        Sample s = sample_from_json(e.at("sample"), n);
        if (!validate(s, singularize_).empty())
          throw SchemaError(where + ": logged sample fails validation");
        it->second.status = TaskStatus::kDone;
        samples_.push_back(std::move(s));
      } else {
        throw SchemaError(where + ": unknown event '" + event + "'");
      }
    }
  }

  mutable std::shared_mutex mu_;
  bool initialized_ = false;
  Singularizer singularize_;
  std::map<std::string, AnnotationTask> tasks_;
  std::vector<std::string> order_;
  std::vector<Sample> samples_;
  std::filesystem::path log_path_;
};

}  // namespace kvqg
