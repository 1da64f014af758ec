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

// HTTP JSON API over a TaskStore:
//
//   GET  /tasks?status=&page=&page_size=
//   GET  /tasks/{id}
//   POST /tasks/{id}/annotation  {"candidate_index", "question", "answer"}
//   POST /tasks/{id}/skip
//   GET  /progress
//   GET  /templates
//
// Errors are {"error", "kind"[, "violations"]} with 400 (bad request),
// 404 (unknown task), 409 (conflict or uninitialized store) or 422
// (validation violations).

#pragma once

#include <filesystem>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "kvqg/annotation.hpp"
#include "kvqg/verbalizer.hpp"

namespace kvqg {

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, const Error& e) {
  nlohmann::json body = {{"error", e.what()}, {"kind", e.kind()}};
  int status = 400;
  if (auto* r = dynamic_cast<const RejectedError*>(&e)) {
    status = 422;
    body["violations"] = nlohmann::json::array();
    for (const auto& v : r->violations())
      body["violations"].push_back({{"code", v.code}, {"message", v.message}});
  } else if (dynamic_cast<const NotFoundError*>(&e)) {
    status = 404;
  } else if (dynamic_cast<const ConflictError*>(&e)) {
    status = 409;
  } else if (dynamic_cast<const IoError*>(&e)) {
    status = 500;
  }
  send_json(res, status, body);
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const std::exception& e) {
    send_json(res, 400, {{"error", e.what()}, {"kind", "bad-request"}});
  }
}

inline size_t size_param(const httplib::Request& req, const char* name, size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const auto v = req.get_param_value(name);
  size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (v.empty() || pos != v.size()) throw ValidationError(std::string("bad ") + name + " parameter");
  return static_cast<size_t>(n);
}

}  // namespace detail

// Registers the API routes on `server`. `static_dir`, when non-empty, is
// served at "/" for the browser bundle.
inline void mount_annotation_api(httplib::Server& server, TaskStore& store,
                                 const std::filesystem::path& static_dir = {}) {
  using detail::guarded;
  using detail::send_json;

  server.Get("/tasks", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<TaskStatus> status;
      if (req.has_param("status") && !req.get_param_value("status").empty()) {
        status = parse_status(req.get_param_value("status"));
        if (!status) throw ValidationError("unknown status filter");
      }
      const auto page = detail::size_param(req, "page", 1);
      const auto page_size = detail::size_param(req, "page_size", 20);
      nlohmann::json tasks = nlohmann::json::array();
      for (const auto& t : store.list_tasks(status, page, page_size))
        tasks.push_back({{"id", t.id},
                         {"image", t.image},
                         {"caption", t.caption},
                         {"status", status_name(t.status)},
                         {"candidates", t.candidates}});
      send_json(res, 200, {{"page", page}, {"page_size", page_size}, {"tasks", tasks}});
    });
  });

  server.Get(R"(/tasks/([^/]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, task_json(store.get_task(req.matches[1]), true)); });
  });

  server.Post(R"(/tasks/([^/]+)/annotation)",
              [&store](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  auto body = nlohmann::json::parse(req.body, nullptr, false);
                  if (body.is_discarded() || !body.is_object())
                    throw ValidationError("request body must be a JSON object");
                  if (!body.contains("candidate_index") ||
                      !body["candidate_index"].is_number_unsigned())
                    throw ValidationError("candidate_index must be a non-negative integer");
                  if (!body.contains("question") || !body["question"].is_string() ||
                      !body.contains("answer") || !body["answer"].is_string())
                    throw ValidationError("question and answer must be strings");
                  auto sample = store.submit(req.matches[1], body["candidate_index"].get<size_t>(),
                                             body["question"].get<std::string>(),
                                             body["answer"].get<std::string>());
                  send_json(res, 200, {{"status", "done"}, {"sample", to_json(sample)}});
                });
              });

  server.Post(R"(/tasks/([^/]+)/skip)", [&store](const httplib::Request& req,
                                                 httplib::Response& res) {
    guarded(res, [&] {
      store.skip(req.matches[1]);
      send_json(res, 200, {{"status", "skipped"}});
    });
  });

  server.Get("/progress", [&store](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      const auto p = store.progress();
      send_json(res, 200,
                {{"pending", p.pending}, {"done", p.done}, {"skipped", p.skipped}, {"total", p.total()}});
    });
  });

  server.Get("/templates", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, templates_json());
  });

  if (!static_dir.empty()) server.set_mount_point("/", static_dir.string());
}

}  // namespace kvqg
