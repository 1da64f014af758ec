#!/usr/bin/env python3
# Copyright 2026 The KVQG Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the kvqg command line.

Usage: cli_test.py <path to kvqg> [unittest args]
"""

import gzip
import http.server
import json
import os
import shutil
import socket
import subprocess
import sys
import tempfile
import threading
import time
import unittest
import urllib.error
import urllib.request

import jsonschema

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SAMPLE = os.path.join(ROOT, "data", "sample")
SCHEMAS = os.path.join(ROOT, "schemas")
FIXTURES = os.path.join(ROOT, "tests", "data")
KVQG = None


def schema(name):
    with open(os.path.join(SCHEMAS, name + ".schema.json")) as f:
        return json.load(f)


def check(instance, name):
    jsonschema.validate(instance, schema(name))


def run(*args, cwd=None, ok=True, env=None):
    p = subprocess.run([KVQG, *args], cwd=cwd, capture_output=True, text=True, env=env)
    if ok and p.returncode != 0:
        raise AssertionError("kvqg %s failed (%d): %s %s" % (args, p.returncode, p.stdout, p.stderr))
    return p


def load(path):
    with open(path) as f:
        return json.load(f)


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def call(method, url, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


PIPELINE_FILES = ["kg.idx", "index.json", "skips.tsv", "candidates.json", "rank.json",
                  "verbalize.json", "tasks.json", "d_train.json", "d_val.json", "d_split.json",
                  "stats.json"]


def pipeline(work):
    """index -> candidates -> rank -> verbalize -> assemble -> split -> stats."""
    shutil.copy(os.path.join(SAMPLE, "assertions.csv"), work)
    shutil.copy(os.path.join(SAMPLE, "captions.json"), work)
    shutil.copy(os.path.join(FIXTURES, "stats20.json"), os.path.join(work, "dataset.json"))
    run("index", "--dump", "assertions.csv", "--out", "kg.idx", "--skip-report", "skips.tsv",
        cwd=work).stdout
    with open(os.path.join(work, "index.json"), "w") as f:
        f.write(run("index", "--dump", "assertions.csv", "--out", "kg.idx", cwd=work).stdout)
    common = ["--caption-file", "captions.json", "--index", "kg.idx", "--seed", "7"]
    run("candidates", *common, "--out", "candidates.json", cwd=work)
    run("rank", *common, "--scorer", "lexical", "--k", "10", "--out", "rank.json", cwd=work)
    triplets = [{"head": c["head"], "relation": c["relation"], "tail": c["tail"]}
                for r in load(os.path.join(work, "rank.json")) for c in r["ranked"]]
    with open(os.path.join(work, "triplets.json"), "w") as f:
        json.dump(triplets, f)
    run("verbalize", "--in", "triplets.json", "--out", "verbalize.json", cwd=work)
    run("assemble", "--ranked", "rank.json", "--out", "tasks.json", cwd=work)
    run("split", "--in", "dataset.json", "--seed", "7", "--out-prefix", "d", cwd=work)
    run("stats", "--in", "dataset.json", "--out", "stats.json", cwd=work)


class PipelineTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.runs = [tempfile.mkdtemp(prefix="kvqg-cli-") for _ in range(2)]
        for w in cls.runs:
            pipeline(w)

    @classmethod
    def tearDownClass(cls):
        for w in cls.runs:
            shutil.rmtree(w, ignore_errors=True)

    def test_bit_reproducible(self):
        for name in PIPELINE_FILES:
            with open(os.path.join(self.runs[0], name), "rb") as a, \
                    open(os.path.join(self.runs[1], name), "rb") as b:
                self.assertEqual(a.read(), b.read(), name)

    def test_outputs_match_schemas(self):
        w = self.runs[0]
        check(json.loads(open(os.path.join(w, "index.json")).read()), "index-summary")
        check(load(os.path.join(w, "kg.idx")), "kg-index")
        check(load(os.path.join(w, "candidates.json")), "candidates")
        check(load(os.path.join(w, "rank.json")), "rank")
        check(load(os.path.join(w, "verbalize.json")), "verbalize")
        check(load(os.path.join(w, "tasks.json")), "tasks")
        check(load(os.path.join(w, "d_train.json")), "dataset")
        check(load(os.path.join(w, "d_val.json")), "dataset")
        check(load(os.path.join(w, "d_split.json")), "split-manifest")
        check(load(os.path.join(w, "stats.json")), "stats")
        check(load(os.path.join(SAMPLE, "captions.json")), "captions")
        check(load(os.path.join(ROOT, "data", "templates.json")), "templates")

    def test_rank_is_top_k_sorted(self):
        for r in load(os.path.join(self.runs[0], "rank.json")):
            self.assertLessEqual(len(r["ranked"]), 10)
            keys = [(-c["sentence_score"], c["sentence"]) for c in r["ranked"]]
            self.assertEqual(keys, sorted(keys))
            for c in r["ranked"]:
                self.assertTrue(0.2 <= c["topic_score"] <= 0.8)
                self.assertTrue(0.2 <= c["sentence_score"] <= 0.8)

    def test_index_counts_and_skip_report(self):
        summary = load(os.path.join(self.runs[0], "index.json"))
        self.assertEqual(summary["skipped"], 1)
        self.assertEqual(summary["filtered"], 3)
        with open(os.path.join(self.runs[0], "skips.tsv")) as f:
            line_no, reason = f.read().strip().split("\t")
        self.assertEqual(line_no, "21")

    def test_split_sizes(self):
        m = load(os.path.join(self.runs[0], "d_split.json"))
        self.assertEqual((len(m["train"]), len(m["val"])), (16, 4))
        self.assertFalse(set(m["train"]) & set(m["val"]))

    def test_stats_match_fixture(self):
        self.assertEqual(load(os.path.join(self.runs[0], "stats.json")),
                         load(os.path.join(FIXTURES, "stats20_expected.json")))

    def test_templates_file_is_current(self):
        out = json.loads(run("verbalize", "--templates").stdout)
        self.assertEqual(out, load(os.path.join(ROOT, "data", "templates.json")))


class ScorerTest(unittest.TestCase):
    def setUp(self):
        self.work = tempfile.mkdtemp(prefix="kvqg-cli-")
        run("index", "--dump", os.path.join(SAMPLE, "assertions.csv"), "--out",
            os.path.join(self.work, "kg.idx"))
        self.common = ["--caption-file", os.path.join(SAMPLE, "captions.json"),
                       "--index", os.path.join(self.work, "kg.idx"), "--seed", "7"]

    def tearDown(self):
        shutil.rmtree(self.work, ignore_errors=True)

    def write_scores(self, skip_first=False):
        cands = json.loads(run("candidates", *self.common).stdout)
        lines = []
        for r in cands:
            for c in r["candidates"]:
                sentence = json.loads(run("verbalize", "--head", c["head"], "--relation",
                                          c["relation"], "--tail", c["tail"]).stdout)["sentence"]
                lines.append({"caption_id": r["id"], "key": c["external_entity"], "score": 0.5})
                lines.append({"caption_id": r["id"], "key": sentence, "score": 0.6})
        if skip_first:
            lines = lines[1:]
        path = os.path.join(self.work, "scores.jsonl")
        with open(path, "w") as f:
            for line in lines:
                check(line, "score-record")
                f.write(json.dumps(line) + "\n")
        return path, cands

    def test_score_file(self):
        path, cands = self.write_scores()
        out = json.loads(run("rank", *self.common, "--scorer", "score-file",
                             "--score-file", path).stdout)
        for r, c in zip(out, cands):
            self.assertEqual(len(r["ranked"]), min(10, len(c["candidates"])))
            sentences = [x["sentence"] for x in r["ranked"]]
            self.assertEqual(sentences, sorted(sentences))

    def test_score_file_missing_key(self):
        path, _ = self.write_scores(skip_first=True)
        p = run("rank", *self.common, "--scorer", "score-file", "--score-file", path, ok=False)
        self.assertEqual(p.returncode, 1)
        check(json.loads(p.stdout), "error")

    def test_remote_scorer(self):
        seen = []

        class Handler(http.server.BaseHTTPRequestHandler):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                check(body, "score-request")
                seen.append(len(body["pairs"]))
                reply = {"scores": [0.5 for _ in body["pairs"]]}
                check(reply, "score-response")
                data = json.dumps(reply).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        server = http.server.HTTPServer(("127.0.0.1", 0), Handler)
        t = threading.Thread(target=server.serve_forever, daemon=True)
        t.start()
        try:
            url = "http://127.0.0.1:%d" % server.server_address[1]
            out = json.loads(run("rank", *self.common, "--scorer", "remote",
                                 "--scorer-url", url).stdout)
            self.assertTrue(seen)
            self.assertTrue(any(r["ranked"] for r in out))
            env = dict(os.environ, KVQG_SCORER_URL=url)
            run("rank", *self.common, "--scorer", "remote", env=env)
        finally:
            server.shutdown()
            server.server_close()
        p = run("rank", *self.common, "--scorer", "remote",
                "--scorer-url", "http://127.0.0.1:%d" % free_port(), ok=False)
        self.assertEqual(p.returncode, 1)
        self.assertEqual(json.loads(p.stdout)["kind"], "transport")


class CommandTest(unittest.TestCase):
    def test_usage_errors_exit_2(self):
        self.assertEqual(run("rank", ok=False).returncode, 2)
        self.assertEqual(run(ok=False).returncode, 2)
        self.assertEqual(run("split", "--in", "x.json", "--train-ratio", "0", ok=False).returncode, 2)
        self.assertEqual(run("eval", "--in", "x", "--bleu-order", "5", ok=False).returncode, 2)
        self.assertEqual(run("--help").returncode, 0)

    def test_data_errors_exit_1_with_json(self):
        for args in (["verbalize", "--head", "boat", "--relation", "Flies", "--tail", "water"],
                     ["stats", "--in", "/nonexistent/d.json"],
                     ["index", "--dump", "/nonexistent/a.csv"],
                     ["verbalize", "--head", "street", "--relation", "AtLocation", "--tail",
                      "mobile houses", "--chunk", "the water"]):
            p = run(*args, ok=False)
            self.assertEqual(p.returncode, 1, args)
            check(json.loads(p.stdout), "error")

    def test_verbalize_examples(self):
        out = json.loads(run("verbalize", "--head", "boat", "--relation", "AtLocation",
                             "--tail", "water").stdout)
        self.assertEqual(out["sentence"], "boat is at location of water")
        out = json.loads(run("verbalize", "--head", "ship", "--relation", "MadeOf",
                             "--tail", "steel", "--chunk", "A large ship").stdout)
        self.assertEqual(out["sentence"], "A large ship is made of steel")

    def test_eval_identity_and_schema(self):
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "preds.jsonl")
            with open(path, "w") as f:
                for i in range(5):
                    q = "what is next to building number %d ?" % i
                    f.write(json.dumps({"id": i, "candidate": q, "references": [q]}) + "\n")
            rep = json.loads(run("eval", "--in", path, "--per-item").stdout)
            check(rep, "eval")
            self.assertEqual(rep["bleu_1"], 1.0)
            self.assertEqual(rep["bleu_4"], 1.0)
            self.assertEqual(rep["rouge_l"], 1.0)
        for line in open(os.path.join(SAMPLE, "predictions.jsonl")):
            check(json.loads(line), "eval-input")
        check(json.loads(run("eval", "--in", os.path.join(SAMPLE, "predictions.jsonl")).stdout),
              "eval")

    def test_split_twice_identical(self):
        ds = os.path.join(FIXTURES, "stats20.json")
        a = run("split", "--in", ds, "--seed", "7").stdout
        b = run("split", "--in", ds, "--seed", "7").stdout
        self.assertEqual(a, b)
        self.assertNotEqual(a, run("split", "--in", ds, "--seed", "8").stdout)

    def test_config_file_and_flag_precedence(self):
        with tempfile.TemporaryDirectory() as d:
            cfg = os.path.join(d, "cfg.json")
            with open(cfg, "w") as f:
                json.dump({"seed": 3, "split": {"val-ratio": 3}}, f)
            ds = os.path.join(FIXTURES, "stats20.json")
            m = json.loads(run("split", "--config", cfg, "--in", ds).stdout)
            self.assertEqual((m["seed"], m["val_ratio"], len(m["val"])), (3, 3, 9))
            m = json.loads(run("split", "--config", cfg, "--in", ds, "--seed", "9").stdout)
            self.assertEqual(m["seed"], 9)

    def test_gzip_dump(self):
        with tempfile.TemporaryDirectory() as d:
            gz = os.path.join(d, "assertions.csv.gz")
            with open(os.path.join(SAMPLE, "assertions.csv"), "rb") as src, gzip.open(gz, "wb") as dst:
                dst.write(src.read())
            a = json.loads(run("index", "--dump", gz, "--out", os.path.join(d, "a.idx")).stdout)
            b = json.loads(run("index", "--dump", os.path.join(SAMPLE, "assertions.csv"),
                               "--out", os.path.join(d, "b.idx")).stdout)
            for k in ("entities", "relations", "triplets", "skipped"):
                self.assertEqual(a[k], b[k])


class ServeTest(unittest.TestCase):
    def setUp(self):
        self.work = tempfile.mkdtemp(prefix="kvqg-serve-")
        w = self.work
        run("index", "--dump", os.path.join(SAMPLE, "assertions.csv"), "--out", os.path.join(w, "kg.idx"))
        run("rank", "--caption-file", os.path.join(SAMPLE, "captions.json"), "--index",
            os.path.join(w, "kg.idx"), "--seed", "7", "--out", os.path.join(w, "rank.json"))
        run("assemble", "--ranked", os.path.join(w, "rank.json"), "--out", os.path.join(w, "tasks.json"))
        self.log = os.path.join(w, "annotations.jsonl")

    def tearDown(self):
        shutil.rmtree(self.work, ignore_errors=True)

    def start(self):
        port = free_port()
        proc = subprocess.Popen([KVQG, "serve", "--tasks", os.path.join(self.work, "tasks.json"),
                                 "--store", self.log, "--port", str(port)],
                                stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        url = "http://127.0.0.1:%d" % port
        for _ in range(100):
            try:
                urllib.request.urlopen(url + "/progress", timeout=1)
                return proc, url
            except OSError:
                time.sleep(0.05)
        proc.kill()
        raise AssertionError("server did not start")

    def stop(self, proc):
        proc.terminate()
        proc.wait(timeout=10)

    def test_session_and_dataset_export(self):
        proc, url = self.start()
        try:
            status, page = call("GET", url + "/tasks?status=pending")
            self.assertEqual(status, 200)
            chosen = None
            for t in page["tasks"]:
                _, task = call("GET", url + "/tasks/" + t["id"])
                for i, c in enumerate(task["candidates"]):
                    if c["suggested_chunks"]:
                        chosen = (task, i, task["answer_chunks"][c["suggested_chunks"][0]]["surface"])
                        break
                if chosen:
                    break
            self.assertIsNotNone(chosen)
            task, i, answer = chosen
            status, body = call("POST", url + "/tasks/%s/annotation" % task["id"],
                                {"candidate_index": i, "question": "What is in the image?",
                                 "answer": answer})
            self.assertEqual(status, 200, body)
            status, body = call("POST", url + "/tasks/%s/annotation" % task["id"],
                                {"candidate_index": i, "question": "Again?", "answer": answer})
            self.assertEqual(status, 409)
            check(body, "error")
            other = [t["id"] for t in page["tasks"] if t["id"] != task["id"]][0]
            status, body = call("POST", url + "/tasks/%s/annotation" % other,
                                {"candidate_index": 0, "question": "What?", "answer": "zebra crossing"})
            self.assertIn(status, (400, 422))
            check(body, "error")
            self.assertEqual(call("POST", url + "/tasks/%s/skip" % other)[0], 200)
            _, progress = call("GET", url + "/progress")
            self.assertEqual((progress["done"], progress["skipped"]), (1, 1))
            _, templates = call("GET", url + "/templates")
            check(templates, "templates")
        finally:
            self.stop(proc)

        for line in open(self.log):
            check(json.loads(line), "annotation-event")
        out = json.loads(run("assemble", "--ranked", os.path.join(self.work, "rank.json"),
                             "--annotations", self.log).stdout)
        check(out, "dataset")
        self.assertEqual(len(out), 1)

        proc, url = self.start()
        try:
            _, progress = call("GET", url + "/progress")
            self.assertEqual((progress["done"], progress["skipped"]), (1, 1))
        finally:
            self.stop(proc)

    def test_without_tasks_is_409(self):
        port = free_port()
        proc = subprocess.Popen([KVQG, "serve", "--port", str(port)],
                                stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        try:
            for _ in range(100):
                try:
                    status, body = call("GET", "http://127.0.0.1:%d/tasks" % port)
                    break
                except OSError:
                    time.sleep(0.05)
            self.assertEqual(status, 409)
            self.assertEqual(body["kind"], "uninitialized")
        finally:
            self.stop(proc)


if __name__ == "__main__":
    KVQG = os.path.abspath(sys.argv.pop(1))
    unittest.main()
