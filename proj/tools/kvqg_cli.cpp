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

// kvqg: dataset construction and evaluation pipeline.
//
//   kvqg index      ConceptNet dump -> index file (+ skip report)
//   kvqg candidates captions + index -> one-step neighbor candidates
//   kvqg rank       captions + index + scorer -> top-k ranked triplets
//   kvqg verbalize  triplets -> knowledge sentences, or the template table
//   kvqg assemble   rank output -> annotation tasks; with a log -> dataset
//   kvqg split      dataset -> seeded train/val files + manifest
//   kvqg stats      dataset -> statistics
//   kvqg eval       predictions -> BLEU/METEOR/ROUGE-L/CIDEr report
//   kvqg serve      annotation HTTP service
//
// JSON goes to stdout (or --out), summaries to stderr. Usage errors exit 2,
// data errors exit 1 with {"error", "kind"} on stdout.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "kvqg/annotation.hpp"
#include "kvqg/annotation_server.hpp"
#include "kvqg/dataset.hpp"
#include "kvqg/kg_store.hpp"
#include "kvqg/nlg_metrics.hpp"
#include "kvqg/pipeline.hpp"
#include "kvqg/ranker.hpp"
#include "kvqg/scorer.hpp"
#include "kvqg/text_extract.hpp"
#include "kvqg/verbalizer.hpp"

#ifndef KVQG_DATA_DIR
#define KVQG_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_data_dir() {
  if (const char* env = std::getenv("KVQG_DATA_DIR"); env && *env) return env;
  return KVQG_DATA_DIR;
}

struct Options {
  std::string out;
  uint64_t seed = 0;
  std::string lexicon = default_data_dir() + "/lexicon.tsv";
  std::string exceptions = default_data_dir() + "/singular_exceptions.tsv";

  // index
  std::string dump;
  std::string relations;
  std::string skip_report;

  // candidates / rank
  std::string caption_file;
  std::string index;
  std::string scorer = "lexical";
  std::string score_file;
  std::string scorer_url;
  size_t k = 10;
  double band_lo = 0.2;
  double band_hi = 0.8;

  // verbalize
  bool templates = false;
  std::string head, relation, tail, chunk;

  // assemble / split / stats / eval
  std::string ranked;
  std::string annotations;
  std::string in;
  unsigned train_ratio = 4;
  unsigned val_ratio = 1;
  std::string out_prefix;
  bool per_item = false;
  double beta = 1.2;
  double cider_scale = 10.0;
  std::string smoothing = "none";
  size_t bleu_order = 4;

  // serve
  std::string tasks;
  std::string store;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
};

void emit(const Options& o, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (o.out.empty() || o.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw kvqg::IoError("cannot write " + o.out);
  f << text;
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kvqg::IoError(std::string("cannot open ") + what + " " + path);
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw kvqg::SchemaError(std::string(what) + " " + path + " is not valid JSON");
  return j;
}

kvqg::TextExtractor load_extractor(const Options& o) {
  return kvqg::TextExtractor::load(o.lexicon, o.exceptions);
}

std::unique_ptr<kvqg::Scorer> make_scorer(const Options& o, const kvqg::TextExtractor& ex) {
  if (o.scorer == "lexical") return std::make_unique<kvqg::LexicalScorer>(ex.singularizer());
  if (o.scorer == "score-file") {
    if (o.score_file.empty()) throw kvqg::ValidationError("--scorer score-file needs --score-file");
    return std::make_unique<kvqg::ScoreFileScorer>(kvqg::ScoreFileScorer::load_file(o.score_file));
  }
  if (o.scorer == "remote") {
    if (o.scorer_url.empty())
      throw kvqg::ValidationError("--scorer remote needs --scorer-url or KVQG_SCORER_URL");
    return std::make_unique<kvqg::RemoteScorer>(o.scorer_url);
  }
  throw kvqg::ValidationError("unknown scorer '" + o.scorer + "'");
}

int run_index(const Options& o) {
  auto relations = o.relations.empty() ? kvqg::RelationSet::all()
                                       : kvqg::RelationSet::parse(o.relations);
  auto result = kvqg::parse_dump_file(o.dump, relations);
  if (o.out.empty()) throw kvqg::ValidationError("index needs --out for the index file");
  result.index.save(o.out);
  if (!o.skip_report.empty()) {
    std::ofstream f(o.skip_report, std::ios::binary);
    if (!f) throw kvqg::IoError("cannot write " + o.skip_report);
    f << result.skip_report();
  }
  const auto& c = result.index.counts();
  json summary = {{"index", o.out},         {"lines", result.lines},
                  {"entities", c.entities}, {"relations", c.relations},
                  {"triplets", c.triplets}, {"skipped", result.skipped.size()},
                  {"filtered", result.filtered}, {"duplicates", result.duplicates}};
  std::cout << summary.dump(2) << "\n";
  std::cerr << "indexed " << c.triplets << " triplets over " << c.entities << " entities ("
            << result.skipped.size() << " lines skipped)\n";
  return 0;
}

int run_candidates(const Options& o) {
  auto ex = load_extractor(o);
  auto index = kvqg::KnowledgeIndex::load(o.index);
  json out = json::array();
  size_t total = 0;
  for (const auto& rec : kvqg::load_captions(o.caption_file, o.seed)) {
    auto r = kvqg::retrieve(rec, ex, index);
    total += r.candidates.size();
    out.push_back(kvqg::candidates_json(r));
  }
  emit(o, out);
  std::cerr << out.size() << " captions, " << total << " candidates\n";
  return 0;
}

int run_rank(const Options& o) {
  auto ex = load_extractor(o);
  auto index = kvqg::KnowledgeIndex::load(o.index);
  auto scorer = make_scorer(o, ex);
  kvqg::RankOptions opt;
  opt.topic_band = opt.sentence_band = kvqg::ScoreBand::checked(o.band_lo, o.band_hi);
  opt.k = o.k;
  json out = json::array();
  size_t kept = 0;
  for (const auto& rec : kvqg::load_captions(o.caption_file, o.seed)) {
    auto r = kvqg::rank_caption(rec, ex, index, *scorer, opt);
    kept += r.ranked.size();
    out.push_back(kvqg::ranking_json(r));
  }
  emit(o, out);
  std::cerr << out.size() << " captions ranked, " << kept << " candidates kept (k=" << o.k << ")\n";
  return 0;
}

json verbalize_one(const kvqg::TextExtractor& ex, const std::string& head,
                   const std::string& relation, const std::string& tail,
                   const std::string& chunk_surface) {
  auto rel = kvqg::parse_relation(relation);
  if (!rel) throw kvqg::ValidationError("unknown relation '" + relation + "'");
  kvqg::KnowledgeTriplet t{kvqg::normalize_concept(head), *rel, kvqg::normalize_concept(tail), 1.0};
  std::optional<kvqg::NounChunk> chunk;
  if (!chunk_surface.empty()) {
    auto words = kvqg::text::split_ws(chunk_surface);
    chunk = kvqg::NounChunk{ex.head_lemma(chunk_surface), kvqg::text::join(words, " "), 0, words.size()};
  }
  auto s = kvqg::verbalize(t, chunk);
  json j = kvqg::triplet_json(t);
  j["sentence"] = s.text;
  if (chunk) j["chunk"] = chunk->surface;
  return j;
}

int run_verbalize(const Options& o) {
  if (o.templates) {
    emit(o, kvqg::templates_json());
    return 0;
  }
  auto ex = load_extractor(o);
  if (!o.in.empty()) {
    auto in = read_json_file(o.in, "triplet file");
    if (!in.is_array()) throw kvqg::SchemaError("triplet file must hold a JSON array");
    json out = json::array();
    for (size_t i = 0; i < in.size(); ++i) {
      const auto& e = in[i];
      if (!e.is_object() || !e.contains("head") || !e.contains("relation") || !e.contains("tail"))
        throw kvqg::SchemaError("triplet " + std::to_string(i) + " needs head, relation and tail");
      out.push_back(verbalize_one(ex, e["head"].get<std::string>(), e["relation"].get<std::string>(),
                                  e["tail"].get<std::string>(), e.value("chunk", "")));
    }
    emit(o, out);
    return 0;
  }
  if (o.head.empty() || o.relation.empty() || o.tail.empty())
    throw kvqg::ValidationError("verbalize needs --templates, --in, or --head/--relation/--tail");
  emit(o, verbalize_one(ex, o.head, o.relation, o.tail, o.chunk));
  return 0;
}

int run_assemble(const Options& o) {
  auto tasks = kvqg::assemble_tasks(read_json_file(o.ranked, "rank output"), o.k);
  if (o.annotations.empty()) {
    json out = json::array();
    for (const auto& t : tasks) out.push_back(kvqg::task_json(t, false));
    emit(o, out);
    std::cerr << tasks.size() << " annotation tasks\n";
    return 0;
  }
  if (!fs::exists(o.annotations)) throw kvqg::IoError("annotation log " + o.annotations + " not found");
  auto ex = load_extractor(o);
  kvqg::TaskStore store(ex.singularizer());
  store.initialize(std::move(tasks), o.annotations);
  auto samples = store.samples();
  json out = json::array();
  for (const auto& s : samples) out.push_back(kvqg::to_json(s));
  emit(o, out);
  const auto p = store.progress();
  std::cerr << samples.size() << " samples assembled (" << p.pending << " pending, " << p.skipped
            << " skipped)\n";
  return 0;
}

int run_split(const Options& o) {
  auto samples = kvqg::load_dataset(o.in);
  kvqg::SplitSpec spec{o.train_ratio, o.val_ratio, o.seed};
  auto parts = kvqg::split(samples, spec);
  std::string prefix = o.out_prefix;
  if (prefix.empty()) {
    fs::path p(o.in);
    prefix = (p.parent_path() / p.stem()).string();
  }
  const auto train_path = prefix + "_train.json";
  const auto val_path = prefix + "_val.json";
  const auto manifest_path = prefix + "_split.json";
  kvqg::save_dataset(train_path, parts.train);
  kvqg::save_dataset(val_path, parts.val);
  json ids_train = json::array(), ids_val = json::array();
  for (const auto& s : parts.train) ids_train.push_back(s.id);
  for (const auto& s : parts.val) ids_val.push_back(s.id);
  json manifest = {{"source", o.in},           {"seed", o.seed},
                   {"train_ratio", o.train_ratio}, {"val_ratio", o.val_ratio},
                   {"train_file", train_path}, {"val_file", val_path},
                   {"train", ids_train},       {"val", ids_val}};
  {
    std::ofstream f(manifest_path, std::ios::binary);
    if (!f) throw kvqg::IoError("cannot write " + manifest_path);
    f << manifest.dump(2) << "\n";
  }
  emit(o, manifest);
  std::cerr << "split " << samples.size() << " samples: " << parts.train.size() << " train / "
            << parts.val.size() << " val (seed " << o.seed << ")\n";
  return 0;
}

int run_stats(const Options& o) {
  auto samples = kvqg::load_dataset(o.in);
  auto ex = load_extractor(o);
  auto st = kvqg::compute_stats(samples, ex);
  emit(o, st.to_json());
  std::cerr << st.samples << " samples, avg question length " << st.avg_len_q << "\n";
  return 0;
}

int run_eval(const Options& o) {
  std::ifstream in(o.in, std::ios::binary);
  if (!in) throw kvqg::IoError("cannot open " + o.in);
  auto corpus = kvqg::metrics::read_eval_jsonl(in, o.in);
  kvqg::metrics::MetricOptions opt;
  opt.bleu_order = o.bleu_order;
  opt.rouge_beta = o.beta;
  opt.cider_scale = o.cider_scale;
  if (o.smoothing == "none") opt.smoothing = kvqg::metrics::BleuSmoothing::kNone;
  else if (o.smoothing == "add-one-sentence") opt.smoothing = kvqg::metrics::BleuSmoothing::kAddOneSentence;
  else throw kvqg::ValidationError("unknown smoothing '" + o.smoothing + "'");
  auto rep = kvqg::metrics::evaluate(corpus, opt);
  emit(o, rep.to_json(o.per_item));
  std::cerr << corpus.size() << " items: BLEU-4 " << rep.bleu.back() << ", METEOR " << rep.meteor
            << ", ROUGE-L " << rep.rouge_l << ", CIDEr " << rep.cider << "\n";
  return 0;
}

httplib::Server* g_server = nullptr;

int run_serve(const Options& o) {
  auto ex = load_extractor(o);
  kvqg::TaskStore store(ex.singularizer());
  if (!o.tasks.empty()) store.initialize(kvqg::load_tasks(o.tasks), o.store);
  httplib::Server server;
  kvqg::mount_annotation_api(server, store, o.static_dir);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "serving on http://" << o.host << ":" << o.port
            << (store.initialized() ? "" : " (no tasks loaded)") << "\n";
  if (!server.listen(o.host, o.port)) throw kvqg::IoError("cannot listen on port " + std::to_string(o.port));
  return 0;
}

// Turns a JSON config object into command-line arguments for `sub`. Keys are
// option names without dashes; a nested object under the subcommand's name
// applies to that subcommand only and is applied last.
std::vector<std::string> config_args(const json& cfg, CLI::App* sub) {
  std::vector<std::string> args;
  auto add = [&](const std::string& key, const json& v) {
    if (key == "config") return;
    auto* opt = sub->get_option_no_throw("--" + key);
    if (!opt) return;
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back("--" + key);
      return;
    }
    args.push_back("--" + key);
    args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  };
  for (const auto& [k, v] : cfg.items())
    if (!v.is_object()) add(k, v);
  if (cfg.contains(sub->get_name()) && cfg[sub->get_name()].is_object())
    for (const auto& [k, v] : cfg[sub->get_name()].items()) add(k, v);
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Knowledge-aware VQG dataset construction and evaluation toolkit", "kvqg"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto common = [&](CLI::App* s) {
    s->add_option("--config", "JSON config file; command-line flags win");
    s->add_option("--out", o.out, "Write JSON output here instead of stdout");
    s->add_option("--seed", o.seed, "Seed for every stochastic step");
    s->add_option("--lexicon", o.lexicon, "POS lexicon (word<TAB>TAG)");
    s->add_option("--exceptions", o.exceptions, "Singularization exceptions");
  };

  auto* index = app.add_subcommand("index", "Build a knowledge index from a ConceptNet dump");
  common(index);
  index->add_option("--dump", o.dump, "Assertions TSV (.gz accepted)")->required();
  index->add_option("--relations", o.relations, "Comma-separated relation subset");
  index->add_option("--skip-report", o.skip_report, "Write skipped lines here");

  auto caption_inputs = [&](CLI::App* s) {
    s->add_option("--caption-file", o.caption_file, "Caption records (JSON array)")->required();
    s->add_option("--index", o.index, "Index file from `kvqg index`")->required();
  };
  auto* candidates = app.add_subcommand("candidates", "List one-step neighbor triplets per caption");
  common(candidates);
  caption_inputs(candidates);

  auto* rank = app.add_subcommand("rank", "Rank candidate triplets per caption");
  common(rank);
  caption_inputs(rank);
  rank->add_option("--scorer", o.scorer, "lexical | score-file | remote")
      ->check(CLI::IsMember({"lexical", "score-file", "remote"}));
  rank->add_option("--score-file", o.score_file, "Precomputed scores (JSON Lines)");
  rank->add_option("--scorer-url", o.scorer_url, "Remote scorer base URL")->envname("KVQG_SCORER_URL");
  rank->add_option("--k", o.k, "Candidates kept per caption");
  rank->add_option("--band-lo", o.band_lo, "Inclusive lower score bound");
  rank->add_option("--band-hi", o.band_hi, "Inclusive upper score bound");

  auto* verbalize = app.add_subcommand("verbalize", "Render triplets as knowledge sentences");
  common(verbalize);
  verbalize->add_flag("--templates", o.templates, "Print the relation template table");
  verbalize->add_option("--in", o.in, "JSON array of {head, relation, tail[, chunk]}");
  verbalize->add_option("--head", o.head);
  verbalize->add_option("--relation", o.relation);
  verbalize->add_option("--tail", o.tail);
  verbalize->add_option("--chunk", o.chunk, "Noun chunk replacing the matching endpoint");

  auto* assemble = app.add_subcommand("assemble", "Build annotation tasks, or a dataset from a log");
  common(assemble);
  assemble->add_option("--ranked", o.ranked, "Output of `kvqg rank`")->required();
  assemble->add_option("--k", o.k, "Candidates per task");
  assemble->add_option("--annotations", o.annotations, "Annotation log; emits the dataset");

  auto* split = app.add_subcommand("split", "Seeded train/validation split");
  common(split);
  split->add_option("--in", o.in, "Dataset file")->required();
  split->add_option("--train-ratio", o.train_ratio)->check(CLI::PositiveNumber);
  split->add_option("--val-ratio", o.val_ratio)->check(CLI::PositiveNumber);
  split->add_option("--out-prefix", o.out_prefix, "Prefix for _train/_val/_split files");

  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  common(stats);
  stats->add_option("--in", o.in, "Dataset file")->required();

  auto* eval = app.add_subcommand("eval", "BLEU, METEOR, ROUGE-L and CIDEr");
  common(eval);
  eval->add_option("--in", o.in, "Predictions (JSON Lines)")->required();
  eval->add_flag("--per-item", o.per_item, "Include per-item scores");
  eval->add_option("--beta", o.beta, "ROUGE-L recall weight");
  eval->add_option("--cider-scale", o.cider_scale);
  eval->add_option("--smoothing", o.smoothing, "none | add-one-sentence")
      ->check(CLI::IsMember({"none", "add-one-sentence"}));
  eval->add_option("--bleu-order", o.bleu_order)->check(CLI::Range(1, 4));

  auto* serve = app.add_subcommand("serve", "Annotation HTTP service");
  common(serve);
  serve->add_option("--tasks", o.tasks, "Task file from `kvqg assemble`");
  serve->add_option("--store", o.store, "Append-only annotation log")->envname("KVQG_STORE");
  serve->add_option("--host", o.host);
  serve->add_option("--port", o.port)->envname("KVQG_PORT");
  serve->add_option("--static", o.static_dir, "Directory with the UI bundle");

  // Config values are injected right after the subcommand so that explicit
  // flags, which come later, take precedence.
  std::vector<std::string> args(argv, argv + argc);
  if (argc > 1) {
    for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) {
      if (sub->get_name() != args[1]) continue;
      for (size_t i = 2; i + 1 < args.size(); ++i) {
        if (args[i] != "--config") continue;
        try {
          auto cfg = read_json_file(args[i + 1], "config file");
          if (!cfg.is_object()) throw kvqg::SchemaError("config file must hold a JSON object");
          auto extra = config_args(cfg, sub);
          args.insert(args.begin() + 2, extra.begin(), extra.end());
        } catch (const kvqg::Error& e) {
          std::cout << json{{"error", e.what()}, {"kind", e.kind()}}.dump() << "\n";
          return 1;
        }
        break;
      }
    }
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (o.scorer_url.empty())
    if (const char* env = std::getenv("KVQG_SCORER_URL")) o.scorer_url = env;

  try {
    if (index->parsed()) return run_index(o);
    if (candidates->parsed()) return run_candidates(o);
    if (rank->parsed()) return run_rank(o);
    if (verbalize->parsed()) return run_verbalize(o);
    if (assemble->parsed()) return run_assemble(o);
    if (split->parsed()) return run_split(o);
    if (stats->parsed()) return run_stats(o);
    if (eval->parsed()) return run_eval(o);
    if (serve->parsed()) return run_serve(o);
  } catch (const kvqg::Error& e) {
    std::cout << json{{"error", e.what()}, {"kind", e.kind()}}.dump() << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cout << json{{"error", e.what()}, {"kind", "error"}}.dump() << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
