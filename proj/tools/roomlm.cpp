// roomlm: zero-shot room labelling for 3D scene graphs.
//
//   roomlm convert --house a.house [--house b.house] [--category-mapping tsv] --out scene.tsv
//   roomlm ingest  --scene scene.tsv --out graph.tsv [--object-space fine|coarse]
//   roomlm cooc    --graph graph.tsv --cooc gt|proxy --out cooc.tsv
//   roomlm infer   --graph graph.tsv --cooc-file cooc.tsv --out predictions.jsonl
//   roomlm eval    --predictions p1.jsonl [p2.jsonl ...] --out-dir reports/
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 backend failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "roomlm/cooccurrence.hpp"
#include "roomlm/errors.hpp"
#include "roomlm/evaluation.hpp"
#include "roomlm/house_convert.hpp"
#include "roomlm/inference.hpp"
#include "roomlm/ingest.hpp"
#include "roomlm/lm_scoring.hpp"
#include "roomlm/manifest.hpp"
#include "roomlm/remote_scorer.hpp"

namespace fs = std::filesystem;
using namespace roomlm;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kBackendFailure = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScorerFlags {
  std::string backend = "offline";
  std::uint64_t seed = 0;
  std::string bonus_table;
  std::size_t max_inflight = 1;
  std::string cache_dir;
  std::string article = "grammatical";

  void add_to(CLI::App& cmd) {
    cmd.add_option("--backend", backend, "Sentence scorer")->check(CLI::IsMember({"offline", "remote"}));
    cmd.add_option("--seed", seed, "Offline scorer seed");
    cmd.add_option("--bonus-table", bonus_table, "Offline scorer (object, room, bonus) table")
        ->check(CLI::ExistingFile);
    cmd.add_option("--max-inflight", max_inflight, "Maximum concurrent scorer calls")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--cache-dir", cache_dir, "Directory for the append-only sentence score cache");
    cmd.add_option("--article", article, "Article resolution in query sentences")
        ->check(CLI::IsMember({"grammatical", "literal"}));
  }

  void record(RunManifest& m) const {
    m.flags["backend"] = backend;
    m.flags["seed"] = std::to_string(seed);
    m.flags["bonus-table"] = bonus_table;
    m.flags["max-inflight"] = std::to_string(max_inflight);
    m.flags["cache-dir"] = cache_dir;
    m.flags["article"] = article;
    if (!bonus_table.empty()) m.add_input(bonus_table);
  }

  QueryTemplate query_template() const {
    QueryTemplate t;
    t.article_mode = parse_article_mode(article);
    return t;
  }
};

/// Owns the scorer stack: backend, then an optional caching layer on top.
struct ScorerStack {
  std::unique_ptr<SentenceScorer> backend;
  std::unique_ptr<ScoreCache> cache;
  std::unique_ptr<CachingScorer> cached;

  const SentenceScorer& get() const { return cached ? static_cast<const SentenceScorer&>(*cached) : *backend; }
};

ScorerStack make_scorer(const ScorerFlags& f) {
  ScorerStack s;
  if (f.backend == "offline") {
    auto bonuses = f.bonus_table.empty() ? std::vector<OfflineScorer::PairBonus>{}
                                         : OfflineScorer::load_bonus_table(f.bonus_table);
    s.backend = std::make_unique<OfflineScorer>(f.seed, std::move(bonuses));
  } else {
    RemoteConfig cfg = RemoteConfig::from_environment();
    if (cfg.endpoint.empty()) throw UsageError("--backend remote needs ROOMLM_ENDPOINT");
    cfg.max_inflight = f.max_inflight;
    s.backend = std::make_unique<RemoteScorer>(cfg);
  }
  if (!f.cache_dir.empty()) {
    const std::string name = "scores-" + digest_string(s.backend->identity()) + ".tsv";
    s.cache = std::make_unique<ScoreCache>(fs::path(f.cache_dir) / name);
    s.cached = std::make_unique<CachingScorer>(*s.backend, *s.cache);
  }
  return s;
}

std::string resolve_space(const SceneGraph& g, const std::string& which) {
  if (g.object_spaces.empty()) throw SchemaError("graph declares no object label spaces");
  if (which == "coarse") return g.object_spaces.front().name;
  if (which == "fine") {
    if (g.object_spaces.size() < 2) throw SchemaError("graph has no fine-grained label space");
    return g.object_spaces[1].name;
  }
  if (!g.find_object_space(which)) throw SchemaError("unknown label space '" + which + "'");
  return which;
}

/// The label space an ingest run selected, from the graph file's "# object_space" line.
std::string recorded_object_space(const std::string& graph_path) {
  std::ifstream in(graph_path);
  for (std::string line; std::getline(in, line) && !line.empty() && line.front() == '#';) {
    const std::string key = "# object_space\t";
    if (line.rfind(key, 0) == 0) return line.substr(key.size());
  }
  return "fine";
}

fs::path manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " '" + path + "' does not exist");
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + p.string() + "'");
  return out;
}

// --- commands ----------------------------------------------------------------

int cmd_convert(const std::vector<std::string>& houses, const std::string& mapping_path, const fs::path& out) {
  std::map<std::string, std::string> mapping;
  if (!mapping_path.empty()) {
    require_file(mapping_path, "category mapping");
    mapping = load_category_mapping(mapping_path);
  }
  RunManifest m;
  m.command = "convert";
  m.flags["category-mapping"] = mapping_path;
  SceneGraph all;
  for (const auto& h : houses) {
    require_file(h, "house file");
    std::ifstream in(h);
    try {
      merge_graphs(all, convert_house(in, mapping));
    } catch (const ParseError& e) {
      throw ParseError(h + ": " + e.what());
    }
    m.add_input(h);
  }
  if (!mapping_path.empty()) m.add_input(mapping_path);
  {
    auto f = open_out(out);
    f << "# manifest\t" << manifest_path(out).filename().string() << '\n';
    write_scene(f, all);
  }
  m.outputs = {out.string()};
  m.write(manifest_path(out));
  std::cout << "converted " << houses.size() << " house file(s): " << all.rooms.size() << " regions, "
            << all.objects.size() << " objects\n";
  return kOk;
}

int cmd_ingest(const std::string& scene, const fs::path& out, const std::string& object_space,
               const std::string& fixes_path, bool keep_generic) {
  require_file(scene, "scene file");
  IngestConfig cfg;
  cfg.keep_object_category_for_secondary_space = keep_generic;
  RunManifest m;
  m.command = "ingest";
  m.flags["object-space"] = object_space;
  m.flags["spelling-fixes"] = fixes_path;
  m.flags["keep-object-category"] = keep_generic ? "true" : "false";
  m.add_input(scene);
  if (!fixes_path.empty()) {
    require_file(fixes_path, "spelling-fix file");
    cfg.spelling_fixes = load_spelling_fixes(fixes_path);
    m.add_input(fixes_path);
  }

  SceneGraph raw = parse_scene_file(scene, cfg);
  const std::string space = resolve_space(raw, object_space);
  SceneGraph g = preprocess(raw, cfg, space);
  auto violations = validate(g);
  for (const auto& v : violations) std::cerr << "warning: " << v << '\n';

  {
    auto f = open_out(out);
    f << "# manifest\t" << manifest_path(out).filename().string() << '\n';
    f << "# object_space\t" << space << '\n';
    write_scene(f, g);
  }
  m.outputs = {out.string()};
  m.write(manifest_path(out));

  std::cout << "raw: " << raw.rooms.size() << " rooms, " << raw.objects.size() << " objects\n";
  std::cout << "preprocessed (" << space << "): " << g.rooms.size() << " rooms, " << g.objects.size()
            << " objects, " << g.find_object_space(space)->size() << " object labels, " << g.room_space.size()
            << " room labels\n";
  for (const auto& [label, n] : room_label_histogram(g)) {
    char pct[16];
    std::snprintf(pct, sizeof pct, "%.2f%%", g.rooms.empty() ? 0.0 : 100.0 * n / g.rooms.size());
    std::cout << "  " << label << '\t' << n << '\t' << pct << '\n';
  }
  return kOk;
}

int cmd_cooc(const std::string& graph_path, const std::string& mode, double alpha, const std::string& counting,
             const std::string& object_space, const ScorerFlags& sf, const fs::path& out) {
  require_file(graph_path, "graph file");
  RunManifest m;
  m.command = "cooc";
  m.flags["cooc"] = mode;
  m.flags["alpha"] = std::to_string(alpha);
  m.flags["counting"] = counting;
  m.flags["object-space"] = object_space;
  m.add_input(graph_path);

  IngestConfig cfg;
  SceneGraph g = parse_scene_file(graph_path, cfg);
  const std::string space =
      resolve_space(g, object_space.empty() ? recorded_object_space(graph_path) : object_space);

  CooccurrenceTable table;
  if (parse_provenance(mode) == Provenance::ground_truth) {
    table = count_ground_truth(g, space, alpha,
                               counting == "presence" ? CountingMode::presence : CountingMode::instances);
  } else {
    sf.record(m);
    ScorerStack scorer = make_scorer(sf);
    m.backend = scorer.get().identity();
    m.template_version = sf.query_template().identity();
    table = build_proxy_table(scorer.get(), g, space, sf.query_template(), sf.max_inflight);
  }
  {
    auto f = open_out(out);
    write_cooccurrence(f, table, manifest_path(out).filename().string());
  }
  m.outputs = {out.string()};
  m.write(manifest_path(out));
  std::cout << "co-occurrence table (" << to_string(table.provenance) << "): " << table.object_labels.size()
            << " object labels x " << table.room_labels.size() << " room labels\n";
  return kOk;
}

int cmd_infer(const std::string& graph_path, const std::string& cooc_path, int k, bool length_normalize,
              const ScorerFlags& sf, const fs::path& out) {
  require_file(graph_path, "graph file");
  require_file(cooc_path, "co-occurrence file");
  RunManifest m;
  m.command = "infer";
  m.flags["k"] = std::to_string(k);
  m.flags["length-normalize"] = length_normalize ? "true" : "false";
  sf.record(m);
  m.add_input(graph_path);
  m.add_input(cooc_path);

  IngestConfig cfg;
  SceneGraph g = parse_scene_file(graph_path, cfg);
  std::ifstream cin_(cooc_path);
  CooccurrenceTable table = read_cooccurrence(cin_);
  if (!g.find_object_space(table.object_space))
    throw SchemaError("co-occurrence table is over unknown label space '" + table.object_space + "'");
  if (table.room_labels != g.room_space.labels)
    throw SchemaError("co-occurrence table and graph disagree on room labels");

  ScorerStack scorer = make_scorer(sf);
  InferenceOptions opts;
  opts.k = k;
  opts.query_template = sf.query_template();
  opts.length_normalize = length_normalize;
  opts.max_inflight = sf.max_inflight;
  m.backend = scorer.get().identity();
  m.template_version = opts.query_template.identity();

  auto predictions = classify_graph(g, table, scorer.get(), opts);
  {
    auto f = open_out(out);
    write_predictions(f, predictions, table.room_labels, manifest_path(out).filename().string());
  }
  m.outputs = {out.string()};
  m.write(manifest_path(out));

  std::size_t failed = 0, correct = 0;
  for (const auto& p : predictions) {
    if (p.failed()) {
      ++failed;
      std::cerr << "room " << p.room_id << " failed: " << p.failure << '\n';
    }
    correct += p.correct();
  }
  std::cout << "classified " << predictions.size() - failed << " rooms (" << correct << " correct), " << failed
            << " failed\n";
  return failed ? kBackendFailure : kOk;
}

int cmd_eval(const std::vector<std::string>& files, const fs::path& out_dir) {
  std::vector<EvalReport> reports;
  fs::create_directories(out_dir);
  RunManifest m;
  m.command = "eval";
  for (const auto& path : files) {
    require_file(path, "prediction file");
    m.add_input(path);
    std::ifstream in(path);
    PredictionFile pf = read_predictions(in);
    EvalReport r = evaluate(pf.predictions, pf.room_labels);
    const std::string stem = fs::path(path).stem().string();
    const fs::path json_path = out_dir / (stem + ".report.json");
    {
      auto f = open_out(out_dir / (stem + ".report.txt"));
      write_report_text(f, r);
    }
    {
      auto f = open_out(json_path);
      write_report_json(f, r, "manifest.json");
    }
    {
      auto f = open_out(out_dir / (stem + ".labels.tsv"));
      emit_label_breakdown(f, r);
    }
    m.outputs.push_back((out_dir / (stem + ".report.txt")).string());
    m.outputs.push_back(json_path.string());
    m.outputs.push_back((out_dir / (stem + ".labels.tsv")).string());
    std::cout << path << ": ";
    char pct[16];
    std::snprintf(pct, sizeof pct, "%.2f%%", 100.0 * r.overall_accuracy);
    std::cout << pct << " over " << r.evaluated << " rooms\n";
    reports.push_back(std::move(r));
  }
  ConditionTable table = compare_conditions(reports);
  {
    auto f = open_out(out_dir / "conditions.txt");
    write_condition_table_text(f, table);
  }
  {
    auto f = open_out(out_dir / "conditions.json");
    write_condition_table_json(f, table);
  }
  m.outputs.push_back((out_dir / "conditions.txt").string());
  m.outputs.push_back((out_dir / "conditions.json").string());
  m.write(out_dir / "manifest.json");
  write_condition_table_text(std::cout, table);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot room labelling for 3D scene graphs with language-model sentence scoring"};
  app.require_subcommand(1);

  std::vector<std::string> houses;
  std::string mapping, out;
  auto* convert = app.add_subcommand("convert", "Convert Matterport .house files to the scene format");
  convert->add_option("--house", houses, "Input .house file (repeatable)")->required();
  convert->add_option("--category-mapping", mapping, "category_mapping.tsv for nyuClass labels");
  convert->add_option("--out", out, "Output scene file")->required();

  std::string scene, object_space = "fine", fixes = std::string(ROOMLM_DATA_DIR) + "/spelling_fixes.tsv";
  bool no_keep_generic = false;
  auto* ingest = app.add_subcommand("ingest", "Preprocess a scene file into a filtered graph");
  ingest->add_option("--scene", scene, "Input scene file")->required();
  ingest->add_option("--out", out, "Output graph file")->required();
  ingest->add_option("--object-space", object_space, "fine, coarse, or a label-space name");
  ingest->add_option("--spelling-fixes", fixes, "Spelling-fix table (empty string disables)");
  ingest->add_flag("--reject-object-category", no_keep_generic,
                   "Also drop coarse 'object' nodes in the fine-grained run");

  std::string graph, mode = "gt", counting = "instances";
  double alpha = 1.0;
  ScorerFlags cooc_scorer;
  auto* cooc = app.add_subcommand("cooc", "Build an object->room co-occurrence table");
  cooc->add_option("--graph", graph, "Preprocessed graph file")->required();
  cooc->add_option("--cooc", mode, "Ground-truth counts or language-model proxy")
      ->check(CLI::IsMember({"gt", "proxy"}));
  cooc->add_option("--alpha", alpha, "Laplace smoothing constant")->check(CLI::NonNegativeNumber);
  cooc->add_option("--counting", counting, "Tally object instances or per-room presence")
      ->check(CLI::IsMember({"instances", "presence"}));
  std::string cooc_space;
  cooc->add_option("--object-space", cooc_space, "fine, coarse, or a label-space name (default: as ingested)");
  cooc->add_option("--out", out, "Output co-occurrence file")->required();
  cooc_scorer.add_to(*cooc);

  std::string cooc_file;
  int k = 3;
  bool length_normalize = false;
  ScorerFlags infer_scorer;
  auto* infer = app.add_subcommand("infer", "Label every room of a graph");
  infer->add_option("--graph", graph, "Preprocessed graph file")->required();
  infer->add_option("--cooc-file", cooc_file, "Co-occurrence file from 'cooc'")->required();
  infer->add_option("--k", k, "Objects per query sentence")->check(CLI::PositiveNumber);
  infer->add_flag("--length-normalize", length_normalize, "Rank candidates by per-token log probability");
  infer->add_option("--out", out, "Output predictions file")->required();
  infer_scorer.add_to(*infer);

  std::vector<std::string> prediction_files;
  std::string out_dir;
  auto* eval = app.add_subcommand("eval", "Accuracy reports and the condition table");
  eval->add_option("--predictions", prediction_files, "Prediction files")->required();
  eval->add_option("--out-dir", out_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*convert) return cmd_convert(houses, mapping, out);
    if (*ingest) return cmd_ingest(scene, out, object_space, fixes, !no_keep_generic);
    if (*cooc) return cmd_cooc(graph, mode, alpha, counting, cooc_space, cooc_scorer, out);
    if (*infer) return cmd_infer(graph, cooc_file, k, length_normalize, infer_scorer, out);
    if (*eval) return cmd_eval(prediction_files, out_dir);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const TransportError& e) {
    std::cerr << "backend failure: " << e.what() << '\n';
    return kBackendFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
