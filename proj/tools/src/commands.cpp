#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "llm3dti/checkpoint.hpp"
#include "llm3dti/error.hpp"
#include "llm3dti/protocols.hpp"
#include "llm3dti/synthetic.hpp"

namespace llm3dti::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// --- config translation -------------------------------------------------------

FeatureConfig feature_config(const RunConfig& cfg) {
  FeatureConfig f;
  f.rwr.restart = cfg.real("rwr.restart");
  f.rwr.max_iter = cfg.count("rwr.max_iter");
  f.rwr.tol = cfg.real("rwr.tol");
  f.drug_dim = cfg.count("dca.dim.drug");
  f.protein_dim = cfg.count("dca.dim.protein");
  f.dca.center = cfg.flag("dca.center");
  return f;
}

LossKind parse_loss(const std::string& text) {
  if (text == "bce") return LossKind::bce;
  if (text == "focal") return LossKind::focal;
  throw ConfigError("unknown loss '" + text + "' (expected bce or focal)");
}

Variant variant_from(const std::string& text) {
  auto v = parse_variant(text);
  if (!v) throw ConfigError("unknown variant '" + text + "'");
  return *v;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.epochs = cfg.count("train.epochs");
  t.batch_size = cfg.count("train.batch_size");
  t.lr = cfg.real("train.lr");
  t.weight_decay = cfg.real("train.weight_decay");
  t.hidden = cfg.count("train.hidden");
  t.loss.kind = parse_loss(cfg.get("train.loss"));
  t.loss.gamma = cfg.real("train.focal_gamma");
  t.loss.alpha = cfg.real("train.focal_alpha");
  t.variant = variant_from(cfg.get("train.variant"));
  if (t.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (t.hidden == 0) throw ConfigError("train.hidden must be >= 1");
  return t;
}

std::vector<std::uint64_t> seeds_of(const RunConfig& cfg) {
  auto seeds = cfg.u64s("seeds");
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  return seeds;
}

ProtocolConfig protocol_config(const RunConfig& cfg, std::ostream& log, const std::string& command) {
  ProtocolConfig p;
  p.train = train_config(cfg);
  p.seeds = seeds_of(cfg);
  p.negative_ratio = cfg.count("negatives.ratio");
  if (p.negative_ratio == 0) throw ConfigError("negatives.ratio must be >= 1");
  p.fractions = {cfg.real("split.train"), cfg.real("split.valid"), cfg.real("split.test")};
  p.on_run = [&log, command](const SeedRun& r) {
    log << "[" << command << "] " << r.label << " seed " << r.seed << ": auroc ";
    if (r.test.auroc) {
      log << std::fixed << std::setprecision(4) << *r.test.auroc;
    } else {
      log << "undefined";
    }
    log << std::defaultfloat << ", f1 " << r.test.f1 << ", best epoch " << r.history.best_epoch;
    if (!r.history.epochs.empty()) {
      log << ", " << std::setprecision(3) << r.history.epochs.back().elapsed_seconds << "s";
    }
    log << std::setprecision(6) << std::defaultfloat << "\n";
  };
  return p;
}

// --- run directory ----------------------------------------------------------

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v, int digits) {
  std::ostringstream out;
  out << std::hex << std::setw(digits) << std::setfill('0') << v;
  return out.str().substr(0, static_cast<std::size_t>(digits));
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex(fnv1a(buf.str()), 16);
}

const char* kPathKeys[] = {"networks.dir",     "topology.drug", "topology.protein",
                           "text.drug",        "text.protein",  "text.alt_drug",
                           "text.alt_protein", "dataset",       "evaluate.checkpoint"};

void validate_paths(const RunConfig& cfg) {
  for (const char* key : kPathKeys) {
    if (cfg.is_set(key) && !fs::exists(cfg.get(key))) {
      throw InputError(std::string(key) + ": '" + cfg.get(key) + "' does not exist");
    }
  }
}

fs::path run_dir(const std::string& command, const RunConfig& cfg) {
  if (cfg.is_set("output.dir")) return cfg.get("output.dir");
  std::string name = command + "-" + hex(fnv1a(cfg.dump()), 8) + "-s";
  const auto seeds = cfg.list("seeds");
  for (std::size_t i = 0; i < seeds.size(); ++i) name += (i ? "-" : "") + seeds[i];
  return fs::path(cfg.get("output.root")) / name;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << text;
}

// Config snapshot and run_info.json go in before any computation.
void start_run(const fs::path& dir, const std::string& command, const RunConfig& cfg) {
  fs::create_directories(dir);
  write_text(dir / "config.txt", cfg.dump());
  json info;
  info["command"] = command;
  info["started"] = utc_timestamp();
  info["seeds"] = cfg.list("seeds");
  json inputs = json::object();
  for (const char* key : kPathKeys) {
    if (!cfg.is_set(key)) continue;
    const fs::path p = cfg.get(key);
    if (fs::is_regular_file(p)) {
      inputs[key] = {{"path", p.string()}, {"fnv1a64", file_hash(p)}};
    } else if (fs::is_directory(p)) {
      json files = json::object();
      std::vector<fs::path> entries;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file()) entries.push_back(e.path());
      std::sort(entries.begin(), entries.end());
      for (const auto& e : entries) files[e.filename().string()] = file_hash(e);
      inputs[key] = {{"path", p.string()}, {"files", files}};
    }
  }
  info["inputs"] = inputs;
  write_text(dir / "run_info.json", info.dump(2) + "\n");
}

// --- inputs -----------------------------------------------------------------

std::vector<AssociationNetwork> load_networks(const fs::path& dir) {
  std::vector<AssociationNetwork> nets;
  for (auto kind : {NetworkKind::drug_drug, NetworkKind::drug_disease, NetworkKind::drug_sideeffect,
                    NetworkKind::protein_protein, NetworkKind::protein_disease}) {
    const fs::path file = dir / (std::string(kind_name(kind)) + ".tsv");
    if (fs::exists(file)) nets.push_back(load_network(file, kind));
  }
  return nets;
}

std::string require(const RunConfig& cfg, const std::string& key) {
  if (!cfg.is_set(key)) throw ConfigError("missing required config key '" + key + "'");
  return cfg.get(key);
}

TopologyEmbedding load_topology(const fs::path& path, Side side) {
  TextEmbedding raw = load_text_embeddings(path, side);
  TopologyEmbedding t;
  t.entity_ids = std::move(raw.entity_ids);
  t.embedding = std::move(raw.embedding);
  t.side = side;
  return t;
}

std::pair<TopologyEmbedding, TopologyEmbedding> topology_of(const RunConfig& cfg) {
  if (cfg.is_set("topology.drug") || cfg.is_set("topology.protein")) {
    return {load_topology(require(cfg, "topology.drug"), Side::drug),
            load_topology(require(cfg, "topology.protein"), Side::protein)};
  }
  const auto nets = load_networks(require(cfg, "networks.dir"));
  return build_topology_embeddings(nets, feature_config(cfg));
}

std::optional<AlternativeText> alt_text_of(const RunConfig& cfg) {
  if (!cfg.is_set("text.alt_drug") && !cfg.is_set("text.alt_protein")) return std::nullopt;
  return AlternativeText{load_text_embeddings(require(cfg, "text.alt_drug"), Side::drug),
                         load_text_embeddings(require(cfg, "text.alt_protein"), Side::protein)};
}

ExperimentInputs experiment_of(const RunConfig& cfg, const InteractionDataset& ds) {
  const auto [drug_topo, protein_topo] = topology_of(cfg);
  return prepare_experiment(drug_topo, protein_topo,
                            load_text_embeddings(require(cfg, "text.drug"), Side::drug),
                            load_text_embeddings(require(cfg, "text.protein"), Side::protein),
                            positive_pairs(ds), alt_text_of(cfg));
}

// --- outputs ----------------------------------------------------------------

json summary_json(const std::map<std::string, MetricSummary>& s) {
  json out;
  for (const auto& [name, m] : s) out[name] = {{"mean", m.mean}, {"std", m.std}, {"n", m.n}};
  return out;
}

void write_seed_run(const SeedRun& run, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "metrics.json", to_json(run.test) + "\n");
  save_history(run.history, dir / "history.jsonl");
  save_checkpoint(run.params, dir / "best.ckpt");
  save_checkpoint(run.last_params, dir / "last.ckpt");
  save_dataset(run.dataset, dir / "split.tsv", true);
}

const char* kReportMetrics[] = {"acc", "f1", "aupr", "mcc", "auroc"};

void write_protocol(const ProtocolResult& r, const fs::path& dir, bool nested) {
  json aggregate;
  std::string table = "label\tmetric\tmean\tstd\tn\n";
  for (const auto& label : r.labels) {
    const auto& runs = r.group(label);
    const fs::path group_dir = nested ? dir / label : dir;
    for (const auto& run : runs) write_seed_run(run, group_dir / ("seed-" + std::to_string(run.seed)));
    const auto summary = summarize(runs);
    aggregate[label] = summary_json(summary);
    for (const auto& [name, m] : summary) {
      table += label + "\t" + name + "\t" + format_number(m.mean) + "\t" + format_number(m.std) +
               "\t" + std::to_string(m.n) + "\n";
    }
  }
  write_text(dir / "aggregate.json", aggregate.dump(2) + "\n");
  write_text(dir / "aggregate.tsv", table);
  if (r.labels.size() < 2) return;
  json welch = json::array();
  for (const char* metric : kReportMetrics) {
    for (const auto& cell : welch_matrix(r, metric)) {
      json j{{"metric", metric}, {"a", cell.a}, {"b", cell.b}};
      if (cell.result) {
        j["t"] = cell.result->t;
        j["df"] = cell.result->df;
        j["p"] = cell.result->p;
      } else {
        j["t"] = nullptr;
        j["df"] = nullptr;
        j["p"] = nullptr;
      }
      welch.push_back(j);
    }
  }
  write_text(dir / "welch.json", welch.dump(2) + "\n");
}

InteractionDataset dataset_of(const RunConfig& cfg) { return load_dataset(require(cfg, "dataset")); }

// --- commands -----------------------------------------------------------------

void cmd_features(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const auto nets = load_networks(require(cfg, "networks.dir"));
  const auto features = feature_config(cfg);
  const auto [drug, protein] = build_topology_embeddings(nets, features);
  save_embedding_emb1(drug.entity_ids, drug.embedding, dir / "drug_topology.emb1");
  save_embedding_emb1(protein.entity_ids, protein.embedding, dir / "protein_topology.emb1");
  json prov;
  prov["rwr.restart"] = features.rwr.restart;
  prov["rwr.max_iter"] = features.rwr.max_iter;
  prov["rwr.tol"] = features.rwr.tol;
  prov["dca.dim.drug"] = features.drug_dim;
  prov["dca.dim.protein"] = features.protein_dim;
  prov["dca.center"] = features.dca.center;
  for (const auto* t : {&drug, &protein}) {
    const std::string side(side_name(t->side));
    prov[side] = {{"entities", t->entity_ids.size()},
                  {"dim", t->embedding.cols()},
                  {"eigenvalues", t->eigenvalues},
                  {"warnings", t->warnings}};
    for (const auto& w : t->warnings) log << "[features] " << side << ": " << w << "\n";
  }
  write_text(dir / "provenance.json", prov.dump(2) + "\n");
  log << "[features] drug " << drug.embedding.shape_string() << ", protein "
      << protein.embedding.shape_string() << "\n";
}

void cmd_train(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const auto ds = dataset_of(cfg);
  const auto ex = experiment_of(cfg, ds);
  write_protocol(run_benchmark(ex, protocol_config(cfg, log, "train")), dir, false);
}

void cmd_ablate(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  std::vector<Variant> variants;
  for (const auto& name : cfg.list("ablate.variants")) variants.push_back(variant_from(name));
  if (variants.empty()) throw ConfigError("ablate.variants is empty");
  const auto ds = dataset_of(cfg);
  const auto ex = experiment_of(cfg, ds);
  write_protocol(run_ablation(ex, protocol_config(cfg, log, "ablate"), variants), dir, true);
}

void cmd_coldstart(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const auto side = parse_side(cfg.get("coldstart.side"));
  if (!side) throw ConfigError("coldstart.side must be drug or protein");
  const auto fractions = cfg.reals("coldstart.fractions");
  if (fractions.empty()) throw ConfigError("coldstart.fractions is empty");
  const auto ds = dataset_of(cfg);
  const auto ex = experiment_of(cfg, ds);
  const auto r = run_coldstart(ex, protocol_config(cfg, log, "coldstart"), *side, fractions);
  write_protocol(r, dir, true);
  std::string table = "fraction\tauroc_mean\tauroc_std\taupr_mean\taupr_std\n";
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const auto s = summarize(r.group(r.labels[i]));
    table += format_number(fractions[i]) + "\t" + format_number(s.at("auroc").mean) + "\t" +
             format_number(s.at("auroc").std) + "\t" + format_number(s.at("aupr").mean) + "\t" +
             format_number(s.at("aupr").std) + "\n";
  }
  write_text(dir / "coldstart.tsv", table);
}

void cmd_casestudy(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const auto ids = cfg.list("casestudy.holdout");
  if (ids.empty()) throw ConfigError("casestudy.holdout is empty");
  const auto ds = dataset_of(cfg);
  const auto ex = experiment_of(cfg, ds);
  const auto r = run_casestudy(ex, protocol_config(cfg, log, "casestudy"),
                               std::set<std::string>(ids.begin(), ids.end()));
  write_protocol(r, dir, false);
  for (const auto& run : r.group(r.labels.front())) {
    const auto test = run.dataset.subset(run.dataset.indices(Split::test));
    write_case_study(case_study_rows(test, run.test_scores),
                     dir / ("seed-" + std::to_string(run.seed)) / "case_study.tsv");
  }
}

void cmd_sweep(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const std::string param = cfg.get("sweep.param");
  const auto values = cfg.reals("sweep.values");
  if (values.empty()) throw ConfigError("sweep.values is empty");
  const auto ds = dataset_of(cfg);
  const auto ex = experiment_of(cfg, ds);
  const auto pc = protocol_config(cfg, log, "sweep");
  if (param == "ratio") {
    std::vector<std::size_t> ratios;
    for (double v : values) {
      if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("ratio values must be positive integers");
      ratios.push_back(static_cast<std::size_t>(v));
    }
    std::vector<LossKind> losses;
    for (const auto& l : cfg.list("sweep.losses")) losses.push_back(parse_loss(l));
    if (losses.empty()) losses.push_back(pc.train.loss.kind);
    write_protocol(run_imbalance(ex, pc, ratios, losses), dir, true);
    return;
  }
  const auto p = parse_sweep_param(param);
  if (!p) throw ConfigError("sweep.param must be batch_size, lr, hidden or ratio");
  write_protocol(run_sweep(ex, pc, *p, values), dir, true);
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const ModelParams params = load_checkpoint(require(cfg, "evaluate.checkpoint"));
  const auto ds = dataset_of(cfg);
  const auto ex = experiment_of(cfg, ds);
  const TrainConfig tc = train_config(cfg);
  const auto pipeline = make_variant(tc.variant, ex.inputs, ex.alt_text ? &*ex.alt_text : nullptr);
  if (pipeline.inputs.dims(params.dims.hidden) != params.dims) {
    throw InputError("checkpoint dims do not match the inputs");
  }
  auto rows = ds.indices(Split::test);
  if (rows.empty()) {
    rows.resize(ds.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  }
  const auto scores = score_pairs(params, pipeline.inputs, ds, rows, pipeline.options, tc.batch_size);
  const auto report = metrics_report(scores, labels_of(ds, rows));
  write_text(dir / "metrics.json", to_json(report) + "\n");
  const auto subset = ds.subset(rows);
  write_case_study(case_study_rows(subset, scores), dir / "predictions.tsv");
  std::string table = "drug_id\tprotein_id\tlabel\tscore\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table += subset.pairs[i].drug + "\t" + subset.pairs[i].protein + "\t" +
             std::to_string(subset.pairs[i].label) + "\t" + format_number(scores[i]) + "\n";
  }
  write_text(dir / "scores.tsv", table);
  if (cfg.flag("evaluate.dump")) {
    dump_representations(params, pipeline.inputs, ds, rows, pipeline.options, tc.batch_size,
                         dir / "representations.emb1");
  }
  log << "[evaluate] " << rows.size() << " pairs, auroc "
      << (report.auroc ? format_number(*report.auroc) : std::string("undefined")) << "\n";
}

void cmd_synth(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  SyntheticConfig sc;
  sc.n_drugs = cfg.count("synth.drugs");
  sc.n_proteins = cfg.count("synth.proteins");
  sc.structure_groups = cfg.count("synth.structure_groups");
  sc.text_groups = cfg.count("synth.text_groups");
  sc.text_dim = cfg.count("synth.text_dim");
  sc.text_noise = cfg.real("synth.text_noise");
  sc.seed = cfg.u64("synth.seed");
  const fs::path out = cfg.is_set("synth.out") ? fs::path(cfg.get("synth.out")) : dir / "world";
  const auto world = make_synthetic_world(sc);
  write_synthetic_world(world, out);
  const fs::path abs = fs::absolute(out);
  write_text(out / "synthetic.conf",
             "networks.dir = " + (abs / "networks").string() + "\n" +
                 "text.drug = " + (abs / "text" / "drug.tsv").string() + "\n" +
                 "text.protein = " + (abs / "text" / "protein.tsv").string() + "\n" +
                 "text.alt_drug = " + (abs / "text" / "drug_noise.tsv").string() + "\n" +
                 "text.alt_protein = " + (abs / "text" / "protein_noise.tsv").string() + "\n" +
                 "dataset = " + (abs / "interactions.tsv").string() + "\n");
  log << "[synth] " << world.positives.size() << " positive pairs written to " << out.string()
      << "\n";
}

using CommandFn = void (*)(const RunConfig&, const fs::path&, std::ostream&);

const std::vector<std::pair<std::string, CommandFn>>& commands() {
  static const std::vector<std::pair<std::string, CommandFn>> table = {
      {"features", cmd_features}, {"train", cmd_train},         {"evaluate", cmd_evaluate},
      {"ablate", cmd_ablate},     {"coldstart", cmd_coldstart}, {"casestudy", cmd_casestudy},
      {"sweep", cmd_sweep},       {"synth", cmd_synth},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : commands()) out.push_back(name);
    return out;
  }();
  return names;
}

fs::path run_command(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  for (const auto& [name, fn] : commands()) {
    if (name != command) continue;
    validate_paths(cfg);
    const fs::path dir = run_dir(command, cfg);
    start_run(dir, command, cfg);
    fn(cfg, dir, log);
    log << "[" << command << "] results in " << dir.string() << "\n";
    return dir;
  }
  throw ConfigError("unknown command '" + command + "'");
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const TrainingError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const UndefinedMetricError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const InputError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace llm3dti::cli
