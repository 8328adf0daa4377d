#include "llm3dti/protocols.hpp"

#include <charconv>
#include <cmath>

#include "llm3dti/error.hpp"

namespace llm3dti {

namespace {

std::optional<double> metric_of(const MetricsReport& r, const std::string& metric) {
  if (metric == "acc") return r.acc;
  if (metric == "f1") return r.f1;
  if (metric == "precision") return r.precision;
  if (metric == "recall") return r.recall;
  if (metric == "mcc") return r.mcc;
  if (metric == "auroc") return r.auroc;
  if (metric == "aupr") return r.aupr;
  throw ParameterError("unknown metric '" + metric + "'");
}

const AlternativeText* alt_of(const ExperimentInputs& ex) {
  return ex.alt_text ? &*ex.alt_text : nullptr;
}

void add_group(ProtocolResult& out, const std::string& label) {
  out.labels.push_back(label);
  out.runs[label];
}

void record(ProtocolResult& out, const ProtocolConfig& cfg, SeedRun run) {
  if (cfg.on_run) cfg.on_run(run);
  out.runs.at(run.label).push_back(std::move(run));
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ExperimentInputs prepare_experiment(std::span<const AssociationNetwork> networks,
                                    const FeatureConfig& features, const TextEmbedding& drug_text,
                                    const TextEmbedding& protein_text,
                                    std::vector<PairKey> positives,
                                    std::optional<AlternativeText> alt_text) {
  const auto [drug_topo, protein_topo] = build_topology_embeddings(networks, features);
  return prepare_experiment(drug_topo, protein_topo, drug_text, protein_text, std::move(positives),
                            std::move(alt_text));
}

ExperimentInputs prepare_experiment(const TopologyEmbedding& drug_topology,
                                    const TopologyEmbedding& protein_topology,
                                    const TextEmbedding& drug_text,
                                    const TextEmbedding& protein_text,
                                    std::vector<PairKey> positives,
                                    std::optional<AlternativeText> alt_text) {
  ExperimentInputs ex;
  ex.inputs = align_inputs(drug_topology, protein_topology, drug_text, protein_text);
  ex.alt_text = std::move(alt_text);
  ex.positives = std::move(positives);
  ex.universe = {ex.inputs.drugs.ids(), ex.inputs.proteins.ids()};
  if (ex.positives.empty()) throw InputError("no positive interactions");
  return ex;
}

std::vector<double> metric_values(std::span<const SeedRun> runs, const std::string& metric) {
  std::vector<double> out;
  for (const auto& r : runs) {
    if (auto v = metric_of(r.test, metric)) out.push_back(*v);
  }
  return out;
}

std::map<std::string, MetricSummary> summarize(std::span<const SeedRun> runs) {
  std::map<std::string, MetricSummary> out;
  for (const char* name : {"acc", "f1", "precision", "recall", "aupr", "mcc", "auroc"}) {
    const auto values = metric_values(runs, name);
    MetricSummary s;
    s.n = values.size();
    if (s.n > 0) {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean = sum / static_cast<double>(s.n);
      if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
      }
    }
    out[name] = s;
  }
  return out;
}

InteractionDataset seed_dataset(const ExperimentInputs& ex, std::size_t negative_ratio,
                                const SplitFractions& fractions, std::uint64_t seed) {
  const RandomStream root(seed);
  RandomStream negatives = root.derive("negatives");
  RandomStream splits = root.derive("splits");
  return make_splits(sample_negatives(ex.positives, negative_ratio, negatives, ex.universe),
                     fractions, splits);
}

SeedRun run_seed(const ExperimentInputs& ex, const InteractionDataset& ds, const TrainConfig& cfg,
                 std::uint64_t seed, std::string label) {
  TrainConfig seeded = cfg;
  seeded.seed = seed;
  const VariantPipeline pipeline = make_variant(seeded.variant, ex.inputs, alt_of(ex));
  TrainResult tr = train(ds, pipeline, seeded);
  if (!tr.history.test) throw InputError("run: the dataset has no test pairs");

  SeedRun run;
  run.seed = seed;
  run.label = std::move(label);
  run.test = *tr.history.test;
  run.test_scores = score_pairs(tr.best, pipeline.inputs, ds, ds.indices(Split::test),
                                pipeline.options, seeded.batch_size);
  run.history = std::move(tr.history);
  run.dataset = ds;
  run.params = std::move(tr.best);
  run.last_params = std::move(tr.last);
  return run;
}

std::vector<SeedRun>& ProtocolResult::group(const std::string& label) { return runs.at(label); }
const std::vector<SeedRun>& ProtocolResult::group(const std::string& label) const {
  return runs.at(label);
}

std::vector<WelchCell> welch_matrix(const ProtocolResult& r, const std::string& metric) {
  std::vector<WelchCell> cells;
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    for (std::size_t j = i + 1; j < r.labels.size(); ++j) {
      WelchCell cell{r.labels[i], r.labels[j], std::nullopt};
      const auto a = metric_values(r.group(r.labels[i]), metric);
      const auto b = metric_values(r.group(r.labels[j]), metric);
      try {
        cell.result = welch_ttest(a, b);
      } catch (const InputError&) {
        // Fewer than two values or no spread: reported as undefined.
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

ProtocolResult run_benchmark(const ExperimentInputs& ex, const ProtocolConfig& cfg) {
  ProtocolResult out;
  const std::string label(variant_name(cfg.train.variant));
  add_group(out, label);
  for (auto seed : cfg.seeds) {
    const auto ds = seed_dataset(ex, cfg.negative_ratio, cfg.fractions, seed);
    record(out, cfg, run_seed(ex, ds, cfg.train, seed, label));
  }
  return out;
}

ProtocolResult run_ablation(const ExperimentInputs& ex, const ProtocolConfig& cfg,
                            std::span<const Variant> variants) {
  ProtocolResult out;
  for (Variant v : variants) add_group(out, std::string(variant_name(v)));
  for (auto seed : cfg.seeds) {
    // Every variant of a seed sees the same pairs and split.
    const auto ds = seed_dataset(ex, cfg.negative_ratio, cfg.fractions, seed);
    for (Variant v : variants) {
      TrainConfig tc = cfg.train;
      tc.variant = v;
      const std::string label(variant_name(v));
      record(out, cfg, run_seed(ex, ds, tc, seed, label));
    }
  }
  return out;
}

ProtocolResult run_imbalance(const ExperimentInputs& ex, const ProtocolConfig& cfg,
                             std::span<const std::size_t> ratios,
                             std::span<const LossKind> losses) {
  ProtocolResult out;
  auto label_of = [](std::size_t ratio, LossKind kind) {
    return "ratio" + std::to_string(ratio) + "-" + (kind == LossKind::bce ? "bce" : "focal");
  };
  for (auto ratio : ratios)
    for (auto kind : losses) add_group(out, label_of(ratio, kind));
  for (auto ratio : ratios) {
    for (auto seed : cfg.seeds) {
      const auto ds = seed_dataset(ex, ratio, cfg.fractions, seed);
      for (auto kind : losses) {
        TrainConfig tc = cfg.train;
        tc.loss.kind = kind;
        const auto label = label_of(ratio, kind);
        record(out, cfg, run_seed(ex, ds, tc, seed, label));
      }
    }
  }
  return out;
}

ProtocolResult run_coldstart(const ExperimentInputs& ex, const ProtocolConfig& cfg, Side side,
                             std::span<const double> fractions) {
  ProtocolResult out;
  for (double f : fractions) add_group(out, "fraction" + format_number(f));
  for (double f : fractions) {
    const auto label = "fraction" + format_number(f);
    for (auto seed : cfg.seeds) {
      const RandomStream root(seed);
      RandomStream negatives = root.derive("negatives");
      RandomStream split = root.derive("coldstart");
      const auto ds = cold_start_split(
          sample_negatives(ex.positives, cfg.negative_ratio, negatives, ex.universe), side, f,
          split);
      if (const auto leaked = leaked_entities(ds, side); !leaked.empty()) {
        throw ContractError("cold start: " + std::string(side_name(side)) + " '" + leaked.front() +
                            "' appears in both train and test");
      }
      record(out, cfg, run_seed(ex, ds, cfg.train, seed, label));
    }
  }
  return out;
}

ProtocolResult run_casestudy(const ExperimentInputs& ex, const ProtocolConfig& cfg,
                             const std::set<std::string>& holdout) {
  ProtocolResult out;
  const std::string label = "casestudy";
  add_group(out, label);
  for (auto seed : cfg.seeds) {
    const RandomStream root(seed);
    RandomStream negatives = root.derive("negatives");
    const auto all = sample_negatives(ex.positives, cfg.negative_ratio, negatives, ex.universe);
    auto [train_part, eval_part] = case_study_split(all, holdout);
    InteractionDataset ds = std::move(train_part);
    ds.pairs.insert(ds.pairs.end(), eval_part.pairs.begin(), eval_part.pairs.end());
    ds.split.insert(ds.split.end(), eval_part.split.begin(), eval_part.split.end());
    record(out, cfg, run_seed(ex, ds, cfg.train, seed, label));
  }
  return out;
}

std::optional<SweepParam> parse_sweep_param(std::string_view text) {
  if (text == "batch_size") return SweepParam::batch_size;
  if (text == "lr") return SweepParam::lr;
  if (text == "hidden") return SweepParam::hidden;
  return std::nullopt;
}

std::string_view sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::batch_size: return "batch_size";
    case SweepParam::lr: return "lr";
    case SweepParam::hidden: return "hidden";
  }
  return "?";
}

ProtocolResult run_sweep(const ExperimentInputs& ex, const ProtocolConfig& cfg, SweepParam param,
                         std::span<const double> values) {
  ProtocolResult out;
  auto label_of = [&](double v) {
    return std::string(sweep_param_name(param)) + "=" + format_number(v);
  };
  for (double v : values) add_group(out, label_of(v));
  for (double v : values) {
    TrainConfig tc = cfg.train;
    switch (param) {
      case SweepParam::batch_size:
      case SweepParam::hidden: {
        if (!(v >= 1.0) || v != std::floor(v)) {
          throw ParameterError("sweep: " + std::string(sweep_param_name(param)) +
                               " values must be positive integers");
        }
        (param == SweepParam::batch_size ? tc.batch_size : tc.hidden) =
            static_cast<std::size_t>(v);
        break;
      }
      case SweepParam::lr:
        if (!(v > 0.0)) throw ParameterError("sweep: lr values must be positive");
        tc.lr = v;
        break;
    }
    for (auto seed : cfg.seeds) {
      const auto ds = seed_dataset(ex, cfg.negative_ratio, cfg.fractions, seed);
      record(out, cfg, run_seed(ex, ds, tc, seed, label_of(v)));
    }
  }
  return out;
}

}  // namespace llm3dti
