#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "llm3dti/data_io.hpp"
#include "llm3dti/evaluation.hpp"
#include "llm3dti/graph_features.hpp"
#include "llm3dti/training.hpp"

namespace llm3dti {

// Everything a multi-seed experiment needs, already aligned.
struct ExperimentInputs {
  ModelInputs inputs;
  std::optional<AlternativeText> alt_text;
  std::vector<PairKey> positives;
  EntityUniverse universe;  // candidate space for negatives
};

// Topology features + text alignment. The negative universe is the set of
// entities with text vectors.
ExperimentInputs prepare_experiment(std::span<const AssociationNetwork> networks,
                                    const FeatureConfig& features, const TextEmbedding& drug_text,
                                    const TextEmbedding& protein_text,
                                    std::vector<PairKey> positives,
                                    std::optional<AlternativeText> alt_text = std::nullopt);
ExperimentInputs prepare_experiment(const TopologyEmbedding& drug_topology,
                                    const TopologyEmbedding& protein_topology,
                                    const TextEmbedding& drug_text,
                                    const TextEmbedding& protein_text,
                                    std::vector<PairKey> positives,
                                    std::optional<AlternativeText> alt_text = std::nullopt);

struct SeedRun;

struct ProtocolConfig {
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t negative_ratio = 1;
  SplitFractions fractions;
  // Called after every finished seed run, in order.
  std::function<void(const SeedRun&)> on_run;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::string label;  // variant, ratio/loss, fraction, ...
  MetricsReport test;
  RunHistory history;
  InteractionDataset dataset;
  std::vector<double> test_scores;  // parallel to dataset.indices(Split::test)
  ModelParams params;               // selected parameters
  ModelParams last_params;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n − 1)
  std::size_t n = 0;
};

// Per metric name (acc, f1, precision, recall, aupr, mcc, auroc); undefined
// values are skipped.
std::map<std::string, MetricSummary> summarize(std::span<const SeedRun> runs);
std::vector<double> metric_values(std::span<const SeedRun> runs, const std::string& metric);

// Balanced (or ratio-controlled) dataset for one seed: negatives drawn with
// derive("negatives"), stratified split with derive("splits").
InteractionDataset seed_dataset(const ExperimentInputs& ex, std::size_t negative_ratio,
                                const SplitFractions& fractions, std::uint64_t seed);

SeedRun run_seed(const ExperimentInputs& ex, const InteractionDataset& ds, const TrainConfig& cfg,
                 std::uint64_t seed, std::string label);

// One group of seed runs per label, in the order the labels were produced.
struct ProtocolResult {
  std::vector<std::string> labels;
  std::map<std::string, std::vector<SeedRun>> runs;

  std::vector<SeedRun>& group(const std::string& label);
  const std::vector<SeedRun>& group(const std::string& label) const;
};

// Pairwise Welch t-tests between label groups on one metric.
struct WelchCell {
  std::string a;
  std::string b;
  std::optional<WelchResult> result;  // empty when the test is degenerate
};
std::vector<WelchCell> welch_matrix(const ProtocolResult& r, const std::string& metric);

ProtocolResult run_benchmark(const ExperimentInputs& ex, const ProtocolConfig& cfg);
ProtocolResult run_ablation(const ExperimentInputs& ex, const ProtocolConfig& cfg,
                            std::span<const Variant> variants = kAllVariants);
// Labels "ratio<k>-<loss>".
ProtocolResult run_imbalance(const ExperimentInputs& ex, const ProtocolConfig& cfg,
                             std::span<const std::size_t> ratios,
                             std::span<const LossKind> losses);
// Labels "fraction<f>". Trains on the visible entities without a validation
// split; the last epoch is used.
ProtocolResult run_coldstart(const ExperimentInputs& ex, const ProtocolConfig& cfg, Side side,
                             std::span<const double> fractions);
// Label "casestudy". Every pair touching a holdout id is held out for testing.
ProtocolResult run_casestudy(const ExperimentInputs& ex, const ProtocolConfig& cfg,
                             const std::set<std::string>& holdout);

enum class SweepParam { batch_size, lr, hidden };
std::optional<SweepParam> parse_sweep_param(std::string_view text);
std::string_view sweep_param_name(SweepParam p);
// Labels "<param>=<value>".
ProtocolResult run_sweep(const ExperimentInputs& ex, const ProtocolConfig& cfg, SweepParam param,
                         std::span<const double> values);

std::string format_number(double v);

}  // namespace llm3dti
