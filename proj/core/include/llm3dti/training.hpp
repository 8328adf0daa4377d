#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llm3dti/data_io.hpp"
#include "llm3dti/evaluation.hpp"
#include "llm3dti/fusion_net.hpp"

namespace llm3dti {

enum class Variant { full, wo_llm_text, wo_cra, wo_tsfusion };

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view text);
inline constexpr Variant kAllVariants[] = {Variant::full, Variant::wo_llm_text, Variant::wo_cra,
                                           Variant::wo_tsfusion};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 1e-6;
  std::size_t hidden = 128;
  LossSpec loss;
  std::uint64_t seed = 0;
  Variant variant = Variant::full;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

std::string to_json(const TrainConfig& cfg);

// Replacement text vectors for the wo_llm_text variant.
struct AlternativeText {
  TextEmbedding drug;
  TextEmbedding protein;
};

struct VariantPipeline {
  Variant variant = Variant::full;
  ModelInputs inputs;
  ForwardOptions options;
};

// wo_llm_text swaps in `alt` (InputError when absent), wo_cra switches to
// per-modality self-attention, wo_tsfusion freezes the gate at 0.5.
VariantPipeline make_variant(Variant v, const ModelInputs& inputs,
                             const AlternativeText* alt = nullptr);

// --- optimizer --------------------------------------------------------------

struct OptimizerState {
  ModelParams m;
  ModelParams v;
  // Parallel to ModelParams::tensors(); frozen tensors are left untouched,
  // weight decay included.
  std::vector<bool> trainable;
  std::uint64_t steps = 0;
};

OptimizerState make_optimizer(const ModelParams& p, Variant variant = Variant::full);

// θ ← θ − lr·(m̂/(√v̂+ε) + wd·θ) with bias-corrected moments. t is the
// 1-based step number.
void adamw_step(ModelParams& p, const ModelParams& grad, OptimizerState& state, std::uint64_t t,
                const TrainConfig& cfg);

// --- training loop ----------------------------------------------------------

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<MetricsReport> valid;
  double elapsed_seconds = 0.0;
  std::size_t peak_bytes = 0;
};

struct RunHistory {
  TrainConfig config;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  std::optional<MetricsReport> test;       // selected parameters
  std::optional<MetricsReport> test_last;  // last-epoch parameters
};

// JSON lines: a "config" record, one "epoch" record per epoch, then a
// "final" record.
std::string to_jsonl(const RunHistory& h);
void save_history(const RunHistory& h, const std::filesystem::path& path);

struct TrainResult {
  ModelParams best;  // highest validation AUROC; last epoch without validation
  ModelParams last;
  RunHistory history;
};

// Trains on the train split, selects on the valid split and reports on the
// test split (each used when present).
TrainResult train(const InteractionDataset& ds, const ModelInputs& inputs, const TrainConfig& cfg,
                  const AlternativeText* alt = nullptr);
TrainResult train(const InteractionDataset& ds, const VariantPipeline& pipeline,
                  const TrainConfig& cfg);

}  // namespace llm3dti
