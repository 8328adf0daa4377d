#include "llm3dti/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "llm3dti/error.hpp"
#include "llm3dti/memory.hpp"

namespace llm3dti {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json report_json(const std::optional<MetricsReport>& r) {
  if (!r) return nullptr;
  return ordered_json::parse(to_json(*r));
}

Matrix reorder_text(const TextEmbedding& emb, const EntityIndex& wanted, const char* side) {
  const EntityIndex have(emb.entity_ids);
  std::vector<std::size_t> rows;
  rows.reserve(wanted.size());
  for (const auto& id : wanted.ids()) {
    auto r = have.find(id);
    if (!r) throw InputError(std::string("alternative text has no vector for ") + side + " '" + id + "'");
    rows.push_back(*r);
  }
  return gather_rows(emb.embedding, rows);
}

void check_config(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw ParameterError("train: batch size must be >= 1");
  if (cfg.hidden == 0) throw ParameterError("train: hidden dimension must be >= 1");
  if (!(cfg.lr >= 0.0) || !(cfg.weight_decay >= 0.0)) {
    throw ParameterError("train: learning rate and weight decay must be >= 0");
  }
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::wo_llm_text: return "wo_llm_text";
    case Variant::wo_cra: return "wo_cra";
    case Variant::wo_tsfusion: return "wo_tsfusion";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view text) {
  for (Variant v : kAllVariants) {
    if (variant_name(v) == text) return v;
  }
  return std::nullopt;
}

std::string to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["hidden"] = cfg.hidden;
  j["loss"] = cfg.loss.kind == LossKind::bce ? "bce" : "focal";
  j["focal_gamma"] = cfg.loss.gamma;
  j["focal_alpha"] = cfg.loss.alpha;
  j["seed"] = cfg.seed;
  j["variant"] = variant_name(cfg.variant);
  return j.dump();
}

VariantPipeline make_variant(Variant v, const ModelInputs& inputs, const AlternativeText* alt) {
  VariantPipeline out;
  out.variant = v;
  out.inputs = inputs;
  switch (v) {
    case Variant::full:
      break;
    case Variant::wo_llm_text:
      if (alt == nullptr) {
        throw InputError("variant wo_llm_text needs an alternative text embedding file");
      }
      out.inputs.drug_text = reorder_text(alt->drug, inputs.drugs, "drug");
      out.inputs.protein_text = reorder_text(alt->protein, inputs.proteins, "protein");
      out.inputs.validate();
      break;
    case Variant::wo_cra:
      out.options.align = AlignMode::self;
      break;
    case Variant::wo_tsfusion:
      out.options.gate = GateMode::fixed_half;
      break;
  }
  return out;
}

// --- optimizer ----------------------------------------------------------------

OptimizerState make_optimizer(const ModelParams& p, Variant variant) {
  OptimizerState s{zeros_like(p), zeros_like(p), {}, 0};
  for (const auto& t : p.tensors()) {
    const bool gate = t.name.rfind("gate.", 0) == 0;
    s.trainable.push_back(!(gate && variant == Variant::wo_tsfusion));
  }
  return s;
}

void adamw_step(ModelParams& p, const ModelParams& grad, OptimizerState& state, std::uint64_t t,
                const TrainConfig& cfg) {
  if (t < 1) throw ContractError("adamw_step: step number must be >= 1");
  auto params = p.tensors();
  const auto grads = grad.tensors();
  auto ms = state.m.tensors();
  auto vs = state.v.tensors();
  if (grads.size() != params.size() || ms.size() != params.size() ||
      state.trainable.size() != params.size()) {
    throw ContractError("adamw_step: optimizer state does not match the parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& w = *params[i].value;
    for (const Matrix* other : {grads[i].value, static_cast<const Matrix*>(ms[i].value),
                                static_cast<const Matrix*>(vs[i].value)}) {
      if (other->rows() != w.rows() || other->cols() != w.cols()) {
        throw ContractError("adamw_step: shape mismatch on '" + params[i].name + "'");
      }
    }
  }

  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!state.trainable[i]) continue;
    auto w = params[i].value->data();
    auto g = grads[i].value->data();
    auto m = ms[i].value->data();
    auto v = vs[i].value->data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      w[k] -= cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * w[k]);
    }
  }
  state.steps = t;
  ++p.generation;
}

// --- history ----------------------------------------------------------------

std::string to_jsonl(const RunHistory& h) {
  std::string out;
  ordered_json config;
  config["type"] = "config";
  config["config"] = ordered_json::parse(to_json(h.config));
  out += config.dump() + "\n";
  for (const auto& e : h.epochs) {
    ordered_json j;
    j["type"] = "epoch";
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["valid"] = report_json(e.valid);
    j["elapsed_seconds"] = e.elapsed_seconds;
    j["peak_bytes"] = e.peak_bytes;
    out += j.dump() + "\n";
  }
  ordered_json fin;
  fin["type"] = "final";
  fin["best_epoch"] = h.best_epoch;
  fin["test"] = report_json(h.test);
  fin["test_last"] = report_json(h.test_last);
  out += fin.dump() + "\n";
  return out;
}

void save_history(const RunHistory& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << to_jsonl(h);
}

// --- training loop ----------------------------------------------------------

TrainResult train(const InteractionDataset& ds, const ModelInputs& inputs, const TrainConfig& cfg,
                  const AlternativeText* alt) {
  return train(ds, make_variant(cfg.variant, inputs, alt), cfg);
}

TrainResult train(const InteractionDataset& ds, const VariantPipeline& pipeline,
                  const TrainConfig& cfg) {
  check_config(cfg);
  ds.validate();
  const auto train_rows = ds.indices(Split::train);
  const auto valid_rows = ds.indices(Split::valid);
  const auto test_rows = ds.indices(Split::test);
  if (train_rows.empty()) throw InputError("train: the dataset has no training pairs");

  const ModelInputs& inputs = pipeline.inputs;
  RandomStream root(cfg.seed);
  RandomStream init_stream = root.derive("init");
  RandomStream order_stream = root.derive("order");

  TrainResult result;
  result.history.config = cfg;
  result.history.config.variant = pipeline.variant;
  ModelParams p = init_params(init_stream, inputs.dims(cfg.hidden));
  OptimizerState opt = make_optimizer(p, pipeline.variant);

  memory::reset_peak();
  const auto start = std::chrono::steady_clock::now();
  double best_auroc = -std::numeric_limits<double>::infinity();
  std::optional<ModelParams> best;
  std::vector<std::size_t> order = train_rows;
  std::vector<double> y;
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_stream.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const auto chunk = std::span<const std::size_t>(order).subspan(
          begin, std::min(cfg.batch_size, order.size() - begin));
      const auto pairs = resolve_pairs(ds, inputs, chunk);
      y.clear();
      for (std::size_t r : chunk) y.push_back(static_cast<double>(ds.pairs[r].label));

      const BatchActivations acts = forward(pairs, inputs, p, pipeline.options);
      const double batch_loss = loss(acts.probs, y, cfg.loss);
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("train: non-finite loss", epoch, batch_index + 1);
      }
      loss_sum += batch_loss * static_cast<double>(chunk.size());
      const Gradients g = backward(acts, y, p, cfg.loss);
      adamw_step(p, g.params, opt, ++step, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    if (!valid_rows.empty()) {
      rec.valid = evaluate(p, inputs, ds, valid_rows, pipeline.options, cfg.batch_size);
      if (rec.valid->auroc && *rec.valid->auroc > best_auroc) {
        best_auroc = *rec.valid->auroc;
        best = p;
        result.history.best_epoch = epoch;
      }
    }
    rec.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.peak_bytes = memory::peak_bytes();
    result.history.epochs.push_back(std::move(rec));
  }

  if (!best) {
    best = p;
    result.history.best_epoch = cfg.epochs;
  }
  result.best = std::move(*best);
  result.last = std::move(p);
  if (!test_rows.empty()) {
    result.history.test =
        evaluate(result.best, inputs, ds, test_rows, pipeline.options, cfg.batch_size);
    result.history.test_last =
        evaluate(result.last, inputs, ds, test_rows, pipeline.options, cfg.batch_size);
  }
  return result;
}

}  // namespace llm3dti
