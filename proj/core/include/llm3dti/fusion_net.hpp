#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "llm3dti/data_io.hpp"
#include "llm3dti/graph_features.hpp"
#include "llm3dti/numkit.hpp"
#include "llm3dti/random.hpp"

namespace llm3dti {

// y = x·w + b with w: in×out, b: 1×out.
struct Linear {
  Matrix w;
  Matrix b;
};

// Query/key/value maps, h×h each. One instance serves both the drug and the
// protein path.
struct AttentionWeights {
  Matrix wq;
  Matrix wk;
  Matrix wv;
};

// Gate G = sigmoid(Zs·ws + Zt·wt + b). One instance serves both paths.
struct GateWeights {
  Matrix ws;
  Matrix wt;
  Matrix b;
};

// 2h → h (rectifier) → 1 (sigmoid).
struct PredictionHead {
  Linear hidden;
  Linear output;
};

struct ModelDims {
  std::size_t drug_struct = 0;
  std::size_t protein_struct = 0;
  std::size_t text = 0;
  std::size_t hidden = 128;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct NamedTensor {
  std::string name;
  Matrix* value;
};
struct ConstNamedTensor {
  std::string name;
  const Matrix* value;
};

struct ModelParams {
  ModelDims dims;
  Linear proj_drug_struct;
  Linear proj_drug_text;
  Linear proj_protein_struct;
  Linear proj_protein_text;
  AttentionWeights attn;
  GateWeights gate;
  PredictionHead head;
  // Bumped on every in-place update; activations remember the value they
  // were computed at.
  std::uint64_t generation = 0;

  // Every learnable tensor under a stable dotted name, in a fixed order.
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
  std::size_t parameter_count() const;
  // FNV-1a over the bit patterns of all tensors.
  std::uint64_t fingerprint() const;
};

std::uint64_t fingerprint(const AttentionWeights& w);
std::uint64_t fingerprint(const GateWeights& w);

// Glorot-uniform weights, zero biases.
ModelParams init_params(RandomStream& stream, const ModelDims& dims);
ModelParams zeros_like(const ModelParams& p);

// --- inputs ---------------------------------------------------------------

class EntityIndex {
 public:
  EntityIndex() = default;
  explicit EntityIndex(std::vector<std::string> ids);

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::optional<std::size_t> find(const std::string& id) const;
  // Throws InputError naming the id.
  std::size_t at(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> where_;
};

// Row-aligned structural and text matrices for every drug and protein.
struct ModelInputs {
  EntityIndex drugs;
  EntityIndex proteins;
  Matrix drug_struct;
  Matrix drug_text;
  Matrix protein_struct;
  Matrix protein_text;

  ModelDims dims(std::size_t hidden) const;
  void validate() const;
};

// Orders every matrix by the text embedding ids; each of those ids must have
// a topology row.
ModelInputs align_inputs(const TopologyEmbedding& drug_topology,
                         const TopologyEmbedding& protein_topology, const TextEmbedding& drug_text,
                         const TextEmbedding& protein_text);

struct PairRows {
  std::size_t drug = 0;
  std::size_t protein = 0;
};

std::vector<PairRows> resolve_pairs(const InteractionDataset& ds, const ModelInputs& inputs,
                                    std::span<const std::size_t> rows);

// --- forward --------------------------------------------------------------

enum class AlignMode { cross, self };
enum class GateMode { learned, fixed_half };

struct ForwardOptions {
  AlignMode align = AlignMode::cross;
  GateMode gate = GateMode::learned;
};

// Softmax(Q·Kᵀ/√h)·V with Q = query_src·wq, K = ctx_src·wk, V = ctx_src·wv.
Matrix cross_attention(const Matrix& query_src, const Matrix& ctx_src, const AttentionWeights& w);
Matrix cross_attention(const Matrix& query_src, const Matrix& ctx_src, const ModelParams& p);

// (structure attends over text, text attends over structure).
std::pair<Matrix, Matrix> dual_align(const Matrix& zs, const Matrix& zt, const ModelParams& p);

Matrix fusion_gate(const Matrix& z_s_cra, const Matrix& z_t_cra, const GateWeights& g);
// G⊙z_s_cra + (1−G)⊙z_t_cra.
Matrix tsfusion(const Matrix& z_s_cra, const Matrix& z_t_cra, const ModelParams& p);
Matrix tsfusion_fixed(const Matrix& z_s_cra, const Matrix& z_t_cra, double gate = 0.5);

std::vector<double> predict(const Matrix& zd, const Matrix& zp, const ModelParams& p);

struct AttentionCache {
  Matrix query_src;
  Matrix ctx_src;
  Matrix q;
  Matrix k;
  Matrix v;
  Matrix weights;
  Matrix out;
};

struct SideActivations {
  Matrix struct_in;
  Matrix text_in;
  Matrix zs;  // projected structure
  Matrix zt;  // projected text
  AttentionCache s_cra;
  AttentionCache t_cra;
  Matrix gate;
  Matrix fused;
  const AttentionWeights* attn = nullptr;
  const GateWeights* gate_params = nullptr;
};

struct BatchActivations {
  SideActivations drug;
  SideActivations protein;
  Matrix joint;
  Matrix hidden_pre;
  Matrix hidden;
  Matrix logits;
  std::vector<double> probs;
  ForwardOptions options;
  const ModelParams* params = nullptr;
  std::uint64_t generation = 0;
};

BatchActivations forward(std::span<const PairRows> batch, const ModelInputs& inputs,
                         const ModelParams& p, const ForwardOptions& options = {});

// --- losses ---------------------------------------------------------------

inline constexpr double kProbClip = 1e-7;

enum class LossKind { bce, focal };

struct LossSpec {
  LossKind kind = LossKind::bce;
  double gamma = 2.0;
  double alpha = 0.25;
};

double bce_loss(std::span<const double> yhat, std::span<const double> y);
double focal_loss(std::span<const double> yhat, std::span<const double> y, double gamma,
                  double alpha);
double loss(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec);

// --- backward -------------------------------------------------------------

struct Gradients {
  ModelParams params;  // same layout as the model
  // Contribution of each path (0 = drug, 1 = protein) to the shared tensors;
  // params.attn and params.gate hold their sums.
  std::array<AttentionWeights, 2> attn_by_side;
  std::array<GateWeights, 2> gate_by_side;
};

Gradients backward(const BatchActivations& acts, std::span<const double> y, const ModelParams& p,
                   const LossSpec& spec);

}  // namespace llm3dti
