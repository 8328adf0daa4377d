#include "llm3dti/fusion_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "llm3dti/error.hpp"

namespace llm3dti {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::uint64_t fnv_mix(std::uint64_t h, const Matrix& m) {
  auto mix_u64 = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  mix_u64(m.rows());
  mix_u64(m.cols());
  for (double v : m.data()) mix_u64(std::bit_cast<std::uint64_t>(v));
  return h;
}

constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ULL;

Matrix glorot(RandomStream& stream, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return stream.uniform_matrix(fan_in, fan_out, -limit, limit);
}

Linear make_linear(RandomStream& stream, std::size_t in, std::size_t out) {
  return {glorot(stream, in, out), Matrix(1, out)};
}

Matrix linear_forward(const Matrix& x, const Linear& l) {
  return add_row_broadcast(matmul(x, l.w), l.b);
}

AttentionWeights zero_attention(std::size_t h) { return {Matrix(h, h), Matrix(h, h), Matrix(h, h)}; }
GateWeights zero_gate(std::size_t h) { return {Matrix(h, h), Matrix(h, h), Matrix(1, h)}; }

AttentionCache attend(const Matrix& query_src, const Matrix& ctx_src, const AttentionWeights& w) {
  require(query_src.rows() == ctx_src.rows(),
          "cross_attention: query rows " + std::to_string(query_src.rows()) +
              " != context rows " + std::to_string(ctx_src.rows()));
  require(query_src.cols() == w.wq.rows() && ctx_src.cols() == w.wk.rows(),
          "cross_attention: inputs " + query_src.shape_string() + "/" + ctx_src.shape_string() +
              " do not match attention weights " + w.wq.shape_string());
  AttentionCache c;
  c.query_src = query_src;
  c.ctx_src = ctx_src;
  c.q = matmul(query_src, w.wq);
  c.k = matmul(ctx_src, w.wk);
  c.v = matmul(ctx_src, w.wv);
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(w.wk.cols()));
  c.weights = softmax_rows(scale(matmul_nt(c.q, c.k), inv_scale));
  c.out = matmul(c.weights, c.v);
  return c;
}

// Accumulates weight gradients into `gw` and input gradients into d_query /
// d_ctx.
void attend_backward(const AttentionCache& c, const Matrix& d_out, const AttentionWeights& w,
                     AttentionWeights& gw, Matrix& d_query, Matrix& d_ctx) {
  const Matrix d_weights = matmul_nt(d_out, c.v);
  const Matrix d_v = matmul_tn(c.weights, d_out);
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(w.wk.cols()));
  Matrix d_scores(c.weights.rows(), c.weights.cols());
  for (std::size_t i = 0; i < d_scores.rows(); ++i) {
    auto a = c.weights.row(i);
    auto da = d_weights.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * da[j];
    auto ds = d_scores.row(i);
    for (std::size_t j = 0; j < a.size(); ++j) ds[j] = a[j] * (da[j] - dot) * inv_scale;
  }
  const Matrix d_q = matmul(d_scores, c.k);
  const Matrix d_k = matmul_tn(d_scores, c.q);

  axpy(gw.wq, 1.0, matmul_tn(c.query_src, d_q));
  axpy(gw.wk, 1.0, matmul_tn(c.ctx_src, d_k));
  axpy(gw.wv, 1.0, matmul_tn(c.ctx_src, d_v));
  axpy(d_query, 1.0, matmul_nt(d_q, w.wq));
  axpy(d_ctx, 1.0, matmul_nt(d_k, w.wk));
  axpy(d_ctx, 1.0, matmul_nt(d_v, w.wv));
}

SideActivations side_forward(const Matrix& struct_in, const Matrix& text_in,
                             const Linear& proj_struct, const Linear& proj_text,
                             const ModelParams& p, const ForwardOptions& options) {
  SideActivations s;
  s.struct_in = struct_in;
  s.text_in = text_in;
  s.zs = linear_forward(struct_in, proj_struct);
  s.zt = linear_forward(text_in, proj_text);
  s.attn = &p.attn;
  s.gate_params = &p.gate;
  if (options.align == AlignMode::cross) {
    s.s_cra = attend(s.zs, s.zt, p.attn);
    s.t_cra = attend(s.zt, s.zs, p.attn);
  } else {
    s.s_cra = attend(s.zs, s.zs, p.attn);
    s.t_cra = attend(s.zt, s.zt, p.attn);
  }
  if (options.gate == GateMode::learned) {
    s.gate = fusion_gate(s.s_cra.out, s.t_cra.out, p.gate);
  } else {
    s.gate = Matrix(s.s_cra.out.rows(), s.s_cra.out.cols(), 0.5);
  }
  s.fused = s.s_cra.out;
  auto f = s.fused.data();
  auto g = s.gate.data();
  auto zt = s.t_cra.out.data();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = zt[i] + g[i] * (f[i] - zt[i]);
  return s;
}

void side_backward(const SideActivations& s, const Matrix& d_fused, const ModelParams& p,
                   const ForwardOptions& options, Linear& g_struct, Linear& g_text,
                   AttentionWeights& g_attn, GateWeights& g_gate) {
  const std::size_t n = d_fused.rows();
  const std::size_t h = d_fused.cols();
  Matrix d_s_cra(n, h), d_t_cra(n, h);
  {
    auto df = d_fused.data();
    auto g = s.gate.data();
    auto ds = d_s_cra.data();
    auto dt = d_t_cra.data();
    for (std::size_t i = 0; i < df.size(); ++i) {
      ds[i] = df[i] * g[i];
      dt[i] = df[i] * (1.0 - g[i]);
    }
  }
  if (options.gate == GateMode::learned) {
    Matrix d_pre(n, h);
    auto df = d_fused.data();
    auto g = s.gate.data();
    auto zs = s.s_cra.out.data();
    auto zt = s.t_cra.out.data();
    auto dp = d_pre.data();
    for (std::size_t i = 0; i < dp.size(); ++i) dp[i] = df[i] * (zs[i] - zt[i]) * g[i] * (1.0 - g[i]);
    axpy(g_gate.ws, 1.0, matmul_tn(s.s_cra.out, d_pre));
    axpy(g_gate.wt, 1.0, matmul_tn(s.t_cra.out, d_pre));
    axpy(g_gate.b, 1.0, column_sums(d_pre));
    axpy(d_s_cra, 1.0, matmul_nt(d_pre, p.gate.ws));
    axpy(d_t_cra, 1.0, matmul_nt(d_pre, p.gate.wt));
  }

  Matrix d_zs(n, h), d_zt(n, h);
  if (options.align == AlignMode::cross) {
    attend_backward(s.s_cra, d_s_cra, p.attn, g_attn, d_zs, d_zt);
    attend_backward(s.t_cra, d_t_cra, p.attn, g_attn, d_zt, d_zs);
  } else {
    attend_backward(s.s_cra, d_s_cra, p.attn, g_attn, d_zs, d_zs);
    attend_backward(s.t_cra, d_t_cra, p.attn, g_attn, d_zt, d_zt);
  }

  g_struct.w = matmul_tn(s.struct_in, d_zs);
  g_struct.b = column_sums(d_zs);
  g_text.w = matmul_tn(s.text_in, d_zt);
  g_text.b = column_sums(d_zt);
}

// d loss_i / d logit_i, not yet divided by N.
double loss_logit_grad(double yhat, double y, const LossSpec& spec) {
  if (yhat < kProbClip || yhat > 1.0 - kProbClip) return 0.0;
  if (spec.kind == LossKind::bce) return yhat - y;
  const double p = yhat;
  const double g = spec.gamma;
  const double a = spec.alpha;
  if (y > 0.5) {
    return -a * (-g * p * std::pow(1.0 - p, g) * std::log(p) + std::pow(1.0 - p, g + 1.0));
  }
  return -(1.0 - a) * (g * std::pow(p, g) * (1.0 - p) * std::log(1.0 - p) - std::pow(p, g + 1.0));
}

void check_loss_inputs(std::span<const double> yhat, std::span<const double> y) {
  if (yhat.size() != y.size()) {
    throw ShapeError("loss: " + std::to_string(yhat.size()) + " predictions for " +
                     std::to_string(y.size()) + " labels");
  }
  if (yhat.empty()) throw ShapeError("loss: empty batch");
}

double clip(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

}  // namespace

// --- parameters -------------------------------------------------------------

std::vector<NamedTensor> ModelParams::tensors() {
  return {
      {"proj.drug_struct.w", &proj_drug_struct.w},
      {"proj.drug_struct.b", &proj_drug_struct.b},
      {"proj.drug_text.w", &proj_drug_text.w},
      {"proj.drug_text.b", &proj_drug_text.b},
      {"proj.protein_struct.w", &proj_protein_struct.w},
      {"proj.protein_struct.b", &proj_protein_struct.b},
      {"proj.protein_text.w", &proj_protein_text.w},
      {"proj.protein_text.b", &proj_protein_text.b},
      {"attn.wq", &attn.wq},
      {"attn.wk", &attn.wk},
      {"attn.wv", &attn.wv},
      {"gate.ws", &gate.ws},
      {"gate.wt", &gate.wt},
      {"gate.b", &gate.b},
      {"head.hidden.w", &head.hidden.w},
      {"head.hidden.b", &head.hidden.b},
      {"head.output.w", &head.output.w},
      {"head.output.b", &head.output.b},
  };
}

std::vector<ConstNamedTensor> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  std::vector<ConstNamedTensor> out;
  out.reserve(mut.size());
  for (auto& t : mut) out.push_back({std::move(t.name), t.value});
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.value->size();
  return n;
}

std::uint64_t ModelParams::fingerprint() const {
  std::uint64_t h = kFnvBasis;
  for (const auto& t : tensors()) h = fnv_mix(h, *t.value);
  return h;
}

std::uint64_t fingerprint(const AttentionWeights& w) {
  return fnv_mix(fnv_mix(fnv_mix(kFnvBasis, w.wq), w.wk), w.wv);
}

std::uint64_t fingerprint(const GateWeights& w) {
  return fnv_mix(fnv_mix(fnv_mix(kFnvBasis, w.ws), w.wt), w.b);
}

ModelParams init_params(RandomStream& stream, const ModelDims& dims) {
  if (dims.drug_struct < 1 || dims.protein_struct < 1 || dims.text < 1 || dims.hidden < 1) {
    throw ParameterError("init_params: all dimensions must be >= 1");
  }
  const std::size_t h = dims.hidden;
  ModelParams p;
  p.dims = dims;
  p.proj_drug_struct = make_linear(stream, dims.drug_struct, h);
  p.proj_drug_text = make_linear(stream, dims.text, h);
  p.proj_protein_struct = make_linear(stream, dims.protein_struct, h);
  p.proj_protein_text = make_linear(stream, dims.text, h);
  p.attn = {glorot(stream, h, h), glorot(stream, h, h), glorot(stream, h, h)};
  p.gate = {glorot(stream, h, h), glorot(stream, h, h), Matrix(1, h)};
  p.head.hidden = make_linear(stream, 2 * h, h);
  p.head.output = make_linear(stream, h, 1);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (auto& t : z.tensors()) t.value->fill(0.0);
  z.generation = 0;
  return z;
}

// --- inputs -----------------------------------------------------------------

EntityIndex::EntityIndex(std::vector<std::string> ids) : ids_(std::move(ids)) {
  where_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!where_.emplace(ids_[i], i).second) throw InputError("duplicate entity id '" + ids_[i] + "'");
  }
}

std::optional<std::size_t> EntityIndex::find(const std::string& id) const {
  auto it = where_.find(id);
  if (it == where_.end()) return std::nullopt;
  return it->second;
}

std::size_t EntityIndex::at(const std::string& id) const {
  auto it = where_.find(id);
  if (it == where_.end()) throw InputError("unknown entity id '" + id + "'");
  return it->second;
}

ModelDims ModelInputs::dims(std::size_t hidden) const {
  return {drug_struct.cols(), protein_struct.cols(), drug_text.cols(), hidden};
}

void ModelInputs::validate() const {
  if (drug_struct.rows() != drugs.size() || drug_text.rows() != drugs.size()) {
    throw ShapeError("model inputs: drug matrices do not match " + std::to_string(drugs.size()) +
                     " drugs");
  }
  if (protein_struct.rows() != proteins.size() || protein_text.rows() != proteins.size()) {
    throw ShapeError("model inputs: protein matrices do not match " +
                     std::to_string(proteins.size()) + " proteins");
  }
  if (drug_text.cols() != protein_text.cols()) {
    throw ShapeError("model inputs: drug and protein text dims differ (" +
                     std::to_string(drug_text.cols()) + " vs " +
                     std::to_string(protein_text.cols()) + ")");
  }
}

ModelInputs align_inputs(const TopologyEmbedding& drug_topology,
                         const TopologyEmbedding& protein_topology, const TextEmbedding& drug_text,
                         const TextEmbedding& protein_text) {
  auto reorder = [](const TopologyEmbedding& topo, const std::vector<std::string>& ids,
                    const char* side) {
    const EntityIndex index(topo.entity_ids);
    std::vector<std::size_t> rows;
    rows.reserve(ids.size());
    for (const auto& id : ids) {
      auto r = index.find(id);
      if (!r) throw InputError(std::string(side) + " '" + id + "' has no topology embedding");
      rows.push_back(*r);
    }
    return gather_rows(topo.embedding, rows);
  };
  ModelInputs in;
  in.drugs = EntityIndex(drug_text.entity_ids);
  in.proteins = EntityIndex(protein_text.entity_ids);
  in.drug_struct = reorder(drug_topology, drug_text.entity_ids, "drug");
  in.protein_struct = reorder(protein_topology, protein_text.entity_ids, "protein");
  in.drug_text = drug_text.embedding;
  in.protein_text = protein_text.embedding;
  in.validate();
  return in;
}

std::vector<PairRows> resolve_pairs(const InteractionDataset& ds, const ModelInputs& inputs,
                                    std::span<const std::size_t> rows) {
  std::vector<PairRows> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto& pair = ds.pairs.at(r);
    out.push_back({inputs.drugs.at(pair.drug), inputs.proteins.at(pair.protein)});
  }
  return out;
}

// --- forward ----------------------------------------------------------------

Matrix cross_attention(const Matrix& query_src, const Matrix& ctx_src, const AttentionWeights& w) {
  return attend(query_src, ctx_src, w).out;
}

Matrix cross_attention(const Matrix& query_src, const Matrix& ctx_src, const ModelParams& p) {
  return cross_attention(query_src, ctx_src, p.attn);
}

std::pair<Matrix, Matrix> dual_align(const Matrix& zs, const Matrix& zt, const ModelParams& p) {
  return {cross_attention(zs, zt, p.attn), cross_attention(zt, zs, p.attn)};
}

Matrix fusion_gate(const Matrix& z_s_cra, const Matrix& z_t_cra, const GateWeights& g) {
  require(z_s_cra.rows() == z_t_cra.rows() && z_s_cra.cols() == z_t_cra.cols(),
          "tsfusion: stream shapes " + z_s_cra.shape_string() + " and " + z_t_cra.shape_string() +
              " differ");
  return sigmoid(add_row_broadcast(add(matmul(z_s_cra, g.ws), matmul(z_t_cra, g.wt)), g.b));
}

Matrix tsfusion(const Matrix& z_s_cra, const Matrix& z_t_cra, const ModelParams& p) {
  const Matrix g = fusion_gate(z_s_cra, z_t_cra, p.gate);
  Matrix out = z_s_cra;
  auto o = out.data();
  auto gd = g.data();
  auto t = z_t_cra.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = t[i] + gd[i] * (o[i] - t[i]);
  return out;
}

Matrix tsfusion_fixed(const Matrix& z_s_cra, const Matrix& z_t_cra, double gate) {
  require(z_s_cra.rows() == z_t_cra.rows() && z_s_cra.cols() == z_t_cra.cols(),
          "tsfusion: stream shapes " + z_s_cra.shape_string() + " and " + z_t_cra.shape_string() +
              " differ");
  Matrix out = z_s_cra;
  auto o = out.data();
  auto t = z_t_cra.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = t[i] + gate * (o[i] - t[i]);
  return out;
}

std::vector<double> predict(const Matrix& zd, const Matrix& zp, const ModelParams& p) {
  require(zd.rows() == zp.rows(), "predict: drug rows " + std::to_string(zd.rows()) +
                                      " != protein rows " + std::to_string(zp.rows()));
  require(zd.cols() + zp.cols() == p.head.hidden.w.rows(),
          "predict: joint width " + std::to_string(zd.cols() + zp.cols()) +
              " does not match head input " + std::to_string(p.head.hidden.w.rows()));
  const Matrix joint = hstack({&zd, &zp});
  const Matrix hidden = relu(linear_forward(joint, p.head.hidden));
  const Matrix logits = linear_forward(hidden, p.head.output);
  std::vector<double> out(logits.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(logits(i, 0));
  return out;
}

BatchActivations forward(std::span<const PairRows> batch, const ModelInputs& inputs,
                         const ModelParams& p, const ForwardOptions& options) {
  std::vector<std::size_t> drug_rows, protein_rows;
  drug_rows.reserve(batch.size());
  protein_rows.reserve(batch.size());
  for (const auto& pr : batch) {
    drug_rows.push_back(pr.drug);
    protein_rows.push_back(pr.protein);
  }

  BatchActivations a;
  a.options = options;
  a.params = &p;
  a.generation = p.generation;
  a.drug = side_forward(gather_rows(inputs.drug_struct, drug_rows),
                        gather_rows(inputs.drug_text, drug_rows), p.proj_drug_struct,
                        p.proj_drug_text, p, options);
  a.protein = side_forward(gather_rows(inputs.protein_struct, protein_rows),
                           gather_rows(inputs.protein_text, protein_rows), p.proj_protein_struct,
                           p.proj_protein_text, p, options);
  a.joint = hstack({&a.drug.fused, &a.protein.fused});
  a.hidden_pre = linear_forward(a.joint, p.head.hidden);
  a.hidden = relu(a.hidden_pre);
  a.logits = linear_forward(a.hidden, p.head.output);
  a.probs.resize(a.logits.rows());
  for (std::size_t i = 0; i < a.probs.size(); ++i) a.probs[i] = sigmoid(a.logits(i, 0));
  return a;
}

// --- losses -----------------------------------------------------------------

double bce_loss(std::span<const double> yhat, std::span<const double> y) {
  check_loss_inputs(yhat, y);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = clip(yhat[i]);
    acc += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return -acc / static_cast<double>(y.size());
}

double focal_loss(std::span<const double> yhat, std::span<const double> y, double gamma,
                  double alpha) {
  check_loss_inputs(yhat, y);
  if (gamma < 0.0) throw ParameterError("focal_loss: gamma must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("focal_loss: alpha must be in (0,1)");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = clip(yhat[i]);
    acc += alpha * y[i] * std::pow(1.0 - p, gamma) * std::log(p) +
           (1.0 - alpha) * (1.0 - y[i]) * std::pow(p, gamma) * std::log(1.0 - p);
  }
  return -acc / static_cast<double>(y.size());
}

double loss(std::span<const double> yhat, std::span<const double> y, const LossSpec& spec) {
  return spec.kind == LossKind::bce ? bce_loss(yhat, y)
                                    : focal_loss(yhat, y, spec.gamma, spec.alpha);
}

// --- backward ---------------------------------------------------------------

Gradients backward(const BatchActivations& acts, std::span<const double> y, const ModelParams& p,
                   const LossSpec& spec) {
  if (acts.params != &p || acts.generation != p.generation) {
    throw ContractError("backward: activations were computed for a different parameter state");
  }
  if (y.size() != acts.probs.size()) {
    throw ShapeError("backward: " + std::to_string(y.size()) + " labels for a batch of " +
                     std::to_string(acts.probs.size()));
  }
  const std::size_t n = y.size();
  const std::size_t h = p.dims.hidden;

  Gradients g;
  g.params = zeros_like(p);
  for (int side = 0; side < 2; ++side) {
    g.attn_by_side[side] = zero_attention(h);
    g.gate_by_side[side] = zero_gate(h);
  }

  Matrix d_logits(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    d_logits(i, 0) = loss_logit_grad(acts.probs[i], y[i], spec) / static_cast<double>(n);

  auto& head = g.params.head;
  head.output.w = matmul_tn(acts.hidden, d_logits);
  head.output.b = column_sums(d_logits);
  Matrix d_hidden = matmul_nt(d_logits, p.head.output.w);
  for (std::size_t i = 0; i < d_hidden.size(); ++i)
    if (acts.hidden_pre.data()[i] <= 0.0) d_hidden.data()[i] = 0.0;
  head.hidden.w = matmul_tn(acts.joint, d_hidden);
  head.hidden.b = column_sums(d_hidden);
  const Matrix d_joint = matmul_nt(d_hidden, p.head.hidden.w);
  const Matrix d_drug = slice_cols(d_joint, 0, h);
  const Matrix d_protein = slice_cols(d_joint, h, 2 * h);

  side_backward(acts.drug, d_drug, p, acts.options, g.params.proj_drug_struct,
                g.params.proj_drug_text, g.attn_by_side[0], g.gate_by_side[0]);
  side_backward(acts.protein, d_protein, p, acts.options, g.params.proj_protein_struct,
                g.params.proj_protein_text, g.attn_by_side[1], g.gate_by_side[1]);

  g.params.attn.wq = add(g.attn_by_side[0].wq, g.attn_by_side[1].wq);
  g.params.attn.wk = add(g.attn_by_side[0].wk, g.attn_by_side[1].wk);
  g.params.attn.wv = add(g.attn_by_side[0].wv, g.attn_by_side[1].wv);
  g.params.gate.ws = add(g.gate_by_side[0].ws, g.gate_by_side[1].ws);
  g.params.gate.wt = add(g.gate_by_side[0].wt, g.gate_by_side[1].wt);
  g.params.gate.b = add(g.gate_by_side[0].b, g.gate_by_side[1].b);
  return g;
}

}  // namespace llm3dti
