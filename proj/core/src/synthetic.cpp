#include "llm3dti/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "llm3dti/error.hpp"

namespace llm3dti {

namespace {

std::vector<std::string> make_ids(const char* prefix, std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
    ids.emplace_back(buf);
  }
  return ids;
}

// Balanced assignment of n items to k groups in random order.
std::vector<std::size_t> balanced_groups(RandomStream& stream, std::size_t n, std::size_t k) {
  std::vector<std::size_t> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = i % k;
  stream.shuffle(g);
  return g;
}

// Every row gets at least one edge, to an in-group column when one exists.
void ensure_row_degree(Matrix& adj, const std::vector<std::size_t>& row_group,
                       const std::vector<std::size_t>& col_group, RandomStream& stream,
                       bool symmetric) {
  for (std::size_t i = 0; i < adj.rows(); ++i) {
    bool any = false;
    for (std::size_t j = 0; j < adj.cols() && !any; ++j) any = adj(i, j) != 0.0 && (!symmetric || i != j);
    if (any) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < adj.cols(); ++j)
      if (col_group[j] == row_group[i] && (!symmetric || j != i)) candidates.push_back(j);
    if (candidates.empty()) {
      for (std::size_t j = 0; j < adj.cols(); ++j)
        if (!symmetric || j != i) candidates.push_back(j);
    }
    const std::size_t j = candidates[stream.index(candidates.size())];
    adj(i, j) = 1.0;
    if (symmetric) adj(j, i) = 1.0;
  }
}

AssociationNetwork block_network(NetworkKind kind, const std::vector<std::string>& rows,
                                 const std::vector<std::size_t>& row_group,
                                 const std::vector<std::string>& cols,
                                 const std::vector<std::size_t>& col_group,
                                 const SyntheticConfig& cfg, RandomStream& stream) {
  const bool unipartite = is_unipartite(kind);
  AssociationNetwork net;
  net.kind = kind;
  net.row_ids = rows;
  net.col_ids = cols;
  net.adjacency = Matrix(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = unipartite ? i + 1 : 0; j < cols.size(); ++j) {
      const double p = row_group[i] == col_group[j] ? cfg.p_in : cfg.p_out;
      if (stream.uniform() < p) {
        net.adjacency(i, j) = 1.0;
        if (unipartite) net.adjacency(j, i) = 1.0;
      }
    }
  }
  ensure_row_degree(net.adjacency, row_group, col_group, stream, unipartite);
  if (!unipartite) {
    // Columns need an edge too, or a reload from file would drop them.
    Matrix t = transpose(net.adjacency);
    ensure_row_degree(t, col_group, row_group, stream, false);
    net.adjacency = transpose(t);
  }
  return net;
}

TextEmbedding planted_text(const std::vector<std::string>& ids,
                           const std::vector<std::size_t>& group, const Matrix& loading,
                           double noise, Side side, RandomStream& stream) {
  TextEmbedding emb;
  emb.entity_ids = ids;
  emb.side = side;
  emb.provenance = "synthetic-planted";
  emb.embedding = Matrix(ids.size(), loading.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto row = emb.embedding.row(i);
    auto centre = loading.row(group[i]);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = centre[c] + noise * stream.gaussian();
  }
  return emb;
}

TextEmbedding noise_text(const std::vector<std::string>& ids, std::size_t dim, Side side,
                         RandomStream& stream) {
  TextEmbedding emb;
  emb.entity_ids = ids;
  emb.side = side;
  emb.provenance = "synthetic-noise";
  emb.embedding = stream.gaussian_matrix(ids.size(), dim);
  return emb;
}

}  // namespace

SyntheticWorld make_synthetic_world(const SyntheticConfig& cfg) {
  if (cfg.n_drugs < 2 || cfg.n_proteins < 2 || cfg.structure_groups < 1 || cfg.text_groups < 1 ||
      cfg.n_diseases < 1 || cfg.n_side_effects < 1 || cfg.text_dim < 1) {
    throw ParameterError("synthetic world: counts must be positive (at least 2 entities per side)");
  }
  if (!(cfg.p_in >= 0.0 && cfg.p_in <= 1.0 && cfg.p_out >= 0.0 && cfg.p_out <= 1.0)) {
    throw ParameterError("synthetic world: edge probabilities must be in [0,1]");
  }
  RandomStream root(cfg.seed);
  RandomStream groups = root.derive("groups");
  RandomStream edges = root.derive("edges");
  RandomStream text = root.derive("text");

  SyntheticWorld w;
  w.config = cfg;
  const auto drugs = make_ids("D", cfg.n_drugs);
  const auto proteins = make_ids("P", cfg.n_proteins);
  const auto diseases = make_ids("DIS", cfg.n_diseases);
  const auto side_effects = make_ids("SE", cfg.n_side_effects);
  w.universe = {drugs, proteins};

  w.drug_structure_group = balanced_groups(groups, cfg.n_drugs, cfg.structure_groups);
  w.drug_text_group = balanced_groups(groups, cfg.n_drugs, cfg.text_groups);
  w.protein_structure_group = balanced_groups(groups, cfg.n_proteins, cfg.structure_groups);
  w.protein_text_group = balanced_groups(groups, cfg.n_proteins, cfg.text_groups);
  const auto disease_group = balanced_groups(groups, cfg.n_diseases, cfg.structure_groups);
  const auto side_effect_group = balanced_groups(groups, cfg.n_side_effects, cfg.structure_groups);

  w.networks.push_back(block_network(NetworkKind::drug_drug, drugs, w.drug_structure_group, drugs,
                                     w.drug_structure_group, cfg, edges));
  w.networks.push_back(block_network(NetworkKind::drug_disease, drugs, w.drug_structure_group,
                                     diseases, disease_group, cfg, edges));
  w.networks.push_back(block_network(NetworkKind::drug_sideeffect, drugs, w.drug_structure_group,
                                     side_effects, side_effect_group, cfg, edges));
  w.networks.push_back(block_network(NetworkKind::protein_protein, proteins,
                                     w.protein_structure_group, proteins,
                                     w.protein_structure_group, cfg, edges));
  w.networks.push_back(block_network(NetworkKind::protein_disease, proteins,
                                     w.protein_structure_group, diseases, disease_group, cfg,
                                     edges));

  // One loading shared by both sides, as if both came from the same encoder.
  const Matrix loading = text.gaussian_matrix(cfg.text_groups, cfg.text_dim,
                                              1.0 / std::sqrt(static_cast<double>(cfg.text_dim)) * 2.0);
  w.drug_text = planted_text(drugs, w.drug_text_group, loading, cfg.text_noise / std::sqrt(static_cast<double>(cfg.text_dim)),
                             Side::drug, text);
  w.protein_text = planted_text(proteins, w.protein_text_group, loading,
                                cfg.text_noise / std::sqrt(static_cast<double>(cfg.text_dim)),
                                Side::protein, text);
  RandomStream noise = root.derive("noise-text");
  w.drug_noise_text = noise_text(drugs, cfg.text_dim, Side::drug, noise);
  w.protein_noise_text = noise_text(proteins, cfg.text_dim, Side::protein, noise);

  for (std::size_t d = 0; d < cfg.n_drugs; ++d) {
    for (std::size_t p = 0; p < cfg.n_proteins; ++p) {
      if (w.drug_structure_group[d] == w.protein_structure_group[p] &&
          w.drug_text_group[d] == w.protein_text_group[p]) {
        w.positives.emplace_back(drugs[d], proteins[p]);
      }
    }
  }
  return w;
}

void write_synthetic_world(const SyntheticWorld& world, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "networks");
  fs::create_directories(dir / "text");
  for (const auto& net : world.networks) {
    save_network(net, dir / "networks" / (std::string(kind_name(net.kind)) + ".tsv"));
  }
  save_text_embeddings_tsv(world.drug_text, dir / "text" / "drug.tsv");
  save_text_embeddings_tsv(world.protein_text, dir / "text" / "protein.tsv");
  save_text_embeddings_tsv(world.drug_noise_text, dir / "text" / "drug_noise.tsv");
  save_text_embeddings_tsv(world.protein_noise_text, dir / "text" / "protein_noise.tsv");
  InteractionDataset ds;
  for (const auto& [d, p] : world.positives) ds.pairs.push_back({d, p, 1});
  ds.split.assign(ds.pairs.size(), Split::unassigned);
  save_dataset(ds, dir / "interactions.tsv");
}

}  // namespace llm3dti
