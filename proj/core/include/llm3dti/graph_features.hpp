#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llm3dti/numkit.hpp"

namespace llm3dti {

enum class Side { drug, protein };

enum class NetworkKind {
  drug_drug,
  protein_protein,
  drug_disease,
  drug_sideeffect,
  protein_disease,
  drug_protein,
};

std::string_view side_name(Side side);
std::optional<Side> parse_side(std::string_view text);

// Canonical header spelling, e.g. "drug-sideeffect".
std::string_view kind_name(NetworkKind kind);
std::optional<NetworkKind> parse_kind(std::string_view text);
bool is_unipartite(NetworkKind kind);
// Side of the row entities (drug for drug-*, protein for protein-*).
Side row_side(NetworkKind kind);

// Binary adjacency between ordered row and column entities. Unipartite kinds
// share one id list and have a symmetric adjacency.
struct AssociationNetwork {
  NetworkKind kind = NetworkKind::drug_drug;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Matrix adjacency;

  // Throws InputError on non-binary entries, shape drift, or an asymmetric
  // unipartite adjacency.
  void validate() const;
  std::size_t nonzeros() const;
};

// Re-expresses `net` over a larger ordered row universe. Rows absent from
// `net` become empty; ids in `net` missing from `universe` are an InputError.
// Unipartite networks are re-indexed on both axes.
AssociationNetwork expand_rows(const AssociationNetwork& net,
                               const std::vector<std::string>& universe);

// |N(i) ∩ N(j)| / |N(i) ∪ N(j)| over the column sets of each row. Diagonal is
// 1; two empty rows score 0.
Matrix jaccard_similarity(const AssociationNetwork& net);

struct RwrOptions {
  double restart = 0.5;
  int max_iter = 1000;
  double tol = 1e-8;
};

// Stationary RWR distributions. Column j of `states` is the distribution for
// start node start_ids[j] over node_ids. For bipartite networks the walk runs
// on the union graph (row entities first, then column entities);
// `context_nodes` lists the rows DCA reads, which are the association-side
// nodes for bipartite networks and every node otherwise.
struct DiffusionStateMatrix {
  std::vector<std::string> node_ids;
  std::vector<std::string> start_ids;
  std::vector<std::size_t> context_nodes;
  Matrix states;
  double restart = 0.5;
};

// Column-stochastic transition matrix; zero-degree nodes get a self-loop.
Matrix transition_matrix(const Matrix& adjacency);

// Adjacency the walk runs on: the network itself when unipartite, the
// symmetric union [[0, A], [Aᵀ, 0]] otherwise.
Matrix walk_adjacency(const AssociationNetwork& net);

// Power iteration s ← (1−r)·W·s + r·e_j until ‖Δ‖∞ ≤ tol for every start
// node. Starts are the row entities.
DiffusionStateMatrix rwr(const AssociationNetwork& net, const RwrOptions& opts);
DiffusionStateMatrix rwr(const AssociationNetwork& net, double restart);

struct TopologyEmbedding {
  std::vector<std::string> entity_ids;
  Matrix embedding;
  Side side = Side::drug;
  std::vector<double> eigenvalues;
  std::vector<std::string> warnings;
};

struct DcaOptions {
  // Center feature columns before forming the Gram matrix (covariance form).
  bool center = true;
};

// Feature matrix DCA factorizes: for every diffusion, log(s + 1/n) over its
// context nodes with entities as rows, then the similarity matrix, stacked
// column-wise and optionally column-centered.
Matrix dca_features(std::span<const DiffusionStateMatrix> diffusions, const Matrix& similarity,
                    const DcaOptions& opts = {});

// Spectral factorization of the feature Gram matrix G = X·Xᵀ: embedding rows
// are V_i·diag(√λ) for the top `dim` eigenpairs. Non-positive eigenvalues
// produce zero columns and a warning.
TopologyEmbedding dca_reduce(std::span<const DiffusionStateMatrix> diffusions,
                             const Matrix& similarity, std::size_t dim, Side side,
                             const DcaOptions& opts = {});

struct FeatureConfig {
  RwrOptions rwr;
  std::size_t drug_dim = 100;
  std::size_t protein_dim = 100;
  DcaOptions dca;
};

// Drug embedding from drug-drug Jaccard plus RWR over drug-disease and
// drug-sideeffect; protein embedding from protein-protein Jaccard plus RWR
// over protein-disease. Entity universes are the sorted union of ids seen on
// each side.
std::pair<TopologyEmbedding, TopologyEmbedding> build_topology_embeddings(
    std::span<const AssociationNetwork> networks, const FeatureConfig& cfg);

}  // namespace llm3dti
