#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "llm3dti/data_io.hpp"
#include "llm3dti/graph_features.hpp"

namespace llm3dti {

// Planted two-factor world. Every drug and protein carries a structure group
// and an independent text group; a pair interacts iff both groups agree. The
// association networks only see structure groups and the text vectors only
// see text groups, so each modality holds half of the signal.
struct SyntheticConfig {
  std::size_t n_drugs = 100;
  std::size_t n_proteins = 150;
  std::size_t structure_groups = 4;
  std::size_t text_groups = 4;
  std::size_t n_diseases = 60;
  std::size_t n_side_effects = 80;
  double p_in = 0.3;    // edge probability within a structure group
  double p_out = 0.02;  // edge probability across groups
  std::size_t text_dim = 32;
  double text_noise = 0.3;
  std::uint64_t seed = 0;
};

struct SyntheticWorld {
  SyntheticConfig config;
  std::vector<AssociationNetwork> networks;  // the five auxiliary kinds
  TextEmbedding drug_text;
  TextEmbedding protein_text;
  // Pure-noise text of the same shape, for the wo_llm_text variant.
  TextEmbedding drug_noise_text;
  TextEmbedding protein_noise_text;
  std::vector<PairKey> positives;
  EntityUniverse universe;
  std::vector<std::size_t> drug_structure_group, drug_text_group;
  std::vector<std::size_t> protein_structure_group, protein_text_group;
};

SyntheticWorld make_synthetic_world(const SyntheticConfig& cfg);

// Layout under `dir`:
//   networks/<kind>.tsv, text/drug.tsv, text/protein.tsv,
//   text/drug_noise.tsv, text/protein_noise.tsv, interactions.tsv
void write_synthetic_world(const SyntheticWorld& world, const std::filesystem::path& dir);

}  // namespace llm3dti
