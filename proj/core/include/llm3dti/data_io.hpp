#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llm3dti/graph_features.hpp"
#include "llm3dti/numkit.hpp"
#include "llm3dti/random.hpp"

namespace llm3dti {

// Per-entity text-semantic vectors produced outside this library.
struct TextEmbedding {
  std::vector<std::string> entity_ids;
  Matrix embedding;
  Side side = Side::drug;
  std::string provenance;

  // Unique ids, matching row count, finite entries.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Association networks: tab-separated `row_id<TAB>col_id` edges after a
// single `# kind=<kind>` header line.

AssociationNetwork load_network(const std::filesystem::path& path, NetworkKind expected);
// Kind taken from the header.
AssociationNetwork load_network(const std::filesystem::path& path);
void save_network(const AssociationNetwork& net, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Embeddings. TSV rows are `entity_id<TAB>v1<TAB>...<TAB>vd`; lines starting
// with '#' are comments, `# provenance=<tag>` sets the provenance.
//
// EMB1 binary: 4-byte magic "EMB1", uint32 row count, uint32 dim (both
// little-endian), then rows×dim little-endian IEEE-754 doubles, row-major.
// Entity ids for an EMB1 file live in a sidecar `<path>.ids`, one per line.

void write_emb1(std::ostream& out, const Matrix& m);
Matrix read_emb1(std::istream& in);
void write_emb1(const std::filesystem::path& path, const Matrix& m);
Matrix read_emb1(const std::filesystem::path& path);

bool is_emb1_file(const std::filesystem::path& path);
std::filesystem::path ids_sidecar(const std::filesystem::path& path);

// Reads TSV or EMB1 (+ sidecar), detected by magic bytes.
TextEmbedding load_text_embeddings(const std::filesystem::path& path, Side side);
void save_text_embeddings_tsv(const TextEmbedding& emb, const std::filesystem::path& path);
void save_embedding_emb1(const std::vector<std::string>& ids, const Matrix& m,
                         const std::filesystem::path& path);

// Gaussian embedding. With planted factors (n×k), each row is
// factors_i·L + noise·ε where L is a k×d gaussian loading scaled by 1/√k.
struct PlantedFactors {
  Matrix factors;
  double noise = 0.0;
};

TextEmbedding synth_embeddings(RandomStream& stream, std::size_t n, std::size_t d,
                               const PlantedFactors* planted = nullptr, Side side = Side::drug,
                               const std::string& id_prefix = "e");

// ---------------------------------------------------------------------------
// Labeled interaction pairs.

enum class Split : std::uint8_t { unassigned, train, valid, test };
std::string_view split_name(Split s);

struct LabeledPair {
  std::string drug;
  std::string protein;
  int label = 0;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

using PairKey = std::pair<std::string, std::string>;

struct InteractionDataset {
  std::vector<LabeledPair> pairs;
  std::vector<Split> split;  // parallel to pairs
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return pairs.size(); }
  std::vector<std::size_t> indices(Split s) const;
  std::size_t count(Split s, int label) const;
  // Subset with split labels preserved.
  InteractionDataset subset(std::span<const std::size_t> rows) const;
  // No duplicate pairs, binary labels, one split entry per pair.
  void validate() const;
};

struct EntityUniverse {
  std::vector<std::string> drugs;
  std::vector<std::string> proteins;
};

// Positives plus ratio×|positives| uniformly drawn non-positive pairs
// (without replacement). Positives come first, in input order.
InteractionDataset sample_negatives(std::span<const PairKey> positives, std::size_t ratio,
                                    RandomStream& stream, const EntityUniverse& universe);

struct SplitFractions {
  double train = 0.7;
  double valid = 0.1;
  double test = 0.2;
};

// Label-stratified random partition into train/valid/test.
InteractionDataset make_splits(InteractionDataset ds, const SplitFractions& fractions,
                               RandomStream& stream);

// `drug_id<TAB>protein_id<TAB>label[<TAB>split]`; '#' lines are comments.
InteractionDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const InteractionDataset& ds, const std::filesystem::path& path,
                  bool with_split = false);

std::vector<PairKey> positive_pairs(const InteractionDataset& ds);

}  // namespace llm3dti
