#include "llm3dti/graph_features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "llm3dti/error.hpp"

namespace llm3dti {

namespace {

constexpr std::array<std::pair<NetworkKind, std::string_view>, 6> kKindNames{{
    {NetworkKind::drug_drug, "drug-drug"},
    {NetworkKind::protein_protein, "protein-protein"},
    {NetworkKind::drug_disease, "drug-disease"},
    {NetworkKind::drug_sideeffect, "drug-sideeffect"},
    {NetworkKind::protein_disease, "protein-disease"},
    {NetworkKind::drug_protein, "drug-protein"},
}};

std::unordered_map<std::string, std::size_t> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], i);
  return out;
}

const AssociationNetwork* find_kind(std::span<const AssociationNetwork> networks,
                                    NetworkKind kind) {
  for (const auto& n : networks)
    if (n.kind == kind) return &n;
  return nullptr;
}

const AssociationNetwork& require_kind(std::span<const AssociationNetwork> networks,
                                       NetworkKind kind) {
  const AssociationNetwork* n = find_kind(networks, kind);
  if (n == nullptr) {
    throw InputError("missing required network kind '" + std::string(kind_name(kind)) + "'");
  }
  return *n;
}

}  // namespace

std::string_view side_name(Side side) { return side == Side::drug ? "drug" : "protein"; }

std::optional<Side> parse_side(std::string_view text) {
  if (text == "drug") return Side::drug;
  if (text == "protein") return Side::protein;
  return std::nullopt;
}

std::string_view kind_name(NetworkKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<NetworkKind> parse_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames)
    if (name == text) return k;
  return std::nullopt;
}

bool is_unipartite(NetworkKind kind) {
  return kind == NetworkKind::drug_drug || kind == NetworkKind::protein_protein;
}

Side row_side(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::protein_protein:
    case NetworkKind::protein_disease:
      return Side::protein;
    default:
      return Side::drug;
  }
}

void AssociationNetwork::validate() const {
  const std::string label(kind_name(kind));
  if (adjacency.rows() != row_ids.size() || adjacency.cols() != col_ids.size()) {
    throw InputError(label + " network: adjacency " + adjacency.shape_string() +
                     " does not match id lists (" + std::to_string(row_ids.size()) + "," +
                     std::to_string(col_ids.size()) + ")");
  }
  for (double v : adjacency.data())
    if (v != 0.0 && v != 1.0) throw InputError(label + " network: adjacency is not binary");
  if (is_unipartite(kind)) {
    if (row_ids != col_ids) throw InputError(label + " network: row and column ids differ");
    for (std::size_t i = 0; i < adjacency.rows(); ++i)
      for (std::size_t j = i + 1; j < adjacency.cols(); ++j)
        if (adjacency(i, j) != adjacency(j, i))
          throw InputError(label + " network: adjacency is not symmetric");
  }
}

std::size_t AssociationNetwork::nonzeros() const {
  return static_cast<std::size_t>(
      std::count_if(adjacency.data().begin(), adjacency.data().end(),
                    [](double v) { return v != 0.0; }));
}

AssociationNetwork expand_rows(const AssociationNetwork& net,
                               const std::vector<std::string>& universe) {
  const auto where = index_of(universe);
  auto locate = [&](const std::string& id) {
    auto it = where.find(id);
    if (it == where.end()) {
      throw InputError(std::string(kind_name(net.kind)) + " network: id '" + id +
                       "' is not in the entity universe");
    }
    return it->second;
  };

  AssociationNetwork out;
  out.kind = net.kind;
  out.row_ids = universe;
  out.col_ids = is_unipartite(net.kind) ? universe : net.col_ids;
  out.adjacency = Matrix(out.row_ids.size(), out.col_ids.size());

  std::vector<std::size_t> row_map(net.row_ids.size());
  for (std::size_t i = 0; i < net.row_ids.size(); ++i) row_map[i] = locate(net.row_ids[i]);
  std::vector<std::size_t> col_map(net.col_ids.size());
  for (std::size_t j = 0; j < net.col_ids.size(); ++j)
    col_map[j] = is_unipartite(net.kind) ? locate(net.col_ids[j]) : j;

  for (std::size_t i = 0; i < net.row_ids.size(); ++i)
    for (std::size_t j = 0; j < net.col_ids.size(); ++j)
      out.adjacency(row_map[i], col_map[j]) = net.adjacency(i, j);
  return out;
}

Matrix jaccard_similarity(const AssociationNetwork& net) {
  const Matrix& a = net.adjacency;
  const std::size_t n = a.rows();
  // Binary rows: intersections are inner products, unions follow by
  // inclusion–exclusion.
  const Matrix inter = matmul_nt(a, a);
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (double v : a.row(i)) degree[i] += v;

  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    out(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double uni = degree[i] + degree[j] - inter(i, j);
      const double s = uni > 0.0 ? inter(i, j) / uni : 0.0;
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

Matrix transition_matrix(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw ShapeError("transition_matrix: adjacency not square " + adjacency.shape_string());
  }
  const std::size_t n = adjacency.rows();
  Matrix w = adjacency;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += w(i, j);
    if (col == 0.0) {
      w(j, j) = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) w(i, j) /= col;
  }
  return w;
}

Matrix walk_adjacency(const AssociationNetwork& net) {
  if (is_unipartite(net.kind)) return net.adjacency;
  const std::size_t r = net.row_ids.size();
  const std::size_t c = net.col_ids.size();
  Matrix out(r + c, r + c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double v = net.adjacency(i, j);
      out(i, r + j) = v;
      out(r + j, i) = v;
    }
  return out;
}

DiffusionStateMatrix rwr(const AssociationNetwork& net, const RwrOptions& opts) {
  if (!(opts.restart > 0.0 && opts.restart <= 1.0)) {
    throw ParameterError("rwr: restart probability " + std::to_string(opts.restart) +
                         " outside (0,1]");
  }
  if (opts.max_iter < 1) throw ParameterError("rwr: max_iter must be >= 1");

  const Matrix w = transition_matrix(walk_adjacency(net));
  const std::size_t m = w.rows();
  const std::size_t starts = net.row_ids.size();

  DiffusionStateMatrix out;
  out.restart = opts.restart;
  out.start_ids = net.row_ids;
  out.node_ids = net.row_ids;
  if (is_unipartite(net.kind)) {
    out.context_nodes.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.context_nodes[i] = i;
  } else {
    out.node_ids.insert(out.node_ids.end(), net.col_ids.begin(), net.col_ids.end());
    for (std::size_t i = starts; i < m; ++i) out.context_nodes.push_back(i);
  }

  Matrix restart_mass(m, starts);
  for (std::size_t j = 0; j < starts; ++j) restart_mass(j, j) = opts.restart;

  Matrix s(m, starts);
  for (std::size_t j = 0; j < starts; ++j) s(j, j) = 1.0;

  const double carry = 1.0 - opts.restart;
  double residual = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    Matrix next = add(scale(matmul(w, s), carry), restart_mass);
    residual = max_abs_diff(next, s);
    if (residual <= opts.tol) {
      out.states = std::move(s);
      return out;
    }
    s = std::move(next);
  }
  std::ostringstream os;
  os << "rwr: " << kind_name(net.kind) << " walk did not converge in " << opts.max_iter
     << " iterations (residual " << residual << ")";
  throw ConvergenceError(os.str(), residual);
}

DiffusionStateMatrix rwr(const AssociationNetwork& net, double restart) {
  RwrOptions opts;
  opts.restart = restart;
  return rwr(net, opts);
}

Matrix dca_features(std::span<const DiffusionStateMatrix> diffusions, const Matrix& similarity,
                    const DcaOptions& opts) {
  const std::size_t n = similarity.rows();
  if (similarity.cols() != n) {
    throw ShapeError("dca: similarity matrix not square " + similarity.shape_string());
  }
  std::vector<Matrix> blocks;
  blocks.reserve(diffusions.size() + 1);
  for (const auto& d : diffusions) {
    if (d.start_ids.size() != n || d.states.cols() != n) {
      throw ShapeError("dca: diffusion over " + std::to_string(d.start_ids.size()) +
                       " start nodes does not match similarity of size " + std::to_string(n));
    }
    const double eps = 1.0 / static_cast<double>(d.states.rows());
    Matrix block(n, d.context_nodes.size());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d.context_nodes.size(); ++k)
        block(i, k) = std::log(d.states(d.context_nodes[k], i) + eps);
    blocks.push_back(std::move(block));
  }
  std::vector<const Matrix*> parts;
  for (const auto& b : blocks) parts.push_back(&b);
  parts.push_back(&similarity);
  Matrix x = hstack(parts);

  if (opts.center && n > 0) {
    Matrix mean = scale(column_sums(x), 1.0 / static_cast<double>(n));
    x = add_row_broadcast(x, scale(mean, -1.0));
  }
  return x;
}

TopologyEmbedding dca_reduce(std::span<const DiffusionStateMatrix> diffusions,
                             const Matrix& similarity, std::size_t dim, Side side,
                             const DcaOptions& opts) {
  const std::size_t n = similarity.rows();
  if (dim < 1 || dim > n) {
    throw ParameterError("dca: dim " + std::to_string(dim) + " outside [1," + std::to_string(n) +
                         "]");
  }
  for (const auto& d : diffusions)
    if (d.start_ids != diffusions.front().start_ids)
      throw InputError("dca: diffusion matrices disagree on node ordering");

  const Matrix x = dca_features(diffusions, similarity, opts);
  const Matrix gram = symmetrize(matmul_nt(x, x));
  const EigenPairs eig = eigh_topk(gram, dim);

  TopologyEmbedding out;
  out.side = side;
  out.entity_ids = diffusions.empty() ? std::vector<std::string>{} : diffusions.front().start_ids;
  if (out.entity_ids.empty()) {
    out.entity_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.entity_ids.push_back(std::to_string(i));
  }
  out.eigenvalues = eig.values;
  out.embedding = Matrix(n, dim);

  const double floor = 1e-12 * std::max(1.0, std::abs(eig.values.front()));
  std::size_t kept = 0;
  for (std::size_t j = 0; j < dim; ++j) {
    if (eig.values[j] <= floor) continue;
    const double root = std::sqrt(eig.values[j]);
    for (std::size_t i = 0; i < n; ++i) out.embedding(i, j) = eig.vectors(i, j) * root;
    ++kept;
  }
  if (kept < dim) {
    out.warnings.push_back("dca: only " + std::to_string(kept) + " positive eigenvalues for dim " +
                           std::to_string(dim) + "; remaining columns are zero");
  }
  return out;
}

std::pair<TopologyEmbedding, TopologyEmbedding> build_topology_embeddings(
    std::span<const AssociationNetwork> networks, const FeatureConfig& cfg) {
  const auto& drug_drug = require_kind(networks, NetworkKind::drug_drug);
  const auto& drug_disease = require_kind(networks, NetworkKind::drug_disease);
  const auto& drug_side = require_kind(networks, NetworkKind::drug_sideeffect);
  const auto& prot_prot = require_kind(networks, NetworkKind::protein_protein);
  const auto& prot_disease = require_kind(networks, NetworkKind::protein_disease);
  for (const auto& n : networks) n.validate();

  auto universe = [](std::initializer_list<const AssociationNetwork*> nets) {
    std::set<std::string> ids;
    for (const auto* n : nets) ids.insert(n->row_ids.begin(), n->row_ids.end());
    return std::vector<std::string>(ids.begin(), ids.end());
  };
  const auto drugs = universe({&drug_drug, &drug_disease, &drug_side});
  const auto proteins = universe({&prot_prot, &prot_disease});

  {
    std::set<std::string> drug_set(drugs.begin(), drugs.end());
    for (const auto& p : proteins)
      if (drug_set.count(p)) {
        throw InputError("id namespace collision: '" + p + "' is both a drug and a protein");
      }
    for (const auto* net : {&drug_disease, &drug_side, &prot_disease}) {
      std::set<std::string> rows(net->row_ids.begin(), net->row_ids.end());
      for (const auto& c : net->col_ids)
        if (rows.count(c)) {
          throw InputError("id namespace collision in " + std::string(kind_name(net->kind)) +
                           " network: '" + c + "' appears on both sides");
        }
    }
  }

  auto side_embedding = [&](const AssociationNetwork& sim_net,
                            std::initializer_list<const AssociationNetwork*> walks,
                            const std::vector<std::string>& ids, std::size_t dim, Side side) {
    const Matrix sim = jaccard_similarity(expand_rows(sim_net, ids));
    std::vector<DiffusionStateMatrix> diffusions;
    for (const auto* w : walks) diffusions.push_back(rwr(expand_rows(*w, ids), cfg.rwr));
    return dca_reduce(diffusions, sim, dim, side, cfg.dca);
  };

  return {side_embedding(drug_drug, {&drug_disease, &drug_side}, drugs, cfg.drug_dim, Side::drug),
          side_embedding(prot_prot, {&prot_disease}, proteins, cfg.protein_dim, Side::protein)};
}

}  // namespace llm3dti
