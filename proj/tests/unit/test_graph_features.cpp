#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "llm3dti/error.hpp"
#include "llm3dti/graph_features.hpp"
#include "llm3dti/random.hpp"
#include "oracles.hpp"

using namespace llm3dti;

namespace {

std::vector<std::string> ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(100 + i));
  return out;
}

AssociationNetwork unipartite(NetworkKind kind, const std::string& prefix, const Matrix& adj) {
  AssociationNetwork net;
  net.kind = kind;
  net.row_ids = ids(prefix, adj.rows());
  net.col_ids = net.row_ids;
  net.adjacency = adj;
  return net;
}

AssociationNetwork bipartite(NetworkKind kind, const std::string& rp, const std::string& cp,
                             const Matrix& adj) {
  AssociationNetwork net;
  net.kind = kind;
  net.row_ids = ids(rp, adj.rows());
  net.col_ids = ids(cp, adj.cols());
  net.adjacency = adj;
  return net;
}

Matrix random_bipartite(RandomStream& s, std::size_t r, std::size_t c, double p) {
  Matrix a(r, c);
  for (auto& v : a.data()) v = s.uniform() < p ? 1.0 : 0.0;
  return a;
}

// Naive set-based Jaccard for comparison.
double jaccard_sets(const Matrix& a, std::size_t i, std::size_t j) {
  std::vector<std::size_t> ni, nj, inter, uni;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    if (a(i, k) != 0.0) ni.push_back(k);
    if (a(j, k) != 0.0) nj.push_back(k);
  }
  std::set_intersection(ni.begin(), ni.end(), nj.begin(), nj.end(), std::back_inserter(inter));
  std::set_union(ni.begin(), ni.end(), nj.begin(), nj.end(), std::back_inserter(uni));
  return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

std::vector<AssociationNetwork> toy_networks(RandomStream& s, std::size_t nd, std::size_t np) {
  std::vector<AssociationNetwork> nets;
  nets.push_back(unipartite(NetworkKind::drug_drug, "D", oracle::random_graph(s, nd, 0.3)));
  nets.push_back(unipartite(NetworkKind::protein_protein, "P", oracle::random_graph(s, np, 0.3)));
  nets.push_back(bipartite(NetworkKind::drug_disease, "D", "I", random_bipartite(s, nd, 8, 0.3)));
  nets.push_back(bipartite(NetworkKind::drug_sideeffect, "D", "S", random_bipartite(s, nd, 9, 0.3)));
  nets.push_back(bipartite(NetworkKind::protein_disease, "P", "I", random_bipartite(s, np, 8, 0.3)));
  return nets;
}

}  // namespace

TEST_CASE("jaccard worked examples") {
  // a = {1,2,3}, b = {2,3,4}, c = copy of a, d = {5}, e and f empty.
  Matrix adj(6, 6);
  for (int k : {1, 2, 3}) adj(0, k) = adj(2, k) = 1;
  for (int k : {2, 3, 4}) adj(1, k) = 1;
  adj(3, 5) = 1;
  const auto net = bipartite(NetworkKind::drug_disease, "D", "I", adj);
  const Matrix j = jaccard_similarity(net);
  CHECK(j(0, 1) == doctest::Approx(0.5));
  CHECK(j(0, 2) == 1.0);
  CHECK(j(0, 3) == 0.0);
  CHECK(j(4, 5) == 0.0);
  CHECK(j(4, 4) == 1.0);
}

TEST_CASE("jaccard matches set arithmetic and is a similarity matrix") {
  RandomStream s(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t r = 1 + s.index(15), c = 1 + s.index(15);
    const Matrix adj = random_bipartite(s, r, c, s.uniform(0.0, 0.6));
    const Matrix j = jaccard_similarity(bipartite(NetworkKind::drug_disease, "D", "I", adj));
    REQUIRE(j.rows() == r);
    for (std::size_t a = 0; a < r; ++a) {
      CHECK(j(a, a) == 1.0);
      for (std::size_t b = 0; b < r; ++b) {
        CHECK(j(a, b) == j(b, a));
        CHECK(j(a, b) >= 0.0);
        CHECK(j(a, b) <= 1.0);
        if (a != b) CHECK(std::abs(j(a, b) - jaccard_sets(adj, a, b)) <= 1e-15);
      }
    }
  }
}

TEST_CASE("transition matrix is column stochastic with self-loops on isolated nodes") {
  Matrix adj{{0, 1, 0}, {1, 0, 0}, {0, 0, 0}};
  const Matrix w = transition_matrix(adj);
  CHECK(w(2, 2) == 1.0);
  for (std::size_t j = 0; j < 3; ++j) {
    double col = 0;
    for (std::size_t i = 0; i < 3; ++i) col += w(i, j);
    CHECK(col == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("rwr two-node closed form") {
  const auto net = unipartite(NetworkKind::drug_drug, "D", Matrix{{0, 1}, {1, 0}});
  RwrOptions opts;
  opts.restart = 0.5;
  opts.tol = 1e-12;
  const auto d = rwr(net, opts);
  CHECK(std::abs(d.states(0, 0) - 2.0 / 3.0) <= 1e-10);
  CHECK(std::abs(d.states(1, 0) - 1.0 / 3.0) <= 1e-10);
  CHECK(std::abs(d.states(1, 1) - 2.0 / 3.0) <= 1e-10);
}

TEST_CASE("rwr pure restart and isolated nodes") {
  RandomStream s(3);
  const auto net = unipartite(NetworkKind::drug_drug, "D", oracle::random_graph(s, 7, 0.4));
  const auto d = rwr(net, 1.0);
  CHECK(d.states == Matrix::identity(7));

  Matrix adj(3, 3);
  adj(0, 1) = adj(1, 0) = 1;
  const auto iso = rwr(unipartite(NetworkKind::drug_drug, "D", adj), 0.3);
  CHECK(iso.states(2, 2) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(iso.states(0, 2) == 0.0);
  CHECK(iso.states(1, 2) == 0.0);
}

TEST_CASE("rwr matches the direct linear solve on random graphs") {
  RandomStream s(2718);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + s.index(40);
    const Matrix adj = oracle::random_graph(s, n, s.uniform(0.02, 0.5));
    const double r = s.uniform(0.1, 0.9);
    const auto d = rwr(unipartite(NetworkKind::protein_protein, "P", adj), r);
    const Matrix w = oracle::column_stochastic(adj);
    for (std::size_t j = 0; j < n; ++j) {
      const auto ref = oracle::rwr_direct(adj, j, r);
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(d.states(i, j) - ref[i]) <= 1e-6);
        CHECK(d.states(i, j) >= 0.0);
        mass += d.states(i, j);
        double step = (i == j ? r : 0.0);
        for (std::size_t k = 0; k < n; ++k) step += (1.0 - r) * w(i, k) * d.states(k, j);
        CHECK(std::abs(d.states(i, j) - step) <= 1e-8);
      }
      CHECK(std::abs(mass - 1.0) <= 1e-8);
    }
  }
}

TEST_CASE("bipartite rwr walks the union graph") {
  RandomStream s(5);
  const Matrix adj = random_bipartite(s, 6, 4, 0.4);
  const auto net = bipartite(NetworkKind::drug_disease, "D", "I", adj);
  const auto d = rwr(net, 0.4);
  REQUIRE(d.states.rows() == 10);
  REQUIRE(d.states.cols() == 6);
  CHECK(d.context_nodes == std::vector<std::size_t>{6, 7, 8, 9});
  CHECK(d.node_ids[6] == net.col_ids[0]);
  const Matrix walk = walk_adjacency(net);
  for (std::size_t j = 0; j < 6; ++j) {
    const auto ref = oracle::rwr_direct(walk, j, 0.4);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(d.states(i, j) - ref[i]) <= 1e-6);
  }
}

TEST_CASE("rwr argument and convergence errors") {
  const auto net = unipartite(NetworkKind::drug_drug, "D", Matrix{{0, 1}, {1, 0}});
  CHECK_THROWS_AS(rwr(net, 0.0), ParameterError);
  CHECK_THROWS_AS(rwr(net, 1.5), ParameterError);
  RwrOptions opts;
  opts.restart = 0.1;
  opts.max_iter = 1;
  try {
    rwr(net, opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > opts.tol);
  }
}

TEST_CASE("dca full dimension reproduces the feature Gram matrix") {
  RandomStream s(19);
  const auto net = bipartite(NetworkKind::drug_disease, "D", "I", random_bipartite(s, 9, 6, 0.4));
  const auto sim = jaccard_similarity(net);
  const std::vector<DiffusionStateMatrix> diff{rwr(net, 0.5)};
  const Matrix x = dca_features(diff, sim);
  const Matrix gram = oracle::matmul(x, oracle::transpose(x));
  const auto emb = dca_reduce(diff, sim, 9, Side::drug);
  const Matrix back = oracle::matmul(emb.embedding, oracle::transpose(emb.embedding));
  // Centering leaves a null direction, so one column is padded.
  CHECK(frobenius_norm(subtract(back, gram)) <= 1e-6);
  CHECK_FALSE(emb.warnings.empty());
}

TEST_CASE("dca exact-rank input is reconstructed at its rank") {
  // Two distinct association patterns repeated: centered features have rank 1.
  Matrix adj(6, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    adj(i, i % 2) = 1;
    adj(i, 2 + i % 2) = 1;
  }
  const auto net = bipartite(NetworkKind::drug_disease, "D", "I", adj);
  const auto sim = jaccard_similarity(net);
  const std::vector<DiffusionStateMatrix> diff{rwr(net, 0.5)};
  const Matrix x = dca_features(diff, sim);
  const Matrix gram = oracle::matmul(x, oracle::transpose(x));
  const auto emb = dca_reduce(diff, sim, 1, Side::drug);
  const Matrix back = oracle::matmul(emb.embedding, oracle::transpose(emb.embedding));
  CHECK(frobenius_norm(subtract(back, gram)) <= 1e-6 * std::max(1.0, frobenius_norm(gram)));
  CHECK(emb.warnings.empty());
}

TEST_CASE("dca approximation error is non-increasing in dim") {
  RandomStream s(23);
  const auto net = bipartite(NetworkKind::drug_sideeffect, "D", "S", random_bipartite(s, 12, 7, 0.35));
  const auto sim = jaccard_similarity(net);
  const std::vector<DiffusionStateMatrix> diff{rwr(net, 0.5)};
  const Matrix x = dca_features(diff, sim);
  const Matrix gram = oracle::matmul(x, oracle::transpose(x));
  double prev = INFINITY;
  for (std::size_t dim = 1; dim <= 12; ++dim) {
    const auto emb = dca_reduce(diff, sim, dim, Side::drug);
    const double err = frobenius_norm(
        subtract(oracle::matmul(emb.embedding, oracle::transpose(emb.embedding)), gram));
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  CHECK_THROWS_AS(dca_reduce(diff, sim, 0, Side::drug), ParameterError);
  CHECK_THROWS_AS(dca_reduce(diff, sim, 13, Side::drug), ParameterError);
}

TEST_CASE("dca is permutation equivariant") {
  RandomStream s(31);
  const Matrix adj = random_bipartite(s, 8, 5, 0.4);
  const auto net = bipartite(NetworkKind::drug_disease, "D", "I", adj);
  const std::vector<std::size_t> perm{3, 0, 7, 1, 6, 2, 5, 4};
  AssociationNetwork pnet = net;
  for (std::size_t i = 0; i < 8; ++i) {
    pnet.row_ids[i] = net.row_ids[perm[i]];
    for (std::size_t k = 0; k < 5; ++k) pnet.adjacency(i, k) = adj(perm[i], k);
  }
  const std::vector<DiffusionStateMatrix> d1{rwr(net, 0.5)}, d2{rwr(pnet, 0.5)};
  const auto e1 = dca_reduce(d1, jaccard_similarity(net), 8, Side::drug);
  const auto e2 = dca_reduce(d2, jaccard_similarity(pnet), 8, Side::drug);
  // Compare through the Gram matrix, which is free of eigenvector sign and
  // degenerate-subspace ambiguity.
  const Matrix g1 = oracle::matmul(e1.embedding, oracle::transpose(e1.embedding));
  const Matrix g2 = oracle::matmul(e2.embedding, oracle::transpose(e2.embedding));
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(g2(i, j) - g1(perm[i], perm[j])) <= 1e-8);
}

TEST_CASE("topology embeddings: shapes, determinism, indistinguishable nodes") {
  RandomStream s(41);
  auto nets = toy_networks(s, 10, 12);
  // Make drugs 0 and 1 identical everywhere, without linking them to each other.
  for (auto& net : nets) {
    if (row_side(net.kind) != Side::drug) continue;
    Matrix& a = net.adjacency;
    for (std::size_t k = 0; k < a.cols(); ++k) a(1, k) = a(0, k);
    if (is_unipartite(net.kind)) {
      a(0, 1) = a(1, 0) = 0;
      for (std::size_t k = 0; k < a.rows(); ++k) a(k, 1) = a(k, 0);
      a(1, 1) = 0;
    }
  }
  FeatureConfig cfg;
  cfg.drug_dim = 6;
  cfg.protein_dim = 5;
  const auto [drug, prot] = build_topology_embeddings(nets, cfg);
  CHECK(drug.embedding.rows() == 10);
  CHECK(drug.embedding.cols() == 6);
  CHECK(prot.embedding.rows() == 12);
  CHECK(prot.embedding.cols() == 5);
  CHECK(drug.side == Side::drug);
  CHECK(prot.side == Side::protein);
  CHECK(drug.embedding.all_finite());
  for (std::size_t k = 0; k < 6; ++k)
    CHECK(std::abs(drug.embedding(0, k) - drug.embedding(1, k)) <= 1e-9);

  const auto [drug2, prot2] = build_topology_embeddings(nets, cfg);
  CHECK(drug2.embedding == drug.embedding);
  CHECK(prot2.embedding == prot.embedding);
}

TEST_CASE("topology embeddings reject missing kinds and id collisions") {
  RandomStream s(43);
  auto nets = toy_networks(s, 6, 6);
  nets.erase(nets.begin() + 3);  // drug-sideeffect
  try {
    build_topology_embeddings(nets, FeatureConfig{.drug_dim = 3, .protein_dim = 3});
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("drug-sideeffect") != std::string::npos);
  }

  auto clash = toy_networks(s, 6, 6);
  clash[1].row_ids[0] = clash[0].row_ids[0];
  clash[1].col_ids[0] = clash[0].row_ids[0];
  CHECK_THROWS_AS(build_topology_embeddings(clash, FeatureConfig{.drug_dim = 3, .protein_dim = 3}),
                  InputError);
}

TEST_CASE("network validation") {
  auto net = unipartite(NetworkKind::drug_drug, "D", Matrix{{0, 1}, {0, 0}});
  CHECK_THROWS_AS(net.validate(), InputError);
  net.adjacency = Matrix{{0, 2}, {2, 0}};
  CHECK_THROWS_AS(net.validate(), InputError);
  net.adjacency = Matrix{{0, 1}, {1, 0}};
  CHECK_NOTHROW(net.validate());
  CHECK(net.nonzeros() == 2);
}
