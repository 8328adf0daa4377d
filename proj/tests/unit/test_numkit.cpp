#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "llm3dti/error.hpp"
#include "llm3dti/memory.hpp"
#include "llm3dti/numkit.hpp"
#include "llm3dti/random.hpp"
#include "oracles.hpp"

using namespace llm3dti;

TEST_CASE("matmul hand examples") {
  const Matrix a{{1, 2}, {3, 4}};
  CHECK(matmul(Matrix::identity(2), a) == a);
  const Matrix b{{5}, {6}};
  CHECK(matmul(a, b) == Matrix{{17}, {39}});
}

TEST_CASE("matmul shape error names both shapes") {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2,3)") != std::string::npos);
  }
}

TEST_CASE("products agree with the triple-loop oracle") {
  RandomStream s(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + s.index(9), k = 1 + s.index(9), n = 1 + s.index(9);
    const Matrix a = oracle::random_matrix(s, m, k);
    const Matrix b = oracle::random_matrix(s, k, n);
    CHECK(max_abs_diff(matmul(a, b), oracle::matmul(a, b)) <= 1e-12);
    const Matrix at = oracle::transpose(a);
    CHECK(max_abs_diff(matmul_tn(at, b), oracle::matmul(a, b)) <= 1e-12);
    const Matrix bt = oracle::transpose(b);
    CHECK(max_abs_diff(matmul_nt(a, bt), oracle::matmul(a, b)) <= 1e-12);
    CHECK(transpose(a) == at);
  }
  const Matrix a = oracle::random_matrix(s, 7, 5), b = oracle::random_matrix(s, 5, 3);
  const Matrix c = matmul(a, b);
  CHECK(c.rows() == 7);
  CHECK(c.cols() == 3);
}

TEST_CASE("elementwise helpers") {
  const Matrix a{{1, -2}, {3, 4}};
  const Matrix b{{0.5, 1}, {-1, 2}};
  CHECK(add(a, b) == Matrix{{1.5, -1}, {2, 6}});
  CHECK(subtract(a, b) == Matrix{{0.5, -3}, {4, 2}});
  CHECK(hadamard(a, b) == Matrix{{0.5, -2}, {-3, 8}});
  CHECK(scale(a, 2) == Matrix{{2, -4}, {6, 8}});
  CHECK(relu(a) == Matrix{{1, 0}, {3, 4}});
  CHECK(column_sums(a) == Matrix{{4, 2}});
  CHECK(add_row_broadcast(a, Matrix{{1, 1}}) == Matrix{{2, -1}, {4, 5}});
  Matrix c = a;
  axpy(c, -1.0, a);
  CHECK(c == Matrix(2, 2));
  CHECK(hstack({&a, &b}) == Matrix{{1, -2, 0.5, 1}, {3, 4, -1, 2}});
  const std::size_t rows[] = {1, 1, 0};
  CHECK(gather_rows(a, rows) == Matrix{{3, 4}, {3, 4}, {1, -2}});
  CHECK(slice_cols(hstack({&a, &b}), 1, 3) == Matrix{{-2, 0.5}, {4, -1}});
  CHECK_THROWS_AS(add(a, Matrix(3, 2)), ShapeError);
}

TEST_CASE("softmax rows") {
  const Matrix u = softmax_rows(Matrix{{0, 0, 0}});
  for (double v : u.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
  const Matrix big = softmax_rows(Matrix{{1000, 0}});
  CHECK(std::abs(big(0, 0) - 1.0) <= 1e-12);
  CHECK(std::abs(big(0, 1)) <= 1e-12);
  CHECK(big.all_finite());
  const Matrix x = softmax_rows(Matrix{{1, 2, 3}});
  CHECK(std::abs(x(0, 0) - 0.09003057) < 1e-8);
  CHECK(std::abs(x(0, 1) - 0.24472847) < 1e-8);
  CHECK(std::abs(x(0, 2) - 0.66524096) < 1e-8);

  RandomStream s(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix m = oracle::random_matrix(s, 1 + s.index(5), 1 + s.index(8), 30.0);
    const Matrix p = softmax_rows(m);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double sum = 0.0;
      for (double v : p.row(r)) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::abs(sigmoid(2.0) - 0.8807970780) < 1e-10);
  RandomStream s(5);
  for (int i = 0; i < 200; ++i) {
    const double x = s.uniform(-40, 40);
    CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15);
    CHECK(sigmoid(x) > 0.0);
    CHECK(sigmoid(x) < 1.0);
  }
  CHECK(sigmoid(1000.0) < 1.0);
  CHECK(sigmoid(-1000.0) > 0.0);
  const Matrix m = sigmoid(Matrix{{0, 2}});
  CHECK(m(0, 0) == 0.5);
}

TEST_CASE("eigh_topk diagonal and rank-one") {
  const Matrix d{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}};
  const EigenPairs top = eigh_topk(d, 2);
  REQUIRE(top.values.size() == 2);
  CHECK(top.values[0] == doctest::Approx(3));
  CHECK(top.values[1] == doctest::Approx(2));
  CHECK(std::abs(std::abs(top.vectors(0, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(top.vectors(1, 1)) - 1.0) < 1e-12);

  const double u[] = {0.6, 0.0, 0.8};
  Matrix r1(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r1(i, j) = u[i] * u[j];
  const EigenPairs one = eigh_topk(r1, 1);
  CHECK(one.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(one.vectors(i, 0) - u[i]) < 1e-10);
}

TEST_CASE("eigh reconstructs random symmetric matrices and matches Eigen") {
  RandomStream s(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + s.index(12);
    const Matrix a = oracle::random_symmetric(s, n);
    const EigenPairs e = eigh(a);
    Matrix lambda(n, n);
    for (std::size_t i = 0; i < n; ++i) lambda(i, i) = e.values[i];
    const Matrix rec = oracle::matmul(oracle::matmul(e.vectors, lambda), oracle::transpose(e.vectors));
    CHECK(frobenius_norm(subtract(rec, a)) <= 1e-6);
    const Matrix gram = oracle::matmul(oracle::transpose(e.vectors), e.vectors);
    CHECK(max_abs_diff(gram, Matrix::identity(n)) <= 1e-9);
    for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] >= e.values[i]);

    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = a(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(m);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(e.values[i] - ref.eigenvalues()(static_cast<Eigen::Index>(n - 1 - i))) <= 1e-9);
    }
    // Residual bound per pair.
    for (std::size_t k = 0; k < n; ++k) {
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double sv = 0.0;
        for (std::size_t j = 0; j < n; ++j) sv += a(i, j) * e.vectors(j, k);
        res += (sv - e.values[k] * e.vectors(i, k)) * (sv - e.values[k] * e.vectors(i, k));
      }
      CHECK(std::sqrt(res) <= 1e-6 * std::max(1.0, frobenius_norm(a)));
    }
    // Sign convention: the largest-magnitude entry of every vector is positive.
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (std::abs(e.vectors(i, k)) > std::abs(e.vectors(arg, k)) + 1e-12) arg = i;
      CHECK(e.vectors(arg, k) > 0.0);
    }
  }
}

TEST_CASE("eigh_topk parameter errors") {
  const Matrix a = Matrix::identity(3);
  CHECK_THROWS_AS(eigh_topk(a, 0), ParameterError);
  CHECK_THROWS_AS(eigh_topk(a, 4), ParameterError);
  CHECK_THROWS_AS(eigh(Matrix{{1, 2}, {0, 1}}), ParameterError);
}

TEST_CASE("eigh reports non-convergence") {
  RandomStream s(2);
  const Matrix a = oracle::random_symmetric(s, 10);
  JacobiOptions opts;
  opts.max_sweeps = 1;
  try {
    eigh(a, opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("random streams are deterministic") {
  RandomStream a(42), b(42), c(43);
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differ |= x != c.next_u64();
  }
  CHECK(differ);
  RandomStream g1(9), g2(9);
  for (int i = 0; i < 100; ++i) CHECK(g1.gaussian() == g2.gaussian());
  RandomStream u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.index(7) < 7);
  }
}

TEST_CASE("shuffle golden permutation") {
  auto s = seeded_stream(2024);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  s.shuffle(v);
  auto s2 = seeded_stream(2024);
  std::vector<int> w{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  s2.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  // Recorded once; a change here means the stream definition changed.
  CHECK(v == std::vector<int>{1, 3, 6, 0, 2, 8, 7, 5, 9, 4});
}

TEST_CASE("derived streams are keyed by label") {
  const RandomStream root(5);
  auto a = root.derive("x"), b = root.derive("x"), c = root.derive("y");
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("tracked allocations raise the peak") {
  memory::reset_peak();
  const auto before = memory::peak_bytes();
  {
    Matrix big(200, 200);
    CHECK(memory::current_bytes() >= 200 * 200 * sizeof(double));
  }
  CHECK(memory::peak_bytes() >= before + 200 * 200 * sizeof(double));
}
