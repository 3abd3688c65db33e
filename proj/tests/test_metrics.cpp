#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ulhm/embedding_set.hpp"
#include "ulhm/errors.hpp"
#include "ulhm/metrics.hpp"
#include "ulhm/neighbors.hpp"
#include "ulhm/rng.hpp"

#include "oracles.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

using namespace ulhm;

namespace {

DistanceMatrix dist_of(const Matrix& pts) {
  return pairwise_distances(pts, DistanceKind::euclidean);
}

Matrix blob(Index n, Index d, const RowVector& center, Scalar sigma, std::mt19937_64& rng) {
  Matrix m = sigma * gaussian_matrix(n, d, rng);
  m.rowwise() += center;
  return m;
}

}  // namespace

TEST_CASE("betti0 of a single point is 1 at any scale") {
  MstEdges mst;
  mst.n_points = 1;
  for (Scalar eps : {1e-6, 1.0, 100.0}) {
    BettiConfig cfg;
    cfg.epsilon = eps;
    const Betti0Result r = betti0(mst, cfg);
    CHECK(r.count == 1);
    CHECK(r.epsilon_used == eps);
  }
}

TEST_CASE("betti0 separates two well-spaced clusters") {
  auto rng = make_rng(2001);
  Matrix pts(20, 3);
  RowVector c1 = RowVector::Zero(3);
  RowVector c2 = RowVector::Zero(3);
  c2(0) = 10.0;
  pts.topRows(10) = blob(10, 3, c1, 0.03, rng);
  pts.bottomRows(10) = blob(10, 3, c2, 0.03, rng);

  BettiConfig cfg;
  cfg.epsilon = 1.0;
  const Betti0Result r = betti0(mst_edges(dist_of(pts)), cfg);
  CHECK(r.count == 2);
}

TEST_CASE("betti0 largest-gap rule agrees with the union-find oracle") {
  auto rng = make_rng(2002);
  Matrix pts(30, 2);
  for (int b = 0; b < 3; ++b) {
    RowVector c = RowVector::Zero(2);
    c(0) = 20.0 * b;
    pts.middleRows(10 * b, 10) = blob(10, 2, c, 0.5, rng);
  }
  const DistanceMatrix d = dist_of(pts);
  const Betti0Result r = betti0(mst_edges(d), BettiConfig{});
  CHECK(r.count == oracle::components_at(d.values, r.epsilon_used));
  CHECK(r.count == 3);
}

TEST_CASE("betti0 median-knn rule uses twice the median neighbor distance") {
  auto rng = make_rng(2003);
  const Matrix pts = gaussian_matrix(25, 3, rng);
  const DistanceMatrix d = dist_of(pts);
  const Scalar med = median_knn_distance(d, 4);

  BettiConfig cfg;
  cfg.auto_rule = BettiAutoRule::median_knn;
  cfg.median_knn = med;
  const Betti0Result r = betti0(mst_edges(d), cfg);
  CHECK(r.epsilon_used == 2.0 * med);
  CHECK(r.count == oracle::components_at(d.values, 2.0 * med));

  BettiConfig missing;
  missing.auto_rule = BettiAutoRule::median_knn;
  CHECK_THROWS_AS(betti0(mst_edges(d), missing), ConfigError);
}

TEST_CASE("betti0 count is nonincreasing in epsilon") {
  auto rng = make_rng(2004);
  const Matrix pts = gaussian_matrix(40, 2, rng);
  const MstEdges mst = mst_edges(dist_of(pts));

  Index last = 41;
  for (Scalar eps = 0.05; eps < 3.0; eps += 0.05) {
    BettiConfig cfg;
    cfg.epsilon = eps;
    const Index count = betti0(mst, cfg).count;
    CHECK(count <= last);
    last = count;
  }
}

TEST_CASE("betti0 input validation") {
  MstEdges empty;
  CHECK_THROWS_AS(betti0(empty, BettiConfig{}), EmptyError);

  MstEdges one;
  one.n_points = 2;
  one.edges.push_back({0, 1, 1.0});
  BettiConfig bad;
  bad.epsilon = -1.0;
  CHECK_THROWS_AS(betti0(one, bad), ConfigError);
}

TEST_CASE("sliced w2 of a cloud with itself is exactly zero") {
  auto rng = make_rng(2005);
  const Matrix pts = gaussian_matrix(50, 4, rng);
  SlicedW2Config cfg;
  cfg.seed = 7;
  CHECK(sliced_w2(pts, pts, cfg) == 0.0);
}

TEST_CASE("sliced w2 between 1-D singletons is the exact offset") {
  for (Scalar t : {3.0, -5.0, 0.25}) {
    Matrix a(1, 1), b(1, 1);
    a << 0.0;
    b << t;
    for (int L : {1, 7, 64}) {
      SlicedW2Config cfg;
      cfg.n_projections = L;
      cfg.seed = 11;
      CHECK(sliced_w2(a, b, cfg) == doctest::Approx(std::abs(t)).epsilon(1e-14));
    }
  }
}

TEST_CASE("sliced w2 is symmetric at a fixed seed") {
  auto rng = make_rng(2006);
  const Matrix a = gaussian_matrix(40, 3, rng);
  const Matrix b = gaussian_matrix(55, 3, rng);  // unequal sizes take the interpolation path
  SlicedW2Config cfg;
  cfg.seed = 13;
  CHECK(sliced_w2(a, b, cfg) == sliced_w2(b, a, cfg));
  CHECK(sliced_w2(a, b, cfg) > 0.0);
}

TEST_CASE("sliced w2 of a shifted cloud tracks the direction-average oracle") {
  auto rng = make_rng(2007);
  const Matrix a = gaussian_matrix(500, 4, rng);
  RowVector t(4);
  t << 1.2, -0.8, 0.5, 1.0;
  Matrix b = a;
  b.rowwise() += t;

  SlicedW2Config cfg;
  cfg.n_projections = 256;
  cfg.seed = 42;
  const Scalar est = sliced_w2(a, b, cfg);

  // Shifting every point by t moves each 1-D projection rigidly by t.theta,
  // so the sliced distance estimates sqrt(E[(t.theta)^2]).
  auto mc_rng = make_rng(9100);
  Scalar acc = 0;
  const int n_dirs = 20000;
  for (int i = 0; i < n_dirs; ++i) {
    Vector theta = gaussian_vector(4, mc_rng);
    theta /= theta.norm();
    const Scalar proj = t * theta;
    acc += proj * proj;
  }
  const Scalar mc = std::sqrt(acc / n_dirs);
  CHECK(est == doctest::Approx(mc).epsilon(0.08));
  // Analytic mean of (t.theta)^2 over the sphere is |t|^2 / d.
  CHECK(mc == doctest::Approx(t.norm() / 2.0).epsilon(0.05));
}

TEST_CASE("sliced w2 handles unequal sizes of the same distribution") {
  auto rng = make_rng(2008);
  const Matrix big = gaussian_matrix(600, 3, rng);
  const Matrix small = gaussian_matrix(200, 3, rng);
  SlicedW2Config cfg;
  cfg.n_projections = 256;
  cfg.seed = 5;
  CHECK(sliced_w2(big, small, cfg) < 0.25);
}

TEST_CASE("sliced w2 input validation") {
  Matrix a(3, 2), b(3, 3);
  a.setZero();
  b.setZero();
  SlicedW2Config cfg;
  CHECK_THROWS_AS(sliced_w2(a, b, cfg), DimensionError);

  Matrix empty(0, 2);
  CHECK_THROWS_AS(sliced_w2(a, empty, cfg), EmptyError);

  cfg.n_projections = 0;
  Matrix c = a;
  CHECK_THROWS_AS(sliced_w2(a, c, cfg), ConfigError);
}

TEST_CASE("continuity is 1 for the identity embedding") {
  auto rng = make_rng(2009);
  const Matrix pts = gaussian_matrix(15, 3, rng);
  const DistanceMatrix d = dist_of(pts);
  CHECK(continuity(rank_matrix(d), knn(d, 4)) == 1.0);
  CHECK(trust_rank(rank_matrix(d), knn(d, 4)) == 1.0);
}

TEST_CASE("continuity survives order reversal on a line") {
  Matrix line(10, 1), reversed(10, 1);
  for (Index i = 0; i < 10; ++i) {
    line(i, 0) = static_cast<Scalar>(i);
    reversed(i, 0) = static_cast<Scalar>(9 - i);
  }
  // Reversal flips the axis but keeps every neighbor set, hence no penalty.
  const DistanceMatrix dx = dist_of(line);
  const DistanceMatrix dz = dist_of(reversed);
  CHECK(continuity(rank_matrix(dx), knn(dz, 2)) == 1.0);
}

TEST_CASE("continuity and trust match the direct-formula oracle") {
  auto rng = make_rng(2010);
  const Matrix x = gaussian_matrix(12, 4, rng);

  std::vector<Index> perm(12);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix z(12, 4);
  for (Index i = 0; i < 12; ++i) z.row(i) = x.row(perm[static_cast<std::size_t>(i)]);

  const DistanceMatrix dx = dist_of(x);
  const DistanceMatrix dz = dist_of(z);
  const Scalar cont = continuity(rank_matrix(dx), knn(dz, 3));
  const Scalar trust = trust_rank(rank_matrix(dz), knn(dx, 3));
  CHECK(cont == doctest::Approx(oracle::continuity(dx.values, dz.values, 3)).epsilon(1e-12));
  CHECK(trust == doctest::Approx(oracle::trust(dx.values, dz.values, 3)).epsilon(1e-12));
  CHECK(cont >= 0.0);
  CHECK(cont <= 1.0);
}

TEST_CASE("trust of a fully collapsed embedding follows the tie rule") {
  auto rng = make_rng(2011);
  const Matrix x = gaussian_matrix(8, 3, rng);
  const Matrix z = Matrix::Zero(8, 3).rowwise() + RowVector::Constant(3, 1.0);

  const DistanceMatrix dx = dist_of(x);
  const DistanceMatrix dz = dist_of(z);
  const Scalar got = trust_rank(rank_matrix(dz), knn(dx, 2));
  CHECK(got == doctest::Approx(oracle::trust(dx.values, dz.values, 2)).epsilon(1e-12));
}

TEST_CASE("rank metric normalizer guard") {
  auto rng = make_rng(2012);
  const Matrix pts = gaussian_matrix(7, 2, rng);
  const DistanceMatrix d = dist_of(pts);
  // N=7 admits kappa < 13/3, so 5 must be rejected by the normalizer even
  // though knn itself allows it.
  CHECK_THROWS_AS(continuity(rank_matrix(d), knn(d, 5)), ConfigError);
  CHECK_THROWS_AS(trust_rank(rank_matrix(d), knn(d, 5)), ConfigError);
}

TEST_CASE("rank metrics equal 1 under monotone distance transforms") {
  auto rng = make_rng(2013);
  const Matrix x = gaussian_matrix(14, 3, rng);
  const DistanceMatrix dx = dist_of(x);

  const auto check_transform = [&](auto f) {
    DistanceMatrix dz = dx;
    for (Index i = 0; i < dz.values.rows(); ++i)
      for (Index j = 0; j < dz.values.cols(); ++j)
        if (i != j) dz.values(i, j) = f(dz.values(i, j));
    CHECK(continuity(rank_matrix(dx), knn(dz, 4)) == 1.0);
    CHECK(trust_rank(rank_matrix(dz), knn(dx, 4)) == 1.0);
  };
  check_transform([](Scalar t) { return t * t; });
  check_transform([](Scalar t) { return std::atan(t); });
  check_transform([](Scalar t) { return std::pow(t, 0.7) + 2.0 * t; });
}

TEST_CASE("purity on forced configurations") {
  auto rng = make_rng(2014);
  const Matrix pts = gaussian_matrix(10, 2, rng);
  const NeighborLists nbr = knn(dist_of(pts), 3);

  const PurityResult all_one = purity(nbr, Labels(10, 7));
  CHECK(all_one.mean == 1.0);
  CHECK(all_one.per_point.minCoeff() == 1.0);

  // Two tight clusters far apart, labels follow the clusters.
  Matrix two(12, 2);
  Labels labels;
  for (Index i = 0; i < 12; ++i) {
    const int c = i < 6 ? 0 : 1;
    two(i, 0) = 100.0 * c + 0.01 * static_cast<Scalar>(i);
    two(i, 1) = 0;
    labels.push_back(c);
  }
  CHECK(purity(knn(dist_of(two), 3), labels).mean == 1.0);

  // Interleaved classes on a line: every nearest neighbor has the other label.
  Matrix line(10, 1);
  Labels alternating;
  for (Index i = 0; i < 10; ++i) {
    line(i, 0) = static_cast<Scalar>(i);
    alternating.push_back(static_cast<int>(i % 2));
  }
  CHECK(purity(knn(dist_of(line), 1), alternating).mean == 0.0);
  // At kappa=2 only the endpoints reach a same-label point (two steps in),
  // contributing 1/2 each: mean = 2 * (1/2) / 10.
  CHECK(purity(knn(dist_of(line), 2), alternating).mean == doctest::Approx(0.1).epsilon(1e-14));

  CHECK_THROWS_AS(purity(nbr, Labels{0, 1}), DataError);
}

TEST_CASE("purity matches the oracle on random labelings") {
  auto rng = make_rng(2015);
  const Matrix pts = gaussian_matrix(20, 3, rng);
  Labels labels;
  std::uniform_int_distribution<int> cls(0, 3);
  for (Index i = 0; i < 20; ++i) labels.push_back(cls(rng));

  const DistanceMatrix d = dist_of(pts);
  const PurityResult r = purity(knn(d, 5), labels);
  CHECK(r.mean == doctest::Approx(oracle::purity(d.values, 5, labels)).epsilon(1e-12));
}

TEST_CASE("alignment error basics") {
  EmbeddingSet a, b;
  a.points = Matrix(2, 2);
  a.points << 0, 0, 1, 1;
  b.points = a.points;
  CHECK(alignment_error(pair_samples(a, b, {{0, 0}, {1, 1}})) == 0.0);

  b.points << 3, 0, 1, 1;
  CHECK(alignment_error(pair_samples(a, b, {{0, 0}})) == 3.0);
}

TEST_CASE("alignment error equals the direct mean over 100 random pairs") {
  auto rng = make_rng(2016);
  EmbeddingSet a, b;
  a.points = gaussian_matrix(100, 5, rng);
  b.points = gaussian_matrix(100, 5, rng);

  std::vector<std::pair<Index, Index>> idx;
  for (Index i = 0; i < 100; ++i) idx.emplace_back(i, i);

  Scalar expected = 0;
  for (Index i = 0; i < 100; ++i) expected += (a.points.row(i) - b.points.row(i)).norm();
  expected /= 100.0;

  CHECK(alignment_error(pair_samples(a, b, idx)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bilipschitz of identity and doubling maps is exact") {
  auto rng = make_rng(2017);
  const Matrix x = gaussian_matrix(30, 4, rng);
  const DistanceMatrix dx = dist_of(x);

  const BiLipschitzEstimate ident = estimate_bilipschitz(dx, dx, 0, 0);
  CHECK(ident.c1 == 1.0);
  CHECK(ident.c2 == 1.0);
  CHECK_FALSE(ident.unbounded);

  // Doubling is a power of two, so every distance scales bit-exactly.
  const Matrix z = 2.0 * x;
  const BiLipschitzEstimate twice = estimate_bilipschitz(dx, dist_of(z), 0, 0);
  CHECK(twice.c1 == 2.0);
  CHECK(twice.c2 == 2.0);
}

TEST_CASE("bilipschitz of a linear map brackets the singular values") {
  auto rng = make_rng(2018);
  const Matrix x = gaussian_matrix(500, 8, rng);
  // A random map with a controlled spectrum: a raw Gaussian matrix routinely
  // has sigma_min orders of magnitude below sigma_max in d=8, and no sample
  // of this size lands a pair difference close enough to its smallest
  // singular direction for the minimum ratio to approach it.
  const auto orthogonal = [&rng](Index d) -> Matrix {
    Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, d, rng));
    return qr.householderQ();
  };
  const Matrix q1 = orthogonal(8);
  const Matrix q2 = orthogonal(8);
  Vector sv(8);
  std::uniform_real_distribution<Scalar> spread(0.8, 1.4);
  for (Index i = 0; i < 8; ++i) sv(i) = spread(rng);
  const Matrix a = q1 * sv.asDiagonal() * q2.transpose();
  const Matrix z = x * a.transpose();

  const BiLipschitzEstimate est =
      estimate_bilipschitz(dist_of(x), dist_of(z), 0, 0);

  Eigen::JacobiSVD<Matrix> svd(a);
  const Scalar smin = svd.singularValues().minCoeff();
  const Scalar smax = svd.singularValues().maxCoeff();

  CHECK(est.c1 >= smin * (1.0 - 1e-12));
  CHECK(est.c2 <= smax * (1.0 + 1e-12));
  CHECK(est.c1 <= est.c2);
  CHECK(est.c1 == doctest::Approx(smin).epsilon(0.10));
  CHECK(est.c2 == doctest::Approx(smax).epsilon(0.10));
}

TEST_CASE("bilipschitz flags latent separation of coincident inputs") {
  Matrix x(3, 2);
  x << 0, 0, 0, 0, 5, 5;  // first two rows coincide
  Matrix z(3, 2);
  z << 0, 0, 1, 0, 5, 5;  // but separate in the latent

  const BiLipschitzEstimate est = estimate_bilipschitz(dist_of(x), dist_of(z), 0, 0);
  CHECK(est.unbounded);
  CHECK(std::isinf(est.c2));
}

TEST_CASE("bilipschitz sampled mode is deterministic per seed") {
  auto rng = make_rng(2019);
  const Matrix x = gaussian_matrix(60, 5, rng);
  const Matrix z = gaussian_matrix(60, 5, rng);
  const DistanceMatrix dx = dist_of(x);
  const DistanceMatrix dz = dist_of(z);

  const BiLipschitzEstimate one = estimate_bilipschitz(dx, dz, 200, 99);
  const BiLipschitzEstimate two = estimate_bilipschitz(dx, dz, 200, 99);
  CHECK(one.c1 == two.c1);
  CHECK(one.c2 == two.c2);

  const BiLipschitzEstimate all = estimate_bilipschitz(dx, dz, 0, 0);
  CHECK(one.c1 >= all.c1);
  CHECK(one.c2 <= all.c2);
}

TEST_CASE("metrics are scale equivariant in the latent") {
  auto rng = make_rng(2020);
  const Matrix x = gaussian_matrix(16, 3, rng);
  const Matrix z = gaussian_matrix(16, 3, rng);
  const Scalar s = 2.0;  // power of two keeps distance scaling exact
  const Matrix zs = s * z;

  const DistanceMatrix dx = dist_of(x);
  const DistanceMatrix dz = dist_of(z);
  const DistanceMatrix dzs = dist_of(zs);

  CHECK(continuity(rank_matrix(dx), knn(dzs, 4)) == continuity(rank_matrix(dx), knn(dz, 4)));
  CHECK(trust_rank(rank_matrix(dzs), knn(dx, 4)) == trust_rank(rank_matrix(dz), knn(dx, 4)));

  Labels labels;
  for (Index i = 0; i < 16; ++i) labels.push_back(static_cast<int>(i % 2));
  CHECK(purity(knn(dzs, 4), labels).mean == purity(knn(dz, 4), labels).mean);

  SlicedW2Config cfg;
  cfg.seed = 3;
  CHECK(sliced_w2(s * x, zs, cfg) == doctest::Approx(s * sliced_w2(x, z, cfg)).epsilon(1e-12));

  const BiLipschitzEstimate base = estimate_bilipschitz(dx, dz, 0, 0);
  const BiLipschitzEstimate scaled = estimate_bilipschitz(dx, dzs, 0, 0);
  CHECK(scaled.c1 == s * base.c1);
  CHECK(scaled.c2 == s * base.c2);
}

TEST_CASE("rank metrics are invariant under consistent row permutation") {
  auto rng = make_rng(2021);
  const Matrix x = gaussian_matrix(14, 3, rng);
  const Matrix z = gaussian_matrix(14, 3, rng);

  std::vector<Index> perm(14);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix xp(14, 3), zp(14, 3);
  for (Index i = 0; i < 14; ++i) {
    xp.row(perm[static_cast<std::size_t>(i)]) = x.row(i);
    zp.row(perm[static_cast<std::size_t>(i)]) = z.row(i);
  }

  const Scalar before = continuity(rank_matrix(dist_of(x)), knn(dist_of(z), 4));
  const Scalar after = continuity(rank_matrix(dist_of(xp)), knn(dist_of(zp), 4));
  CHECK(before == doctest::Approx(after).epsilon(1e-12));

  const Scalar t_before = trust_rank(rank_matrix(dist_of(z)), knn(dist_of(x), 4));
  const Scalar t_after = trust_rank(rank_matrix(dist_of(zp)), knn(dist_of(xp), 4));
  CHECK(t_before == doctest::Approx(t_after).epsilon(1e-12));
}
