#include <doctest.h>

#include <cmath>

#include "albench/linalg.hpp"
#include "albench/rng.hpp"
#include "oracles.hpp"

using namespace albench;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = scale * rng.next_gaussian();
    return m;
}

// Gram matrix of the component rows must be the identity.
void check_orthonormal(const Matrix& components, double tol) {
    for (int a = 0; a < components.rows; ++a)
        for (int b = 0; b < components.rows; ++b) {
            double g = dot(components.row(a), components.row(b));
            CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) < tol);
        }
}

}  // namespace

TEST_CASE("jacobi_eigh recovers a known spectrum") {
    // A = diag(5, 2, 1) rotated by a fixed orthonormal basis
    Matrix a(3, 3);
    a(0, 0) = 4.0; a(0, 1) = 1.0; a(0, 2) = 0.0;
    a(1, 0) = 1.0; a(1, 1) = 3.0; a(1, 2) = 1.0;
    a(2, 0) = 0.0; a(2, 1) = 1.0; a(2, 2) = 2.0;
    Eigh eig = jacobi_eigh(a);
    REQUIRE(eig.values.size() == 3);
    CHECK(eig.values[0] >= eig.values[1]);
    CHECK(eig.values[1] >= eig.values[2]);
    // eigen equation A v = lambda v
    for (int r = 0; r < 3; ++r) {
        for (int i = 0; i < 3; ++i) {
            double av = 0.0;
            for (int j = 0; j < 3; ++j) av += a(i, j) * eig.vectors(r, j);
            CHECK(av == doctest::Approx(eig.values[r] * eig.vectors(r, i)).epsilon(1e-10));
        }
    }
    check_orthonormal(eig.vectors, 1e-10);
}

TEST_CASE("pca_fit: rank-1 data on the line y = x") {
    Matrix x(4, 2);
    for (int i = 0; i < 4; ++i) {
        x(i, 0) = i;
        x(i, 1) = i;
    }
    PcaEntry entry = pca_fit(x, 0.9);
    CHECK(entry.rank() == 1);
    CHECK(!entry.zero_variance);
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(entry.components(0, 0)) - inv_sqrt2) < 1e-10);
    CHECK(std::abs(std::abs(entry.components(0, 1)) - inv_sqrt2) < 1e-10);
    CHECK(entry.components(0, 0) * entry.components(0, 1) > 0);  // same sign: direction (1,1)
}

TEST_CASE("pca_fit subspace agrees with the power-iteration oracle") {
    Rng rng(2024);
    Matrix x = random_matrix(20, 8, rng);
    PcaEntry entry = pca_fit(x, 0.9);
    oracle::PcaOracle ref = oracle::pca_reference(x, 0.9, 77);
    REQUIRE(entry.rank() == ref.basis.rows);
    // Compare projectors: basis-independent, bounds every principal angle.
    Matrix impl_proj = oracle::projector(entry.components);
    CHECK(oracle::frobenius_distance(impl_proj, ref.proj) < 1e-6);
    for (int j = 0; j < 8; ++j) CHECK(entry.mean[j] == doctest::Approx(ref.mean[j]).epsilon(1e-12));
}

TEST_CASE("pca_fit: zero-variance data is flagged") {
    Matrix x(2, 3);
    for (int i = 0; i < 2; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = -2.0;
        x(i, 2) = 0.5;
    }
    PcaEntry entry = pca_fit(x, 0.95);
    CHECK(entry.zero_variance);
    CHECK(entry.rank() == 1);
    CHECK(std::abs(squared_norm(entry.components.row(0)) - 1.0) < 1e-12);
}

TEST_CASE("pca_fit: input validation") {
    Matrix one(1, 3, 1.0);
    CHECK_THROWS_AS(pca_fit(one, 0.9), std::invalid_argument);
    Matrix ok(3, 3, 1.0);
    CHECK_THROWS_AS(pca_fit(ok, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pca_fit(ok, 1.5), std::invalid_argument);
}

TEST_CASE("pca_fit invariants: orthonormal basis, rank below full") {
    Rng rng(5);
    for (double fraction : {0.5, 0.9, 1.0}) {
        Matrix x = random_matrix(30, 6, rng, 2.0);
        PcaEntry entry = pca_fit(x, fraction);
        check_orthonormal(entry.components, 1e-8);
        CHECK(entry.rank() >= 1);
        CHECK(entry.rank() <= 5);  // capped at d-1 even at fraction 1.0
    }
}

TEST_CASE("fre: axis-aligned example and in-subspace points") {
    Matrix x(3, 2);
    x(0, 0) = 1.0;
    x(1, 0) = 2.0;
    x(2, 0) = 3.0;
    PcaEntry entry = pca_fit(x, 0.95);
    REQUIRE(entry.rank() == 1);
    std::vector<double> z = {5.0, 4.0};
    CHECK(fre(entry, z) == doctest::Approx(4.0).epsilon(1e-10));

    std::vector<double> in_span = {7.5, 0.0};
    CHECK(fre(entry, in_span) < 1e-8);
    CHECK(fre(entry, entry.mean) < 1e-12);

    std::vector<double> wrong_dim = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(fre(entry, wrong_dim), std::invalid_argument);
}

TEST_CASE("fre matches the projector oracle on random queries") {
    Rng rng(31337);
    Matrix x = random_matrix(40, 6, rng, 1.5);
    PcaEntry entry = pca_fit(x, 0.9);
    oracle::PcaOracle ref = oracle::pca_reference(x, 0.9, 99);
    REQUIRE(entry.rank() == ref.basis.rows);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> z(6);
        for (double& v : z) v = 3.0 * rng.next_gaussian();
        double got = fre(entry, z);
        double want = oracle::fre_reference(ref, z);
        CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("fre is unchanged by in-subspace displacement") {
    Rng rng(8);
    Matrix x = random_matrix(25, 5, rng);
    PcaEntry entry = pca_fit(x, 0.8);
    std::vector<double> z(5);
    for (double& v : z) v = rng.next_gaussian();
    double base = fre(entry, z);
    // displace z along the first principal direction
    std::vector<double> shifted = z;
    for (int j = 0; j < 5; ++j) shifted[j] += 2.5 * entry.components(0, j);
    CHECK(fre(entry, shifted) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("cosine_similarity basics") {
    std::vector<double> a = {3.0, 4.0};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    std::vector<double> e1 = {1.0, 0.0}, e2 = {0.0, 1.0};
    CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0));
    std::vector<double> d = {1.0, 1.0};
    CHECK(cosine_similarity(d, e1) == doctest::Approx(0.70710678).epsilon(1e-6));
    std::vector<double> zero = {0.0, 0.0};
    CHECK_THROWS_AS(cosine_similarity(zero, e1), std::invalid_argument);
}

TEST_CASE("cosine_similarity is invariant to positive rescaling") {
    Rng rng(77);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> a(4), b(4);
        for (double& v : a) v = rng.next_gaussian();
        for (double& v : b) v = rng.next_gaussian();
        double base = cosine_similarity(a, b);
        double lambda = 0.001 + 100.0 * rng.next_double();
        std::vector<double> scaled = a;
        for (double& v : scaled) v *= lambda;
        CHECK(cosine_similarity(scaled, b) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("pairwise_min_distances: direct cases and oracle equality") {
    Matrix centers(1, 1);
    Matrix cands(4, 1);
    cands(1, 0) = 1.0;
    cands(2, 0) = 2.0;
    cands(3, 0) = 10.0;
    auto d = pairwise_min_distances(cands, centers);
    CHECK(d == std::vector<double>{0.0, 1.0, 2.0, 10.0});

    Rng rng(4);
    Matrix c2 = random_matrix(50, 4, rng);
    Matrix z2 = random_matrix(10, 4, rng);
    auto got = pairwise_min_distances(c2, z2);
    for (int i = 0; i < 50; ++i) {
        double want = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 10; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) {
                double t = c2(i, k) - z2(j, k);
                s += t * t;
            }
            want = std::min(want, std::sqrt(s));
        }
        CHECK(got[i] == want);
    }

    Matrix empty(0, 4);
    CHECK_THROWS_AS(pairwise_min_distances(c2, empty), std::invalid_argument);
}
