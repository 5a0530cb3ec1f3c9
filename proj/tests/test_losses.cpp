#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "albench/losses.hpp"
#include "albench/rng.hpp"
#include "oracles.hpp"

using namespace albench;

namespace {

Matrix random_unit_rows(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        auto row = m.row(i);
        double sq = 0.0;
        for (double& v : row) {
            v = rng.next_gaussian();
            sq += v * v;
        }
        double inv = 1.0 / std::sqrt(sq);
        for (double& v : row) v *= inv;
    }
    return m;
}

}  // namespace

TEST_CASE("cross_entropy: saturated and uniform predictions") {
    Matrix confident(1, 3);
    confident(0, 1) = 60.0;  // softmax ~ 1 on the true class
    std::vector<int> y = {1};
    CHECK(cross_entropy(confident, y) < 1e-9);

    Matrix zeros(2, 4);
    std::vector<int> y2 = {0, 3};
    CHECK(cross_entropy(zeros, y2) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    std::vector<int> bad = {4, 0};
    CHECK_THROWS_AS(cross_entropy(zeros, bad), std::invalid_argument);
}

TEST_CASE("cross_entropy gradient matches central finite differences") {
    Rng rng(17);
    Matrix logits(6, 5);
    for (double& v : logits.data) v = 2.0 * rng.next_gaussian();
    std::vector<int> y = {0, 4, 2, 2, 1, 3};
    LossGrad lg = cross_entropy_with_grad(logits, y);
    const double h = 1e-6;
    for (size_t i = 0; i < logits.data.size(); ++i) {
        double fd = oracle::central_difference(
            [&](double v) {
                Matrix probe = logits;
                probe.data[i] = v;
                return cross_entropy(probe, y);
            },
            logits.data[i], h);
        CHECK(std::abs(fd - lg.grad.data[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("cross_entropy decreases along its negative gradient") {
    Rng rng(18);
    Matrix logits(8, 3);
    for (double& v : logits.data) v = rng.next_gaussian();
    std::vector<int> y = {0, 1, 2, 0, 1, 2, 0, 1};
    LossGrad lg = cross_entropy_with_grad(logits, y);
    Matrix stepped = logits;
    for (size_t i = 0; i < logits.data.size(); ++i) stepped.data[i] -= 1e-3 * lg.grad.data[i];
    CHECK(cross_entropy(stepped, y) < lg.loss);
}

TEST_CASE("supcon_loss: two views of a single sample give zero loss") {
    ContrastiveBatch batch;
    batch.embeddings = Matrix(2, 3);
    batch.embeddings(0, 0) = 1.0;
    batch.embeddings(1, 1) = 1.0;
    batch.labels = {0, 0};
    batch.temperature = 0.5;
    SupconResult res = supcon_loss(batch);
    CHECK(res.counted_anchors == 2);
    CHECK(std::abs(res.loss) < 1e-12);
}

TEST_CASE("supcon_loss matches the scalar double-loop reference") {
    // the spec'd 4-embedding instance
    ContrastiveBatch batch;
    batch.embeddings = Matrix(4, 2);
    batch.embeddings(0, 0) = 1.0;
    batch.embeddings(1, 0) = 0.8;
    batch.embeddings(1, 1) = 0.6;
    batch.embeddings(2, 1) = 1.0;
    batch.embeddings(3, 0) = -0.6;
    batch.embeddings(3, 1) = 0.8;
    batch.labels = {0, 0, 1, 1};
    batch.temperature = 0.5;
    double want = oracle::supcon_reference(batch.embeddings, batch.labels, 0.5);
    CHECK(supcon_loss(batch).loss == doctest::Approx(want).epsilon(1e-10));

    Rng rng(40);
    for (int t = 0; t < 50; ++t) {
        int sources = 2 + static_cast<int>(rng.next_below(5));
        ContrastiveBatch b;
        b.embeddings = random_unit_rows(2 * sources, 4, rng);
        b.labels.resize(2 * sources);
        for (int i = 0; i < sources; ++i) {
            int label = static_cast<int>(rng.next_below(3));
            b.labels[i] = label;
            b.labels[sources + i] = label;
        }
        b.temperature = 0.2 + rng.next_double();
        double ref = oracle::supcon_reference(b.embeddings, b.labels, b.temperature);
        CHECK(std::abs(supcon_loss(b).loss - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("supcon_loss gradient matches central finite differences") {
    Rng rng(41);
    ContrastiveBatch batch;
    batch.embeddings = random_unit_rows(6, 3, rng);
    batch.labels = {0, 1, 0, 0, 1, 0};
    batch.temperature = 0.3;
    SupconResult res = supcon_loss(batch);
    const double h = 1e-6;
    for (size_t i = 0; i < batch.embeddings.data.size(); ++i) {
        double fd = oracle::central_difference(
            [&](double v) {
                ContrastiveBatch probe = batch;
                probe.embeddings.data[i] = v;
                return supcon_loss(probe).loss;
            },
            batch.embeddings.data[i], h);
        CHECK(std::abs(fd - res.grad.data[i]) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("supcon_loss: anchors without positives are skipped") {
    Rng rng(42);
    ContrastiveBatch batch;
    batch.embeddings = random_unit_rows(5, 3, rng);
    batch.labels = {0, 0, 1, 1, 2};  // the label-2 item has no positive
    batch.temperature = 0.4;
    SupconResult res = supcon_loss(batch);
    CHECK(res.counted_anchors == 4);
    CHECK(res.loss == doctest::Approx(oracle::supcon_reference(batch.embeddings, batch.labels, 0.4)).epsilon(1e-10));

    // all labels distinct: nothing to count, loss defined as 0
    ContrastiveBatch lonely;
    lonely.embeddings = random_unit_rows(3, 3, rng);
    lonely.labels = {0, 1, 2};
    lonely.temperature = 0.4;
    SupconResult res2 = supcon_loss(lonely);
    CHECK(res2.counted_anchors == 0);
    CHECK(res2.loss == 0.0);
}

TEST_CASE("supcon_loss rejects degenerate inputs") {
    ContrastiveBatch one;
    one.embeddings = Matrix(1, 3, 0.5);
    one.labels = {0};
    one.temperature = 0.5;
    CHECK_THROWS_AS(supcon_loss(one), std::invalid_argument);

    ContrastiveBatch bad_t;
    bad_t.embeddings = Matrix(2, 3, 0.5);
    bad_t.labels = {0, 0};
    bad_t.temperature = 0.0;
    CHECK_THROWS_AS(supcon_loss(bad_t), std::invalid_argument);
}

TEST_CASE("losses are invariant under batch permutation") {
    Rng rng(43);
    Matrix logits(7, 4);
    for (double& v : logits.data) v = rng.next_gaussian();
    std::vector<int> y = {0, 1, 2, 3, 0, 1, 2};
    double base = cross_entropy(logits, y);

    std::vector<int> perm = {6, 2, 0, 4, 1, 5, 3};
    Matrix plogits = logits.select_rows(perm);
    std::vector<int> py(7);
    for (int i = 0; i < 7; ++i) py[i] = y[perm[i]];
    CHECK(cross_entropy(plogits, py) == doctest::Approx(base).epsilon(1e-10));

    ContrastiveBatch batch;
    batch.embeddings = random_unit_rows(6, 3, rng);
    batch.labels = {0, 1, 1, 0, 1, 0};
    batch.temperature = 0.7;
    double sc = supcon_loss(batch).loss;
    std::vector<int> perm2 = {5, 3, 1, 0, 4, 2};
    ContrastiveBatch pbatch;
    pbatch.embeddings = batch.embeddings.select_rows(perm2);
    pbatch.labels.resize(6);
    for (int i = 0; i < 6; ++i) pbatch.labels[i] = batch.labels[perm2[i]];
    pbatch.temperature = 0.7;
    CHECK(supcon_loss(pbatch).loss == doctest::Approx(sc).epsilon(1e-10));
}

TEST_CASE("make_two_view_inputs: pairing, zero jitter, jitter variance") {
    Rng rng(44);
    Matrix x(3, 2);
    for (double& v : x.data) v = rng.next_gaussian();

    Rng jitter_off(1);
    Matrix views0 = make_two_view_inputs(x, 0.0, jitter_off);
    REQUIRE(views0.rows == 6);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) CHECK(views0(i, j) == views0(i + 3, j));

    std::vector<int> labels = {2, 0, 1};
    auto dup = duplicate_labels(labels);
    CHECK(dup == std::vector<int>{2, 0, 1, 2, 0, 1});

    Matrix big(500, 100);
    Rng jitter_on(2);
    const double sigma = 0.05;
    Matrix views = make_two_view_inputs(big, sigma, jitter_on);
    double var = 0.0;
    for (int i = 0; i < 500; ++i)
        for (int j = 0; j < 100; ++j) {
            double d = views(500 + i, j) - views(i, j);
            var += d * d;
        }
    var /= 500.0 * 100.0;
    CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.1));
}
