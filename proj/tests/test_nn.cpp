#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cmarl/nn/checkpoint.hpp"
#include "cmarl/nn/graph.hpp"
#include "cmarl/nn/layers.hpp"
#include "cmarl/nn/losses.hpp"
#include "cmarl/nn/rmsprop.hpp"
#include "grad_check.hpp"

using namespace cmarl;
using namespace cmarl::nn;

namespace {

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
    return m;
}

Matrix row(std::initializer_list<double> v) {
    Matrix m(1, static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) m(0, i++) = x;
    return m;
}

} // namespace

TEST(Dense, ZeroWeightsTanhGivesZero) {
    Dense layer("d", 3, 4);
    Graph g;
    Var y = dense_forward(g, g.input(row({0.3, -2.0, 7.0})), layer, Activation::tanh);
    EXPECT_TRUE(g.value(y).isZero());
}

TEST(Dense, IdentityWeightsPassThrough) {
    Dense layer("d", 3, 3);
    layer.weight.value = Matrix::Identity(3, 3);
    Graph g;
    Matrix x = row({0.3, -2.0, 7.0});
    Var y = dense_forward(g, g.input(x), layer, Activation::identity);
    EXPECT_EQ(g.value(y), x);
}

TEST(Dense, ScalarRelu) {
    Dense layer("d", 1, 1);
    layer.weight.value(0, 0) = 2.0;
    layer.bias.value(0, 0) = 1.0;
    Graph g;
    Var y = dense_forward(g, g.input(row({3.0})), layer, Activation::relu);
    EXPECT_DOUBLE_EQ(g.scalar(y), 7.0);
}

TEST(Dense, ShapeMismatchIsConfigError) {
    Dense layer("d", 3, 2);
    Graph g;
    EXPECT_THROW(dense_forward(g, g.input(row({1.0, 2.0})), layer), ConfigError);
}

TEST(Gru, ZeroCellKeepsZeroHidden) {
    GruCell cell("g", 4, 5);
    Graph g;
    Var h = gru_step(g, g.input(row({1, 2, 3, 4})), g.input(Matrix::Zero(1, 5)), cell);
    EXPECT_TRUE(g.value(h).isZero());
}

TEST(Gru, SaturatedUpdateGateCopiesHidden) {
    std::mt19937_64 rng(3);
    GruCell cell("g", 4, 5);
    cell.init(rng);
    cell.input_bias.value.middleCols(5, 5).setConstant(50.0);
    Matrix h0 = random_matrix(1, 5, rng);
    Graph g;
    Var h = gru_step(g, g.input(random_matrix(1, 4, rng)), g.input(h0), cell);
    EXPECT_LT((g.value(h) - h0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gru, HiddenWidthMismatch) {
    GruCell cell("g", 4, 5);
    Graph g;
    EXPECT_THROW(gru_step(g, g.input(Matrix::Zero(1, 4)), g.input(Matrix::Zero(1, 6)), cell), ConfigError);
}

TEST(Gru, FiniteDifferenceThroughTime) {
    std::mt19937_64 rng(11);
    GruCell cell("g", 3, 4);
    cell.init(rng);
    Dense head("h", 4, 2);
    head.init(rng);
    std::vector<Matrix> xs;
    for (int t = 0; t < 4; ++t) xs.push_back(random_matrix(2, 3, rng));
    ParamSet ps;
    ps.add(cell.params());
    ps.add(head.params());
    auto res = oracle::grad_check(ps, [&](Graph& g) {
        Var h = g.input(Matrix::Zero(2, 4));
        for (const auto& x : xs) h = gru_step(g, g.input(x), h, cell);
        Var y = dense_forward(g, h, head, Activation::tanh);
        return g.sum(g.mul(y, y));
    });
    EXPECT_GT(res.checked, 0u);
    EXPECT_LT(res.max_rel_error, 1e-4);
}

TEST(Backward, SquareGradient) {
    Parameter p("p", 1, 1);
    p.value(0, 0) = 3.0;
    Graph g;
    Var v = g.param(p);
    Var loss = g.mul(v, v);
    g.backward(loss);
    EXPECT_DOUBLE_EQ(p.grad(0, 0), 6.0);
    g.backward(loss);
    EXPECT_DOUBLE_EQ(p.grad(0, 0), 12.0);
}

TEST(Backward, AccumulatesKTimes) {
    std::mt19937_64 rng(5);
    Dense layer("d", 3, 2);
    layer.init(rng);
    Matrix x = random_matrix(4, 3, rng);
    Graph g;
    Var y = dense_forward(g, g.input(x), layer, Activation::tanh);
    Var loss = g.sum(g.mul(y, y));
    g.backward(loss);
    Matrix once = layer.weight.grad;
    for (int k = 1; k < 5; ++k) g.backward(loss);
    EXPECT_LT((layer.weight.grad - 5.0 * once).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Backward, NonScalarLossIsUsageError) {
    Graph g;
    Var x = g.leaf(Matrix::Ones(2, 2));
    EXPECT_THROW(g.backward(x), UsageError);
}

TEST(Backward, TwoLayerMlpMatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    Dense l1("l1", 4, 6), l2("l2", 6, 3);
    l1.init(rng);
    l2.init(rng);
    Matrix x = random_matrix(5, 4, rng);
    ParamSet ps;
    ps.add(l1.params());
    ps.add(l2.params());
    auto res = oracle::grad_check(ps, [&](Graph& g) {
        Var h = dense_forward(g, g.input(x), l1, Activation::tanh);
        Var y = dense_forward(g, h, l2, Activation::tanh);
        return g.sum(g.mul(y, y));
    });
    EXPECT_LT(res.max_rel_error, 1e-4);
}

TEST(Backward, StructuralOpsMatchFiniteDifferences) {
    std::mt19937_64 rng(9);
    Parameter a("a", 4, 3), b("b", 2, 3), c("c", 4, 1);
    a.value = random_matrix(4, 3, rng);
    b.value = random_matrix(2, 3, rng);
    c.value = random_matrix(4, 1, rng);
    ParamSet ps{&a, &b, &c};
    auto res = oracle::grad_check(ps, [&](Graph& g) {
        Var va = g.param(a), vb = g.param(b), vc = g.param(c);
        Var gathered = g.gather_rows(va, {0, 2, 2, 3, 1});
        Var scattered = g.scatter_add_rows(gathered, {1, 0, 1, 0, 1}, 2);
        Var mixed = g.add(scattered, vb);
        Var cat = g.concat_rows(std::vector<Var>{mixed, g.slice_rows(va, 1, 2)});
        Var rows = g.scale_rows(g.softmax_rows(va), vc);
        Var ls = g.log_softmax_rows(g.concat_cols({cat, g.sigmoid(cat)}));
        Var picked = g.pick(rows, {0, 2, 1, 1});
        return g.add(g.sum(g.mul(ls, ls)), g.sum(g.relu(g.affine(picked, 2.0, 0.1))));
    });
    EXPECT_LT(res.max_rel_error, 1e-4);
}

TEST(MseMasked, Examples) {
    Graph g;
    Matrix t = Matrix::Zero(1, 2);
    Var p = g.input(row({1.0, 2.0}));
    EXPECT_DOUBLE_EQ(g.scalar(mse_masked(g, p, row({1.0, 2.0}), row({1.0, 1.0}))), 0.0);
    EXPECT_DOUBLE_EQ(g.scalar(mse_masked(g, p, t, row({1.0, 0.0}))), 1.0);
    EXPECT_DOUBLE_EQ(g.scalar(mse_masked(g, p, t, row({1.0, 1.0}))), 2.5);
    EXPECT_DOUBLE_EQ(g.scalar(mse_masked(g, p, t, row({0.0, 0.0}))), 0.0);
    EXPECT_THROW(mse_masked(g, p, Matrix::Zero(1, 3), Matrix::Ones(1, 3)), ConfigError);
}

TEST(MseMasked, FiniteDifferences) {
    std::mt19937_64 rng(13);
    Parameter p("p", 3, 4);
    p.value = random_matrix(3, 4, rng);
    Matrix target = random_matrix(3, 4, rng);
    Matrix mask = Matrix::Zero(3, 4);
    mask << 1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0;
    ParamSet ps{&p};
    auto res = oracle::grad_check(ps, [&](Graph& g) { return mse_masked(g, g.param(p), target, mask); });
    EXPECT_LT(res.max_rel_error, 1e-4);
}

TEST(Rmsprop, ZeroGradientLeavesParameters) {
    std::mt19937_64 rng(1);
    Dense layer("d", 3, 2);
    layer.init(rng);
    Matrix before = layer.weight.value;
    RmspropState st;
    rmsprop_update(layer.params(), st);
    EXPECT_EQ(layer.weight.value, before);
}

TEST(Rmsprop, HandEvaluatedStep) {
    Parameter p("p", 1, 1);
    p.value(0, 0) = 1.0;
    p.grad(0, 0) = 2.0;
    RmspropState st({5e-4, 0.99, 1e-8});
    rmsprop_update(ParamSet{&p}, st);
    EXPECT_NEAR(st.square_avg[0](0, 0), 0.04, 1e-15);
    EXPECT_NEAR(p.value(0, 0), 1.0 - 5e-4 * 2.0 / (0.2 + 1e-8), 1e-15);
    EXPECT_NEAR(p.value(0, 0), 0.995, 1e-7);
    EXPECT_EQ(p.grad(0, 0), 0.0);
}

TEST(Rmsprop, ConstantGradientStepApproachesLearningRate) {
    Parameter p("p", 1, 1);
    RmspropState st({5e-4, 0.99, 1e-8});
    double step = 0.0;
    for (int k = 0; k < 3000; ++k) {
        double before = p.value(0, 0);
        p.grad(0, 0) = 0.7;
        rmsprop_update(ParamSet{&p}, st);
        step = before - p.value(0, 0);
    }
    EXPECT_NEAR(step, 5e-4, 1e-9);
}

TEST(GumbelSoftmax, SaturatedLogits) {
    std::mt19937_64 rng(2);
    Graph g;
    Var y = gumbel_softmax_sample(g, g.input(row({20.0, -20.0})), 0.5, false, rng);
    EXPECT_NEAR(g.value(y)(0, 0), 1.0, 1e-9);
    EXPECT_NEAR(g.value(y)(0, 1), 0.0, 1e-9);
}

TEST(GumbelSoftmax, EqualLogitsAreFair) {
    std::mt19937_64 rng(4);
    Graph g(false);
    Var y = gumbel_softmax_sample(g, g.input(Matrix::Zero(10000, 2)), 0.5, true, rng);
    double first = g.value(y).col(0).sum() / 10000.0;
    EXPECT_NEAR(first, 0.5, 0.03);
}

TEST(GumbelSoftmax, HardIsExactlyOneHot) {
    std::mt19937_64 rng(6);
    Graph g;
    Matrix logits(3, 2);
    logits << 0.3, -0.1, 1.0, 1.2, -4.0, 4.0;
    Var y = gumbel_softmax_sample(g, g.input(logits), 1e-6, true, rng);
    for (Index r = 0; r < 3; ++r) {
        EXPECT_TRUE((g.value(y)(r, 0) == 1.0 && g.value(y)(r, 1) == 0.0) ||
                    (g.value(y)(r, 0) == 0.0 && g.value(y)(r, 1) == 1.0));
    }
    EXPECT_THROW(gumbel_softmax_sample(g, g.input(logits), 0.0, true, rng), ConfigError);
}

TEST(GumbelSoftmax, FixedNoiseFiniteDifferences) {
    std::mt19937_64 rng(8);
    Parameter logits("l", 5, 2);
    logits.value = random_matrix(5, 2, rng);
    Matrix noise = sample_gumbel(5, 2, rng);
    Matrix w = random_matrix(5, 2, rng);
    ParamSet ps{&logits};
    for (bool hard : {false, true}) {
        auto res = oracle::grad_check(ps, [&](Graph& g) {
            Var y = gumbel_softmax_with_noise(g, g.param(logits), noise, 0.5, hard);
            // hard forward value is piecewise constant; check the soft path only
            if (hard) return g.sum(g.mul(g.softmax_rows(g.scale(g.add(g.param(logits), g.input(noise)), 2.0)), g.input(w)));
            return g.sum(g.mul(y, g.input(w)));
        });
        EXPECT_LT(res.max_rel_error, 1e-4);
    }
}

TEST(GumbelSoftmax, HardGradientEqualsSoftGradient) {
    Parameter logits("l", 2, 2);
    logits.value << 0.2, -0.3, 1.5, 0.1;
    Matrix noise = Matrix::Zero(2, 2);
    Matrix w(2, 2);
    w << 1.0, -2.0, 0.5, 3.0;
    Matrix soft_grad, hard_grad;
    for (bool hard : {false, true}) {
        logits.zero_grad();
        Graph g;
        Var y = gumbel_softmax_with_noise(g, g.param(logits), noise, 0.5, hard);
        g.backward(g.sum(g.mul(y, g.input(w))));
        (hard ? hard_grad : soft_grad) = logits.grad;
    }
    EXPECT_LT((soft_grad - hard_grad).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GT(soft_grad.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Checkpoint, BitExactRoundTrip) {
    std::mt19937_64 rng(21);
    GruCell cell("gru", 5, 4);
    cell.init(rng);
    cell.input_weight.value(0, 0) = -0.0;
    cell.input_weight.value(0, 1) = 1e-310;
    std::stringstream ss;
    write_checkpoint(ss, cell.params(), 1234567890123ULL);
    GruCell other("gru", 5, 4);
    Checkpoint ck = read_checkpoint(ss);
    EXPECT_EQ(ck.seed, 1234567890123ULL);
    apply_checkpoint(ck, other.params());
    auto a = cell.params(), b = other.params();
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(std::memcmp(a[i].value.data(), b[i].value.data(), sizeof(double) * a[i].value.size()), 0);
}

TEST(Checkpoint, MissingParameterRejected) {
    Dense d("a", 2, 2);
    std::stringstream ss;
    write_checkpoint(ss, d.params(), 0);
    Dense other("b", 2, 2);
    EXPECT_THROW(apply_checkpoint(read_checkpoint(ss), other.params()), FormatError);
    std::stringstream bad("nonsense");
    EXPECT_THROW(read_checkpoint(bad), FormatError);
}

TEST(Determinism, SameSeedSameTrajectory) {
    auto run = [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        GruCell cell("g", 3, 4);
        cell.init(rng);
        RmspropState st;
        for (int k = 0; k < 20; ++k) {
            Graph g;
            Var h = gru_step(g, g.input(random_matrix(2, 3, rng)), g.input(Matrix::Zero(2, 4)), cell);
            g.backward(g.sum(g.mul(h, h)));
            cell.params().clip_grad_norm(10.0);
            rmsprop_update(cell.params(), st);
        }
        return cell.input_weight.value;
    };
    Matrix a = run(99), b = run(99);
    EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
    EXPECT_TRUE(a.allFinite());
}

TEST(GruUnroll, MatchesStepwiseComposition) {
    std::mt19937_64 rng(3);
    GruCell cell("g", 4, 6);
    cell.init(rng);
    Matrix x = Matrix::Random(5 * 3, 4);
    Matrix h0 = Matrix::Random(3, 6) * 0.5;
    Graph a, b;
    Var fused = gru_unroll(a, gru_project_input(a, a.input(x), cell), a.input(h0), cell);
    Var proj = gru_project_input(b, b.input(x), cell);
    Var h = b.input(h0);
    for (int t = 0; t < 5; ++t) {
        h = gru_step_projected(b, b.slice_rows(proj, t * 3, 3), h, cell);
        EXPECT_LT((a.value(fused).middleRows(t * 3, 3) - b.value(h)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(GruUnroll, FiniteDifferenceThroughTime) {
    std::mt19937_64 rng(4);
    GruCell cell("g", 3, 5);
    cell.init(rng);
    Dense head("h", 5, 2);
    head.init(rng);
    Matrix x = Matrix::Random(6 * 2, 3);
    Parameter h0("h0", 2, 5);
    h0.value = Matrix::Random(2, 5) * 0.3;
    ParamSet ps = cell.params();
    ps.add(head.params());
    ps.add(h0);
    auto res = oracle::grad_check(ps, [&](Graph& g) {
        Var hs = gru_unroll(g, gru_project_input(g, g.input(x), cell), g.param(h0), cell);
        Var y = dense_forward(g, hs, head, Activation::tanh);
        return g.sum(g.mul(y, y));
    });
    EXPECT_GT(res.checked, 0u);
    EXPECT_LT(res.max_rel_error, 1e-4);
}
