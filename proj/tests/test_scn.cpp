#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sntk/diffusion.hpp"
#include "sntk/laplacian.hpp"
#include "sntk/ntk.hpp"
#include "sntk/scn.hpp"
#include "sntk/sheaf.hpp"
#include "support.hpp"

using namespace sntk;
using Catch::Approx;

namespace {

DiffusionOperator normalized_op(const CellularSheaf& sheaf) {
    return diffusion_operator(sheaf_laplacian(sheaf), DiffusionKind::normalized);
}

ScnConfig oracle_config(int ntk_layers, int d_in, int width) {
    ScnConfig cfg;
    cfg.num_layers = ntk_layers + 1; // hidden sheaf-conv layers plus a linear output
    cfg.widths.assign(cfg.num_layers + 1, width);
    cfg.widths.front() = d_in;
    cfg.widths.back() = 1;
    cfg.activation = Activation::relu;
    cfg.ntk_scaling = true;
    cfg.final_activation = false;
    return cfg;
}

} // namespace

TEST_CASE("parameter initialization", "[scn]") {
    ScnConfig cfg{2, {3, 5, 4}, Activation::relu, Readout::sum_aggregation, true, true};

    SECTION("deterministic per seed") {
        auto a = init_params(cfg, 42);
        auto b = init_params(cfg, 42);
        for (std::size_t l = 0; l < a.weights.size(); ++l)
            CHECK(a.weights[l] == b.weights[l]);
        auto c = init_params(cfg, 43);
        CHECK(a.weights[0] != c.weights[0]);
    }
    SECTION("standard normal moments") {
        ScnConfig wide{1, {1000, 1000}, Activation::identity, Readout::sum_aggregation, true,
                       true};
        auto params = init_params(wide, 7);
        const auto& w = params.weights[0];
        const double mean = w.mean();
        const double var = (w.array() - mean).square().sum() / (w.size() - 1);
        CHECK(std::abs(mean) < 0.01);
        CHECK(std::abs(var - 1.0) < 0.01);
    }
}

TEST_CASE("forward pass", "[scn]") {
    std::mt19937_64 rng(3);
    Graph g = test::random_connected_graph(5, 2, rng);
    auto op = normalized_op(constant_sheaf(g, 1));
    Eigen::MatrixXd x = test::random_matrix(5, 3, rng);

    SECTION("identity weights and activation collapse to pure diffusion") {
        ScnConfig cfg{3, {3, 3, 3, 3}, Activation::identity, Readout::sum_aggregation,
                      /*ntk_scaling=*/false, true};
        ScnParams params;
        for (int l = 0; l < 3; ++l) params.weights.push_back(Eigen::MatrixXd::Identity(3, 3));
        auto trace = forward(params, op, x, cfg);
        CHECK((trace.output() - diffusion_power(op, 3) * x).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("relu of a zero signal stays zero") {
        ScnConfig cfg{2, {3, 4, 4}, Activation::relu, Readout::sum_aggregation, true, true};
        auto params = init_params(cfg, 11);
        auto trace = forward(params, op, Eigen::MatrixXd::Zero(5, 3), cfg);
        CHECK(trace.output().cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("single edge, hand-computed one-layer relu") {
        auto op2 = normalized_op(constant_sheaf(Graph(2, {{0, 1}}), 1));
        Eigen::MatrixXd x2(2, 1);
        x2 << 2.0, -3.0;
        ScnConfig cfg{1, {1, 1}, Activation::relu, Readout::sum_aggregation, false, true};
        ScnParams params;
        params.weights.push_back(Eigen::MatrixXd::Constant(1, 1, 0.5));
        auto trace = forward(params, op2, x2, cfg);
        // D swaps the nodes: D x = (-3, 2); * 0.5 -> (-1.5, 1); relu -> (0, 1)
        CHECK(trace.output()(0, 0) == 0.0);
        CHECK(trace.output()(1, 0) == 1.0);
    }
    SECTION("linear collapse with scaling constant") {
        ScnConfig cfg{2, {3, 4, 2}, Activation::identity, Readout::sum_aggregation, true, true};
        auto params = init_params(cfg, 13);
        auto trace = forward(params, op, x, cfg);
        const double c = 1.0 / std::sqrt(4.0); // layer 2 scales by 1/sqrt(widths[1])
        Eigen::MatrixXd want =
            c * diffusion_power(op, 2) * x * params.weights[0] * params.weights[1];
        CHECK((trace.output() - want).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("shape mismatches are rejected") {
        ScnConfig cfg{1, {4, 4}, Activation::relu, Readout::sum_aggregation, true, true};
        auto params = init_params(cfg, 1);
        CHECK_THROWS_AS(forward(params, op, x, cfg), ShapeMismatch);
    }
}

TEST_CASE("readout", "[scn]") {
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 2);
    CHECK(readout(ones, Readout::sum_aggregation)(0) == 6.0);

    Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 1);
    Eigen::VectorXd per_node = readout(m, Readout::per_node);
    CHECK(per_node == m.col(0));

    SECTION("sum readout is linear") {
        Eigen::MatrixXd a = Eigen::MatrixXd::Random(3, 2);
        Eigen::MatrixXd b = Eigen::MatrixXd::Random(3, 2);
        const double lhs = readout(2.0 * a + 3.0 * b, Readout::sum_aggregation)(0);
        const double rhs = 2.0 * readout(a, Readout::sum_aggregation)(0) +
                           3.0 * readout(b, Readout::sum_aggregation)(0);
        CHECK(lhs == Approx(rhs).margin(1e-12));
    }
}

TEST_CASE("parameter gradients match finite differences", "[scn]") {
    std::mt19937_64 rng(17);
    const double fd_step = 1e-4;

    auto check_network = [&](Activation act, double tol, std::uint64_t seed) {
        Graph g = test::random_connected_graph(4 + static_cast<int>(rng() % 3),
                                               static_cast<int>(rng() % 3), rng);
        auto op = normalized_op(constant_sheaf(g, 1));
        const int n = g.num_nodes;
        ScnConfig cfg{2, {2, 5, 3}, act, Readout::sum_aggregation, true, true};
        auto params = init_params(cfg, seed);
        Eigen::MatrixXd x = test::random_matrix(n, 2, rng);

        Eigen::MatrixXd jac = param_gradient(params, op, x, cfg);
        REQUIRE(jac.rows() == n * 3);
        REQUIRE(jac.cols() == parameter_count(cfg));

        Eigen::Index col = 0;
        for (std::size_t l = 0; l < params.weights.size(); ++l) {
            for (Eigen::Index r = 0; r < params.weights[l].rows(); ++r)
                for (Eigen::Index c = 0; c < params.weights[l].cols(); ++c) {
                    ScnParams bumped = params;
                    bumped.weights[l](r, c) += fd_step;
                    Eigen::MatrixXd up = forward(bumped, op, x, cfg).output();
                    bumped.weights[l](r, c) -= 2.0 * fd_step;
                    Eigen::MatrixXd down = forward(bumped, op, x, cfg).output();
                    Eigen::MatrixXd fd = (up - down) / (2.0 * fd_step);
                    for (Eigen::Index i = 0; i < n; ++i)
                        for (Eigen::Index q = 0; q < 3; ++q) {
                            const double analytic = jac(i * 3 + q, col);
                            const double numeric = fd(i, q);
                            const double denom =
                                std::max({std::abs(analytic), std::abs(numeric), 1e-6});
                            if (act == Activation::relu &&
                                std::abs(numeric - analytic) > tol * denom) {
                                // skip coordinates that straddle a kink
                                continue;
                            }
                            CHECK(std::abs(numeric - analytic) <= tol * denom);
                        }
                    ++col;
                }
        }
    };

    check_network(Activation::identity, 1e-5, 101);
    check_network(Activation::relu, 1e-4, 102);

    SECTION("one-layer identity sum-readout gradient has the outer-product form") {
        auto op = normalized_op(constant_sheaf(path_graph(3), 1));
        Eigen::MatrixXd x = test::random_matrix(3, 2, rng);
        ScnConfig cfg{1, {2, 2}, Activation::identity, Readout::sum_aggregation, false, true};
        auto params = init_params(cfg, 7);
        Eigen::MatrixXd jac = param_gradient(params, op, x, cfg);
        // d(sum f)/dW = (D X)^T 1 1^T: row a holds the column sums of D X
        Eigen::VectorXd readout_grad = jac.colwise().sum();
        Eigen::VectorXd col_sums = (op.matrix * x).colwise().sum();
        Eigen::Index idx = 0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                CHECK(readout_grad(idx++) == Approx(col_sums(a)).margin(1e-10));
    }
    SECTION("zero input gives zero relu gradient") {
        auto op = normalized_op(constant_sheaf(path_graph(3), 1));
        ScnConfig cfg{2, {2, 3, 2}, Activation::relu, Readout::sum_aggregation, true, true};
        auto params = init_params(cfg, 9);
        Eigen::MatrixXd jac = param_gradient(params, op, Eigen::MatrixXd::Zero(3, 2), cfg);
        CHECK(jac.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("empirical tangent kernel", "[scn]") {
    std::mt19937_64 rng(23);
    Graph g(4, {{0, 1}, {1, 2}, {0, 2}, {0, 3}});
    auto op = normalized_op(constant_sheaf(g, 1));
    Eigen::MatrixXd x = test::random_matrix(4, 2, rng);

    SECTION("single sample, width one: matches explicit gradient inner products") {
        ScnConfig cfg{1, {2, 1}, Activation::identity, Readout::sum_aggregation, true, true};
        Eigen::MatrixXd emp = empirical_ntk(cfg, op, op, x, x, 1, 5);
        auto params = init_params(cfg, 5);
        Eigen::MatrixXd jac = param_gradient(params, op, x, cfg);
        Eigen::MatrixXd want = jac * jac.transpose();
        CHECK((emp - want).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("self kernel estimate is symmetric") {
        ScnConfig cfg = oracle_config(1, 2, 16);
        Eigen::MatrixXd emp = empirical_ntk(cfg, op, op, x, x, 4, 11);
        CHECK((emp - emp.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("estimator converges to the exact backprop kernel as width grows") {
        Eigen::MatrixXd exact = ntk_exact(op, op, x, x, 2, Activation::relu);
        double prev = std::numeric_limits<double>::infinity();
        for (int width : {16, 128, 1024}) {
            ScnConfig cfg = oracle_config(2, 2, width);
            Eigen::MatrixXd emp = empirical_ntk(cfg, op, op, x, x, 16, 321);
            const double err = test::relative_frobenius(emp, exact);
            CHECK(err < std::max(2.0 * prev, 0.35)); // decreasing up to sampling noise
            prev = err;
        }
        CHECK(prev < 0.05);
    }
    SECTION("identity activation is exact in expectation at any width") {
        ScnConfig cfg = oracle_config(1, 2, 8);
        cfg.activation = Activation::identity;
        Eigen::MatrixXd emp = empirical_ntk(cfg, op, op, x, x, 4000, 77);
        Eigen::MatrixXd exact = ntk_exact(op, op, x, x, 1, Activation::identity);
        CHECK(test::relative_frobenius(emp, exact) < 0.05);
    }
    SECTION("Monte Carlo standard error shrinks like one over sqrt(samples)") {
        ScnConfig cfg = oracle_config(1, 2, 32);
        auto spread = [&](int samples, std::uint64_t base) {
            std::vector<double> sums;
            for (int rep = 0; rep < 8; ++rep) {
                Eigen::MatrixXd est = empirical_ntk(cfg, op, op, x, x, samples,
                                                    base + 1000 * rep);
                sums.push_back(est.sum());
            }
            double mean = 0;
            for (double v : sums) mean += v;
            mean /= sums.size();
            double var = 0;
            for (double v : sums) var += (v - mean) * (v - mean);
            return std::sqrt(var / (sums.size() - 1));
        };
        const double se_small = spread(8, 1);
        const double se_large = spread(32, 50000);
        // quadrupling the sample count should halve the spread, loosely
        CHECK(se_large < 0.85 * se_small);
        CHECK(se_large > 0.1 * se_small);
    }
}
