#include <catch2/catch_amalgamated.hpp>

#include "ia/core.hpp"
#include "ia/json_io.hpp"

using namespace ia;

TEST_CASE("generate_channels produces the declared shapes") {
    const auto spec = ProblemSpec::make_symmetric(3, 2, 2, 1);
    const ChannelSet ch = generate_channels(spec, 7);
    REQUIRE(ch.cross.size() == 6);
    REQUIRE(ch.direct.size() == 3);
    for (const auto& [key, h] : ch.cross) {
        REQUIRE(h.rows() == 2);
        REQUIRE(h.cols() == 2);
    }
    REQUIRE_NOTHROW(ch.validate());
}

TEST_CASE("generate_channels shape rule is N_i x M_j") {
    ProblemSpec spec;
    spec.K = 2;
    spec.users = {{1, 3, 1}, {2, 1, 1}};  // M=(1,2), N=(3,1)
    const ChannelSet ch = generate_channels(spec, 0);
    REQUIRE(ch.H(1, 2).rows() == 3);
    REQUIRE(ch.H(1, 2).cols() == 2);
    REQUIRE(ch.H(2, 1).rows() == 1);
    REQUIRE(ch.H(2, 1).cols() == 1);
}

TEST_CASE("generate_channels is a pure function of (spec, seed)") {
    const auto spec = ProblemSpec::make_symmetric(3, 3, 4, 1);
    const ChannelSet a = generate_channels(spec, 42);
    const ChannelSet b = generate_channels(spec, 42);
    for (const auto& [key, h] : a.cross) REQUIRE(h == b.cross.at(key));
    for (const auto& [i, h] : a.direct) REQUIRE(h == b.direct.at(i));

    const ChannelSet c = generate_channels(spec, 43);
    bool any_diff = false;
    for (const auto& [key, h] : a.cross) any_diff = any_diff || h != c.cross.at(key);
    REQUIRE(any_diff);
}

TEST_CASE("orthonormal_basis basics") {
    REQUIRE(orthonormal_basis(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-14));

    Matrix col(2, 1);
    col << Complex(2, 0), Complex(0, 0);
    const Matrix q = orthonormal_basis(col);
    REQUIRE(std::abs(std::abs(q(0, 0)) - 1.0) < 1e-14);
    REQUIRE(std::abs(q(1, 0)) < 1e-14);
}

TEST_CASE("orthonormal_basis returns orthonormal columns spanning the input") {
    ComplexGaussianStream g(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = g.matrix(4, 2);
        const Matrix q = orthonormal_basis(a);
        REQUIRE((q.adjoint() * q - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
        // column spaces agree: projector difference vanishes
        const Matrix qa = orthonormal_basis(a);
        Eigen::JacobiSVD<Matrix> svd(qa.adjoint() * q);
        REQUIRE(svd.singularValues().minCoeff() > 1.0 - 1e-10);
    }
}

TEST_CASE("orthonormal_basis rejects rank-deficient input") {
    Matrix a(3, 2);
    a.col(0) << 1, 2, 3;
    a.col(1) << 2, 4, 6;
    REQUIRE_THROWS_AS(orthonormal_basis(a), RankDeficient);
}

TEST_CASE("kernel_basis basics") {
    REQUIRE(kernel_basis(Matrix::Identity(2, 2)).cols() == 0);

    Matrix row(1, 2);
    row << 1, 0;
    const Matrix k = kernel_basis(row);
    REQUIRE(k.cols() == 1);
    REQUIRE(std::abs(k(0, 0)) < 1e-14);
    REQUIRE(std::abs(std::abs(k(1, 0)) - 1.0) < 1e-14);
}

TEST_CASE("kernel_basis residual and orthonormality on random wide matrices") {
    ComplexGaussianStream g(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = g.matrix(4, 6);
        const Matrix k = kernel_basis(a);
        REQUIRE(k.cols() == 2);
        REQUIRE((a * k).cwiseAbs().maxCoeff() <= 1e-9 * a.cwiseAbs().maxCoeff());
        REQUIRE((k.adjoint() * k - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("rank-nullity at matched tolerances") {
    ComplexGaussianStream g(13);
    for (int trial = 0; trial < 30; ++trial) {
        const int rows = 1 + static_cast<int>(std::abs(g.next().real() * 3)) % 6;
        const int cols = 1 + static_cast<int>(std::abs(g.next().real() * 3)) % 6;
        const Matrix a = g.matrix(rows, cols);
        REQUIRE(numerical_rank(a) + kernel_basis(a).cols() == cols);
    }
}

TEST_CASE("eig on diagonal and rotation matrices") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 2;
    const Eigensystem ed = eig(d);
    std::vector<double> vals{ed.values(0).real(), ed.values(1).real()};
    std::sort(vals.begin(), vals.end());
    REQUIRE(vals[0] == Catch::Approx(1.0));
    REQUIRE(vals[1] == Catch::Approx(2.0));

    Matrix rot(2, 2);
    rot << 0, -1, 1, 0;  // rotation by 90 degrees: eigenvalues +-i
    const Eigensystem er = eig(rot);
    std::vector<double> imag{er.values(0).imag(), er.values(1).imag()};
    std::sort(imag.begin(), imag.end());
    REQUIRE(imag[0] == Catch::Approx(-1.0));
    REQUIRE(imag[1] == Catch::Approx(1.0));
    REQUIRE(std::abs(er.values(0).real()) < 1e-12);
}

TEST_CASE("eig residuals on random matrices") {
    ComplexGaussianStream g(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = g.matrix(4, 4);
        const Eigensystem e = eig(a);
        const double scale = a.cwiseAbs().maxCoeff();
        for (int c = 0; c < 4; ++c) {
            const Vector res = a * e.vectors.col(c) - e.values(c) * e.vectors.col(c);
            REQUIRE(res.cwiseAbs().maxCoeff() <= 1e-9 * scale);
            REQUIRE(e.vectors.col(c).norm() == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("channel JSON round trip is exact") {
    const auto spec = ProblemSpec::make_symmetric(3, 2, 3, 1);
    const ChannelSet ch = generate_channels(spec, 99);
    const ChannelSet back = channels_from_json(channels_to_json(ch));
    REQUIRE(back.spec.K == 3);
    REQUIRE(back.seed.has_value());
    REQUIRE(*back.seed == 99);
    for (const auto& [key, h] : ch.cross) REQUIRE(h == back.cross.at(key));
    for (const auto& [i, h] : ch.direct) REQUIRE(h == back.direct.at(i));
}

TEST_CASE("strategy JSON round trip is exact") {
    ComplexGaussianStream g(3);
    Strategy s;
    s.U = {g.matrix(3, 1), g.matrix(3, 1), g.matrix(3, 1)};
    s.V = {g.matrix(4, 1), g.matrix(4, 1), g.matrix(4, 1)};
    const Strategy back = strategy_from_json(strategy_to_json(s));
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(s.U[i] == back.U[i]);
        REQUIRE(s.V[i] == back.V[i]);
    }
}

TEST_CASE("problem spec validation") {
    REQUIRE_THROWS_AS(ProblemSpec::make_symmetric(1, 2, 2, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(ProblemSpec::make_symmetric(3, 0, 2, 1), std::invalid_argument);
    REQUIRE(ProblemSpec::make_symmetric(4, 5, 5, 2).symmetric());
    ProblemSpec spec;
    spec.K = 2;
    spec.users = {{1, 2, 1}, {2, 2, 1}};
    REQUIRE(!spec.symmetric());
}
