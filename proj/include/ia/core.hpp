#pragma once

// Core domain types for the K-user constant MIMO interference channel:
// problem specs, channel sets, alignment strategies, and the dense complex
// linear-algebra helpers shared by every other header.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <thread>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace ia {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Relative singular-value threshold used for all rank/kernel decisions.
inline constexpr double kRankTol = 1e-10;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for all domain errors; `code()` is a stable machine-readable name.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define IA_ERROR_TYPE(Name)                                                    \
    struct Name : Error {                                                      \
        explicit Name(const std::string& what) : Error(#Name, what) {}         \
    }

IA_ERROR_TYPE(RankDeficient);
IA_ERROR_TYPE(ConvergenceFailure);
IA_ERROR_TYPE(TooManyUsers);
IA_ERROR_TYPE(HypothesisViolated);
IA_ERROR_TYPE(BadK);
IA_ERROR_TYPE(AsymmetricSpec);
IA_ERROR_TYPE(SingularChannel);
IA_ERROR_TYPE(DefectiveB);
IA_ERROR_TYPE(InfeasibleInput);
IA_ERROR_TYPE(DegenerateKernel);
IA_ERROR_TYPE(DimensionMismatch);
IA_ERROR_TYPE(ResourceLimit);
IA_ERROR_TYPE(WitnessFailed);
IA_ERROR_TYPE(ShapeMismatch);
IA_ERROR_TYPE(MissingDirectChannels);
IA_ERROR_TYPE(PivotSingular);

#undef IA_ERROR_TYPE

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct UserDims {
    int M = 0;  ///< transmit antennas
    int N = 0;  ///< receive antennas
    int d = 0;  ///< transmit dimensions (data streams)
};

/// The tuple (K; M_i, N_i, d_i) defining an alignment instance. Users are
/// 1-based throughout the library.
struct ProblemSpec {
    int K = 0;
    std::vector<UserDims> users;

    static ProblemSpec make_symmetric(int K, int M, int N, int d) {
        ProblemSpec s;
        s.K = K;
        s.users.assign(static_cast<std::size_t>(K), UserDims{M, N, d});
        s.validate();
        return s;
    }

    const UserDims& user(int i) const { return users.at(static_cast<std::size_t>(i - 1)); }
    int M(int i) const { return user(i).M; }
    int N(int i) const { return user(i).N; }
    int d(int i) const { return user(i).d; }

    bool symmetric() const {
        for (const auto& u : users)
            if (u.M != users[0].M || u.N != users[0].N || u.d != users[0].d) return false;
        return true;
    }

    void validate() const {
        if (K < 2) throw std::invalid_argument("ProblemSpec: K must be at least 2");
        if (static_cast<int>(users.size()) != K)
            throw std::invalid_argument("ProblemSpec: user list length must equal K");
        for (const auto& u : users)
            if (u.M < 1 || u.N < 1 || u.d < 1)
                throw std::invalid_argument("ProblemSpec: M, N, d must be positive");
    }
};

/// The K(K-1) cross channel matrices H_ij (shape N_i x M_j) plus optional
/// direct matrices H_ii.
struct ChannelSet {
    ProblemSpec spec;
    std::map<std::pair<int, int>, Matrix> cross;
    std::map<int, Matrix> direct;
    std::optional<std::uint64_t> seed;

    const Matrix& H(int i, int j) const {
        auto it = cross.find({i, j});
        if (it == cross.end())
            throw ShapeMismatch("missing cross channel H_{" + std::to_string(i) + "," +
                                std::to_string(j) + "}");
        return it->second;
    }

    bool has_direct() const { return !direct.empty(); }

    void validate() const {
        spec.validate();
        for (int i = 1; i <= spec.K; ++i)
            for (int j = 1; j <= spec.K; ++j) {
                if (i == j) continue;
                const Matrix& h = H(i, j);
                if (h.rows() != spec.N(i) || h.cols() != spec.M(j))
                    throw ShapeMismatch("cross channel H_{" + std::to_string(i) + "," +
                                        std::to_string(j) + "} has wrong shape");
            }
        for (const auto& [i, h] : direct)
            if (h.rows() != spec.N(i) || h.cols() != spec.M(i))
                throw ShapeMismatch("direct channel H_{" + std::to_string(i) + "," +
                                    std::to_string(i) + "} has wrong shape");
    }
};

/// Per-user subspace bases: U_i is M_i x d_i, V_i is N_i x d_i. V stores the
/// receive subspace itself; conjugation is applied where equations demand it.
struct Strategy {
    std::vector<Matrix> U;
    std::vector<Matrix> V;
};

// ---------------------------------------------------------------------------
// Channel generation
// ---------------------------------------------------------------------------

/// Deterministic standard-complex-Gaussian stream on top of mt19937_64.
///
/// Each complex draw consumes exactly two engine outputs, converted by
/// Box-Muller: u1, u2 in (0,1], R = sqrt(-ln u1), z = R exp(2*pi*i*u2).
/// Re and Im are then N(0, 1/2) so that E|z|^2 = 1.
class ComplexGaussianStream {
public:
    explicit ComplexGaussianStream(std::uint64_t seed) : eng_(seed) {}

    Complex next() {
        const double u1 = 1.0 - std::ldexp(static_cast<double>(eng_() >> 11), -53);  // (0,1]
        const double u2 = 1.0 - std::ldexp(static_cast<double>(eng_() >> 11), -53);
        const double radius = std::sqrt(-std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    double uniform01() { return std::ldexp(static_cast<double>(eng_() >> 11), -53); }

    Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)  // row-major fill order
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = next();
        return m;
    }

private:
    std::mt19937_64 eng_;
};

/// Fills every cross and direct matrix with i.i.d. CN(0,1) entries from a
/// single seeded stream. Stream order: cross matrices in lexicographic (i,j)
/// order skipping i==j, then direct matrices i = 1..K; each matrix row-major.
/// Identical (spec, seed) yields bit-identical output.
inline ChannelSet generate_channels(const ProblemSpec& spec, std::uint64_t seed) {
    spec.validate();
    ComplexGaussianStream g(seed);
    ChannelSet ch;
    ch.spec = spec;
    ch.seed = seed;
    for (int i = 1; i <= spec.K; ++i)
        for (int j = 1; j <= spec.K; ++j) {
            if (i == j) continue;
            ch.cross[{i, j}] = g.matrix(spec.N(i), spec.M(j));
        }
    for (int i = 1; i <= spec.K; ++i) ch.direct[i] = g.matrix(spec.N(i), spec.M(i));
    return ch;
}

// ---------------------------------------------------------------------------
// Dense complex linear algebra
// ---------------------------------------------------------------------------

/// Numerical rank at a relative singular-value threshold.
inline int numerical_rank(const Matrix& a, double rel_tol = kRankTol) {
    if (a.rows() == 0 || a.cols() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    const double cutoff = rel_tol * s(0);
    int r = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s(k) > cutoff) ++r;
    return r;
}

/// Matrix with orthonormal columns spanning the column space of A.
/// Throws RankDeficient if the numerical rank of A is below its column count
/// (threshold 1e-12 relative to the largest singular value).
inline Matrix orthonormal_basis(const Matrix& a) {
    if (a.cols() == 0) return a;
    if (a.rows() < a.cols()) throw RankDeficient("more columns than rows");
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0 || s(s.size() - 1) <= 1e-12 * s(0))
        throw RankDeficient("matrix does not have full column rank");
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

/// Orthonormal basis of the null space of A; number of columns equals the
/// nullity at the shared relative tolerance. A 0 x n matrix has kernel C^n.
inline Matrix kernel_basis(const Matrix& a) {
    if (a.cols() == 0) return Matrix(0, 0);
    if (a.rows() == 0) return Matrix::Identity(a.cols(), a.cols());
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cutoff = kRankTol * (s.size() ? s(0) : 0.0);
    int r = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s(k) > cutoff) ++r;
    return svd.matrixV().rightCols(a.cols() - r);
}

/// Orthonormal basis of the orthogonal complement of the column space of A.
inline Matrix complement_basis(const Matrix& a) { return kernel_basis(a.adjoint()); }

/// Worker count for internally parallel operations: an explicit request wins,
/// then the IA_THREADS environment variable, then hardware concurrency.
inline int thread_count(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("IA_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct Eigensystem {
    Vector values;
    Matrix vectors;  ///< unit-norm eigenvector columns, paired with values
};

/// Full complex eigendecomposition of a square matrix.
inline Eigensystem eig(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeMismatch("eig: matrix must be square");
    Eigen::ComplexEigenSolver<Matrix> solver(a, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("eig: iteration did not converge");
    Eigensystem e{solver.eigenvalues(), solver.eigenvectors()};
    for (Eigen::Index c = 0; c < e.vectors.cols(); ++c) e.vectors.col(c).normalize();
    return e;
}

}  // namespace ia
