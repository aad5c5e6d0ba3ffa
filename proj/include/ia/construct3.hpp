#pragma once

// Exact constructive solvers for the 3-user channel with symmetric antenna
// counts: the eigenvector construction for the square case M = N = 2d, and
// the alignment-path/kernel construction for M < N, built on the block
// matrix A_r whose kernel vectors are alignment paths.
//
// Users and blocks are 1-based; channel indices cycle modulo 3 with residue
// 0 mapped to user 3.

#include <algorithm>
#include <string>
#include <vector>

#include "ia/core.hpp"
#include "ia/feasibility.hpp"
#include "ia/verify.hpp"

namespace ia {

inline int mod3(int i) { return (i - 1) % 3 >= 0 ? (i - 1) % 3 + 1 : (i - 1) % 3 + 4; }

namespace detail {

inline void require_symmetric3(const ProblemSpec& spec) {
    if (spec.K != 3) throw AsymmetricSpec("construction requires K = 3");
    for (int i = 2; i <= 3; ++i)
        if (spec.M(i) != spec.M(1) || spec.N(i) != spec.N(1))
            throw AsymmetricSpec("construction requires equal antenna counts across users");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Alignment matrix A_r
// ---------------------------------------------------------------------------

/// The rN x (r+1)M block matrix whose row block j holds H_{i_j, i_{j+1}} in
/// column block j and H_{i_j, i_{j+2}} in column block j+1, for the cyclic
/// index sequence i_1 = start, i_2 = start+1, ... (mod 3). A kernel vector
/// stacks transmit vectors at users i_2, ..., i_{r+2} forming an alignment
/// path: consecutive images coincide at receivers i_1, ..., i_r.
struct AlignmentMatrix {
    int r = 0;
    int start = 0;
    Matrix matrix;
    struct Block {
        int row_block = 0, col_block = 0;  // 1-based
        std::pair<int, int> channel;       // (i, j) of the H_{ij} placed there
    };
    std::vector<Block> blocks;
};

inline AlignmentMatrix build_alignment_matrix(const ChannelSet& ch, int start, int r) {
    detail::require_symmetric3(ch.spec);
    if (r < 1) throw std::invalid_argument("build_alignment_matrix: r must be >= 1");
    if (start < 1 || start > 3) throw std::invalid_argument("start must be in 1..3");
    const int M = ch.spec.M(1), N = ch.spec.N(1);

    AlignmentMatrix a;
    a.r = r;
    a.start = start;
    a.matrix = Matrix::Zero(static_cast<Eigen::Index>(r) * N,
                            static_cast<Eigen::Index>(r + 1) * M);
    for (int j = 1; j <= r; ++j) {
        const int ij = mod3(start + j - 1);
        const int ij1 = mod3(start + j);
        const int ij2 = mod3(start + j + 1);
        a.matrix.block((j - 1) * N, (j - 1) * M, N, M) = ch.H(ij, ij1);
        a.matrix.block((j - 1) * N, j * M, N, M) = ch.H(ij, ij2);
        a.blocks.push_back({j, j, {ij, ij1}});
        a.blocks.push_back({j, j + 1, {ij, ij2}});
    }
    return a;
}

/// True iff A_r has full numerical rank min(rN, (r+1)M).
inline bool rank_check_Ar(const ChannelSet& ch, int start, int r) {
    const AlignmentMatrix a = build_alignment_matrix(ch, start, r);
    const Eigen::Index full = std::min(a.matrix.rows(), a.matrix.cols());
    return numerical_rank(a.matrix) == full;
}

namespace detail {

/// Kernel of A_r for the sequence starting at `start`; r = 0 yields the whole
/// transmit space C^M (A_0 has no rows).
inline Matrix alignment_kernel(const ChannelSet& ch, int start, int r) {
    if (r == 0) return Matrix::Identity(ch.spec.M(1), ch.spec.M(1));
    return kernel_basis(build_alignment_matrix(ch, start, r).matrix);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Square case: eigenvector construction
// ---------------------------------------------------------------------------

/// Solves the square case M = N = 2d from the eigenvectors of
///   B = H12 H32^-1 H31 H21^-1 H23 H13^-1.
/// The alignment conditions force the common image W = H12 U_2 = H13 U_3 to
/// be B-invariant, so W is picked as the span of the selected d eigenvectors
/// (`selection` holds d distinct indices into the 2d eigenvectors), and the
/// remaining subspaces follow by linear algebra. When M = N > 2d the problem
/// is first restricted to the leading 2d coordinates on both sides and the
/// returned bases are zero-padded back to full height.
inline Strategy solve_square(const ChannelSet& ch, int d, const std::vector<int>& selection) {
    detail::require_symmetric3(ch.spec);
    const int M = ch.spec.M(1), N = ch.spec.N(1);
    if (M != N) throw AsymmetricSpec("solve_square requires M = N");
    if (M < 2 * d) throw InfeasibleInput("solve_square requires M = N >= 2d");
    if (static_cast<int>(selection.size()) != d)
        throw std::invalid_argument("selection must pick exactly d eigenvectors");
    {
        auto s = selection;
        std::sort(s.begin(), s.end());
        if (std::unique(s.begin(), s.end()) != s.end() || s.front() < 0 || s.back() >= 2 * d)
            throw std::invalid_argument("selection indices must be distinct and in [0, 2d)");
    }
    const int s2 = 2 * d;

    auto sub = [&](int i, int j) -> Matrix { return ch.H(i, j).topLeftCorner(s2, s2); };
    auto inverse = [&](const Matrix& h, const char* name) {
        if (numerical_rank(h) < s2)
            throw SingularChannel(std::string("channel ") + name + " is singular at tolerance");
        return Matrix(h.inverse());
    };

    const Matrix h12 = sub(1, 2), h13 = sub(1, 3), h21 = sub(2, 1);
    const Matrix h23 = sub(2, 3), h31 = sub(3, 1), h32 = sub(3, 2);
    const Matrix b = h12 * inverse(h32, "H32") * h31 * inverse(h21, "H21") * h23 *
                     inverse(h13, "H13");

    const Eigensystem es = eig(b);
    if (numerical_rank(es.vectors) < s2)
        throw DefectiveB("B does not have 2d independent eigenvectors at tolerance");

    Matrix w(s2, d);
    for (int c = 0; c < d; ++c) w.col(c) = es.vectors.col(selection[static_cast<std::size_t>(c)]);

    const Matrix u3 = inverse(h13, "H13") * w;
    const Matrix u2 = inverse(h12, "H12") * w;
    const Matrix t = h23 * u3;  // = H21 U_1, the aligned image at receiver 2
    const Matrix u1 = inverse(h21, "H21") * t;

    Strategy s;
    s.U.resize(3);
    s.V.resize(3);
    auto pad = [&](const Matrix& base, int rows) {
        Matrix out = Matrix::Zero(rows, d);
        out.topRows(s2) = orthonormal_basis(base);
        return out;
    };
    s.U[0] = pad(u1, M);
    s.U[1] = pad(u2, M);
    s.U[2] = pad(u3, M);
    s.V[0] = pad(complement_basis(w), N);
    s.V[1] = pad(complement_basis(t), N);
    s.V[2] = pad(complement_basis(h31 * u1), N);
    return s;
}

/// All (or the first `limit`) strategies from d-subsets of the 2d
/// eigenvectors, in lexicographic selection order, deduplicated at principal
/// angle 1e-6.
inline std::vector<Strategy> enumerate_square_solutions(const ChannelSet& ch, int d,
                                                        int limit = -1) {
    std::vector<int> selection(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) selection[static_cast<std::size_t>(k)] = k;

    auto distinct = [&](const Strategy& a, const Strategy& b) {
        for (int i = 0; i < 3; ++i) {
            if (subspace_distance(a.U[static_cast<std::size_t>(i)],
                                  b.U[static_cast<std::size_t>(i)]) > 1e-6)
                return true;
            if (subspace_distance(a.V[static_cast<std::size_t>(i)],
                                  b.V[static_cast<std::size_t>(i)]) > 1e-6)
                return true;
        }
        return false;
    };

    std::vector<Strategy> out;
    while (true) {
        if (limit >= 0 && static_cast<int>(out.size()) >= limit) break;
        Strategy s = solve_square(ch, d, selection);
        bool fresh = true;
        for (const Strategy& prev : out) fresh = fresh && distinct(prev, s);
        if (fresh) out.push_back(std::move(s));

        // next d-combination of {0, ..., 2d-1}
        int k = d - 1;
        while (k >= 0 && selection[static_cast<std::size_t>(k)] == 2 * d - d + k) --k;
        if (k < 0) break;
        ++selection[static_cast<std::size_t>(k)];
        for (int t = k + 1; t < d; ++t)
            selection[static_cast<std::size_t>(t)] = selection[static_cast<std::size_t>(t - 1)] + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Alignment-path construction (M < N)
// ---------------------------------------------------------------------------

/// The unique r with rN < (r+1)M and (r+1)N >= (r+2)M, for M < N. This is the
/// longest-alignment-path parameter: paths of length r+1 exist, longer ones
/// do not.
inline int path_parameter(int M, int N) {
    if (M >= N) throw std::invalid_argument("path_parameter requires M < N");
    for (int r = 0;; ++r)
        if (static_cast<long long>(r) * N < static_cast<long long>(r + 1) * M &&
            static_cast<long long>(r + 1) * N >= static_cast<long long>(r + 2) * M)
            return r;
}

namespace detail {

/// Deterministic generic columns inside span(kernel) orthogonal to
/// span(excluded); `excluded` must have orthonormal columns.
inline Matrix generic_kernel_columns(const Matrix& kernel, const Matrix& excluded, int count,
                                     std::uint64_t seed) {
    ComplexGaussianStream g(seed);
    Matrix cand = kernel * g.matrix(kernel.cols(), count);
    if (excluded.cols() > 0) cand -= excluded * (excluded.adjoint() * cand);
    try {
        return orthonormal_basis(cand);
    } catch (const RankDeficient&) {
        throw DegenerateKernel("kernel too small outside the excluded subspace");
    }
}

}  // namespace detail

/// Alignment-path construction for K = 3, symmetric antennas, M < N.
///
/// With r = path_parameter(M, N), kernel vectors of A_r stack alignment
/// paths of length r+1. Case 1 (d <= (r+1)[(r+1)M - rN]) draws all of U_j
/// from such paths: W_i is a floor(d/(r+1))-dimensional subspace of
/// ker A_r^i, plus a one-dimensional w_i outside W_i when r+1 does not
/// divide d. Case 2 additionally uses paths of length r: X_i sits inside
/// ker A_{r-1}^i outside the projection of W_i. Transmit spaces collect the
/// per-transmitter coordinate blocks of these paths; each receive space is
/// the orthogonal complement of its interference sum, truncated to d
/// columns.
///
/// The free choices inside kernels are seeded pseudorandom (generic with
/// probability 1); `pick_seed` makes them reproducible.
inline Strategy solve_paths(const ChannelSet& ch, int d, std::uint64_t pick_seed = 0x1a5eed) {
    detail::require_symmetric3(ch.spec);
    const int M = ch.spec.M(1), N = ch.spec.N(1);
    if (M >= N) throw InfeasibleInput("solve_paths requires M < N (use the square/eigen route)");
    if (!decide_3user_symmetric(M, N, d).feasible())
        throw InfeasibleInput("(M, N, d) fails the 3-user symmetric feasibility conditions");

    const int r = path_parameter(M, N);
    const long long full_kernel = static_cast<long long>(r + 1) * M - static_cast<long long>(r) * N;
    const bool case1 = d <= (r + 1) * full_kernel;

    // per-user column blocks that will form U_1..U_3
    std::vector<std::vector<Matrix>> path_blocks(4);  // 1-based users

    auto block_of = [&](const Matrix& stacked, int b) -> Matrix {
        return stacked.middleRows(static_cast<Eigen::Index>(b - 1) * M, M);
    };
    auto add_blocks = [&](const std::vector<Matrix>& spaces, int nblocks) {
        // space for start i covers transmitters i+1, ..., i+nblocks (block b
        // holds the transmit vector of user i+b)
        for (int j = 1; j <= 3; ++j)
            for (int b = 1; b <= nblocks; ++b) {
                const Matrix& sp = spaces[static_cast<std::size_t>(mod3(j - b))];
                if (sp.cols() > 0) path_blocks[static_cast<std::size_t>(j)].push_back(block_of(sp, b));
            }
    };

    if (case1) {
        const int k = d / (r + 1);
        const int dprime = d - (r + 1) * k;
        std::vector<Matrix> w(4), wextra(4);
        for (int i = 1; i <= 3; ++i) {
            const Matrix kernel = detail::alignment_kernel(ch, i, r);
            if (kernel.cols() < k + (dprime > 0 ? 1 : 0))
                throw DegenerateKernel("ker A_r too small for the requested d");
            w[static_cast<std::size_t>(i)] = kernel.leftCols(k);
            if (dprime > 0)
                wextra[static_cast<std::size_t>(i)] = detail::generic_kernel_columns(
                    kernel, w[static_cast<std::size_t>(i)], 1, pick_seed + static_cast<std::uint64_t>(i));
        }
        add_blocks(w, r + 1);
        if (dprime > 0) add_blocks(wextra, dprime);
    } else {
        // r >= 1 here: at r = 0 the case-1 bound d <= M always holds
        std::vector<Matrix> w(4), x(4), wextra(4);
        const int dprime = d - (r + 1) * static_cast<int>(full_kernel);
        const int xdim = dprime / r;
        const int ddoubleprime = dprime - r * xdim;
        for (int i = 1; i <= 3; ++i) {
            const Matrix kernel = detail::alignment_kernel(ch, i, r);
            if (kernel.cols() != full_kernel)
                throw DegenerateKernel("ker A_r has unexpected dimension (non-generic channels)");
            w[static_cast<std::size_t>(i)] = kernel;

            const Matrix shorter = detail::alignment_kernel(ch, i, r - 1);
            const Matrix projected = kernel.topRows(static_cast<Eigen::Index>(r) * M);
            Matrix excluded;
            try {
                excluded = orthonormal_basis(projected);
            } catch (const RankDeficient&) {
                throw DegenerateKernel("projection of ker A_r collapsed (non-generic channels)");
            }
            if (shorter.cols() < excluded.cols() + xdim + (ddoubleprime > 0 ? 1 : 0))
                throw DegenerateKernel("ker A_{r-1} too small for the requested d");
            if (xdim > 0)
                x[static_cast<std::size_t>(i)] = detail::generic_kernel_columns(
                    shorter, excluded, xdim, pick_seed + 16 + static_cast<std::uint64_t>(i));
            if (ddoubleprime > 0) {
                Matrix wider(excluded.rows(),
                             excluded.cols() + x[static_cast<std::size_t>(i)].cols());
                wider << excluded, x[static_cast<std::size_t>(i)];
                wextra[static_cast<std::size_t>(i)] = detail::generic_kernel_columns(
                    shorter, wider, 1, pick_seed + 32 + static_cast<std::uint64_t>(i));
            }
        }
        add_blocks(w, r + 1);
        if (xdim > 0) add_blocks(x, r);
        if (ddoubleprime > 0) add_blocks(wextra, ddoubleprime);
    }

    Strategy s;
    s.U.resize(3);
    s.V.resize(3);
    for (int j = 1; j <= 3; ++j) {
        const auto& cols = path_blocks[static_cast<std::size_t>(j)];
        Eigen::Index total = 0;
        for (const Matrix& c : cols) total += c.cols();
        if (total != d) throw DegenerateKernel("assembled transmit space has wrong dimension");
        Matrix u(M, total);
        Eigen::Index at = 0;
        for (const Matrix& c : cols) {
            u.middleCols(at, c.cols()) = c;
            at += c.cols();
        }
        try {
            s.U[static_cast<std::size_t>(j - 1)] = orthonormal_basis(u);
        } catch (const RankDeficient&) {
            throw DegenerateKernel("transmit blocks are dependent (non-generic channels)");
        }
    }
    for (int j = 1; j <= 3; ++j) {
        const int j1 = mod3(j + 1), j2 = mod3(j + 2);
        Matrix interference(N, 2LL * d);
        interference << ch.H(j, j1) * s.U[static_cast<std::size_t>(j1 - 1)],
            ch.H(j, j2) * s.U[static_cast<std::size_t>(j2 - 1)];
        const Matrix comp = complement_basis(interference);
        if (comp.cols() < d)
            throw DegenerateKernel("interference did not align; receive space too small");
        s.V[static_cast<std::size_t>(j - 1)] = comp.leftCols(d);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Duality and dispatch
// ---------------------------------------------------------------------------

/// Transposed channel set exchanging the roles of transmitters and
/// receivers: dual H_ij = (H_ji)^T, dual (M_i, N_i) = (N_i, M_i). A strategy
/// for the dual maps back through dual_strategy.
inline ChannelSet dual_channels(const ChannelSet& ch) {
    ChannelSet out;
    out.spec.K = ch.spec.K;
    for (const auto& u : ch.spec.users) out.spec.users.push_back({u.N, u.M, u.d});
    out.seed = ch.seed;
    for (const auto& [key, h] : ch.cross) out.cross[{key.second, key.first}] = h.transpose();
    for (const auto& [i, h] : ch.direct) out.direct[i] = h.transpose();
    return out;
}

/// Maps a dual-problem strategy back to the original problem:
/// U_i = conj(dual V_i), V_i = conj(dual U_i).
inline Strategy dual_strategy(const Strategy& s) {
    Strategy out;
    for (const Matrix& v : s.V) out.U.push_back(v.conjugate());
    for (const Matrix& u : s.U) out.V.push_back(u.conjugate());
    return out;
}

/// Constructive K=3 dispatcher: eigen route when M = N >= 2d, path route when
/// M < N, and the transposed path route when M > N.
inline Strategy solve3(const ChannelSet& ch, int d) {
    detail::require_symmetric3(ch.spec);
    const int M = ch.spec.M(1), N = ch.spec.N(1);
    if (M == N) {
        std::vector<int> first(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) first[static_cast<std::size_t>(k)] = k;
        return solve_square(ch, d, first);
    }
    if (M < N) return solve_paths(ch, d);
    return dual_strategy(solve_paths(dual_channels(ch), d));
}

}  // namespace ia
