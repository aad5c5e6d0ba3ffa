#pragma once

// Numerical certification of alignment strategies: the orthogonality
// conditions V_i' H_ij U_j = 0, the direct-link rank condition
// rank(V_i' H_ii U_i) = d_i, and subspace diagnostics.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "ia/core.hpp"

namespace ia {

struct VerificationReport {
    double tol = 1e-8;
    double max_orthogonality_residual = 0.0;
    std::map<std::pair<int, int>, double> pair_residuals;
    std::vector<bool> direct_rank_ok;  ///< per user; empty when direct channels absent
    bool dims_ok = true;
    bool passed = false;
};

namespace detail {

inline Matrix orthonormalized(const Matrix& a) {
    // QR Q factor; usable even when the basis is numerically rank-deficient
    // (dims_ok reports that separately).
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

inline void check_strategy_shapes(const ChannelSet& ch, const Strategy& s) {
    const auto K = static_cast<std::size_t>(ch.spec.K);
    if (s.U.size() != K || s.V.size() != K)
        throw ShapeMismatch("strategy must carry one U and one V per user");
    for (int i = 1; i <= ch.spec.K; ++i) {
        const Matrix& u = s.U[static_cast<std::size_t>(i - 1)];
        const Matrix& v = s.V[static_cast<std::size_t>(i - 1)];
        if (u.rows() != ch.spec.M(i) || u.cols() != ch.spec.d(i))
            throw ShapeMismatch("U_" + std::to_string(i) + " has wrong shape");
        if (v.rows() != ch.spec.N(i) || v.cols() != ch.spec.d(i))
            throw ShapeMismatch("V_" + std::to_string(i) + " has wrong shape");
    }
}

}  // namespace detail

/// Per-user direct-link check: rank(V_i' H_ii U_i) == d_i at the shared rank
/// tolerance, on orthonormalized bases.
inline std::vector<bool> check_direct_rank(const ChannelSet& ch, const Strategy& s,
                                           double rank_tol = kRankTol) {
    detail::check_strategy_shapes(ch, s);
    if (!ch.has_direct())
        throw MissingDirectChannels("check_direct_rank needs direct channels H_ii");
    std::vector<bool> ok;
    for (int i = 1; i <= ch.spec.K; ++i) {
        auto it = ch.direct.find(i);
        if (it == ch.direct.end())
            throw MissingDirectChannels("missing direct channel for user " + std::to_string(i));
        const Matrix q_u = detail::orthonormalized(s.U[static_cast<std::size_t>(i - 1)]);
        const Matrix q_v = detail::orthonormalized(s.V[static_cast<std::size_t>(i - 1)]);
        const Matrix p = q_v.adjoint() * it->second * q_u;
        ok.push_back(numerical_rank(p, rank_tol) == ch.spec.d(i));
    }
    return ok;
}

/// Orthonormalizes every basis and reports the worst |entry| of V_i' H_ij U_j
/// over all ordered pairs i != j, plus dimension and (when direct channels
/// are present) direct-rank checks.
inline VerificationReport check_orthogonality(const ChannelSet& ch, const Strategy& s,
                                              double tol = 1e-8) {
    detail::check_strategy_shapes(ch, s);
    VerificationReport rep;
    rep.tol = tol;

    const int K = ch.spec.K;
    std::vector<Matrix> qu(static_cast<std::size_t>(K)), qv(static_cast<std::size_t>(K));
    for (int i = 1; i <= K; ++i) {
        const Matrix& u = s.U[static_cast<std::size_t>(i - 1)];
        const Matrix& v = s.V[static_cast<std::size_t>(i - 1)];
        if (numerical_rank(u) != ch.spec.d(i) || numerical_rank(v) != ch.spec.d(i))
            rep.dims_ok = false;
        qu[static_cast<std::size_t>(i - 1)] = detail::orthonormalized(u);
        qv[static_cast<std::size_t>(i - 1)] = detail::orthonormalized(v);
    }

    for (int i = 1; i <= K; ++i)
        for (int j = 1; j <= K; ++j) {
            if (i == j) continue;
            const Matrix prod = qv[static_cast<std::size_t>(i - 1)].adjoint() * ch.H(i, j) *
                                qu[static_cast<std::size_t>(j - 1)];
            const double res = prod.size() ? prod.cwiseAbs().maxCoeff() : 0.0;
            rep.pair_residuals[{i, j}] = res;
            rep.max_orthogonality_residual = std::max(rep.max_orthogonality_residual, res);
        }

    bool direct_ok = true;
    if (ch.has_direct()) {
        rep.direct_rank_ok = check_direct_rank(ch, s);
        for (bool b : rep.direct_rank_ok) direct_ok = direct_ok && b;
    }
    rep.passed = rep.dims_ok && direct_ok && rep.max_orthogonality_residual <= tol;
    return rep;
}

/// dim(H_ij U_j  intersect  H_ik U_k) at receiver i for K = 3, by rank
/// arithmetic: rank(A) + rank(B) - rank([A B]).
inline int interference_overlap(const ChannelSet& ch, const Strategy& s, int receiver) {
    if (ch.spec.K != 3) throw std::invalid_argument("interference_overlap is a K=3 diagnostic");
    detail::check_strategy_shapes(ch, s);
    if (receiver < 1 || receiver > 3) throw std::invalid_argument("receiver index out of range");
    std::vector<int> others;
    for (int j = 1; j <= 3; ++j)
        if (j != receiver) others.push_back(j);
    const Matrix a = ch.H(receiver, others[0]) * s.U[static_cast<std::size_t>(others[0] - 1)];
    const Matrix b = ch.H(receiver, others[1]) * s.U[static_cast<std::size_t>(others[1] - 1)];
    Matrix joint(a.rows(), a.cols() + b.cols());
    joint << a, b;
    return numerical_rank(a) + numerical_rank(b) - numerical_rank(joint);
}

/// Largest principal angle (radians) between the column spaces of A and B.
/// Small angles come from the sine-based formula, which stays accurate where
/// acos of a near-unit cosine would not.
inline double subspace_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatch("subspace_distance: shapes must agree");
    if (a.cols() == 0) return 0.0;
    const Matrix qa = orthonormal_basis(a);
    const Matrix qb = orthonormal_basis(b);
    const Matrix c = qa.adjoint() * qb;
    Eigen::JacobiSVD<Matrix> svd(c);
    const double cos_max = std::clamp(svd.singularValues().minCoeff(), 0.0, 1.0);
    if (cos_max * cos_max <= 0.5) return std::acos(cos_max);
    const Matrix residual = qb - qa * c;  // (I - P_a) Q_b, singular values = sines
    Eigen::JacobiSVD<Matrix> ssvd(residual);
    return std::asin(std::clamp(ssvd.singularValues().maxCoeff(), 0.0, 1.0));
}

}  // namespace ia
