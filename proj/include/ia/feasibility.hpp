#pragma once

// Closed-form feasibility tests for vector-space interference alignment:
// the dimension-counting necessary condition over user subsets, the
// alignment-path bounds, the complete 3-user symmetric characterization,
// the fully symmetric (M = N) characterization for any K, the divisible
// case, and the resulting degrees-of-freedom formulas.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ia/core.hpp"

namespace ia {

enum class FeasStatus { Feasible, Infeasible, NecessaryConditionsPassOnly };

inline const char* to_string(FeasStatus s) {
    switch (s) {
        case FeasStatus::Feasible: return "Feasible";
        case FeasStatus::Infeasible: return "Infeasible";
        default: return "NecessaryConditionsPassOnly";
    }
}

/// One (condition, witness) pair attached to a verdict. `users` holds a
/// subset or index sequence when relevant; `value` is the violated/satisfied
/// bound value (t_A, slack, or the certificate integer r).
struct Certificate {
    std::string condition;
    std::vector<int> users;
    long long value = 0;
};

struct FeasibilityVerdict {
    FeasStatus status = FeasStatus::NecessaryConditionsPassOnly;
    std::optional<long long> dimension;  ///< t_{1..K} when defined
    std::vector<Certificate> certificates;

    bool feasible() const { return status == FeasStatus::Feasible; }
    bool infeasible() const { return status == FeasStatus::Infeasible; }
};

// ---------------------------------------------------------------------------
// Dimension counting (subset condition)
// ---------------------------------------------------------------------------

/// t_A over the users selected by `mask` (bit i-1 selects user i):
/// sum of strategy dimensions minus the number of orthogonality constraints,
/// with ordered pairs i != j both counted.
inline long long t_subset_mask(const ProblemSpec& spec, std::uint32_t mask) {
    long long dims = 0, dsum = 0, dsq = 0;
    for (std::uint32_t m = mask; m != 0; m &= m - 1) {
        const int i = std::countr_zero(m) + 1;
        const long long d = spec.d(i);
        dims += d * (spec.N(i) - d) + d * (spec.M(i) - d);
        dsum += d;
        dsq += d * d;
    }
    return dims - (dsum * dsum - dsq);
}

/// t_A for an explicit 1-based user subset.
inline long long t_subset(const ProblemSpec& spec, const std::vector<int>& subset) {
    std::uint32_t mask = 0;
    for (int i : subset) {
        if (i < 1 || i > spec.K) throw std::invalid_argument("t_subset: user index out of range");
        mask |= 1u << (i - 1);
    }
    return t_subset_mask(spec, mask);
}

/// Checks t_A >= 0 for every subset A (2^K of them). Returns Infeasible with
/// the first violating subset in increasing bitmask order, otherwise
/// NecessaryConditionsPassOnly with dimension t_{1..K}.
inline FeasibilityVerdict check_counting(const ProblemSpec& spec) {
    spec.validate();
    if (spec.K > 24) throw TooManyUsers("check_counting enumerates 2^K subsets; K capped at 24");
    const std::uint32_t full = (1u << spec.K) - 1;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        const long long t = t_subset_mask(spec, mask);
        if (t < 0) {
            Certificate c{"t_A<0", {}, t};
            for (int i = 1; i <= spec.K; ++i)
                if (mask & (1u << (i - 1))) c.users.push_back(i);
            return {FeasStatus::Infeasible, std::nullopt, {c}};
        }
    }
    FeasibilityVerdict v;
    v.status = FeasStatus::NecessaryConditionsPassOnly;
    v.dimension = t_subset_mask(spec, full);
    return v;
}

// ---------------------------------------------------------------------------
// Path bounds
// ---------------------------------------------------------------------------

/// Triple bound: d_i + d_j + d_k <= max(N_i, M_j + M_k), together with the
/// M/N-reversed form. True iff both hold.
inline bool check_triple(const ProblemSpec& spec, int i, int j, int k) {
    if (i == j || j == k || i == k)
        throw std::invalid_argument("check_triple: indices must be pairwise distinct");
    const long long dsum = spec.d(i) + spec.d(j) + spec.d(k);
    const bool stated = dsum <= std::max<long long>(spec.N(i), spec.M(j) + spec.M(k));
    const bool reversed = dsum <= std::max<long long>(spec.M(i), spec.N(j) + spec.N(k));
    return stated && reversed;
}

namespace detail {

inline void validate_path_sequence(const ProblemSpec& spec, const std::vector<int>& seq) {
    const int len = static_cast<int>(seq.size());
    if (len < 2) throw HypothesisViolated("sequence must have length r+2 >= 2");
    for (int v : seq)
        if (v < 1 || v > spec.K) throw HypothesisViolated("sequence index out of range");
    for (int t = 0; t + 1 < len; ++t)
        if (seq[t] == seq[t + 1]) throw HypothesisViolated("consecutive indices must differ");
    for (int t = 0; t + 2 < len; ++t)
        if (seq[t] == seq[t + 2]) throw HypothesisViolated("indices two apart must differ");
    // if i_j = i_{j'} then i_{j+1} != i_{j'+2}
    for (int t = 0; t + 1 < len; ++t)
        for (int u = 0; u + 2 < len; ++u)
            if (seq[t] == seq[u] && seq[t + 1] == seq[u + 2])
                throw HypothesisViolated("repeated index with clashing successors");
}

// Equal-antenna hypotheses for the stated orientation: N equal over the first
// r indices, M equal over indices 2..r+2. Returns {applicable, N, M}.
struct PathHypothesis {
    bool applicable = false;
    long long N = 0, M = 0;
};

template <typename FrontDim, typename TailDim>
PathHypothesis path_hypothesis(const std::vector<int>& seq, FrontDim front, TailDim tail) {
    const int len = static_cast<int>(seq.size());
    const int r = len - 2;
    PathHypothesis h;
    h.applicable = true;
    for (int t = 0; t < r; ++t) {
        if (t == 0)
            h.N = front(seq[t]);
        else if (front(seq[t]) != h.N)
            h.applicable = false;
    }
    for (int t = 1; t < len; ++t) {
        if (t == 1)
            h.M = tail(seq[t]);
        else if (tail(seq[t]) != h.M)
            h.applicable = false;
    }
    return h;
}

}  // namespace detail

/// Path bound for the index sequence i_1..i_{r+2}:
///   sum_{j=1..r} d_{i_j} + sum_{j=2..r+2} d_{i_j} <= max(rN, (r+1)M),
/// evaluated for the stated orientation and the M/N-reversed one whenever the
/// corresponding equal-antenna hypotheses hold. True iff all applicable
/// bounds hold. Throws HypothesisViolated if the sequence is malformed or
/// neither orientation applies.
inline bool check_path_bound(const ProblemSpec& spec, const std::vector<int>& seq) {
    detail::validate_path_sequence(spec, seq);
    const int len = static_cast<int>(seq.size());
    const long long r = len - 2;

    long long lhs = 0;
    for (int t = 0; t < r; ++t) lhs += spec.d(seq[t]);
    for (int t = 1; t < len; ++t) lhs += spec.d(seq[t]);

    const auto stated = detail::path_hypothesis(
        seq, [&](int i) { return spec.N(i); }, [&](int i) { return spec.M(i); });
    const auto reversed = detail::path_hypothesis(
        seq, [&](int i) { return spec.M(i); }, [&](int i) { return spec.N(i); });
    if (!stated.applicable && !reversed.applicable)
        throw HypothesisViolated("equal-antenna hypotheses hold in neither orientation");

    bool ok = true;
    if (stated.applicable) ok = ok && lhs <= std::max(r * stated.N, (r + 1) * stated.M);
    if (reversed.applicable) ok = ok && lhs <= std::max(r * reversed.N, (r + 1) * reversed.M);
    return ok;
}

/// A violated path bound found by exhaustive sequence search.
struct PathBoundViolation {
    std::vector<int> seq;
    long long lhs = 0;
    long long rhs = 0;
};

/// Enumerates index sequences up to `max_len` (default r+2 <= 8) that satisfy
/// the sequence and equal-antenna hypotheses in at least one orientation, and
/// collects violated bounds. Stops after visiting `budget` sequences.
inline std::vector<PathBoundViolation> path_bound_violations(const ProblemSpec& spec,
                                                             int max_len = 8,
                                                             long long budget = 2'000'000) {
    std::vector<PathBoundViolation> out;
    std::vector<int> seq;
    long long visited = 0;

    // Incremental check of the sequence hypotheses when appending `cand`.
    auto admissible_next = [&](int cand) {
        const int p = static_cast<int>(seq.size());
        if (p >= 1 && seq[p - 1] == cand) return false;
        if (p >= 2 && seq[p - 2] == cand) return false;
        for (int t = 0; t + 1 <= p - 1; ++t)
            if (p >= 2 && seq[t] == seq[p - 2] && seq[t + 1] == cand) return false;
        for (int u = 0; u + 2 <= p - 1; ++u)
            if (seq[p - 1] == seq[u] && cand == seq[u + 2]) return false;
        return true;
    };

    auto evaluate = [&] {
        const long long r = static_cast<long long>(seq.size()) - 2;
        const auto st = detail::path_hypothesis(
            seq, [&](int i) { return spec.N(i); }, [&](int i) { return spec.M(i); });
        const auto rv = detail::path_hypothesis(
            seq, [&](int i) { return spec.M(i); }, [&](int i) { return spec.N(i); });
        if (!st.applicable && !rv.applicable) return;
        long long lhs = 0;
        for (long long t = 0; t < r; ++t) lhs += spec.d(seq[static_cast<std::size_t>(t)]);
        for (std::size_t t = 1; t < seq.size(); ++t) lhs += spec.d(seq[t]);
        long long rhs = std::numeric_limits<long long>::max();
        if (st.applicable) rhs = std::min(rhs, std::max(r * st.N, (r + 1) * st.M));
        if (rv.applicable) rhs = std::min(rhs, std::max(r * rv.N, (r + 1) * rv.M));
        if (lhs > rhs) out.push_back({seq, lhs, rhs});
    };

    auto rec = [&](auto&& self) -> void {
        if (visited >= budget) return;
        if (seq.size() >= 2) {
            ++visited;
            evaluate();
        }
        if (static_cast<int>(seq.size()) == max_len) return;
        for (int cand = 1; cand <= spec.K; ++cand) {
            if (!admissible_next(cand)) continue;
            seq.push_back(cand);
            self(self);
            seq.pop_back();
        }
    };
    rec(rec);
    return out;
}

// ---------------------------------------------------------------------------
// Complete characterizations
// ---------------------------------------------------------------------------

/// K=3 symmetric characterization: feasible iff (2r+1)d <= max(rN, (r+1)M)
/// for every r >= 0, after swapping so that N >= M. The infinite family is
/// truncated: for N > 2d the bound holds via the rN branch once
/// r >= d/(N-2d); for N <= 2d a violation (if any) occurs by r = d+1.
inline FeasibilityVerdict decide_3user_symmetric(int M, int N, int d) {
    if (M < 1 || N < 1 || d < 1)
        throw std::invalid_argument("decide_3user_symmetric: M, N, d must be positive");
    if (N < M) std::swap(M, N);  // without loss of generality

    long long r_cap;
    if (N > 2 * d)
        r_cap = (d + (N - 2 * d) - 1) / (N - 2 * d);
    else
        r_cap = d + 1;

    for (long long r = 0; r <= r_cap; ++r) {
        const long long lhs = (2 * r + 1) * d;
        const long long rhs = std::max(r * N, (r + 1) * M);
        if (lhs > rhs) {
            FeasibilityVerdict v;
            v.status = FeasStatus::Infeasible;
            v.certificates.push_back({"(2r+1)d>max(rN,(r+1)M)", {}, r});
            return v;
        }
    }
    FeasibilityVerdict v;
    v.status = FeasStatus::Feasible;
    v.dimension = 3ll * d * (M + N - 4ll * d);
    return v;
}

/// Fully symmetric characterization (M_i = N_i = N, d_i = d, K >= 3):
/// feasible iff 2N >= (K+1)d, with solution-variety dimension
/// K d (2N - (K+1)d) when feasible.
inline FeasibilityVerdict decide_fully_symmetric(int K, int N, int d) {
    if (K < 3) throw BadK("decide_fully_symmetric requires K >= 3");
    if (N < 1 || d < 0) throw std::invalid_argument("decide_fully_symmetric: bad N or d");
    FeasibilityVerdict v;
    const long long slack = 2ll * N - static_cast<long long>(K + 1) * d;
    if (slack >= 0) {
        v.status = FeasStatus::Feasible;
        v.dimension = static_cast<long long>(K) * d * slack;
    } else {
        v.status = FeasStatus::Infeasible;
        v.certificates.push_back({"2N<(K+1)d", {}, slack});
    }
    return v;
}

/// Divisible case: when every d_i equals a common d that divides all M_i and
/// N_i, feasibility is equivalent to t_A >= 0 for all subsets. Returns
/// nullopt when the divisibility hypothesis does not apply.
inline std::optional<FeasibilityVerdict> decide_divisible(const ProblemSpec& spec) {
    spec.validate();
    const int d = spec.d(1);
    for (int i = 1; i <= spec.K; ++i) {
        if (spec.d(i) != d) return std::nullopt;
        if (spec.M(i) % d != 0 || spec.N(i) % d != 0) return std::nullopt;
    }
    FeasibilityVerdict v = check_counting(spec);
    if (v.status == FeasStatus::NecessaryConditionsPassOnly)
        v.status = FeasStatus::Feasible;  // the condition is also sufficient here
    return v;
}

// ---------------------------------------------------------------------------
// Degrees of freedom
// ---------------------------------------------------------------------------

struct MaxDof {
    int d = 0;
    long long total = 0;
    long long num = 0, den = 1;  ///< normalized dof K*d/N as a reduced fraction
};

/// Largest per-user d feasible in the fully symmetric channel, and the
/// resulting total and normalized dof (never above 2K/(K+1) <= 2).
inline MaxDof max_dof_fully_symmetric(int K, int N) {
    if (K < 3) throw BadK("max_dof_fully_symmetric requires K >= 3");
    if (N < 1) throw std::invalid_argument("max_dof_fully_symmetric: N must be positive");
    MaxDof r;
    r.d = (2 * N) / (K + 1);
    r.total = static_cast<long long>(K) * r.d;
    const long long g = std::gcd(r.total, static_cast<long long>(N));
    r.num = r.total / g;
    r.den = N / g;
    return r;
}

struct SubsetDof {
    int k = 0;  ///< number of active users
    int d = 0;
    long long total = 0;
};

/// Maximizes k * floor(2N/(k+1)) over 1 <= k <= K active users. k = 1 is the
/// interference-free single user (d = N). Returns the smallest maximizing k.
inline SubsetDof best_subset_dof(int K, int N) {
    if (K < 1 || N < 1) throw std::invalid_argument("best_subset_dof: K, N must be positive");
    SubsetDof best;
    for (int k = 1; k <= K; ++k) {
        const int d = (2 * N) / (k + 1);
        const long long total = static_cast<long long>(k) * d;
        if (total > best.total) best = {k, d, total};
    }
    if (best.k == 0) best = {1, N, N};
    return best;
}

}  // namespace ia
