#pragma once

// Numerical strategy finding for arbitrary K: the bilinear orthogonality
// system in square affine coordinates (identity block on top, free block
// below), solved by multi-start Levenberg-Marquardt damped Gauss-Newton.
//
// The receive subspaces are parametrized by their complex conjugates, which
// makes every equation polynomial (holomorphic) in the stored coordinates;
// the complex normal-equation step below is then identical to Gauss-Newton
// on the real-imaginary-split least-squares problem.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "ia/core.hpp"

namespace ia {

// ---------------------------------------------------------------------------
// Affine coordinates
// ---------------------------------------------------------------------------

/// Free coordinates of a strategy in the square affine chart: per user the
/// (M_i-d_i) x d_i transmit block below the identity, and the
/// (N_i-d_i) x d_i conjugated receive block below the identity.
struct AffineStrategyCoords {
    ProblemSpec spec;
    std::vector<Matrix> u;     ///< (M_i-d_i) x d_i
    std::vector<Matrix> vbar;  ///< (N_i-d_i) x d_i, stores conj(V_i) coordinates

    /// Complex coordinate count: sum_i d_i(M_i-d_i) + d_i(N_i-d_i) = dim S.
    static Eigen::Index coordinate_count(const ProblemSpec& spec) {
        Eigen::Index n = 0;
        for (const auto& us : spec.users)
            n += static_cast<Eigen::Index>(us.d) * (us.M - us.d) +
                 static_cast<Eigen::Index>(us.d) * (us.N - us.d);
        return n;
    }

    /// Flat layout: per user, u column-major then vbar column-major.
    Vector flatten() const {
        Vector x(coordinate_count(spec));
        Eigen::Index at = 0;
        for (int i = 1; i <= spec.K; ++i) {
            const Matrix& uu = u[static_cast<std::size_t>(i - 1)];
            const Matrix& vv = vbar[static_cast<std::size_t>(i - 1)];
            x.segment(at, uu.size()) = Eigen::Map<const Vector>(uu.data(), uu.size());
            at += uu.size();
            x.segment(at, vv.size()) = Eigen::Map<const Vector>(vv.data(), vv.size());
            at += vv.size();
        }
        return x;
    }

    static AffineStrategyCoords unflatten(const ProblemSpec& spec, const Vector& x) {
        if (x.size() != coordinate_count(spec))
            throw ShapeMismatch("affine coordinate vector has wrong length");
        AffineStrategyCoords c;
        c.spec = spec;
        Eigen::Index at = 0;
        for (int i = 1; i <= spec.K; ++i) {
            const Eigen::Index mu = static_cast<Eigen::Index>(spec.M(i) - spec.d(i)) * spec.d(i);
            const Eigen::Index mv = static_cast<Eigen::Index>(spec.N(i) - spec.d(i)) * spec.d(i);
            c.u.push_back(Eigen::Map<const Matrix>(x.data() + at, spec.M(i) - spec.d(i), spec.d(i)));
            at += mu;
            c.vbar.push_back(
                Eigen::Map<const Matrix>(x.data() + at, spec.N(i) - spec.d(i), spec.d(i)));
            at += mv;
        }
        return c;
    }
};

/// Re-attaches the identity blocks: U_i = [I; u_i], V_i = conj([I; vbar_i]).
inline Strategy extend_to_strategy(const AffineStrategyCoords& c) {
    Strategy s;
    for (int i = 1; i <= c.spec.K; ++i) {
        const int d = c.spec.d(i);
        Matrix uu(c.spec.M(i), d);
        uu.topRows(d) = Matrix::Identity(d, d);
        uu.bottomRows(c.spec.M(i) - d) = c.u[static_cast<std::size_t>(i - 1)];
        Matrix vv(c.spec.N(i), d);
        vv.topRows(d) = Matrix::Identity(d, d);
        vv.bottomRows(c.spec.N(i) - d) = c.vbar[static_cast<std::size_t>(i - 1)].conjugate();
        s.U.push_back(std::move(uu));
        s.V.push_back(std::move(vv));
    }
    return s;
}

/// Canonical affine form of a strategy: right-multiplies each basis by the
/// inverse of its leading d x d block. Unique per subspace tuple; throws
/// PivotSingular when a leading block is singular at tolerance.
inline AffineStrategyCoords to_affine(const ProblemSpec& spec, const Strategy& s) {
    AffineStrategyCoords c;
    c.spec = spec;
    auto reduce = [&](const Matrix& basis, int d, const char* side, int user) {
        const Matrix lead = basis.topRows(d);
        Eigen::JacobiSVD<Matrix> full(basis);
        Eigen::JacobiSVD<Matrix> top(lead);
        if (top.singularValues().minCoeff() <= kRankTol * full.singularValues().maxCoeff())
            throw PivotSingular(std::string("leading block of ") + side + "_" +
                                std::to_string(user) + " is singular at tolerance");
        const Matrix reduced = basis * lead.inverse();
        return Matrix(reduced.bottomRows(basis.rows() - d));
    };
    for (int i = 1; i <= spec.K; ++i) {
        c.u.push_back(reduce(s.U[static_cast<std::size_t>(i - 1)], spec.d(i), "U", i));
        c.vbar.push_back(
            reduce(s.V[static_cast<std::size_t>(i - 1)].conjugate(), spec.d(i), "V", i));
    }
    return c;
}

/// to_affine with one retry under a seeded random unitary change of the
/// ambient transmit/receive coordinates. Coordinates produced through the
/// retry live in the rotated chart and are only comparable to coordinates
/// canonicalized with the same seed.
inline AffineStrategyCoords canonical_coords(const ProblemSpec& spec, const Strategy& s,
                                             std::uint64_t chart_seed = 0xc0ffee) {
    try {
        return to_affine(spec, s);
    } catch (const PivotSingular&) {
        ComplexGaussianStream g(chart_seed);
        Strategy rotated;
        for (int i = 1; i <= spec.K; ++i) {
            const Matrix qu = orthonormal_basis(g.matrix(spec.M(i), spec.M(i)));
            const Matrix qv = orthonormal_basis(g.matrix(spec.N(i), spec.N(i)));
            rotated.U.push_back(qu * s.U[static_cast<std::size_t>(i - 1)]);
            rotated.V.push_back(qv * s.V[static_cast<std::size_t>(i - 1)]);
        }
        return to_affine(spec, rotated);
    }
}

// ---------------------------------------------------------------------------
// Residual and Jacobian
// ---------------------------------------------------------------------------

namespace detail {

struct SystemLayout {
    Eigen::Index vars = 0;
    Eigen::Index eqs = 0;
    std::vector<Eigen::Index> u_offset, v_offset;  // per user, into the variable vector

    explicit SystemLayout(const ProblemSpec& spec) {
        u_offset.resize(static_cast<std::size_t>(spec.K));
        v_offset.resize(static_cast<std::size_t>(spec.K));
        for (int i = 1; i <= spec.K; ++i) {
            u_offset[static_cast<std::size_t>(i - 1)] = vars;
            vars += static_cast<Eigen::Index>(spec.d(i)) * (spec.M(i) - spec.d(i));
            v_offset[static_cast<std::size_t>(i - 1)] = vars;
            vars += static_cast<Eigen::Index>(spec.d(i)) * (spec.N(i) - spec.d(i));
        }
        for (int i = 1; i <= spec.K; ++i)
            for (int j = 1; j <= spec.K; ++j)
                if (i != j) eqs += static_cast<Eigen::Index>(spec.d(i)) * spec.d(j);
    }
};

}  // namespace detail

/// Stacked entries of [I; vbar_i]^T H_ij [I; u_j] over all ordered pairs
/// i != j (receiver-major order, each d_i x d_j block column-major). These
/// are exactly the entries of V_i' H_ij U_j, bilinear in the stored
/// coordinates; length is sum_{i != j} d_i d_j.
inline Vector residual(const ChannelSet& ch, const AffineStrategyCoords& coords) {
    const ProblemSpec& spec = ch.spec;
    const detail::SystemLayout layout(spec);
    const Strategy s = extend_to_strategy(coords);
    Vector f(layout.eqs);
    Eigen::Index at = 0;
    for (int i = 1; i <= spec.K; ++i)
        for (int j = 1; j <= spec.K; ++j) {
            if (i == j) continue;
            // [I; vbar_i]^T = V_i^dagger, so this is the verify-module product
            const Matrix block = s.V[static_cast<std::size_t>(i - 1)].adjoint() * ch.H(i, j) *
                                 s.U[static_cast<std::size_t>(j - 1)];
            f.segment(at, block.size()) = Eigen::Map<const Vector>(block.data(), block.size());
            at += block.size();
        }
    return f;
}

/// Residual and analytic complex Jacobian at the flat coordinate vector x.
inline void residual_and_jacobian(const ChannelSet& ch, const Vector& x, Vector& f, Matrix& jac) {
    const ProblemSpec& spec = ch.spec;
    const detail::SystemLayout layout(spec);
    const AffineStrategyCoords coords = AffineStrategyCoords::unflatten(spec, x);
    const Strategy s = extend_to_strategy(coords);

    f.resize(layout.eqs);
    jac = Matrix::Zero(layout.eqs, layout.vars);

    Eigen::Index row = 0;
    for (int i = 1; i <= spec.K; ++i) {
        const int di = spec.d(i);
        const Matrix vt = s.V[static_cast<std::size_t>(i - 1)].adjoint();  // = [I; vbar_i]^T
        for (int j = 1; j <= spec.K; ++j) {
            if (i == j) continue;
            const int dj = spec.d(j);
            const Matrix& h = ch.H(i, j);
            const Matrix p = vt * h;                                    // d_i x M_j
            const Matrix q = h * s.U[static_cast<std::size_t>(j - 1)];  // N_i x d_j
            const Matrix block = p * s.U[static_cast<std::size_t>(j - 1)];
            f.segment(row, block.size()) = Eigen::Map<const Vector>(block.data(), block.size());

            // residual entry (a, b) sits at row + a + b*d_i (column-major)
            for (int b = 0; b < dj; ++b)
                for (int a = 0; a < di; ++a) {
                    const Eigen::Index rr = row + a + static_cast<Eigen::Index>(b) * di;
                    // d/d u_j(k, b): P(a, d_j + k)
                    const Eigen::Index uoff =
                        layout.u_offset[static_cast<std::size_t>(j - 1)] +
                        static_cast<Eigen::Index>(b) * (spec.M(j) - dj);
                    for (int k = 0; k < spec.M(j) - dj; ++k) jac(rr, uoff + k) = p(a, dj + k);
                    // d/d vbar_i(k, a): Q(d_i + k, b)
                    const Eigen::Index voff =
                        layout.v_offset[static_cast<std::size_t>(i - 1)] +
                        static_cast<Eigen::Index>(a) * (spec.N(i) - di);
                    for (int k = 0; k < spec.N(i) - di; ++k) jac(rr, voff + k) = q(di + k, b);
                }
            row += static_cast<Eigen::Index>(di) * dj;
        }
    }
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt multi-start solver
// ---------------------------------------------------------------------------

struct NewtonOptions {
    std::uint64_t seed = 0;
    int restarts = 100;
    int max_iters = 200;
    double lambda0 = 1e-3;
    double lambda_factor = 10.0;
    int threads = 0;  ///< 0: IA_THREADS env or hardware concurrency
};

struct NewtonResult {
    bool success = false;
    Strategy strategy;
    AffineStrategyCoords coords;
    double residual_inf = std::numeric_limits<double>::infinity();
    int restarts_used = 0;
    long long iterations = 0;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Start vector for restart index t. Two of every three starts are unit-scale
/// CN(0,1); the third is inflated by a log-uniform factor in [1, 100) so that
/// solutions with large affine coordinates (near-vertical subspaces) are
/// reachable too.
inline Vector random_start(std::uint64_t seed, int t, Eigen::Index nvars) {
    ComplexGaussianStream g(mix_seed(seed, static_cast<std::uint64_t>(t)));
    Vector x(nvars);
    for (Eigen::Index k = 0; k < nvars; ++k) x(k) = g.next();
    if (t % 3 == 2) x *= std::pow(10.0, 2.0 * g.uniform01());
    return x;
}

struct LmOutcome {
    bool success = false;
    Vector x;
    double residual_inf = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

/// One damped Gauss-Newton run from the given start. Stops early on
/// a vanishing gradient, a vanishing step, cost stagnation, or runaway
/// damping; `max_iters` caps the accepted+rejected step count. Iteration
/// continues past the success threshold down to a 1000x tighter polish
/// target, so converged residuals land well below the tolerance.
inline LmOutcome lm_single_start(const ChannelSet& ch, Vector x, double success_tol,
                                 const NewtonOptions& opt) {
    LmOutcome out;
    const double polish_tol = success_tol * 1e-3;
    Vector f;
    Matrix jac;
    residual_and_jacobian(ch, x, f, jac);
    double cost = f.squaredNorm();
    double lambda = opt.lambda0;
    int stagnant = 0;

    for (int iter = 0; iter < opt.max_iters; ++iter) {
        ++out.iterations;
        const double finf = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
        if (finf <= polish_tol) break;
        const Matrix jtj = jac.adjoint() * jac;
        const Vector g = jac.adjoint() * f;
        if (g.size() == 0 || g.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + cost)) break;

        const Matrix damped =
            jtj + lambda * Matrix::Identity(jtj.rows(), jtj.cols());
        const Vector step = Eigen::LDLT<Matrix>(damped).solve(-g);
        if (!step.allFinite()) {
            lambda *= opt.lambda_factor;
            if (lambda > 1e12) break;
            continue;
        }
        const Vector x_try = x + step;
        Vector f_try;
        Matrix jac_try;
        residual_and_jacobian(ch, x_try, f_try, jac_try);
        const double cost_try = f_try.squaredNorm();
        if (cost_try < cost) {
            stagnant = (cost - cost_try <= 1e-15 * (1.0 + cost)) ? stagnant + 1 : 0;
            x = x_try;
            f = std::move(f_try);
            jac = std::move(jac_try);
            cost = cost_try;
            lambda = std::max(lambda / opt.lambda_factor, 1e-14);
            if (step.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff())) break;
            if (stagnant >= 4) break;
        } else {
            lambda *= opt.lambda_factor;
            if (lambda > 1e12) break;
        }
    }
    const double finf = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    if (finf <= success_tol) out.success = true;
    out.residual_inf = finf;
    out.x = std::move(x);
    return out;
}

inline double newton_success_tol(const ChannelSet& ch) {
    double hmax = 0.0;
    for (const auto& [key, h] : ch.cross)
        if (h.size()) hmax = std::max(hmax, h.cwiseAbs().maxCoeff());
    return 1e-10 * (1.0 + hmax);
}

inline bool affine_chart_exists(const ProblemSpec& spec) {
    for (const auto& u : spec.users)
        if (u.d > u.M || u.d > u.N) return false;
    return true;
}

}  // namespace detail

/// Multi-start damped Gauss-Newton on the square affine system. Starts are
/// i.i.d. CN(0,1) coordinate vectors seeded per (seed, restart index);
/// success means ||residual||_inf <= 1e-10 * (1 + max |H| entry). Restarts
/// run in parallel; the successful restart with the smallest index wins, so
/// the result does not depend on scheduling. A failed result (all restarts
/// exhausted) is the expected outcome on infeasible instances.
inline NewtonResult solve_newton(const ChannelSet& ch, const NewtonOptions& opt = {}) {
    const ProblemSpec& spec = ch.spec;
    spec.validate();
    NewtonResult result;
    if (!detail::affine_chart_exists(spec)) return result;  // d_i > min(M_i, N_i): no strategies

    const double tol = detail::newton_success_tol(ch);
    const Eigen::Index nvars = AffineStrategyCoords::coordinate_count(spec);

    const int workers = std::min(thread_count(opt.threads), std::max(opt.restarts, 1));
    std::vector<detail::LmOutcome> outcomes(static_cast<std::size_t>(opt.restarts));
    std::atomic<int> next{0};
    std::atomic<int> best_success{opt.restarts};
    std::atomic<long long> iterations{0};

    auto worker = [&] {
        while (true) {
            const int t = next.fetch_add(1);
            if (t >= opt.restarts) return;
            if (t > best_success.load()) continue;  // a smaller index already succeeded
            auto out = detail::lm_single_start(ch, detail::random_start(opt.seed, t, nvars), tol, opt);
            iterations += out.iterations;
            if (out.success) {
                int cur = best_success.load();
                while (t < cur && !best_success.compare_exchange_weak(cur, t)) {
                }
            }
            outcomes[static_cast<std::size_t>(t)] = std::move(out);
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    result.iterations = iterations.load();
    double best_res = std::numeric_limits<double>::infinity();
    for (int t = 0; t < opt.restarts; ++t) {
        const auto& out = outcomes[static_cast<std::size_t>(t)];
        best_res = std::min(best_res, out.residual_inf);
        if (out.success) {
            result.success = true;
            result.restarts_used = t + 1;
            result.residual_inf = out.residual_inf;
            result.coords = AffineStrategyCoords::unflatten(spec, out.x);
            result.strategy = extend_to_strategy(result.coords);
            return result;
        }
    }
    result.restarts_used = opt.restarts;
    result.residual_inf = best_res;
    return result;
}

struct DistinctSolutions {
    std::vector<AffineStrategyCoords> coords;
    std::vector<Strategy> strategies;
    int attempts_converged = 0;
};

/// Runs `attempts` independent single-start solves and deduplicates the
/// converged solutions by their canonical affine coordinates (entrywise
/// distance threshold 1e-6). A lower bound on the true solution count; the
/// output is sorted lexicographically by coordinates, independent of thread
/// scheduling.
inline DistinctSolutions find_distinct_solutions(const ChannelSet& ch, int attempts,
                                                 std::uint64_t seed, int threads = 0,
                                                 int max_iters = 200) {
    const ProblemSpec& spec = ch.spec;
    DistinctSolutions out;
    if (!detail::affine_chart_exists(spec)) return out;

    NewtonOptions opt;
    opt.seed = seed;
    opt.restarts = 1;
    opt.max_iters = max_iters;
    const double tol = detail::newton_success_tol(ch);
    const Eigen::Index nvars = AffineStrategyCoords::coordinate_count(spec);

    std::vector<Vector> found(static_cast<std::size_t>(attempts));
    std::vector<char> ok(static_cast<std::size_t>(attempts), 0);
    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            const int t = next.fetch_add(1);
            if (t >= attempts) return;
            auto run = detail::lm_single_start(ch, detail::random_start(seed, t, nvars), tol, opt);
            if (run.success) {
                found[static_cast<std::size_t>(t)] = std::move(run.x);
                ok[static_cast<std::size_t>(t)] = 1;
            }
        }
    };
    const int workers = std::min(thread_count(threads), std::max(attempts, 1));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<Vector> distinct;
    for (int t = 0; t < attempts; ++t) {
        if (!ok[static_cast<std::size_t>(t)]) continue;
        ++out.attempts_converged;
        const Vector& x = found[static_cast<std::size_t>(t)];
        bool fresh = true;
        for (const Vector& y : distinct)
            if ((x - y).cwiseAbs().maxCoeff() <= 1e-6) {
                fresh = false;
                break;
            }
        if (fresh) distinct.push_back(x);
    }
    std::sort(distinct.begin(), distinct.end(), [](const Vector& a, const Vector& b) {
        for (Eigen::Index k = 0; k < a.size(); ++k) {
            if (a(k).real() != b(k).real()) return a(k).real() < b(k).real();
            if (a(k).imag() != b(k).imag()) return a(k).imag() < b(k).imag();
        }
        return false;
    });
    for (const Vector& x : distinct) {
        out.coords.push_back(AffineStrategyCoords::unflatten(spec, x));
        out.strategies.push_back(extend_to_strategy(out.coords.back()));
    }
    return out;
}

/// Central-difference Jacobian used by the tests to validate the analytic
/// one; the system is holomorphic, so complex steps along each coordinate
/// suffice.
inline Matrix finite_difference_jacobian(const ChannelSet& ch, const Vector& x,
                                         double h = 1e-6) {
    const detail::SystemLayout layout(ch.spec);
    Matrix jac(layout.eqs, layout.vars);
    for (Eigen::Index k = 0; k < layout.vars; ++k) {
        Vector xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        const Vector fp = residual(ch, AffineStrategyCoords::unflatten(ch.spec, xp));
        const Vector fm = residual(ch, AffineStrategyCoords::unflatten(ch.spec, xm));
        jac.col(k) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

}  // namespace ia
