#pragma once

// Exact solution counting for the symmetric alignment problem via Schubert
// calculus on a product of Grassmannians: partition combinatorics, the
// Littlewood-Richardson rule (lattice-word form), Schur multiplication
// truncated to a Grassmannian box, the incidence class of the bilinear
// orthogonality relation, and the incremental product over all K(K-1)
// incidence relations in the tensor ring.

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ia/core.hpp"

namespace ia {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Partitions
// ---------------------------------------------------------------------------

/// Weakly decreasing list of positive integers; the empty partition is the
/// multiplicative identity of the Chow ring.
class Partition {
public:
    Partition() = default;
    Partition(std::initializer_list<int> parts) : Partition(std::vector<int>(parts)) {}
    explicit Partition(std::vector<int> parts) : parts_(std::move(parts)) {
        for (int p : parts_)
            if (p < 0) throw std::invalid_argument("Partition: negative part");
        std::sort(parts_.begin(), parts_.end(), std::greater<int>());
        while (!parts_.empty() && parts_.back() == 0) parts_.pop_back();
    }

    /// b parts of size a (the rectangle a^b).
    static Partition rectangle(int a, int b) {
        if (a == 0 || b == 0) return {};
        return Partition(std::vector<int>(static_cast<std::size_t>(b), a));
    }

    const std::vector<int>& parts() const { return parts_; }
    bool empty() const { return parts_.empty(); }
    int length() const { return static_cast<int>(parts_.size()); }
    int part(int k) const {  // 1-based, 0 beyond the last row
        return (k >= 1 && k <= length()) ? parts_[static_cast<std::size_t>(k - 1)] : 0;
    }
    int size() const {
        int s = 0;
        for (int p : parts_) s += p;
        return s;
    }

    bool contains(const Partition& inner) const {
        if (inner.length() > length()) return false;
        for (int k = 1; k <= inner.length(); ++k)
            if (part(k) < inner.part(k)) return false;
        return true;
    }

    bool fits(int max_parts, int max_size) const {
        return length() <= max_parts && part(1) <= max_size;
    }

    Partition conjugate() const {
        if (empty()) return {};
        std::vector<int> c(static_cast<std::size_t>(parts_[0]), 0);
        for (int p : parts_)
            for (int k = 0; k < p; ++k) ++c[static_cast<std::size_t>(k)];
        return Partition(std::move(c));
    }

    friend bool operator==(const Partition& a, const Partition& b) = default;
    friend auto operator<=>(const Partition& a, const Partition& b) {
        return a.parts_ <=> b.parts_;
    }

    std::string to_string() const {
        std::string s = "(";
        for (std::size_t k = 0; k < parts_.size(); ++k) {
            if (k) s += ",";
            s += std::to_string(parts_[k]);
        }
        return s + ")";
    }

private:
    std::vector<int> parts_;
};

/// Transpose of the Young diagram.
inline Partition conjugate(const Partition& p) { return p.conjugate(); }

struct GrassmannianShape {
    int d = 0;  ///< subspace dimension
    int m = 0;  ///< ambient dimension

    GrassmannianShape() = default;
    GrassmannianShape(int d_, int m_) : d(d_), m(m_) {
        if (d < 1 || d > m) throw std::invalid_argument("GrassmannianShape: need 1 <= d <= m");
    }
    int width() const { return m - d; }            ///< max part size in the box
    int dimension() const { return d * (m - d); }  ///< also the top codimension
    Partition top() const { return Partition::rectangle(m - d, d); }
    friend bool operator==(const GrassmannianShape&, const GrassmannianShape&) = default;
};

/// All partitions with at most `max_parts` parts of size at most `max_size`,
/// ordered by (size, parts) for determinism.
inline std::vector<Partition> box_partitions(int max_parts, int max_size) {
    std::vector<Partition> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int row, int cap) -> void {
        out.push_back(Partition(cur));
        if (row == max_parts) return;
        for (int p = 1; p <= cap; ++p) {
            cur.push_back(p);
            self(self, row + 1, p);
            cur.pop_back();
        }
    };
    rec(rec, 0, max_size);
    std::sort(out.begin(), out.end(), [](const Partition& a, const Partition& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.parts() < b.parts();
    });
    return out;
}

// ---------------------------------------------------------------------------
// Littlewood-Richardson rule
// ---------------------------------------------------------------------------

namespace detail {

/// Counts semistandard skew tableaux of shape nu/lam with content mu whose
/// reverse reading word (rows right-to-left, top-to-bottom) is a lattice
/// word. Cells are filled exactly in reading order so the lattice property
/// can be maintained incrementally.
inline long long count_lr_tableaux(const Partition& lam, const Partition& mu,
                                   const Partition& nu) {
    const int rows = nu.length();
    const int values = mu.length();
    std::vector<std::pair<int, int>> cells;  // (row, col), 0-based, reading order
    for (int r = 0; r < rows; ++r)
        for (int c = nu.part(r + 1) - 1; c >= lam.part(r + 1); --c) cells.emplace_back(r, c);

    std::vector<std::vector<int>> grid(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r)
        grid[static_cast<std::size_t>(r)].assign(static_cast<std::size_t>(nu.part(r + 1)), 0);
    std::vector<int> count(static_cast<std::size_t>(values + 1), 0);

    long long total = 0;
    auto rec = [&](auto&& self, std::size_t idx) -> void {
        if (idx == cells.size()) {
            ++total;
            return;
        }
        const auto [r, c] = cells[idx];
        int lo = 1, hi = values;
        if (r > 0 && c >= lam.part(r) && c < nu.part(r))  // cell above is in the skew shape
            lo = std::max(lo, grid[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(c)] + 1);
        if (c + 1 < nu.part(r + 1))  // right neighbor already filled
            hi = std::min(hi, grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c + 1)]);
        for (int v = lo; v <= hi; ++v) {
            auto& cv = count[static_cast<std::size_t>(v)];
            if (cv >= mu.part(v)) continue;                                   // content
            if (v > 1 && count[static_cast<std::size_t>(v - 1)] <= cv) continue;  // lattice
            ++cv;
            grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = v;
            self(self, idx + 1);
            --cv;
        }
    };
    rec(rec, 0);
    return total;
}

}  // namespace detail

/// Littlewood-Richardson coefficient c^nu_{lam,mu}; zero unless
/// |nu| = |lam| + |mu| and lam is contained in nu. Memoized.
inline long long lr_coefficient(const Partition& lam, const Partition& mu, const Partition& nu) {
    if (lam.size() + mu.size() != nu.size()) return 0;
    if (!nu.contains(lam)) return 0;
    if (mu.empty()) return 1;

    using Key = std::tuple<std::vector<int>, std::vector<int>, std::vector<int>>;
    static std::map<Key, long long> memo;
    static std::mutex memo_mutex;
    Key key{lam.parts(), mu.parts(), nu.parts()};
    {
        std::lock_guard<std::mutex> lock(memo_mutex);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
    }
    const long long c = detail::count_lr_tableaux(lam, mu, nu);
    std::lock_guard<std::mutex> lock(memo_mutex);
    memo.emplace(std::move(key), c);
    return c;
}

/// Schur product [lam][mu] restricted to the Chow basis of G(d, m): only
/// partitions fitting the d x (m-d) box survive.
inline std::map<Partition, long long> schur_multiply_in_box(const Partition& lam,
                                                            const Partition& mu,
                                                            const GrassmannianShape& shape) {
    const int w = shape.width();
    if (!lam.fits(shape.d, w) || !mu.fits(shape.d, w))
        throw std::invalid_argument("schur_multiply_in_box: inputs must fit the box");
    std::map<Partition, long long> out;
    const int target = lam.size() + mu.size();
    if (target > shape.dimension()) return out;

    // enumerate candidates nu in the box with nu >= lam rowwise and |nu| = target
    std::vector<int> cur;
    auto rec = [&](auto&& self, int row, int cap, int remaining) -> void {
        if (remaining == 0) {
            Partition nu(cur);
            if (nu.contains(lam)) {
                const long long c = lr_coefficient(lam, mu, nu);
                if (c > 0) out[nu] = c;
            }
            return;
        }
        if (row == shape.d) return;
        const int lo = std::max(lam.part(row + 1), 1);
        for (int p = std::min(cap, remaining); p >= lo; --p) {
            cur.push_back(p);
            self(self, row + 1, p, remaining - p);
            cur.pop_back();
        }
    };
    rec(rec, 0, w, target);
    return out;
}

// ---------------------------------------------------------------------------
// Incidence class
// ---------------------------------------------------------------------------

/// The class of the correspondence {(U, V) : H U perp V} in
/// G(d, M) x G(d, N): the sum over all partitions lam in the d x d box of
/// [lam] (x) [complement], where the complement's k-th part is
/// d - lam'_{d+1-k}. Every term has total codimension d^2, and there are
/// C(2d, d) of them.
inline std::vector<std::pair<Partition, Partition>> incidence_class(int d) {
    if (d < 1) throw std::invalid_argument("incidence_class: d must be positive");
    std::vector<std::pair<Partition, Partition>> out;
    for (const Partition& lam : box_partitions(d, d)) {
        const Partition conj = lam.conjugate();
        std::vector<int> comp(static_cast<std::size_t>(d));
        for (int k = 1; k <= d; ++k) comp[static_cast<std::size_t>(k - 1)] = d - conj.part(d + 1 - k);
        out.emplace_back(lam, Partition(std::move(comp)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tensor ring of a product of Grassmannians
// ---------------------------------------------------------------------------

/// Sparse integer combination of tuples of partitions: an element of the
/// tensor product of the Chow rings of the listed Grassmannian factors.
/// Coefficients are always positive (Schubert structure constants are
/// non-negative, and zero terms are never stored).
struct ChowVector {
    std::vector<GrassmannianShape> shapes;
    std::map<std::vector<Partition>, BigInt> terms;

    static ChowVector one(std::vector<GrassmannianShape> shapes) {
        ChowVector cv;
        cv.terms[std::vector<Partition>(shapes.size())] = 1;
        cv.shapes = std::move(shapes);
        return cv;
    }

    BigInt coefficient(const std::vector<Partition>& tuple) const {
        auto it = terms.find(tuple);
        return it == terms.end() ? BigInt(0) : it->second;
    }
};

/// Multiplies `cv` by an incidence class acting on the given transmit and
/// receive factors (0-based positions into cv.shapes).
inline ChowVector apply_incidence(const ChowVector& cv, int u_factor, int v_factor,
                                  const std::vector<std::pair<Partition, Partition>>& cls) {
    ChowVector out;
    out.shapes = cv.shapes;
    for (const auto& [tuple, coeff] : cv.terms) {
        for (const auto& [lam, mu] : cls) {
            const auto pu = schur_multiply_in_box(tuple[static_cast<std::size_t>(u_factor)], lam,
                                                  cv.shapes[static_cast<std::size_t>(u_factor)]);
            if (pu.empty()) continue;
            const auto pv = schur_multiply_in_box(tuple[static_cast<std::size_t>(v_factor)], mu,
                                                  cv.shapes[static_cast<std::size_t>(v_factor)]);
            for (const auto& [nu_u, cu] : pu)
                for (const auto& [nu_v, cvf] : pv) {
                    auto t = tuple;
                    t[static_cast<std::size_t>(u_factor)] = nu_u;
                    t[static_cast<std::size_t>(v_factor)] = nu_v;
                    out.terms[std::move(t)] += coeff * cu * cvf;
                }
        }
    }
    return out;
}

namespace detail {

/// Indexed Chow basis of a single Grassmannian factor with memoized products;
/// the fast path behind count_solutions.
class BoxRing {
public:
    explicit BoxRing(GrassmannianShape shape)
        : shape_(shape), parts_(box_partitions(shape.d, shape.width())) {
        for (std::size_t k = 0; k < parts_.size(); ++k) index_[parts_[k]] = static_cast<int>(k);
    }

    int size() const { return static_cast<int>(parts_.size()); }
    const Partition& at(int k) const { return parts_[static_cast<std::size_t>(k)]; }
    int index_of(const Partition& p) const { return index_.at(p); }
    int top_index() const { return index_.at(shape_.top()); }
    int degree(int k) const { return at(k).size(); }
    const GrassmannianShape& shape() const { return shape_; }

    const std::vector<std::pair<int, long long>>& multiply(int a, int b) const {
        const auto key = std::make_pair(std::min(a, b), std::max(a, b));
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        std::vector<std::pair<int, long long>> prod;
        for (const auto& [nu, c] : schur_multiply_in_box(at(key.first), at(key.second), shape_))
            prod.emplace_back(index_.at(nu), c);
        return cache_.emplace(key, std::move(prod)).first->second;
    }

private:
    GrassmannianShape shape_;
    std::vector<Partition> parts_;
    std::map<Partition, int> index_;
    mutable std::map<std::pair<int, int>, std::vector<std::pair<int, long long>>> cache_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Solution counting
// ---------------------------------------------------------------------------

/// Number of alignment strategies for the symmetric problem with K users,
/// M = N antennas and d streams per user, computed as the coefficient of the
/// tuple of top classes in the product of all K(K-1) incidence classes in
/// the tensor ring of G(d,N)^{2K}. Requires the square case 2N = (K+1)d
/// (equivalently t = 0); throws DimensionMismatch otherwise. The sparse
/// product is capped at `max_terms` live tuples (ResourceLimit beyond).
///
/// Factors 0..K-1 are the transmit Grassmannians U_1..U_K, factors K..2K-1
/// the receive ones. Relations are processed grouped by receiver, which
/// completes one receive factor per group and keeps the term count small.
inline BigInt count_solutions(int K, int d, int N, long long max_terms = 20'000'000) {
    if (K < 3) throw BadK("count_solutions requires K >= 3");
    if (d < 1 || N <= d) throw std::invalid_argument("count_solutions: need N > d >= 1");
    if (2 * N != (K + 1) * d)
        throw DimensionMismatch("count_solutions: codimension K(K-1)d^2 must equal dim S, "
                                "i.e. 2N = (K+1)d");

    const GrassmannianShape shape(d, N);
    const detail::BoxRing ring(shape);
    const int top = shape.dimension();
    const int nf = 2 * K;

    // incidence class as basis indices
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [lam, mu] : incidence_class(d))
        pairs.emplace_back(ring.index_of(lam), ring.index_of(mu));

    struct Relation {
        int u_factor, v_factor;
    };
    std::vector<Relation> relations;
    for (int i = 1; i <= K; ++i)
        for (int j = 1; j <= K; ++j)
            if (j != i) relations.push_back({j - 1, K + i - 1});

    std::vector<int> remaining(static_cast<std::size_t>(nf), K - 1);

    using Key = std::string;  // nf bytes of basis indices
    std::unordered_map<Key, BigInt> state;
    state.emplace(Key(static_cast<std::size_t>(nf), char(0)), 1);

    const long long d2 = static_cast<long long>(d) * d;
    for (const auto& rel : relations) {
        --remaining[static_cast<std::size_t>(rel.u_factor)];
        --remaining[static_cast<std::size_t>(rel.v_factor)];
        const long long slack_u = d2 * remaining[static_cast<std::size_t>(rel.u_factor)];
        const long long slack_v = d2 * remaining[static_cast<std::size_t>(rel.v_factor)];

        std::unordered_map<Key, BigInt> next;
        next.reserve(state.size() * 2);
        for (const auto& [key, coeff] : state) {
            const int cu = static_cast<unsigned char>(key[static_cast<std::size_t>(rel.u_factor)]);
            const int cv = static_cast<unsigned char>(key[static_cast<std::size_t>(rel.v_factor)]);
            for (const auto& [li, mi] : pairs) {
                for (const auto& [pu, wu] : ring.multiply(cu, li)) {
                    if (ring.degree(pu) + slack_u < top) continue;
                    for (const auto& [pv, wv] : ring.multiply(cv, mi)) {
                        if (ring.degree(pv) + slack_v < top) continue;
                        Key k = key;
                        k[static_cast<std::size_t>(rel.u_factor)] = static_cast<char>(pu);
                        k[static_cast<std::size_t>(rel.v_factor)] = static_cast<char>(pv);
                        next[std::move(k)] += coeff * (wu * wv);
                    }
                }
            }
            if (static_cast<long long>(next.size()) > max_terms)
                throw ResourceLimit("count_solutions: term budget exceeded");
        }
        state = std::move(next);
        if (state.empty()) return 0;
    }

    Key top_key(static_cast<std::size_t>(nf), static_cast<char>(ring.top_index()));
    auto it = state.find(top_key);
    return it == state.end() ? BigInt(0) : it->second;
}

// ---------------------------------------------------------------------------
// Existence witness
// ---------------------------------------------------------------------------

struct WitnessChoice {
    int receiver = 0, transmitter = 0;
    Partition tx, rx;
};

/// Explicit per-relation term choices whose product is non-zero, following
/// the constructive case split of the fully symmetric sufficiency proof.
struct Witness {
    int K = 0, d = 0, N = 0;
    std::vector<WitnessChoice> choices;
    /// resulting class per factor (U_1..U_K then V_1..V_K)
    std::vector<std::map<Partition, BigInt>> factor_classes;
    bool verified = false;
};

/// Picks one term from every incidence class, per the odd-K cyclic-difference
/// split or the even-K d^{d/2} / (d/2)^d pattern (with rounding when d is
/// odd), and verifies that the product of the chosen terms is non-zero in
/// the tensor ring. Requires 2N >= (K+1)d.
inline Witness existence_witness(int K, int d, int N) {
    if (K < 3) throw BadK("existence_witness requires K >= 3");
    if (d < 1 || N <= d) throw std::invalid_argument("existence_witness: need N > d >= 1");
    if (2 * N < (K + 1) * d)
        throw InfeasibleInput("existence_witness: 2N >= (K+1)d fails, no strategy exists");

    const auto mod_k = [K](int x) { return ((x - 1) % K + K) % K + 1; };
    Witness w;
    w.K = K;
    w.d = d;
    w.N = N;

    for (int recv = 1; recv <= K; ++recv) {
        for (int tx = 1; tx <= K; ++tx) {
            if (tx == recv) continue;
            WitnessChoice c;
            c.receiver = recv;
            c.transmitter = tx;
            if (K % 2 == 1) {
                const int diff = ((tx - recv) % K + K) % K;  // in 1..K-1
                if (diff <= (K - 1) / 2) {
                    c.tx = Partition::rectangle(d, d);
                    c.rx = Partition{};
                } else {
                    c.tx = Partition{};
                    c.rx = Partition::rectangle(d, d);
                }
            } else {
                const bool exceptional =
                    (tx % 2 == 0) && (recv == mod_k(tx + 1) || recv == mod_k(tx + 2));
                // round d/2 down when recv - tx is even, up when odd
                const int half = (d % 2 == 0) ? d / 2
                                              : (((recv - tx) % 2 + 2) % 2 == 0 ? d / 2 : (d + 1) / 2);
                if (exceptional) {
                    c.tx = Partition::rectangle(d, half);        // d^{d/2}
                    c.rx = Partition::rectangle(d - half, d);    // complement
                } else {
                    c.tx = Partition::rectangle(half, d);        // (d/2)^d
                    c.rx = Partition::rectangle(d, d - half);    // complement
                }
            }
            w.choices.push_back(std::move(c));
        }
    }

    // verify: each factor's product of assigned partitions must be non-zero
    const GrassmannianShape shape(d, N);
    w.factor_classes.assign(static_cast<std::size_t>(2 * K), {});
    for (int f = 0; f < 2 * K; ++f) {
        std::map<Partition, BigInt> combo{{Partition{}, 1}};
        for (const auto& c : w.choices) {
            const bool is_u = f < K && c.transmitter == f + 1;
            const bool is_v = f >= K && c.receiver == f - K + 1;
            if (!is_u && !is_v) continue;
            const Partition& p = is_u ? c.tx : c.rx;
            std::map<Partition, BigInt> next;
            for (const auto& [q, coeff] : combo)
                for (const auto& [nu, lr] : schur_multiply_in_box(q, p, shape))
                    next[nu] += coeff * lr;
            combo = std::move(next);
            if (combo.empty())
                throw WitnessFailed("factor product vanished for factor " + std::to_string(f));
        }
        w.factor_classes[static_cast<std::size_t>(f)] = std::move(combo);
    }
    w.verified = true;
    return w;
}

}  // namespace ia
