#pragma once

/**
 * @file logic.hpp
 * @brief Composite event-state systems and their subspace logic.
 *
 * A composite system of N subsystems with M(n) local states spans
 * M = prod M(n) standard basis states |m>, m = 1..M (1-based, first
 * subsystem most significant, matching the Kronecker order). Propositions are
 * closed subspaces held as orthogonal projectors; join is span, meet is the
 * orthocomplement of the join of orthocomplements.
 *
 * A combined state |Phi> = sum_{m in Z} a_m |m> is a proposition evaluated
 * independently of its constituents s_m. It is indexed by
 * m* = M + prod_{m in Z} prime(m), and Gram-Schmidt completes it to an
 * orthonormal basis of span{|m> : m in Z}; the companions span its
 * complementary pair.
 */

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "beta/error.hpp"
#include "beta/linalg.hpp"
#include "json.hpp"

namespace beta::logic {

using linalg::Matrix;
using linalg::Scalar;
using linalg::Vector;

struct PropositionalElement {
    std::size_t subsystem = 0;    // 0-based
    std::size_t local_state = 0;  // 0-based
    std::string label;

    bool operator==(const PropositionalElement&) const = default;
};

struct CompositeSystem {
    std::vector<std::size_t> subsystem_dims;
    std::size_t total_dim = 0;
    std::vector<PropositionalElement> elements;

    /// 1-based standard index of a tuple of local states.
    std::size_t standard_index(const std::vector<std::size_t>& locals) const {
        if (locals.size() != subsystem_dims.size()) fail(errc::dimension, "local state tuple size");
        std::size_t m = 0;
        for (std::size_t n = 0; n < locals.size(); ++n) {
            if (locals[n] >= subsystem_dims[n]) fail(errc::domain, "local state out of range");
            m = m * subsystem_dims[n] + locals[n];
        }
        return m + 1;
    }

    std::vector<std::size_t> local_states(std::size_t m) const {
        if (m < 1 || m > total_dim) fail(errc::domain, "standard index out of range");
        std::vector<std::size_t> locals(subsystem_dims.size());
        std::size_t rest = m - 1;
        for (std::size_t n = subsystem_dims.size(); n-- > 0;) {
            locals[n] = rest % subsystem_dims[n];
            rest /= subsystem_dims[n];
        }
        return locals;
    }

    bool operator==(const CompositeSystem&) const = default;
};

inline CompositeSystem build_composite(const std::vector<std::size_t>& dims,
                                       const std::vector<std::vector<std::string>>& labels = {}) {
    if (dims.empty()) fail(errc::validation, "a composite system needs at least one subsystem");
    CompositeSystem sys;
    sys.subsystem_dims = dims;
    std::size_t total = 1;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        if (dims[n] == 0 || dims[n] % 2 != 0)
            fail(errc::validation, "subsystem " + std::to_string(n + 1) + " has dimension " +
                                       std::to_string(dims[n]) + "; dimensions must be even (M = 2l)");
        if (total > dim_cap() / dims[n])
            fail(errc::capacity, "composite dimension exceeds cap " + std::to_string(dim_cap()));
        total *= dims[n];
    }
    check_dim(total, "composite system");
    sys.total_dim = total;
    for (std::size_t n = 0; n < dims.size(); ++n)
        for (std::size_t i = 0; i < dims[n]; ++i) {
            std::string label = n < labels.size() && i < labels[n].size()
                                    ? labels[n][i]
                                    : "s" + std::to_string(i) + "^(" + std::to_string(n + 1) + ")";
            sys.elements.push_back({n, i, std::move(label)});
        }
    return sys;
}

// ---------------------------------------------------------------------------
// Propositions
// ---------------------------------------------------------------------------

enum class PropositionKind { standard, orthocomplement, combined, complement, general };

inline const char* to_string(PropositionKind k) {
    switch (k) {
        case PropositionKind::standard: return "standard";
        case PropositionKind::orthocomplement: return "orthocomplement";
        case PropositionKind::combined: return "combined";
        case PropositionKind::complement: return "complement";
        case PropositionKind::general: return "general";
    }
    return "general";
}

class Proposition {
public:
    /// Subspace spanned by `vectors` (need not be orthonormal).
    static Proposition span(std::size_t dim, const std::vector<Vector>& vectors,
                            PropositionKind kind = PropositionKind::general) {
        for (const auto& v : vectors)
            if (v.dim() != dim) fail(errc::dimension, "spanning vector dimension mismatch");
        return from_basis(dim, linalg::orthonormal_range(vectors), kind);
    }

    static Proposition zero(std::size_t dim) { return from_basis(dim, {}, PropositionKind::general); }

    static Proposition whole(std::size_t dim) {
        std::vector<Vector> b;
        for (std::size_t i = 0; i < dim; ++i) b.push_back(Vector::basis(dim, i));
        return from_basis(dim, std::move(b), PropositionKind::general);
    }

    /// s_m, 1-based.
    static Proposition standard(std::size_t dim, std::size_t m) {
        if (m < 1 || m > dim) fail(errc::domain, "standard index out of range");
        return from_basis(dim, {Vector::basis(dim, m - 1)}, PropositionKind::standard);
    }

    static Proposition from_basis(std::size_t dim, std::vector<Vector> orthonormal, PropositionKind kind) {
        Proposition p;
        p.dim_ = dim;
        p.kind_ = kind;
        p.basis_ = std::move(orthonormal);
        p.projector_ = Matrix(dim, dim);
        for (const auto& b : p.basis_) p.projector_ = p.projector_ + Matrix::outer(b, b);
        return p;
    }

    std::size_t dim() const { return dim_; }
    std::size_t rank() const { return basis_.size(); }
    PropositionKind kind() const { return kind_; }
    const Matrix& projector() const { return projector_; }
    const std::vector<Vector>& basis() const { return basis_; }

    Proposition with_kind(PropositionKind k) const {
        Proposition p = *this;
        p.kind_ = k;
        return p;
    }

private:
    std::size_t dim_ = 0;
    PropositionKind kind_ = PropositionKind::general;
    std::vector<Vector> basis_;
    Matrix projector_;
};

inline void require_same_dim(const Proposition& p, const Proposition& q) {
    if (p.dim() != q.dim()) fail(errc::dimension, "propositions live in different spaces");
}

inline double distance(const Proposition& p, const Proposition& q) {
    require_same_dim(p, q);
    return linalg::max_abs_diff(p.projector(), q.projector());
}

inline bool same(const Proposition& p, const Proposition& q, double tol = 1e-9) {
    return p.rank() == q.rank() && distance(p, q) <= tol;
}

/// p' : orthocomplement.
inline Proposition complement(const Proposition& p) {
    std::vector<Vector> cols;
    const Matrix c = Matrix::identity(p.dim()) - p.projector();
    for (std::size_t j = 0; j < p.dim(); ++j) cols.push_back(c.column(j));
    // Columns of a projector have norm at most 1, so rounding noise is absolute.
    return Proposition::from_basis(p.dim(), linalg::orthonormal_range(cols, 1e-9, 1e-9),
                                   PropositionKind::orthocomplement);
}

/// p v q : closed span.
inline Proposition join(const Proposition& p, const Proposition& q) {
    require_same_dim(p, q);
    std::vector<Vector> cols = p.basis();
    cols.insert(cols.end(), q.basis().begin(), q.basis().end());
    return Proposition::from_basis(p.dim(), linalg::orthonormal_range(cols), PropositionKind::general);
}

/// p ^ q = (p' v q')'.
inline Proposition meet(const Proposition& p, const Proposition& q) {
    return complement(join(complement(p), complement(q))).with_kind(PropositionKind::general);
}

/// p <= q iff q P = P.
inline bool leq(const Proposition& p, const Proposition& q, double tol = 1e-9) {
    require_same_dim(p, q);
    return linalg::max_abs_diff(q.projector() * p.projector(), p.projector()) <= tol;
}

inline bool compatibility(const Proposition& p, const Proposition& q, double tol = 1e-9) {
    require_same_dim(p, q);
    const Proposition pq = meet(p, q), pq_ = meet(p, complement(q));
    const Proposition qp = meet(q, p), qp_ = meet(q, complement(p));
    return same(p, join(pq, pq_), tol) && same(q, join(qp, qp_), tol);
}

struct DistributivityWitness {
    Proposition p, q, r;
    Proposition left;   // r ^ (p v q)
    Proposition right;  // (r ^ p) v (r ^ q)
    bool violated = false;
};

inline DistributivityWitness evaluate_distributivity(const Proposition& p, const Proposition& q,
                                                     const Proposition& r) {
    DistributivityWitness w{p, q, r, meet(r, join(p, q)), join(meet(r, p), meet(r, q)), false};
    w.violated = !same(w.left, w.right);
    return w;
}

/// p = span(e0), q = span(e1), r = span((e0 + e1)/sqrt 2), embedded in dim >= 2.
inline DistributivityWitness distributivity_witness(std::size_t dim) {
    if (dim < 2) fail(errc::domain, "distributivity witness needs dim >= 2");
    const Vector e0 = Vector::basis(dim, 0), e1 = Vector::basis(dim, 1);
    const Vector diag = (1.0 / std::sqrt(2.0)) * (e0 + e1);
    return evaluate_distributivity(Proposition::span(dim, {e0}), Proposition::span(dim, {e1}),
                                   Proposition::span(dim, {diag}));
}

/// Search among coordinate (diagonal) subspaces only; these form a Boolean
/// algebra, so no witness is expected. dim <= 4.
inline std::optional<DistributivityWitness> diagonal_distributivity_search(std::size_t dim) {
    if (dim < 1 || dim > 4) fail(errc::domain, "diagonal search supports dim in [1, 4]");
    std::vector<Proposition> props;
    for (unsigned mask = 0; mask < (1u << dim); ++mask) {
        std::vector<Vector> b;
        for (std::size_t i = 0; i < dim; ++i)
            if (mask & (1u << i)) b.push_back(Vector::basis(dim, i));
        props.push_back(Proposition::from_basis(dim, b, PropositionKind::general));
    }
    for (const auto& p : props)
        for (const auto& q : props)
            for (const auto& r : props) {
                auto w = evaluate_distributivity(p, q, r);
                if (w.violated) return w;
            }
    return std::nullopt;
}

/// Span of `rank` Gaussian complex vectors; rank 0 gives the zero subspace.
inline Proposition random_proposition(std::size_t dim, std::size_t rank, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::vector<Vector> vs;
    for (std::size_t k = 0; k < rank; ++k) {
        Vector v(dim);
        for (std::size_t i = 0; i < dim; ++i) v[i] = Scalar{gauss(rng), gauss(rng)};
        vs.push_back(v);
    }
    return Proposition::span(dim, vs);
}

struct OrthomodularReport {
    std::size_t trials = 0;
    std::size_t passed = 0;
    double max_residual = 0.0;  // worst projector distance over all checks
    double tolerance = 1e-9;
    std::uint64_t seed = 0;
    std::size_t max_dim = 0;
};

/**
 * For random pairs (p, q) in dimensions 2..max_dim, checks with u = p v q:
 * p <= u, u = p v (p' ^ u), p v p' = 1, p ^ p' = 0 and p'' = p.
 */
inline OrthomodularReport orthomodular_spot_checks(std::size_t max_dim, std::size_t trials, std::uint64_t seed,
                                                   double tol = 1e-9) {
    if (max_dim < 2) fail(errc::domain, "orthomodular checks need dim >= 2");
    check_dim(max_dim, "orthomodular checks");
    OrthomodularReport rep{trials, 0, 0.0, tol, seed, max_dim};
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t dim = 2 + static_cast<std::size_t>(rng() % (max_dim - 1));
        const std::size_t rp = static_cast<std::size_t>(rng() % (dim + 1));
        const std::size_t rq = static_cast<std::size_t>(rng() % (dim + 1));
        const Proposition p = random_proposition(dim, rp, rng);
        const Proposition q = random_proposition(dim, rq, rng);
        const Proposition u = join(p, q);
        const Proposition pc = complement(p);

        double worst = linalg::max_abs_diff(u.projector() * p.projector(), p.projector());
        bool ok = leq(p, u, tol);
        auto check = [&](const Proposition& a, const Proposition& b) {
            worst = std::max(worst, distance(a, b));
            ok = ok && same(a, b, tol);
        };
        check(u, join(p, meet(pc, u)));
        check(join(p, pc), Proposition::whole(dim));
        check(meet(p, pc), Proposition::zero(dim));
        check(complement(pc), p);
        rep.max_residual = std::max(rep.max_residual, worst);
        if (ok) ++rep.passed;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Correlated states
// ---------------------------------------------------------------------------

/// Two-qubit state labels (a) s_A^s_B, (b) s_A^s_B', (c) s_A'^s_B, (d) s_A'^s_B'.
inline bool correlation_check(const Vector& state, double threshold = 0.99) {
    if (state.dim() != 4) fail(errc::dimension, "correlation_check expects a 4-dimensional state");
    if (std::abs(state.norm() - 1.0) > 1e-9) fail(errc::domain, "state is not normalized");
    const double pa = std::norm(state[0]), pb = std::norm(state[1]);
    const double pc = std::norm(state[2]), pd = std::norm(state[3]);
    return pa + pd >= threshold || pb + pc >= threshold;
}

// ---------------------------------------------------------------------------
// Combined states
// ---------------------------------------------------------------------------

/// e_m, the m-th prime (1-based: prime(1) = 2).
inline std::uint64_t nth_prime(std::size_t m) {
    if (m < 1) fail(errc::domain, "prime index must be positive");
    static std::mutex lock;
    static std::vector<std::uint64_t> primes{2};
    std::lock_guard<std::mutex> guard(lock);
    std::uint64_t cand = primes.back();
    while (primes.size() < m) {
        ++cand;
        bool is_prime = true;
        for (auto p : primes) {
            if (p * p > cand) break;
            if (cand % p == 0) {
                is_prime = false;
                break;
            }
        }
        if (is_prime) primes.push_back(cand);
    }
    return primes[m - 1];
}

/// m* = M + prod_{m in support} prime(m).
inline std::uint64_t combined_index(std::size_t total_dim, const std::vector<std::size_t>& support) {
    std::uint64_t prod = 1;
    for (auto m : support) {
        const std::uint64_t e = nth_prime(m);
        if (prod > (UINT64_MAX - total_dim) / e) fail(errc::capacity, "prime-product index overflows 64 bits");
        prod *= e;
    }
    return total_dim + prod;
}

struct CombinedState {
    std::size_t total_dim = 0;
    std::vector<std::size_t> support;  // 1-based, distinct, caller order
    std::vector<Scalar> amplitudes;    // normalized
    Vector phi;
    std::uint64_t index = 0;           // m*
    std::vector<Vector> companions;    // orthonormal with phi, |support| - 1 of them
    std::size_t recursions = 0;        // Gram-Schmidt extensions performed
    Proposition complement;

    /// Eigenvalue labels carried by phi and each companion: m*, m*+1, ...
    std::vector<std::uint64_t> labels() const {
        std::vector<std::uint64_t> out{index};
        for (std::size_t j = 1; j <= companions.size(); ++j) out.push_back(index + j);
        return out;
    }

    Proposition proposition() const {
        return Proposition::from_basis(total_dim, {phi}, PropositionKind::combined);
    }
};

inline CombinedState make_combined_state(const CompositeSystem& sys, const std::vector<std::size_t>& support,
                                         const std::vector<Scalar>& amplitudes) {
    if (support.size() < 2) fail(errc::validation, "a combined state needs at least two constituents");
    if (amplitudes.size() != support.size())
        fail(errc::validation, "amplitude count does not match support size");
    std::set<std::size_t> seen;
    for (auto m : support) {
        if (m < 1 || m > sys.total_dim)
            fail(errc::validation, "support index " + std::to_string(m) + " outside 1.." +
                                       std::to_string(sys.total_dim));
        if (!seen.insert(m).second) fail(errc::validation, "duplicate support index " + std::to_string(m));
    }
    double norm2 = 0.0;
    for (const auto& a : amplitudes) {
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            fail(errc::validation, "non-finite amplitude");
        if (std::abs(a) < 1e-12) fail(errc::degeneracy, "combined-state amplitudes must be nonzero");
        norm2 += std::norm(a);
    }
    const double norm = std::sqrt(norm2);

    CombinedState cs;
    cs.total_dim = sys.total_dim;
    cs.support = support;
    cs.phi = Vector(sys.total_dim);
    for (std::size_t i = 0; i < support.size(); ++i) {
        cs.amplitudes.push_back(amplitudes[i] / norm);
        cs.phi[support[i] - 1] = amplitudes[i] / norm;
    }
    cs.index = combined_index(sys.total_dim, support);

    std::vector<Vector> basis{cs.phi};
    for (auto m : support) {
        if (cs.companions.size() + 1 == support.size()) break;
        try {
            Vector next = linalg::gram_schmidt_extend(basis, Vector::basis(sys.total_dim, m - 1));
            ++cs.recursions;
            basis.push_back(next);
            cs.companions.push_back(std::move(next));
        } catch (const error& e) {
            if (e.code() != errc::degeneracy) throw;
        }
    }
    if (cs.companions.size() + 1 != support.size())
        fail(errc::degeneracy, "could not complete the combined state to a basis of its support");
    cs.complement = Proposition::from_basis(sys.total_dim, cs.companions, PropositionKind::complement);
    return cs;
}

/// Orthogonal proposition to span(phi) within the support: always false when phi is true.
inline Proposition complementary_pair(const CombinedState& cs) { return cs.complement; }

/// Tracks eigenvalue labels handed out to combined states on one system.
class CombinedRegistry {
public:
    explicit CombinedRegistry(std::size_t total_dim) : total_dim_(total_dim) {}

    /// Returns the register slot (0-based, after the M standard slots) or throws on collision.
    std::size_t add(const CombinedState& cs) {
        if (cs.total_dim != total_dim_) fail(errc::validation, "combined state built on another system");
        for (auto label : cs.labels()) {
            if (label <= total_dim_ || used_.count(label))
                fail(errc::validation, "eigenvalue label " + std::to_string(label) + " already in use");
        }
        for (auto label : cs.labels()) used_.insert(label);
        const std::size_t slot = total_dim_ + count_;
        ++count_;
        return slot;
    }

    std::size_t size() const { return count_; }

private:
    std::size_t total_dim_;
    std::size_t count_ = 0;
    std::set<std::uint64_t> used_;
};

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

struct Observable {
    Matrix matrix;
    std::map<std::uint64_t, double> eigen_map;  // index (m or m*) -> eigenvalue
};

/// A = sum_m m |m><m|.
inline Observable observable_standard(const CompositeSystem& sys) {
    Observable o;
    o.matrix = Matrix(sys.total_dim, sys.total_dim);
    for (std::size_t m = 1; m <= sys.total_dim; ++m) {
        o.matrix(m - 1, m - 1) = static_cast<double>(m);
        o.eigen_map[m] = static_cast<double>(m);
    }
    return o;
}

/**
 * A* = m* |Phi><Phi| + sum_j (m*+j) |c_j><c_j| + sum_{m not in Z} m |m><m|.
 * ||A* |Phi>|| = m*, and A* agrees with A on the complement of the support.
 */
inline Observable observable_extended(const CompositeSystem& sys, const CombinedState& cs) {
    if (cs.total_dim != sys.total_dim) fail(errc::validation, "combined state does not belong to this system");
    Observable o;
    o.matrix = Matrix(sys.total_dim, sys.total_dim);
    const std::set<std::size_t> in_support(cs.support.begin(), cs.support.end());
    for (std::size_t m = 1; m <= sys.total_dim; ++m) {
        if (in_support.count(m)) continue;
        o.matrix(m - 1, m - 1) = static_cast<double>(m);
        o.eigen_map[m] = static_cast<double>(m);
    }
    const auto labels = cs.labels();
    std::vector<Vector> vecs{cs.phi};
    vecs.insert(vecs.end(), cs.companions.begin(), cs.companions.end());
    for (std::size_t j = 0; j < vecs.size(); ++j) {
        const double lambda = static_cast<double>(labels[j]);
        o.matrix = o.matrix + Scalar{lambda} * Matrix::outer(vecs[j], vecs[j]);
        o.eigen_map[labels[j]] = lambda;
    }
    return o;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr const char* kSchema = "beta-machine/1";

inline nlohmann::json to_json(const Scalar& z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline nlohmann::json to_json(const CompositeSystem& sys, const std::vector<CombinedState>& combined = {}) {
    nlohmann::json out;
    out["schema"] = kSchema;
    out["kind"] = "composite_system";
    out["dims"] = sys.subsystem_dims;
    out["total_dim"] = sys.total_dim;
    auto& labels = out["labels"] = nlohmann::json::array();
    for (std::size_t n = 0; n < sys.subsystem_dims.size(); ++n) labels.push_back(nlohmann::json::array());
    for (const auto& e : sys.elements) labels[e.subsystem].push_back(e.label);
    auto& list = out["combined"] = nlohmann::json::array();
    for (const auto& cs : combined) {
        nlohmann::json amps = nlohmann::json::array();
        for (const auto& a : cs.amplitudes) amps.push_back(to_json(a));
        list.push_back({{"support", cs.support}, {"amplitudes", amps}, {"m_star", cs.index}});
    }
    return out;
}

struct SystemDocument {
    CompositeSystem system;
    std::vector<CombinedState> combined;
};

/// Rebuilds a system document, recomputing and checking every m*.
inline SystemDocument system_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("schema").get<std::string>() != kSchema)
            fail(errc::validation, "unsupported schema " + doc.at("schema").get<std::string>());
        const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
        std::vector<std::vector<std::string>> labels;
        if (doc.contains("labels")) labels = doc.at("labels").get<std::vector<std::vector<std::string>>>();
        SystemDocument out{build_composite(dims, labels), {}};
        if (doc.contains("total_dim") && doc.at("total_dim").get<std::size_t>() != out.system.total_dim)
            fail(errc::validation, "total_dim does not match dims");
        for (const auto& c : doc.value("combined", nlohmann::json::array())) {
            std::vector<Scalar> amps;
            for (const auto& a : c.at("amplitudes")) amps.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
            auto cs = make_combined_state(out.system, c.at("support").get<std::vector<std::size_t>>(), amps);
            if (c.contains("m_star") && c.at("m_star").get<std::uint64_t>() != cs.index)
                fail(errc::validation, "m_star does not match the support");
            out.combined.push_back(std::move(cs));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::validation, std::string("malformed system document: ") + e.what());
    }
}

}  // namespace beta::logic
