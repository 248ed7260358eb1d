#pragma once

/**
 * @file omega.hpp
 * @brief Analyzer for the quasi-periodic operator class Omega.
 *
 * An integer operator is in Omega when its spectrum contains an irrational
 * eigenvalue. For 2x2 integer matrices this is decided exactly from the
 * discriminant (a-d)^2 + 4bc: the eigenvalues are irrational iff the
 * discriminant is positive and not a perfect square.
 *
 * The module also carries the Fibonacci machinery around that class: closed
 * form growth evaluated exactly in Z[tau], golden-ratio convergence, Euclid
 * worst-case traces, Fibonacci words, almost-period probes for
 * sin(x) + sin(tau x), and the brute-force proof that no binary 3x3 linear map
 * reproduces an elementary cellular automaton step.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "beta/error.hpp"
#include "json.hpp"

namespace beta::omega {

inline constexpr double kTau = std::numbers::phi;

struct IntMatrix2 {
    std::int64_t a = 0, b = 0, c = 0, d = 0;  // [[a, b], [c, d]]

    constexpr bool operator==(const IntMatrix2&) const = default;
    constexpr IntMatrix2 transpose() const { return {a, c, b, d}; }
};

inline constexpr IntMatrix2 kFibonacci{1, 1, 1, 0};

struct OmegaVerdict {
    IntMatrix2 matrix;
    std::int64_t discriminant = 0;
    bool in_omega = false;
    std::pair<double, double> eigenvalues{0.0, 0.0};  // real parts, larger first
};

/// Exact integer square root test.
inline bool is_perfect_square(std::int64_t n) {
    if (n < 0) return false;
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r * r == n;
}

inline OmegaVerdict classify(const IntMatrix2& m) {
    OmegaVerdict v;
    v.matrix = m;
    v.discriminant = (m.a - m.d) * (m.a - m.d) + 4 * m.b * m.c;
    v.in_omega = v.discriminant > 0 && !is_perfect_square(v.discriminant);
    const double tr = static_cast<double>(m.a + m.d);
    if (v.discriminant >= 0) {
        const double root = std::sqrt(static_cast<double>(v.discriminant));
        v.eigenvalues = {(tr + root) / 2.0, (tr - root) / 2.0};
    } else {
        v.eigenvalues = {tr / 2.0, tr / 2.0};
    }
    return v;
}

/// All 16 binary 2x2 matrices; entry bits a,b,c,d from most to least significant.
inline std::vector<OmegaVerdict> classify_binary_2x2() {
    std::vector<OmegaVerdict> out;
    out.reserve(16);
    for (int k = 0; k < 16; ++k) {
        const IntMatrix2 m{(k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1};
        out.push_back(classify(m));
    }
    return out;
}

/// 3x3 integer matrices: in Omega iff some eigenvalue is real and irrational.
/// Rational roots of a monic integer cubic are integer divisors of its
/// constant term, so the test stays exact.
inline bool in_omega_3x3(const std::array<std::array<std::int64_t, 3>, 3>& m) {
    const std::int64_t tr = m[0][0] + m[1][1] + m[2][2];
    const std::int64_t minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] -
                                m[0][2] * m[2][0] + m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const std::int64_t det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                             m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    // x^3 - tr x^2 + minors x - det
    auto p = [&](std::int64_t x) { return x * x * x - tr * x * x + minors * x - det; };
    std::optional<std::int64_t> root;
    if (det == 0) {
        root = 0;
    } else {
        const std::int64_t bound = det < 0 ? -det : det;
        for (std::int64_t d = 1; d * d <= bound && !root; ++d) {
            if (bound % d) continue;
            for (std::int64_t cand : {d, -d, bound / d, -(bound / d)})
                if (p(cand) == 0) {
                    root = cand;
                    break;
                }
        }
    }
    // No rational root: the cubic has at least one real root, which is irrational.
    if (!root) return true;
    // Deflate: x^2 + (r - tr) x + (minors - tr r + r^2)
    const std::int64_t r = *root;
    const std::int64_t b1 = r - tr;
    const std::int64_t c1 = minors + r * b1;
    const std::int64_t disc = b1 * b1 - 4 * c1;
    return disc > 0 && !is_perfect_square(disc);
}

// ---------------------------------------------------------------------------
// Fibonacci growth
// ---------------------------------------------------------------------------

namespace detail {
/// a + b*tau with tau^2 = tau + 1.
struct ZTau {
    __int128 a = 0, b = 0;
    ZTau operator*(const ZTau& o) const {
        return {a * o.a + b * o.b, a * o.b + b * o.a + b * o.b};
    }
    ZTau operator-(const ZTau& o) const { return {a - o.a, b - o.b}; }
};

inline ZTau pow(ZTau base, unsigned n) {
    ZTau acc{1, 0};
    while (n) {
        if (n & 1u) acc = acc * base;
        base = base * base;
        n >>= 1u;
    }
    return acc;
}
}  // namespace detail

inline constexpr int kMaxFibIndex = 90;

/**
 * Number produced by n applications of the Fibonacci rule from u0 = (1, 0):
 * (l1^(n+1) - l2^(n+1)) / (l1 - l2) with l1 = tau, l2 = 1 - tau.
 *
 * The closed form is evaluated exactly in Z[tau]; dividing by
 * l1 - l2 = 2 tau - 1 = sqrt(5) uses (2 tau - 1)(1 - 2 tau) = -5.
 */
inline std::int64_t fib_closed_form(int n) {
    if (n < 0) fail(errc::domain, "fib_closed_form: negative index");
    if (n > kMaxFibIndex) fail(errc::capacity, "fib_closed_form: index above 90 leaves int64 range");
    const auto k = static_cast<unsigned>(n + 1);
    const detail::ZTau num = detail::pow({0, 1}, k) - detail::pow({1, -1}, k);
    const detail::ZTau q = num * detail::ZTau{1, -2};
    // q / -5 must be an integer with no tau part.
    if (q.b != 0 || q.a % 5 != 0) fail(errc::numeric, "closed form did not reduce to an integer");
    return static_cast<std::int64_t>(-q.a / 5);
}

/// Floating-point closed form, rounded to nearest; exact only for n <= 69.
inline double fib_closed_form_real(int n) {
    const double sqrt5 = std::sqrt(5.0);
    const double l1 = (1.0 + sqrt5) / 2.0, l2 = (1.0 - sqrt5) / 2.0;
    return std::round((std::pow(l1, n + 1) - std::pow(l2, n + 1)) / (l1 - l2));
}

/**
 * |phi(n+1)/phi(n) - tau| for n in [1, 89].
 *
 * With phi(n) = F(n+1), the identity F(k+1) - tau F(k) = (1 - tau)^k gives the
 * gap as |1 - tau|^k / F(k), k = n + 1, which is free of cancellation.
 */
inline double golden_ratio_gap(int n) {
    if (n < 1) fail(errc::domain, "golden_ratio_gap: n must be at least 1");
    if (n > 89) fail(errc::capacity, "golden_ratio_gap: n above 89");
    const int k = n + 1;
    return std::pow(kTau - 1.0, k) / static_cast<double>(fib_closed_form(n));
}

// ---------------------------------------------------------------------------
// Euclid
// ---------------------------------------------------------------------------

struct EuclidStep {
    std::int64_t u, v, s, r;  // u = v s + r
};

struct EuclidTrace {
    std::vector<std::int64_t> quotients;
    std::vector<std::int64_t> remainders;
    std::vector<EuclidStep> steps_detail;
    std::int64_t gcd = 0;
    std::int64_t steps = 0;
};

inline EuclidTrace euclid_trace(std::int64_t p, std::int64_t q) {
    if (p < 1 || q < p) fail(errc::domain, "euclid_trace requires q >= p >= 1");
    EuclidTrace t;
    std::int64_t u = q, v = p;
    while (true) {
        const std::int64_t s = u / v, r = u % v;
        t.quotients.push_back(s);
        t.remainders.push_back(r);
        t.steps_detail.push_back({u, v, s, r});
        if (r == 0) break;
        u = v;
        v = r;
    }
    t.gcd = v;
    t.steps = static_cast<std::int64_t>(t.quotients.size());
    return t;
}

// ---------------------------------------------------------------------------
// Fibonacci words
// ---------------------------------------------------------------------------

/// k rewritings of 0 -> 01, 1 -> 0 starting from "0"; |word(k)| = F(k+2).
inline std::string fib_word(int k) {
    if (k < 0) fail(errc::domain, "fib_word: negative iteration count");
    if (k > 30) fail(errc::capacity, "fib_word: k above 30");
    std::string w = "0";
    for (int i = 0; i < k; ++i) {
        std::string next;
        next.reserve(w.size() * 2);
        for (char ch : w) next += ch == '0' ? "01" : "0";
        w = std::move(next);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Almost periodicity
// ---------------------------------------------------------------------------

struct Grid {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;

    std::size_t samples() const {
        if (!(step > 0.0) || stop < start) return 0;
        return static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    }
    double at(std::size_t i) const { return start + step * static_cast<double>(i); }
};

struct AlmostPeriodConfig {
    std::array<double, 2> frequencies{1.0, kTau};
    double epsilon = 0.5;
    Grid shifts{0.0, 200.0, 1e-2};
    Grid samples{0.0, 100.0, 0.05};
    double min_shift = 1.0;  // shifts below this are trivially almost-periods
};

struct AlmostPeriodReport {
    double epsilon = 0.0;
    double shift = 0.0;
    double max_deviation = 0.0;
    bool found = false;
    std::size_t shifts_scanned = 0;
    std::size_t samples = 0;
    std::size_t refined_minima = 0;
};

/**
 * Searches shifts t of f(x) = sin(w1 x) + sin(w2 x) for which
 * max_x |f(x + t) - f(x)| < epsilon over the sample grid.
 *
 * The shift grid is scanned coarsely, then every local minimum is refined by
 * golden-section search between its neighbours. The smallest refined shift
 * meeting epsilon is reported; otherwise the best refined shift.
 */
inline AlmostPeriodReport almost_period_search(const AlmostPeriodConfig& cfg) {
    if (!(cfg.epsilon > 0.0)) fail(errc::domain, "epsilon must be positive");
    const std::size_t nx = cfg.samples.samples();
    const std::size_t nt = cfg.shifts.samples();
    if (nx == 0 || nt == 0) fail(errc::domain, "empty grid");
    if (nt < 1000) fail(errc::domain, "shift grid needs at least 1000 samples");

    // sin(w(x+t)) - sin(wx) = sin(wx)(cos(wt) - 1) + cos(wx) sin(wt)
    std::array<std::vector<double>, 2> sx, cx;
    for (int j = 0; j < 2; ++j) {
        sx[j].resize(nx);
        cx[j].resize(nx);
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = cfg.samples.at(i);
            sx[j][i] = std::sin(cfg.frequencies[j] * x);
            cx[j][i] = std::cos(cfg.frequencies[j] * x);
        }
    }
    auto deviation = [&](double t) {
        std::array<double, 2> ca, sa;
        for (int j = 0; j < 2; ++j) {
            ca[j] = std::cos(cfg.frequencies[j] * t) - 1.0;
            sa[j] = std::sin(cfg.frequencies[j] * t);
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double d = sx[0][i] * ca[0] + cx[0][i] * sa[0] + sx[1][i] * ca[1] + cx[1][i] * sa[1];
            worst = std::max(worst, std::abs(d));
        }
        return worst;
    };

    std::vector<double> ts, ds;
    for (std::size_t i = 0; i < nt; ++i) {
        const double t = cfg.shifts.at(i);
        if (t < cfg.min_shift) continue;
        ts.push_back(t);
        ds.push_back(deviation(t));
    }
    AlmostPeriodReport rep;
    rep.epsilon = cfg.epsilon;
    rep.shifts_scanned = ts.size();
    rep.samples = nx;
    if (ts.empty()) fail(errc::domain, "no shifts above min_shift");

    auto refine = [&](std::size_t i) {
        double lo = i > 0 ? ts[i - 1] : ts[i];
        double hi = i + 1 < ts.size() ? ts[i + 1] : ts[i];
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        double fa = deviation(a), fb = deviation(b);
        for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
            if (fa < fb) {
                hi = b;
                b = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = deviation(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + g * (hi - lo);
                fb = deviation(b);
            }
        }
        std::pair<double, double> best{ts[i], ds[i]};
        if (fa < best.second) best = {a, fa};
        if (fb < best.second) best = {b, fb};
        return best;
    };

    std::optional<std::pair<double, double>> best;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const bool left_ok = i == 0 || ds[i] <= ds[i - 1];
        const bool right_ok = i + 1 == ts.size() || ds[i] <= ds[i + 1];
        if (!(left_ok && right_ok)) continue;
        ++rep.refined_minima;
        const auto cand = refine(i);
        if (cand.second < cfg.epsilon) {
            best = cand;
            rep.found = true;
            break;
        }
        if (!best || cand.second < best->second) best = cand;
    }
    if (!best) {
        const auto it = std::min_element(ds.begin(), ds.end());
        best = {ts[static_cast<std::size_t>(it - ds.begin())], *it};
    }
    rep.shift = best->first;
    rep.max_deviation = best->second;
    return rep;
}

// ---------------------------------------------------------------------------
// Cellular automaton linear impossibility
// ---------------------------------------------------------------------------

enum class Arithmetic { integer, mod2 };

using Cells3 = std::array<int, 3>;

struct IntMatrix3 {
    std::array<std::array<std::int64_t, 3>, 3> m{};

    bool operator==(const IntMatrix3&) const = default;

    std::array<std::int64_t, 3> apply(const Cells3& x) const {
        std::array<std::int64_t, 3> y{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) y[i] += m[i][j] * x[j];
        return y;
    }
};

/// Candidate k in [0, 512): bit 8 is entry (0,0), bit 0 is entry (2,2).
inline IntMatrix3 binary_3x3(int k) {
    IntMatrix3 out;
    for (int pos = 0; pos < 9; ++pos) out.m[pos / 3][pos % 3] = (k >> (8 - pos)) & 1;
    return out;
}

inline constexpr IntMatrix3 kShiftCandidate{{{{1, 1, 0}, {0, 1, 1}, {0, 0, 1}}}};

struct CACounterexample {
    IntMatrix3 matrix;
    Cells3 input;
    std::array<std::int64_t, 3> output;    // what the candidate produced
    std::array<std::int64_t, 3> expected;  // what the automaton produced
};

struct CAReport {
    int wolfram_code = 110;
    Arithmetic arithmetic = Arithmetic::integer;
    std::map<std::string, int> rule_table;  // "lcr" -> next centre
    int candidates_checked = 0;
    int matches = 0;
    std::vector<CACounterexample> counterexamples;  // first failure per candidate, candidate order
};

/// Next centre cell for neighbourhood (l, c, r) under a Wolfram code.
inline int rule_output(int wolfram_code, int l, int c, int r) {
    return (wolfram_code >> (l * 4 + c * 2 + r)) & 1;
}

/// One synchronous update of a 3-cell row with zero boundary cells.
inline Cells3 ca_step(int wolfram_code, const Cells3& row) {
    return {rule_output(wolfram_code, 0, row[0], row[1]), rule_output(wolfram_code, row[0], row[1], row[2]),
            rule_output(wolfram_code, row[1], row[2], 0)};
}

inline std::array<std::int64_t, 3> reduce(std::array<std::int64_t, 3> v, Arithmetic arith) {
    if (arith == Arithmetic::mod2)
        for (auto& x : v) x = ((x % 2) + 2) % 2;
    return v;
}

/**
 * Tests every binary 3x3 matrix as a one-step map on the 8 configurations of
 * a 3-cell row. A candidate matches only if M x equals the automaton update
 * for all 8 rows.
 */
inline CAReport ca_linear_impossibility(Arithmetic arith, int wolfram_code = 110) {
    if (wolfram_code < 0 || wolfram_code > 255) fail(errc::domain, "Wolfram code must be in [0, 255]");
    CAReport rep;
    rep.wolfram_code = wolfram_code;
    rep.arithmetic = arith;
    for (int n = 7; n >= 0; --n) {
        const int l = (n >> 2) & 1, c = (n >> 1) & 1, r = n & 1;
        rep.rule_table[std::to_string(l) + std::to_string(c) + std::to_string(r)] =
            rule_output(wolfram_code, l, c, r);
    }
    for (int k = 0; k < 512; ++k) {
        const IntMatrix3 cand = binary_3x3(k);
        ++rep.candidates_checked;
        std::optional<CACounterexample> bad;
        for (int n = 0; n < 8 && !bad; ++n) {
            const Cells3 x{(n >> 2) & 1, (n >> 1) & 1, n & 1};
            const auto got = reduce(cand.apply(x), arith);
            const Cells3 want = ca_step(wolfram_code, x);
            const std::array<std::int64_t, 3> want64{want[0], want[1], want[2]};
            if (got != want64) bad = CACounterexample{cand, x, got, want64};
        }
        if (bad)
            rep.counterexamples.push_back(*bad);
        else
            ++rep.matches;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// JSON reports
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const IntMatrix2& m) {
    return nlohmann::json::array({{m.a, m.b}, {m.c, m.d}});
}

inline nlohmann::json to_json(const IntMatrix3& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : m.m) rows.push_back({r[0], r[1], r[2]});
    return rows;
}

inline nlohmann::json classify_report(const std::vector<OmegaVerdict>& verdicts) {
    nlohmann::json out;
    out["schema"] = "beta-machine/1";
    out["kind"] = "omega.classify";
    auto& list = out["verdicts"] = nlohmann::json::array();
    nlohmann::json members = nlohmann::json::array();
    for (const auto& v : verdicts) {
        list.push_back({{"matrix", to_json(v.matrix)},
                        {"discriminant", v.discriminant},
                        {"in_omega", v.in_omega},
                        {"eigenvalues", {v.eigenvalues.first, v.eigenvalues.second}}});
        if (v.in_omega) members.push_back(to_json(v.matrix));
    }
    out["in_omega"] = members;
    out["in_omega_count"] = members.size();
    const bool only_fib = members.size() == 1 && members[0] == to_json(kFibonacci);
    out["uniqueness_claim_holds"] = only_fib;
    if (!only_fib)
        out["note"] =
            "The Fibonacci operator is not the only binary 2x2 matrix with an irrational spectrum: "
            "its transpose [[0,1],[1,1]] has the same discriminant 5. Uniqueness holds only up to "
            "transposition.";
    return out;
}

inline nlohmann::json fib_report(int n) {
    nlohmann::json out;
    out["schema"] = "beta-machine/1";
    out["kind"] = "omega.fib";
    out["n"] = n;
    out["value"] = fib_closed_form(n);
    if (n >= 1 && n <= 89) out["golden_ratio_gap"] = golden_ratio_gap(n);
    return out;
}

inline nlohmann::json euclid_report(std::int64_t p, std::int64_t q) {
    const auto t = euclid_trace(p, q);
    nlohmann::json out;
    out["schema"] = "beta-machine/1";
    out["kind"] = "omega.euclid";
    out["p"] = p;
    out["q"] = q;
    out["quotients"] = t.quotients;
    out["remainders"] = t.remainders;
    out["gcd"] = t.gcd;
    out["steps"] = t.steps;
    return out;
}

inline nlohmann::json word_report(int k) {
    const auto w = fib_word(k);
    nlohmann::json out;
    out["schema"] = "beta-machine/1";
    out["kind"] = "omega.word";
    out["k"] = k;
    out["word"] = w;
    out["length"] = w.size();
    out["convention"] =
        "k counts rewritings 0->01, 1->0 from the seed \"0\"; |word(k)| = F(k+2). "
        "A 34-symbol word occurs at k = 7, not after nine rewritings.";
    out["printed_fragment_note"] =
        "The 13-symbol fragment 0100101001010 is word(3) followed by word(4); the rewriting "
        "gives word(5) = 0100101001001, which differs in the last three symbols.";
    return out;
}

inline nlohmann::json ca_report(const CAReport& rep) {
    nlohmann::json out;
    out["schema"] = "beta-machine/1";
    out["kind"] = "omega.ca";
    out["wolfram_code"] = rep.wolfram_code;
    out["arithmetic"] = rep.arithmetic == Arithmetic::integer ? "integer" : "mod2";
    out["rule_table"] = rep.rule_table;
    out["candidates_checked"] = rep.candidates_checked;
    out["matches"] = rep.matches;
    auto& ce = out["counterexamples"] = nlohmann::json::array();
    for (const auto& c : rep.counterexamples)
        ce.push_back({{"matrix", to_json(c.matrix)},
                      {"input", c.input},
                      {"output", c.output},
                      {"expected", c.expected}});
    nlohmann::json evaluations = nlohmann::json::array();
    for (int n = 0; n < 8; ++n) {
        const Cells3 x{(n >> 2) & 1, (n >> 1) & 1, n & 1};
        evaluations.push_back({{"input", x},
                               {"output", reduce(kShiftCandidate.apply(x), rep.arithmetic)},
                               {"expected", ca_step(rep.wolfram_code, x)}});
    }
    out["rule1_candidate"] = {{"matrix", to_json(kShiftCandidate)}, {"evaluations", evaluations}};
    return out;
}

inline nlohmann::json almost_period_json(const AlmostPeriodConfig& cfg, const AlmostPeriodReport& rep) {
    nlohmann::json out;
    out["schema"] = "beta-machine/1";
    out["kind"] = "omega.almost_period";
    out["frequencies"] = cfg.frequencies;
    out["epsilon"] = rep.epsilon;
    out["shift_grid"] = {{"start", cfg.shifts.start}, {"stop", cfg.shifts.stop}, {"step", cfg.shifts.step}};
    out["sample_grid"] = {{"start", cfg.samples.start}, {"stop", cfg.samples.stop}, {"step", cfg.samples.step}};
    out["min_shift"] = cfg.min_shift;
    out["shift"] = rep.shift;
    out["max_deviation"] = rep.max_deviation;
    out["found"] = rep.found;
    out["shifts_scanned"] = rep.shifts_scanned;
    out["samples"] = rep.samples;
    return out;
}

}  // namespace beta::omega
