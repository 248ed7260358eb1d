#pragma once

/**
 * @file machine.hpp
 * @brief The register machine: joint spectra, conditional operators and
 *        hypothesis execution.
 *
 * A machine bound to a composite system with M standard states and C
 * combined-state variables has M + C register slots. Slot m (1-based) holds
 * the pair (s_m, s_m') and the joint spectrum stores their frequencies at
 * entries 2m-2 (true) and 2m-1 (false); the two always add up to the shot
 * count.
 *
 * Conditions are trees of IF gates composed with OR (direct sum folded by
 * entrywise maximum) and AND (Hadamard product). A program is a list of rules,
 * each a first-match chain of branches, applied once per time step.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beta/error.hpp"
#include "beta/linalg.hpp"
#include "json.hpp"

namespace beta::machine {

using linalg::Matrix;
using linalg::Scalar;
using linalg::Vector;

using Freq = std::vector<std::int64_t>;
using Bits = std::vector<std::uint8_t>;

inline constexpr double kDefaultEpsilon = 1e-9;
inline constexpr std::int64_t kDefaultShots = 1024;

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

struct SampleMode {
    enum class Kind { exact, sampled };
    Kind kind = Kind::exact;
    std::uint64_t seed = 0;

    static SampleMode exact() { return {}; }
    static SampleMode sampled(std::uint64_t seed) { return {Kind::sampled, seed}; }
    bool operator==(const SampleMode&) const = default;
};

struct Spectrum {
    Freq entries;  // 2 * slots
    std::int64_t shots = 0;
    SampleMode mode;

    std::size_t slots() const { return entries.size() / 2; }
    std::int64_t true_count(std::size_t m) const { return entries.at(2 * m - 2); }
    std::int64_t false_count(std::size_t m) const { return entries.at(2 * m - 1); }
    bool operator==(const Spectrum&) const = default;
};

/// Standard amplitudes plus the truth probability of each combined-state variable.
struct MachineState {
    Vector amplitudes;
    std::vector<double> combined;

    std::size_t standard_dim() const { return amplitudes.dim(); }
    std::size_t slots() const { return amplitudes.dim() + combined.size(); }
};

inline std::int64_t round_half_even(double x) {
    const double fl = std::floor(x);
    const double diff = x - fl;
    auto base = static_cast<std::int64_t>(fl);
    if (diff > 0.5) return base + 1;
    if (diff < 0.5) return base;
    return (base % 2 == 0) ? base : base + 1;
}

/// splitmix64 finalizer; derives per-step seeds from the run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace detail {
// 53-bit uniform in [0, 1) from the raw engine output, identical on every platform.
inline double uniform53(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}  // namespace detail

/**
 * Frequencies for standard weights w_1..w_M and combined truth probabilities.
 * Exact mode rounds shots * p half-to-even; sampled mode draws a multinomial
 * over the standard states and an independent binomial per combined slot.
 */
inline Spectrum measure_weights(std::span<const double> weights, std::span<const double> combined,
                                std::int64_t shots, SampleMode mode) {
    if (shots < 1) fail(errc::domain, "shots must be at least 1");
    if (weights.empty()) fail(errc::domain, "no standard weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) fail(errc::domain, "invalid weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(errc::domain, "state is not normalized");
    for (double p : combined)
        if (!(p >= 0.0 && p <= 1.0)) fail(errc::domain, "combined-slot probability outside [0, 1]");

    Spectrum s;
    s.shots = shots;
    s.mode = mode;
    const std::size_t m = weights.size(), slots = m + combined.size();
    s.entries.assign(2 * slots, 0);
    std::vector<std::int64_t> truth(slots, 0);
    if (mode.kind == SampleMode::Kind::exact) {
        for (std::size_t i = 0; i < m; ++i) truth[i] = round_half_even(static_cast<double>(shots) * weights[i]);
        for (std::size_t c = 0; c < combined.size(); ++c)
            truth[m + c] = round_half_even(static_cast<double>(shots) * combined[c]);
    } else {
        std::mt19937_64 rng(mode.seed);
        std::vector<double> cdf(m);
        std::partial_sum(weights.begin(), weights.end(), cdf.begin());
        for (std::int64_t k = 0; k < shots; ++k) {
            const double u = detail::uniform53(rng) * total;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            // Skip zero-weight categories sitting on a cdf plateau at the end.
            std::size_t idx = it == cdf.end() ? m - 1 : static_cast<std::size_t>(it - cdf.begin());
            while (weights[idx] == 0.0 && idx > 0) --idx;
            ++truth[idx];
        }
        for (std::size_t c = 0; c < combined.size(); ++c)
            for (std::int64_t k = 0; k < shots; ++k)
                if (detail::uniform53(rng) < combined[c]) ++truth[m + c];
    }
    for (std::size_t i = 0; i < slots; ++i) {
        truth[i] = std::clamp<std::int64_t>(truth[i], 0, shots);
        s.entries[2 * i] = truth[i];
        s.entries[2 * i + 1] = shots - truth[i];
    }
    return s;
}

inline std::vector<double> probabilities(const Vector& state) {
    std::vector<double> p(state.dim());
    for (std::size_t i = 0; i < state.dim(); ++i) p[i] = std::norm(state[i]);
    return p;
}

inline Spectrum measure_spectrum(const Vector& state, std::int64_t shots, SampleMode mode) {
    if (std::abs(state.norm() - 1.0) > 1e-9) fail(errc::domain, "state is not normalized");
    const auto p = probabilities(state);
    return measure_weights(p, {}, shots, mode);
}

inline Spectrum measure_spectrum(const MachineState& state, std::int64_t shots, SampleMode mode) {
    if (std::abs(state.amplitudes.norm() - 1.0) > 1e-9) fail(errc::domain, "state is not normalized");
    const auto p = probabilities(state.amplitudes);
    return measure_weights(p, state.combined, shots, mode);
}

/// Normalized standard-state distribution of a spectrum (true counts of slots 1..M).
inline std::vector<double> standard_weights(const Spectrum& s, std::size_t standard_dim) {
    if (standard_dim == 0 || standard_dim > s.slots()) fail(errc::dimension, "standard dimension vs spectrum");
    std::vector<double> w(standard_dim);
    double total = 0.0;
    for (std::size_t m = 1; m <= standard_dim; ++m) total += static_cast<double>(s.true_count(m));
    if (total <= 0.0) return {};
    for (std::size_t m = 1; m <= standard_dim; ++m) w[m - 1] = static_cast<double>(s.true_count(m)) / total;
    return w;
}

// ---------------------------------------------------------------------------
// V / V' selectors and the IF operator
// ---------------------------------------------------------------------------

using IntGrid = std::vector<std::vector<std::int64_t>>;

/// slots x 2 slots 0/1 matrix picking entry 2m-2 (true side) or 2m-1 (false side).
inline IntGrid selector_matrix(std::size_t slots, bool true_side) {
    IntGrid v(slots, std::vector<std::int64_t>(2 * slots, 0));
    for (std::size_t m = 0; m < slots; ++m) v[m][2 * m + (true_side ? 0 : 1)] = 1;
    return v;
}

inline Freq apply_grid(const IntGrid& a, const Freq& x) {
    Freq y(a.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != x.size()) fail(errc::dimension, "operator/vector size mismatch");
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    }
    return y;
}

inline Freq select_true(const Spectrum& s) { return apply_grid(selector_matrix(s.slots(), true), s.entries); }
inline Freq select_false(const Spectrum& s) { return apply_grid(selector_matrix(s.slots(), false), s.entries); }

inline bool truth(std::int64_t frequency) { return frequency >= 1; }

/// Entry i is phi'_i when source x (1-based) is true and y_i = 1, else 0.
inline Freq if_gate(std::size_t x, const Bits& y, const Freq& selected) {
    if (x < 1 || x > selected.size())
        fail(errc::validation, "IF source " + std::to_string(x) + " outside 1.." + std::to_string(selected.size()));
    if (y.size() != selected.size()) fail(errc::dimension, "target bits and spectrum lengths differ");
    Freq out(selected.size(), 0);
    if (!truth(selected[x - 1])) return out;
    for (std::size_t i = 0; i < selected.size(); ++i)
        if (y[i]) out[i] = selected[i];
    return out;
}

/// Diagonal matrix with entries delta(phi'_x * y_i, 1); its product with phi'
/// equals if_gate whenever phi' is a 0/1 vector.
inline IntGrid if_gate_matrix(std::size_t x, const Bits& y, const Freq& selected) {
    if (x < 1 || x > selected.size()) fail(errc::validation, "IF source out of range");
    if (y.size() != selected.size()) fail(errc::dimension, "target bits and spectrum lengths differ");
    IntGrid a(selected.size(), std::vector<std::int64_t>(selected.size(), 0));
    for (std::size_t i = 0; i < selected.size(); ++i) a[i][i] = selected[x - 1] * y[i] == 1 ? 1 : 0;
    return a;
}

inline Freq direct_sum_raw(const std::vector<Freq>& gates) {
    Freq out;
    for (const auto& g : gates) out.insert(out.end(), g.begin(), g.end());
    return out;
}

/// Direct sum of the gate outputs, folded block-wise by entrywise maximum.
inline Freq or_combine(const std::vector<Freq>& gates) {
    if (gates.empty()) fail(errc::validation, "OR of an empty gate list");
    const std::size_t n = gates.front().size();
    for (const auto& g : gates)
        if (g.size() != n) fail(errc::dimension, "OR operands differ in length");
    const Freq sum = direct_sum_raw(gates);
    Freq out(n, 0);
    for (std::size_t b = 0; b < gates.size(); ++b)
        for (std::size_t i = 0; i < n; ++i) out[i] = std::max(out[i], sum[b * n + i]);
    return out;
}

namespace detail {
inline std::int64_t saturating_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) return std::numeric_limits<std::int64_t>::max();
    return r;
}
}  // namespace detail

/// Iterated Hadamard product (saturating).
inline Freq and_combine(const std::vector<Freq>& gates) {
    if (gates.empty()) fail(errc::validation, "AND of an empty gate list");
    Freq out = gates.front();
    for (std::size_t g = 1; g < gates.size(); ++g) {
        if (gates[g].size() != out.size()) fail(errc::dimension, "AND operands differ in length");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::saturating_mul(out[i], gates[g][i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Condition expressions
// ---------------------------------------------------------------------------

struct GateExpr {
    enum class Op { leaf, any, all };
    Op op = Op::leaf;
    std::size_t slot = 0;   // leaf: 1-based register slot
    bool polarity = true;   // leaf: "is true" reads V, "is false" reads V'
    std::vector<GateExpr> children;

    static GateExpr leaf(std::size_t slot, bool polarity = true) { return {Op::leaf, slot, polarity, {}}; }
    static GateExpr any(std::vector<GateExpr> c) { return {Op::any, 0, true, std::move(c)}; }
    static GateExpr all(std::vector<GateExpr> c) { return {Op::all, 0, true, std::move(c)}; }

    bool operator==(const GateExpr&) const = default;
};

inline void collect_sources(const GateExpr& e, std::vector<std::size_t>& out) {
    if (e.op == GateExpr::Op::leaf)
        out.push_back(e.slot);
    else
        for (const auto& c : e.children) collect_sources(c, out);
}

/// Routed frequency data of a condition for target bits y.
inline Freq evaluate_gate(const GateExpr& e, const Spectrum& s, const Bits& y) {
    switch (e.op) {
        case GateExpr::Op::leaf:
            return if_gate(e.slot, y, e.polarity ? select_true(s) : select_false(s));
        case GateExpr::Op::any:
        case GateExpr::Op::all: {
            std::vector<Freq> parts;
            for (const auto& c : e.children) parts.push_back(evaluate_gate(c, s, y));
            return e.op == GateExpr::Op::any ? or_combine(parts) : and_combine(parts);
        }
    }
    return {};
}

namespace detail {
// Same composition with a unit payload: each leaf routes the vector that is 1
// everywhere except min(phi'_x, 1) at its source, so a true leaf yields all
// ones and a false leaf all zeros.
inline Freq probe(const GateExpr& e, const Spectrum& s) {
    const std::size_t n = s.slots();
    switch (e.op) {
        case GateExpr::Op::leaf: {
            const Freq sel = e.polarity ? select_true(s) : select_false(s);
            if (e.slot < 1 || e.slot > n) fail(errc::validation, "condition slot out of range");
            Freq unit(n, 1);
            unit[e.slot - 1] = std::min<std::int64_t>(sel[e.slot - 1], 1);
            return if_gate(e.slot, Bits(n, 1), unit);
        }
        case GateExpr::Op::any:
        case GateExpr::Op::all: {
            std::vector<Freq> parts;
            for (const auto& c : e.children) parts.push_back(probe(c, s));
            return e.op == GateExpr::Op::any ? or_combine(parts) : and_combine(parts);
        }
    }
    return {};
}
}  // namespace detail

inline bool condition_fires(const GateExpr& e, const Spectrum& s) {
    const Freq out = detail::probe(e, s);
    return std::any_of(out.begin(), out.end(), [](std::int64_t v) { return v != 0; });
}

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

struct Action {
    enum class Kind { set_state, set_combined, permute, flip_combined, apply_operator, print };
    Kind kind = Kind::print;
    std::size_t target = 0;                // set_state: standard m; *_combined: slot
    std::vector<std::size_t> permutation;  // permute: new index (0-based) of basis state i
    Matrix op;                             // apply_operator
    std::string name;                      // operator name or print text

    static Action set_state(std::size_t m) { return {Kind::set_state, m, {}, {}, {}}; }
    static Action set_combined(std::size_t slot) { return {Kind::set_combined, slot, {}, {}, {}}; }
    static Action flip_combined(std::size_t slot) { return {Kind::flip_combined, slot, {}, {}, {}}; }
    static Action permute(std::vector<std::size_t> p, std::string name = "permute") {
        return {Kind::permute, 0, std::move(p), {}, std::move(name)};
    }
    static Action apply_operator(Matrix m, std::string name) {
        return {Kind::apply_operator, 0, {}, std::move(m), std::move(name)};
    }
    static Action print(std::string text) { return {Kind::print, 0, {}, {}, std::move(text)}; }
};

struct Branch {
    GateExpr condition;
    std::vector<Action> actions;
};

struct Rule {
    std::string name;
    std::vector<Branch> branches;  // first match wins
};

struct HypothesisProgram {
    std::vector<Rule> rules;
};

inline void validate_expr(const GateExpr& e, std::size_t slots) {
    if (e.op == GateExpr::Op::leaf) {
        if (e.slot < 1 || e.slot > slots) fail(errc::validation, "condition refers to slot " + std::to_string(e.slot));
        return;
    }
    if (e.children.empty()) fail(errc::validation, "empty any/all condition");
    for (const auto& c : e.children) validate_expr(c, slots);
}

/// Load-time checks: every slot exists, permutations are bijections and operators invertible.
inline void validate_program(const HypothesisProgram& prog, std::size_t standard_dim, std::size_t slots) {
    for (const auto& rule : prog.rules) {
        if (rule.branches.empty()) fail(errc::validation, "rule " + rule.name + " has no branches");
        for (const auto& br : rule.branches) {
            validate_expr(br.condition, slots);
            for (const auto& a : br.actions) {
                switch (a.kind) {
                    case Action::Kind::set_state:
                        if (a.target < 1 || a.target > standard_dim) fail(errc::validation, "set target out of range");
                        break;
                    case Action::Kind::set_combined:
                    case Action::Kind::flip_combined:
                        if (a.target <= standard_dim || a.target > slots)
                            fail(errc::validation, "combined target out of range");
                        break;
                    case Action::Kind::permute: {
                        if (a.permutation.size() != standard_dim) fail(errc::validation, "permutation size");
                        std::vector<std::uint8_t> hit(standard_dim, 0);
                        for (auto p : a.permutation) {
                            if (p >= standard_dim || hit[p]) fail(errc::validation, "permutation is not a bijection");
                            hit[p] = 1;
                        }
                        break;
                    }
                    case Action::Kind::apply_operator:
                        if (a.op.rows() != standard_dim || a.op.cols() != standard_dim)
                            fail(errc::validation, "operator " + a.name + " has the wrong shape");
                        if (!linalg::is_invertible(a.op))
                            fail(errc::validation, "operator " + a.name + " is not invertible");
                        break;
                    case Action::Kind::print:
                        break;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Registers and memory
// ---------------------------------------------------------------------------

struct SpectrumHandle {
    std::int64_t t = 0;
    std::size_t k = 0;
    auto operator<=>(const SpectrumHandle&) const = default;
};

struct Register {
    std::size_t instruction = 0;  // 1-based index of the fired branch, 0 when none fired
    Bits source;                  // x
    Bits target;                  // y
    SpectrumHandle spectrum;
    std::size_t k = 0;
};

class MemoryStore {
public:
    void append(SpectrumHandle key, Spectrum s) {
        if (index_.count(key))
            fail(errc::validation, "memory key (" + std::to_string(key.t) + "," + std::to_string(key.k) + ") reused");
        index_.emplace(key, entries_.size());
        entries_.emplace_back(key, std::move(s));
    }

    const Spectrum* find(SpectrumHandle key) const {
        auto it = index_.find(key);
        return it == index_.end() ? nullptr : &entries_[it->second].second;
    }

    const std::vector<std::pair<SpectrumHandle, Spectrum>>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<std::pair<SpectrumHandle, Spectrum>> entries_;
    std::map<SpectrumHandle, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct StepConfig {
    std::int64_t shots = kDefaultShots;
    SampleMode mode;
};

struct FiredBranch {
    std::size_t rule = 0;    // 0-based
    std::size_t branch = 0;  // 0-based
};

struct StepResult {
    MachineState next;
    Spectrum spectrum;
    std::vector<FiredBranch> fired;
    std::vector<std::string> prints;
    std::vector<Register> registers;
};

/// Amplitudes sqrt(frequency / total) for the standard slots, truth rates for combined slots.
inline MachineState reprepare(const Spectrum& s, const MachineState& previous) {
    MachineState out;
    const std::size_t m = previous.standard_dim();
    auto w = standard_weights(s, m);
    if (w.empty()) w = probabilities(previous.amplitudes);
    out.amplitudes = Vector(m);
    for (std::size_t i = 0; i < m; ++i) out.amplitudes[i] = std::sqrt(w[i]);
    out.amplitudes = out.amplitudes.normalized();
    for (std::size_t c = 0; c < previous.combined.size(); ++c)
        out.combined.push_back(static_cast<double>(s.true_count(m + c + 1)) / static_cast<double>(s.shots));
    return out;
}

inline void apply_action(const Action& a, MachineState& st) {
    switch (a.kind) {
        case Action::Kind::set_state:
            st.amplitudes = Vector::basis(st.standard_dim(), a.target - 1);
            break;
        case Action::Kind::set_combined:
            st.combined.at(a.target - st.standard_dim() - 1) = 1.0;
            break;
        case Action::Kind::flip_combined: {
            auto& p = st.combined.at(a.target - st.standard_dim() - 1);
            p = 1.0 - p;
            break;
        }
        case Action::Kind::permute: {
            Vector next(st.standard_dim());
            for (std::size_t i = 0; i < st.standard_dim(); ++i) next[a.permutation[i]] = st.amplitudes[i];
            st.amplitudes = next;
            break;
        }
        case Action::Kind::apply_operator:
            st.amplitudes = (a.op * st.amplitudes).normalized();
            break;
        case Action::Kind::print:
            break;
    }
}

inline Bits action_targets(const std::vector<Action>& actions, std::size_t standard_dim, std::size_t slots) {
    Bits y(slots, 0);
    for (const auto& a : actions) {
        switch (a.kind) {
            case Action::Kind::set_state:
            case Action::Kind::set_combined:
            case Action::Kind::flip_combined:
                y[a.target - 1] = 1;
                break;
            case Action::Kind::permute:
                for (std::size_t i = 0; i < standard_dim; ++i)
                    if (a.permutation[i] != i) y[i] = 1;
                break;
            case Action::Kind::apply_operator:
                for (std::size_t i = 0; i < standard_dim; ++i) y[i] = 1;
                break;
            case Action::Kind::print:
                break;
        }
    }
    return y;
}

/**
 * One time step t: measure the joint spectrum, store it under (t, k) for
 * every rule k, re-prepare the state from the spectrum, then for each rule
 * apply the actions of its first branch whose condition fires.
 */
inline StepResult step(const HypothesisProgram& prog, const MachineState& state, std::int64_t t,
                       MemoryStore& store, const StepConfig& cfg) {
    const std::size_t m = state.standard_dim(), slots = state.slots();
    SampleMode mode = cfg.mode;
    if (mode.kind == SampleMode::Kind::sampled) mode.seed = mix_seed(cfg.mode.seed, static_cast<std::uint64_t>(t));

    StepResult res;
    res.spectrum = measure_spectrum(state, cfg.shots, mode);
    const std::size_t nrules = std::max<std::size_t>(prog.rules.size(), 1);
    for (std::size_t k = 1; k <= nrules; ++k) store.append({t, k}, res.spectrum);

    res.next = reprepare(res.spectrum, state);
    for (std::size_t r = 0; r < prog.rules.size(); ++r) {
        const auto& rule = prog.rules[r];
        Register reg;
        reg.k = r + 1;
        reg.spectrum = {t, r + 1};
        reg.source.assign(slots, 0);
        reg.target.assign(slots, 0);
        for (std::size_t b = 0; b < rule.branches.size(); ++b) {
            const auto& br = rule.branches[b];
            if (!condition_fires(br.condition, res.spectrum)) continue;
            reg.instruction = b + 1;
            std::vector<std::size_t> src;
            collect_sources(br.condition, src);
            for (auto x : src) reg.source[x - 1] = 1;
            reg.target = action_targets(br.actions, m, slots);
            for (const auto& a : br.actions) {
                if (a.kind == Action::Kind::print)
                    res.prints.push_back(a.name);
                else
                    apply_action(a, res.next);
            }
            res.fired.push_back({r, b});
            break;
        }
        res.registers.push_back(std::move(reg));
    }
    return res;
}

struct RunConfig {
    double epsilon = kDefaultEpsilon;
    std::int64_t max_steps = 100;
    std::int64_t shots = kDefaultShots;
    SampleMode mode;
};

struct ConvergenceReport {
    std::vector<double> entropy;     // bits, one per step
    double epsilon = kDefaultEpsilon;
    std::optional<std::int64_t> depth;  // T
    std::string decided_class;
    bool converged = false;
};

struct StepRecord {
    std::int64_t t = 0;
    Spectrum spectrum;
    double entropy = 0.0;
    std::vector<FiredBranch> fired;
    std::vector<std::string> prints;
    std::vector<Register> registers;
};

struct RunResult {
    ConvergenceReport report;
    std::vector<StepRecord> steps;
    MemoryStore store;
    MachineState final_state;
};

using SlotLabeler = std::function<std::string(std::size_t)>;

inline std::string default_label(std::size_t m) { return "s" + std::to_string(m); }

/**
 * Steps the program from t = 1 and stops at the first t whose spectrum
 * entropy falls below epsilon; that t is the logical depth T.
 */
inline RunResult run_until_converged(const HypothesisProgram& prog, const MachineState& initial,
                                     const RunConfig& cfg, const SlotLabeler& label = default_label) {
    if (!(cfg.epsilon > 0.0)) fail(errc::domain, "epsilon must be positive");
    if (cfg.max_steps < 1) fail(errc::domain, "max_steps must be at least 1");
    validate_program(prog, initial.standard_dim(), initial.slots());

    RunResult out;
    out.report.epsilon = cfg.epsilon;
    MachineState state = initial;
    const StepConfig sc{cfg.shots, cfg.mode};
    for (std::int64_t t = 1; t <= cfg.max_steps; ++t) {
        StepResult r = step(prog, state, t, out.store, sc);
        auto w = standard_weights(r.spectrum, state.standard_dim());
        if (w.empty()) w = probabilities(state.amplitudes);
        const double s = linalg::von_neumann_entropy(std::span<const double>(w));
        out.report.entropy.push_back(s);
        out.steps.push_back({t, r.spectrum, s, r.fired, r.prints, r.registers});
        state = std::move(r.next);
        if (s < cfg.epsilon) {
            out.report.converged = true;
            out.report.depth = t;
            const auto best = std::max_element(w.begin(), w.end());
            out.report.decided_class = label(static_cast<std::size_t>(best - w.begin()) + 1);
            break;
        }
    }
    out.final_state = std::move(state);
    return out;
}

// ---------------------------------------------------------------------------
// Hypothesis search
// ---------------------------------------------------------------------------

struct IntMatrix {
    std::size_t n = 0;
    std::vector<std::int64_t> a;  // row-major n x n

    std::int64_t at(std::size_t i, std::size_t j) const { return a[i * n + j]; }

    std::vector<std::int64_t> apply(const std::vector<std::int64_t>& v) const {
        std::vector<std::int64_t> out(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) out[i] += at(i, j) * v[j];
        return out;
    }

    bool operator==(const IntMatrix&) const = default;
};

/// All 2^(n^2) binary n x n matrices; the first entry is the most significant bit.
inline std::vector<IntMatrix> binary_family(std::size_t n) {
    if (n < 1 || n > 4) fail(errc::domain, "binary family supports n in [1, 4]");
    const std::size_t cells = n * n;
    std::vector<IntMatrix> fam;
    fam.reserve(std::size_t{1} << cells);
    for (std::size_t k = 0; k < (std::size_t{1} << cells); ++k) {
        IntMatrix m{n, std::vector<std::int64_t>(cells)};
        for (std::size_t pos = 0; pos < cells; ++pos) m.a[pos] = static_cast<std::int64_t>((k >> (cells - 1 - pos)) & 1);
        fam.push_back(std::move(m));
    }
    return fam;
}

struct HypothesisMatch {
    IntMatrix op;
    bool exact = false;
    std::size_t pairs_matched = 0;
    std::size_t family_index = 0;
};

struct SearchOptions {
    unsigned workers = 1;
    bool include_partial = false;
};

/**
 * Operators M from `family` with M v_t = v_{t+1} for every consecutive pair.
 * With include_partial, operators matching at least one pair follow the exact
 * ones, ranked by matched pairs. Output order never depends on `workers`.
 */
inline std::vector<HypothesisMatch> hypothesis_search(const std::vector<std::vector<std::int64_t>>& trajectory,
                                                      const std::vector<IntMatrix>& family,
                                                      const SearchOptions& opts = {}) {
    if (trajectory.size() < 2) fail(errc::validation, "trajectory needs at least two states");
    const std::size_t dim = trajectory.front().size();
    for (const auto& v : trajectory)
        if (v.size() != dim) fail(errc::validation, "trajectory vectors differ in dimension");
    for (const auto& m : family)
        if (m.n != dim || m.a.size() != dim * dim) fail(errc::validation, "family operator dimension mismatch");

    auto scan = [&](std::size_t lo, std::size_t hi) {
        std::vector<HypothesisMatch> found;
        for (std::size_t i = lo; i < hi; ++i) {
            std::size_t hits = 0;
            for (std::size_t t = 0; t + 1 < trajectory.size(); ++t)
                if (family[i].apply(trajectory[t]) == trajectory[t + 1]) ++hits;
            const bool exact = hits + 1 == trajectory.size();
            if (exact || (opts.include_partial && hits > 0)) found.push_back({family[i], exact, hits, i});
        }
        return found;
    };

    const std::size_t workers = std::clamp<std::size_t>(opts.workers, 1, std::max<std::size_t>(family.size(), 1));
    std::vector<HypothesisMatch> out;
    if (workers == 1) {
        out = scan(0, family.size());
    } else {
        std::vector<std::future<std::vector<HypothesisMatch>>> parts;
        const std::size_t chunk = (family.size() + workers - 1) / workers;
        for (std::size_t lo = 0; lo < family.size(); lo += chunk)
            parts.push_back(std::async(std::launch::async, scan, lo, std::min(family.size(), lo + chunk)));
        for (auto& p : parts) {
            auto part = p.get();
            out.insert(out.end(), part.begin(), part.end());
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const HypothesisMatch& a, const HypothesisMatch& b) {
        if (a.exact != b.exact) return a.exact;
        if (a.pairs_matched != b.pairs_matched) return a.pairs_matched > b.pairs_matched;
        return a.family_index < b.family_index;
    });
    return out;
}

/**
 * f* = g f g^-1 on naturals, where g^-1 encodes n as the n-th standard basis
 * vector (1-based) and g reads back the index of a basis vector.
 */
inline std::size_t transport_nat_function(const Matrix& f, std::size_t n) {
    if (!f.square()) fail(errc::dimension, "operator must be square");
    if (n < 1 || n > f.cols()) fail(errc::domain, "n outside the encoded range 1.." + std::to_string(f.cols()));
    const Vector image = f * Vector::basis(f.cols(), n - 1);
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < image.dim(); ++i) {
        const double dist_one = std::abs(image[i] - Scalar{1.0, 0.0});
        const double dist_zero = std::abs(image[i]);
        if (dist_one <= 1e-9) {
            if (hit) fail(errc::encoding, "image is not a basis vector");
            hit = i;
        } else if (dist_zero > 1e-9) {
            fail(errc::encoding, "image is not a basis vector");
        }
    }
    if (!hit) fail(errc::encoding, "image is not a basis vector");
    return *hit + 1;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Spectrum& s) {
    return {{"entries", s.entries},
            {"shots", s.shots},
            {"mode", s.mode.kind == SampleMode::Kind::exact ? "exact" : "sampled"}};
}

inline nlohmann::json to_json(const IntMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.n; ++j) row.push_back(m.at(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline nlohmann::json hypothesis_report(const std::vector<std::vector<std::int64_t>>& trajectory,
                                        const std::string& family_name,
                                        const std::vector<HypothesisMatch>& matches) {
    nlohmann::json out;
    out["schema"] = "beta-machine/1";
    out["kind"] = "hypothesize";
    out["family"] = family_name;
    out["trajectory"] = trajectory;
    auto& list = out["matches"] = nlohmann::json::array();
    for (const auto& m : matches)
        list.push_back({{"operator", to_json(m.op)},
                        {"exact", m.exact},
                        {"pairs_matched", m.pairs_matched},
                        {"family_index", m.family_index}});
    return out;
}

}  // namespace beta::machine
