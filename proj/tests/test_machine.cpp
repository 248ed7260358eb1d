#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "beta/machine.hpp"
#include "oracles.hpp"

using namespace beta::machine;
using namespace beta::testing;
using beta::errc;
using beta::linalg::Matrix;
using beta::linalg::Scalar;
using beta::linalg::Vector;

namespace {

errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const beta::error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no beta::error thrown";
    return errc::validation;
}

Action swap_subsystem(const std::vector<std::size_t>& dims, std::size_t n) {
    std::size_t stride = 1;
    for (std::size_t k = dims.size(); k-- > n + 1;) stride *= dims[k];
    std::size_t total = 1;
    for (auto d : dims) total *= d;
    std::vector<std::size_t> perm(total);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t local = (i / stride) % dims[n];
        perm[i] = i - local * stride + (local ^ 1u) * stride;
    }
    return Action::permute(perm, "swap");
}

}  // namespace

TEST(Spectrum, ExactExamples) {
    const auto s = measure_spectrum(Vector::basis(4, 0), 8, SampleMode::exact());
    EXPECT_EQ(s.entries, (Freq{8, 0, 0, 8, 0, 8, 0, 8}));
    const double r = 1.0 / std::sqrt(2.0);
    const auto bell = measure_spectrum(Vector{r, 0.0, 0.0, r}, 1000, SampleMode::exact());
    EXPECT_EQ(bell.entries, (Freq{500, 500, 0, 1000, 0, 1000, 500, 500}));
    EXPECT_EQ(code_of([] { measure_spectrum(Vector{1.0, 1.0}, 8, SampleMode::exact()); }), errc::domain);
    EXPECT_EQ(code_of([] { measure_spectrum(Vector::basis(2, 0), 0, SampleMode::exact()); }), errc::domain);
}

TEST(Spectrum, RoundHalfEven) {
    EXPECT_EQ(round_half_even(2.5), 2);
    EXPECT_EQ(round_half_even(3.5), 4);
    EXPECT_EQ(round_half_even(2.4999), 2);
    EXPECT_EQ(round_half_even(0.5), 0);
    // 4 shots over weights (1/8, 3/8, 3/8, 1/8): 0.5 -> 0 and 1.5 -> 2
    const std::vector<double> w{0.125, 0.375, 0.375, 0.125};
    EXPECT_EQ(measure_weights(w, {}, 4, SampleMode::exact()).entries, (Freq{0, 4, 2, 2, 2, 2, 0, 4}));
}

TEST(Spectrum, SampledIsReproducibleAndPaired) {
    const Vector uniform{0.5, 0.5, 0.5, 0.5};
    const auto a = measure_spectrum(uniform, 4096, SampleMode::sampled(42));
    const auto b = measure_spectrum(uniform, 4096, SampleMode::sampled(42));
    const auto c = measure_spectrum(uniform, 4096, SampleMode::sampled(43));
    EXPECT_EQ(a, b);
    EXPECT_NE(a.entries, c.entries);
    std::int64_t total = 0;
    for (std::size_t m = 1; m <= 4; ++m) {
        EXPECT_EQ(a.true_count(m) + a.false_count(m), 4096);
        total += a.true_count(m);
    }
    EXPECT_EQ(total, 4096);
}

TEST(Spectrum, SampledFrequenciesWithinBinomialBounds) {
    const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
    const std::vector<double> comb{0.25};
    const std::int64_t shots = 200000;
    const auto s = measure_weights(w, comb, shots, SampleMode::sampled(7));
    for (std::size_t m = 1; m <= 4; ++m) {
        const double mean = shots * w[m - 1], sd = std::sqrt(shots * w[m - 1] * (1 - w[m - 1]));
        EXPECT_LT(std::abs(s.true_count(m) - mean), 5 * sd) << m;
    }
    const double sd = std::sqrt(shots * 0.25 * 0.75);
    EXPECT_LT(std::abs(s.true_count(5) - shots * 0.25), 5 * sd);
    // zero-weight state never drawn
    const std::vector<double> w0{0.5, 0.0, 0.5, 0.0};
    const auto z = measure_weights(w0, {}, 1000, SampleMode::sampled(1));
    EXPECT_EQ(z.true_count(2), 0);
    EXPECT_EQ(z.true_count(4), 0);
}

TEST(Selectors, TrueAndFalseSides) {
    const auto s = spectrum_of({3, 0}, 4);
    EXPECT_EQ(s.entries, (Freq{3, 1, 0, 4}));
    EXPECT_EQ(select_true(s), (Freq{3, 0}));
    EXPECT_EQ(select_false(s), (Freq{1, 4}));
    const auto all_true = spectrum_of({5, 5, 5}, 5);
    EXPECT_EQ(select_false(all_true), (Freq{0, 0, 0}));
    const auto t = select_true(all_true), f = select_false(all_true);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(t[i] + f[i], 5);
    EXPECT_EQ(selector_matrix(2, true), (IntGrid{{1, 0, 0, 0}, {0, 0, 1, 0}}));
    EXPECT_EQ(selector_matrix(2, false), (IntGrid{{0, 1, 0, 0}, {0, 0, 0, 1}}));
}

TEST(IfGate, Examples) {
    EXPECT_EQ(if_gate(1, {0, 1}, {1, 7}), (Freq{0, 7}));
    EXPECT_EQ(if_gate(1, {1, 1}, {0, 7}), (Freq{0, 0}));
    EXPECT_EQ(if_gate(2, {1, 1}, {3, 7}), (Freq{3, 7}));
    EXPECT_EQ(code_of([] { if_gate(3, {1, 1}, {1, 1}); }), errc::validation);
    EXPECT_EQ(code_of([] { if_gate(0, {1, 1}, {1, 1}); }), errc::validation);
    EXPECT_EQ(code_of([] { if_gate(1, {1}, {1, 1}); }), errc::dimension);
}

TEST(IfGate, DeltaMatrixAgreesOnBinarySpectra) {
    for (std::size_t n = 1; n <= 3; ++n)
        for (unsigned phi = 0; phi < (1u << n); ++phi)
            for (unsigned ybits = 0; ybits < (1u << n); ++ybits) {
                Freq sel(n);
                Bits y(n);
                for (std::size_t i = 0; i < n; ++i) {
                    sel[i] = (phi >> i) & 1;
                    y[i] = (ybits >> i) & 1;
                }
                for (std::size_t x = 1; x <= n; ++x)
                    EXPECT_EQ(apply_grid(if_gate_matrix(x, y, sel), sel), if_gate(x, y, sel));
            }
}

TEST(Composition, Examples) {
    EXPECT_EQ(or_combine({{0, 7}, {0, 0}}), (Freq{0, 7}));
    EXPECT_EQ(and_combine({{0, 7}, {1, 0}}), (Freq{0, 0}));
    EXPECT_EQ(direct_sum_raw({{0, 7}, {1, 0}}), (Freq{0, 7, 1, 0}));
    EXPECT_EQ(or_combine({{2, 0}, {1, 5}}), (Freq{2, 5}));
    EXPECT_EQ(and_combine({{2, 3}, {4, 5}}), (Freq{8, 15}));
    const std::int64_t big = std::numeric_limits<std::int64_t>::max() / 2;
    EXPECT_EQ(and_combine({{big}, {4}}), (Freq{std::numeric_limits<std::int64_t>::max()}));
    EXPECT_EQ(code_of([] { or_combine({}); }), errc::validation);
    EXPECT_EQ(code_of([] { and_combine({}); }), errc::validation);
    EXPECT_EQ(code_of([] { or_combine({{1}, {1, 2}}); }), errc::dimension);
}

TEST(Composition, ExhaustiveTruthTableOracle) {
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto exprs = expressions_up_to_depth_two(n);
        for (unsigned phi = 0; phi < (1u << n); ++phi) {
            std::vector<std::int64_t> counts(n);
            for (std::size_t i = 0; i < n; ++i) counts[i] = (phi >> i) & 1;
            const auto s = spectrum_of(counts, 1);
            for (const auto& e : exprs) {
                ASSERT_EQ(condition_fires(e, s), oracle_truth(e, s));
                for (unsigned ybits = 0; ybits < (1u << n); ++ybits) {
                    Bits y(n);
                    for (std::size_t i = 0; i < n; ++i) y[i] = (ybits >> i) & 1;
                    const auto got = evaluate_gate(e, s, y);
                    const auto want = oracle_routed(e, s, y);
                    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(got[i] != 0, want[i]);
                }
            }
        }
    }
}

TEST(Composition, FiringMatchesBooleanReadingOnCounts) {
    std::mt19937_64 rng(3);
    const auto exprs = expressions_up_to_depth_two(3);
    for (int rep = 0; rep < 50; ++rep) {
        const std::int64_t shots = 1 + rng() % 20;
        std::vector<std::int64_t> counts(3);
        for (auto& c : counts) c = static_cast<std::int64_t>(rng() % (shots + 1));
        const auto s = spectrum_of(counts, shots);
        for (std::size_t i = 0; i < exprs.size(); i += 7) ASSERT_EQ(condition_fires(exprs[i], s), oracle_truth(exprs[i], s));
    }
}

TEST(Step, SwapFlipsSecondSubsystem) {
    HypothesisProgram prog{{Rule{"flip", {Branch{GateExpr::leaf(1), {swap_subsystem({2, 2}, 1)}}}}}};
    MachineState st{Vector::basis(4, 0), {}};
    MemoryStore store;
    const auto r = step(prog, st, 1, store, {});
    EXPECT_LT(beta::linalg::max_abs_diff(r.next.amplitudes, Vector::basis(4, 1)), 1e-15);
    ASSERT_EQ(r.fired.size(), 1u);
    EXPECT_EQ(r.registers[0].instruction, 1u);
    EXPECT_EQ(r.registers[0].source, (Bits{1, 0, 0, 0}));
    EXPECT_EQ(r.registers[0].target, (Bits{1, 1, 1, 1}));
    EXPECT_NE(store.find({1, 1}), nullptr);
}

TEST(Step, EmptyProgramLeavesStateUnchanged) {
    const Vector start{0.6, 0.0, 0.0, 0.8};
    MachineState st{start, {0.5}};
    MemoryStore store;
    const auto r = step({}, st, 1, store, {1000, SampleMode::exact()});
    EXPECT_LT(beta::linalg::max_abs_diff(r.next.amplitudes, start), 1e-12);
    EXPECT_EQ(r.next.combined, (std::vector<double>{0.5}));
    EXPECT_EQ(store.size(), 1u);
}

TEST(Step, KFoldStepEqualsIterate) {
    const std::vector<std::size_t> dims{2, 2};
    HypothesisProgram prog{{Rule{"walk", {Branch{GateExpr::leaf(1), {Action::set_state(4)}},
                                          Branch{GateExpr::leaf(4), {swap_subsystem(dims, 0)}}}}}};
    MachineState st{Vector::basis(4, 0), {}};
    MemoryStore store;
    std::vector<std::size_t> visited;
    for (std::int64_t t = 1; t <= 3; ++t) {
        st = step(prog, st, t, store, {}).next;
        for (std::size_t i = 0; i < 4; ++i)
            if (std::abs(st.amplitudes[i]) > 0.5) visited.push_back(i + 1);
    }
    // 1 -> 4 -> 2 (swap first subsystem of 4) -> 2 (no branch fires)
    EXPECT_EQ(visited, (std::vector<std::size_t>{4, 2, 2}));
    EXPECT_EQ(store.size(), 3u);
}

TEST(Step, CombinedSlotFiresWhileConstituentsAreFalse) {
    // dims (2,2); slot 5 is a combined variable over s1, s2, s3
    HypothesisProgram prog{{Rule{
        "listing",
        {Branch{GateExpr::any({GateExpr::leaf(1), GateExpr::leaf(2), GateExpr::leaf(3)}), {Action::print("any")}},
         Branch{GateExpr::leaf(5), {Action::print("combined")}}}}}};
    MachineState st{Vector::basis(4, 3), {1.0}};
    MemoryStore store;
    const auto r = step(prog, st, 1, store, {});
    EXPECT_EQ(r.prints, (std::vector<std::string>{"combined"}));
    ASSERT_EQ(r.fired.size(), 1u);
    EXPECT_EQ(r.fired[0].branch, 1u);
}

TEST(Run, UniformStateDoesNotConverge) {
    MachineState st{Vector{0.5, 0.5, 0.5, 0.5}, {}};
    RunConfig cfg;
    cfg.max_steps = 10;
    const auto res = run_until_converged({}, st, cfg);
    EXPECT_FALSE(res.report.converged);
    EXPECT_FALSE(res.report.depth.has_value());
    ASSERT_EQ(res.report.entropy.size(), 10u);
    for (double s : res.report.entropy) EXPECT_NEAR(s, 2.0, 1e-12);
}

TEST(Run, LargeEpsilonConvergesImmediately) {
    MachineState st{Vector{0.5, 0.5, 0.5, 0.5}, {}};
    RunConfig cfg;
    cfg.epsilon = 3.0;
    const auto res = run_until_converged({}, st, cfg);
    EXPECT_TRUE(res.report.converged);
    EXPECT_EQ(res.report.depth, 1);
}

TEST(Run, PureStateFixedPoint) {
    MachineState st{Vector::basis(4, 2), {}};
    const auto res = run_until_converged({}, st, {});
    EXPECT_TRUE(res.report.converged);
    EXPECT_EQ(res.report.depth, 1);
    EXPECT_EQ(res.report.entropy[0], 0.0);
    EXPECT_EQ(res.report.decided_class, "s3");
}

TEST(Run, ErrorsAndLoadTimeValidation) {
    MachineState st{Vector::basis(2, 0), {}};
    RunConfig bad;
    bad.epsilon = 0.0;
    EXPECT_EQ(code_of([&] { run_until_converged({}, st, bad); }), errc::domain);
    bad = {};
    bad.max_steps = 0;
    EXPECT_EQ(code_of([&] { run_until_converged({}, st, bad); }), errc::domain);
    HypothesisProgram singular{{Rule{"r", {Branch{GateExpr::leaf(1),
                                                   {Action::apply_operator(Matrix{{1.0, 1.0}, {1.0, 1.0}}, "P")}}}}}};
    EXPECT_EQ(code_of([&] { run_until_converged(singular, st, {}); }), errc::validation);
    HypothesisProgram out_of_range{{Rule{"r", {Branch{GateExpr::leaf(9), {}}}}}};
    EXPECT_EQ(code_of([&] { run_until_converged(out_of_range, st, {}); }), errc::validation);
    HypothesisProgram not_bijective{{Rule{"r", {Branch{GateExpr::leaf(1), {Action::permute({0, 0})}}}}}};
    EXPECT_EQ(code_of([&] { run_until_converged(not_bijective, st, {}); }), errc::validation);
}

TEST(Run, SampledTraceIsDeterministic) {
    const double r = 1.0 / std::sqrt(2.0);
    MachineState st{Vector{r, 0.0, 0.0, r}, {0.3}};
    RunConfig cfg;
    cfg.mode = SampleMode::sampled(99);
    cfg.max_steps = 20;
    cfg.shots = 64;
    const auto a = run_until_converged({}, st, cfg);
    const auto b = run_until_converged({}, st, cfg);
    EXPECT_EQ(a.report.entropy, b.report.entropy);
    EXPECT_EQ(a.report.depth, b.report.depth);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].spectrum, b.steps[i].spectrum);
}

TEST(Memory, KeysAreUniqueAndOrdered) {
    MemoryStore store;
    store.append({1, 1}, spectrum_of({1}, 1));
    store.append({1, 2}, spectrum_of({0}, 1));
    EXPECT_EQ(code_of([&] { store.append({1, 1}, spectrum_of({0}, 1)); }), errc::validation);
    ASSERT_EQ(store.size(), 2u);
    EXPECT_EQ(store.entries()[1].first, (SpectrumHandle{1, 2}));
    EXPECT_EQ(store.find({2, 1}), nullptr);
}

TEST(Hypothesis, FibonacciTrajectoryHasUniqueMatch) {
    const std::vector<std::vector<std::int64_t>> traj{{1, 0}, {1, 1}, {2, 1}, {3, 2}};
    const auto matches = hypothesis_search(traj, binary_family(2));
    ASSERT_EQ(matches.size(), 1u);
    EXPECT_EQ(matches[0].op, (IntMatrix{2, {1, 1, 1, 0}}));
    EXPECT_TRUE(matches[0].exact);
    // independent oracle over the family
    int count = 0;
    for (int k = 0; k < 16; ++k) {
        const int a = (k >> 3) & 1, b = (k >> 2) & 1, c = (k >> 1) & 1, d = k & 1;
        bool ok = true;
        for (std::size_t t = 0; t + 1 < traj.size(); ++t)
            ok = ok && a * traj[t][0] + b * traj[t][1] == traj[t + 1][0] &&
                 c * traj[t][0] + d * traj[t][1] == traj[t + 1][1];
        count += ok;
    }
    EXPECT_EQ(count, 1);
}

TEST(Hypothesis, IdentityAndInconsistentTrajectories) {
    const auto id = hypothesis_search({{2, 3}, {2, 3}, {2, 3}}, binary_family(2));
    ASSERT_EQ(id.size(), 1u);
    EXPECT_EQ(id[0].op, (IntMatrix{2, {1, 0, 0, 1}}));
    EXPECT_TRUE(hypothesis_search({{1, 0}, {1, 1}, {1, 0}, {2, 2}}, binary_family(2)).empty());
    EXPECT_EQ(code_of([] { hypothesis_search({{1, 0}}, binary_family(2)); }), errc::validation);
    EXPECT_EQ(code_of([] { hypothesis_search({{1, 0}, {1, 0, 0}}, binary_family(2)); }), errc::validation);
    EXPECT_EQ(code_of([] { hypothesis_search({{1, 0}, {1, 0}}, binary_family(3)); }), errc::validation);
}

TEST(Hypothesis, ResultIndependentOfWorkers) {
    const std::vector<std::vector<std::int64_t>> traj{{1, 0, 1}, {1, 1, 1}, {2, 2, 1}};
    const auto family = binary_family(3);
    const auto serial = hypothesis_search(traj, family, {1, true});
    ASSERT_FALSE(serial.empty());
    for (unsigned w : {2u, 3u, 7u, 64u}) {
        const auto par = hypothesis_search(traj, family, {w, true});
        ASSERT_EQ(par.size(), serial.size());
        for (std::size_t i = 0; i < par.size(); ++i) {
            EXPECT_EQ(par[i].family_index, serial[i].family_index);
            EXPECT_EQ(par[i].exact, serial[i].exact);
        }
    }
    for (std::size_t i = 1; i < serial.size(); ++i) EXPECT_GE(serial[i - 1].exact, serial[i].exact);
}

TEST(Transport, BasisEncodedFunctions) {
    Matrix shift(4, 4);
    for (std::size_t i = 0; i < 4; ++i) shift((i + 1) % 4, i) = 1.0;
    EXPECT_EQ(transport_nat_function(shift, 1), 2u);
    EXPECT_EQ(transport_nat_function(shift, 4), 1u);
    for (std::size_t n = 1; n <= 4; ++n) EXPECT_EQ(transport_nat_function(Matrix::identity(4), n), n);
    Matrix swap13(4, 4);
    const std::size_t image[4] = {2, 3, 0, 1};
    for (std::size_t i = 0; i < 4; ++i) swap13(image[i], i) = 1.0;
    EXPECT_EQ(transport_nat_function(swap13, 3), 1u);
    EXPECT_EQ(code_of([] { transport_nat_function(Matrix{{1.0, 0.0}, {1.0, 1.0}}, 1); }), errc::encoding);
    EXPECT_EQ(code_of([] { transport_nat_function(Matrix::identity(2), 3); }), errc::domain);
}

TEST(Json, SpectrumAndReport) {
    const auto j = to_json(spectrum_of({3, 0}, 4));
    EXPECT_EQ(j["entries"], nlohmann::json({3, 1, 0, 4}));
    const auto rep = hypothesis_report({{1, 0}, {1, 1}}, "binary2", hypothesis_search({{1, 0}, {1, 1}}, binary_family(2)));
    EXPECT_EQ(rep["kind"], "hypothesize");
    EXPECT_EQ(rep["matches"].size(), 4u);
}
