#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>

#include "beta/omega.hpp"

using namespace beta::omega;
using beta::errc;

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

// Integer square test by exhaustive search; binary 2x2 discriminants are at most 8.
bool square_by_search(std::int64_t n) {
    for (std::int64_t k = 0; k * k <= n; ++k)
        if (k * k == n) return true;
    return false;
}

std::int64_t fib_iterative(int n) {
    // n applications of [[1,1],[1,0]] to (1,0); the first component.
    std::int64_t a = 1, b = 0;
    for (int i = 0; i < n; ++i) {
        const std::int64_t na = a + b;
        b = a;
        a = na;
    }
    return a;
}

std::array<std::int64_t, 3> matvec(const std::array<std::array<int, 3>, 3>& m, const std::array<int, 3>& x) {
    std::array<std::int64_t, 3> y{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) y[i] += m[i][j] * x[j];
    return y;
}

int automaton_cell(int code, int l, int c, int r) { return (code >> (4 * l + 2 * c + r)) & 1; }

// Count of binary 3x3 matrices matching the automaton on all 8 rows, computed from scratch.
int brute_force_matches(int code, bool mod2) {
    int matches = 0;
    for (int k = 0; k < 512; ++k) {
        std::array<std::array<int, 3>, 3> m{};
        for (int i = 0; i < 9; ++i) m[i / 3][i % 3] = (k >> (8 - i)) & 1;
        bool ok = true;
        for (int l = 0; l < 2 && ok; ++l)
            for (int c = 0; c < 2 && ok; ++c)
                for (int r = 0; r < 2 && ok; ++r) {
                    auto y = matvec(m, {l, c, r});
                    if (mod2)
                        for (auto& v : y) v %= 2;
                    const std::array<std::int64_t, 3> want{automaton_cell(code, 0, l, c), automaton_cell(code, l, c, r),
                                                           automaton_cell(code, c, r, 0)};
                    ok = y == want;
                }
        matches += ok;
    }
    return matches;
}

}  // namespace

TEST(Classify, ExhaustiveBinaryScanMatchesQuadraticOracle) {
    const auto verdicts = classify_binary_2x2();
    ASSERT_EQ(verdicts.size(), 16u);
    std::set<std::array<std::int64_t, 4>> members;
    for (const auto& v : verdicts) {
        const auto& m = v.matrix;
        const std::int64_t disc = (m.a - m.d) * (m.a - m.d) + 4 * m.b * m.c;
        EXPECT_EQ(v.discriminant, disc);
        const bool irrational = disc > 0 && !square_by_search(disc);
        EXPECT_EQ(v.in_omega, irrational);
        if (irrational) members.insert({m.a, m.b, m.c, m.d});
        const double root = std::sqrt(std::max<double>(disc, 0));
        EXPECT_NEAR(v.eigenvalues.first, (m.a + m.d + root) / 2.0, 1e-12);
    }
    const std::set<std::array<std::int64_t, 4>> expected{{1, 1, 1, 0}, {0, 1, 1, 1}};
    EXPECT_EQ(members, expected);
}

TEST(Classify, ReportNotesTransposeDeviation) {
    const auto rep = classify_report(classify_binary_2x2());
    EXPECT_EQ(rep["in_omega_count"], 2);
    EXPECT_FALSE(rep["uniqueness_claim_holds"].get<bool>());
    EXPECT_NE(rep["note"].get<std::string>().find("transpose"), std::string::npos);
}

TEST(Classify, FibonacciDiscriminantAndTranspose) {
    const auto v = classify(kFibonacci);
    EXPECT_EQ(v.discriminant, 5);
    EXPECT_TRUE(v.in_omega);
    EXPECT_TRUE(classify(kFibonacci.transpose()).in_omega);
    EXPECT_FALSE(classify({1, 0, 0, 1}).in_omega);
    EXPECT_FALSE(classify({0, 1, 1, 0}).in_omega);  // eigenvalues +-1
    EXPECT_TRUE(classify({2, 1, 1, 1}).in_omega);   // discriminant 5
}

TEST(Classify, ThreeByThree) {
    EXPECT_FALSE(in_omega_3x3({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}));
    EXPECT_TRUE(in_omega_3x3({{{1, 1, 0}, {1, 0, 0}, {0, 0, 1}}}));
    EXPECT_FALSE(in_omega_3x3({{{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}}));
    // x^3 - 2 has the irrational real root 2^(1/3).
    EXPECT_TRUE(in_omega_3x3({{{0, 0, 2}, {1, 0, 0}, {0, 1, 0}}}));
}

TEST(Fibonacci, ClosedFormEqualsIteration) {
    for (int n = 0; n <= kMaxFibIndex; ++n) EXPECT_EQ(fib_closed_form(n), fib_iterative(n)) << n;
    for (int n = 0; n <= 69; ++n) EXPECT_EQ(fib_closed_form_real(n), static_cast<double>(fib_iterative(n))) << n;
    EXPECT_EQ(code_of([] { fib_closed_form(91); }), errc::capacity);
    EXPECT_EQ(code_of([] { fib_closed_form(-1); }), errc::domain);
}

TEST(Fibonacci, GoldenRatioGap) {
    for (int n = 1; n <= 30; ++n) {
        const long double ratio = static_cast<long double>(fib_iterative(n + 1)) / fib_iterative(n);
        const long double direct = std::fabs(ratio - (1.0L + std::sqrt(5.0L)) / 2.0L);
        EXPECT_NEAR(golden_ratio_gap(n) / static_cast<double>(direct), 1.0, 1e-6) << n;
    }
    EXPECT_LT(golden_ratio_gap(20), 1e-7);
    for (int n = 1; n < 89; ++n) EXPECT_LT(golden_ratio_gap(n + 1), golden_ratio_gap(n));
}

TEST(Euclid, HandTrace) {
    const auto t = euclid_trace(34, 55);
    EXPECT_EQ(t.quotients, (std::vector<std::int64_t>{1, 1, 1, 1, 1, 1, 1, 2}));
    EXPECT_EQ(t.gcd, 1);
    EXPECT_EQ(euclid_trace(6, 10).quotients, (std::vector<std::int64_t>{1, 1, 2}));
    EXPECT_EQ(code_of([] { euclid_trace(5, 3); }), errc::domain);
}

TEST(Euclid, ConsecutiveFibonacciPairsAreWorstCase) {
    for (int k = 2; k <= 25; ++k) {
        const std::int64_t p = fib_iterative(k - 1), q = fib_iterative(k);
        if (p == q) continue;
        const auto t = euclid_trace(p, q);
        for (std::size_t i = 0; i + 1 < t.quotients.size(); ++i) EXPECT_EQ(t.quotients[i], 1);
        const auto& last = t.steps_detail.back();
        EXPECT_EQ(last.u, 2);
        EXPECT_EQ(last.v, 1);
    }
}

TEST(FibonacciWord, RewritingAndRecursion) {
    EXPECT_EQ(fib_word(0), "0");
    EXPECT_EQ(fib_word(1), "01");
    EXPECT_EQ(fib_word(5), "0100101001001");
    // The commonly printed 13-symbol fragment concatenates in the other order.
    EXPECT_EQ(fib_word(3) + fib_word(4), "0100101001010");
    for (int k = 1; k < 20; ++k) EXPECT_EQ(fib_word(k + 1).substr(0, fib_word(k).size()), fib_word(k));
    for (int k = 2; k <= 20; ++k) EXPECT_EQ(fib_word(k), fib_word(k - 1) + fib_word(k - 2));
    for (int k = 0; k <= 20; ++k) EXPECT_EQ(static_cast<std::int64_t>(fib_word(k).size()), fib_iterative(k + 1));
}

TEST(CellularAutomaton, NoBinaryLinearMapReproducesRule110) {
    for (auto arith : {Arithmetic::integer, Arithmetic::mod2}) {
        const auto rep = ca_linear_impossibility(arith);
        EXPECT_EQ(rep.candidates_checked, 512);
        EXPECT_EQ(rep.matches, 0);
        EXPECT_EQ(rep.counterexamples.size(), 512u);
        EXPECT_EQ(rep.matches, brute_force_matches(110, arith == Arithmetic::mod2));
    }
    const std::map<std::string, int> table{{"111", 0}, {"110", 1}, {"101", 1}, {"100", 0},
                                           {"011", 1}, {"010", 1}, {"001", 1}, {"000", 0}};
    EXPECT_EQ(ca_linear_impossibility(Arithmetic::integer).rule_table, table);
}

TEST(CellularAutomaton, SearchFindsLinearRules) {
    // Rule 90 is XOR of the neighbours: linear over GF(2) only.
    EXPECT_EQ(ca_linear_impossibility(Arithmetic::mod2, 90).matches, brute_force_matches(90, true));
    EXPECT_GE(ca_linear_impossibility(Arithmetic::mod2, 90).matches, 1);
    EXPECT_EQ(ca_linear_impossibility(Arithmetic::integer, 90).matches, 0);
    // Rule 204 copies the centre: the identity matches in both arithmetics.
    EXPECT_EQ(ca_linear_impossibility(Arithmetic::integer, 204).matches, 1);
    EXPECT_EQ(ca_linear_impossibility(Arithmetic::mod2, 204).matches, 1);
}

TEST(CellularAutomaton, ShiftCandidateProducesTwo) {
    const auto y = kShiftCandidate.apply({1, 1, 0});
    EXPECT_EQ(y[0], 2);
    // zero boundary: neighbourhoods 011, 110, 100
    EXPECT_EQ(ca_step(110, {1, 1, 0}), (Cells3{1, 1, 0}));
}

TEST(AlmostPeriod, DefaultSearchFindsVerifiedShift) {
    AlmostPeriodConfig cfg;
    const auto rep = almost_period_search(cfg);
    ASSERT_TRUE(rep.found);
    EXPECT_GE(rep.shift, cfg.min_shift);
    EXPECT_LT(rep.max_deviation, cfg.epsilon);
    // Recompute the deviation directly from sin on the same sample grid.
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double x = 0.05 * i;
        worst = std::max(worst, std::abs(std::sin(x + rep.shift) + std::sin(kTau * (x + rep.shift)) - std::sin(x) -
                                         std::sin(kTau * x)));
    }
    EXPECT_NEAR(worst, rep.max_deviation, 1e-9);
}

TEST(AlmostPeriod, Errors) {
    AlmostPeriodConfig cfg;
    cfg.epsilon = 0.0;
    EXPECT_EQ(code_of([&] { almost_period_search(cfg); }), errc::domain);
    cfg = {};
    cfg.shifts.step = 1.0;
    EXPECT_EQ(code_of([&] { almost_period_search(cfg); }), errc::domain);
}
