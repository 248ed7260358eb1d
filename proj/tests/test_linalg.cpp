#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "beta/linalg.hpp"

using namespace beta::linalg;
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

// Laplace expansion, independent of the LU path.
Scalar laplace_det(const Matrix& m) {
    const std::size_t n = m.rows();
    if (n == 1) return m(0, 0);
    Scalar acc{};
    for (std::size_t j = 0; j < n; ++j) {
        Matrix minor(n - 1, n - 1);
        for (std::size_t r = 1; r < n; ++r)
            for (std::size_t c = 0, cc = 0; c < n; ++c)
                if (c != j) minor(r - 1, cc++) = m(r, c);
        const double sign = j % 2 == 0 ? 1.0 : -1.0;
        acc += sign * m(0, j) * laplace_det(minor);
    }
    return acc;
}

Matrix random_hermitian(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = Scalar{g(rng), g(rng)};
    return Scalar{0.5} * (a + a.adjoint());
}

Matrix random_complex(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = Scalar{g(rng), g(rng)};
    return a;
}

}  // namespace

TEST(Eigen, FibonacciOperatorMatchesQuadraticRoots) {
    const Matrix fib{{1.0, 1.0}, {1.0, 0.0}};
    const auto pairs = eigen(fib);
    ASSERT_EQ(pairs.size(), 2u);
    // roots of x^2 - x - 1
    EXPECT_NEAR(pairs[0].value.real(), (1.0 + std::sqrt(5.0)) / 2.0, 1e-12);
    EXPECT_NEAR(pairs[1].value.real(), (1.0 - std::sqrt(5.0)) / 2.0, 1e-12);
    for (const auto& p : pairs) {
        EXPECT_NEAR(p.value.imag(), 0.0, 1e-15);
        EXPECT_LT(max_abs_diff(fib * p.vector, p.value * p.vector), 1e-12);
        EXPECT_NEAR(p.vector.norm(), 1.0, 1e-12);
    }
}

TEST(Eigen, IdentityAndRotation) {
    const auto id = eigen(Matrix::identity(2));
    EXPECT_NEAR(id[0].value.real(), 1.0, 1e-15);
    EXPECT_NEAR(id[1].value.real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(inner(id[0].vector, id[1].vector)), 0.0, 1e-12);

    const auto rot = eigen(Matrix{{0.0, -1.0}, {1.0, 0.0}});
    EXPECT_NEAR(std::abs(rot[0].value.imag()), 1.0, 1e-12);
    EXPECT_NEAR(rot[0].value.real(), 0.0, 1e-12);
}

TEST(Eigen, HermitianResidualTraceAndDeterminant) {
    std::mt19937_64 rng(11);
    for (std::size_t n = 1; n <= 7; ++n) {
        for (int rep = 0; rep < 5; ++rep) {
            const Matrix h = random_hermitian(n, rng);
            const auto pairs = eigen(h);
            ASSERT_EQ(pairs.size(), n);
            Scalar sum{}, prod{1.0};
            for (const auto& p : pairs) {
                EXPECT_LT(std::abs(p.value.imag()), 1e-10);
                EXPECT_LT(max_abs_diff(h * p.vector, p.value * p.vector), 1e-9);
                sum += p.value;
                prod *= p.value;
            }
            EXPECT_LT(std::abs(sum - h.trace()), 1e-9);
            EXPECT_LT(std::abs(prod - laplace_det(h)), 1e-8 * std::max(1.0, std::abs(prod)));
            for (std::size_t i = 1; i < n; ++i) EXPECT_GE(pairs[i - 1].value.real(), pairs[i].value.real());
        }
    }
}

TEST(Eigen, GeneralMatricesSatisfyEigenEquation) {
    std::mt19937_64 rng(5);
    for (std::size_t n = 2; n <= 6; ++n) {
        const Matrix a = random_complex(n, rng);
        for (const auto& p : eigen(a)) EXPECT_LT(max_abs_diff(a * p.vector, p.value * p.vector), 1e-9);
    }
}

TEST(Eigen, RejectsNonSquare) {
    EXPECT_EQ(code_of([] { eigen(Matrix(2, 3)); }), errc::dimension);
}

TEST(Tensor, KroneckerIndexOracle) {
    std::mt19937_64 rng(3);
    const Matrix a = random_complex(2, rng), b = random_complex(3, rng);
    const Matrix k = tensor(a, b);
    ASSERT_EQ(k.rows(), 6u);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(k(i, j), a(i / 3, j / 3) * b(i % 3, j % 3));

    const Vector u{1.0, 2.0}, v{3.0, 4.0};
    const Vector uv = tensor(u, v);
    EXPECT_EQ(uv, (Vector{3.0, 4.0, 6.0, 8.0}));
}

TEST(Tensor, CapacityError) {
    beta::set_dim_cap(8);
    EXPECT_EQ(code_of([] { tensor(Vector(4), Vector(4)); }), errc::capacity);
    beta::set_dim_cap(4096);
}

TEST(GramSchmidt, ExtendsToOrthonormalBasis) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    std::vector<Vector> basis;
    for (int k = 0; k < 5; ++k) {
        Vector v(5);
        for (std::size_t i = 0; i < 5; ++i) v[i] = Scalar{g(rng), g(rng)};
        basis.push_back(gram_schmidt_extend(basis, v));
    }
    EXPECT_TRUE(is_orthonormal(basis, 1e-12));
}

TEST(GramSchmidt, DependentVectorIsDegenerate) {
    const std::vector<Vector> basis{Vector::basis(3, 0)};
    EXPECT_EQ(code_of([&] { gram_schmidt_extend(basis, Vector{2.0, 0.0, 0.0}); }), errc::degeneracy);
    const std::vector<Vector> skew{Vector{1.0, 1.0, 0.0}};
    EXPECT_EQ(code_of([&] { gram_schmidt_extend(skew, Vector::basis(3, 0)); }), errc::domain);
}

TEST(GramSchmidt, OrthonormalRangeDropsDependentColumns) {
    const std::vector<Vector> cols{Vector{1.0, 1.0, 0.0}, Vector{2.0, 2.0, 0.0}, Vector{0.0, 0.0, 1.0}};
    const auto range = orthonormal_range(cols);
    EXPECT_EQ(range.size(), 2u);
    EXPECT_TRUE(is_orthonormal(range));
}

TEST(Polar, FibonacciFactorsReconstruct) {
    const Matrix fib{{1.0, 1.0}, {1.0, 0.0}};
    const auto f = polar(fib);
    EXPECT_LT(max_abs_diff(f.rotation * f.stretch, fib), 1e-9);
    EXPECT_LT(max_abs_diff(f.rotation.transpose() * f.rotation, Matrix::identity(2)), 1e-10);
    EXPECT_LT(max_abs_diff(f.stretch, f.stretch.transpose()), 1e-12);
    for (const auto& p : eigen(f.stretch)) EXPECT_GT(p.value.real(), 0.0);
    // Q = M S^-1 with S^2 = M^T M = [[2,1],[1,1]] gives Q11 = 1/sqrt 5.
    EXPECT_NEAR(f.rotation(0, 0).real(), 1.0 / std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(f.theta, std::acos(1.0 / std::sqrt(5.0)), 1e-12);
}

TEST(Polar, Errors) {
    EXPECT_EQ(code_of([] { polar(Matrix{{1.0, 2.0}, {2.0, 4.0}}); }), errc::numeric);
    EXPECT_EQ(code_of([] { polar(Matrix{{Scalar{1.0, 1.0}, 0.0}, {0.0, 1.0}}); }), errc::domain);
}

TEST(Entropy, KnownDistributions) {
    const std::vector<double> uniform(4, 0.25), pure{0.0, 1.0, 0.0}, half{0.5, 0.5};
    EXPECT_NEAR(von_neumann_entropy(std::span<const double>(uniform)), 2.0, 1e-15);
    EXPECT_EQ(von_neumann_entropy(std::span<const double>(pure)), 0.0);
    EXPECT_NEAR(von_neumann_entropy(std::span<const double>(half)), 1.0, 1e-15);
    const std::vector<double> bad{0.5, 0.6}, neg{1.5, -0.5};
    EXPECT_EQ(code_of([&] { von_neumann_entropy(std::span<const double>(bad)); }), errc::domain);
    EXPECT_EQ(code_of([&] { von_neumann_entropy(std::span<const double>(neg)); }), errc::domain);
}

TEST(Entropy, DensityMatrixOfBellStateAndMixture) {
    const double r = 1.0 / std::sqrt(2.0);
    const Vector bell{r, 0.0, 0.0, r};
    EXPECT_NEAR(von_neumann_entropy(Matrix::outer(bell, bell)), 0.0, 1e-10);
    EXPECT_NEAR(von_neumann_entropy(Scalar{0.25} * Matrix::identity(4)), 2.0, 1e-12);
}

TEST(Entropy, BoundsProperty) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rep % 9;
        std::vector<double> w(n);
        for (auto& x : w) x = u(rng);
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& x : w) x /= s;
        const double h = von_neumann_entropy(std::span<const double>(w));
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, std::log2(double(n)) + 1e-12);
    }
}

TEST(Composition, DirectSumAndHadamard) {
    EXPECT_EQ(direct_sum(Vector{1.0}, Vector{2.0, 3.0}), (Vector{1.0, 2.0, 3.0}));
    EXPECT_EQ(hadamard(Vector{1.0, 2.0}, Vector{3.0, 4.0}), (Vector{3.0, 8.0}));
    EXPECT_EQ(code_of([] { hadamard(Vector(2), Vector(3)); }), errc::dimension);
}

TEST(Determinant, AgreesWithLaplace) {
    std::mt19937_64 rng(23);
    for (std::size_t n = 1; n <= 6; ++n) {
        const Matrix a = random_complex(n, rng);
        EXPECT_LT(std::abs(determinant(a) - laplace_det(a)), 1e-9 * std::max(1.0, std::abs(laplace_det(a))));
    }
    EXPECT_FALSE(is_invertible(Matrix{{1.0, 2.0}, {2.0, 4.0}}));
    EXPECT_TRUE(is_invertible(Matrix{{0.0, 1.0}, {1.0, 0.0}}));
}
