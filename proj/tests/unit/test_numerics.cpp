#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "litemind/numerics/spectral.hpp"
#include "oracles.hpp"

using namespace litemind;
using oracle::cd;

namespace {

const std::vector<std::size_t> kLengths = {1, 2, 3, 4, 8, 33, 257};

double max_abs(const oracle::CMatrix& a, const ComplexTensor<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t c = 0; c < a[i].size(); ++c) {
      const std::size_t k = i * b.cols() + c;
      worst = std::max(worst, std::abs(a[i][c] - cd(b.re[k], b.im[k])));
    }
  return worst;
}

}  // namespace

TEST(ComplexMul, Fixtures) {
  EXPECT_EQ(complex_mul(std::complex<double>(1, 2), std::complex<double>(3, 4)), std::complex<double>(-5, 10));
  EXPECT_EQ(complex_mul(std::complex<double>(2.5, 0), std::complex<double>(-4, 0)), std::complex<double>(-10, 0));
  EXPECT_EQ(complex_mul(std::complex<double>(0, 1), std::complex<double>(0, 1)), std::complex<double>(-1, 0));
}

TEST(ComplexMul, AgreesWithPolarForm) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const double r1 = rng.uniform(0.1, 3), a1 = rng.uniform(-3, 3);
    const double r2 = rng.uniform(0.1, 3), a2 = rng.uniform(-3, 3);
    const auto z = complex_mul(std::polar(r1, a1), std::polar(r2, a2));
    const auto expected = std::polar(r1 * r2, a1 + a2);
    EXPECT_NEAR(z.real(), expected.real(), 1e-12);
    EXPECT_NEAR(z.imag(), expected.imag(), 1e-12);
  }
}

TEST(Dft, ConstantSignalHasOnlyDc) {
  RealTensor<double> t({2, 1}, {1, 1});
  auto X = dft_1d(t);
  EXPECT_DOUBLE_EQ(X.re[0], 2.0);
  EXPECT_DOUBLE_EQ(X.im[0], 0.0);
  EXPECT_NEAR(X.re[1], 0.0, 1e-15);
  EXPECT_NEAR(X.im[1], 0.0, 1e-15);
}

TEST(Dft, ImpulseGivesFlatSpectrum) {
  RealTensor<double> t({4, 1}, {1, 0, 0, 0});
  auto X = dft_1d(t);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(X.re[k], 1.0);
    EXPECT_DOUBLE_EQ(X.im[k], 0.0);
  }
}

TEST(Dft, MatchesNaiveSum) {
  for (std::size_t n : kLengths) {
    for (std::size_t d : {1u, 4u, 16u}) {
      auto t = oracle::random_real<double>({n, d}, 100 + n * 31 + d);
      auto X = dft_1d(t);
      auto ref = oracle::naive_dft(oracle::to_cmatrix(t));
      EXPECT_LE(max_abs(ref, X), 1e-10 * std::max<double>(1.0, std::sqrt(double(n)))) << "n=" << n << " d=" << d;
    }
  }
}

TEST(Idft, InverseOfConstantExample) {
  ComplexTensor<double> X({2, 1}, {2, 0}, {0, 0});
  auto x = idft_1d(X);
  EXPECT_DOUBLE_EQ(x.re[0], 1.0);
  EXPECT_DOUBLE_EQ(x.re[1], 1.0);
}

TEST(Idft, MatchesNaiveInverse) {
  auto X = oracle::random_complex<double>({33, 4}, 5);
  auto x = idft_1d(X);
  auto ref = oracle::naive_idft(oracle::to_cmatrix(X));
  double scale = 0;
  for (auto& row : ref)
    for (auto v : row) scale = std::max(scale, std::abs(v));
  EXPECT_LE(max_abs(ref, x) / scale, 1e-10);
}

TEST(Dft, RoundtripAllShapes) {
  for (std::size_t n : kLengths) {
    for (std::size_t d : {1u, 4u, 16u}) {
      auto t = oracle::random_real<double>({n, d}, 9 + n + d);
      auto back = take_real(idft_1d(dft_1d(t)));
      EXPECT_LE(max_abs_diff<double>(back.value.data, t.data), 1e-10) << "n=" << n;
      EXPECT_LE(back.max_imag_residue, 1e-10);
    }
  }
}

TEST(Dft, Linearity) {
  const double alpha = 1.7, beta = -0.3;
  for (std::size_t n : kLengths) {
    auto a = oracle::random_real<double>({n, 3}, 1000 + n);
    auto b = oracle::random_real<double>({n, 3}, 2000 + n);
    RealTensor<double> mix({n, 3});
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data[i] = alpha * a.data[i] + beta * b.data[i];
    auto Xa = dft_1d(a), Xb = dft_1d(b), Xm = dft_1d(mix);
    for (std::size_t i = 0; i < Xm.size(); ++i) {
      EXPECT_NEAR(Xm.re[i], alpha * Xa.re[i] + beta * Xb.re[i], 1e-12 * double(n));
      EXPECT_NEAR(Xm.im[i], alpha * Xa.im[i] + beta * Xb.im[i], 1e-12 * double(n));
    }
  }
}

TEST(Dft, HermitianSymmetryForRealInput) {
  for (std::size_t n : kLengths) {
    auto X = dft_1d(oracle::random_real<double>({n, 2}, 77 + n));
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t mirror = ((n - k) % n) * 2 + c;
        EXPECT_NEAR(X.re[k * 2 + c], X.re[mirror], 1e-10);
        EXPECT_NEAR(X.im[k * 2 + c], -X.im[mirror], 1e-10);
      }
  }
}

TEST(Dft, SinglePrecisionPath) {
  auto t = oracle::random_real<float>({257, 16}, 3);
  EXPECT_LE(parseval_gap(t), 1e-5);
  auto back = take_real(idft_1d(dft_1d(t)));
  EXPECT_LE(max_abs_diff<float>(back.value.data, t.data), 1e-4f);
}

TEST(TakeReal, ZeroImaginary) {
  ComplexTensor<double> X({3}, {1, -2, 3}, {0, 0, 0});
  auto r = take_real(X);
  EXPECT_EQ(r.value.data, (std::vector<double>{1, -2, 3}));
  EXPECT_EQ(r.max_imag_residue, 0.0);
}

TEST(TakeReal, NonHermitianSpectrumReportsResidue) {
  // A single non-DC bin without its mirror is not the spectrum of a real signal.
  ComplexTensor<double> X({4, 1}, {0, 4, 0, 0}, {0, 0, 0, 0});
  auto r = take_real(idft_1d(X));
  // x[i] = exp(2 pi j i / 4): real parts 1, 0, -1, 0; imaginary 0, 1, 0, -1.
  EXPECT_NEAR(r.value.data[0], 1.0, 1e-15);
  EXPECT_NEAR(r.value.data[2], -1.0, 1e-15);
  EXPECT_NEAR(r.max_imag_residue, 1.0, 1e-15);
}

TEST(CircularConvolve, IdentityAndShift) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_EQ(circular_convolve<double>(x, std::vector<double>{1, 0, 0, 0}), x);
  EXPECT_EQ(circular_convolve<double>(x, std::vector<double>{0, 1, 0, 0}), (std::vector<double>{4, 1, 2, 3}));
}

TEST(CircularConvolve, LengthMismatch) {
  EXPECT_THROW(circular_convolve<double>(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
}

// dft(x) (.) dft(h) == dft(x * h), for every n up to 64.
TEST(CircularConvolve, ConvolutionTheorem) {
  for (std::size_t n = 1; n <= 64; ++n) {
    auto x = oracle::random_real<double>({n}, 300 + n);
    auto h = oracle::random_real<double>({n}, 600 + n);
    auto y = circular_convolve<double>(x.data, h.data);
    auto X = dft_1d(x), H = dft_1d(h);
    auto Y = dft_1d(RealTensor<double>({n}, y));
    double scale = 0;
    for (std::size_t k = 0; k < n; ++k) scale = std::max(scale, std::abs(cd(Y.re[k], Y.im[k])));
    for (std::size_t k = 0; k < n; ++k) {
      const auto prod = complex_mul(cd(X.re[k], X.im[k]), cd(H.re[k], H.im[k]));
      EXPECT_LE(std::abs(prod - cd(Y.re[k], Y.im[k])) / scale, 1e-9) << "n=" << n << " k=" << k;
    }
  }
}

TEST(CircularConvolve, MatchesSpectralProductRoute) {
  const std::size_t n = 33;
  auto x = oracle::random_real<double>({n}, 1);
  auto h = oracle::random_real<double>({n}, 2);
  auto y = circular_convolve<double>(x.data, h.data);
  auto X = dft_1d(x), H = dft_1d(h);
  ComplexTensor<double> P({n});
  for (std::size_t k = 0; k < n; ++k) {
    const auto z = complex_mul(cd(X.re[k], X.im[k]), cd(H.re[k], H.im[k]));
    P.re[k] = z.real();
    P.im[k] = z.imag();
  }
  auto back = take_real(idft_1d(P));
  double scale = 0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  EXPECT_LE(max_abs_diff<double>(back.value.data, y) / scale, 1e-9);
}

TEST(Parseval, HandCheck) {
  RealTensor<double> t({2, 1}, {3, 4});
  EXPECT_EQ(parseval_gap(t), 0.0);
}

TEST(Parseval, ZeroTensor) {
  RealTensor<double> t({5, 3});
  EXPECT_EQ(parseval_gap(t), 0.0);
}

TEST(Parseval, AllShapes) {
  for (std::size_t n : kLengths) {
    for (std::size_t d : {1u, 4u, 16u}) {
      EXPECT_LE(parseval_gap(oracle::random_real<double>({n, d}, 41 * n + d)), 1e-12) << "n=" << n;
    }
  }
}
