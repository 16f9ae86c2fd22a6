#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "symbatch/symbatch.hpp"

using namespace symbatch;
using namespace symbatch::analytic;

namespace {

// e^{tA} by Taylor series with scaling and squaring.
Mat2 taylor_expm(const Mat2& a, double t) {
  int squarings = 0;
  double scale = t;
  while (max_abs(scale * a) > 0.05) {
    scale *= 0.5;
    ++squarings;
  }
  const Mat2 x = scale * a;
  Mat2 term = Mat2::identity(), sum = Mat2::identity();
  for (int k = 1; k < 30; ++k) {
    term = (1.0 / k) * (term * x);
    sum = sum + term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

Mat2 generator(double gamma) { return {0.0, 1.0, -1.0, -gamma}; }

double rel_diff(const Mat2& x, const Mat2& y) { return max_abs(x - y) / std::max(max_abs(y), 1e-300); }

// Stationary variance by brute force: the noise injected over one period is
// Σ_j w_j ŷ_{b(j)} with Cov(ŷ_a, ŷ_b) = V for a = b and −V/(R−1) otherwise,
// and the stationary covariance is Σ_t Mᵗ U Mᵗᵀ summed until negligible.
struct BruteForce {
  static std::vector<std::size_t> batch_order(Strategy s, std::size_t r) {
    std::vector<std::size_t> order;
    if (s == Strategy::rm) return {0};
    for (std::size_t b = 0; b < r; ++b) order.push_back(b);
    if (s == Strategy::sms)
      for (std::size_t b = r; b-- > 0;) order.push_back(b);
    return order;
  }

  static double cov(Strategy s, std::size_t a, std::size_t b, double v, std::size_t r) {
    if (s == Strategy::rm || a == b) return v;
    return -v / static_cast<double>(r - 1);
  }

  static double momentum(Strategy s, double h, double v, double gamma, std::size_t r) {
    const Mat2 e = taylor_expm(generator(gamma), h);
    const Vec2 inj = (Mat2::identity() - e) * Vec2{1.0, 0.0};
    const auto order = batch_order(s, r);
    const std::size_t p = order.size();
    std::vector<Vec2> w(p);
    for (std::size_t j = 0; j < p; ++j) w[j] = power(e, p - 1 - j) * inj;
    Mat2 u{};
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) u = u + cov(s, order[a], order[b], v, r) * outer(w[a], w[b]);
    const Mat2 m = power(e, p);
    Mat2 x{}, term = u;
    for (int t = 0; t < 2000000 && max_abs(term) > 1e-20 * max_abs(x) + 1e-300; ++t) {
      x = x + term;
      term = m * term * m.transpose();
    }
    return x.a;
  }

  // Collecting the weights of each batch into c_b, the double sum equals
  // V R/(R−1) Σ_b (c_b − c̄)², which avoids cancellation at small h.
  static double first_order(Strategy s, double h, double v, std::size_t r) {
    const auto order = batch_order(s, r);
    const std::size_t p = order.size();
    const long double q = 1.0L - h;
    if (s == Strategy::rm) return static_cast<double>(h * h * v / (1.0L - q * q));
    std::vector<long double> c(r, 0.0L);
    for (std::size_t j = 0; j < p; ++j) c[order[j]] += h * std::pow(q, static_cast<long double>(p - 1 - j));
    long double mean = 0;
    for (auto x : c) mean += x / r;
    long double u = 0;
    for (auto x : c) u += (x - mean) * (x - mean);
    u *= v * static_cast<long double>(r) / (r - 1);
    return static_cast<double>(u / (1.0L - std::pow(q, 2.0L * p)));
  }
};

}  // namespace

TEST(ExactFlow, IdentityAtZero) {
  const Mat2 e = exact_flow(0.0, 1.0);
  EXPECT_EQ(max_abs(e - Mat2::identity()), 0.0);
}

TEST(ExactFlow, MatchesTaylorOracle) {
  for (double gamma : {0.3, 1.0, 1.9, 2.5, 3.0, 10.0})
    for (double t : {0.01, 0.5, 1.0, 4.0}) {
      EXPECT_LE(rel_diff(exact_flow(t, gamma), taylor_expm(generator(gamma), t)), 1e-12)
          << "gamma=" << gamma << " t=" << t;
    }
}

TEST(ExactFlow, FrozenHighPrecisionEntries) {
  const Mat2 e = exact_flow(1.0, 3.0);
  EXPECT_NEAR(e.a, 0.78664559930336833332, 1e-14);
  EXPECT_NEAR(e.b, 0.27260893766252905322, 1e-14);
  EXPECT_NEAR(e.c, -0.27260893766252905322, 1e-14);
  EXPECT_NEAR(e.d, -0.031181213684218826340, 1e-14);
}

TEST(ExactFlow, DeterminantAndTrace) {
  for (double gamma : {0.5, 3.0})
    for (double t : {0.1, 2.0}) {
      const Mat2 e = exact_flow(t, gamma);
      EXPECT_NEAR(e.det(), std::exp(-gamma * t), 1e-13);
      const DampedFlow flow(gamma);
      const auto tr = std::exp(t * flow.lambda_plus()) + std::exp(t * flow.lambda_minus());
      EXPECT_NEAR(e.trace(), tr.real(), 1e-13);
    }
}

TEST(ExactFlow, SemigroupProperty) {
  RngStream rng(21, 0);
  for (double gamma : {0.8, 3.0})
    for (int k = 0; k < 50; ++k) {
      const double s = 20 * rng.uniform() - 10, t = 20 * rng.uniform() - 10;
      const Mat2 es = exact_flow(s, gamma), et = exact_flow(t, gamma);
      // Rounding in the product scales with the factors, not with the result.
      const double scale = max_abs(es) * max_abs(et);
      ASSERT_LE(max_abs(es * et - exact_flow(s + t, gamma)), 1e-12 * scale) << gamma << " " << s << " " << t;
    }
}

TEST(ExactFlow, DomainErrors) {
  EXPECT_THROW(exact_flow(1.0, 2.0), DomainError);
  EXPECT_THROW(exact_flow(1.0, 0.0), DomainError);
  EXPECT_THROW(exact_flow(1.0, -1.0), DomainError);
}

TEST(Lyapunov, ResidualIsNegligible) {
  const Mat2 m = exact_flow(0.7, 1.3);
  const Mat2 q{2.0, 0.3, 0.3, 1.0};
  const Mat2 x = solve_discrete_lyapunov(m, q);
  EXPECT_LE(max_abs(x - m * x * m.transpose() - q), 1e-13 * max_abs(x));
  EXPECT_THROW(solve_discrete_lyapunov(Mat2{1.0, 0.0, 0.0, 0.5}, q), DomainError);
}

TEST(FirstOrder, RmExample) { EXPECT_NEAR(sgd_rm_mse(0.01, 1.0), 0.0050251256281407036227, 1e-17); }

TEST(FirstOrder, FrozenHighPrecisionValues) {
  EXPECT_NEAR(sgd_rr_mse(0.01, 1.0, 8), 3.0435324170607089684e-6, 1e-12 * 3.04e-6);
  EXPECT_NEAR(sgd_sms_mse(0.01, 1.0, 4), 7.1718339812771605407e-10, 1e-9 * 7.17e-10);
  EXPECT_NEAR(sgd_sms_mse(0.01, 1.0, 8), 1.0423915836190344114e-8, 1e-9 * 1.04e-8);
}

TEST(FirstOrder, MatchesBruteForceCovariance) {
  for (std::size_t r : {2u, 5u, 16u})
    for (double h : {0.2, 0.03, 0.004}) {
      for (auto s : {Strategy::rm, Strategy::rr, Strategy::sms}) {
        const double ref = BruteForce::first_order(s, h, 1.7, r);
        const double got = asymptotic_mse(Dynamics::first_order, s, {h, 1.7, r});
        EXPECT_NEAR(got, ref, 1e-9 * ref) << to_string(s) << " R=" << r << " h=" << h;
      }
    }
}

TEST(FirstOrder, ZeroVarianceGivesZero) {
  EXPECT_EQ(sgd_rm_mse(0.1, 0.0), 0.0);
  EXPECT_EQ(sgd_rr_mse(0.1, 0.0, 4), 0.0);
  EXPECT_EQ(sgd_sms_mse(0.1, 0.0, 4), 0.0);
}

TEST(FirstOrder, DomainErrors) {
  EXPECT_THROW(sgd_rm_mse(0.0, 1.0), DomainError);
  EXPECT_THROW(sgd_rm_mse(1.0, 1.0), DomainError);
  EXPECT_THROW(sgd_rm_mse(0.1, -1.0), DomainError);
  EXPECT_THROW(sgd_rr_mse(0.1, 1.0, 1), DomainError);
  EXPECT_THROW(sgd_sms_mse(0.1, 1.0, 1), DomainError);
  EXPECT_THROW(asymptotic_mse(Dynamics::first_order, Strategy::ig, {0.1, 1.0, 4}), DomainError);
}

TEST(Momentum, FrozenHighPrecisionValues) {
  EXPECT_NEAR(msgd_rm_mse(0.05, 1.0, 1.0), 0.024994793402810049429, 1e-12 * 0.025);
  EXPECT_NEAR(msgd_rr_mse(0.02, 1.0, 1.0, 8), 0.000023916784260236082029, 1e-9 * 2.39e-5);
  EXPECT_NEAR(msgd_sms_mse(0.02, 1.0, 1.0, 4), 4.4780131805777272516e-8, 1e-7 * 4.48e-8);
  EXPECT_NEAR(msgd_rm_mse(0.05, 1.0, 3.0), 0.0083316012654050394412, 1e-12 * 0.0083);
  EXPECT_NEAR(msgd_rr_mse(0.05, 1.0, 3.0, 8), 0.00010812647708613132626, 1e-9 * 1.08e-4);
  EXPECT_NEAR(msgd_sms_mse(0.05, 1.0, 3.0, 8), 0.00006297219049197647903, 1e-8 * 6.3e-5);
}

TEST(Momentum, ClosedFormsMatchBruteForce) {
  for (double gamma : {0.5, 1.0, 3.0})
    for (double h : {0.3, 0.05})
      for (std::size_t r : {2u, 8u})
        for (auto s : {Strategy::rm, Strategy::rr, Strategy::sms}) {
          const double ref = BruteForce::momentum(s, h, 1.0, gamma, r);
          const double got = asymptotic_mse(Dynamics::momentum, s, {h, 1.0, r, gamma});
          EXPECT_NEAR(got, ref, 1e-8 * ref) << to_string(s) << " gamma=" << gamma << " h=" << h << " R=" << r;
        }
}

TEST(Momentum, ClosedFormsAgreeWithCovarianceRoute) {
  for (double gamma : {0.7, 2.6})
    for (double h : {0.1, 0.01}) {
      EXPECT_NEAR(msgd_rm_mse(h, 1.0, gamma), momentum_stationary_covariance(Strategy::rm, h, 1.0, gamma, 8).a,
                  1e-9 * msgd_rm_mse(h, 1.0, gamma));
      EXPECT_NEAR(msgd_rr_mse(h, 1.0, gamma, 8), momentum_stationary_covariance(Strategy::rr, h, 1.0, gamma, 8).a,
                  1e-7 * msgd_rr_mse(h, 1.0, gamma, 8));
    }
}

TEST(Momentum, DomainErrors) {
  EXPECT_THROW(msgd_rm_mse(0.1, 1.0, 2.0), DomainError);
  EXPECT_THROW(msgd_rr_mse(0.0, 1.0, 1.0, 4), DomainError);
  EXPECT_THROW(msgd_sms_mse(0.1, -1.0, 1.0, 4), DomainError);
  EXPECT_THROW(msgd_rr_mse(0.1, 1.0, 1.0, 1), DomainError);
  EXPECT_THROW(momentum_stationary_covariance(Strategy::so, 0.1, 1.0, 1.0, 4), DomainError);
}

TEST(Momentum, ZeroVarianceGivesZero) {
  EXPECT_EQ(msgd_rm_mse(0.1, 0.0, 1.0), 0.0);
  EXPECT_EQ(msgd_rr_mse(0.1, 0.0, 1.0, 4), 0.0);
  EXPECT_EQ(msgd_sms_mse(0.1, 0.0, 1.0, 4), 0.0);
}

TEST(LeadingTerms, RatiosApproachOne) {
  struct Case {
    Dynamics dyn;
    Strategy s;
    double h;
    double tol;
  };
  const Case cases[] = {
      {Dynamics::first_order, Strategy::rm, 1e-2, 0.01},  {Dynamics::first_order, Strategy::rr, 1e-3, 0.02},
      {Dynamics::first_order, Strategy::sms, 1e-3, 0.05}, {Dynamics::momentum, Strategy::rm, 1e-3, 0.02},
      {Dynamics::momentum, Strategy::rr, 1e-3, 0.05},     {Dynamics::momentum, Strategy::sms, 1e-3, 0.05},
  };
  for (const auto& c : cases) {
    const ModelParams p{c.h, 1.0, 8, 1.0};
    EXPECT_NEAR(asymptotic_mse(c.dyn, c.s, p) / leading_term(c.dyn, c.s, p), 1.0, c.tol)
        << to_string(c.dyn) << "-" << to_string(c.s);
  }
}

TEST(LeadingTerms, OrderingAtSmallStep) {
  for (auto dyn : {Dynamics::first_order, Dynamics::momentum}) {
    const ModelParams p{1e-3, 1.0, 8, 1.0};
    EXPECT_GT(asymptotic_mse(dyn, Strategy::rm, p), asymptotic_mse(dyn, Strategy::rr, p));
    EXPECT_GT(asymptotic_mse(dyn, Strategy::rr, p), asymptotic_mse(dyn, Strategy::sms, p));
  }
}

TEST(LeadingTerms, LogLogSlopes) {
  const double expected[] = {1.0, 3.0, 5.0};
  const Strategy strategies[] = {Strategy::rm, Strategy::rr, Strategy::sms};
  for (auto dyn : {Dynamics::first_order, Dynamics::momentum})
    for (int i = 0; i < 3; ++i) {
      std::vector<std::pair<double, double>> pts;
      for (double h : logspace(1e-3, 1e-2, 6)) pts.emplace_back(h, asymptotic_mse(dyn, strategies[i], {h, 1.0, 8, 1.0}));
      EXPECT_NEAR(fit_order(pts).slope, expected[i], 0.05) << to_string(dyn) << "-" << to_string(strategies[i]);
    }
}
