#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "opn/arith.hpp"
#include "opn/factordb.hpp"

using namespace opn;
using arith::Exponent;

namespace {

std::vector<unsigned long> primes_upto(unsigned long n) {
  std::vector<unsigned long> out;
  for (unsigned long p = 2; p <= n; ++p) {
    bool prime = true;
    for (unsigned long d = 2; d * d <= p; ++d) {
      if (p % d == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(p);
  }
  return out;
}

// 1 + p + ... + p^a by summation.
Integer sigma_by_sum(const Integer& p, unsigned long a) {
  Integer s = 0, pk = 1;
  for (unsigned long i = 0; i <= a; ++i, pk *= p) s += pk;
  return s;
}

unsigned long divide_out(Integer n, const Integer& q) {
  unsigned long v = 0;
  while (n % q == 0) {
    n /= q;
    ++v;
  }
  return v;
}

// Integer polynomial helpers for the cyclotomic oracle; coefficient i is x^i.
using Poly = std::vector<Integer>;

Poly poly_div_exact(Poly num, const Poly& den) {
  Poly quot(num.size() - den.size() + 1, 0);
  for (std::size_t k = quot.size(); k-- > 0;) {
    Integer c = num[k + den.size() - 1] / den.back();
    quot[k] = c;
    for (std::size_t j = 0; j < den.size(); ++j) num[k + j] -= c * den[j];
  }
  return quot;
}

Poly cyclotomic_poly(unsigned long d) {
  Poly p(d + 1, 0);
  p[0] = -1;
  p[d] = 1;
  for (unsigned long e = 1; e < d; ++e) {
    if (d % e == 0) p = poly_div_exact(p, cyclotomic_poly(e));
  }
  return p;
}

Integer eval(const Poly& p, const Integer& x) {
  Integer r = 0;
  for (std::size_t i = p.size(); i-- > 0;) r = r * x + p[i];
  return r;
}

}  // namespace

TEST(Vp, Examples) {
  EXPECT_EQ(arith::vp(3, 18), 2u);
  EXPECT_EQ(arith::vp(13, 13), 1u);
  EXPECT_EQ(arith::vp(5, 12), 0u);
  EXPECT_EQ(arith::vp(7, 1), 0u);
}

TEST(MultOrder, Examples) {
  EXPECT_EQ(arith::mult_order(1, 7), 1);
  EXPECT_EQ(arith::mult_order(3, 13), 3);
  EXPECT_EQ(arith::mult_order(2, 5), 4);
  EXPECT_THROW(arith::mult_order(6, 9), std::domain_error);
}

TEST(MultOrder, AgreesWithIteration) {
  for (unsigned long d = 2; d < 300; ++d) {
    for (unsigned long c = 1; c < 40; ++c) {
      if (std::gcd(c, d) != 1) continue;
      unsigned long m = 1, x = c % d;
      while (x != 1 % d) {
        x = x * c % d;
        ++m;
      }
      ASSERT_EQ(arith::mult_order(c, d), m) << c << " mod " << d;
    }
  }
}

TEST(SigmaPP, Examples) {
  EXPECT_EQ(arith::sigma_pp(3, 2), 13);
  EXPECT_EQ(arith::sigma_pp(13, 1), 14);
  EXPECT_EQ(arith::sigma_pp(5, 4), 781);
  EXPECT_EQ(arith::sigma_pp(5, 4), 11 * 71);
  EXPECT_EQ(arith::sigma_pp(7, 0), 1);
}

TEST(Sigma0, Examples) {
  EXPECT_EQ(arith::sigma0(1), 1);
  EXPECT_EQ(arith::sigma0(12), 6);
  for (unsigned long p : primes_upto(200)) EXPECT_EQ(arith::sigma0(p), 2);
}

TEST(SigmaMinusOne, Examples) {
  EXPECT_EQ(arith::sigma_minus_one(3, Exponent::finite(2)), Rational(13, 9));
  EXPECT_EQ(arith::sigma_minus_one(7, Exponent::infinite()), Rational(7, 6));
  EXPECT_EQ(arith::sigma_minus_one(7, Exponent::finite(4)), Rational(2801, 2401));
}

TEST(Cyclotomic, Examples) {
  EXPECT_EQ(arith::cyclotomic_eval(2, 13), 14);
  EXPECT_EQ(arith::cyclotomic_eval(3, 3), 13);
  Integer prod = 1;
  for (unsigned long d : {2ul, 3ul, 6ul}) prod *= arith::cyclotomic_eval(d, 5);
  EXPECT_EQ(prod, arith::sigma_pp(5, 5));
}

TEST(Cyclotomic, MatchesPolynomialDivision) {
  for (unsigned long d = 1; d <= 30; ++d) {
    Poly phi = cyclotomic_poly(d);
    for (unsigned long p : primes_upto(50)) ASSERT_EQ(arith::cyclotomic_eval(d, p), eval(phi, p)) << d << ", " << p;
  }
}

TEST(Cyclotomic, SigmaFactorsIntoCyclotomicValues) {
  for (unsigned long p : primes_upto(50)) {
    for (unsigned long n = 1; n <= 30; ++n) {
      Integer prod = 1;
      for (unsigned long d : arith::divisors(n)) {
        if (d > 1) prod *= eval(cyclotomic_poly(d), p);
      }
      ASSERT_EQ(arith::sigma_pp(p, n - 1), prod) << p << ", " << n;
      ASSERT_EQ(sigma_by_sum(p, n - 1), prod);
    }
  }
}

TEST(SigmaValuation, Examples) {
  EXPECT_EQ(arith::sigma_valuation(13, 3, 2), 1u);
  EXPECT_EQ(arith::sigma_valuation(7, 13, 1), 1u);
  EXPECT_EQ(arith::sigma_valuation(5, 3, 2), 0u);
  EXPECT_THROW(arith::sigma_valuation(7, 7, 2), std::domain_error);
}

TEST(SigmaValuation, BruteForceOracle) {
  const auto odd = [] {
    auto v = primes_upto(100);
    v.erase(v.begin());
    return v;
  }();
  for (unsigned long q : odd) {
    for (unsigned long p : odd) {
      if (p == q) continue;
      for (unsigned long a = 1; a <= 60; ++a) {
        ASSERT_EQ(arith::sigma_valuation(q, p, a), divide_out(sigma_by_sum(p, a), q))
            << "q=" << q << " p=" << p << " a=" << a;
      }
    }
  }
}

TEST(ForcedDistinctFactors, Examples) {
  EXPECT_EQ(arith::forced_distinct_factors(3, 4), 1u);
  EXPECT_EQ(arith::forced_distinct_factors(5, 5), 3u);
  for (unsigned long p : primes_upto(60)) EXPECT_EQ(arith::forced_distinct_factors(p, 1), 1u);
}

TEST(ForcedDistinctFactors, LowerBoundsOddPrimeCount) {
  for (unsigned long p : primes_upto(50)) {
    if (p == 2) continue;
    for (unsigned long a = 2; a <= 20; a += 2) {
      auto f = factordb::factor(arith::sigma_pp(p, a));
      std::size_t count = 0;
      for (const auto& pf : f.factors) count += pf.prime != 2 ? 1 : 0;
      if (!f.complete()) ++count;  // an unsplit cofactor holds at least one prime
      ASSERT_GE(count, arith::forced_distinct_factors(p, a)) << p << "^" << a;
    }
  }
}

TEST(SigmaMinusOne, MonotonicityGrid) {
  auto ps = primes_upto(1000);
  ps.erase(ps.begin());
  std::vector<std::vector<Rational>> val(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (unsigned long a = 1; a < 20; ++a) val[i].push_back(arith::sigma_minus_one(ps[i], Exponent::finite(a)));
    val[i].push_back(arith::sigma_minus_one(ps[i], Exponent::infinite()));
    for (std::size_t j = 0; j + 1 < val[i].size(); ++j) {
      ASSERT_LT(val[i][j], val[i][j + 1]) << ps[i];
      ASSERT_EQ(gcd(val[i][j].get_num(), val[i][j].get_den()), 1);
    }
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      for (const auto& small : val[j]) {
        for (const auto& big : val[i]) ASSERT_LT(small, big) << ps[i] << " < " << ps[j];
      }
    }
  }
}
