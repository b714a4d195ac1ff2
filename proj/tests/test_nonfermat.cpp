#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "opn/nonfermat.hpp"

using namespace opn;
using namespace opn::nonfermat;

namespace {

std::vector<unsigned long> odd_primes_below(unsigned long n) {
  std::vector<bool> comp(n, false);
  std::vector<unsigned long> out;
  for (unsigned long i = 2; i < n; ++i) {
    if (comp[i]) continue;
    if (i > 2) out.push_back(i);
    for (unsigned long j = i * i; j < n; j += i) comp[j] = true;
  }
  return out;
}

// v_q(x^(q-1) - 1), capped at `cap`.
unsigned long level_of(unsigned long x, unsigned long q, unsigned long cap) {
  const Integer mod = ipow(Integer(q), cap);
  Integer r = powm(Integer(x), Integer(q - 1), mod) - 1;
  if (r < 0) r += mod;
  if (r == 0) return cap;
  unsigned long v = 0;
  while (mod_ui(r, q) == 0) {
    r /= q;
    ++v;
  }
  return v;
}

Integer min_int(const Integer& a, const Integer& b) { return a < b ? a : b; }

std::set<unsigned long> wieferich_between(unsigned long q, unsigned long lo, unsigned long hi) {
  std::set<unsigned long> out;
  for (unsigned long p : odd_primes_below(hi)) {
    if (p > lo && p != q && tables::wieferich_pair(q, Integer(p))) out.insert(p);
  }
  return out;
}

}  // namespace

TEST(Lifting, Examples) {
  EXPECT_EQ(lift_solutions(5, 2), (std::vector<Integer>{1, 7, 18, 24}));
  EXPECT_EQ(lift_solutions(3, 1), (std::vector<Integer>{1, 2}));
  EXPECT_THROW(lift_solutions(2, 3), std::domain_error);
  EXPECT_EQ(primitive_root(7), 3u);
  EXPECT_EQ(primitive_root(23), 5u);
}

TEST(Lifting, GroupOfOrderQMinusOne) {
  for (unsigned long q : odd_primes_below(60)) {
    for (unsigned long r = 1; r <= 6; ++r) {
      const auto sols = lift_solutions(q, r);
      const Integer mod = ipow(Integer(q), r);
      ASSERT_EQ(sols.size(), q - 1);
      std::set<Integer> set(sols.begin(), sols.end());
      ASSERT_EQ(set.size(), q - 1);
      ASSERT_TRUE(set.count(1));
      for (const auto& x : sols) {
        ASSERT_EQ(powm(x, Integer(q - 1), mod), 1) << q << "^" << r;
        for (const auto& y : sols) ASSERT_TRUE(set.count(x * y % mod));
      }
    }
  }
}

TEST(PrimeFloor, Examples) {
  CertificationStore store;
  EXPECT_EQ(lemma12_floor(3, 5, store).floor, 27);
  // Oracle: the first prime with x^2 = 1 (mod 3^5) lies above the floor.
  unsigned long first = 0;
  for (unsigned long p : odd_primes_below(2000)) {
    if (p != 3 && level_of(p, 3, 5) >= 5) {
      first = p;
      break;
    }
  }
  EXPECT_EQ(first, 487u);
  EXPECT_GE(Integer(first), lemma12_floor(3, 5, store).floor);
  EXPECT_EQ(lemma12_floor(11, 2, store).floor, 1);
  EXPECT_FALSE(lemma12_floor(11, 2, store).exception);
}

TEST(PrimeFloor, ExceptionalPrime) {
  const Integer& p = exceptional_prime();
  EXPECT_TRUE(factordb::prime_p(p));
  EXPECT_EQ(arith::valuation_of_power_minus_one(p, 6, 7), kExceptionalLevel);
  EXPECT_EQ(arith::mult_order(p, 7), 6);
  // Only a threshold above p makes the exception visible.
  CertificationStore store;
  EXPECT_FALSE(lemma12_floor(7, 43, store).exception);
  CertificationStore huge({ipow(10, 40), 1000});
  huge.insert([&] {
    Certification c;
    c.q = 7;
    c.threshold = ipow(10, 40);
    c.m = 50;
    c.has_divisible = true;
    return c;
  }());
  auto f = lemma12_floor(7, 43, huge);
  ASSERT_TRUE(f.exception);
  EXPECT_EQ(f.floor, p);
  EXPECT_FALSE(lemma12_floor(7, 44, huge).exception);
}

TEST(DivisibleFloor, Examples) {
  CertificationStore store;
  EXPECT_EQ(lemma15_floor(11, 10, store), ipow(11, 8));
  EXPECT_EQ(lemma15_floor(7, 10, store), ipow(7, 7));
  EXPECT_EQ(lemma15_floor(11, 2, store), 1);
  EXPECT_EQ(lemma15_floor(7, 3, store), 1);
  EXPECT_THROW(lemma15_floor(5, 10, store), std::domain_error);
}

TEST(Floors, MonotoneInN) {
  CertificationStore store;
  for (unsigned long q : odd_primes_below(100)) {
    Integer prev12 = 0, prev15 = 0;
    for (unsigned long n = 1; n <= 40; ++n) {
      Integer f12 = lemma12_floor(q, n, store).floor;
      EXPECT_GE(f12, prev12) << q << " " << n;
      prev12 = f12;
      if (q >= 7) {
        Integer f15 = lemma15_floor(q, n, store);
        EXPECT_GE(f15, prev15) << q << " " << n;
        prev15 = f15;
      }
    }
  }
}

TEST(Recompute, MatchesBruteForce) {
  const unsigned long T = 1000000;
  const auto primes = odd_primes_below(T);
  for (unsigned long q : odd_primes_below(100)) {
    auto c = congruence_search_recompute(q, {Integer(T), 1000});
    ASSERT_GT(ipow(Integer(q), c.m - 2), T) << q;
    ASSERT_LE(ipow(Integer(q), c.m - 3), T) << q;
    std::map<Integer, unsigned long> expect_primes, expect_div;
    for (unsigned long x : primes) {
      if (x == q) continue;
      const unsigned long L = level_of(x, q, 64);
      const unsigned long n = std::min(L, c.m);
      if (n >= 3 && Integer(x) < shifted_floor(q, n, 2, T)) expect_primes[x] = L;
    }
    if (q >= 7) {
      const unsigned long shift = divisible_shift(q);
      const unsigned long m15 = c.m + shift - 2;
      for (unsigned long x = q - 1; x < T; x += q - 1) {
        if (x <= 1 || x % q == 0) continue;
        const unsigned long L = level_of(x, q, 64);
        const unsigned long n = std::min(L, m15);
        if (Integer(x) < shifted_floor(q, n, shift, T)) expect_div[x] = L;
      }
    }
    std::map<Integer, unsigned long> got_primes, got_div;
    for (const auto& h : c.primes) got_primes[h.value] = h.level;
    for (const auto& h : c.divisible) got_div[h.value] = h.level;
    EXPECT_EQ(got_primes, expect_primes) << "q = " << q;
    EXPECT_EQ(got_div, expect_div) << "q = " << q;
    for (const auto& h : c.primes) {
      ASSERT_EQ(powm(h.value, Integer(q - 1), ipow(Integer(q), h.level)), 1);
    }
  }
}

TEST(Recompute, FloorsSoundAgainstBruteForce) {
  // No prime below the floor satisfies the congruence it excludes.
  const unsigned long T = 1000000;
  const auto primes = odd_primes_below(200000);
  CertificationStore store({Integer(T), 1000});
  for (unsigned long q : {3ul, 5ul, 7ul, 11ul, 13ul, 31ul}) {
    for (unsigned long n = 3; n <= 12; ++n) {
      auto f = lemma12_floor(q, n, store);
      for (unsigned long x : primes) {
        if (Integer(x) >= f.floor) break;
        if (x == q) continue;
        ASSERT_LT(level_of(x, q, n), n) << "q=" << q << " n=" << n << " x=" << x;
      }
    }
  }
}

TEST(Certification, TextRoundTrip) {
  auto c = congruence_search_recompute(13, {Integer(10000000), 1000});
  auto back = parse_certification(format_certification(c));
  EXPECT_EQ(back.q, c.q);
  EXPECT_EQ(back.threshold, c.threshold);
  EXPECT_EQ(back.m, c.m);
  EXPECT_EQ(format_certification(back), format_certification(c));
  EXPECT_THROW(parse_certification("bogus"), std::runtime_error);

  auto dir = std::filesystem::temp_directory_path() / "opn-test-certs";
  std::filesystem::remove_all(dir);
  CertificationStore::save(dir, c);
  CertificationStore loaded({Integer(10000000), 1000}, false);
  EXPECT_EQ(loaded.load_dir(dir), 1u);
  ASSERT_TRUE(loaded.find(13));
  EXPECT_EQ(format_certification(*loaded.get(13)), format_certification(c));
  EXPECT_THROW(loaded.get(17), std::runtime_error);
  CertificationStore other({Integer(100000000), 1000}, false);
  EXPECT_EQ(other.load_dir(dir), 0u);
}

TEST(Recompute, Idempotent) {
  CongruenceSearchConfig cfg{Integer(100000000), 1000};
  EXPECT_EQ(format_certification(congruence_search_recompute(7, cfg)),
            format_certification(congruence_search_recompute(7, cfg)));
  EXPECT_THROW(congruence_search_recompute(9, cfg), std::domain_error);
  EXPECT_THROW(congruence_search_recompute(1009, cfg), std::domain_error);
}

TEST(Wieferich, TablePairsAreComplete) {
  EXPECT_EQ(wieferich_between(3, 2, 2000000), (std::set<unsigned long>{11, 1006003}));
  EXPECT_EQ(wieferich_between(5, 2, 100000), (std::set<unsigned long>{20771, 40487}));
  EXPECT_EQ(wieferich_between(17, 2, 100000), (std::set<unsigned long>{3, 46021, 48947}));
  EXPECT_EQ(wieferich_between(7, 100, 2000000), (std::set<unsigned long>{491531}));
  EXPECT_TRUE(wieferich_between(11, 100, 2000000).empty());
  EXPECT_EQ(wieferich_between(13, 100, 2000000), (std::set<unsigned long>{863, 1747591}));
}

TEST(SigmaWitness, Lookup) {
  EXPECT_EQ(lemma16_lookup(Integer(101), 7).kind, WitnessKind::Clear);
  auto e863 = lemma16_lookup(Integer(863), 13);
  EXPECT_EQ(e863.kind, WitnessKind::Pair);
  EXPECT_EQ(e863.witnesses.size(), 2u);
  EXPECT_EQ(e863.witnesses[0], Integer("16002623839393"));
  auto e491531 = lemma16_lookup(Integer(491531), 7);
  EXPECT_EQ(e491531.kind, WitnessKind::Pair);
  ASSERT_EQ(e491531.witnesses.size(), 2u);
  for (const auto& w : e491531.witnesses) {
    EXPECT_GT(w, ipow(10, 11));
    EXPECT_EQ(arith::sigma_pp(7, 64) % w, 0);
  }
  EXPECT_THROW(lemma16_lookup(Integer(101), 5), std::domain_error);
}

TEST(NonFermatForcing, Example) {
  CertificationStore store;
  NonFermatContext c{7, 20, 0, 0, 0, 3, {}};
  auto r = prop14_analysis(c, store);
  EXPECT_TRUE(r.active);
  EXPECT_EQ(r.tau, 14);
  EXPECT_EQ(prop14_remainder(c, 1), 17);
  EXPECT_EQ(ceil_div(prop14_remainder(c, 2), 2), 10);
  EXPECT_EQ(ceil_div(prop14_remainder(c, 3), 3), 7);
  EXPECT_EQ(r.tau_prime, 7);
  EXPECT_EQ(r.m_star, 3);
  EXPECT_EQ(r.floor_on_unknown, 16807);
}

TEST(NonFermatForcing, TwoElementT) {
  CertificationStore store;
  NonFermatContext c{7, 30, 2, 1, 0, 2, {}};
  c.T.push_back({Integer(3), Integer(6), 2, 2, true});
  c.T.push_back({Integer(5), Integer(6), 1, 3, true});
  c.T.push_back({Integer(11), Integer(3), 5, 2, false});
  auto r = prop14_analysis(c, store);
  EXPECT_EQ(r.tau, 17);
  EXPECT_EQ(prop14_remainder(c, 1), 21);
  EXPECT_EQ(prop14_remainder(c, 2), 25);
  EXPECT_EQ(r.tau_prime, 13);
  EXPECT_EQ(r.m_star, 2);
  EXPECT_EQ(ceil_div(prop14_remainder(c, r.m_star), r.m_star), r.tau_prime);
}

TEST(NonFermatForcing, InactiveWhenTauNonPositive) {
  CertificationStore store;
  NonFermatContext c{7, 3, 0, 0, 0, 3, {}};
  auto r = prop14_analysis(c, store);
  EXPECT_FALSE(r.active);
  EXPECT_EQ(r.floor_on_unknown, 1);
}

TEST(NonFermatForcing, MinimizerReproducesTauPrime) {
  CertificationStore store;
  for (unsigned long n = 1; n < 60; n += 3) {
    for (long k1p = 0; k1p < 3; ++k1p) {
      for (long k2 = 1; k2 < 6; ++k2) {
        NonFermatContext c{11, n, 0, k1p, 0, k2, {}};
        auto r = prop14_analysis(c, store);
        if (!r.active) continue;
        ASSERT_EQ(ceil_div(prop14_remainder(c, r.m_star), r.m_star), r.tau_prime);
        for (long m = 1; m <= k2; ++m) ASSERT_LE(r.tau_prime, ceil_div(prop14_remainder(c, m), m));
      }
    }
  }
}

TEST(TMember, Fields) {
  auto t = make_t_member(7, 19, false);  // 19 = 5 (mod 7), order 6
  EXPECT_EQ(t.order, 6);
  EXPECT_EQ(t.sigma0_order, 4u);
  EXPECT_FALSE(t.admissible);
  EXPECT_TRUE(make_t_member(7, 13, true).admissible);  // order 2
  EXPECT_EQ(make_t_member(7, 2, false).order, 3);
}

TEST(SecondDivisorBound, Bounds) {
  CertificationStore store;
  EXPECT_EQ(prop17_bound(7, 60, 1, 2, store), ipow(10, 11));
  EXPECT_EQ(prop17_bound(11, 60, 1, 2, store), ipow(10, 11));
  // q = 7 uses the shifted floor 7^(tau' - 3).
  auto small = prop17_bound(7, 10, 1, 2, store);
  ASSERT_TRUE(small);
  EXPECT_EQ(*small, ipow(7, 7) / 6);
  auto small11 = prop17_bound(11, 10, 1, 2, store);
  ASSERT_TRUE(small11);
  EXPECT_EQ(*small11, ipow(11, 8) / 10);
  EXPECT_FALSE(prop17_bound(7, 60, 1, 1, store));
  EXPECT_FALSE(prop17_bound(7, 3, 1, 2, store));  // floor 1
  EXPECT_THROW(prop17_bound(5, 60, 1, 2, store), std::domain_error);
  // Dividing out P with a lower root.
  auto withP = prop17_bound(13, 60, 1, 3, store, Integer(1000));
  ASSERT_TRUE(withP);
  EXPECT_EQ(*withP, min_int(ipow(10, 11), Integer("1000000000000") / (12 * 1000)));
}
