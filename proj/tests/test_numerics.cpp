#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"

using namespace svytest;

TEST_SUITE("numerics") {

TEST_CASE("compensated sum recovers small terms next to large ones") {
  KahanSum s;
  s.add(1.0e16);
  for (int i = 0; i < 10; ++i) s.add(1.0);
  s.add(-1.0e16);
  CHECK(s.value() == 10.0);
}

TEST_CASE("compensated vector sum matches per-component sums") {
  KahanVec v(2);
  Vector a(2), b(2);
  a << 1e15, 1.0;
  b << 1.0, 1e15;
  v.add(a);
  v.add(b);
  v.add(-a);
  v.add(-b);
  v.add(a);
  CHECK(v.value()[0] == a[0]);
  CHECK(v.value()[1] == a[1]);
}

TEST_CASE("rng streams are deterministic and index-disjoint") {
  Rng a = Rng::stream(42, 1, 7);
  Rng b = Rng::stream(42, 1, 7);
  Rng c = Rng::stream(42, 1, 8);
  bool same = true, diff = false;
  for (int i = 0; i < 64; ++i) {
    const double va = a.uniform01();
    same = same && (va == b.uniform01());
    diff = diff || (va != c.uniform01());
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("uniform_below stays in range and covers all residues") {
  Rng r = Rng::stream(3, 0, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t v = r.uniform_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("normal draws have sane first two moments") {
  Rng r = Rng::stream(11, 0, 0);
  KahanSum s1, s2;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s1.add(z);
    s2.add(z * z);
  }
  const double mean = s1.value() / n;
  const double var = s2.value() / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("sample_wor draws sorted distinct indices and handles k == n") {
  Rng r = Rng::stream(5, 0, 0);
  std::vector<std::size_t> s;
  for (int rep = 0; rep < 50; ++rep) {
    sample_wor(r, 20, 8, s);
    CHECK(s.size() == 8);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.back() < 20);
  }
  sample_wor(r, 6, 6, s);
  for (std::size_t i = 0; i < 6; ++i) CHECK(s[i] == i);
}

TEST_CASE("sample_wor marginal inclusion is uniform") {
  Rng r = Rng::stream(17, 0, 0);
  std::vector<int> hits(10, 0);
  std::vector<std::size_t> s;
  const int reps = 40000;
  for (int rep = 0; rep < reps; ++rep) {
    sample_wor(r, 10, 3, s);
    for (std::size_t i : s) ++hits[i];
  }
  // Each unit should appear with probability 3/10; 5 sigma band.
  const double p = 0.3;
  const double sd = std::sqrt(p * (1 - p) * reps);
  for (int h : hits) CHECK(std::abs(h - p * reps) < 5 * sd);
}

TEST_CASE("strict SPD solve matches a known inverse") {
  Matrix a(2, 2);
  a << 4.0, 1.0, 1.0, 3.0;
  Vector rhs(2);
  rhs << 1.0, 2.0;
  SymSolveInfo info;
  const Vector x = solve_spd_strict(a, rhs, 1e12, &info);
  CHECK((a * x - rhs).norm() < 1e-12);
  CHECK(info.rank == 2);
  CHECK(info.cond < 10.0);
}

TEST_CASE("strict SPD solve rejects indefinite and ill-conditioned input") {
  Matrix indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  Vector rhs(2);
  rhs << 1.0, 1.0;
  CHECK_THROWS_AS(solve_spd_strict(indef, rhs, 1e12, nullptr), RankError);

  Matrix ill(2, 2);
  ill << 1.0, 1.0, 1.0, 1.0 + 1e-15;
  CHECK_THROWS_AS(solve_spd_strict(ill, rhs, 1e12, nullptr), RankError);
}

TEST_CASE("projected solve zeroes null directions instead of failing") {
  // Rank-1 matrix vv' with v = (1, 1): the rhs component along the null
  // direction (1, -1) must be discarded, not amplified.
  Matrix a(2, 2);
  a << 2.0, 2.0, 2.0, 2.0;
  Vector rhs(2);
  rhs << 3.0, 1.0;
  SymSolveInfo info;
  const Vector x = solve_sym_projected(a, rhs, 1.0, &info);
  CHECK(info.null_dim == 1);
  CHECK(info.rank == 1);
  // Solution lies in the range of a: x = (1, 1) * ((3 + 1) / 2) / (2 * 2).
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("projected solve treats below-scale eigenvalues as zero") {
  Matrix a(1, 1);
  a << 1e-9;  // tiny compared to the declared problem scale
  Vector rhs(1);
  rhs << 1.0;
  SymSolveInfo info;
  const Vector x = solve_sym_projected(a, rhs, /*abs_scale=*/1e6, &info);
  CHECK(x[0] == 0.0);
  CHECK(info.null_dim == 1);
}

TEST_CASE("hashing and 17-digit formatting are stable") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") != fnv1a64("b"));
  CHECK(format_double17(0.1) == "0.10000000000000001");
  CHECK(format_double17(1.0) == "1");
  double back = 0.0;
  const std::string t = format_double17(1.0 / 3.0);
  CHECK(svykit::detail::parse_number(t, back));
  CHECK(back == 1.0 / 3.0);
}

}  // TEST_SUITE
