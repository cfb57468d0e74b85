#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "commwidth/curve.hpp"

#include "doctest.h"

using namespace cw;

namespace {

MapPtr shift(Fiber f, double d) {
  return std::make_shared<VerticalPl>(f, Pl1d({{0.0, d}, {1.0, 1.0 + d}}));
}

// Random strictly increasing PL map of the line with positive slopes.
MapPtr random_pl(Fiber f, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nbp(1, 8);
  std::uniform_real_distribution<double> ux(-10.0, 10.0);
  std::uniform_real_distribution<double> uls(std::log(0.2), std::log(5.0));
  std::uniform_real_distribution<double> uy(-3.0, 3.0);
  int n = nbp(rng);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = ux(rng);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<std::pair<double, double>> bps;
  double y = xs[0] + uy(rng);
  bps.push_back({xs[0], y});
  for (std::size_t j = 1; j < xs.size(); ++j) {
    y += std::exp(uls(rng)) * (xs[j] - xs[j - 1]);
    bps.push_back({xs[j], y});
  }
  return std::make_shared<VerticalPl>(f, Pl1d(bps));
}

MapPtr random_bump(Fiber f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double lo = -6.0 + 8.0 * u01(rng);
  double w = 2.0 + 2.0 * u01(rng);
  const int K = (f == Fiber::Circle) ? 8 : 1;
  FiberBump::Track tr;
  for (int q = 0; q < K; ++q) {
    tr.t_in.push_back(lo + w * (0.35 + 0.3 * u01(rng)));
    tr.t_out.push_back(lo + w * (0.35 + 0.3 * u01(rng)));
  }
  return std::make_shared<FiberBump>(f, lo, lo + w, std::vector<FiberBump::Track>{tr});
}

// Random composition of orientation-preserving primitives.
MapPtr random_map(Fiber f, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nparts(1, 4);
  int n = nparts(rng);
  std::vector<MapPtr> parts;
  for (int i = 0; i < n; ++i) {
    switch (rng() % (f == Fiber::Circle ? 3u : 2u)) {
      case 0:
        parts.push_back(random_pl(f, rng));
        break;
      case 1:
        parts.push_back(random_bump(f, rng));
        break;
      default:
        parts.push_back(std::make_shared<TwistMap>(f, -0.5 + (rng() % 1000) / 1000.0));
        break;
    }
  }
  if (rng() % 4 == 0) parts.back() = invert(parts.back());
  return compose(std::move(parts));
}

}  // namespace

TEST_CASE("eval of primitive nodes") {
  CHECK(eval(*identity(Fiber::Point), {0.0, 0.5}).t == 0.5);

  VerticalPl pl(Fiber::Point, Pl1d({{0.0, 0.0}, {1.0, 2.0}}));
  CHECK(eval(pl, {0.0, 0.5}).t == doctest::Approx(1.0).epsilon(1e-15));

  TwistMap tw(Fiber::Circle, 0.25);
  Pt q = eval(tw, {0.9, 3.0});
  CHECK(q.theta == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(q.t == 3.0);
}

TEST_CASE("exact inversion of PL maps") {
  MapPtr p1 = shift(Fiber::Point, 1.0);
  CHECK(eval(*invert(p1), {0.0, 5.0}).t == doctest::Approx(4.0).epsilon(1e-15));

  VerticalPl steep(Fiber::Point, Pl1d({{0.0, 0.0}, {1.0, 3.0}}));
  CHECK(eval(*invert(std::make_shared<VerticalPl>(steep)), {0.0, 1.5}).t ==
        doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("roundtrip property over a random corpus") {
  std::mt19937_64 rng(0xC0FFEEu);
  for (int i = 0; i < 100; ++i) {
    Fiber f = (i % 2 == 0) ? Fiber::Point : Fiber::Circle;
    MapPtr m = random_map(f, rng);
    std::uniform_real_distribution<double> ut(-20.0, 20.0);
    std::uniform_real_distribution<double> uth(0.0, 1.0);
    for (int j = 0; j < 5; ++j) {
      Pt p{f == Fiber::Circle ? uth(rng) : 0.0, ut(rng)};
      Pt back = eval(*invert(m), eval(*m, p));
      CHECK(point_dist(f, back, p) < 1e-9);
    }
  }
}

TEST_CASE("monotonicity along line fibers") {
  std::mt19937_64 rng(0xBEEFu);
  for (int i = 0; i < 40; ++i) {
    MapPtr m = random_map(Fiber::Point, rng);
    double prev = eval(*m, {0.0, -15.0}).t;
    for (int j = 1; j <= 60; ++j) {
      double t = -15.0 + 30.0 * j / 60.0;
      double cur = eval(*m, {0.0, t}).t;
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("composition semantics") {
  MapPtr p1 = shift(Fiber::Point, 1.0);
  MapPtr p2 = shift(Fiber::Point, 2.0);
  CHECK(eval(*compose({p1, p2}), {0.0, 0.0}).t == doctest::Approx(3.0).epsilon(1e-15));

  CHECK(is_identity(compose_or_identity(Fiber::Point, {})));

  std::mt19937_64 rng(7u);
  MapPtr m = random_map(Fiber::Circle, rng);
  MapPtr round = compose({m, invert(m)});
  for (int j = 0; j < 50; ++j) {
    Pt p{static_cast<double>(j) / 50.0, -10.0 + 0.4 * j};
    CHECK(point_dist(Fiber::Circle, eval(*round, p), p) < 1e-9);
  }

  MapPtr a = shift(Fiber::Point, 1.0);
  MapPtr b = std::make_shared<TwistMap>(Fiber::Circle, 0.1);
  CHECK_THROWS_AS(compose({a, b}), Error);
}

TEST_CASE("level_image basics") {
  GraphCurve c = level_image(*identity(Fiber::Circle), 0.0);
  for (double v : c.values) CHECK(v == 0.0);

  // Fiberwise image: the bump carries level 0 to the sampled profile exactly
  // at its own abscissae.
  const int K = 16;
  FiberBump::Track tr;
  for (int q = 0; q < K; ++q) {
    tr.t_in.push_back(0.0);
    tr.t_out.push_back(0.3 * std::cos(2.0 * 3.14159265358979323846 * q / K));
  }
  auto bump = std::make_shared<FiberBump>(Fiber::Circle, -1.0, 1.0,
                                          std::vector<FiberBump::Track>{tr});
  GraphCurve img = level_image(*bump, 0.0);
  REQUIRE(img.res % K == 0);
  for (int q = 0; q < K; ++q) {
    double want = tr.t_out[static_cast<std::size_t>(q)];
    CHECK(img.values[static_cast<std::size_t>(q * (img.res / K))] ==
          doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("level_image rejects folded angle maps") {
  // A strong level-dependent twist over a theta-dependent level profile folds
  // the angle map of the image circle.
  FiberBump::Track tr;
  const int K = 8;
  for (int q = 0; q < K; ++q) {
    tr.t_in.push_back(0.0);
    tr.t_out.push_back((q % 2 == 0) ? 0.4 : -0.4);
  }
  auto bump = std::make_shared<FiberBump>(Fiber::Circle, -1.0, 1.0,
                                          std::vector<FiberBump::Track>{tr});
  auto twist = std::make_shared<TwistMap>(
      Fiber::Circle, std::vector<std::pair<double, double>>{{-1.0, -2.0}, {1.0, 2.0}});
  MapPtr folded = compose({twist, bump});
  CHECK_THROWS_AS(level_image(*folded, 0.0), Error);
  try {
    level_image(*folded, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == Err::GraphViolation);
  }
}

TEST_CASE("degree-1 lifts on sampled levels") {
  std::mt19937_64 rng(11u);
  MapPtr m = random_map(Fiber::Circle, rng);
  std::vector<double> off = boundary_lift(*m, 0.5, 256);
  REQUIRE(off.size() == 256);
  // The offset representation encodes Theta~(x+1) = Theta~(x) + 1 exactly;
  // the implied lift must be strictly increasing.
  for (std::size_t j = 1; j < off.size(); ++j) {
    double lo = off[j - 1] + static_cast<double>(j - 1) / 256.0;
    double hi = off[j] + static_cast<double>(j) / 256.0;
    CHECK(hi > lo);
  }
}

TEST_CASE("check_orientation") {
  CHECK(check_orientation(*shift(Fiber::Point, 1.0), Window{-50.0, 50.0}).pass);

  // Orientation-reversing PL data is rejected at construction.
  CHECK_THROWS_AS(Pl1d({{0.0, 0.0}, {1.0, -1.0}}), Error);

  std::mt19937_64 rng(21u);
  for (int i = 0; i < 20; ++i) {
    MapPtr m = random_map(Fiber::Circle, rng);
    OrientationReport rep = check_orientation(*m, Window{-20.0, 20.0});
    CHECK(rep.pass);
  }
}

TEST_CASE("sup_distance") {
  std::mt19937_64 rng(31u);
  MapPtr m = random_map(Fiber::Point, rng);
  CHECK(sup_distance(*m, *m, Window{-50.0, 50.0}, Grid{1, 100}) == 0.0);
  CHECK(sup_distance(*shift(Fiber::Point, 1.0), *shift(Fiber::Point, 1.5), Window{-50.0, 50.0},
                     Grid{1, 100}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("twist preserves levels and bumps preserve angles") {
  std::mt19937_64 rng(41u);
  MapPtr tw = std::make_shared<TwistMap>(Fiber::Circle, 0.37);
  MapPtr bp = random_bump(Fiber::Circle, rng);
  for (int j = 0; j < 50; ++j) {
    Pt p{static_cast<double>(j) / 50.0, -9.0 + 0.35 * j};
    CHECK(eval(*tw, p).t == p.t);
    CHECK(eval(*bp, p).theta == p.theta);
  }
}
