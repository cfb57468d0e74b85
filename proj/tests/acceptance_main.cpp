#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <vector>

#include "commwidth/serialize.hpp"

using namespace cw;

namespace {

// Seeded corpus of random PL homeomorphisms of the line: up to 20 breakpoints
// in [-10, 10], log-uniform slopes in [0.1, 10], affine tails, and a signed
// displacement of 1..6 at the left end so the map is proper.
MapPtr make_line(int i) {
  std::mt19937_64 rng(20260823ull + static_cast<std::uint64_t>(i));
  std::uniform_int_distribution<int> nbp(0, 20);
  std::uniform_real_distribution<double> ux(-10.0, 10.0);
  std::uniform_real_distribution<double> uls(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> uoff(1.0, 6.0);
  int n = nbp(rng);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = ux(rng);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double off = uoff(rng) * (rng() % 2 ? 1.0 : -1.0);
  if (xs.empty()) xs.push_back(0.0);
  std::vector<std::pair<double, double>> bps;
  double y = xs[0] + off;
  bps.push_back({xs[0], y});
  for (std::size_t j = 1; j < xs.size(); ++j) {
    y += std::exp(uls(rng)) * (xs[j] - xs[j - 1]);
    bps.push_back({xs[j], y});
  }
  return std::make_shared<VerticalPl>(Fiber::Point, Pl1d(bps));
}

// Seeded corpus of cylinder maps: one proper vertical PL displacement plus up
// to five gentle primitives (level-dependent twists, mild vertical PL maps,
// fiber bumps) whose level images remain graphs.
MapPtr make_cyl(int i) {
  std::mt19937_64 rng(77700 + static_cast<std::uint64_t>(i));
  std::uniform_int_distribution<int> nprim(1, 6);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int n = nprim(rng);
  std::vector<MapPtr> parts;
  {
    std::uniform_real_distribution<double> uoff(1.0, 4.0);
    double off = uoff(rng) * (rng() % 2 ? 1.0 : -1.0);
    std::vector<std::pair<double, double>> bps;
    std::uniform_int_distribution<int> nbp(1, 5);
    std::uniform_real_distribution<double> ux(-5.0, 5.0);
    std::uniform_real_distribution<double> uls(std::log(0.5), std::log(2.0));
    int k = nbp(rng);
    std::vector<double> xs(static_cast<std::size_t>(k));
    for (auto& x : xs) x = ux(rng);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    double y = xs[0] + off;
    bps.push_back({xs[0], y});
    for (std::size_t j = 1; j < xs.size(); ++j) {
      y += std::exp(uls(rng)) * (xs[j] - xs[j - 1]);
      bps.push_back({xs[j], y});
    }
    parts.push_back(std::make_shared<VerticalPl>(Fiber::Circle, Pl1d(bps)));
  }
  for (int j = 1; j < n; ++j) {
    int kind = static_cast<int>(rng() % 3);
    if (kind == 0) {
      std::vector<std::pair<double, double>> abps;
      double t0 = -8.0 + 4.0 * u01(rng);
      double a = 0.0;
      for (int q = 0; q < 4; ++q) {
        abps.push_back({t0, a});
        t0 += 1.0 + 3.0 * u01(rng);
        a = 0.4 * (u01(rng) - 0.5);
      }
      parts.push_back(std::make_shared<TwistMap>(Fiber::Circle, abps));
    } else if (kind == 1) {
      std::vector<std::pair<double, double>> bps;
      std::uniform_real_distribution<double> ux(-6.0, 6.0);
      std::uniform_real_distribution<double> uls(std::log(0.7), std::log(1.4));
      std::vector<double> xs(3);
      for (auto& x : xs) x = ux(rng);
      std::sort(xs.begin(), xs.end());
      xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
      double y = xs[0];
      bps.push_back({xs[0], y});
      for (std::size_t q = 1; q < xs.size(); ++q) {
        y += std::exp(uls(rng)) * (xs[q] - xs[q - 1]);
        bps.push_back({xs[q], y});
      }
      parts.push_back(std::make_shared<VerticalPl>(Fiber::Circle, Pl1d(bps)));
    } else {
      double lo = -7.0 + 8.0 * u01(rng);
      double w = 2.0 + 2.0 * u01(rng);
      const int K = 8;
      FiberBump::Track tr;
      for (int q = 0; q < K; ++q) {
        tr.t_in.push_back(lo + w * (0.4 + 0.2 * u01(rng)));
        tr.t_out.push_back(lo + w * (0.4 + 0.2 * u01(rng)));
      }
      parts.push_back(std::make_shared<FiberBump>(Fiber::Circle, lo, lo + w,
                                                  std::vector<FiberBump::Track>{tr}));
    }
  }
  return compose_or_identity(Fiber::Circle, std::move(parts));
}

struct Instance {
  MapPtr f;
  CommutatorResult result;
};

bool g_all_pass = true;

void report(int n, const char* name, bool pass, const char* detail) {
  std::printf("criterion %d (%s): %s  %s\n", n, name, pass ? "PASS" : "FAIL", detail);
  if (!pass) g_all_pass = false;
}

double word_error(const FactorizationCertificate& cert) {
  MapPtr word = claim_word(cert);
  return sup_distance(*word, *cert.input, cert.report.window, cert.report.grid);
}

}  // namespace

int main() {
  std::vector<Instance> line;
  std::vector<Instance> cyl;
  char detail[256];

  // Criterion 1: line corpus certificates below 1e-6 with sub-second median.
  {
    bool pass = true;
    double worst = 0.0;
    std::vector<double> ms;
    for (int i = 0; i < 100; ++i) {
      MapPtr f = make_line(i);
      auto t0 = std::chrono::steady_clock::now();
      try {
        CommutatorResult r = commutator_factorization(f);
        auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        worst = std::max(worst, r.cert.report.max_error);
        if (!(r.cert.report.max_error < 1e-6)) pass = false;
        line.push_back({f, std::move(r)});
      } catch (const Error& e) {
        std::printf("  line instance %d failed: %s\n", i, e.what());
        pass = false;
      }
    }
    std::sort(ms.begin(), ms.end());
    double median = ms.empty() ? 0.0 : ms[ms.size() / 2];
    if (!(median < 1000.0)) pass = false;
    std::snprintf(detail, sizeof(detail), "instances=%zu worst_error=%.3e median_ms=%.0f",
                  line.size(), worst, median);
    report(1, "commutator reproduction, line", pass, detail);
  }

  // Criterion 2: cylinder corpus certificates below 1e-6 on the 200x200 grid;
  // GraphViolation is reported, not counted as a failure.
  {
    bool pass = true;
    double worst = 0.0;
    int graph_violations = 0;
    for (int i = 0; i < 50; ++i) {
      MapPtr f = make_cyl(i);
      try {
        CommutatorResult r = commutator_factorization(f);
        worst = std::max(worst, r.cert.report.max_error);
        if (!(r.cert.report.max_error < 1e-6)) pass = false;
        cyl.push_back({f, std::move(r)});
      } catch (const Error& e) {
        if (e.code() == Err::GraphViolation) {
          ++graph_violations;
          std::printf("  cylinder instance %d: GraphViolation (%s)\n", i, e.what());
        } else {
          std::printf("  cylinder instance %d failed: %s\n", i, e.what());
          pass = false;
        }
      }
    }
    std::snprintf(detail, sizeof(detail),
                  "instances=%zu worst_error=%.3e graph_violations=%d", cyl.size(), worst,
                  graph_violations);
    report(2, "commutator reproduction, cylinder", pass, detail);
  }

  // Criterion 3: every emitted conjugator satisfies c o sigma o c^-1 = tau at
  // 1e-6, and the closed-form translation example gives c(t) = 2t.
  {
    bool pass = true;
    double worst = 0.0;
    auto check_conj = [&](const Instance& inst) {
      MapPtr lhs = compose({inst.result.c, inst.result.cert_g.map, invert(inst.result.c)});
      VerificationReport rep =
          verify_identity(*lhs, *inst.result.cert_gf.map, inst.result.cert.report.window,
                          inst.result.cert.report.grid, 1e-6);
      worst = std::max(worst, rep.max_error);
      if (!rep.pass) pass = false;
    };
    for (const auto& inst : line) check_conj(inst);
    for (const auto& inst : cyl) check_conj(inst);

    auto cs = certify_loxodromic(
        std::make_shared<VerticalPl>(Fiber::Point, Pl1d({{0.0, 1.0}, {1.0, 2.0}})),
        std::make_shared<AffineLattice>(1.0, 0.0));
    auto ct = certify_loxodromic(
        std::make_shared<VerticalPl>(Fiber::Point, Pl1d({{0.0, 2.0}, {1.0, 3.0}})),
        std::make_shared<AffineLattice>(2.0, 0.0));
    MapPtr c = conjugator(cs, ct, 1024);
    double closed_worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      double t = static_cast<double>(k - 50) / 4.0;
      closed_worst = std::max(closed_worst, std::fabs(eval(*c, {0.0, t}).t - 2.0 * t));
    }
    if (!(closed_worst < 1e-12)) pass = false;
    std::snprintf(detail, sizeof(detail), "worst_conjugacy_error=%.3e closed_form_error=%.3e",
                  worst, closed_worst);
    report(3, "conjugacy oracle", pass, detail);
  }

  // Criterion 4: power words for t -> t+3 with exponents (2,3), (-2,3), (1,4).
  {
    bool pass = true;
    double worst = 0.0;
    MapPtr g = std::make_shared<VerticalPl>(Fiber::Point, Pl1d({{0.0, 3.0}, {1.0, 4.0}}));
    const std::vector<std::vector<i64>> cases = {{2, 3}, {-2, 3}, {1, 4}};
    for (const auto& exps : cases) {
      try {
        FactorizationCertificate cert = power_word_decomposition(g, exps);
        double err = word_error(cert);
        worst = std::max(worst, err);
        if (!(err < 1e-6)) pass = false;
        for (const auto& term : cert.terms) {
          double moved = 0.0;
          for (int j = 0; j <= 200; ++j) {
            double t = -50.0 + 0.5 * j;
            moved = std::max(moved, std::fabs(eval(*term.map, {0.0, t}).t - t));
          }
          if (!(moved > 1e-6)) pass = false;
        }
      } catch (const Error& e) {
        std::printf("  power word failed: %s\n", e.what());
        pass = false;
      }
    }
    std::snprintf(detail, sizeof(detail), "worst_word_error=%.3e", worst);
    report(4, "power words", pass, detail);
  }

  // Criterion 5: loxodromic splitting of every line corpus member below 1e-9.
  {
    bool pass = true;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      MapPtr f = make_line(i);
      try {
        auto [f1, f2] = split_loxodromic(f);
        if (!f1.dynamics.pass || !f2.dynamics.pass) pass = false;
        MapPtr prod = compose({f1.map, f2.map});
        double err = sup_distance(*prod, *f, Window{-50.0, 50.0}, Grid{1, 10000});
        worst = std::max(worst, err);
        if (!(err < 1e-9)) pass = false;
      } catch (const Error& e) {
        std::printf("  split instance %d failed: %s\n", i, e.what());
        pass = false;
      }
    }
    std::snprintf(detail, sizeof(detail), "worst_split_error=%.3e", worst);
    report(5, "loxodromic splitting", pass, detail);
  }

  // Criterion 6: g'(m_k) = m_{k+1} bit-exactly, straighteners bit-exact
  // identity outside their bands, on all corpus instances.
  {
    bool pass = true;
    auto check_exactness = [&](const MapPtr& f, int i, const char* which) {
      try {
        SuitedPtr s = build_suited(f, 0, 2);
        MapPtr gp = build_vertical_shift(s);
        for (i64 k = s->band_lo(); k <= s->band_hi(); ++k) {
          if (eval(*gp, {0.0, s->boundary(k)}).t != s->boundary(k + 1)) {
            std::printf("  %s instance %d: g' not exact at m_%lld\n", which, i,
                        static_cast<long long>(k));
            pass = false;
          }
        }
        auto h = std::make_shared<BandedProduct>(s, f, gp, CurveOptions{});
        for (i64 k = s->band_lo() + 1; k <= s->band_hi(); ++k) {
          MapPtr hk = h->band_factor(k);
          if (!hk) continue;
          double lo = s->boundary(s->band_lo());
          double hi = s->boundary(s->band_hi() + 1);
          const double probes[] = {lo - 5.0, lo - 0.25, hi + 0.25, hi + 17.0};
          for (double t : probes) {
            for (int q = 0; q < 4; ++q) {
              Pt p{0.25 * q, t};
              Pt img = eval(*hk, p);
              if (img.t != p.t || img.theta != p.theta) {
                std::printf("  %s instance %d: straightener moves an exterior point\n",
                            which, i);
                pass = false;
              }
            }
          }
        }
      } catch (const Error& e) {
        std::printf("  %s instance %d exactness check failed: %s\n", which, i, e.what());
        pass = false;
      }
    };
    for (std::size_t i = 0; i < line.size(); ++i) check_exactness(line[i].f, static_cast<int>(i), "line");
    for (std::size_t i = 0; i < cyl.size(); ++i) check_exactness(cyl[i].f, static_cast<int>(i), "cylinder");
    report(6, "exactness at the lattice", pass, "bit-exact boundary transport and supports");
  }

  // Criterion 7: 100-step iteration of 16 sample points per certificate shows
  // monotone band progress toward the declared sink.
  {
    bool pass = true;
    i64 least = 1000;
    auto check_dyn = [&](const LoxodromicCertificate& cert) {
      VerificationReport rep = verify_dynamics(cert, 100, 16);
      if (!rep.pass) pass = false;
      if (rep.pass) least = std::min(least, rep.min_progress);
    };
    for (const auto& inst : line) {
      check_dyn(inst.result.cert_g);
      check_dyn(inst.result.cert_gf);
    }
    for (const auto& inst : cyl) {
      check_dyn(inst.result.cert_g);
      check_dyn(inst.result.cert_gf);
    }
    std::snprintf(detail, sizeof(detail), "min_band_progress=%lld",
                  static_cast<long long>(least));
    report(7, "dynamics evidence", pass, detail);
  }

  // Criterion 8: byte-identical certificates on reruns.
  {
    bool pass = true;
    auto rerun_text = [](const MapPtr& f) {
      CommutatorResult r = commutator_factorization(f);
      return to_text(cert_to_json(r.cert));
    };
    if (!line.empty() &&
        to_text(cert_to_json(line[0].result.cert)) != rerun_text(line[0].f))
      pass = false;
    if (!cyl.empty() && to_text(cert_to_json(cyl[0].result.cert)) != rerun_text(cyl[0].f))
      pass = false;
    MapPtr g = std::make_shared<VerticalPl>(Fiber::Point, Pl1d({{0.0, 3.0}, {1.0, 4.0}}));
    std::string p1 = to_text(cert_to_json(power_word_decomposition(g, {2, 3})));
    std::string p2 = to_text(cert_to_json(power_word_decomposition(g, {2, 3})));
    if (p1 != p2) pass = false;
    report(8, "determinism", pass, "byte-identical reruns");
  }

  return g_all_pass ? 0 : 1;
}
