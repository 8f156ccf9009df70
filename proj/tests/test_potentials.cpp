#include "doctest.h"
#include "speclab/potentials.hpp"
#include "speclab/spectra.hpp"
#include "test_util.hpp"

using namespace speclab;

TEST_CASE("hardy potential matches its closed form at nodes") {
  PotentialSpec h;
  h.kind = PotentialKind::hardy;
  h.hardy_d = 3;
  h.coupling = 0.25;
  auto dom = DomainSpec::radial(0.5, 10, 3, 100);
  auto V = sample(h, dom);
  const AxisGeom g = axis_geom(dom, 0);
  for (int i = 0; i < dom.n; ++i) {
    const double r = g.node(i);
    CHECK(V.values[i] == doctest::Approx(0.25 / (1 + r * r)).epsilon(1e-14));
  }
  // the quoted anchor values
  CHECK(0.25 / (1 + 0.0) == doctest::Approx(0.25));
  CHECK(0.25 / (1 + 1.0) == doctest::Approx(0.125));

  PotentialSpec bad = h;
  bad.hardy_d = 2;
  CHECK_THROWS(sample(bad, dom));
  bad = h;
  bad.coupling = 0.3;  // above (d-2)^2/4
  CHECK_THROWS(sample(bad, dom));
}

TEST_CASE("zero-depth well samples to the zero field") {
  PotentialSpec w;
  w.kind = PotentialKind::well;
  w.height = 0.0;
  auto dom = DomainSpec::interval(-5, 5, 50);
  CHECK(sample(w, dom).norm_inf() == 0.0);
}

TEST_CASE("random lattice realizations are seed-deterministic") {
  PotentialSpec rl;
  rl.kind = PotentialKind::random_lattice;
  rl.height = 1.0;
  auto dom = DomainSpec::interval(-8, 8, 160);
  auto a = random_lattice_realization(rl, 7, dom);
  auto b = random_lattice_realization(rl, 7, dom);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  auto c = random_lattice_realization(rl, 7ull ^ 1ull, dom);
  CHECK((a.values - c.values).cwiseAbs().maxCoeff() > 0.0);

  SUBCASE("zero amplitude gives the zero field") {
    rl.height = 0.0;
    CHECK(random_lattice_realization(rl, 3, dom).norm_inf() == 0.0);
  }
}

TEST_CASE("random lattice empirical mean vanishes within the CLT band") {
  PotentialSpec rl;
  rl.kind = PotentialKind::random_lattice;
  rl.height = 1.0;
  auto dom = DomainSpec::interval(0, 4, 9);
  const int N = 10000;
  double mean = 0.0;
  for (int s = 0; s < N; ++s) mean += random_lattice_realization(rl, s, dom).values[3];
  mean /= N;
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("spherical average") {
  auto rect = DomainSpec::rectangle(-6, 6, -6, 6, 121);
  auto radial = DomainSpec::radial(0.5, 4.0, 2, 40);

  SUBCASE("constant field averages exactly") {
    Field V = make_field(rect);
    V.values.setConstant(2.5);
    auto Vbar = spherical_average(V, radial);
    for (int i = 0; i < Vbar.size(); ++i) CHECK(Vbar.values[i] == doctest::Approx(2.5).epsilon(1e-13));
  }

  SUBCASE("odd field averages to zero") {
    Field V = make_field(rect);
    for (int p = 0; p < V.size(); ++p) {
      const auto xy = node_coords(rect, p);
      const double r = std::hypot(xy[0], xy[1]);
      V.values[p] = r > 0 ? xy[0] / r : 0.0;
    }
    auto Vbar = spherical_average(V, radial, 128);
    CHECK(Vbar.norm_inf() <= 1e-10);
  }

  SUBCASE("radial input is reproduced up to interpolation error") {
    Field V = make_field(rect);
    for (int p = 0; p < V.size(); ++p) {
      const double r = node_abs(rect, p);
      V.values[p] = std::exp(-0.3 * r);
    }
    auto Vbar = spherical_average(V, radial);
    const AxisGeom g = axis_geom(radial, 0);
    const double h = axis_geom(rect, 0).h;
    for (int i = 0; i < radial.n; ++i)
      CHECK(std::abs(Vbar.values[i] - std::exp(-0.3 * g.node(i))) <= 2.0 * h * h);
  }

  SUBCASE("refined angular quadrature agrees to 1e-4 relative") {
    PotentialSpec b;
    b.kind = PotentialKind::smooth_bump;
    b.height = 1.0;
    b.width = 2.0;
    b.center = {1.2, -0.7};
    auto V = sample(b, rect);
    auto coarse = spherical_average(V, radial, 512);
    auto fine = spherical_average(V, radial, 5120);
    const double scale = fine.norm_inf();
    const double rel = (coarse.values - fine.values).cwiseAbs().maxCoeff() / scale;
    CHECK(rel < 1e-4);
  }

  SUBCASE("averaging is linear") {
    PotentialSpec b1, b2;
    b1.kind = b2.kind = PotentialKind::smooth_bump;
    b1.width = 1.5;
    b2.width = 2.5;
    b1.center = {2.0, 0.5};
    b2.center = {-1.0, 1.0};
    auto V1 = sample(b1, rect), V2 = sample(b2, rect);
    auto sum_then_avg = spherical_average(V1 + V2, radial, 200);
    auto avg_then_sum = spherical_average(V1, radial, 200) + spherical_average(V2, radial, 200);
    CHECK((sum_then_avg.values - avg_then_sum.values).cwiseAbs().maxCoeff() <= 1e-13);
  }

  SUBCASE("radial range must stay inside the grid") {
    CHECK_THROWS(spherical_average(make_field(rect), DomainSpec::radial(0.5, 8.0, 2, 10)));
  }
}

TEST_CASE("hardy obstruction: no negative spectrum at critical coupling") {
  PotentialSpec h;
  h.kind = PotentialKind::hardy;
  h.coupling = 0.25;
  auto dom = DomainSpec::radial(0.01, 100, 3, 4000);
  auto V = sample(h, dom);
  auto op = build_operator(dom, V, -1.0, radial_centrifugal_coefficient(3));
  CHECK(count_below(op, 0.0).count == 0);
}

TEST_CASE("single-bump binding threshold behaves as a threshold") {
  const double wstar = single_bump_binding_width(3);
  CHECK(wstar > 0.5);
  CHECK(wstar < 16.0);
  auto probe = [&](double w) {
    PotentialSpec b;
    b.kind = PotentialKind::smooth_bump;
    b.height = 1.0;
    b.width = w;
    const double rmax = std::max(4.0 * w, 4.0);
    auto dom = DomainSpec::radial(rmax * 2.5e-4, rmax, 3, 2000);
    auto op = build_operator(dom, sample(b, dom), -1.0, radial_centrifugal_coefficient(3));
    return count_below(op, 0.0).count;
  };
  CHECK(probe(wstar / 2) == 0);
  CHECK(probe(2 * wstar) >= 1);
}

TEST_CASE("molchanov generator") {
  SUBCASE("small box contains no bumps") {
    auto m = molchanov_sparse(0.5, 3.0);
    CHECK(m.spec.centers.empty());
    auto dom = DomainSpec::radial(0.05, 3.0, 3, 500);
    auto V = sample(m.spec, dom);
    CHECK(V.norm_inf() == 0.0);
    auto op = build_operator(dom, V, -1.0, radial_centrifugal_coefficient(3));
    CHECK(count_below(op, 0.0).count == 0);
  }

  SUBCASE("no negative spectrum up to R=200 while the weighted quadrature grows") {
    auto m = molchanov_sparse(0.5, 200.0);
    REQUIRE(m.spec.centers.size() >= 4);
    CHECK(m.bargmann_sum < 1.0);

    auto dom = DomainSpec::radial(0.05, 205.0, 3, 6000);
    auto V = sample(m.spec, dom);
    auto op = build_operator(dom, V, -1.0, radial_centrifugal_coefficient(3));
    CHECK(count_below(op, 0.0).count == 0);

    auto v_sqrt_inside = [&](double R) {
      Field g = make_field(dom);
      for (int i = 0; i < dom.n; ++i) {
        const double r = axis_geom(dom, 0).node(i);
        g.values[i] = r <= R ? std::sqrt(V.values[i]) : 0.0;
      }
      return integrate(g);
    };
    const double at50 = v_sqrt_inside(50), at200 = v_sqrt_inside(200);
    CHECK(at200 / at50 >= 1.5);
  }
}
