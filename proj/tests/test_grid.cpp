#include "doctest.h"
#include "speclab/grid.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>
#include <cstdio>

using namespace speclab;

namespace {

Eigen::VectorXd dense_eigenvalues(const DiscreteOperator& op) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(op.matrix));
  return es.eigenvalues();
}

}  // namespace

TEST_CASE("dirichlet interval grid matches the closed-form spectrum") {
  // n=3 interior nodes on [0,1]: h = 1/4, nodes at 1/4, 1/2, 3/4
  auto spec = DomainSpec::interval(0, 1, 3);
  const AxisGeom g = axis_geom(spec, 0);
  CHECK(g.h == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.node(0) == doctest::Approx(0.25));
  CHECK(g.node(2) == doctest::Approx(0.75));

  auto op = build_operator(spec, make_field(spec), -1.0);
  auto ev = dense_eigenvalues(op);
  const double expected = 64.0 * std::pow(std::sin(M_PI / 8), 2);
  CHECK(ev[0] == doctest::Approx(expected).epsilon(1e-12));

  for (int n : {5, 17, 40}) {
    auto s = DomainSpec::interval(0, 1, n);
    auto o = build_operator(s, make_field(s), -1.0);
    auto e = dense_eigenvalues(o);
    const double h = axis_geom(s, 0).h;
    for (int k = 1; k <= n; ++k) {
      const double closed = 4.0 / (h * h) * std::pow(std::sin(k * M_PI * h / 2), 2);
      CHECK(std::abs(e[k - 1] - closed) <= 1e-10 * closed);
    }
  }
}

TEST_CASE("neumann laplacian has a flat kernel vector") {
  for (auto kind : {0, 1}) {
    DomainSpec spec = kind == 0 ? DomainSpec::interval(-2, 5, 24, Bc::neumann, Bc::neumann)
                                : DomainSpec::rectangle(0, 1, 0, 2, 9, Bc::neumann);
    auto op = build_operator(spec, make_field(spec), -1.0);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.dim());
    CHECK((op.matrix * ones).cwiseAbs().maxCoeff() <= 1e-12);
    auto ev = dense_eigenvalues(op);
    CHECK(std::abs(ev[0]) <= 1e-10);
  }
}

TEST_CASE("operators are symmetric to machine precision") {
  TestRng rng(11);
  auto check_sym = [&](const DiscreteOperator& op) {
    Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(op.matrix.transpose()) - op.matrix;
    double m = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
        m = std::max(m, std::abs(it.value()));
    CHECK(m == 0.0);
  };
  for (auto bcl : {Bc::dirichlet, Bc::neumann})
    for (auto bch : {Bc::dirichlet, Bc::neumann}) {
      auto spec = DomainSpec::interval(-1, 3, 13, bcl, bch);
      Field v = make_field(spec);
      for (int i = 0; i < v.size(); ++i) v.values[i] = rng.uniform(-2, 2);
      check_sym(build_operator(spec, v, 1.0));
    }
  auto rect = DomainSpec::rectangle(-1, 1, -1, 1, 8, Bc::neumann);
  check_sym(build_operator(rect, make_field(rect), -1.0));
  auto rad = DomainSpec::radial(0.1, 4.0, 3, 20, Bc::neumann, Bc::dirichlet);
  Field v = make_field(rad);
  for (int i = 0; i < v.size(); ++i) v.values[i] = rng.uniform(0, 1);
  check_sym(build_operator(rad, v, -1.0, radial_centrifugal_coefficient(3)));
}

TEST_CASE("quadrature weights sum to the domain volume") {
  auto rel_err = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
  for (auto bcl : {Bc::dirichlet, Bc::neumann})
    for (auto bch : {Bc::dirichlet, Bc::neumann}) {
      auto spec = DomainSpec::interval(-3, 7, 17, bcl, bch);
      Field one = make_field(spec);
      one.values.setOnes();
      CHECK(rel_err(integrate(one), 10.0) <= 1e-12);
    }
  auto rect = DomainSpec::rectangle(0, 2, -1, 1, 11);
  Field one2 = make_field(rect);
  one2.values.setOnes();
  CHECK(rel_err(integrate(one2), 4.0) <= 1e-12);

  auto rad = DomainSpec::radial(1, 2, 3, 50);
  Field oner = make_field(rad);
  oner.values.setOnes();
  CHECK(rel_err(integrate(oner), 4 * M_PI * 7.0 / 3.0) <= 1e-12);
}

TEST_CASE("weighted radial quadrature: 1/r^2 over the 3d shell 1<r<2") {
  auto rad = DomainSpec::radial(1, 2, 3, 400);
  Field one = make_field(rad);
  one.values.setOnes();
  // closed form: int_1^2 r^-2 4 pi r^2 dr = 4 pi
  CHECK(integrate(one, -2.0) == doctest::Approx(4 * M_PI).epsilon(5e-6));
}

TEST_CASE("integrate cross-checks against a refined grid within 0.1%") {
  auto coarse = DomainSpec::rectangle(-10, 10, -10, 10, 80);
  auto fine = DomainSpec::rectangle(-10, 10, -10, 10, 160);
  auto bump = [](double x, double y) {
    const double r2 = (x - 1.2) * (x - 1.2) + (y + 0.7) * (y + 0.7);
    return r2 < 9.0 ? 2.0 * std::pow(1 - r2 / 9.0, 3) : 0.0;
  };
  auto fill = [&](const DomainSpec& d) {
    Field f = make_field(d);
    for (int p = 0; p < f.size(); ++p) {
      const auto xy = node_coords(d, p);
      f.values[p] = bump(xy[0], xy[1]);
    }
    return f;
  };
  const double ic = integrate(fill(coarse)), iff = integrate(fill(fine));
  CHECK(std::abs(ic - iff) <= 1e-3 * std::abs(iff));
}

TEST_CASE("integrate rejects singular weights at an x=0 node") {
  auto spec = DomainSpec::interval(-1, 1, 21, Bc::neumann, Bc::neumann);
  bool has_zero_node = false;
  for (int p = 0; p < spec.total_nodes(); ++p)
    if (node_abs(spec, p) == 0.0) has_zero_node = true;
  if (has_zero_node) {
    Field f = make_field(spec);
    f.values.setOnes();
    CHECK_THROWS(integrate(f, -1.0));
  }
}

TEST_CASE("dirichlet_energy equals the free-stencil quadratic form on flat grids") {
  TestRng rng(5);
  for (auto bcl : {Bc::dirichlet, Bc::neumann})
    for (auto bch : {Bc::dirichlet, Bc::neumann}) {
      auto spec = DomainSpec::interval(0, 2, 33, bcl, bch);
      Field f = make_field(spec);
      for (int i = 0; i < f.size(); ++i) f.values[i] = rng.uniform(-1, 1);
      auto op = build_operator(spec, make_field(spec), -1.0);
      const double via_matrix = stencil_energy_form(op, f.values);
      CHECK(dirichlet_energy(f) == doctest::Approx(via_matrix).epsilon(1e-12));
    }
  auto rect = DomainSpec::rectangle(0, 1, 0, 1, 14);
  Field f2 = make_field(rect);
  for (int i = 0; i < f2.size(); ++i) f2.values[i] = rng.uniform(-1, 1);
  auto op2 = build_operator(rect, make_field(rect), -1.0);
  CHECK(dirichlet_energy(f2) == doctest::Approx(stencil_energy_form(op2, f2.values)).epsilon(1e-12));
}

TEST_CASE("dirichlet_energy of sin(pi x) converges to pi^2/2") {
  double prev_err = 1e9;
  for (int n : {100, 200, 400}) {
    auto spec = DomainSpec::interval(0, 1, n);
    Field f = make_field(spec);
    for (int i = 0; i < n; ++i) f.values[i] = std::sin(M_PI * axis_geom(spec, 0).node(i));
    const double err = std::abs(dirichlet_energy(f) - M_PI * M_PI / 2);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err <= 1e-4);
}

TEST_CASE("energy of the ramp profile: two length-2 ramps of slope 1/2") {
  // plateau |t|<1, ramps to zero at |t|=3; h=0.1 puts the kinks on nodes
  auto spec = DomainSpec::interval(-4, 4, 79);
  Field f = make_field(spec);
  const AxisGeom g = axis_geom(spec, 0);
  for (int i = 0; i < spec.n; ++i) {
    const double t = std::abs(g.node(i));
    f.values[i] = t < 1 ? 1.0 : (t >= 3 ? 0.0 : 1.5 - t / 2);
  }
  CHECK(dirichlet_energy(f) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("restrict_operator identity and dirichlet bracketing") {
  auto spec = DomainSpec::interval(0, 1, 39);  // h=1/40: left half is exactly 19 nodes
  Field v = make_field(spec);
  TestRng rng(17);
  for (int i = 0; i < v.size(); ++i) v.values[i] = rng.uniform(0, 3);
  auto op = build_operator(spec, v, -1.0);

  SUBCASE("full mask reproduces the operator") {
    std::vector<int> all(op.dim());
    for (int i = 0; i < op.dim(); ++i) all[i] = i;
    auto r = restrict_operator(op, all);
    CHECK((Eigen::MatrixXd(r.matrix) - Eigen::MatrixXd(op.matrix)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("empty mask throws") {
    CHECK_THROWS(restrict_operator(op, std::vector<int>{}));
  }

  SUBCASE("halving the interval quadruples the free ground energy") {
    auto free_op = build_operator(spec, make_field(spec), -1.0);
    std::vector<int> left;
    for (int i = 0; i < op.dim(); ++i)
      if (axis_geom(spec, 0).node(i) < 0.5) left.push_back(i);
    auto r = restrict_operator(free_op, left);
    const double full0 = dense_eigenvalues(free_op)[0];
    const double half0 = dense_eigenvalues(r)[0];
    CHECK(half0 / full0 == doctest::Approx(4.0).epsilon(0.02));
  }

  SUBCASE("well restricted to |x|<5 keeps its ground energy to the tunneling tail") {
    auto wide = DomainSpec::interval(-20, 20, 1600);
    Field well = make_field(wide);
    const AxisGeom gw = axis_geom(wide, 0);
    for (int i = 0; i < wide.n; ++i) well.values[i] = std::abs(gw.node(i)) < 1.0 ? 1.0 : 0.0;
    auto wop = build_operator(wide, well, -1.0);
    std::vector<int> inner;
    for (int i = 0; i < wide.n; ++i)
      if (std::abs(gw.node(i)) < 5.0) inner.push_back(i);
    auto r5 = restrict_operator(wop, inner);
    // frozen from the dense oracle: the wall at |x|=5 shifts the level by the
    // exp(-2 kappa (5-1)) tunneling tail, about 2.7e-3, and from above
    const double diff = dense_eigenvalues(r5)[0] - dense_eigenvalues(wop)[0];
    CHECK(diff >= 0.0);
    CHECK(diff <= 3e-3);
  }

  SUBCASE("100 random masks never lower the bottom eigenvalue") {
    const double bottom = dense_eigenvalues(op)[0];
    TestRng mrng(99);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<int> keep;
      for (int i = 0; i < op.dim(); ++i)
        if (mrng.u01() < 0.6) keep.push_back(i);
      if (keep.empty()) keep.push_back(mrng.index(op.dim()));
      auto r = restrict_operator(op, keep);
      CHECK(dense_eigenvalues(r)[0] >= bottom - 1e-8);
    }
  }
}

TEST_CASE("field csv round-trips bit-exactly") {
  TestRng rng(23);
  auto roundtrip = [&](const DomainSpec& spec) {
    Field f = make_field(spec);
    for (int i = 0; i < f.size(); ++i) f.values[i] = rng.uniform(-1, 1) * std::pow(10, rng.uniform(-30, 20));
    const std::string path = "/tmp/speclab_test_field.csv";
    write_field_csv(f, path);
    Field g = read_field_csv(path);
    REQUIRE(g.domain.same_grid(f.domain));
    for (int i = 0; i < f.size(); ++i) CHECK(g.values[i] == f.values[i]);
    std::remove(path.c_str());
  };
  roundtrip(DomainSpec::interval(-2.5, 7.25, 19, Bc::dirichlet, Bc::neumann));
  roundtrip(DomainSpec::rectangle(-1, 1, 0, 3, 7));
  roundtrip(DomainSpec::radial(0.125, 33.7, 3, 23, Bc::neumann, Bc::dirichlet));
}

TEST_CASE("domain validation rejects bad parameters") {
  CHECK_THROWS(DomainSpec::interval(1, 0, 5));
  CHECK_THROWS(DomainSpec::interval(0, 1, 2));
  CHECK_THROWS(DomainSpec::radial(0.0, 1, 3, 10));
  auto spec = DomainSpec::interval(0, 1, 5);
  auto other = DomainSpec::interval(0, 1, 7);
  CHECK_THROWS(build_operator(spec, make_field(other), -1.0));
  CHECK_THROWS(build_operator(spec, make_field(spec), -1.0, 0.5));  // centrifugal off radial
}
