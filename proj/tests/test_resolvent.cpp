#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "hfde/errors.hpp"
#include "hfde/resolvent.hpp"
#include "hfde/special_fn.hpp"

using namespace hfde;

namespace {

Generator diag(std::vector<double> d, double mtilde = 1.0, double growth = 0.0) {
  Generator g;
  g.a = SquareMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) g.a(i, i) = d[i];
  g.mtilde = mtilde;
  g.growth = growth;
  return g;
}

Generator dense() {
  Generator g;
  g.a.resize(2, 2);
  g.a << 1.0, 0.4, -0.2, 0.6;
  return g;
}

}  // namespace

TEST_CASE("k_alpha examples") {
  const ResolventFamily classical(diag({0.7}), OrderParams{1.0, 0.0});
  CHECK(classical.k_alpha(0.8)(0, 0) == doctest::Approx(std::exp(-0.56)).epsilon(1e-14));

  const ResolventFamily free(diag({0.0}), OrderParams{0.5, 0.0});
  CHECK(free.k_alpha(0.3)(0, 0) == doctest::Approx(std::pow(0.3, -0.5) / std::tgamma(0.5)).epsilon(1e-14));
}

TEST_CASE("g_alpha_subordination examples") {
  for (double alpha : {0.4, 0.7}) {
    const ResolventFamily fam(diag({0.0, 0.0}), OrderParams{alpha, 0.0});
    const SquareMatrix g = fam.g_alpha_subordination(0.5);
    CHECK((g - SquareMatrix::Identity(2, 2) / std::tgamma(alpha)).norm() < 1e-6);
  }
  const ResolventFamily one(diag({1.3}), OrderParams{1.0, 0.0});
  CHECK(one.g_alpha_subordination(0.4)(0, 0) == doctest::Approx(std::exp(-0.52)).epsilon(1e-12));

  const ResolventFamily half(diag({1.0}), OrderParams{0.5, 0.0});
  CHECK(std::fabs(half.g_alpha_subordination(1.0)(0, 0) - ml_two(0.5, 0.5, -1.0)) < 1e-6);
}

TEST_CASE("subordination and closed form agree on a sample grid") {
  const Generator g = diag({0.5, 1.0, 2.0});
  for (double alpha : {0.4, 0.6, 0.8}) {
    const ResolventFamily fam(g, OrderParams{alpha, 0.0});
    for (double t : {0.25, 0.5, 1.0}) {
      const SquareMatrix sub = std::pow(t, alpha - 1.0) * fam.g_alpha_subordination(t);
      CHECK((sub - fam.k_alpha(t)).norm() < 1e-6);
    }
  }
}

TEST_CASE("s_alpha_beta examples") {
  const ResolventFamily rl(diag({0.8, 1.5}), OrderParams{0.6, 0.0});
  for (double t : {0.1, 0.7}) CHECK((rl.s_alpha_beta(t) - rl.k_alpha(t)).norm() == 0.0);

  const Generator d = dense();
  for (double beta : {0.0, 0.5, 1.0}) {
    const ResolventFamily fam(d, OrderParams{1.0, beta});
    const SquareMatrix ref = (-0.9 * d.a).exp();
    CHECK((fam.s_alpha_beta(0.9) - ref).norm() < 1e-10);
  }

  const ResolventFamily caputo(diag({1.0}), OrderParams{0.5, 1.0});
  CHECK(caputo.s_alpha_beta(1.0)(0, 0) == doctest::Approx(ml_one(0.5, -1.0)).epsilon(1e-13));
}

TEST_CASE("value at t = 0") {
  const SquareMatrix id = SquareMatrix::Identity(1, 1);
  CHECK(ResolventFamily(diag({1.0}), OrderParams{0.5, 1.0}).s_alpha_beta(0.0) == id);
  CHECK(ResolventFamily(diag({1.0}), OrderParams{1.0, 0.0}).s_alpha_beta(0.0) == id);
  CHECK(ResolventFamily(diag({1.0}), OrderParams{0.5, 0.0}).s_alpha_beta(0.0) == id);
  CHECK(ResolventFamily(diag({1.0}), OrderParams{0.5, 0.4}).s_alpha_beta(0.0).norm() == 0.0);
}

TEST_CASE("classical reduction matches the matrix exponential") {
  const Generator d = dense();
  const ResolventFamily fam(d, OrderParams{1.0, 0.0});
  for (double t : {0.1, 0.5, 2.0}) {
    const SquareMatrix ref = (-t * d.a).exp();
    CHECK((fam.k_alpha(t) - ref).norm() < 1e-10);
    CHECK((fam.g_alpha(t) - ref).norm() < 1e-10);
  }
}

TEST_CASE("commutation and strong continuity") {
  const ResolventFamily fam(dense(), OrderParams{0.7, 0.4});
  for (double s : {0.1, 0.4, 0.9})
    for (double t : {0.2, 0.6}) CHECK(commutation_residual(fam, s, t) <= 1e-12);

  Eigen::VectorXd x(2);
  x << 1.0, -0.5;
  for (double t : {0.3, 0.8}) {
    double prev = INFINITY;
    for (double h = 0.1; h > 1e-4; h /= 2) {
      const double d = (fam.s_alpha_beta(t + h) * x - fam.s_alpha_beta(t) * x).norm();
      CHECK(d < prev);
      prev = d;
    }
    CHECK(prev < 1e-3);
  }
}

TEST_CASE("functional equation residual") {
  const ResolventFamily fam(diag({1.0}), OrderParams{0.6, 0.3});
  CHECK(rof_axiom_residual(fam, 0.5, 0.5, 200) < 1e-14);

  const ResolventFamily zero(diag({0.0}), OrderParams{0.6, 0.3});
  CHECK(rof_axiom_residual(zero, 0.3, 0.8, 400) < 1e-6);

  const ResolventFamily semigroup(diag({1.0, 2.0}), OrderParams{1.0, 0.0});
  for (double s : {0.2, 0.7})
    for (double t : {0.4, 1.0}) CHECK(rof_axiom_residual(semigroup, s, t, 400) < 1e-6);

  // second-order convergence in the number of panels
  const ResolventFamily frac(diag({1.0}), OrderParams{0.8, 0.5});
  const double coarse = rof_axiom_residual(frac, 0.3, 0.9, 200);
  const double fine = rof_axiom_residual(frac, 0.3, 0.9, 800);
  CHECK(fine < coarse / 4.0);
}

TEST_CASE("generator limit") {
  const std::vector<double> ts{0.1, 0.01, 0.001};
  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(1, 0);

  const GeneratorLimit zero = generator_limit_residual(ResolventFamily(diag({0.0}), OrderParams{0.5, 0.5}), e1, ts);
  CHECK(zero.residual < 1e-12);

  const GeneratorLimit classical = generator_limit_residual(ResolventFamily(diag({1.0}), OrderParams{1.0, 0.0}), e1, ts);
  CHECK(classical.residual < 1e-3);

  const GeneratorLimit frac = generator_limit_residual(ResolventFamily(diag({1.0}), OrderParams{0.5, 0.5}), e1, ts);
  REQUIRE(frac.errors.size() == 3);
  CHECK(frac.errors[1] < frac.errors[0]);
  CHECK(frac.errors[2] < frac.errors[1]);
}

TEST_CASE("sup_norm_M") {
  std::vector<double> ts;
  for (int i = 0; i <= 64; ++i) ts.push_back(i / 64.0);
  CHECK(sup_norm_M(ResolventFamily(diag({0.0}), OrderParams{1.0, 0.0}), ts).m == doctest::Approx(1.0));
  CHECK(sup_norm_M(ResolventFamily(diag({1.0}), OrderParams{1.0, 0.0}), ts).m == doctest::Approx(1.0));
  const SupNorm grow = sup_norm_M(ResolventFamily(diag({-1.0}), OrderParams{1.0, 0.0}), ts);
  CHECK(grow.m == doctest::Approx(std::exp(1.0)).epsilon(1e-13));
  CHECK(grow.argmax == 1.0);
}

TEST_CASE("growth_bound_check") {
  std::vector<double> ts;
  for (int i = 0; i <= 32; ++i) ts.push_back(i / 32.0);
  CHECK(growth_bound_check(ResolventFamily(diag({1.0}), OrderParams{1.0, 0.0}), ts).holds);
  CHECK_FALSE(growth_bound_check(ResolventFamily(diag({-2.0}, 1.0, 1.0), OrderParams{1.0, 1.0}), ts).holds);
  const GrowthCheck flat = growth_bound_check(ResolventFamily(diag({0.0}), OrderParams{1.0, 0.0}), ts);
  CHECK(flat.holds);
  CHECK(flat.worst_ratio == doctest::Approx(1.0));
}

TEST_CASE("generator admissibility") {
  CHECK(check_generator(diag({0.5, 2.0})).admissible);
  CHECK_FALSE(check_generator(diag({-1.0})).admissible);
  CHECK(check_generator(diag({-1.0}, 1.0, 1.0)).admissible);
}
