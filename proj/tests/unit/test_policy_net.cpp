#include "oracles.hpp"
#include "qppg/policy_net.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qppg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return VectorXd::NullaryExpr(n, [&] { return g(rng); });
}

// Central differences of a scalar function of the parameters.
template <typename F>
VectorXd numeric_gradient(F&& f, const VectorXd& x, double h = 1e-6) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd plus = x;
    VectorXd minus = x;
    plus(i) += h;
    minus(i) -= h;
    g(i) = (f(plus) - f(minus)) / (2 * h);
  }
  return g;
}

// Reference Bloch vector of the embedding circuit built from matrix exponentials.
Eigen::Vector3d embed_oracle(const VectorXd& obs, const VectorXd& angles) {
  const std::array<ComplexMatrix2, 3> enc = {pauli::x(), pauli::y(), pauli::z()};
  ComplexMatrix2 u = ComplexMatrix2::Identity();
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    const double a = std::clamp(std::numbers::pi * obs(i), -std::numbers::pi, std::numbers::pi);
    u = oracle::rotation_by_exponential(enc[static_cast<size_t>(i)], a) * u;
  }
  for (int l = 0; l < 2; ++l) {
    u = oracle::rotation_by_exponential(pauli::y(), angles(2 * l)) * u;
    u = oracle::rotation_by_exponential(pauli::z(), angles(2 * l + 1)) * u;
  }
  const Eigen::Vector2cd psi = u.col(0);
  const ComplexMatrix2 rho = psi * psi.adjoint();
  return {(rho * pauli::x()).trace().real(), (rho * pauli::y()).trace().real(),
          (rho * pauli::z()).trace().real()};
}

}  // namespace

TEST_CASE("policy layout lists the named layers contiguously") {
  const ParamLayout layout = ParamLayout::policy(3, 16, 5);
  const char* names[] = {"W1", "b1", "W2", "b2", "W3", "b3"};
  REQUIRE(layout.layers().size() == 6);
  Eigen::Index offset = 0;
  for (size_t i = 0; i < 6; ++i) {
    CHECK(layout.layers()[i].name == names[i]);
    CHECK(layout.layers()[i].offset == offset);
    offset += layout.layers()[i].size();
  }
  CHECK(layout.total() == offset);
  CHECK(layout.total() == 16 * 3 + 16 + 16 * 16 + 16 + 5 * 16 + 5);
  CHECK(layout.blocks().blocks().size() == 6);

  const ParamLayout hybrid = ParamLayout::policy(9, 8, 3, true);
  CHECK(hybrid.layers().size() == 10);
  CHECK(hybrid.layer("w_sigma").cols == 8);
  CHECK_THROWS_AS(hybrid.layer("nope"), std::out_of_range);
}

TEST_CASE("layer views are column-major slices") {
  const ParamLayout layout = ParamLayout::policy(2, 3, 2);
  ParamVector p = ParamVector::LinSpaced(layout.total(), 0, static_cast<double>(layout.total() - 1));
  const auto w1 = layout.view(p, "W1");
  CHECK(w1(0, 0) == 0.0);
  CHECK(w1(1, 0) == 1.0);
  CHECK(w1(0, 1) == 3.0);
}

TEST_CASE("flatten and unflatten round-trip exactly") {
  std::mt19937_64 rng(41);
  const ParamLayout layout = ParamLayout::policy(9, 7, 3, true);
  const ParamVector p = random_vector(rng, layout.total());
  CHECK(flatten(unflatten(p, layout), layout) == p);
  CHECK_THROWS_AS(unflatten(ParamVector::Zero(3), layout), std::domain_error);
}

TEST_CASE("initialization: bounded weights, zero biases, seed-deterministic") {
  const ParamLayout layout = ParamLayout::policy(3, 16, 5, true);
  Rng a(7), b(7);
  const ParamVector p = init_params(layout, a);
  CHECK(p == init_params(layout, b));
  for (const auto& l : layout.layers()) {
    const auto v = layout.view(p, l.name);
    if (l.name.front() == 'b') {
      CHECK(v.isZero(0.0));
    } else {
      CHECK(v.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(static_cast<double>(l.cols)));
      CHECK(v.cwiseAbs().maxCoeff() > 0.0);
    }
  }
}

TEST_CASE("zero parameters give the uniform distribution") {
  const ParamLayout layout = ParamLayout::policy(3, 16, 5);
  const ActionDistribution d = forward(ParamVector::Zero(layout.total()), layout, VectorXd::Ones(3));
  CHECK((d.probs - VectorXd::Constant(5, 0.2)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_FALSE(d.power.has_value());
}

TEST_CASE("softmax of (1, 1, 0, 0, 0)") {
  VectorXd logits(5);
  logits << 1, 1, 0, 0, 0;
  const VectorXd p = softmax(logits);
  const double z = 2 * std::exp(1.0) + 3;
  CHECK(std::abs(p(0) - std::exp(1.0) / z) <= 1e-15);
  CHECK(std::abs(p(1) - 0.32220) <= 5e-6);
  CHECK(std::abs(p(2) - 1.0 / z) <= 1e-15);
  CHECK(std::abs(p(4) - 0.11853) <= 5e-6);
}

TEST_CASE("softmax is shift invariant and sums to one") {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 1000; ++k) {
    const VectorXd logits = random_vector(rng, 5, 3.0);
    const VectorXd p = softmax(logits);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK((softmax(logits.array() + 17.5) - p).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("forward outputs valid distributions for random parameters") {
  std::mt19937_64 rng(43);
  const ParamLayout layout = ParamLayout::policy(9, 8, 3, true);
  for (int k = 0; k < 1000; ++k) {
    const ActionDistribution d = forward(random_vector(rng, layout.total()), layout, random_vector(rng, 9));
    CHECK(std::abs(d.probs.sum() - 1.0) <= 1e-10);
    CHECK((d.probs.array() >= 0.0).all());
    REQUIRE(d.power.has_value());
    CHECK(d.power->stddev >= kMinStd);
  }
}

TEST_CASE("softplus is stable at extremes") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) == 0.0);
}

TEST_CASE("dimension mismatches are domain errors") {
  const ParamLayout layout = ParamLayout::policy(3, 4, 2);
  const ParamVector p = ParamVector::Zero(layout.total());
  CHECK_THROWS_AS(forward(p, layout, VectorXd::Zero(4)), std::domain_error);
  CHECK_THROWS_AS(forward(ParamVector::Zero(2), layout, VectorXd::Zero(3)), std::domain_error);
  CHECK_THROWS_AS(logprob_and_grad(p, layout, VectorXd::Zero(3), {2, 0.0}), std::domain_error);
  const ParamLayout q = ParamLayout::q_head(3, 2);
  CHECK_THROWS_AS(q_forward(ParamVector::Zero(q.total()), q, VectorXd::Zero(2)), std::domain_error);
}

TEST_CASE("single-action policy has zero log-probability and gradient") {
  std::mt19937_64 rng(44);
  const ParamLayout layout = ParamLayout::policy(3, 6, 1);
  const LogProbGrad lg = logprob_and_grad(random_vector(rng, layout.total()), layout, random_vector(rng, 3), {0, 0.0});
  CHECK(lg.logp == 0.0);
  CHECK(lg.grad.isZero(0.0));
}

TEST_CASE("log-probability gradients match central finite differences") {
  std::mt19937_64 rng(45);
  struct Head {
    ParamLayout layout;
    int obs_dim;
  };
  const Head heads[] = {{ParamLayout::policy(3, 8, 5), 3}, {ParamLayout::policy(9, 8, 3, true), 9}};
  for (const auto& head : heads) {
    int checked = 0;
    double worst = 0.0;
    while (checked < 100) {
      const ParamVector p = random_vector(rng, head.layout.total(), 0.7);
      const VectorXd obs = random_vector(rng, head.obs_dim);
      std::uniform_int_distribution<int> pick(0, head.layout.shape().num_actions - 1);
      const Action a{pick(rng), random_vector(rng, 1)(0)};
      const auto logp = [&](const VectorXd& x) { return logprob_and_grad(x, head.layout, obs, a).logp; };
      const VectorXd analytic = logprob_and_grad(p, head.layout, obs, a).grad;
      const VectorXd numeric = numeric_gradient(logp, p);
      worst = std::max(worst, oracle::rel_error(analytic, numeric));
      ++checked;
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("expected score is zero") {
  std::mt19937_64 rng(46);
  const ParamLayout layout = ParamLayout::policy(3, 8, 5);
  const ParamVector p = random_vector(rng, layout.total(), 0.3);
  const VectorXd obs = random_vector(rng, 3);
  const VectorXd probs = forward(p, layout, obs).probs;

  // Exact expectation over the categorical.
  VectorXd exact = VectorXd::Zero(layout.total());
  for (int a = 0; a < 5; ++a) exact += probs(a) * logprob_and_grad(p, layout, obs, {a, 0.0}).grad;
  CHECK(exact.cwiseAbs().maxCoeff() <= 1e-12);

  // Monte Carlo with sampled actions, projected on fixed random directions.
  std::discrete_distribution<int> draw(probs.data(), probs.data() + probs.size());
  const int n = 100000;
  std::vector<VectorXd> cache;
  for (int a = 0; a < 5; ++a) cache.push_back(logprob_and_grad(p, layout, obs, {a, 0.0}).grad);
  for (int dir = 0; dir < 5; ++dir) {
    const VectorXd u = random_vector(rng, layout.total());
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < n; ++k) {
      const double v = u.dot(cache[static_cast<size_t>(draw(rng))]);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    CHECK(std::abs(mean) <= 3 * se);
  }
}

TEST_CASE("expected Gaussian-head score is zero") {
  std::mt19937_64 rng(47);
  const ParamLayout layout = ParamLayout::policy(9, 6, 3, true);
  const ParamVector p = random_vector(rng, layout.total(), 0.5);
  const VectorXd obs = random_vector(rng, 9);
  const ActionDistribution d = forward(p, layout, obs);
  std::discrete_distribution<int> draw(d.probs.data(), d.probs.data() + d.probs.size());
  std::normal_distribution<double> power(d.power->mean, d.power->stddev);
  const VectorXd u = random_vector(rng, layout.total());
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double v = u.dot(logprob_and_grad(p, layout, obs, {draw(rng), power(rng)}).grad);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) <= 3 * std::sqrt((sum_sq / n - mean * mean) / n));
}

TEST_CASE("Q head basics") {
  const ParamLayout layout = ParamLayout::q_head(3, 4);
  CHECK(q_forward(ParamVector::Zero(layout.total()), layout, VectorXd::Ones(3)).isZero(0.0));
  ParamVector p = ParamVector::LinSpaced(layout.total(), 1.0, static_cast<double>(layout.total()));
  layout.view(p, "b").setZero();
  const VectorXd q = q_forward(p, layout, VectorXd::Unit(3, 1));
  CHECK(q == VectorXd(layout.view(p, "W").col(1)));
}

TEST_CASE("TD loss gradient matches finite differences") {
  std::mt19937_64 rng(48);
  const ParamLayout layout = ParamLayout::q_head(3, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TdSample> batch;
    std::uniform_int_distribution<int> pick(0, 4);
    for (int k = 0; k < 32; ++k) batch.push_back({random_vector(rng, 3), pick(rng), random_vector(rng, 1)(0)});
    const ParamVector p = random_vector(rng, layout.total());
    const auto loss = [&](const VectorXd& x) { return td_loss_and_grad(x, layout, batch).loss; };
    CHECK(oracle::rel_error(td_loss_and_grad(p, layout, batch).grad, numeric_gradient(loss, p)) <= 1e-5);
  }
  CHECK_THROWS_AS(td_loss_and_grad(ParamVector::Zero(layout.total()), layout, {}), std::domain_error);
}

TEST_CASE("embedding of zero input with zero angles is |0>") {
  const Eigen::Vector3d b = quantum_embed(VectorXd::Zero(3), ParamVector::Zero(kEmbedParams));
  CHECK((b - Eigen::Vector3d(0, 0, 1)).norm() <= 1e-15);
}

TEST_CASE("embedding matches the matrix-exponential circuit and stays on the Bloch ball") {
  std::mt19937_64 rng(49);
  for (int k = 0; k < 500; ++k) {
    const VectorXd obs = random_vector(rng, 3, 0.8);
    const VectorXd angles = random_vector(rng, kEmbedParams, 2.0);
    const Eigen::Vector3d b = quantum_embed(obs, angles);
    CHECK((b - embed_oracle(obs, angles)).norm() <= 1e-12);
    CHECK(b.norm() <= 1.0 + 1e-12);
    CHECK(b.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("parameter-shift Jacobian agrees with finite differences") {
  std::mt19937_64 rng(50);
  for (int k = 0; k < 100; ++k) {
    const VectorXd obs = random_vector(rng, 3, 0.8);
    const VectorXd angles = random_vector(rng, kEmbedParams, 2.0);
    const MatrixXd jac = quantum_embed_jacobian(obs, angles);
    for (int c = 0; c < kEmbedParams; ++c) {
      const double h = 1e-5;
      VectorXd plus = angles, minus = angles;
      plus(c) += h;
      minus(c) -= h;
      const Eigen::Vector3d fd = (quantum_embed(obs, plus) - quantum_embed(obs, minus)) / (2 * h);
      CHECK((jac.col(c) - fd).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("encoding angles are scaled and clamped") {
  CHECK(encode_angle(0.5) == doctest::Approx(std::numbers::pi / 2));
  CHECK(encode_angle(3.0) == std::numbers::pi);
  CHECK(encode_angle(-3.0) == -std::numbers::pi);
}
