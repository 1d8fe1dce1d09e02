#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "classim/model_search.hpp"
#include "classim/witness.hpp"
#include "oracles.hpp"

using namespace classim;

namespace {

std::vector<std::vector<CMatrix>> as_nested(const ScoreOperators& ops) {
  std::vector<std::vector<CMatrix>> o(static_cast<std::size_t>(ops.settings()));
  for (int x = 0; x < ops.settings(); ++x) {
    for (int a = 0; a < ops.outcomes(); ++a) o[static_cast<std::size_t>(x)].push_back(ops(a, x));
  }
  return o;
}

WitnessSpec random_spec(int d, int n, int o, int states, std::mt19937_64& rng) {
  std::vector<CMatrix> rho;
  for (int z = 0; z < states; ++z) {
    CMatrix r = oracle::random_psd(d, rng);
    rho.push_back(r / r.trace().real());
  }
  WitnessSpec spec(o, n, StateEnsemble(rho));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int a = 0; a < o; ++a) {
    for (int z = 0; z < states; ++z) {
      for (int x = 0; x < n; ++x) spec.set(a, z, x, u(rng));
    }
  }
  return spec;
}

}  // namespace

TEST(WitnessValue, StateDiscrimination) {
  EXPECT_NEAR(witness_value(state_discrimination_spec(mub_set(2, 2)), mub_set(2, 2)), 4.0, 1e-12);
  EXPECT_NEAR(witness_value(state_discrimination_spec(mub_set(2, 3)), mub_set(2, 3)), 6.0, 1e-12);
  const auto sic = sic_five_tetrahedra();
  EXPECT_NEAR(witness_value(state_discrimination_spec(sic), sic), 10.0, 1e-12);
}

TEST(WitnessValue, ZeroCoefficients) {
  const auto m = mub_set(2, 2);
  const WitnessSpec spec(2, 2, discrimination_ensemble(m));
  EXPECT_EQ(witness_value(spec, m), 0.0);
}

TEST(WitnessValue, AffineInVisibility) {
  const auto m = mub_set(2, 2);
  const auto spec = state_discrimination_spec(m);
  EXPECT_NEAR(witness_value(spec, depolarize(m, 1.0 / std::sqrt(2.0))), 2.0 + std::sqrt(2.0), 1e-9);
}

TEST(WitnessValue, RejectsShapeMismatch) {
  EXPECT_THROW(witness_value(state_discrimination_spec(mub_set(2, 2)), mub_set(2, 3)), StructuralError);
  EXPECT_THROW(witness_value(state_discrimination_spec(mub_set(2, 2)), mub_set(3, 2)), StructuralError);
}

TEST(WitnessSpecTest, RejectsBadCoefficients) {
  WitnessSpec spec(2, 2, discrimination_ensemble(mub_set(2, 2)));
  EXPECT_THROW(spec.set(2, 0, 0, 1.0), StructuralError);
  EXPECT_THROW(spec.set(0, 0, 0, std::nan("")), StructuralError);
}

TEST(ScoreOperatorsTest, DeltaContraction) {
  const auto m = mub_set(2, 2);
  const auto ops = score_operators(state_discrimination_spec(m));
  for (int x = 0; x < 2; ++x) {
    for (int a = 0; a < 2; ++a) EXPECT_LE(max_abs(ops(a, x) - m(x, a)), 1e-12);
  }
}

TEST(ScoreOperatorsTest, ZeroAndRandom) {
  const auto zero = score_operators(WitnessSpec(2, 2, discrimination_ensemble(mub_set(2, 2))));
  EXPECT_EQ(max_abs(zero(1, 1)), 0.0);
  std::mt19937_64 rng(3);
  const auto ops = score_operators(random_spec(3, 2, 3, 4, rng));
  for (int x = 0; x < 2; ++x) {
    for (int a = 0; a < 3; ++a) EXPECT_LE(hermiticity_residual(ops(a, x)), 1e-12);
  }
}

TEST(QubitBeta, MubClosedForms) {
  const auto b2 = qubit_beta(score_operators(state_discrimination_spec(mub_set(2, 2))));
  EXPECT_NEAR(b2.beta, 2.0 + std::sqrt(2.0), 1e-12);
  EXPECT_EQ(b2.strategies, 16u);
  EXPECT_EQ(b2.covered, 16u);
  const auto b3 = qubit_beta(score_operators(state_discrimination_spec(mub_set(2, 3))));
  EXPECT_NEAR(b3.beta, 3.0 + std::sqrt(3.0), 1e-12);
}

TEST(QubitBeta, FiveTetrahedraExactValue) {
  // Value implied by the fixed vertex partition; see README for the comparison.
  const auto sic = sic_five_tetrahedra();
  const auto b = qubit_beta(score_operators(state_discrimination_spec(sic)));
  EXPECT_EQ(b.strategies, 1048576u);
  EXPECT_EQ(b.covered, 1048576u);
  EXPECT_NEAR(b.beta, 5.0 + std::sqrt(25.0 + 10.0 * std::sqrt(5.0)) / std::sqrt(3.0), 1e-9);
}

TEST(QubitBeta, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const int n = 1 + t % 3, o = 2 + t % 2;
    const auto ops = score_operators(random_spec(2, n, o, 3, rng));
    const auto b = qubit_beta(ops);
    EXPECT_NEAR(b.beta, oracle::qubit_bound_brute_force(as_nested(ops)), 1e-10);
    // The reported strategy attains the value.
    const CMatrix c0 = ops.strategy_operator(b.strategy, 0);
    const CMatrix c1 = ops.strategy_operator(b.strategy, 1);
    EXPECT_NEAR(c1.trace().real() + max_eigenvalue(c0 - c1), b.beta, 1e-10);
  }
}

TEST(QubitBeta, InvariantUnderConjugation) {
  std::mt19937_64 rng(23);
  const auto ops = score_operators(random_spec(2, 2, 3, 3, rng));
  Rng hr = make_stream(1, "conj");
  const CMatrix u = haar_unitary(2, hr).matrix();
  ScoreOperators rotated(2, 2, 3);
  for (int x = 0; x < 2; ++x) {
    for (int a = 0; a < 3; ++a) rotated.set(a, x, u * ops(a, x) * u.adjoint());
  }
  EXPECT_NEAR(qubit_beta(rotated).beta, qubit_beta(ops).beta, 1e-10);
}

TEST(QubitBeta, RejectsQutrit) {
  EXPECT_THROW(qubit_beta(score_operators(state_discrimination_spec(mub_set(3, 2)))), InvalidArgument);
}

TEST(SdpStrategyBound, ConstantOperators) {
  const int d = 3, n = 2, o = 2;
  ScoreOperators ops(d, n, o);
  for (int x = 0; x < n; ++x) {
    for (int a = 0; a < o; ++a) ops.set(a, x, 0.7 * CMatrix::Identity(d, d) / d);
  }
  const auto g = DeterministicStrategy::from_index(37, n, d, o);
  EXPECT_NEAR(sdp_strategy_bound(ops, g).value, n * 0.7, 1e-7);
}

TEST(SdpStrategyBound, DominatesQubitExact) {
  const auto ops = score_operators(state_discrimination_spec(mub_set(2, 2)));
  const auto exact = qubit_beta(ops);
  EXPECT_GE(sdp_strategy_bound(ops, exact.strategy).value, 2.0 + std::sqrt(2.0) - 1e-6);
}

TEST(SdpStrategyBound, RejectsShapeMismatch) {
  const auto ops = score_operators(state_discrimination_spec(mub_set(2, 2)));
  EXPECT_THROW(sdp_strategy_bound(ops, DeterministicStrategy(2, 3, 2)), StructuralError);
}

TEST(BetaUpper, QutritMubs) {
  const auto m = mub_set(3, 2);
  const auto spec = state_discrimination_spec(m);
  const auto b = beta_upper(score_operators(spec));
  EXPECT_FALSE(b.exact);
  EXPECT_EQ(b.strategies, 729u);
  EXPECT_EQ(b.covered, 729u);
  EXPECT_LT(b.distinct, 729u);
  EXPECT_NEAR(b.beta, 14.0 / 3.0, 3e-3);
  const auto cv = critical_visibility(spec, m, b.beta);
  EXPECT_TRUE(cv.violated);
  EXPECT_NEAR(cv.v, 2.0 / 3.0, 1e-3);
}

TEST(BetaUpper, QubitDelegatesToExact) {
  const auto b = beta_upper(score_operators(state_discrimination_spec(mub_set(2, 2))));
  EXPECT_TRUE(b.exact);
  EXPECT_NEAR(b.beta, 2.0 + std::sqrt(2.0), 1e-12);
}

TEST(BetaUpper, RelaxationDominatesExact) {
  std::mt19937_64 rng(31);
  BetaOptions opt;
  opt.force_sdp = true;
  for (int t = 0; t < 20; ++t) {
    const auto ops = score_operators(random_spec(2, 2, 2, 3, rng));
    const auto relaxed = beta_upper(ops, opt);
    EXPECT_EQ(relaxed.covered, 16u);
    EXPECT_GE(relaxed.beta, qubit_beta(ops).beta - 1e-7);
  }
}

TEST(BetaUpper, CommutingSetSaturates) {
  CMatrix p0 = CMatrix::Zero(3, 3), p1 = CMatrix::Zero(3, 3);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  p1(2, 2) = 1.0;
  const MeasurementSet m({{p0, p1}});
  WitnessSpec spec(2, 1, StateEnsemble({p0, p1 / 2.0}));
  spec.set(0, 0, 0, 1.0);
  spec.set(1, 1, 0, 1.0);
  const auto ops = score_operators(spec);
  const auto b = beta_upper(ops);
  EXPECT_NEAR(b.beta, witness_value(spec, m), 1e-7);
  EXPECT_FALSE(critical_visibility(spec, m, b.beta).violated);
}

TEST(BetaUpper, GuardNamesTheCount) {
  const auto ops = score_operators(state_discrimination_spec(mub_set(5, 2)));
  try {
    beta_upper(ops);
    FAIL() << "expected GuardError";
  } catch (const GuardError& e) {
    EXPECT_NE(std::string(e.what()).find("5^(2*5)"), std::string::npos) << e.what();
  }
}

TEST(CriticalVisibility, QubitSets) {
  for (int count : {2, 3}) {
    const auto m = mub_set(2, count);
    const auto spec = state_discrimination_spec(m);
    const auto cv = critical_visibility(spec, m, qubit_beta(score_operators(spec)).beta);
    EXPECT_TRUE(cv.violated);
    EXPECT_NEAR(cv.v, 1.0 / std::sqrt(static_cast<double>(count)), 1e-12);
  }
}

TEST(CriticalVisibility, NoViolationFlag) {
  const auto m = mub_set(2, 2);
  const auto spec = state_discrimination_spec(m);
  const auto cv = critical_visibility(spec, depolarize(m, 0.0), 2.0 + std::sqrt(2.0));
  EXPECT_FALSE(cv.violated);
  EXPECT_EQ(cv.v, 1.0);
}

TEST(CriticalVisibility, LowerBoundNeverExceedsUpper) {
  for (int count : {2, 3}) {
    const auto m = mub_set(2, count);
    const auto spec = state_discrimination_spec(m);
    const double upper = critical_visibility(spec, m, qubit_beta(score_operators(spec)).beta).v;
    const double lower = search_classical_model(m, default_ensemble(m, 300, 2)).v_star;
    EXPECT_LE(lower, upper + 1e-3);
  }
  const auto sic = sic_five_tetrahedra();
  const auto spec = state_discrimination_spec(sic);
  const double upper = critical_visibility(spec, sic, qubit_beta(score_operators(spec)).beta).v;
  const double lower = search_classical_model(sic, default_ensemble(sic, 100, 2)).v_star;
  EXPECT_LE(lower, upper + 1e-3);
}
