#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "classim/model_search.hpp"
#include "oracles.hpp"

using namespace classim;

namespace {

std::vector<UnitaryMatrix> qubit_mub_bases(int count) { return mub_bases(2, count); }

UnitaryMatrix fourier(int d) {
  CMatrix f(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      const double ph = 2.0 * M_PI * j * k / d;
      f(j, k) = Complex(std::cos(ph), std::sin(ph)) / std::sqrt(static_cast<double>(d));
    }
  }
  return UnitaryMatrix(f);
}

ClassicalModel random_model(int d, int n, int o, int devices, std::mt19937_64& rng) {
  ClassicalModel m;
  m.dim = d;
  m.settings = n;
  m.outcomes = o;
  m.v = 0.5;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Rng hr = make_stream(rng(), "model");
  double total = 0.0;
  for (int l = 0; l < devices; ++l) {
    m.bases.push_back(haar_unitary(d, hr));
    m.weights.push_back(u(rng) + 0.05);
    total += m.weights.back();
  }
  for (auto& w : m.weights) w /= total;
  for (int l = 0; l < devices; ++l) {
    std::vector<double> r(static_cast<std::size_t>(n * d * o));
    for (int x = 0; x < n; ++x) {
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int a = 0; a < o; ++a) s += (r[m.slot(a, x, k)] = u(rng));
        for (int a = 0; a < o; ++a) r[m.slot(a, x, k)] *= m.weights[static_cast<std::size_t>(l)] / s;
      }
    }
    m.response.push_back(std::move(r));
  }
  return m;
}

}  // namespace

TEST(PairHalfNoiseModel, CommutingCase) {
  const auto id = UnitaryMatrix::identity(3);
  const auto model = pair_half_noise_model(id, id);
  model.validate();
  const MeasurementSet m({basis_measurement(id), basis_measurement(id)});
  EXPECT_LE(reconstruct(model, m), 1e-12);
}

TEST(PairHalfNoiseModel, QubitZX) {
  const auto b = qubit_mub_bases(2);
  const auto model = pair_half_noise_model(b[0], b[1]);
  EXPECT_EQ(model.v, 0.5);
  EXPECT_LE(reconstruct(model, mub_set(2, 2)), 1e-12);
}

TEST(PairHalfNoiseModel, QuditFourier) {
  const auto id = UnitaryMatrix::identity(7);
  const auto f = fourier(7);
  const auto model = pair_half_noise_model(id, f);
  const MeasurementSet m({basis_measurement(id), basis_measurement(f)});
  EXPECT_LE(reconstruct(model, m), 1e-11);
}

TEST(PairHalfNoiseModel, RejectsMismatch) {
  EXPECT_THROW(pair_half_noise_model(UnitaryMatrix::identity(2), UnitaryMatrix::identity(3)), StructuralError);
}

TEST(Reconstruct, DetectsPerturbation) {
  const auto b = qubit_mub_bases(2);
  auto model = pair_half_noise_model(b[0], b[1]);
  model.response[0][model.slot(0, 0, 0)] += 0.01;
  EXPECT_GT(reconstruct(model, mub_set(2, 2)), 1e-3);
}

TEST(Reconstruct, RejectsShapeMismatch) {
  const auto b = qubit_mub_bases(2);
  EXPECT_THROW(reconstruct(pair_half_noise_model(b[0], b[1]), mub_set(2, 3)), StructuralError);
}

TEST(DecomposeStochastic, Deterministic) {
  RMatrix p = RMatrix::Zero(3, 2);
  p(2, 0) = 1.0;
  p(0, 1) = 1.0;
  const auto t = decompose_stochastic(p);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].weight, 1.0);
  EXPECT_EQ(t[0].choice, (std::vector<int>{2, 0}));
}

TEST(DecomposeStochastic, BinaryColumn) {
  RMatrix p(2, 1);
  p << 0.3, 0.7;
  const auto t = decompose_stochastic(p);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_NEAR(t[0].weight, 0.7, 1e-15);
  EXPECT_EQ(t[0].choice[0], 1);
  EXPECT_NEAR(t[1].weight, 0.3, 1e-15);
  EXPECT_EQ(t[1].choice[0], 0);
}

TEST(DecomposeStochastic, RandomReconstruction) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    RMatrix p(3, 4);
    for (int z = 0; z < 4; ++z) {
      for (int a = 0; a < 3; ++a) p(a, z) = u(rng);
      p.col(z) /= p.col(z).sum();
    }
    const auto terms = decompose_stochastic(p);
    EXPECT_LE(terms.size(), 12u);
    RMatrix r = RMatrix::Zero(3, 4);
    double total = 0.0;
    for (const auto& t : terms) {
      EXPECT_GT(t.weight, 0.0);
      total += t.weight;
      for (int z = 0; z < 4; ++z) r(t.choice[static_cast<std::size_t>(z)], z) += t.weight;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_LE((r - p).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(DecomposeStochastic, RejectsNonStochastic) {
  RMatrix p(2, 1);
  p << 0.3, 0.6;
  EXPECT_THROW(decompose_stochastic(p), InvalidArgument);
  p << 1.2, -0.2;
  EXPECT_THROW(decompose_stochastic(p), InvalidArgument);
}

TEST(SearchClassicalModel, TwoQubitMubsTargetBases) {
  const auto m = mub_set(2, 2);
  const auto res = search_classical_model(m, qubit_mub_bases(2));
  EXPECT_NEAR(res.v_star, 0.5, 1e-6);
  EXPECT_LE(res.residual, 1e-7);
  EXPECT_LE(res.gap, 1e-7);
  res.model.validate();
}

TEST(SearchClassicalModel, AgreesWithFullLp) {
  const auto m = mub_set(2, 2);
  Rng rng = make_stream(3, "ensemble");
  std::vector<UnitaryMatrix> ens = qubit_mub_bases(2);
  for (int i = 0; i < 6; ++i) ens.push_back(haar_unitary(2, rng));
  const auto cg = search_classical_model(m, ens);
  const auto lp = solve_lp(full_model_lp(m, ens), 1e-9);
  ASSERT_TRUE(lp.optimal()) << lp.message;
  EXPECT_NEAR(cg.v_star, lp.objective, 1e-7);
  const auto model = model_from_full_lp(m, ens, lp.primal);
  model.validate();
  EXPECT_LE(reconstruct(model, m), 1e-7);
}

TEST(SearchClassicalModel, FullLpPairModelValue) {
  const auto lp = solve_lp(full_model_lp(mub_set(2, 2), qubit_mub_bases(2)), 1e-9);
  ASSERT_TRUE(lp.optimal()) << lp.message;
  EXPECT_NEAR(lp.objective, 0.5, 1e-7);
}

TEST(SearchClassicalModel, AgreesWithFullLpOnQutrits) {
  const auto m = mub_set(3, 2);
  Rng rng = make_stream(11, "ensemble");
  std::vector<UnitaryMatrix> ens = mub_bases(3, 2);
  for (int i = 0; i < 4; ++i) ens.push_back(haar_unitary(3, rng));
  const auto cg = search_classical_model(m, ens);
  const auto lp = solve_lp(full_model_lp(m, ens), 1e-9);
  ASSERT_TRUE(lp.optimal()) << lp.message;
  EXPECT_NEAR(cg.v_star, lp.objective, 1e-7);
  EXPECT_LE(cg.residual, 1e-7);
}

TEST(SearchClassicalModel, CommutingSetIsClassical) {
  CMatrix p0 = CMatrix::Zero(2, 2), p1 = CMatrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  CMatrix q0 = CMatrix::Zero(2, 2), q1 = CMatrix::Zero(2, 2);
  q0(0, 0) = 0.3;
  q0(1, 1) = 0.9;
  q1 = CMatrix::Identity(2, 2) - q0;
  const MeasurementSet m({{p0, p1}, {q0, q1}});
  const auto res = search_classical_model(m, {UnitaryMatrix::identity(2)});
  EXPECT_NEAR(res.v_star, 1.0, 1e-9);
  EXPECT_LE(res.residual, 1e-7);
}

TEST(SearchClassicalModel, ExtremalProjectiveWithOwnBasis) {
  Rng rng = make_stream(8, "basis");
  const auto u = haar_unitary(3, rng);
  const MeasurementSet m({basis_measurement(u)});
  const auto res = search_classical_model(m, {u});
  EXPECT_NEAR(res.v_star, 1.0, 1e-9);
}

TEST(SearchClassicalModel, EnsembleMonotonicity) {
  const auto m = mub_set(2, 3);
  Rng rng = make_stream(21, "ensemble");
  std::vector<UnitaryMatrix> ens = qubit_mub_bases(3);
  double prev = 0.0;
  for (int step = 0; step < 4; ++step) {
    for (int i = 0; i < 10; ++i) ens.push_back(haar_unitary(2, rng));
    const double v = search_classical_model(m, ens).v_star;
    EXPECT_GE(v + 1e-9, prev);
    prev = v;
  }
}

TEST(SearchClassicalModel, HaarEnsembleApproachesFromBelow) {
  const auto m = mub_set(2, 2);
  const auto start = std::chrono::steady_clock::now();
  const auto res = search_classical_model(m, default_ensemble(m, 2000, 7));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_GE(res.v_star, 0.69);
  EXPECT_LE(res.v_star, 0.7072);
  EXPECT_LE(res.residual, 1e-7);
  EXPECT_LT(secs, 300.0);
}

TEST(SearchClassicalModel, RejectsEmptyEnsemble) {
  EXPECT_THROW(search_classical_model(mub_set(2, 2), {}), InvalidArgument);
}

TEST(DefaultEnsemble, EigenbasesThenHaar) {
  const auto m = mub_set(2, 3);
  const auto ens = default_ensemble(m, 5, 1);
  ASSERT_EQ(ens.size(), 8u);
  const auto again = default_ensemble(m, 5, 1);
  for (std::size_t i = 0; i < ens.size(); ++i) EXPECT_EQ(max_abs(ens[i].matrix() - again[i].matrix()), 0.0);
  EXPECT_EQ(eigenbases(MeasurementSet({trine()})).size(), 3u);
}

TEST(EliminatePostprocessing, PairModelHasFourTerms) {
  const auto b = qubit_mub_bases(2);
  const auto model = pair_half_noise_model(b[0], b[1]);
  const auto pc = eliminate_postprocessing(model);
  EXPECT_EQ(pc.terms(), 4);
  const auto r = pc.residuals();
  EXPECT_LE(r.projectivity, 1e-10);
  EXPECT_LE(r.commutation, 1e-10);
  EXPECT_LE(r.completeness, 1e-12);
  for (int x = 0; x < 2; ++x) {
    for (int a = 0; a < 2; ++a) EXPECT_LE(max_abs(pc.reconstructed(x, a) - model.reconstructed(x, a)), 1e-12);
  }
}

TEST(EliminatePostprocessing, DeterministicResponse) {
  ClassicalModel m;
  m.dim = 2;
  m.settings = 1;
  m.outcomes = 2;
  m.v = 1.0;
  m.bases = {UnitaryMatrix::identity(2)};
  m.weights = {1.0};
  m.response = {{1.0, 0.0, 0.0, 1.0}};
  EXPECT_EQ(eliminate_postprocessing(m).terms(), 1);
}

TEST(EliminatePostprocessing, RandomModelsRoundTrip) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20; ++t) {
    const auto model = random_model(2 + t % 3, 1 + t % 3, 2 + t % 2, 1 + t % 4, rng);
    model.validate();
    const auto pc = eliminate_postprocessing(model);
    const auto r = pc.residuals();
    EXPECT_LE(r.projectivity, 1e-8);
    EXPECT_LE(r.commutation, 1e-8);
    for (int x = 0; x < model.settings; ++x) {
      for (int a = 0; a < model.outcomes; ++a) {
        EXPECT_LE(max_abs(pc.reconstructed(x, a) - model.reconstructed(x, a)), 1e-7);
      }
    }
  }
}

TEST(EliminatePostprocessing, LpOutputRoundTrip) {
  const auto m = mub_set(2, 2);
  const auto res = search_classical_model(m, default_ensemble(m, 50, 3));
  const auto pc = eliminate_postprocessing(res.model);
  const auto r = pc.residuals();
  EXPECT_LE(r.commutation, 1e-8);
  EXPECT_LE(r.projectivity, 1e-8);
  for (int x = 0; x < 2; ++x) {
    for (int a = 0; a < 2; ++a) {
      EXPECT_LE(max_abs(pc.reconstructed(x, a) - depolarize_operator(m(x, a), res.v_star)), 1e-7);
    }
  }
}

TEST(ProjectExtendedModel, ComputationalBasis) {
  const Povm z = mub_set(2, 2).setting(0);
  const Povm ext = extend_direct_sum(z);
  ClassicalModel model;
  model.dim = 4;
  model.settings = 1;
  model.outcomes = 2;
  model.v = 1.0;
  model.bases = {UnitaryMatrix::identity(4)};
  model.weights = {1.0};
  // Basis vectors 0, 2 → outcome 0; 1, 3 → outcome 1.
  model.response = {{1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0}};
  EXPECT_LE(reconstruct(model, MeasurementSet({ext})), 1e-15);
  const auto projected = project_extended_model(eliminate_postprocessing(model), 2, 2);
  EXPECT_EQ(projected.weights, std::vector<double>{1.0});
  for (int a = 0; a < 2; ++a) EXPECT_LE(max_abs(projected.reconstructed(0, a) - z[a]), 1e-15);
}

TEST(ProjectExtendedModel, NoisyTrineRoundTrip) {
  const Povm t = trine();
  const MeasurementSet ext({extend_direct_sum(t)});
  Rng rng = make_stream(5, "ensemble");
  std::vector<UnitaryMatrix> ens;
  for (const auto& u : eigenbases(MeasurementSet({t}))) ens.push_back(direct_sum_unitary(UnitaryMatrix::identity(3), u));
  for (int i = 0; i < 100; ++i) ens.push_back(direct_sum_unitary(UnitaryMatrix::identity(3), haar_unitary(2, rng)));
  const auto res = search_classical_model(ext, ens);
  ASSERT_GT(res.v_star, 0.3);
  EXPECT_LE(res.residual, 1e-7);
  const auto projected = project_extended_model(eliminate_postprocessing(res.model), 3, 2);
  const auto noisy = depolarize(t, res.v_star);
  for (int a = 0; a < 3; ++a) EXPECT_LE(max_abs(projected.reconstructed(0, a) - noisy[a]), 1e-6);
  const auto r = projected.residuals();
  EXPECT_LE(r.projectivity, 1e-8);
}

TEST(ProjectExtendedModel, RejectsWrongDimension) {
  const auto b = qubit_mub_bases(2);
  EXPECT_THROW(project_extended_model(eliminate_postprocessing(pair_half_noise_model(b[0], b[1])), 3, 2),
               StructuralError);
}
