/*
 * Copyright 2026 The trase-node Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "trase/checkpoint.hpp"
#include "trase/errors.hpp"
#include "trase/eval.hpp"
#include "trase/systems.hpp"

using namespace trase;
using namespace trase::testing;
namespace fs = std::filesystem;

namespace {

Matrix sample_truth() {
  return (Matrix(4, 2) << 1.0, -0.5, 2.0, 0.25, -1.5, 3.0, 0.5, -2.0).finished();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioFactory oscillator_factory() {
  return [](double u) {
    return gen_oscillator(OscillatorParams{}, u, TimeGrid::uniform(0.0, 7.0, 100));
  };
}

EvalModel small_model(std::uint64_t seed) {
  const NetSpec s = tanh_net(2, 8);
  return EvalModel{"m" + std::to_string(seed), s, init_params(s, seed)};
}

}  // namespace

TEST(Nmse, Identities) {
  const Matrix t = sample_truth();
  EXPECT_EQ(nmse(t, t), Vector::Zero(2));
  const Vector zero = nmse(Matrix::Zero(4, 2), t);
  EXPECT_DOUBLE_EQ(zero[0], 1.0);
  EXPECT_DOUBLE_EQ(zero[1], 1.0);
  const Vector twice = nmse(2.0 * t, t);
  EXPECT_DOUBLE_EQ(twice[0], 1.0);
  EXPECT_DOUBLE_EQ(twice[1], 1.0);
}

TEST(Nmse, ScaleAndReorderInvariance) {
  std::mt19937_64 rng(3);
  const Matrix t = sample_truth();
  const Matrix p = t + 0.1 * Matrix::Random(4, 2);
  const Vector base = nmse(p, t);
  for (double c : {-3.0, 0.01, 7.5}) EXPECT_LT((nmse(c * p, c * t) - base).norm(), 1e-14);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.indices() << 2, 0, 3, 1;
  EXPECT_LT((nmse(perm * p, perm * t) - base).norm(), 1e-15);
}

TEST(Nmse, ZeroEnergyChannelIsDegenerate) {
  Matrix t = sample_truth();
  t.col(1).setZero();
  try {
    nmse(t, t);
    FAIL();
  } catch (const DegenerateNormalization& e) {
    EXPECT_EQ(e.channel(), 1);
  }
  EXPECT_THROW(nmse(Matrix::Zero(3, 2), t), DimensionError);
}

TEST(NormalizedError, PerfectAndOffset) {
  const Matrix t = sample_truth();
  EXPECT_EQ(normalized_error(t, t), Matrix::Zero(4, 2));
  const double d = 0.3;
  const Matrix e = normalized_error(t.array() + d, t);
  EXPECT_LT((e.col(0).array() + d / 2.0).abs().maxCoeff(), 1e-15);
  EXPECT_LT((e.col(1).array() + d / 3.0).abs().maxCoeff(), 1e-15);
  Matrix flat = t;
  flat.col(0).setZero();
  EXPECT_THROW(normalized_error(t, flat), DegenerateNormalization);
}

TEST(Sweep, EmptyGridGivesEmptyReport) {
  const EvalModel m = small_model(1);
  const SweepResult r = sweep(m, nullptr, {}, oscillator_factory(), SweepOptions{});
  EXPECT_TRUE(r.a.u.empty());
  EXPECT_EQ(r.a.nmse.rows(), 0);
  EXPECT_FALSE(r.b.has_value());
}

TEST(Sweep, PairedWorstCaseIsColumnMax) {
  const EvalModel a = small_model(1), b = small_model(2);
  const SweepResult r = sweep(a, &b, {0.5, 1.0, 3.0}, oscillator_factory(),
                              SweepOptions{rk4_for_horizon(0.0, 7.0), true});
  ASSERT_TRUE(r.b.has_value());
  for (const MetricsReport* m : {&r.a, &*r.b}) {
    EXPECT_EQ(m->channels, (std::vector<std::string>{"x", "v", "s_x", "s_v"}));
    EXPECT_EQ(m->state_channels, 2u);
    EXPECT_EQ(m->nmse.rows(), 3);
    EXPECT_TRUE((m->nmse.array() >= 0.0).all());
    EXPECT_EQ(m->worst_case, Vector(m->nmse.colwise().maxCoeff().transpose()));
    EXPECT_EQ(m->traces.size(), 3u);
  }
  EXPECT_EQ(r.a.model_id, "m1");
  EXPECT_EQ(r.b->model_id, "m2");
}

TEST(Sweep, Deterministic) {
  const EvalModel a = small_model(5);
  const SweepOptions o{rk4_for_horizon(0.0, 7.0), false};
  EXPECT_EQ(sweep(a, nullptr, {0.5, 2.0}, oscillator_factory(), o).a.nmse,
            sweep(a, nullptr, {0.5, 2.0}, oscillator_factory(), o).a.nmse);
}

TEST(Sweep, FailuresBecomeInfiniteEntries) {
  const EvalModel a = small_model(1);
  const std::vector<double> grid = {1.0, 1e12, -5.0};
  const ScenarioFactory f = [](double u) {
    if (u < 0) throw DataError("no data for negative input");
    return gen_oscillator(OscillatorParams{}, u, TimeGrid::uniform(0.0, 7.0, 50));
  };
  const SweepResult r = sweep(a, nullptr, grid, f, SweepOptions{rk4_for_horizon(0.0, 7.0), false});
  EXPECT_TRUE(r.a.nmse.row(0).allFinite());
  EXPECT_TRUE(std::isinf(r.a.nmse(1, 0)));
  EXPECT_TRUE(std::isinf(r.a.nmse(2, 0)));
  EXPECT_TRUE(r.a.failures[0].empty());
  EXPECT_FALSE(r.a.failures[1].empty());
  EXPECT_FALSE(r.a.failures[2].empty());
  EXPECT_TRUE(std::isinf(r.a.worst_case[0]));
  EXPECT_EQ(find_u(r.a, 1e12), std::optional<std::size_t>(1));
  EXPECT_FALSE(find_u(r.a, 7.0).has_value());
}

TEST(Sweep, StateOnlyTruthUsesStateChannels) {
  const NetSpec s = tanh_net(2, 6, 2);
  const EvalModel m{"ibr", s, init_params(s, 2)};
  const ScenarioFactory f = [](double v) {
    return gen_inverter_fixture(InverterFixtureParams{}, v);
  };
  const SweepResult r = sweep(m, nullptr, {1.04}, f, SweepOptions{rk4_for_horizon(0.0, 4.0), false});
  EXPECT_EQ(r.a.channels, (std::vector<std::string>{"I_d", "I_q"}));
  EXPECT_EQ(r.a.nmse.cols(), 2);
}

TEST(ReportFiles, JsonCsvAndSvg) {
  const fs::path dir = fs::temp_directory_path() / "trase_eval_reports";
  fs::remove_all(dir);
  const EvalModel a = small_model(1), b = small_model(2);
  const ScenarioFactory f = [](double u) {
    if (u > 100) throw DataError("out of range");
    return gen_oscillator(OscillatorParams{}, u, TimeGrid::uniform(0.0, 7.0, 30));
  };
  const SweepResult r =
      sweep(a, &b, {0.5, 1.0, 1000.0}, f, SweepOptions{rk4_for_horizon(0.0, 7.0), true});
  write_report_json(dir / "report.json", r);
  write_nmse_csv(dir / "nmse.csv", r);
  write_traces_csv(dir / "states.csv", r, false);
  write_traces_csv(dir / "sens.csv", r, true);
  write_normalized_error_csv(dir / "ne.csv", r);
  write_nmse_svg(dir / "x.svg", r, 0);

  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(j["nmse_definition"], kNmseDefinition);
  ASSERT_EQ(j["models"].size(), 2u);
  EXPECT_EQ(j["models"][0]["nmse"]["x"][2], "inf");
  EXPECT_EQ(j["models"][0]["failures"].size(), 1u);
  EXPECT_DOUBLE_EQ(j["models"][1]["nmse"]["v"][0].get<double>(), r.b->nmse(0, 1));

  std::istringstream csv(slurp(dir / "nmse.csv"));
  std::string header, row;
  std::getline(csv, header);
  EXPECT_EQ(header, "u,m1:x,m1:v,m1:s_x,m1:s_v,m2:x,m2:v,m2:s_x,m2:s_v");
  int rows = 0;
  while (std::getline(csv, row)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_NE(slurp(dir / "sens.csv").find(",s_v,"), std::string::npos);
  EXPECT_EQ(slurp(dir / "states.csv").find(",s_v,"), std::string::npos);
  EXPECT_NE(slurp(dir / "x.svg").find("<svg"), std::string::npos);
}

TEST(Checkpoint, RoundTripsExactly) {
  NetSpec s = mlp(2, 2, {{5, Activation::LeakyReLU, 0.05}, {3, Activation::Tanh}}, true);
  s.input_offset = Vector::Constant(s.input_dim(), 0.1);
  s.input_scale = Vector::Constant(s.input_dim(), 3.0);
  std::mt19937_64 rng(8);
  Checkpoint ck{"model", s, ParamVector{random_vector(rng, static_cast<Eigen::Index>(s.param_count()))},
                AdamState{random_vector(rng, static_cast<Eigen::Index>(s.param_count())),
                          random_vector(rng, static_cast<Eigen::Index>(s.param_count())).cwiseAbs(), 17},
                1.25e-3, 17};
  ck.params.values[0] = 1.0 / 3.0;
  ck.params.values[1] = -1e-300;
  const Checkpoint back = checkpoint_from_string(checkpoint_to_string(ck));
  EXPECT_TRUE(back.spec == s);
  EXPECT_EQ(back.params, ck.params);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->m, ck.optimizer->m);
  EXPECT_EQ(back.optimizer->v, ck.optimizer->v);
  EXPECT_EQ(back.optimizer->step, 17);
  EXPECT_EQ(back.learning_rate, ck.learning_rate);
  EXPECT_EQ(back.epoch, 17);
  EXPECT_EQ(back.model_id, "model");
}

TEST(Checkpoint, RejectsBadDocuments) {
  const NetSpec s = tanh_net(2, 3);
  const std::string good = checkpoint_to_string(Checkpoint{"m", s, init_params(s, 0), {}, {}, 0});
  EXPECT_NO_THROW(checkpoint_from_string(good));
  EXPECT_THROW(checkpoint_from_string("{"), DataError);
  auto j = nlohmann::json::parse(good);
  j["param_values"].erase(0);
  EXPECT_THROW(checkpoint_from_string(j.dump()), DataError);
  j = nlohmann::json::parse(good);
  j["spec"]["hidden"][0]["activation"] = "relu";
  EXPECT_THROW(checkpoint_from_string(j.dump()), DataError);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.json"), IoError);
}

TEST(SpecJson, ErrorsNameThePath) {
  auto j = spec_to_json(tanh_net(2, 3));
  j["hidden"][0]["width"] = "wide";
  try {
    spec_from_json(j, "config.net");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("config.net.hidden[0].width"), std::string::npos)
        << e.what();
  }
}
