// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gbcd/denoise.hpp"
#include "gbcd/unfolding.hpp"

using namespace gbcd;

namespace {

Scenario small_scenario() {
  Scenario s;
  s.B = 16;
  s.U = 4;
  s.order = 16;
  return s;
}

TrainConfig quick_config() {
  TrainConfig tc;
  tc.train_samples = 200;
  tc.val_samples = 100;
  tc.batch_size = 50;
  tc.max_epochs = 15;
  tc.seed = 5;
  return tc;
}

}  // namespace

TEST_CASE("parameter layout") {
  UnfoldParams p = UnfoldParams::box_equivalent(4, 0.3);
  CHECK(p.iterations() == 4);
  CHECK(p.size() == 9);
  CHECK(p.flatten().size() == 9u);
  const UnfoldParams q = UnfoldParams::unflatten(p.flatten());
  CHECK(q.rho == p.rho);
  CHECK(q.beta == p.beta);
  CHECK(q.alpha == p.alpha);
  p.rho[1] = -1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  CHECK_THROWS_AS(UnfoldParams::unflatten({1.0, 2.0}), InvalidArgument);
}

TEST_CASE("box-equivalent parameters reproduce the box detector") {
  const Constellation c = make_constellation(16);
  const auto samples = make_samples(small_scenario(), 12.0, {}, 20, 9);
  for (const TrainSample& s : samples) {
    const UnfoldParams p = UnfoldParams::box_equivalent(3, s.prep.N0);
    const ForwardResult f = unfold_forward(p, s, c, false);
    const EqualizerState st = gbcd_equalize(s.prep, s.y_mf, 3, box_schedule(c));
    const SoftOutput ref = compute_llrs(st.v_last, s.prep.G, 1.0, s.prep.N0, c);
    CHECK((f.s_hat - st.v_last).norm() < 1e-12);
    CHECK((f.llr - ref.llr).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("pme forward pass equals the table-driven equalizer") {
  const Constellation c = make_constellation(64);
  const auto samples = make_samples(small_scenario(), 15.0, {}, 10, 10);
  UnfoldParams p;
  p.rho = {0.7, 1.3};
  p.beta = {0.95, 1.05};
  p.alpha = 0.2;
  for (const TrainSample& s : samples) {
    const ForwardResult f = unfold_forward(p, s, c, false);
    const EqualizerState st = gbcd_equalize(s.prep, s.y_mf, 2, pme_schedule(p.rho, p.beta, c));
    CHECK((f.s_hat - st.v_last).norm() < 1e-10);
  }
}

TEST_CASE("loss is the binary cross-entropy of the returned llrs") {
  const Constellation c = make_constellation(16);
  const auto samples = make_samples(small_scenario(), 6.0, {}, 10, 11);
  const UnfoldParams p = UnfoldParams::box_equivalent(3, 0.25);
  for (const TrainSample& s : samples) {
    const ForwardResult f = unfold_forward(p, s, c, false);
    double loss = 0.0;
    for (Eigen::Index u = 0; u < f.llr.rows(); ++u)
      for (Eigen::Index b = 0; b < f.llr.cols(); ++b) {
        const double l = f.llr(u, b);
        const int bit = s.bits[u * c.bits_per_symbol + b];
        // P(1) = 1 / (1 + e^-l), P(0) = 1 / (1 + e^l)
        loss += bit ? std::log1p(std::exp(-l)) : std::log1p(std::exp(l));
      }
    CHECK(f.loss == doctest::Approx(loss).epsilon(1e-10));
  }
  CHECK(bce(100.0, 0) == doctest::Approx(-std::log(kProbClamp)));
  CHECK(bce(-100.0, 0) == doctest::Approx(-std::log1p(-kProbClamp)));
  CHECK(bce(0.0, 1) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gradient matches central differences in smooth regions") {
  const Constellation c = make_constellation(16);
  const auto samples = make_samples(small_scenario(), 10.0, {}, 40, 12);
  UnfoldParams p;
  p.rho = {0.8, 1.4};
  p.beta = {0.9, 1.1};
  p.alpha = 0.3;
  int checked = 0;
  for (const TrainSample& s : samples) {
    const ForwardResult f = unfold_forward(p, s, c, true);
    if (!f.margins.smooth(1e-3)) continue;
    const auto flat = p.flatten();
    double scale = 0, err = 0;
    for (std::size_t j = 0; j < flat.size(); ++j) {
      const double h = 1e-5 * flat[j];
      auto a = flat, b = flat;
      a[j] += h;
      b[j] -= h;
      const double fd = (unfold_forward(UnfoldParams::unflatten(a), s, c, false).loss -
                         unfold_forward(UnfoldParams::unflatten(b), s, c, false).loss) /
                        (2 * h);
      scale = std::max(scale, std::abs(fd));
      err = std::max(err, std::abs(fd - f.grad[j]));
    }
    CHECK(err <= 1e-3 * scale);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("batch gradient is independent of the thread count") {
  const Constellation c = make_constellation(16);
  const auto samples = make_samples(small_scenario(), 10.0, {}, 64, 13, 2);
  const auto again = make_samples(small_scenario(), 10.0, {}, 64, 13, 1);
  CHECK((samples[17].y_mf - again[17].y_mf).norm() == 0.0);
  const UnfoldParams p = UnfoldParams::box_equivalent(2, 0.2);
  const LossGrad a = loss_and_grad(p, samples, c, 1);
  const LossGrad b = loss_and_grad(p, samples, c, 3);
  CHECK(a.loss == b.loss);
  CHECK(a.grad == b.grad);
  CHECK(forward_loss(p, samples, c, 2) == a.loss);
}

TEST_CASE("training is deterministic and keeps the best validation epoch") {
  TrainHistory h1, h2;
  const TrainedParams a = train(small_scenario(), 10.0, quick_config(), &h1);
  TrainConfig threaded = quick_config();
  threaded.threads = 2;
  const TrainedParams b = train(small_scenario(), 10.0, threaded, &h2);
  CHECK(a.params.rho == b.params.rho);
  CHECK(a.params.beta == b.params.beta);
  CHECK(a.params.alpha == b.params.alpha);
  CHECK(h1.val_loss == h2.val_loss);
  REQUIRE(!h1.val_loss.empty());
  const auto best = std::min_element(h1.val_loss.begin(), h1.val_loss.end());
  CHECK(a.val_loss == *best);
  CHECK(h1.best_epoch == static_cast<int>(best - h1.val_loss.begin()));
  a.params.validate();
  CHECK(a.params.iterations() == 3);
}

TEST_CASE("parameter store lookup rules and round trip") {
  ParamStore store;
  for (double snr : {5.0, 10.0, 20.0}) {
    TrainedParams t;
    t.order = 16;
    t.snr_db = snr;
    t.B = 16;
    t.U = 4;
    t.params = UnfoldParams::box_equivalent(3, 0.1 * snr);
    store.put(t);
  }
  const ParamStore back = ParamStore::from_json(store.to_json());
  REQUIRE(back.records().size() == 3u);
  CHECK(back.records()[1].params.alpha == store.records()[1].params.alpha);

  const ParamLookup near = back.lookup(16, Condition::NonLoS, 3, 8.0);
  CHECK(near.kind == ParamLookup::Kind::Trained);
  CHECK(near.record.snr_db == 10.0);
  CHECK_FALSE(near.fallback);
  const ParamLookup high = back.lookup(16, Condition::NonLoS, 3, 30.0);
  CHECK(high.kind == ParamLookup::Kind::Trained);
  CHECK(high.record.snr_db == 20.0);
  CHECK(high.fallback);
  CHECK(back.lookup(16, Condition::NonLoS, 3, -5.0).kind == ParamLookup::Kind::Box);
  CHECK(back.lookup(64, Condition::NonLoS, 3, 10.0).kind == ParamLookup::Kind::Missing);
  CHECK(back.lookup(16, Condition::NonLoS, 4, 10.0).kind == ParamLookup::Kind::Missing);
  CHECK_THROWS(ParamStore::from_json(nlohmann::json{{"format", "other"}}));
}
