#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "pcsindy/errors.hpp"
#include "pcsindy/predictor.hpp"

using namespace pcsindy;

namespace {

IdentifiedModel analytical_model(const RunConfig& cfg, double dt) {
  IdentifiedModel m;
  m.library = cfg.analytical_spec();
  const CandidateLibrary lib(m.library);
  m.column_labels = lib.column_labels();
  m.target_labels = lib.target_labels();
  m.xi = analytical_xi(cfg.microgrid.ders);
  m.dt = dt;
  return m;
}

struct Run {
  RunConfig cfg;
  Trajectory traj;
  MeasurementFrame frame;
};

Run exact_run(double rate = 120.0, bool excited = true, double duration = 10.0) {
  Run r;
  r.cfg = fixture::defaults(3);
  auto sc = r.cfg.identification;
  sc.duration = duration;
  if (!excited) sc.excitation.reset();
  else if (sc.excitation) sc.excitation->end = duration;
  if (!excited)
    for (auto& b : r.cfg.microgrid.network.buses) b.injection.stochastic_std = 0.0;
  r.traj = simulate(sc, r.cfg.microgrid);
  auto pc = r.cfg.pmu;
  pc.noise = false;
  pc.reporting_rate = rate;
  DerivativeOptions d;
  d.method = DerivativeMethod::Exact;
  r.frame = estimate_derivatives(sample(r.traj, pc), d);
  return r;
}

const Run& excited_run() {
  static const Run r = exact_run();
  return r;
}

}  // namespace

TEST_CASE("state labels follow the targets") {
  const Predictor p(analytical_model(excited_run().cfg, 1.0 / 120.0));
  const auto& s = p.state_labels();
  REQUIRE(s.size() == 11);
  CHECK(s[0] == "gfm1.theta");
  CHECK(s[1] == "gfm1.omega");
  CHECK(s[4] == "gfl2.omega_dot");
}

TEST_CASE("equilibrium predicts no motion") {
  const auto r = exact_run(120.0, false, 1.0);
  const Predictor p(analytical_model(r.cfg, r.frame.dt));
  for (std::size_t k : {0ul, 60ul, 119ul}) {
    const auto d = p.evaluate(r.frame, k);
    CHECK(d.cwiseAbs().maxCoeff() < 1e-8);
    CHECK((p.predict_step(r.frame, k) - p.measured_state(r.frame, k)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("model rates match the plant rates at sampled rows") {
  const auto& r = excited_run();
  const Predictor p(analytical_model(r.cfg, r.frame.dt));
  const auto& tt = r.traj.table;
  for (std::size_t k : {7ul, 333ul, 901ul, 1200ul}) {
    const auto d = p.evaluate(r.frame, k);
    for (std::size_t i = 0; i < p.model().target_labels.size(); ++i) {
      const double want = tt.column(p.model().target_labels[i])[10 * k];
      INFO(p.model().target_labels[i]);
      CHECK(std::abs(d(static_cast<Eigen::Index>(i)) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("predict_step is one forward Euler step from the measured state") {
  const auto& r = excited_run();
  const Predictor p(analytical_model(r.cfg, r.frame.dt));
  const std::size_t k = 500;
  const Eigen::VectorXd expect = p.measured_state(r.frame, k) + r.frame.dt * p.evaluate(r.frame, k);
  CHECK(p.predict_step(r.frame, k) == expect);
}

TEST_CASE("one-step error shrinks with the square of the step") {
  const auto coarse = exact_run(120.0), fine = exact_run(240.0);
  const auto worst = [](const Run& r) {
    const Predictor p(analytical_model(r.cfg, r.frame.dt));
    const auto& w = r.frame.table.column("gfm1.omega");
    double e = 0.0;
    for (std::size_t k = 0; k + 1 < r.frame.size(); ++k)
      e = std::max(e, std::abs(p.predict_step(r.frame, k)(1) - w[k + 1]));
    return e;
  };
  const double ratio = worst(coarse) / worst(fine);
  MESSAGE("error ratio " << ratio);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("predictions re-anchor on each measurement") {
  auto r = excited_run();
  const Predictor p(analytical_model(r.cfg, r.frame.dt));
  const auto before = p.predict_step(r.frame, 401);
  r.frame.table.column("gfm1.omega")[400] += 5.0;
  CHECK(p.predict_step(r.frame, 401) == before);
  CHECK(p.predict_step(r.frame, 400)(1) != doctest::Approx(before(1)));
}

TEST_CASE("rollout feeds predictions back") {
  const auto& r = excited_run();
  const Predictor p(analytical_model(r.cfg, r.frame.dt));
  const auto ro = p.rollout(r.frame, 100, 12);
  CHECK_FALSE(ro.diverged_at);
  CHECK(ro.states.rows() == 13);
  CHECK(ro.states.row(0) == p.measured_state(r.frame, 100).transpose());
  CHECK(ro.states.row(1) == p.predict_step(r.frame, 100).transpose());
  CHECK(ro.time.back() == doctest::Approx(r.frame.table.column("t")[112]));
  const auto& w = r.frame.table.column("gfm1.omega");
  for (Eigen::Index h = 0; h <= 12; ++h) CHECK(std::abs(ro.states(h, 1) - w[100 + static_cast<std::size_t>(h)]) < 0.05);
  CHECK_THROWS_AS(p.rollout(r.frame, 1195, 10), ConfigError);

  auto m = analytical_model(r.cfg, r.frame.dt);
  m.xi *= 1e200;
  const auto bad = Predictor(m).rollout(r.frame, 100, 12);
  REQUIRE(bad.diverged_at);
  CHECK(bad.states.rows() < 13);
}

TEST_CASE("one-step series covers the window") {
  const auto r = exact_run(120.0, true, 13.0);
  const Predictor p(analytical_model(r.cfg, r.frame.dt));
  const auto s = one_step_series(p, r.frame, {});
  CHECK(s.rows() == 360);
  CHECK(s.column("t").front() == doctest::Approx(10.0 + 1.0 / 120.0));
  CHECK(s.column("t").back() == doctest::Approx(13.0));
  CHECK(s.names()[1] == "gfm1.f_measured");
  const auto& e = s.column("gfl2.f_error");
  const auto& fp = s.column("gfl2.f_predicted");
  const auto& fm = s.column("gfl2.f_measured");
  for (std::size_t k = 0; k < s.rows(); ++k) {
    CHECK(e[k] == fp[k] - fm[k]);
    CHECK(std::abs(e[k]) < 1e-3);
  }
  OneStepOptions bad;
  bad.window_start = 20.0;
  bad.window_end = 21.0;
  CHECK_THROWS_AS(one_step_series(p, r.frame, bad), ConfigError);
}

TEST_CASE("error metrics") {
  const std::vector<double> t{10.0, 10.25, 10.5, 10.75, 11.0};
  const std::vector<double> meas{60, 60, 60, 60, 60};
  const std::vector<double> pred{60.1, 61.5, 60.3, 60.4, 59.8};
  const auto m = error_metrics(t, pred, meas, 10.5, 1.0);
  REQUIRE(m.divergence_time);
  CHECK(*m.divergence_time == 10.25);
  CHECK(m.samples == 3);
  CHECK(m.rmse == doctest::Approx(std::sqrt((0.09 + 0.16 + 0.04) / 3.0)).epsilon(1e-9));
  CHECK(m.max_abs == doctest::Approx(0.4).epsilon(1e-9));

  const auto calm = error_metrics(t, meas, meas, 10.5, 1.0);
  CHECK_FALSE(calm.divergence_time);
  CHECK(calm.rmse == 0.0);

  auto nan_pred = meas;
  nan_pred[3] = std::numeric_limits<double>::quiet_NaN();
  const auto n = error_metrics(t, nan_pred, meas, 10.5, 1.0);
  CHECK(*n.divergence_time == 10.75);
  CHECK(std::isinf(n.rmse));
  CHECK_THROWS_AS(error_metrics(t, pred, std::vector<double>{1.0}, 10.5, 1.0), ConfigError);
}

TEST_CASE("model and library must agree") {
  auto m = analytical_model(excited_run().cfg, 1.0 / 120.0);
  m.column_labels[0] = "gfm1:bogus";
  CHECK_THROWS_AS(Predictor{m}, ConfigError);
}
