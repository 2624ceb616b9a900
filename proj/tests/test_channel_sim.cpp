#include <doctest.h>

#include <cmath>

#include "semcast/channel_sim.hpp"

using namespace semcast;

namespace {

// negligible-variance Gaussian stands in for a noiseless channel
NoiseModel near_zero_noise() { return NoiseModel::gaussian(1e-30); }

BroadcastChannelParams basic_params(double g1, double g2, double noise_var, double power) {
  return BroadcastChannelParams(g1, g2, NoiseModel::gaussian(noise_var),
                                NoiseModel::gaussian(noise_var), power);
}

Eigen::ArrayXd unit_symbols(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  return rng.normal_array(n);
}

}  // namespace

TEST_CASE("superposition preserves the power budget") {
  const auto x1 = unit_symbols(200000, 1);
  const auto x2 = unit_symbols(200000, 2);
  const auto frame = superpose(x1, x2, 0.37, 10.0);
  CHECK(frame.combined.square().mean() == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("the two allocated powers always sum to the budget") {
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    const double alpha = rng.uniform01();
    const double p = rng.uniform(0.1, 50.0);
    CHECK(std::abs(alpha * p + (1.0 - alpha) * p - p) <= 1e-15 * p);
  }
}

TEST_CASE("superpose validates its inputs") {
  CHECK_THROWS_AS(superpose(unit_symbols(8, 1), unit_symbols(9, 2), 0.5, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(superpose(unit_symbols(8, 1), unit_symbols(8, 2), 1.5, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(superpose(unit_symbols(8, 1), unit_symbols(8, 2), 0.5, 0.0),
                  std::invalid_argument);
}

TEST_CASE("no noise, unit gain, alpha 1 gives y1 = sqrt(P) x1 exactly") {
  const auto x1 = unit_symbols(1024, 3);
  const auto x2 = unit_symbols(1024, 4);
  const auto frame = superpose(x1, x2, 1.0, 4.0);
  BroadcastChannelParams p(1.0, 0.5, near_zero_noise(), near_zero_noise(), 4.0);
  const auto rx = transmit(frame, p, TransmitOptions{}, RngSeed{5});
  CHECK((rx.y1 - 2.0 * x1).abs().maxCoeff() < 1e-12);
}

TEST_CASE("transmit is bit-reproducible under a fixed seed") {
  const auto x1 = unit_symbols(256, 6);
  const auto x2 = unit_symbols(256, 7);
  const auto frame = superpose(x1, x2, 0.5, 2.0);
  auto params = basic_params(1.0, 0.5, 1.0, 2.0);
  const auto a = transmit(frame, params, TransmitOptions{}, RngSeed{42});
  const auto b = transmit(frame, params, TransmitOptions{}, RngSeed{42});
  CHECK((a.y1 == b.y1).all());
  CHECK((a.y2 == b.y2).all());
}

TEST_CASE("received power matches the moment identity within 1 percent") {
  const Eigen::Index n = 1000000;
  const auto x1 = unit_symbols(n, 8);
  const auto x2 = unit_symbols(n, 9);
  const auto frame = superpose(x1, x2, 0.4, 10.0);
  auto params = basic_params(1.3, 0.5, 0.7, 10.0);
  const auto rx = transmit(frame, params, TransmitOptions{}, RngSeed{10});
  CHECK(rx.y1.square().mean() ==
        doctest::Approx(1.3 * 1.3 * 10.0 + 0.7).epsilon(0.01));
}

TEST_CASE("per-stage seeds are independent") {
  const auto x1 = unit_symbols(512, 11);
  const auto x2 = unit_symbols(512, 12);
  const auto frame = superpose(x1, x2, 0.5, 2.0);
  BroadcastChannelParams params(1.0, 0.5, NoiseModel::gaussian(1.0), NoiseModel::gaussian(1.0),
                                2.0, 1.0, 2.0);
  TransmitOptions opt;
  opt.fading = FadingMode::Slow;
  TransmitSeeds s1(RngSeed{100});
  TransmitSeeds s2(RngSeed{100});
  s2.noise2 = Rng(999).derive("noise2");  // perturb only user 2's noise stage
  const auto a = transmit(frame, params, opt, s1);
  const auto b = transmit(frame, params, opt, s2);
  CHECK((a.y1 == b.y1).all());
  CHECK((a.gains1 == b.gains1).all());
  CHECK((a.y2 != b.y2).any());
}

TEST_CASE("genie SIC recovers x1 when noise vanishes") {
  const auto x1 = unit_symbols(4096, 13);
  const auto x2 = unit_symbols(4096, 14);
  BroadcastChannelParams p(1.0, 0.5, near_zero_noise(), near_zero_noise(), 10.0);
  for (double alpha : {0.05, 0.25, 0.5, 0.75, 1.0}) {
    const auto frame = superpose(x1, x2, alpha, 10.0);
    const auto rx = transmit(frame, p, TransmitOptions{}, RngSeed{15});
    const auto residual = sic_decode(rx, alpha, p, x2);
    const Eigen::ArrayXd recovered = residual / (1.0 * std::sqrt(alpha * 10.0));
    CHECK((recovered - x1).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("genie SIC residual variance is G1^2 aP + s1^2") {
  const Eigen::Index n = 1000000;
  const auto x1 = unit_symbols(n, 16);
  const auto x2 = unit_symbols(n, 17);
  const double alpha = 0.3;
  auto params = basic_params(1.0, 0.5, 0.5, 10.0);
  const auto frame = superpose(x1, x2, alpha, 10.0);
  const auto rx = transmit(frame, params, TransmitOptions{}, RngSeed{18});
  const auto residual = sic_decode(rx, alpha, params, x2);
  CHECK(residual.square().mean() == doctest::Approx(alpha * 10.0 + 0.5).epsilon(0.01));
}

TEST_CASE("alpha 0 leaves only noise after SIC") {
  const auto x1 = unit_symbols(65536, 19);
  const auto x2 = unit_symbols(65536, 20);
  auto params = basic_params(1.0, 0.5, 0.25, 10.0);
  const auto frame = superpose(x1, x2, 0.0, 10.0);
  const auto rx = transmit(frame, params, TransmitOptions{}, RngSeed{21});
  const auto residual = sic_decode(rx, 0.0, params, x2);
  CHECK((residual - rx.noise1).abs().maxCoeff() < 1e-12);
}

TEST_CASE("hard-decision SIC matches genie SIC when decisions are easy") {
  Rng rng(22);
  const Eigen::Index n = 4096;
  Eigen::ArrayXd x1(n), x2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x1[i] = rng.below(2) ? 1.0 : -1.0;
    x2[i] = rng.below(2) ? 1.0 : -1.0;
  }
  BroadcastChannelParams p(1.0, 0.5, NoiseModel::gaussian(1e-6), NoiseModel::gaussian(1e-6),
                           10.0);
  const auto frame = superpose(x1, x2, 0.1, 10.0);
  const auto rx = transmit(frame, p, TransmitOptions{}, RngSeed{23});
  Eigen::ArrayXd constellation(2);
  constellation << -1.0, 1.0;
  const auto hard = sic_decode_hard(rx, 0.1, p, constellation);
  const auto genie = sic_decode(rx, 0.1, p, x2);
  CHECK((hard - genie).abs().maxCoeff() < 1e-9);
}

TEST_CASE("fading draws one gain per frame in slow mode and many in fast mode") {
  const auto x1 = unit_symbols(128, 24);
  const auto x2 = unit_symbols(128, 25);
  BroadcastChannelParams params(1.0, 0.5, NoiseModel::gaussian(1.0), NoiseModel::gaussian(1.0),
                                2.0, 1.0, 2.0);
  const auto frame = superpose(x1, x2, 0.5, 2.0);
  TransmitOptions slow;
  slow.fading = FadingMode::Slow;
  const auto rx_slow = transmit(frame, params, slow, RngSeed{26});
  CHECK(rx_slow.gains1.size() == 1);
  CHECK(rx_slow.gain1() >= 0.0);  // envelope by default
  TransmitOptions fast;
  fast.fading = FadingMode::Fast;
  const auto rx_fast = transmit(frame, params, fast, RngSeed{26});
  CHECK(rx_fast.gains1.size() == 128);
  TransmitOptions signed_slow;
  signed_slow.fading = FadingMode::Slow;
  signed_slow.signed_gains = true;
  bool saw_negative = false;
  for (std::uint64_t s = 0; s < 40 && !saw_negative; ++s) {
    const auto rx = transmit(frame, params, signed_slow, RngSeed{s});
    saw_negative = rx.gain1() < 0.0 || rx.gain2() < 0.0;
  }
  CHECK(saw_negative);
}

TEST_CASE("training channel: identity policy is exact") {
  Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(12, -1.0, 1.0);
  const Eigen::VectorXd zhat =
      channel_for_training(z, GainPolicy::identity(), std::nullopt, NoiseModel::gaussian(1.0),
                           RngSeed{30});
  CHECK(zhat == z);
}

TEST_CASE("training channel: realized SNR is within 0.1 dB of the request") {
  Rng rng(31);
  Eigen::MatrixXd z = rng.normal_matrix(12, 2048);
  TrainChannel ch{GainPolicy::identity(), 4.0, angc_noise(), false};
  Rng draw_rng = Rng(32).derive("draw");
  const ChannelDraw draw = draw_channel(ch, z, draw_rng);
  const double sig = z.array().square().mean();
  const double noi = draw.additive.array().square().mean();
  const double realized_db = 10.0 * std::log10(sig / noi);
  CHECK(std::abs(realized_db - 4.0) < 0.1);
}

TEST_CASE("training channel: a 300 dB cap makes noise negligible") {
  Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(16, 0.1, 1.6);
  const Eigen::VectorXd zhat = channel_for_training(z, GainPolicy::identity(), 1e9,
                                                    NoiseModel::gaussian(1.0), RngSeed{33});
  CHECK((zhat - z).norm() < 1e-10 * z.norm());
}

TEST_CASE("training channel: zero signal with finite SNR is an error") {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(8);
  CHECK_THROWS_AS(channel_for_training(z, GainPolicy::identity(), 10.0,
                                       NoiseModel::gaussian(1.0), RngSeed{34}),
                  std::invalid_argument);
}

TEST_CASE("equalized fading folds the gain into the noise") {
  Rng rng(35);
  Eigen::MatrixXd z = rng.normal_matrix(8, 64);
  TrainChannel ch{GainPolicy::rayleigh(1.0, 0.3), 10.0, NoiseModel::gaussian(1.0), true};
  Rng draw_rng = Rng(36).derive("draw");
  const ChannelDraw draw = draw_channel(ch, z, draw_rng);
  CHECK(draw.gain_factor == 1.0);  // gain divided out
  CHECK(draw.additive.size() == z.size());
}

TEST_CASE("gain policies respect the outage floor") {
  Rng rng(37);
  for (int i = 0; i < 200; ++i) {
    CHECK(draw_gain(GainPolicy::rayleigh(1.0, 0.3), rng) >= 0.3);
    const double g = draw_gain(GainPolicy::rayleigh_signed(1.0, 0.2), rng);
    CHECK(std::abs(g) >= 0.2);
  }
  CHECK(draw_gain(GainPolicy::fixed(0.7), rng) == 0.7);
}
