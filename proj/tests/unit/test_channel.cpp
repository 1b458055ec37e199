#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "simofdm/channel.hpp"
#include "simofdm/error.hpp"
#include "simofdm/random.hpp"

using namespace simofdm;

namespace {

WaveformConfig desk() {
  WaveformConfig c;
  c.subcarriers = 64;
  c.symbols = 16;
  return c;
}

std::vector<oracle::PathSpec> specs(const PathSet& ps, const WaveformConfig& c) {
  std::vector<oracle::PathSpec> out;
  for (const auto& p : ps.paths)
    out.push_back({p.gain, static_cast<int>(std::lround(p.delay / tap_spacing(c))), p.doppler * c.symbol_duration});
  return out;
}

double max_rel(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("channel") {
  TEST_CASE("path sampling shapes") {
    const auto c = desk();
    Rng rng = derive_stream(1, "paths", 0);
    CHECK(sample_paths(ChannelModel::los, 8, 16, 10.0, 2.0, c, rng).size() == 1);
    const auto st = sample_paths(ChannelModel::rician, 8, 16, 0.0, 2.0, c, rng);
    REQUIRE(st.size() == 8);
    for (const auto& p : st.paths) CHECK(p.doppler == 0.0);
    std::set<long> taps;
    for (const auto& p : st.paths) taps.insert(std::lround(p.delay / tap_spacing(c)));
    CHECK(taps.size() == 8);
    CHECK(*taps.rbegin() < 16);
    CHECK_THROWS_AS(sample_paths(ChannelModel::rayleigh, 0, 16, 0.0, 0.0, c, rng), ConfigError);
  }

  TEST_CASE("Rician dominant path carries K times the scattered power") {
    const auto c = desk();
    Rng rng = derive_stream(2, "rician", 0);
    double dom = 0.0, scat = 0.0;
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
      const auto ps = sample_paths(ChannelModel::rician, 4, 16, 0.0, 2.0, c, rng);
      dom += std::norm(ps.paths[0].gain);
      for (std::size_t p = 1; p < ps.size(); ++p) scat += std::norm(ps.paths[p].gain);
    }
    const double ratio = (dom / draws) / (scat / (3.0 * draws));
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("Doppler spread follows the velocity spread") {
    const auto c = desk();
    Rng rng = derive_stream(3, "doppler", 0);
    double sq = 0.0;
    int n = 0;
    for (int t = 0; t < 4000; ++t)
      for (const auto& p : sample_paths(ChannelModel::rayleigh, 4, 16, 10.0, 0.0, c, rng).paths) {
        sq += p.doppler * p.doppler;
        ++n;
      }
    const double expected = c.carrier_frequency * 10.0 / kSpeedOfLight;
    CHECK(std::sqrt(sq / n) == doctest::Approx(expected).epsilon(0.03));
  }

  TEST_CASE("static channel matrix is diagonal with the tap transfer function") {
    const auto c = desk();
    Rng rng = derive_stream(4, "diag", 0);
    const auto ps = sample_paths(ChannelModel::rician, 8, 16, 0.0, 2.0, c, rng);
    const CMatrix H = freq_channel_matrix(ps, c).m;
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) {
        if (i != j) {
          REQUIRE(H(i, j) == cd{});
          continue;
        }
        cd expect{};
        for (const auto& p : ps.paths) expect += p.gain * std::exp(-kJ * (kTwoPi * p.delay * j / c.symbol_duration));
        CHECK(std::abs(H(j, j) - expect) < 1e-12);
      }
  }

  TEST_CASE("unit path at zero delay and Doppler gives the identity") {
    const auto c = desk();
    const CMatrix H = freq_channel_matrix(std::vector<Path>{Path{}}, c).m;
    CHECK((H - CMatrix::Identity(64, 64)).norm() < 1e-12);
  }

  TEST_CASE("closed form agrees with the time-domain channel") {
    const auto c = desk();
    Rng rng = derive_stream(5, "oracle-h", 0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const auto ps = sample_paths(t % 2 ? ChannelModel::rician : ChannelModel::rayleigh, 6, 16, 40.0, 2.0, c, rng);
      worst = std::max(worst, max_rel(freq_channel_matrix(ps, c).m, oracle::time_domain_channel(specs(ps, c), 64)));
    }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("closed form handles integer normalized Doppler exactly") {
    const auto c = desk();
    Path p;
    p.doppler = 1.0 / c.symbol_duration;
    p.delay = 2 * tap_spacing(c);
    const CMatrix H = freq_channel_matrix(std::vector<Path>{p}, c).m;
    const CMatrix ref = oracle::time_domain_channel({{cd{1.0, 0.0}, 2, 1.0}}, 64);
    CHECK(max_rel(H, ref) < 1e-9);
  }

  TEST_CASE("tap vector") {
    const auto c = desk();
    PathSet ps;
    ps.taps = 4;
    ps.paths = {Path{cd{0.5, 0.5}, 0.0, 0.0}};
    CHECK(cir_taps(ps, c, 0) == cir_taps(ps, c, 37));
    ps.paths[0].doppler = 300.0;
    for (int m : {0, 5, 63}) {
      const CVector h = cir_taps(ps, c, m);
      CHECK(std::abs(h(0) - cd{0.5, 0.5} * std::exp(kJ * (kTwoPi * 300.0 * m * c.symbol_duration / 64))) < 1e-14);
      CHECK(h.tail(3).norm() == 0.0);
    }
    CHECK_THROWS_AS(cir_taps(ps, c, 64), InputError);
  }

  TEST_CASE("tap vector DFT gives the diagonal of H when static") {
    const auto c = desk();
    Rng rng = derive_stream(6, "taps", 0);
    const auto ps = sample_paths(ChannelModel::rayleigh, 5, 16, 0.0, 0.0, c, rng);
    const CVector h = cir_taps(ps, c, 0);
    const CMatrix H = freq_channel_matrix(ps, c).m;
    for (int j = 0; j < 64; ++j) {
      cd acc{};
      for (int d = 0; d < h.size(); ++d) acc += h(d) * std::exp(-kJ * (kTwoPi * d * j / 64.0));
      CHECK(std::abs(acc - H(j, j)) < 1e-12);
    }
  }

  TEST_CASE("target response") {
    const auto c = desk();
    const auto one = make_targets({{cd{1.0, 0.0}, 0.0, 0.0}}, c);
    CHECK((target_response(one, c).array() == cd{1.0, 0.0}).all());
    const auto t = make_targets({{cd{0.6, -0.8}, 42.0, 17.0}}, c);
    CHECK((target_response(t, c).cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
    const auto pair = make_targets({{cd{1.0, 0.0}, 30.0, 12.0}, {cd{1.0, 0.0}, 30.0, -12.0}}, c);
    const CMatrix G = target_response(pair, c);
    const double tau = pair.delay_phase[0], f = pair.doppler[0];
    for (int m : {0, 9, 63})
      for (int n : {0, 3, 15})
        CHECK(std::abs(G(m, n) - 2.0 * std::exp(-kJ * (m * tau)) * std::cos(kTwoPi * n * f)) < 1e-12);
  }

  TEST_CASE("normalizations invert") {
    const auto c = desk();
    CHECK(range_from_delay(normalized_delay(37.5, c), c) == doctest::Approx(37.5));
    CHECK(velocity_from_doppler(normalized_doppler(-8.25, c), c) == doctest::Approx(-8.25));
    CHECK(normalized_delay(10.0, c) == doctest::Approx(4 * kPi * 15e3 * 10.0 / kSpeedOfLight));
    CHECK(normalized_doppler(10.0, c) == doctest::Approx(2 * 2.5e9 * 10.0 * 6.67e-5 / kSpeedOfLight));
  }

  TEST_CASE("echo without noise") {
    const auto c = desk();
    Rng rng = derive_stream(7, "echo", 0);
    const Frame x{complex_gaussian(64, 16, rng), FrameRole::superposed};
    const auto unit = make_targets({{cd{1.0, 0.0}, 0.0, 0.0}}, c);
    CHECK((generate_echo(x, unit, 0.0, rng, c).samples - x.samples).norm() == 0.0);
    const auto t = make_targets({{cd{0.3, 0.2}, 55.0, -4.0}, {cd{1.0, 0.0}, 12.0, 9.0}}, c);
    const CMatrix ratio = generate_echo(x, t, 0.0, rng, c).samples.cwiseQuotient(x.samples);
    CHECK((ratio - target_response(t, c)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("echo and link noise moments") {
    const auto c = desk();
    Rng rng = derive_stream(8, "noise", 0);
    const Frame x{complex_gaussian(64, 16, rng), FrameRole::superposed};
    const auto t = make_targets({{cd{1.0, 0.0}, 20.0, 3.0}}, c);
    const CMatrix clean = target_response(t, c).cwiseProduct(x.samples);
    const double sigma = 0.7;
    double acc = 0.0;
    for (int i = 0; i < 1000; ++i) acc += (generate_echo(x, t, sigma, rng, c).samples - clean).squaredNorm();
    CHECK(acc / (1000.0 * 64 * 16) == doctest::Approx(sigma * sigma).epsilon(0.03));

    const ChannelMatrix H{CMatrix::Identity(64, 64), MatrixRole::channel};
    acc = 0.0;
    for (int i = 0; i < 1000; ++i)
      acc += (apply_comm_channel(x, H, 2.0, sigma, rng).samples - std::sqrt(2.0) * x.samples).squaredNorm();
    CHECK(acc / (1000.0 * 64 * 16) == doctest::Approx(sigma * sigma).epsilon(0.03));
  }

  TEST_CASE("noiseless propagation") {
    const auto c = desk();
    Rng rng = derive_stream(9, "prop", 0);
    const Frame x{complex_gaussian(64, 16, rng), FrameRole::comm};
    const ChannelMatrix I{CMatrix::Identity(64, 64), MatrixRole::channel};
    const Frame pre{x.samples / 8.0, FrameRole::comm};
    CHECK((apply_comm_channel(pre, I, 3.0, 0.0, rng).samples - std::sqrt(3.0) / 8.0 * x.samples).norm() < 1e-12);

    const auto ps = sample_paths(ChannelModel::rician, 8, 16, 10.0, 2.0, c, rng);
    const ChannelMatrix H = freq_channel_matrix(ps, c);
    const CMatrix inv = H.m.inverse();
    const Frame comp{inv * x.samples / inv.norm(), FrameRole::comm};
    const Frame y = apply_comm_channel(comp, H, 3.0, 0.0, rng);
    CHECK((y.samples - std::sqrt(3.0) / inv.norm() * x.samples).norm() < 1e-9 * x.samples.norm());
    CHECK(y.samples.squaredNorm() == doctest::Approx(3.0 * (H.m * comp.samples).squaredNorm()).epsilon(1e-12));

    const Frame wrong{CMatrix::Zero(32, 16), FrameRole::comm};
    CHECK_THROWS_AS(apply_comm_channel(wrong, H, 1.0, 0.0, rng), InputError);
  }

  TEST_CASE("condition estimate") {
    CHECK(reciprocal_condition(CMatrix::Identity(8, 8)) == doctest::Approx(1.0));
    CMatrix s = CMatrix::Identity(8, 8);
    s(7, 7) = 0.0;
    CHECK(reciprocal_condition(s) < 1e-12);
  }
}
