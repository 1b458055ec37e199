#include <doctest.h>

#include "oracles.hpp"
#include "simofdm/channel.hpp"
#include "simofdm/error.hpp"
#include "simofdm/random.hpp"
#include "simofdm/sensing.hpp"
#include "simofdm/waveform.hpp"

using namespace simofdm;

namespace {

WaveformConfig frame_config(int M, int N) {
  WaveformConfig c;
  c.subcarriers = M;
  c.symbols = N;
  return c;
}

RangeVelocityGrid desk_grid() { return {Axis::from_range(0.0, 320.0, 65), Axis::from_range(-35.0, 65.0, 51)}; }

Frame sense_only(const WaveformConfig& c) { return build_sense_frame(c); }

EstimateSet single(double r, double v) {
  EstimateSet s;
  s.estimates.push_back({r, v, 1.0, {}, {}, true});
  return s;
}

}  // namespace

TEST_SUITE("sensing") {
  TEST_CASE("axis helpers") {
    const auto a = Axis::from_range(0.0, 10.0, 11);
    CHECK(a.step == doctest::Approx(1.0));
    CHECK(a.max() == doctest::Approx(10.0));
    CHECK(Axis::from_step(-5.0, 5.0, 2.5).count == 5);
    CHECK_THROWS_AS(Axis::from_range(0.0, 1.0, 0), InputError);
    RangeVelocityGrid bad{{0.0, -1.0, 4}, {0.0, 1.0, 4}};
    CHECK_THROWS_AS(bad.validate(), InputError);
  }

  TEST_CASE("matched filter fast path equals the direct double sum") {
    const auto c = frame_config(32, 8);
    Rng rng = derive_stream(11, "mf-direct", 0);
    const RangeVelocityGrid grid{Axis::from_range(-20.0, 300.0, 23), Axis::from_range(-60.0, 80.0, 19)};
    for (int t = 0; t < 5; ++t) {
      const CMatrix R = complex_gaussian(32, 8, rng);
      const CMatrix X = complex_gaussian(32, 8, rng);
      const auto s = matched_filter_spectrum({R, FrameRole::echo}, {X, FrameRole::sense}, grid, c);
      double worst = 0.0;
      const double peak = s.values.maxCoeff();
      for (int i = 0; i < grid.range.count; ++i)
        for (int j = 0; j < grid.velocity.count; ++j) {
          const double ref = oracle::direct_matched_filter(R, X, grid.range.value(i), grid.velocity.value(j),
                                                           c.subcarrier_spacing, c.carrier_frequency, c.symbol_duration);
          worst = std::max(worst, std::abs(s.values(i, j) - ref) / peak);
        }
      CHECK(worst < 1e-6);
    }
  }

  TEST_CASE("noiseless single target peaks at its cell") {
    const auto c = frame_config(64, 16);
    const auto grid = desk_grid();
    const Frame xs = sense_only(c);
    const auto t = make_targets({{cd{1.0, 0.0}, grid.range.value(12), grid.velocity.value(30)}}, c);
    Rng rng = derive_stream(12, "mf-peak", 0);
    const Frame echo = generate_echo(xs, t, 0.0, rng, c);
    const auto s = matched_filter_spectrum(echo, xs, grid, c);
    Eigen::Index i = 0, j = 0;
    s.values.maxCoeff(&i, &j);
    CHECK(i == 12);
    CHECK(j == 30);
    const auto est = find_peaks(s, 1);
    REQUIRE(est.size() == 1);
    CHECK(std::abs(est.estimates[0].range - grid.range.value(12)) <= grid.range.step);
    CHECK(std::abs(est.estimates[0].velocity - grid.velocity.value(30)) <= grid.velocity.step);
  }

  TEST_CASE("two separated targets give two dominant peaks") {
    const auto c = frame_config(256, 64);
    const RangeVelocityGrid grid{Axis::from_range(0.0, 160.0, 81), Axis::from_range(-60.0, 60.0, 25)};
    const Frame xs = sense_only(c);
    const auto t = make_targets({{cd{1.0, 0.0}, grid.range.value(20), grid.velocity.value(5)},
                                 {cd{0.8, 0.3}, grid.range.value(50), grid.velocity.value(18)}},
                                c);
    Rng rng = derive_stream(13, "mf-two", 0);
    const auto s = matched_filter_spectrum(generate_echo(xs, t, 0.0, rng, c), xs, grid, c);
    const auto est = find_peaks(s, 2);
    REQUIRE(est.size() == 2);
    std::vector<std::pair<double, double>> got;
    for (const auto& e : est.estimates) got.emplace_back(e.range, e.velocity);
    std::sort(got.begin(), got.end());
    CHECK(got[0].first == doctest::Approx(grid.range.value(20)).epsilon(0.02));
    CHECK(got[0].second == doctest::Approx(grid.velocity.value(5)).epsilon(0.05));
    CHECK(got[1].first == doctest::Approx(grid.range.value(50)).epsilon(0.02));
    CHECK(got[1].second == doctest::Approx(grid.velocity.value(18)).epsilon(0.05));
  }

  TEST_CASE("noise-only spectra rarely cross the detection threshold") {
    const auto c = frame_config(64, 16);
    const auto grid = desk_grid();
    const Frame xs = sense_only(c);
    const double thr = detection_threshold(grid, 0.05);
    Rng rng = derive_stream(14, "mf-noise", 0);
    int below = 0;
    for (int t = 0; t < 1000; ++t) {
      const Frame n{complex_gaussian(64, 16, rng), FrameRole::echo};
      below += peak_to_mean(matched_filter_spectrum(n, xs, grid, c)) < thr;
    }
    CHECK(below >= 950);
  }

  TEST_CASE("empty grid is rejected") {
    const auto c = frame_config(64, 16);
    const Frame xs = sense_only(c);
    const RangeVelocityGrid grid{{0.0, 1.0, 0}, {0.0, 1.0, 4}};
    CHECK_THROWS_AS(matched_filter_spectrum(xs, xs, grid, c), InputError);
  }

  TEST_CASE("peak ordering and flags") {
    const RangeVelocityGrid grid{Axis::from_range(0.0, 9.0, 10), Axis::from_range(0.0, 9.0, 10)};
    RMatrix v = RMatrix::Constant(10, 10, 1.0);
    v(6, 2) = 5.0;
    v(2, 7) = 5.0;
    v(8, 8) = 3.0;
    const auto est = find_peaks({grid, v}, 3);
    REQUIRE(est.size() == 3);
    CHECK(est.estimates[0].range == doctest::Approx(2.0));
    CHECK(est.estimates[1].range == doctest::Approx(6.0));
    CHECK(est.estimates[2].power == doctest::Approx(3.0));
    CHECK_FALSE(est.incomplete);
    CHECK(find_peaks({grid, v}, 5).incomplete);
  }

  TEST_CASE("MUSIC noise subspace is orthogonal to the true steering vector") {
    const auto c = frame_config(64, 16);
    const auto grid = desk_grid();
    Rng rng = derive_stream(15, "music", 0);
    const auto cb = build_index_codebook(8, 2);
    const Frame xc = map_bits_to_comm_frame(random_bits(static_cast<std::size_t>(64 * 16), rng), c, cb);
    const Frame x = superpose(xc, sense_only(c), 0.5);
    const auto t = make_targets({{cd{1.0, 0.0}, grid.range.value(17), grid.velocity.value(20)}}, c);
    const Frame echo = generate_echo(x, t, 0.0, rng, c);
    bool deficient = true;
    const auto s = music_spectrum(echo, x, grid, 1, c, {}, &deficient);
    Eigen::Index i = 0, j = 0;
    const double peak = s.values.maxCoeff(&i, &j);
    CHECK(i == 17);
    CHECK(j == 20);
    const double L = 32.0 * 8.0;
    CHECK(1.0 / peak < 1e-6 * L);
    CHECK(10.0 * std::log10(peak / s.values.minCoeff()) > 40.0);
    const auto est = music_2d(echo, x, grid, 1, c);
    REQUIRE(est.size() == 1);
    CHECK(est.estimates[0].range == doctest::Approx(grid.range.value(17)).epsilon(0.01));
    CHECK(est.estimates[0].velocity == doctest::Approx(grid.velocity.value(20)).epsilon(0.01));
  }

  TEST_CASE("MUSIC beats the unrefined matched-filter grid for one target at 20 dB") {
    const auto c = frame_config(64, 16);
    const auto grid = desk_grid();
    Rng rng = derive_stream(16, "music-vs-grid", 0);
    const auto cb = build_index_codebook(8, 2);
    const Frame xs = sense_only(c);
    double e_mu = 0.0, e_grid = 0.0;
    const int trials = 200;
    for (int k = 0; k < trials; ++k) {
      std::uniform_real_distribution<double> ur(20.0, 300.0), uv(-25.0, 55.0);
      const double r = ur(rng), v = uv(rng);
      const auto t = make_targets({{cd{1.0, 0.0}, r, v}}, c);
      const Frame xc = map_bits_to_comm_frame(random_bits(static_cast<std::size_t>(64 * 16), rng), c, cb);
      const Frame x = superpose(xc, xs, 0.3);
      const Frame echo = generate_echo(x, t, std::sqrt(0.01), rng, c);
      const auto s = matched_filter_spectrum(echo, xs, grid, c);
      Eigen::Index i = 0, j = 0;
      s.values.maxCoeff(&i, &j);
      const double gr = grid.range.value(static_cast<double>(i)) - r, gv = grid.velocity.value(static_cast<double>(j)) - v;
      e_grid += gr * gr / (grid.range.step * grid.range.step) + gv * gv / (grid.velocity.step * grid.velocity.step);
      const auto mu = music_2d(echo, x, grid, 1, c);
      const double mr = mu.estimates[0].range - r, mv = mu.estimates[0].velocity - v;
      e_mu += mr * mr / (grid.range.step * grid.range.step) + mv * mv / (grid.velocity.step * grid.velocity.step);
    }
    CHECK(e_mu < e_grid);
  }

  TEST_CASE("MUSIC argument checks") {
    const auto c = frame_config(64, 16);
    const Frame xs = sense_only(c);
    MusicOptions o;
    o.window = {65, 4};
    CHECK_THROWS_AS(music_2d(xs, xs, desk_grid(), 1, c, o), InputError);
    o.window = {2, 1};
    CHECK_THROWS_AS(music_2d(xs, xs, desk_grid(), 2, c, o), InputError);
  }

  TEST_CASE("masked division imputes small entries") {
    CMatrix x = CMatrix::Constant(3, 3, cd{1.0, 0.0});
    CMatrix r = CMatrix::Constant(3, 3, cd{2.0, 0.0});
    x(1, 1) = 1e-3;
    const CMatrix y = masked_divide(r, x, 0.1);
    CHECK(std::abs(y(1, 1) - cd{2.0, 0.0}) < 1e-12);
    CHECK(std::abs(y(0, 0) - cd{2.0, 0.0}) < 1e-12);
  }

  TEST_CASE("fusion weights") {
    CHECK(fusion_weight(1.0, 1.0) == 0.5);
    CHECK(fusion_weight(std::nullopt, 2.0) == 0.5);
    CHECK(fusion_weight(4.0, 1e-12) < 1e-12);
    FusionPrior eq;
    const auto f = fuse(single(10.0, 2.0), single(12.0, 4.0), eq, 5.0, 5.0, 1.0);
    CHECK(f.estimates[0].range == doctest::Approx(11.0));
    CHECK(f.estimates[0].velocity == doctest::Approx(3.0));
    FusionPrior sharp{4.0, 0.0, 4.0, 0.0};
    const auto g = fuse(single(10.0, 2.0), single(12.0, 4.0), sharp, 5.0, 5.0, 1.0);
    CHECK(g.estimates[0].range == doctest::Approx(12.0));
  }

  TEST_CASE("unpaired estimates pass through flagged") {
    const auto f = fuse(single(10.0, 2.0), single(90.0, 40.0), {}, 5.0, 5.0, 1.0);
    REQUIRE(f.size() == 2);
    CHECK(f.unpaired);
    CHECK_FALSE(f.estimates[0].fused);
    CHECK_FALSE(f.estimates[1].fused);
    CHECK(f.estimates[0].range == 10.0);
    CHECK(f.estimates[1].range == 90.0);
  }

  TEST_CASE("fusion is convex and reaches the MMSE variance") {
    Rng rng = derive_stream(17, "fusion", 0);
    std::normal_distribution<double> n1(0.0, 2.0), n2(0.0, 1.0);
    const FusionPrior p{4.0, 1.0, 4.0, 1.0};
    double acc = 0.0;
    const int count = 10000;
    for (int i = 0; i < count; ++i) {
      const double a = 50.0 + n1(rng), b = 50.0 + n2(rng);
      const auto f = fuse(single(a, a - 50.0), single(b, b - 50.0), p, 100.0, 100.0, 1.0);
      const double r = f.estimates[0].range;
      REQUIRE(r >= std::min(a, b) - 1e-12);
      REQUIRE(r <= std::max(a, b) + 1e-12);
      acc += (r - 50.0) * (r - 50.0);
    }
    CHECK(acc / count == doctest::Approx(0.8).epsilon(0.05));
  }

  TEST_CASE("CRLB scales with power and noise") {
    const auto c = frame_config(64, 16);
    const auto t = make_targets({{cd{1.0, 0.0}, 30.0, 5.0}, {cd{0.5, 0.5}, 80.0, 10.0}}, c);
    const Frame xs = sense_only(c);
    const auto base = crlb(t, xs, 0.3, 1.0, c);
    const auto power = crlb(t, xs, 0.3, 2.0, c);
    const auto noise = crlb(t, xs, 0.6, 1.0, c);
    for (std::size_t p = 0; p < 2; ++p) {
      CHECK_FALSE(base.targets[p].singular);
      CHECK(std::abs(power.targets[p].range / base.targets[p].range - 0.5) < 1e-10);
      CHECK(std::abs(power.targets[p].velocity / base.targets[p].velocity - 0.5) < 1e-10);
      CHECK(std::abs(noise.targets[p].range / base.targets[p].range - 2.0) < 1e-10);
      CHECK(std::abs(noise.targets[p].velocity / base.targets[p].velocity - 2.0) < 1e-10);
      const auto& J = base.targets[p].fisher;
      CHECK(J(0, 1) == doctest::Approx(J(1, 0)));
      CHECK(J.determinant() > 0.0);
      CHECK(J(0, 0) > 0.0);
    }
  }

  TEST_CASE("association and RMSE") {
    std::vector<Target> truth{{cd{1.0, 0.0}, 10.0, 1.0}, {cd{1.0, 0.0}, 50.0, -3.0}};
    std::vector<Estimate> est{{50.5, -3.0, 2.0, {}, {}, true}, {10.0, 1.2, 1.0, {}, {}, true}};
    CHECK(associate(est, truth, 5.0, 5.0, 1.0) == std::vector<int>{1, 0});
    CHECK(associate({est[0]}, truth, 5.0, 5.0, 1.0) == std::vector<int>{-1, 0});

    std::vector<EstimateSet> sets;
    std::vector<std::vector<Target>> truths;
    for (int i = 0; i < 10; ++i) {
      sets.push_back(single(10.0, 1.0));
      truths.push_back({truth[0]});
    }
    CHECK(rmse(sets, truths, 5.0, 5.0).range == 0.0);
    for (auto& s : sets) s.estimates[0].range += 0.75;
    CHECK(rmse(sets, truths, 5.0, 5.0).range == doctest::Approx(0.75));

    Rng rng = derive_stream(18, "rmse", 0);
    std::normal_distribution<double> e(0.0, 0.4);
    sets.clear();
    truths.clear();
    for (int i = 0; i < 10000; ++i) {
      sets.push_back(single(10.0 + e(rng), 1.0 + e(rng)));
      truths.push_back({truth[0]});
    }
    const auto res = rmse(sets, truths, 5.0, 5.0);
    CHECK(res.range == doctest::Approx(0.4).epsilon(0.03));
    CHECK(res.velocity == doctest::Approx(0.4).epsilon(0.03));
    CHECK(res.excluded == 0);

    sets.push_back(single(90.0, 30.0));
    truths.push_back({truth[0]});
    CHECK(rmse(sets, truths, 5.0, 5.0).excluded == 1);
  }
}
