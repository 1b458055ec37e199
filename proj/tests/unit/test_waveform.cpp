#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "simofdm/error.hpp"
#include "simofdm/random.hpp"
#include "simofdm/waveform.hpp"

using namespace simofdm;

namespace {

WaveformConfig small_config(int M, int ng, int k, int order, int symbols) {
  WaveformConfig c;
  c.subcarriers = M;
  c.group_size = ng;
  c.active_per_group = k;
  c.constellation_order = order;
  c.symbols = symbols;
  return c;
}

}  // namespace

TEST_SUITE("waveform") {
  TEST_CASE("codebook 8 choose 2 keeps the first 16 lexicographic pairs") {
    const auto cb = build_index_codebook(8, 2);
    CHECK(cb.index_bits() == 4);
    REQUIRE(cb.size() == 16);
    const auto all = oracle::lexicographic_subsets(8, 2);
    REQUIRE(all.size() == 28);
    for (std::size_t i = 0; i < 16; ++i) CHECK(cb.entry(i) == all[i]);
    CHECK(cb.entry(0) == std::vector<int>{0, 1});
  }

  TEST_CASE("codebook 2 choose 1") {
    const auto cb = build_index_codebook(2, 1);
    CHECK(cb.index_bits() == 1);
    REQUIRE(cb.size() == 2);
    CHECK(cb.entry(0) == std::vector<int>{0});
    CHECK(cb.entry(1) == std::vector<int>{1});
  }

  TEST_CASE("codebook rejects degenerate shapes") {
    CHECK_THROWS_AS(build_index_codebook(4, 0), ConfigError);
    CHECK_THROWS_AS(build_index_codebook(4, 5), ConfigError);
    CHECK_THROWS_AS(build_index_codebook(3, 3), ConfigError);
  }

  TEST_CASE("codebook is a prefix of the lexicographic enumeration for every small shape") {
    for (int ng = 2; ng <= 8; ++ng)
      for (int k = 1; k < ng; ++k) {
        const auto cb = build_index_codebook(ng, k);
        const auto all = oracle::lexicographic_subsets(ng, k);
        REQUIRE(cb.size() == (std::size_t{1} << cb.index_bits()));
        CHECK(cb.size() <= all.size());
        CHECK(2 * cb.size() > all.size());
        for (std::size_t i = 0; i < cb.size(); ++i) CHECK(cb.entry(i) == all[i]);
      }
  }

  TEST_CASE("bits per symbol") {
    CHECK(bits_per_symbol(small_config(256, 8, 2, 4, 1)) == 256);
    CHECK(bits_per_symbol(small_config(2, 2, 1, 2, 1)) == 2);
    // Same spectral efficiency as one BPSK bit per subcarrier.
    CHECK(bits_per_symbol(small_config(64, 8, 2, 4, 1)) == 64);
    CHECK(index_bits(8, 2) + 2 * 2 == 8);
  }

  TEST_CASE("all-zero bits on one BPSK group") {
    const auto c = small_config(2, 2, 1, 2, 1);
    const auto cb = build_index_codebook(2, 1);
    const Frame f = map_bits_to_comm_frame(Bits(2, 0), c, cb);
    CHECK(std::abs(f.samples(0, 0) - std::sqrt(2.0) * c.constellation().point(0)) < 1e-15);
    CHECK(f.samples(1, 0) == cd{});
  }

  TEST_CASE("map and demap round trip, column norms and support size") {
    const auto c = small_config(64, 8, 2, 4, 4);
    const auto cb = build_index_codebook(8, 2);
    Rng rng = derive_stream(7, "waveform-roundtrip", 0);
    const auto n = static_cast<std::size_t>(bits_per_symbol(c) * c.symbols);
    for (int t = 0; t < 1000; ++t) {
      const Bits b = random_bits(n, rng);
      const Frame f = map_bits_to_comm_frame(b, c, cb);
      REQUIRE(comm_frame_to_bits(f, c, cb) == b);
      for (int col = 0; col < c.symbols; ++col) {
        CHECK(f.samples.col(col).squaredNorm() == doctest::Approx(64.0).epsilon(1e-12));
        int nz = 0;
        for (int m = 0; m < 64; ++m) nz += std::abs(f.samples(m, col)) > 0.0;
        CHECK(nz == c.groups() * 2);
      }
    }
  }

  TEST_CASE("wrong bit length is an input error") {
    const auto c = small_config(64, 8, 2, 4, 2);
    const auto cb = build_index_codebook(8, 2);
    CHECK_THROWS_AS(map_bits_to_comm_frame(Bits(10, 0), c, cb), InputError);
  }

  TEST_CASE("supports outside the codebook fail to decode") {
    const auto c = small_config(8, 8, 2, 4, 1);
    const auto cb = build_index_codebook(8, 2);
    Frame f{CMatrix::Zero(8, 1), FrameRole::comm};
    CHECK_THROWS_AS(comm_frame_to_bits(f, c, cb), DecodeError);
    f.samples(0, 0) = f.samples(1, 0) = f.samples(2, 0) = 2.0;
    CHECK_THROWS_AS(comm_frame_to_bits(f, c, cb), DecodeError);
    // {6, 7} is pair 27, beyond the 16 kept entries.
    f.samples.setZero();
    f.samples(6, 0) = f.samples(7, 0) = 2.0;
    CHECK_THROWS_AS(comm_frame_to_bits(f, c, cb), DecodeError);
  }

  TEST_CASE("m-sequence degree 3 matches a brute-force register") {
    const auto s = generate_m_sequence(3);
    REQUIRE(s.size() == 7);
    CHECK(std::count(s.begin(), s.end(), -1) == 4);
    CHECK(std::count(s.begin(), s.end(), 1) == 3);
    // x^3 + x + 1: s[n+3] = s[n+1] ^ s[n].
    CHECK(s == oracle::lfsr(3, {0, 1}));
  }

  TEST_CASE("m-sequence autocorrelation is two-valued") {
    for (int d = 3; d <= 12; ++d) {
      const auto s = generate_m_sequence(d);
      const long n = static_cast<long>(s.size());
      CHECK(oracle::circular_autocorrelation(s, 0) == n);
      for (std::size_t lag = 1; lag < s.size(); ++lag) REQUIRE(oracle::circular_autocorrelation(s, lag) == -1);
    }
  }

  TEST_CASE("m-sequence degree range") {
    CHECK_THROWS_AS(generate_m_sequence(2), ConfigError);
    CHECK_THROWS_AS(generate_m_sequence(17), ConfigError);
    CHECK(generate_m_sequence(16).size() == 65535);
  }

  TEST_CASE("sense frame for M = 256") {
    const auto c = small_config(256, 8, 2, 4, 4);
    CHECK(sense_sequence_degree(256) == 8);
    const Frame f = build_sense_frame(c);
    const auto base = generate_m_sequence(8);
    for (int m = 0; m < 255; ++m) CHECK(f.samples(m, 0) == cd(base[static_cast<std::size_t>(m)], 0.0));
    CHECK(f.samples(255, 0) == cd(base[0], 0.0));
    for (int n = 1; n < 4; ++n) CHECK(f.samples.col(n) == f.samples.col(0));
    CHECK(f.samples.col(0).squaredNorm() == doctest::Approx(256.0));
    CHECK((f.samples.cwiseAbs().array() == 1.0).all());
  }

  TEST_CASE("superpose limits and shape checks") {
    const auto c = small_config(64, 8, 2, 4, 2);
    const auto cb = build_index_codebook(8, 2);
    Rng rng = derive_stream(1, "superpose", 0);
    const Frame xc = map_bits_to_comm_frame(random_bits(static_cast<std::size_t>(64 * 2), rng), c, cb);
    const Frame xs = build_sense_frame(c);
    CHECK(superpose(xc, xs, 0.0).samples == xc.samples);
    CHECK((superpose(xc, xs, 1.0 - 1e-12).samples - xs.samples).norm() < 1e-4);
    Frame wrong{CMatrix::Zero(32, 2), FrameRole::sense};
    CHECK_THROWS_AS(superpose(xc, wrong, 0.5), InputError);
    CHECK_THROWS_AS(superpose(xc, xs, 1.0), InputError);
  }

  TEST_CASE("power conservation and statistical orthogonality") {
    const auto c = small_config(64, 8, 2, 4, 1);
    const auto cb = build_index_codebook(8, 2);
    const Frame xs = build_sense_frame(c);
    Rng rng = derive_stream(3, "power", 0);
    for (double rho : {0.0, 0.25, 0.5, 0.75}) {
      double acc = 0.0;
      for (int t = 0; t < 1000; ++t) {
        const Frame xc = map_bits_to_comm_frame(random_bits(64, rng), c, cb);
        acc += superpose(xc, xs, rho).samples.squaredNorm();
      }
      CHECK(std::abs(acc / 1000.0 - 64.0) < 0.02 * 64.0);
    }
    const int n = 10000;
    cd sum{};
    double sq = 0.0;
    for (int t = 0; t < n; ++t) {
      const Frame xc = map_bits_to_comm_frame(random_bits(64, rng), c, cb);
      const cd v = xc.samples.col(0).dot(xs.samples.col(0));
      sum += v;
      sq += std::norm(v);
    }
    const cd mean = sum / static_cast<double>(n);
    const double se = std::sqrt((sq / n - std::norm(mean)) / n);
    CHECK(std::abs(mean) / 64.0 < 0.05);
    CHECK(std::abs(mean) < 3.0 * se);
  }
}
