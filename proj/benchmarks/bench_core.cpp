#include <benchmark/benchmark.h>

#include "oracles.hpp"
#include "simofdm/channel.hpp"
#include "simofdm/config.hpp"
#include "simofdm/random.hpp"
#include "simofdm/receiver.hpp"
#include "simofdm/sensing.hpp"
#include "simofdm/waveform.hpp"

using namespace simofdm;

namespace {

WaveformConfig frame(int M, int N) {
  WaveformConfig c;
  c.subcarriers = M;
  c.symbols = N;
  return c;
}

struct EchoFixture {
  WaveformConfig wf;
  RangeVelocityGrid grid;
  Frame xs;
  Frame echo;

  EchoFixture(int M, int N, int points) : wf(frame(M, N)) {
    grid = {Axis::from_range(0.0, 320.0, points), Axis::from_range(-35.0, 65.0, points)};
    xs = build_sense_frame(wf);
    Rng rng = derive_stream(1, "bench-echo", 0);
    const auto t = make_targets({{{1.0, 0.0}, 30.0, 5.0}, {{0.7, 0.2}, 80.0, 20.0}}, wf);
    echo = generate_echo(xs, t, 0.05, rng, wf);
  }
};

void BM_MatchedFilterFast(benchmark::State& state) {
  const EchoFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(matched_filter_spectrum(f.echo, f.xs, f.grid, f.wf));
}
BENCHMARK(BM_MatchedFilterFast)->Args({64, 16})->Args({256, 32})->Unit(benchmark::kMillisecond);

void BM_MatchedFilterDirect(benchmark::State& state) {
  const EchoFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 64);
  for (auto _ : state) {
    double acc = 0.0;
    for (int i = 0; i < f.grid.range.count; ++i)
      for (int j = 0; j < f.grid.velocity.count; ++j)
        acc += oracle::direct_matched_filter(f.echo.samples, f.xs.samples, f.grid.range.value(i),
                                             f.grid.velocity.value(j), f.wf.subcarrier_spacing,
                                             f.wf.carrier_frequency, f.wf.symbol_duration);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_MatchedFilterDirect)->Args({64, 16})->Unit(benchmark::kMillisecond);

void BM_Music(benchmark::State& state) {
  const EchoFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(music_2d(f.echo, f.xs, f.grid, 2, f.wf));
}
BENCHMARK(BM_Music)->Args({64, 16})->Args({256, 32})->Unit(benchmark::kMillisecond);

void BM_ChannelMatrix(benchmark::State& state) {
  const auto wf = frame(static_cast<int>(state.range(0)), 16);
  Rng rng = derive_stream(2, "bench-h", 0);
  const auto ps = sample_paths(ChannelModel::rician, 8, 16, 10.0, 2.0, wf, rng);
  for (auto _ : state) benchmark::DoNotOptimize(freq_channel_matrix(ps, wf));
}
BENCHMARK(BM_ChannelMatrix)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_DetectFrame(benchmark::State& state) {
  const auto wf = frame(static_cast<int>(state.range(0)), 16);
  const IndexCodebook cb(wf.group_size, wf.active_per_group);
  Rng rng = derive_stream(3, "bench-ml", 0);
  const auto bits = random_bits(static_cast<std::size_t>(bits_per_symbol(wf) * wf.symbols), rng);
  const Frame xs = build_sense_frame(wf);
  const Frame x = superpose(map_bits_to_comm_frame(bits, wf, cb), xs, 0.3);
  const double norm = std::sqrt(static_cast<double>(wf.subcarriers));
  const Frame y{x.samples / norm + 0.01 * complex_gaussian(wf.subcarriers, wf.symbols, rng), FrameRole::received};
  ReceiverContext ctx;
  ctx.inverse_norm = norm;
  for (auto _ : state) benchmark::DoNotOptimize(decode_frame(y, xs, wf, cb, ctx));
}
BENCHMARK(BM_DetectFrame)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
