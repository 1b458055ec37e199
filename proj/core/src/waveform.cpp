#include "simofdm/waveform.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "simofdm/error.hpp"

namespace simofdm {

Constellation Constellation::psk(int order) {
  if (order < 2 || !std::has_single_bit(static_cast<unsigned>(order)))
    throw ConfigError("constellation_order must be a power of two >= 2, got " + std::to_string(order));
  Constellation c;
  c.bits_ = std::countr_zero(static_cast<unsigned>(order));
  c.points_.resize(static_cast<std::size_t>(order));
  const double offset = order == 2 ? 0.0 : kPi / order;
  for (int q = 0; q < order; ++q) {
    const int label = q ^ (q >> 1);
    c.points_[static_cast<std::size_t>(label)] = std::polar(1.0, offset + kTwoPi * q / order);
  }
  return c;
}

int Constellation::nearest(cd value) const {
  int best = 0;
  double best_d = std::norm(value - points_[0]);
  for (int i = 1; i < order(); ++i) {
    const double d = std::norm(value - points_[static_cast<std::size_t>(i)]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

void WaveformConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("waveform." + field + ": " + why);
  };
  if (subcarriers < 2) fail("subcarriers", "must be >= 2");
  if (subcarriers > (1 << 16)) fail("subcarriers", "must be <= 65536");
  if (group_size < 1 || subcarriers % group_size != 0) fail("group_size", "must divide subcarriers");
  if (group_size > 30) fail("group_size", "must be <= 30");
  if (active_per_group < 1 || active_per_group > group_size) fail("active_per_group", "must lie in [1, group_size]");
  if (binomial(group_size, active_per_group) < 2) fail("active_per_group", "C(group_size, k) must be >= 2");
  if (constellation_order < 2 || !std::has_single_bit(static_cast<unsigned>(constellation_order)))
    fail("constellation_order", "must be a power of two >= 2");
  if (!(subcarrier_spacing > 0)) fail("subcarrier_spacing", "must be > 0");
  if (!(symbol_duration > 0)) fail("symbol_duration", "must be > 0");
  if (!(cp_duration >= 0)) fail("cp_duration", "must be >= 0");
  if (symbols < 1) fail("symbols", "must be >= 1");
  if (!(carrier_frequency > 0)) fail("carrier_frequency", "must be > 0");
  if (!(transmit_power > 0)) fail("transmit_power", "must be > 0");
  if (!(rho >= 0.0 && rho < 1.0)) fail("rho", "must lie in [0, 1)");
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

int index_bits(int group_size, int active) {
  const std::uint64_t c = binomial(group_size, active);
  if (c < 2) throw ConfigError("C(N_g, k) must be >= 2");
  return static_cast<int>(std::bit_width(c)) - 1;
}

IndexCodebook::IndexCodebook(int group_size, int active) : group_size_(group_size), active_(active) {
  if (group_size < 1 || group_size > 30 || active < 1 || active > group_size)
    throw ConfigError("invalid codebook shape N_g=" + std::to_string(group_size) + ", k=" + std::to_string(active));
  index_bits_ = simofdm::index_bits(group_size, active);
  const std::size_t wanted = std::size_t{1} << index_bits_;
  entries_.reserve(wanted);

  std::vector<int> combo(static_cast<std::size_t>(active));
  for (int i = 0; i < active; ++i) combo[static_cast<std::size_t>(i)] = i;
  while (entries_.size() < wanted) {
    entries_.push_back(combo);
    int i = active - 1;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == group_size - active + i) --i;
    if (i < 0) break;
    ++combo[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < active; ++j) combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
  }
  for (std::size_t e = 0; e < entries_.size(); ++e) {
    std::uint32_t mask = 0;
    for (int s : entries_[e]) mask |= 1u << s;
    by_mask_.emplace(mask, static_cast<int>(e));
  }
}

int IndexCodebook::find(std::uint32_t support_mask) const {
  const auto it = by_mask_.find(support_mask);
  return it == by_mask_.end() ? -1 : it->second;
}

IndexCodebook build_index_codebook(int group_size, int active) { return IndexCodebook(group_size, active); }

int bits_per_symbol(const WaveformConfig& config) {
  const int sym_bits = std::countr_zero(static_cast<unsigned>(config.constellation_order));
  return config.groups() * (index_bits(config.group_size, config.active_per_group) + config.active_per_group * sym_bits);
}

namespace {

int read_bits(const Bits& bits, std::size_t& pos, int count) {
  int value = 0;
  for (int i = 0; i < count; ++i) value = (value << 1) | bits[pos++];
  return value;
}

void write_bits(Bits& bits, int value, int count) {
  for (int i = count - 1; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((value >> i) & 1));
}

}  // namespace

Frame map_bits_to_comm_frame(const Bits& bits, const WaveformConfig& config, const IndexCodebook& codebook) {
  const int per_symbol = bits_per_symbol(config);
  const auto expected = static_cast<std::size_t>(per_symbol) * static_cast<std::size_t>(config.symbols);
  if (bits.size() != expected)
    throw InputError("bit string has " + std::to_string(bits.size()) + " bits, frame needs " + std::to_string(expected));
  if (codebook.group_size() != config.group_size || codebook.active() != config.active_per_group)
    throw InputError("codebook does not match waveform group shape");

  const Constellation alphabet = config.constellation();
  const int sym_bits = alphabet.bits_per_symbol();
  const double scale = std::sqrt(static_cast<double>(config.group_size) / config.active_per_group);

  Frame frame{CMatrix::Zero(config.subcarriers, config.symbols), FrameRole::comm};
  std::size_t pos = 0;
  for (int n = 0; n < config.symbols; ++n) {
    for (int g = 0; g < config.groups(); ++g) {
      const auto& support = codebook.entry(static_cast<std::size_t>(read_bits(bits, pos, codebook.index_bits())));
      for (int s : support) {
        const int label = read_bits(bits, pos, sym_bits);
        frame.samples(g * config.group_size + s, n) = scale * alphabet.point(label);
      }
    }
  }
  return frame;
}

Bits comm_frame_to_bits(const Frame& frame, const WaveformConfig& config, const IndexCodebook& codebook) {
  if (frame.subcarriers() != config.subcarriers || frame.symbols() != config.symbols)
    throw InputError("frame shape does not match waveform config");
  const Constellation alphabet = config.constellation();
  const int sym_bits = alphabet.bits_per_symbol();
  const double scale = std::sqrt(static_cast<double>(config.group_size) / config.active_per_group);

  Bits bits;
  bits.reserve(static_cast<std::size_t>(bits_per_symbol(config)) * static_cast<std::size_t>(config.symbols));
  for (int n = 0; n < config.symbols; ++n) {
    for (int g = 0; g < config.groups(); ++g) {
      std::uint32_t mask = 0;
      for (int s = 0; s < config.group_size; ++s)
        if (std::abs(frame.samples(g * config.group_size + s, n)) > 1e-9) mask |= 1u << s;
      const int entry = codebook.find(mask);
      if (entry < 0)
        throw DecodeError("group " + std::to_string(g) + " of symbol " + std::to_string(n) +
                          " has an active set outside the codebook");
      write_bits(bits, entry, codebook.index_bits());
      for (int s : codebook.entry(static_cast<std::size_t>(entry)))
        write_bits(bits, alphabet.nearest(frame.samples(g * config.group_size + s, n) / scale), sym_bits);
    }
  }
  return bits;
}

namespace {

// Exponents below the leading term of one primitive polynomial per degree;
// x^d = sum over listed exponents (mod 2).
const std::array<std::vector<int>, 17>& primitive_taps() {
  static const std::array<std::vector<int>, 17> taps = {{
      {}, {}, {},
      {1, 0},           // x^3 + x + 1
      {1, 0},           // x^4 + x + 1
      {2, 0},           // x^5 + x^2 + 1
      {1, 0},           // x^6 + x + 1
      {1, 0},           // x^7 + x + 1
      {4, 3, 2, 0},     // x^8 + x^4 + x^3 + x^2 + 1
      {4, 0},           // x^9 + x^4 + 1
      {3, 0},           // x^10 + x^3 + 1
      {2, 0},           // x^11 + x^2 + 1
      {6, 4, 1, 0},     // x^12 + x^6 + x^4 + x + 1
      {4, 3, 1, 0},     // x^13 + x^4 + x^3 + x + 1
      {10, 6, 1, 0},    // x^14 + x^10 + x^6 + x + 1
      {1, 0},           // x^15 + x + 1
      {12, 3, 1, 0},    // x^16 + x^12 + x^3 + x + 1
  }};
  return taps;
}

}  // namespace

std::vector<int> generate_m_sequence(int degree) {
  if (degree < 3 || degree > 16)
    throw ConfigError("m-sequence degree must lie in [3, 16], got " + std::to_string(degree));
  const auto& taps = primitive_taps()[static_cast<std::size_t>(degree)];
  const std::size_t length = (std::size_t{1} << degree) - 1;

  std::vector<std::uint8_t> s(length + static_cast<std::size_t>(degree));
  for (int i = 0; i < degree; ++i) s[static_cast<std::size_t>(i)] = 1;
  for (std::size_t n = 0; n + static_cast<std::size_t>(degree) < s.size(); ++n) {
    std::uint8_t next = 0;
    for (int t : taps) next ^= s[n + static_cast<std::size_t>(t)];
    s[n + static_cast<std::size_t>(degree)] = next;
  }
  std::vector<int> chips(length);
  for (std::size_t i = 0; i < length; ++i) chips[i] = s[i] ? -1 : 1;
  return chips;
}

int sense_sequence_degree(int subcarriers) {
  int degree = 3;
  while (((1 << degree) - 1) < subcarriers - 1 && degree < 16) ++degree;
  return degree;
}

Frame build_sense_frame(const WaveformConfig& config) {
  const auto chips = generate_m_sequence(sense_sequence_degree(config.subcarriers));
  const auto period = chips.size();
  Frame frame{CMatrix(config.subcarriers, config.symbols), FrameRole::sense};
  for (int n = 0; n < config.symbols; ++n) {
    const std::size_t shift = config.shift_sense_per_symbol ? static_cast<std::size_t>(n) : 0;
    for (int m = 0; m < config.subcarriers; ++m)
      frame.samples(m, n) = static_cast<double>(chips[(static_cast<std::size_t>(m) + shift) % period]);
  }
  return frame;
}

Frame superpose(const Frame& comm, const Frame& sense, double rho) {
  if (comm.samples.rows() != sense.samples.rows() || comm.samples.cols() != sense.samples.cols())
    throw InputError("superpose: comm and sense frames differ in shape");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("superpose: rho must lie in [0, 1)");
  return {std::sqrt(rho) * sense.samples + std::sqrt(1.0 - rho) * comm.samples, FrameRole::superposed};
}

}  // namespace simofdm
