#include "afe/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace afe {

Labels Dataset::labels() const {
  Labels y;
  y.reserve(segments.size());
  for (const auto& s : segments) {
    if (!s.label) throw DataError("segment '" + s.source_id + "' has no label");
    y.push_back(*s.label);
  }
  return y;
}

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::ostream& os, std::uint16_t v) {
  os.put(static_cast<char>(v & 0xff));
  os.put(static_cast<char>((v >> 8) & 0xff));
}

double decode_sample(const unsigned char* p, int bits, bool is_float) {
  if (is_float) {
    if (bits == 32) {
      std::uint32_t u = read_u32(p);
      float f;
      std::memcpy(&f, &u, sizeof f);
      return static_cast<double>(f);
    }
    std::uint64_t u = static_cast<std::uint64_t>(read_u32(p)) |
                      (static_cast<std::uint64_t>(read_u32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, sizeof d);
    return d;
  }
  switch (bits) {
    case 8: return (static_cast<double>(p[0]) - 128.0) / 128.0;
    case 16: return static_cast<double>(static_cast<std::int16_t>(read_u16(p))) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<double>(v) / 8388608.0;
    }
    case 32: return static_cast<double>(static_cast<std::int32_t>(read_u32(p))) / 2147483648.0;
  }
  return 0.0;
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError("not a RIFF/WAVE file" + where);

  int format = -1, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::size_t size = read_u32(hdr + 4);
    std::size_t body = pos + 8;
    std::size_t avail = std::min(size, bytes.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (avail < 16) throw DataError("truncated fmt chunk" + where);
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == 0xFFFE && avail >= 26) format = read_u16(f + 24);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (format < 0) throw DataError("missing fmt chunk" + where);
  if (!data) throw DataError("missing data chunk" + where);
  const bool is_float = format == 3;
  if (!(format == 1 || is_float)) throw DataError("unsupported WAV encoding" + where);
  if (is_float ? !(bits == 32 || bits == 64) : !(bits == 8 || bits == 16 || bits == 24 || bits == 32))
    throw DataError("unsupported bit depth " + std::to_string(bits) + where);
  if (channels < 1 || rate == 0) throw DataError("invalid channel count or sample rate" + where);

  const std::size_t frame_bytes = static_cast<std::size_t>(bits / 8) * static_cast<std::size_t>(channels);
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) throw DataError("zero-length audio" + where);

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(static_cast<Eigen::Index>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c)
      acc += decode_sample(data + i * frame_bytes + static_cast<std::size_t>(c * bits / 8), bits, is_float);
    double v = acc / channels;
    if (!std::isfinite(v)) throw DataError("non-finite sample" + where);
    w.samples(static_cast<Eigen::Index>(i)) = std::clamp(v, -1.0, 1.0);
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  os.write("RIFF", 4);
  put_u32(os, 36 + 2 * n);
  os.write("WAVEfmt ", 8);
  put_u32(os, 16);
  put_u16(os, 1);
  put_u16(os, 1);
  put_u32(os, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(os, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, 2 * n);
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) {
    double v = std::clamp(w.samples(i), -1.0, 1.0);
    auto q = static_cast<std::int16_t>(std::lround(std::clamp(v * 32768.0, -32768.0, 32767.0)));
    put_u16(os, static_cast<std::uint16_t>(q));
  }
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw DataError("target sample rate must be positive");
  if (w.sample_rate == target_rate) return w;
  constexpr int kZeroCrossings = 32;
  const double ratio = static_cast<double>(target_rate) / w.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // in cycles per source-Nyquist
  const double half_width = kZeroCrossings / cutoff;
  const auto n_in = w.samples.size();
  const auto n_out = static_cast<Eigen::Index>(
      std::ceil(static_cast<double>(n_in) * target_rate / w.sample_rate - 1e-9));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * w.sample_rate / target_rate;
    const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(pos - half_width)));
    const auto hi = std::min<Eigen::Index>(n_in - 1, static_cast<Eigen::Index>(std::floor(pos + half_width)));
    double acc = 0.0;
    for (Eigen::Index k = lo; k <= hi; ++k) {
      const double d = pos - static_cast<double>(k);
      const double u = d / half_width;
      const double window = 0.42 + 0.5 * std::cos(std::numbers::pi * u) + 0.08 * std::cos(2.0 * std::numbers::pi * u);
      const double arg = std::numbers::pi * cutoff * d;
      const double sinc = d == 0.0 ? 1.0 : std::sin(arg) / arg;
      acc += w.samples(k) * cutoff * sinc * window;
    }
    out.samples(i) = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

Waveform load_audio(const std::filesystem::path& path, int engine_rate) {
  return resample(read_wav(path), engine_rate);
}

std::size_t window_samples(double window_seconds, int sample_rate) {
  if (!(window_seconds > 0.0)) throw DataError("window length must be positive");
  return static_cast<std::size_t>(std::llround(window_seconds * sample_rate));
}

std::vector<Segment> segment(const Waveform& w, double window_seconds, const std::string& source_id,
                             std::optional<Emotion> label) {
  if (w.samples.size() == 0) throw DataError("cannot segment an empty waveform");
  const auto len = static_cast<Eigen::Index>(window_samples(window_seconds, w.sample_rate));
  std::vector<Segment> out;
  for (Eigen::Index start = 0; start + len <= w.samples.size(); start += len) {
    Segment s;
    s.samples = w.samples.segment(start, len);
    s.sample_rate = w.sample_rate;
    s.source_id = source_id + "#" + std::to_string(out.size());
    s.label = label;
    out.push_back(std::move(s));
  }
  return out;
}

Waveform mix(const Waveform& a, const Waveform& b) {
  if (a.sample_rate != b.sample_rate)
    throw DataError("cannot mix waveforms at " + std::to_string(a.sample_rate) + " Hz and " +
                    std::to_string(b.sample_rate) + " Hz");
  const auto n = std::min(a.samples.size(), b.samples.size());
  Waveform out;
  out.sample_rate = a.sample_rate;
  out.samples = (a.samples.head(n) + b.samples.head(n)).cwiseMax(-1.0).cwiseMin(1.0);
  return out;
}

std::size_t test_count(std::size_t n, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test fraction must lie in (0, 1)");
  return static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n) + 0.5));
}

std::vector<std::size_t> sample_test_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  const std::size_t k = test_count(n, test_fraction);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::pair<Dataset, Dataset> partition(const Dataset& d, double test_fraction, std::uint64_t seed) {
  auto counts = class_counts(d.labels());
  for (auto c : counts)
    if (c == 0) throw DataError("partition requires at least one sample per class");
  const auto test_idx = sample_test_indices(d.size(), test_fraction, seed);
  Dataset train, test;
  train.manifest_path = test.manifest_path = d.manifest_path;
  std::size_t t = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (t < test_idx.size() && test_idx[t] == i) {
      test.segments.push_back(d.segments[i]);
      ++t;
    } else {
      train.segments.push_back(d.segments[i]);
    }
  }
  return {std::move(train), std::move(test)};
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() < 2 || cols.size() > 3)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 'path<TAB>label<TAB>source'");
    out.push_back({cols[0], cols[1], cols.size() == 3 ? cols[2] : std::string{}});
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write manifest " + path.string());
  for (const auto& e : entries) os << e.path << '\t' << e.label << '\t' << e.source << '\n';
}

Dataset load_dataset(const std::filesystem::path& manifest, double window_seconds, int engine_rate) {
  Dataset d;
  d.manifest_path = manifest;
  const auto base = manifest.parent_path();
  for (const auto& e : read_manifest(manifest)) {
    const Emotion label = parse_emotion(e.label);
    const auto w = load_audio(base / e.path, engine_rate);
    for (auto& s : segment(w, window_seconds, e.path, label)) d.segments.push_back(std::move(s));
  }
  return d;
}

}  // namespace afe
