#include "afe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace afe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// RBJ band-pass (0 dB peak) run in direct form I.
Vector bandpass(const Vector& x, double centre, double q, int rate) {
  const double w0 = kTwoPi * centre / rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  Vector y(x.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const double v = b0 * x(n) + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x(n);
    y2 = y1;
    y1 = v;
    y(n) = v;
  }
  return y;
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// "relax" and "relaxed" name the same category in the two source corpora
std::string canonical_category(const std::string& s) {
  std::string c = lower(s);
  if (c == "relaxed") c = "relax";
  return c;
}

std::string numbered(std::string_view prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return std::string(prefix) + buf;
}

}  // namespace

const ToneClass& tone_class(Emotion e) {
  static const std::array<ToneClass, kClassCount> classes{{
      {125.0, 140.0, 300.0, 340.0, 2.0},     // Bad
      {350.0, 390.0, 1200.0, 1350.0, 5.0},   // Neutral
      {950.0, 1050.0, 3500.0, 3900.0, 9.0},  // Good
  }};
  return classes[code(e)];
}

Waveform tone_clip(Emotion e, double seconds, int sample_rate, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * sample_rate));
  const auto len = static_cast<double>(std::max<Eigen::Index>(n, 1));
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples = Vector::Zero(n);

  // every clip carries all three registers; its own class dominates
  for (auto c : kAllEmotions) {
    const ToneClass& tc = tone_class(c);
    const double weight = c == e ? rng.uniform(0.5, 0.7) : rng.uniform(0.2, 0.4);
    const double f0 = rng.uniform(tc.f0_lo, tc.f0_hi);
    const double centre = rng.uniform(tc.noise_lo, tc.noise_hi);
    const double mix = rng.uniform(0.55, 0.65);
    const std::array<double, 3> harmonic{1.0, rng.uniform(0.2, 0.5), rng.uniform(0.05, 0.25)};
    const double phase = rng.uniform(0.0, kTwoPi);

    Vector noise(n);
    for (Eigen::Index i = 0; i < n; ++i) noise(i) = rng.normal();
    noise = bandpass(noise, centre, 4.0, sample_rate);
    const double noise_rms = std::sqrt(noise.squaredNorm() / len);
    if (noise_rms > 0) noise /= noise_rms;

    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      double tone = 0.0;
      for (std::size_t h = 0; h < harmonic.size(); ++h)
        tone += harmonic[h] * std::sin(kTwoPi * f0 * static_cast<double>(h + 1) * t + phase);
      w.samples(i) += weight * (mix * tone / 1.6 + (1.0 - mix) * noise(i));
    }
  }

  const double am = tone_class(e).am_rate * rng.uniform(0.9, 1.1);
  const double depth = rng.uniform(0.4, 0.7);
  for (Eigen::Index i = 0; i < n; ++i)
    w.samples(i) *= 1.0 + depth * std::sin(kTwoPi * am * static_cast<double>(i) / sample_rate);
  w.samples += 0.01 * Vector::NullaryExpr(n, [&] { return rng.normal(); });

  const double peak = w.samples.cwiseAbs().maxCoeff();
  if (peak > 0) w.samples *= 0.9 / peak;
  return w;
}

Dataset tone_dataset(const ToneCorpusSpec& spec, std::uint64_t seed) {
  if (spec.per_class < 1) throw ConfigError("tone corpus needs at least one clip per class");
  Rng rng(derive_seed(seed, "tone-corpus"));
  Dataset d;
  for (int i = 0; i < spec.per_class; ++i)
    for (auto e : kAllEmotions) {
      Segment s;
      s.samples = tone_clip(e, spec.seconds, spec.sample_rate, rng).samples;
      s.sample_rate = spec.sample_rate;
      s.source_id = numbered("tone-" + std::string(to_string(e)) + "-", static_cast<std::size_t>(i));
      s.label = e;
      d.segments.push_back(std::move(s));
    }
  return d;
}

std::filesystem::path write_tone_corpus(const std::filesystem::path& dir, const ToneCorpusSpec& spec,
                                        std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const Dataset d = tone_dataset(spec, seed);
  std::vector<ManifestEntry> entries;
  for (const auto& s : d.segments) {
    const std::string file = s.source_id + ".wav";
    write_wav(dir / file, {s.samples, s.sample_rate});
    entries.push_back({file, std::string(to_string(*s.label)), "tone"});
  }
  const auto manifest = dir / "manifest.tsv";
  write_manifest(manifest, entries);
  return manifest;
}

const std::vector<MixSlot>& mix_slots() {
  static const std::vector<MixSlot> slots{
      {Emotion::Good, "happy", "relax"},   {Emotion::Good, "happy", "surprised"},
      {Emotion::Neutral, "", "neutral"},   {Emotion::Bad, "angry", "sad"},
      {Emotion::Bad, "angry", "fearful"},
  };
  return slots;
}

std::filesystem::path synthesize_mixtures(const std::filesystem::path& music_manifest,
                                          const std::filesystem::path& speech_manifest,
                                          const std::filesystem::path& out_dir, int per_class, std::uint64_t seed,
                                          int engine_rate) {
  if (per_class < 1) throw ConfigError("per_class must be at least 1");
  const auto music = read_manifest(music_manifest);
  const auto speech = read_manifest(speech_manifest);
  const auto music_base = music_manifest.parent_path(), speech_base = speech_manifest.parent_path();

  // shuffled pool of entry indices per category; draws consume from the front
  auto pools = [&](const std::vector<ManifestEntry>& entries, std::string_view tag) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto cat = canonical_category(entries[i].label);
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == cat; });
      if (it == out.end()) {
        out.push_back({cat, {}});
        it = out.end() - 1;
      }
      it->second.push_back(i);
    }
    for (auto& [cat, idx] : out) {
      Rng rng(derive_seed(seed, std::string(tag) + "/" + cat));
      rng.shuffle(idx);
    }
    return out;
  };
  auto music_pools = pools(music, "music");
  auto speech_pools = pools(speech, "speech");
  auto pool_of = [](auto& p, const std::string& cat) -> std::vector<std::size_t>* {
    for (auto& [c, idx] : p)
      if (c == cat) return &idx;
    return nullptr;
  };

  // quota per slot and total draws per category, checked before any output
  std::vector<int> quota(mix_slots().size());
  for (auto e : kAllEmotions) {
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < mix_slots().size(); ++s)
      if (mix_slots()[s].label == e) members.push_back(s);
    for (std::size_t m = 0; m < members.size(); ++m)
      quota[members[m]] = per_class / static_cast<int>(members.size()) +
                          (static_cast<int>(m) < per_class % static_cast<int>(members.size()) ? 1 : 0);
  }
  auto need = [&](bool is_music, const std::string& cat) {
    int n = 0;
    for (std::size_t s = 0; s < mix_slots().size(); ++s)
      if ((is_music ? mix_slots()[s].music : mix_slots()[s].speech) == cat) n += quota[s];
    return n;
  };
  for (std::size_t s = 0; s < mix_slots().size(); ++s) {
    const auto& slot = mix_slots()[s];
    const std::string name = std::string(to_string(slot.label)) + " = " +
                             (slot.music.empty() ? "" : slot.music + " (music) + ") + slot.speech + " (speech)";
    auto check = [&](bool is_music, const std::string& cat) {
      auto* p = pool_of(is_music ? music_pools : speech_pools, cat);
      const int have = p ? static_cast<int>(p->size()) : 0;
      if (have < need(is_music, cat))
        throw DataError("mixing slot '" + name + "': " + (is_music ? "music" : "speech") + " category '" + cat +
                        "' has " + std::to_string(have) + " clips, needs " + std::to_string(need(is_music, cat)));
    };
    if (!slot.music.empty()) check(true, slot.music);
    check(false, slot.speech);
  }

  std::filesystem::create_directories(out_dir);
  std::vector<ManifestEntry> entries;
  std::array<std::size_t, kClassCount> counter{};
  for (std::size_t s = 0; s < mix_slots().size(); ++s) {
    const auto& slot = mix_slots()[s];
    for (int q = 0; q < quota[s]; ++q) {
      auto* sp = pool_of(speech_pools, slot.speech);
      const auto& sentry = speech[sp->front()];
      sp->erase(sp->begin());
      const std::string file =
          numbered(std::string(to_string(slot.label)) + "_", counter[code(slot.label)]++) + ".wav";
      if (slot.music.empty()) {
        std::filesystem::copy_file(speech_base / sentry.path, out_dir / file,
                                   std::filesystem::copy_options::overwrite_existing);
        entries.push_back({file, std::string(to_string(slot.label)), "speech:" + sentry.path});
      } else {
        auto* mp = pool_of(music_pools, slot.music);
        const auto& mentry = music[mp->front()];
        mp->erase(mp->begin());
        const Waveform mixed = mix(load_audio(music_base / mentry.path, engine_rate),
                                       load_audio(speech_base / sentry.path, engine_rate));
        write_wav(out_dir / file, mixed);
        entries.push_back({file, std::string(to_string(slot.label)), "music:" + mentry.path + "+speech:" + sentry.path});
      }
    }
  }
  const auto manifest = out_dir / "manifest.tsv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace afe
