#include "afe/corpus.hpp"
#include "afe/features.hpp"
#include "afe/preprocess.hpp"
#include "testing.hpp"

#include <doctest.h>

#include <fstream>
#include <iterator>
#include <map>

using namespace afe;
using namespace afe::testing;

namespace {

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_clip(const std::filesystem::path& p, double freq, double seconds, int rate) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(static_cast<Eigen::Index>(seconds * rate));
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) w.samples(i) = 0.3 * std::sin(2 * M_PI * freq * i / rate);
  write_wav(p, w);
}

// a small category-labeled music and speech corpus, n clips per category
std::pair<std::filesystem::path, std::filesystem::path> fake_sources(const std::filesystem::path& dir, int n,
                                                                     bool relaxed_spelling = true) {
  std::filesystem::create_directories(dir / "music");
  std::filesystem::create_directories(dir / "speech");
  std::vector<ManifestEntry> music, speech;
  double f = 200;
  for (std::string cat : {"Happy", "Angry", "Calm"})
    for (int i = 0; i < n; ++i) {
      const auto file = cat + std::to_string(i) + ".wav";
      write_clip(dir / "music" / file, f += 7, 1.2, 16000);
      music.push_back({file, cat, "m"});
    }
  for (std::string cat : {relaxed_spelling ? "Relaxed" : "relax", "surprised", "neutral", "sad", "fearful"})
    for (int i = 0; i < n; ++i) {
      const auto file = cat + std::to_string(i) + ".wav";
      write_clip(dir / "speech" / file, f += 7, 1.0, 22050);
      speech.push_back({file, cat, "s"});
    }
  write_manifest(dir / "music" / "manifest.tsv", music);
  write_manifest(dir / "speech" / "manifest.tsv", speech);
  return {dir / "music" / "manifest.tsv", dir / "speech" / "manifest.tsv"};
}

}  // namespace

TEST_CASE("tone dataset layout and determinism") {
  ToneCorpusSpec spec;
  spec.per_class = 4;
  spec.seconds = 0.5;
  const auto a = tone_dataset(spec, 11);
  const auto b = tone_dataset(spec, 11);
  const auto c = tone_dataset(spec, 12);
  REQUIRE(a.size() == 12);
  CHECK(a.segments[0].label == Emotion::Bad);
  CHECK(a.segments[1].label == Emotion::Neutral);
  CHECK(a.segments[2].label == Emotion::Good);
  CHECK(a.segments[5].source_id == "tone-good-01");
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.segments[i].samples.size() == 11025);
    CHECK(a.segments[i].samples == b.segments[i].samples);
    CHECK(a.segments[i].samples.cwiseAbs().maxCoeff() <= 0.9 + 1e-12);
  }
  CHECK(a.segments[0].samples != c.segments[0].samples);
  spec.per_class = 0;
  CHECK_THROWS_AS(tone_dataset(spec, 1), ConfigError);
}

TEST_CASE("written tone corpus is byte-identical for one seed and loads back") {
  ToneCorpusSpec spec;
  spec.per_class = 2;
  spec.seconds = 1.0;
  const auto d1 = scratch_dir("tone1"), d2 = scratch_dir("tone2");
  const auto m1 = write_tone_corpus(d1, spec, 5);
  const auto m2 = write_tone_corpus(d2, spec, 5);
  CHECK(file_bytes(m1) == file_bytes(m2));
  const auto entries = read_manifest(m1);
  REQUIRE(entries.size() == 6);
  for (const auto& e : entries) CHECK(file_bytes(d1 / e.path) == file_bytes(d2 / e.path));
  const auto d = load_dataset(m1, 1.0);
  REQUIRE(d.size() == 6);
  CHECK(d.labels() == Labels{Emotion::Bad, Emotion::Neutral, Emotion::Good, Emotion::Bad, Emotion::Neutral,
                             Emotion::Good});
}

TEST_CASE("tone classes are separable in scaled feature space") {
  ToneCorpusSpec spec;
  spec.per_class = 8;
  spec.seconds = 1.5;
  const auto d = tone_dataset(spec, 3);
  const FeatureConfig fc;
  Matrix x(static_cast<Eigen::Index>(d.size()), fc.vector_length());
  for (std::size_t i = 0; i < d.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = extract_features(d.segments[i].samples, spec.sample_rate, fc).transpose();
  const Matrix xs = scale(fit_scaler(x), x);
  CHECK(nearest_centroid_accuracy(xs, d.labels()) >= 0.9);
}

TEST_CASE("mixing slots") {
  const auto& s = mix_slots();
  REQUIRE(s.size() == 5);
  std::map<Emotion, int> per;
  for (const auto& m : s) ++per[m.label];
  CHECK(per[Emotion::Good] == 2);
  CHECK(per[Emotion::Bad] == 2);
  CHECK(per[Emotion::Neutral] == 1);
  CHECK(s[0].speech == "relax");
  CHECK(s[2].music.empty());
}

TEST_CASE("mixtures: quotas, alias, provenance and determinism") {
  const auto root = scratch_dir("mix-src");
  const auto [music, speech] = fake_sources(root, 5);
  const auto out1 = scratch_dir("mix-out1"), out2 = scratch_dir("mix-out2");
  const auto m1 = synthesize_mixtures(music, speech, out1, 5, 77);
  const auto m2 = synthesize_mixtures(music, speech, out2, 5, 77);
  CHECK(file_bytes(m1) == file_bytes(m2));
  const auto entries = read_manifest(m1);
  REQUIRE(entries.size() == 15);
  std::map<std::string, int> per;
  std::map<std::string, int> used;
  for (const auto& e : entries) {
    ++per[e.label];
    ++used[e.source];
    CHECK(file_bytes(out1 / e.path) == file_bytes(out2 / e.path));
    const auto w = read_wav(out1 / e.path);
    CHECK(w.sample_rate == kEngineSampleRate);
    if (e.label == "neutral") {
      CHECK(e.source.rfind("speech:neutral", 0) == 0);
    } else {
      CHECK(e.source.rfind("music:", 0) == 0);
      // music clips are longer; the mix keeps the shorter speech length
      CHECK(w.samples.size() == 22050);
    }
  }
  for (const auto& [src, n] : used) CHECK(n == 1);  // sampling without replacement
  CHECK(per["good"] == 5);
  CHECK(per["neutral"] == 5);
  CHECK(per["bad"] == 5);
  int relax = 0;
  for (const auto& e : entries) relax += e.source.find("+speech:Relaxed") != std::string::npos;
  CHECK(relax == 3);  // quota 5 over two slots splits 3 + 2

  const auto d = load_dataset(m1, 0.5);
  CHECK(d.size() == 30);
}

TEST_CASE("mixtures: shortage names the slot") {
  const auto root = scratch_dir("mix-short");
  const auto [music, speech] = fake_sources(root, 2);
  const auto out = scratch_dir("mix-short-out");
  try {
    synthesize_mixtures(music, speech, out, 5, 1);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("happy") != std::string::npos);
    CHECK(msg.find("needs 5") != std::string::npos);
  }
  CHECK(std::filesystem::is_empty(out));
  CHECK_THROWS_AS(synthesize_mixtures(music, speech, out, 0, 1), ConfigError);
}
