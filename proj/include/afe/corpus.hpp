#ifndef AFE_CORPUS_HPP
#define AFE_CORPUS_HPP

#include "afe/dataio.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace afe {

// Synthetic tone corpus ------------------------------------------------------

/// Three classes that differ in tone register, band-passed noise band and
/// amplitude-modulation rate. Every clip sums all three registers with random
/// weights, its own class's the largest, so no spectral band is exclusive to
/// one class.
struct ToneCorpusSpec {
  int per_class = 30;
  double seconds = 7.0;
  int sample_rate = kEngineSampleRate;
};

struct ToneClass {
  double f0_lo, f0_hi;        // fundamental range, Hz
  double noise_lo, noise_hi;  // noise band-pass centre range, Hz
  double am_rate;             // amplitude-modulation rate, Hz
};

const ToneClass& tone_class(Emotion e);

/// One clip; all randomness comes from `rng`.
Waveform tone_clip(Emotion e, double seconds, int sample_rate, Rng& rng);

/// per_class clips of every class, interleaved Bad, Neutral, Good, each a
/// single labeled segment with id `tone-<label>-<nn>`.
Dataset tone_dataset(const ToneCorpusSpec& spec, std::uint64_t seed);

/// Writes the clips as 16-bit WAVs plus `manifest.tsv` into `dir`; returns
/// the manifest path.
std::filesystem::path write_tone_corpus(const std::filesystem::path& dir, const ToneCorpusSpec& spec,
                                        std::uint64_t seed);

// Public-corpus mixing --------------------------------------------------------

/// One mixing rule: a music category overlaid with a speech category. An
/// empty music category means the speech clip is copied unchanged.
struct MixSlot {
  Emotion label;
  std::string music;
  std::string speech;
};

/// Good = Happy + Relax | Happy + Surprised, Bad = Angry + Sad |
/// Angry + Fearful, Neutral = Neutral speech as is.
const std::vector<MixSlot>& mix_slots();

/// Builds `per_class` clips per class from two category-labeled manifests
/// (label column = source category) by seeded sampling without replacement.
/// The per-class quota is split evenly across that class's slots. Writes the
/// WAVs and `manifest.tsv` under `out_dir`; returns the manifest path.
/// Throws DataError naming the slot when a category has too few clips.
std::filesystem::path synthesize_mixtures(const std::filesystem::path& music_manifest,
                                          const std::filesystem::path& speech_manifest,
                                          const std::filesystem::path& out_dir, int per_class, std::uint64_t seed,
                                          int engine_rate = kEngineSampleRate);

}  // namespace afe

#endif  // AFE_CORPUS_HPP
