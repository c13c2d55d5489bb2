#ifndef AFE_DATAIO_HPP
#define AFE_DATAIO_HPP

#include "afe/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace afe {

inline constexpr int kEngineSampleRate = 22050;

/// Mono PCM audio in [-1, 1].
struct Waveform {
  Vector samples;
  int sample_rate = kEngineSampleRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// A fixed-length analysis window cut from a waveform.
struct Segment {
  Vector samples;
  int sample_rate = kEngineSampleRate;
  std::string source_id;
  std::optional<Emotion> label;
};

/// Labeled segments at one common sample rate.
struct Dataset {
  std::vector<Segment> segments;
  std::filesystem::path manifest_path;

  std::size_t size() const { return segments.size(); }
  Labels labels() const;
};

/// One manifest line: `relative_path \t label \t source_tag`.
struct ManifestEntry {
  std::string path;
  std::string label;
  std::string source;
};

// WAV ---------------------------------------------------------------------

/// Decodes a RIFF WAV (8/16/24/32-bit int PCM or 32-bit float), averaging
/// channels to mono. No resampling.
Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono.
void write_wav(const std::filesystem::path& path, const Waveform& w);

/// Windowed-sinc (Blackman, 32 zero crossings per side) band-limited resampler.
/// Output length is ceil(n * target / source).
Waveform resample(const Waveform& w, int target_rate);

/// read_wav + resample to `engine_rate`. Throws DataError on unreadable,
/// unsupported or empty files.
Waveform load_audio(const std::filesystem::path& path, int engine_rate = kEngineSampleRate);

// Segmentation and mixing -------------------------------------------------

std::size_t window_samples(double window_seconds, int sample_rate);

/// Consecutive non-overlapping windows; any trailing partial window is dropped.
/// Source ids are `<source_id>#<index>`.
std::vector<Segment> segment(const Waveform& w, double window_seconds,
                             const std::string& source_id = {},
                             std::optional<Emotion> label = std::nullopt);

/// Element-wise sum over the shorter length, hard-clipped to [-1, 1].
Waveform mix(const Waveform& a, const Waveform& b);

// Partitioning ------------------------------------------------------------

/// round-half-up(test_fraction * n).
std::size_t test_count(std::size_t n, double test_fraction);

/// Row indices (sorted) of a uniformly drawn test subset.
std::vector<std::size_t> sample_test_indices(std::size_t n, double test_fraction,
                                             std::uint64_t seed);

std::pair<Dataset, Dataset> partition(const Dataset& d, double test_fraction, std::uint64_t seed);

// Manifests ---------------------------------------------------------------

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

/// Loads every manifest entry (paths relative to the manifest directory),
/// segments it and labels each segment with the file label.
Dataset load_dataset(const std::filesystem::path& manifest, double window_seconds,
                     int engine_rate = kEngineSampleRate);

}  // namespace afe

#endif  // AFE_DATAIO_HPP
