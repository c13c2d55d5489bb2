#ifndef AFE_FEATURES_HPP
#define AFE_FEATURES_HPP

#include "afe/core.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace afe {

enum class WindowKind : int { Hann = 0 };

struct FrameParams {
  int frame_length = 2048;
  int hop = 512;
  WindowKind window = WindowKind::Hann;

  void validate() const;
};

/// Everything that determines the per-segment feature vector. Persisted with
/// the model so that inference reproduces training-time extraction.
struct FeatureConfig {
  FrameParams frames;
  int mfcc_filters = 24;
  int mfcc_coeffs = 24;
  int mel_bands = 26;
  double rolloff_fraction = 0.85;
  double log_floor = 1e-10;

  int frame_feature_count() const { return mfcc_coeffs + mel_bands + 12 + 3; }
  int vector_length() const { return 3 * frame_feature_count(); }
  void validate() const;
};

/// |STFT| with frames in rows and frequency bins in columns.
struct Spectrogram {
  Matrix magnitudes;
  Vector bin_freqs;
  int sample_rate = 0;

  Eigen::Index frame_count() const { return magnitudes.rows(); }
  Eigen::Index bin_count() const { return magnitudes.cols(); }
};

/// Triangular mel filters, one row per filter over the STFT bins.
struct MelFilterBank {
  Matrix weights;
  Vector centers_hz;

  Eigen::Index size() const { return weights.rows(); }
};

template <typename Scalar>
Scalar hz_to_mel(Scalar f) {
  if (f < Scalar(0)) throw std::domain_error("hz_to_mel: negative frequency");
  using std::log10;
  return Scalar(2595) * log10(Scalar(1) + f / Scalar(700));
}

template <typename Scalar>
Scalar mel_to_hz(Scalar m) {
  using std::pow;
  return Scalar(700) * (pow(Scalar(10), m / Scalar(2595)) - Scalar(1));
}

std::size_t stft_frame_count(std::size_t length, const FrameParams& p);

Spectrogram stft(const Eigen::Ref<const Vector>& samples, int sample_rate, const FrameParams& p);

MelFilterBank build_mel_bank(int n_filters, const Vector& bin_freqs, double f_min, double f_max);

/// S_mel(t, k) = sum_l m_k(l) |S(t, l)|^2, frames × filters.
Matrix mel_spectrogram(const Spectrogram& sp, const MelFilterBank& bank);

/// K × n_coeffs basis with entry (k, n) = cos(n (k + 1/2) pi / K).
Matrix dct_basis(int k_bands, int n_coeffs);

/// Cepstral coefficients of already-logged band energies (one frame per row).
template <typename Derived>
Matrix mfcc(const Eigen::MatrixBase<Derived>& log_mel, int n_coeffs) {
  return log_mel * dct_basis(static_cast<int>(log_mel.cols()), n_coeffs);
}

/// log(max(energy, floor)) elementwise.
Matrix floored_log(const Matrix& energies, double floor);

/// Sign changes within the frame, normalised by 2 (W - 1); sgn(0) = +1.
double zcr(const Eigen::Ref<const Vector>& frame);

double spectral_centroid(const Eigen::Ref<const Vector>& magnitudes,
                         const Eigen::Ref<const Vector>& bin_freqs);

double spectral_rolloff(const Eigen::Ref<const Vector>& magnitudes,
                        const Eigen::Ref<const Vector>& bin_freqs, double fraction = 0.85);

/// Pitch class of a frequency with A4 = 440 Hz as class 0; -1 for f <= 0.
int pitch_class(double f);

Eigen::Matrix<double, 1, 12> chroma_frame(const Eigen::Ref<const Vector>& magnitudes,
                                          const Eigen::Ref<const Vector>& bin_freqs);
Matrix chroma(const Spectrogram& sp);

/// Per-frame features, frames × 65 in the column order
/// mfcc00..23, mel00..25, chroma00..11, zcr, centroid, rolloff.
Matrix frame_features(const Eigen::Ref<const Vector>& samples, int sample_rate,
                      const FeatureConfig& cfg);

/// [means | ranges | mean absolute deviations] of each column.
Vector aggregate(const Matrix& frames);

/// frame_features followed by aggregate: the 195-value segment descriptor.
Vector extract_features(const Eigen::Ref<const Vector>& samples, int sample_rate,
                        const FeatureConfig& cfg = {});

std::vector<std::string> frame_feature_names(const FeatureConfig& cfg = {});
std::vector<std::string> feature_names(const FeatureConfig& cfg = {});

/// Extracted features for a set of labeled segments.
struct FeatureTable {
  Matrix x;
  Labels y;
  std::vector<std::string> ids;
};

void write_feature_store(const std::filesystem::path& path, const FeatureTable& t,
                         const FeatureConfig& cfg = {});
FeatureTable read_feature_store(const std::filesystem::path& path);

}  // namespace afe

#endif  // AFE_FEATURES_HPP
