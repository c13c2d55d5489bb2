#include "afe/features.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace afe {

void FrameParams::validate() const {
  if (frame_length < 2) throw ConfigError("frame_length must be at least 2");
  if (hop <= 0 || hop > frame_length) throw ConfigError("hop must satisfy 0 < hop <= frame_length");
}

void FeatureConfig::validate() const {
  frames.validate();
  if (mfcc_filters < 1 || mfcc_coeffs < 1 || mel_bands < 1)
    throw ConfigError("filter and coefficient counts must be positive");
  if (!(rolloff_fraction > 0.0 && rolloff_fraction < 1.0))
    throw ConfigError("rolloff fraction must lie in (0, 1)");
  if (!(log_floor > 0.0)) throw ConfigError("log floor must be positive");
}

std::size_t stft_frame_count(std::size_t length, const FrameParams& p) {
  const auto fl = static_cast<std::size_t>(p.frame_length);
  if (length < fl) return 0;
  return (length - fl) / static_cast<std::size_t>(p.hop) + 1;
}

Spectrogram stft(const Eigen::Ref<const Vector>& samples, int sample_rate, const FrameParams& p) {
  p.validate();
  const std::size_t frames = stft_frame_count(static_cast<std::size_t>(samples.size()), p);
  if (frames == 0) throw DataError("segment shorter than one STFT frame");
  const int n = p.frame_length;
  const int bins = n / 2 + 1;

  std::vector<double> window(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);

  Spectrogram sp;
  sp.sample_rate = sample_rate;
  sp.magnitudes.resize(static_cast<Eigen::Index>(frames), bins);
  sp.bin_freqs.resize(bins);
  for (int b = 0; b < bins; ++b) sp.bin_freqs(b) = static_cast<double>(b) * sample_rate / n;

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> spec;
  for (std::size_t t = 0; t < frames; ++t) {
    const auto start = static_cast<Eigen::Index>(t * static_cast<std::size_t>(p.hop));
    for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = samples(start + i) * window[static_cast<std::size_t>(i)];
    fft.fwd(spec, buf);
    for (int b = 0; b < bins; ++b)
      sp.magnitudes(static_cast<Eigen::Index>(t), b) = std::abs(spec[static_cast<std::size_t>(b)]);
  }
  return sp;
}

MelFilterBank build_mel_bank(int n_filters, const Vector& bin_freqs, double f_min, double f_max) {
  if (n_filters < 1) throw ConfigError("mel bank needs at least one filter");
  if (!(f_min >= 0.0 && f_min < f_max)) throw ConfigError("degenerate mel frequency range");
  const double m_lo = hz_to_mel(f_min);
  const double m_hi = hz_to_mel(f_max);
  // n + 2 equispaced mel points: filter k spans points k .. k+2, peaking at k+1
  Vector edges(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i)
    edges(i) = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_filters + 1));

  MelFilterBank bank;
  bank.weights = Matrix::Zero(n_filters, bin_freqs.size());
  bank.centers_hz = edges.segment(1, n_filters);
  for (int k = 0; k < n_filters; ++k) {
    const double lo = edges(k), mid = edges(k + 1), hi = edges(k + 2);
    for (Eigen::Index l = 0; l < bin_freqs.size(); ++l) {
      const double f = bin_freqs(l);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      bank.weights(k, l) = w;
    }
  }
  return bank;
}

Matrix mel_spectrogram(const Spectrogram& sp, const MelFilterBank& bank) {
  if (bank.weights.cols() != sp.bin_count())
    throw DataError("mel bank has " + std::to_string(bank.weights.cols()) + " bins, spectrogram has " +
                    std::to_string(sp.bin_count()));
  return sp.magnitudes.array().square().matrix() * bank.weights.transpose();
}

Matrix dct_basis(int k_bands, int n_coeffs) {
  Matrix basis(k_bands, n_coeffs);
  for (int k = 0; k < k_bands; ++k)
    for (int n = 0; n < n_coeffs; ++n)
      basis(k, n) = std::cos(n * (k + 0.5) * std::numbers::pi / k_bands);
  return basis;
}

Matrix floored_log(const Matrix& energies, double floor) {
  return energies.array().max(floor).log().matrix();
}

double zcr(const Eigen::Ref<const Vector>& frame) {
  const auto w = frame.size();
  if (w < 2) throw DataError("zero-crossing rate needs at least two samples");
  auto sgn = [](double x) { return x >= 0.0 ? 1.0 : -1.0; };
  double acc = 0.0;
  for (Eigen::Index n = 1; n < w; ++n) acc += std::abs(sgn(frame(n)) - sgn(frame(n - 1)));
  return acc / (2.0 * static_cast<double>(w - 1));
}

double spectral_centroid(const Eigen::Ref<const Vector>& magnitudes,
                         const Eigen::Ref<const Vector>& bin_freqs) {
  const double total = magnitudes.sum();
  if (!(total > 0.0)) return 0.0;
  return bin_freqs.dot(magnitudes) / total;
}

double spectral_rolloff(const Eigen::Ref<const Vector>& magnitudes,
                        const Eigen::Ref<const Vector>& bin_freqs, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("rolloff fraction must lie in (0, 1)");
  const Vector energy = magnitudes.array().square();
  const double total = energy.sum();
  if (!(total > 0.0)) return 0.0;
  const double target = fraction * total;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < energy.size(); ++i) {
    cum += energy(i);
    if (cum >= target) return bin_freqs(i);
  }
  return bin_freqs(bin_freqs.size() - 1);
}

int pitch_class(double f) {
  if (!(f > 0.0)) return -1;
  const long semis = std::lround(12.0 * std::log2(f / 440.0));
  return static_cast<int>(((semis % 12) + 12) % 12);
}

Eigen::Matrix<double, 1, 12> chroma_frame(const Eigen::Ref<const Vector>& magnitudes,
                                          const Eigen::Ref<const Vector>& bin_freqs) {
  Eigen::Matrix<double, 1, 12> out = Eigen::Matrix<double, 1, 12>::Zero();
  for (Eigen::Index l = 0; l < magnitudes.size(); ++l) {
    const int c = pitch_class(bin_freqs(l));
    if (c >= 0) out(c) += magnitudes(l) * magnitudes(l);
  }
  return out;
}

Matrix chroma(const Spectrogram& sp) {
  Matrix out(sp.frame_count(), 12);
  for (Eigen::Index t = 0; t < sp.frame_count(); ++t)
    out.row(t) = chroma_frame(sp.magnitudes.row(t).transpose(), sp.bin_freqs);
  return out;
}

Matrix frame_features(const Eigen::Ref<const Vector>& samples, int sample_rate,
                      const FeatureConfig& cfg) {
  cfg.validate();
  const Spectrogram sp = stft(samples, sample_rate, cfg.frames);
  const double nyquist = sample_rate / 2.0;

  const auto mfcc_bank = build_mel_bank(cfg.mfcc_filters, sp.bin_freqs, 0.0, nyquist);
  const auto mel_bank = build_mel_bank(cfg.mel_bands, sp.bin_freqs, 0.0, nyquist);
  const Matrix cepstra = mfcc(floored_log(mel_spectrogram(sp, mfcc_bank), cfg.log_floor), cfg.mfcc_coeffs);
  const Matrix mel = mel_spectrogram(sp, mel_bank);
  const Matrix chr = chroma(sp);

  const Eigen::Index frames = sp.frame_count();
  Matrix out(frames, cfg.frame_feature_count());
  out.leftCols(cfg.mfcc_coeffs) = cepstra;
  out.middleCols(cfg.mfcc_coeffs, cfg.mel_bands) = mel;
  out.middleCols(cfg.mfcc_coeffs + cfg.mel_bands, 12) = chr;
  const Eigen::Index tail = cfg.mfcc_coeffs + cfg.mel_bands + 12;
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Vector mags = sp.magnitudes.row(t).transpose();
    out(t, tail) = zcr(samples.segment(t * cfg.frames.hop, cfg.frames.frame_length));
    out(t, tail + 1) = spectral_centroid(mags, sp.bin_freqs);
    out(t, tail + 2) = spectral_rolloff(mags, sp.bin_freqs, cfg.rolloff_fraction);
  }
  return out;
}

Vector aggregate(const Matrix& frames) {
  if (frames.rows() < 2) throw DataError("aggregation needs at least two frames");
  const Eigen::Index d = frames.cols();
  Vector out(3 * d);
  const Eigen::RowVectorXd mean = frames.colwise().mean();
  out.head(d) = mean.transpose();
  out.segment(d, d) = (frames.colwise().maxCoeff() - frames.colwise().minCoeff()).transpose();
  out.tail(d) = (frames.rowwise() - mean).cwiseAbs().colwise().mean().transpose();
  return out;
}

Vector extract_features(const Eigen::Ref<const Vector>& samples, int sample_rate,
                        const FeatureConfig& cfg) {
  return aggregate(frame_features(samples, sample_rate, cfg));
}

std::vector<std::string> frame_feature_names(const FeatureConfig& cfg) {
  std::vector<std::string> names;
  char buf[32];
  for (int i = 0; i < cfg.mfcc_coeffs; ++i) {
    std::snprintf(buf, sizeof buf, "mfcc%02d", i);
    names.emplace_back(buf);
  }
  for (int i = 0; i < cfg.mel_bands; ++i) {
    std::snprintf(buf, sizeof buf, "mel%02d", i);
    names.emplace_back(buf);
  }
  for (int i = 0; i < 12; ++i) {
    std::snprintf(buf, sizeof buf, "chroma%02d", i);
    names.emplace_back(buf);
  }
  names.emplace_back("zcr");
  names.emplace_back("centroid");
  names.emplace_back("rolloff");
  return names;
}

std::vector<std::string> feature_names(const FeatureConfig& cfg) {
  const auto base = frame_feature_names(cfg);
  std::vector<std::string> names;
  for (const char* suffix : {"_mean", "_range", "_mad"})
    for (const auto& b : base) names.push_back(b + suffix);
  return names;
}

void write_feature_store(const std::filesystem::path& path, const FeatureTable& t,
                         const FeatureConfig& cfg) {
  const auto names = feature_names(cfg);
  if (static_cast<Eigen::Index>(names.size()) != t.x.cols())
    throw DataError("feature table width does not match the feature configuration");
  std::ofstream os(path);
  if (!os) throw DataError("cannot write feature store " + path.string());
  os << "source_id,label";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < t.x.rows(); ++i) {
    os << t.ids.at(static_cast<std::size_t>(i)) << ',' << to_string(t.y.at(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < t.x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", t.x(i, j));
      os << ',' << buf;
    }
    os << '\n';
  }
}

FeatureTable read_feature_store(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature store " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty feature store " + path.string());
  const auto width = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') - 1);
  std::vector<std::vector<double>> rows;
  FeatureTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    t.ids.push_back(cell);
    std::getline(ss, cell, ',');
    t.y.push_back(parse_emotion(cell));
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(row.size()) != width)
      throw DataError("ragged row in feature store " + path.string());
    rows.push_back(std::move(row));
  }
  t.x.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < width; ++j) t.x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return t;
}

}  // namespace afe
