#ifndef AFE_CORE_HPP
#define AFE_CORE_HPP

#include <Eigen/Dense>

#include <array>
#include <random>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace afe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vector3 = Eigen::Vector3d;

/// Three-way valence label. The integer codes are ordinal and fixed
/// everywhere (manifests, bundles, Spearman ranking, score columns).
enum class Emotion : int { Bad = 0, Neutral = 1, Good = 2 };

inline constexpr int kClassCount = 3;
inline constexpr std::array<Emotion, kClassCount> kAllEmotions{Emotion::Bad, Emotion::Neutral,
                                                             Emotion::Good};

using Labels = std::vector<Emotion>;

constexpr int code(Emotion e) { return static_cast<int>(e); }
Emotion emotion_from_code(int c);

/// `good|neutral|bad`
std::string_view to_string(Emotion e);
Emotion parse_emotion(std::string_view s);
/// Single-letter tag used in the tabular reports (G/N/B).
char short_name(Emotion e);

// Error kinds map onto CLI exit codes: config 2, data 3, training 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 1; }
};
struct ConfigError : Error {
  using Error::Error;
  int exit_code() const override { return 2; }
};
struct DataError : Error {
  using Error::Error;
  int exit_code() const override { return 3; }
};
struct TrainingError : Error {
  using Error::Error;
  int exit_code() const override { return 4; }
};

/// Seeded generator. Draws are built directly on mt19937_64 output so that
/// results do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
};

/// Per-stage seed: the run seed mixed with a hash of a stage tag.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage_tag);

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_doubles(std::span<const double> values, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_row(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Rows of `x` at `rows`, in that order.
Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows);
Labels take(const Labels& y, std::span<const std::size_t> rows);

std::array<std::size_t, kClassCount> class_counts(const Labels& y);

}  // namespace afe

#endif  // AFE_CORE_HPP
