#include "afe/core.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

namespace afe {

Emotion emotion_from_code(int c) {
  if (c < 0 || c >= kClassCount) throw DataError("invalid emotion code " + std::to_string(c));
  return static_cast<Emotion>(c);
}

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::Bad: return "bad";
    case Emotion::Neutral: return "neutral";
    case Emotion::Good: return "good";
  }
  return "?";
}

char short_name(Emotion e) {
  switch (e) {
    case Emotion::Bad: return 'B';
    case Emotion::Neutral: return 'N';
    case Emotion::Good: return 'G';
  }
  return '?';
}

Emotion parse_emotion(std::string_view s) {
  std::string lower(s);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lower == "good") return Emotion::Good;
  if (lower == "neutral") return Emotion::Neutral;
  if (lower == "bad") return Emotion::Bad;
  throw DataError("unknown emotion label '" + std::string(s) + "' (expected good|neutral|bad)");
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() {
  // 53 random mantissa bits
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = next();
  } while (v >= limit);
  return static_cast<std::size_t>(v % bound);
}

double Rng::normal() {
  // Box-Muller, one value per call
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_doubles(std::span<const double> values, std::uint64_t h) {
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
    h = fnv1a(le, h);
  }
  return h;
}

std::uint64_t hash_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::vector<double> tmp(row.data(), row.data() + row.size());
  if (row.innerStride() != 1) {
    for (Eigen::Index i = 0; i < row.size(); ++i) tmp[static_cast<std::size_t>(i)] = row(i);
  }
  return hash_doubles(tmp);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage_tag) {
  std::uint64_t z = seed ^ fnv1a({reinterpret_cast<const unsigned char*>(stage_tag.data()),
                                  stage_tag.size()});
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Labels take(const Labels& y, std::span<const std::size_t> rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y.at(r));
  return out;
}

std::array<std::size_t, kClassCount> class_counts(const Labels& y) {
  std::array<std::size_t, kClassCount> counts{};
  for (auto e : y) ++counts[static_cast<std::size_t>(code(e))];
  return counts;
}

}  // namespace afe
