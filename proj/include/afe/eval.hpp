#ifndef AFE_EVAL_HPP
#define AFE_EVAL_HPP

#include "afe/core.hpp"

#include <string>

namespace afe {

/// counts[t][p]: rows are the true class, columns the predicted class,
/// both indexed by class code.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kClassCount>, kClassCount> counts{};

  std::size_t& at(Emotion truth, Emotion predicted) { return counts[code(truth)][code(predicted)]; }
  std::size_t at(Emotion truth, Emotion predicted) const { return counts[code(truth)][code(predicted)]; }
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(Emotion truth) const;
  std::size_t column_sum(Emotion predicted) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_matrix(const Labels& truth, const Labels& predicted);

/// One-vs-rest metrics. A 0/0 ratio is reported as 0 and flagged.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

ClassMetrics precision_recall_f1(const ConfusionMatrix& cm, Emotion cls);
/// Harmonic mean, 0 when p + r == 0.
double f1_score(double precision, double recall);
/// trace / total; throws DataError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

/// Two-decimal rendering used by every text table.
std::string fixed2(double v);

struct EvaluationReport {
  std::string model_id;
  std::uint64_t provenance = 0;
  ConfusionMatrix cm;
  std::array<ClassMetrics, kClassCount> per_class{};  // by class code
  double accuracy = 0.0;

  /// Table layout: rows G, N, B with P/R/F1 at two decimals, then accuracy
  /// and the confusion matrix.
  std::string to_text() const;
  /// Full-precision machine-readable form.
  std::string to_json() const;
};

EvaluationReport evaluate(const Labels& truth, const Labels& predicted, std::string model_id = {},
                          std::uint64_t provenance = 0);

/// Display order of the report tables.
inline constexpr std::array<Emotion, kClassCount> kReportOrder{Emotion::Good, Emotion::Neutral, Emotion::Bad};

}  // namespace afe

#endif  // AFE_EVAL_HPP
