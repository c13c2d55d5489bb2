#include "afe/eval.hpp"

#include <json.hpp>

#include <cstdio>
#include <iomanip>
#include <sstream>

namespace afe {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts)
    for (auto v : row) n += v;
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (int c = 0; c < kClassCount; ++c) n += counts[c][c];
  return n;
}

std::size_t ConfusionMatrix::row_sum(Emotion truth) const {
  std::size_t n = 0;
  for (auto v : counts[code(truth)]) n += v;
  return n;
}

std::size_t ConfusionMatrix::column_sum(Emotion predicted) const {
  std::size_t n = 0;
  for (const auto& row : counts) n += row[code(predicted)];
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  for (int t = 0; t < kClassCount; ++t)
    for (int p = 0; p < kClassCount; ++p) counts[t][p] += o.counts[t][p];
  return *this;
}

ConfusionMatrix confusion_matrix(const Labels& truth, const Labels& predicted) {
  if (truth.size() != predicted.size())
    throw DataError("confusion_matrix: " + std::to_string(truth.size()) + " true labels vs " +
                    std::to_string(predicted.size()) + " predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) ++cm.at(truth[i], predicted[i]);
  return cm;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

ClassMetrics precision_recall_f1(const ConfusionMatrix& cm, Emotion cls) {
  const double tp = static_cast<double>(cm.at(cls, cls));
  const double predicted = static_cast<double>(cm.column_sum(cls));
  const double actual = static_cast<double>(cm.row_sum(cls));
  ClassMetrics m;
  if (predicted > 0) m.precision = tp / predicted;
  else m.precision_undefined = true;
  if (actual > 0) m.recall = tp / actual;
  else m.recall_undefined = true;
  m.f1_undefined = m.precision + m.recall == 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw DataError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

EvaluationReport evaluate(const Labels& truth, const Labels& predicted, std::string model_id,
                          std::uint64_t provenance) {
  EvaluationReport r;
  r.model_id = std::move(model_id);
  r.provenance = provenance;
  r.cm = confusion_matrix(truth, predicted);
  for (auto e : kAllEmotions) r.per_class[code(e)] = precision_recall_f1(r.cm, e);
  r.accuracy = accuracy(r.cm);
  return r;
}

std::string EvaluationReport::to_text() const {
  std::ostringstream os;
  if (!model_id.empty()) os << "model: " << model_id << '\n';
  os << "Emotion  P     R     F1\n";
  for (auto e : kReportOrder) {
    const auto& m = per_class[code(e)];
    os << short_name(e) << "        " << fixed2(m.precision) << (m.precision_undefined ? "*" : " ") << ' '
       << fixed2(m.recall) << (m.recall_undefined ? "*" : " ") << ' ' << fixed2(m.f1)
       << (m.f1_undefined ? "*" : "") << '\n';
  }
  os << "Accuracy: " << fixed2(accuracy) << "  (n=" << cm.total() << ")\n";
  os << "confusion (rows true, cols predicted)\n     ";
  for (auto p : kReportOrder) os << std::setw(5) << short_name(p);
  os << '\n';
  for (auto t : kReportOrder) {
    os << "  " << short_name(t) << "  ";
    for (auto p : kReportOrder) os << std::setw(5) << cm.at(t, p);
    os << '\n';
  }
  bool flagged = false;
  for (const auto& m : per_class) flagged = flagged || m.precision_undefined || m.recall_undefined || m.f1_undefined;
  if (flagged) os << "* undefined ratio (0/0), reported as 0\n";
  return os.str();
}

std::string EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model_id;
  j["provenance"] = provenance;
  j["accuracy"] = accuracy;
  j["total"] = cm.total();
  for (auto e : kReportOrder) {
    const auto& m = per_class[code(e)];
    j["classes"][std::string(to_string(e))] = {{"precision", m.precision},
                                               {"recall", m.recall},
                                               {"f1", m.f1},
                                               {"precision_undefined", m.precision_undefined},
                                               {"recall_undefined", m.recall_undefined},
                                               {"f1_undefined", m.f1_undefined}};
  }
  auto& rows = j["confusion"];
  for (auto t : kAllEmotions) {
    nlohmann::ordered_json row;
    for (auto p : kAllEmotions) row[std::string(to_string(p))] = cm.at(t, p);
    rows[std::string(to_string(t))] = row;
  }
  return j.dump(2);
}

}  // namespace afe
