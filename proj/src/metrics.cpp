#include "gapforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gapforge/errors.hpp"

namespace gapforge {

namespace {

void require_normalized_same_shape(const EmbeddingBatch& a, const EmbeddingBatch& b,
                                   const char* who) {
  if (!a.normalized || !b.normalized) {
    throw NotNormalizedError(std::string(who) + ": inputs must be row-normalized");
  }
  if (!a.data.same_shape(b.data)) {
    throw ShapeError(std::string(who) + ": batch shapes differ");
  }
  if (a.size() < 1) throw ShapeError(std::string(who) + ": empty batch");
}

}  // namespace

std::vector<double> modality_centroid(const EmbeddingBatch& m) {
  if (!m.normalized) {
    throw NotNormalizedError("modality_centroid: input must be row-normalized");
  }
  if (m.size() < 1) throw ShapeError("modality_centroid: empty batch");
  std::vector<double> mean = column_sums(m.data);
  for (double& v : mean) v /= static_cast<double>(m.size());
  return mean;
}

std::string to_string(RetrievalDirection direction) {
  return direction == RetrievalDirection::M0ToM1 ? "m0-to-m1" : "m1-to-m0";
}

RetrievalDirection parse_direction(std::string_view name) {
  if (name == "m0-to-m1" || name == "i2t") return RetrievalDirection::M0ToM1;
  if (name == "m1-to-m0" || name == "t2i") return RetrievalDirection::M1ToM0;
  throw ConfigError("unknown retrieval direction '" + std::string(name) +
                    "' (expected m0-to-m1|m1-to-m0)");
}

double gap_metric(const EmbeddingBatch& a, const EmbeddingBatch& b, bool sum_convention) {
  require_normalized_same_shape(a, b, "gap_metric");
  std::vector<double> ca = sum_convention ? column_sums(a.data) : modality_centroid(a);
  std::vector<double> cb = sum_convention ? column_sums(b.data) : modality_centroid(b);
  double s = 0.0;
  for (std::size_t k = 0; k < ca.size(); ++k) {
    const double diff = ca[k] - cb[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double cos_true_pairs(const EmbeddingBatch& a, const EmbeddingBatch& b) {
  require_normalized_same_shape(a, b, "cos_true_pairs");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += dot(a.data.row(k), b.data.row(k));
  return s / static_cast<double>(a.size());
}

double angular_value(const EmbeddingBatch& m) {
  if (!m.normalized) throw NotNormalizedError("angular_value: input must be row-normalized");
  const std::size_t n = m.size();
  if (n < 2) throw ShapeError("angular_value: needs N >= 2");
  // sum_{i != j} m_i . m_j = ||sum_i m_i||^2 - sum_i ||m_i||^2
  std::vector<double> s = column_sums(m.data);
  double total = squared_norm(s);
  for (std::size_t i = 0; i < n; ++i) total -= squared_norm(m.data.row(i));
  return total / (static_cast<double>(n) * static_cast<double>(n) - static_cast<double>(n));
}

std::map<int, double> recall_at_k(const EmbeddingBatch& queries, const EmbeddingBatch& gallery,
                                  const std::vector<int>& ks) {
  require_normalized_same_shape(queries, gallery, "recall_at_k");
  const std::size_t n = queries.size();
  for (int k : ks) {
    if (k < 1 || static_cast<std::size_t>(k) > n) {
      throw ShapeError("recall_at_k: K = " + std::to_string(k) +
                       " outside [1, N = " + std::to_string(n) + "]");
    }
  }
  std::map<int, std::size_t> hits;
  for (int k : ks) hits[k] = 0;  // map keys deduplicate repeated cutoffs
  for (std::size_t q = 0; q < n; ++q) {
    const auto qrow = queries.data.row(q);
    const double true_sim = dot(qrow, gallery.data.row(q));
    // rank of the true item = #items ordered strictly before it under
    // (descending similarity, ascending index)
    std::size_t rank = 0;
    for (std::size_t g = 0; g < n; ++g) {
      if (g == q) continue;
      const double sim = dot(qrow, gallery.data.row(g));
      if (sim > true_sim || (sim == true_sim && g < q)) ++rank;
    }
    for (auto& [k, count] : hits) {
      if (rank < static_cast<std::size_t>(k)) ++count;
    }
  }
  std::map<int, double> recall;
  for (const auto& [k, count] : hits) {
    recall[k] = static_cast<double>(count) / static_cast<double>(n);
  }
  return recall;
}

AlignmentReport alignment_report(const MultimodalBatch& batch, const std::vector<int>& ks,
                                 RetrievalDirection direction, bool gap_sum) {
  batch.validate();
  if (batch.n_modalities() != 2) {
    throw UnsupportedError("alignment_report: gap/cos/recall are pairwise; got M = " +
                           std::to_string(batch.n_modalities()));
  }
  AlignmentReport report;
  report.n = batch.size();
  for (const auto& m : batch.modalities) report.av_per_modality.push_back(angular_value(m));
  const EmbeddingBatch& m0 = batch.modalities[0];
  const EmbeddingBatch& m1 = batch.modalities[1];
  report.gap = gap_metric(m0, m1, gap_sum);
  report.cos_true_pairs = cos_true_pairs(m0, m1);
  report.recall = direction == RetrievalDirection::M0ToM1 ? recall_at_k(m0, m1, ks)
                                                          : recall_at_k(m1, m0, ks);
  return report;
}

nlohmann::json report_to_json(const AlignmentReport& report) {
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : report.recall) recall[std::to_string(k)] = v;
  return nlohmann::json{{"gap", report.gap},
                        {"cos_true_pairs", report.cos_true_pairs},
                        {"av_per_modality", report.av_per_modality},
                        {"recall", recall},
                        {"n", report.n}};
}

AlignmentReport report_from_json(const nlohmann::json& j) {
  AlignmentReport report;
  report.gap = j.at("gap").get<double>();
  report.cos_true_pairs = j.at("cos_true_pairs").get<double>();
  report.av_per_modality = j.at("av_per_modality").get<std::vector<double>>();
  for (const auto& [key, value] : j.at("recall").items()) {
    report.recall[std::stoi(key)] = value.get<double>();
  }
  report.n = j.at("n").get<std::size_t>();
  return report;
}

std::string report_csv_header() {
  return "objective,gap,cos_true_pairs,av_m0,av_m1,r@1,r@5,r@10";
}

std::string report_csv_row(const std::string& objective, const AlignmentReport& report) {
  if (report.av_per_modality.size() < 2) {
    throw ShapeError("report_csv_row: report must cover two modalities");
  }
  for (int k : {1, 5, 10}) {
    if (!report.recall.count(k)) {
      throw ShapeError("report_csv_row: report lacks recall@" + std::to_string(k));
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f",
                objective.c_str(), report.gap, report.cos_true_pairs,
                report.av_per_modality[0], report.av_per_modality[1],
                report.recall.at(1), report.recall.at(5), report.recall.at(10));
  return buf;
}

}  // namespace gapforge
