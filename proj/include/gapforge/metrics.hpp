#pragma once

#include <map>
#include <string>
#include <vector>

#include "gapforge/embedding.hpp"

#include "json.hpp"

namespace gapforge {

// Which modality issues the queries in retrieval. Modality 0 plays the
// "image" role in synthetic data.
enum class RetrievalDirection { M0ToM1, M1ToM0 };

std::string to_string(RetrievalDirection direction);
RetrievalDirection parse_direction(std::string_view name);

// Table-row bundle of the latent-space diagnostics over one evaluation set.
struct AlignmentReport {
  double gap = 0.0;
  double cos_true_pairs = 0.0;
  std::vector<double> av_per_modality;
  std::map<int, double> recall;
  std::size_t n = 0;
};

// Arithmetic mean of a modality's normalized embeddings over the evaluation
// set; its norm is at most 1.
std::vector<double> modality_centroid(const EmbeddingBatch& m);

// Euclidean distance between the two modality centroids. Centroids are means
// of the normalized embeddings (sum_convention replaces the mean with the
// plain sum, which scales with N).
double gap_metric(const EmbeddingBatch& a, const EmbeddingBatch& b,
                  bool sum_convention = false);

// Mean cosine similarity over matched rows: (1/N) sum_k a_k . b_k.
double cos_true_pairs(const EmbeddingBatch& a, const EmbeddingBatch& b);

// Mean pairwise cosine similarity within one modality over ordered pairs:
// (1/(N^2 - N)) sum_{i != j} m_i . m_j. Near 1 means collapse, near 0 means
// dispersion over the hypersphere.
double angular_value(const EmbeddingBatch& m);

// Recall@K with ground truth by row index: gallery ranked by descending
// cosine similarity, ties broken by ascending gallery index.
std::map<int, double> recall_at_k(const EmbeddingBatch& queries,
                                  const EmbeddingBatch& gallery,
                                  const std::vector<int>& ks);

// Aggregates all diagnostics over a two-modality batch (gap, cos, and recall
// are pairwise; AV is listed per modality). Use angular_value directly for
// per-modality dispersion at other M.
AlignmentReport alignment_report(const MultimodalBatch& batch, const std::vector<int>& ks,
                                 RetrievalDirection direction = RetrievalDirection::M0ToM1,
                                 bool gap_sum = false);

nlohmann::json report_to_json(const AlignmentReport& report);
AlignmentReport report_from_json(const nlohmann::json& j);

// CSV emitter for Table-style assembly; the header is fixed and requires the
// report to carry recall at K = 1, 5, 10.
std::string report_csv_header();
std::string report_csv_row(const std::string& objective, const AlignmentReport& report);

}  // namespace gapforge
