#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llm3dti/data_io.hpp"
#include "llm3dti/fusion_net.hpp"
#include "llm3dti/random.hpp"

namespace llm3dti {

inline constexpr double kDefaultThreshold = 0.5;

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// A score at or above the threshold counts as a positive prediction.
ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold = kDefaultThreshold);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero-denominator cases yield 0. Empty counts throw InputError.
double accuracy(const ConfusionCounts& c);
PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c);
double mcc(const ConfusionCounts& c);

// Mann–Whitney statistic with mid-rank ties. Needs both classes.
double auroc(std::span<const double> scores, std::span<const int> labels);
// Step-interpolated area under the precision–recall curve: thresholds swept
// over distinct scores in descending order, summing ΔRecall × Precision.
double aupr(std::span<const double> scores, std::span<const int> labels);

struct MetricsReport {
  double acc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double mcc = 0.0;
  std::optional<double> auroc;  // empty when the labels are single-class
  std::optional<double> aupr;   // empty when there are no positives
  double threshold = kDefaultThreshold;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport metrics_report(std::span<const double> scores, std::span<const int> labels,
                             double threshold = kDefaultThreshold);

// One JSON object; keys acc, f1, precision, recall, aupr, mcc, auroc,
// threshold, n_pos, n_neg. Undefined metrics are null.
std::string to_json(const MetricsReport& r);
MetricsReport metrics_from_json(std::string_view text);

// --- significance ---------------------------------------------------------

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
// Two-sided tail P(|T| ≥ |t|) for Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Unequal-variance two-sample t-test. Each sample needs ≥ 2 values and at
// least one of them nonzero variance.
WelchResult welch_ttest(std::span<const double> a, std::span<const double> b);

// --- splits ---------------------------------------------------------------

// Assigns a visible_fraction share of the entities on `side` to training.
// Pairs with a visible entity on that side go to train, all others to test.
InteractionDataset cold_start_split(const InteractionDataset& ds, Side side,
                                    double visible_fraction, RandomStream& stream);

// Returns the entity ids of `side` that appear in both train and test.
std::vector<std::string> leaked_entities(const InteractionDataset& ds, Side side);

// Every pair touching a holdout id (either side) goes to test, the rest to
// train.
std::pair<InteractionDataset, InteractionDataset> case_study_split(
    const InteractionDataset& ds, const std::set<std::string>& holdout);

struct CaseStudyRow {
  std::string drug;
  std::string protein;
  int ground_truth = 0;
  int prediction = 0;
  double score = 0.0;
  bool correct() const noexcept { return ground_truth == prediction; }
};

std::vector<CaseStudyRow> case_study_rows(const InteractionDataset& ds,
                                          std::span<const double> scores,
                                          double threshold = kDefaultThreshold);
// `drug_id  protein_id  ground_truth  prediction  correctness`, tab separated,
// correctness written TRUE/FALSE.
void write_case_study(std::span<const CaseStudyRow> rows, const std::filesystem::path& path);

// --- model evaluation -----------------------------------------------------

// Scores the selected rows in chunks of batch_size. Attention context is the
// chunk; chunks follow a fixed pseudo-random permutation of `rows` that
// depends only on rows.size(). Scores come back in the order of `rows`.
std::vector<double> score_pairs(const ModelParams& p, const ModelInputs& inputs,
                                const InteractionDataset& ds, std::span<const std::size_t> rows,
                                const ForwardOptions& options, std::size_t batch_size);

std::vector<int> labels_of(const InteractionDataset& ds, std::span<const std::size_t> rows);

MetricsReport evaluate(const ModelParams& p, const ModelInputs& inputs,
                       const InteractionDataset& ds, std::span<const std::size_t> rows,
                       const ForwardOptions& options, std::size_t batch_size);

// Writes the concatenated fused pair vectors [Z_d ‖ Z_p] as EMB1 and a
// `drug_id  protein_id  label` sidecar at `<path>.labels.tsv`.
void dump_representations(const ModelParams& p, const ModelInputs& inputs,
                          const InteractionDataset& ds, std::span<const std::size_t> rows,
                          const ForwardOptions& options, std::size_t batch_size,
                          const std::filesystem::path& path);

}  // namespace llm3dti
