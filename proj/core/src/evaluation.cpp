#include "llm3dti/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "json.hpp"
#include "llm3dti/error.hpp"

namespace llm3dti {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels, const char* op) {
  if (scores.size() != labels.size()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError(std::string(op) + ": labels must be 0 or 1");
  }
}

std::size_t count_positive(std::span<const int> labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

// --- confusion metrics ------------------------------------------------------

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold) {
  check_lengths(scores, labels, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw InputError("accuracy: no evaluated pairs");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
  if (c.total() == 0) throw InputError("precision_recall_f1: no evaluated pairs");
  PrecisionRecallF1 out;
  const auto tp = static_cast<double>(c.tp);
  out.precision = ratio(tp, tp + static_cast<double>(c.fp));
  out.recall = ratio(tp, tp + static_cast<double>(c.fn));
  out.f1 = ratio(2.0 * out.precision * out.recall, out.precision + out.recall);
  return out;
}

double mcc(const ConfusionCounts& c) {
  if (c.total() == 0) throw InputError("mcc: no evaluated pairs");
  const auto tp = static_cast<double>(c.tp);
  const auto tn = static_cast<double>(c.tn);
  const auto fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

// --- threshold-free metrics -------------------------------------------------

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "auroc");
  const std::size_t n_pos = count_positive(labels);
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("auroc: labels are single-class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += mid_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double aupr(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "aupr");
  const std::size_t n_pos = count_positive(labels);
  if (n_pos == 0) throw UndefinedMetricError("aupr: no positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      labels[order[j]] == 1 ? ++tp : ++fp;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

MetricsReport metrics_report(std::span<const double> scores, std::span<const int> labels,
                             double threshold) {
  const ConfusionCounts c = confusion(scores, labels, threshold);
  MetricsReport r;
  r.threshold = threshold;
  r.n_pos = c.tp + c.fn;
  r.n_neg = c.tn + c.fp;
  r.acc = accuracy(c);
  const auto prf = precision_recall_f1(c);
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  r.mcc = mcc(c);
  if (r.n_pos > 0 && r.n_neg > 0) r.auroc = auroc(scores, labels);
  if (r.n_pos > 0) r.aupr = aupr(scores, labels);
  return r;
}

std::string to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["acc"] = r.acc;
  j["f1"] = r.f1;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["aupr"] = r.aupr ? nlohmann::ordered_json(*r.aupr) : nlohmann::ordered_json(nullptr);
  j["mcc"] = r.mcc;
  j["auroc"] = r.auroc ? nlohmann::ordered_json(*r.auroc) : nlohmann::ordered_json(nullptr);
  j["threshold"] = r.threshold;
  j["n_pos"] = r.n_pos;
  j["n_neg"] = r.n_neg;
  return j.dump();
}

MetricsReport metrics_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    r.acc = j.at("acc").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.mcc = j.at("mcc").get<double>();
    if (!j.at("auroc").is_null()) r.auroc = j.at("auroc").get<double>();
    if (!j.at("aupr").is_null()) r.aupr = j.at("aupr").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.n_pos = j.at("n_pos").get<std::size_t>();
    r.n_neg = j.at("n_neg").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("metrics report: ") + e.what());
  }
}

// --- significance -----------------------------------------------------------

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw ConvergenceError("incomplete_beta: continued fraction did not converge", 0.0);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ParameterError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("incomplete_beta: x must be in [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw ParameterError("student_t_two_sided: df must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InputError("welch_ttest: each sample needs >= 2 values");
  auto moments = [](std::span<const double> s) {
    const double n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  if (va == 0.0 && vb == 0.0) throw InputError("welch_ttest: both samples have zero variance");
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) /
         (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

// --- splits -----------------------------------------------------------------

namespace {

const std::string& side_id(const LabeledPair& p, Side side) {
  return side == Side::drug ? p.drug : p.protein;
}

}  // namespace

InteractionDataset cold_start_split(const InteractionDataset& ds, Side side,
                                    double visible_fraction, RandomStream& stream) {
  if (!(visible_fraction > 0.0 && visible_fraction < 1.0)) {
    throw ParameterError("cold_start_split: visible fraction must be in (0,1)");
  }
  std::vector<std::string> entities;
  for (const auto& p : ds.pairs) entities.push_back(side_id(p, side));
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  if (entities.size() < 2) {
    throw InputError("cold_start_split: need at least two " + std::string(side_name(side)) +
                     " entities");
  }
  stream.shuffle(entities);
  const auto n = static_cast<long long>(entities.size());
  const long long visible =
      std::clamp(std::llround(visible_fraction * static_cast<double>(n)), 1LL, n - 1);
  const std::unordered_set<std::string> seen(entities.begin(), entities.begin() + visible);

  InteractionDataset out = ds;
  for (std::size_t i = 0; i < out.pairs.size(); ++i) {
    out.split[i] = seen.contains(side_id(out.pairs[i], side)) ? Split::train : Split::test;
  }
  if (out.indices(Split::train).empty() || out.indices(Split::test).empty()) {
    throw InputError("cold_start_split: empty train or test partition");
  }
  return out;
}

std::vector<std::string> leaked_entities(const InteractionDataset& ds, Side side) {
  std::set<std::string> train, test;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    if (ds.split[i] == Split::train) train.insert(side_id(ds.pairs[i], side));
    if (ds.split[i] == Split::test) test.insert(side_id(ds.pairs[i], side));
  }
  std::vector<std::string> both;
  std::set_intersection(train.begin(), train.end(), test.begin(), test.end(),
                        std::back_inserter(both));
  return both;
}

std::pair<InteractionDataset, InteractionDataset> case_study_split(
    const InteractionDataset& ds, const std::set<std::string>& holdout) {
  if (holdout.empty()) throw InputError("case_study_split: empty holdout set");
  std::set<std::string> known;
  for (const auto& p : ds.pairs) {
    known.insert(p.drug);
    known.insert(p.protein);
  }
  for (const auto& id : holdout) {
    if (!known.contains(id)) throw InputError("case_study_split: unknown holdout id '" + id + "'");
  }
  std::vector<std::size_t> train_rows, eval_rows;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto& p = ds.pairs[i];
    (holdout.contains(p.drug) || holdout.contains(p.protein) ? eval_rows : train_rows).push_back(i);
  }
  if (eval_rows.empty()) throw InputError("case_study_split: no pairs touch the holdout set");
  InteractionDataset train = ds.subset(train_rows);
  InteractionDataset eval = ds.subset(eval_rows);
  std::fill(train.split.begin(), train.split.end(), Split::train);
  std::fill(eval.split.begin(), eval.split.end(), Split::test);
  return {std::move(train), std::move(eval)};
}

std::vector<CaseStudyRow> case_study_rows(const InteractionDataset& ds,
                                          std::span<const double> scores, double threshold) {
  if (scores.size() != ds.size()) {
    throw ShapeError("case_study_rows: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(ds.size()) + " pairs");
  }
  std::vector<CaseStudyRow> rows;
  rows.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& p = ds.pairs[i];
    rows.push_back({p.drug, p.protein, p.label, scores[i] >= threshold ? 1 : 0, scores[i]});
  }
  return rows;
}

void write_case_study(std::span<const CaseStudyRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << "drug_id\tprotein_id\tground_truth\tprediction\tcorrectness\n";
  for (const auto& r : rows) {
    out << r.drug << '\t' << r.protein << '\t' << r.ground_truth << '\t' << r.prediction << '\t'
        << (r.correct() ? "TRUE" : "FALSE") << '\n';
  }
}

// --- model evaluation -------------------------------------------------------

namespace {

constexpr std::uint64_t kEvalOrderSeed = 0x9e3779b97f4a7c15ULL;

// fn(positions, acts): positions index into `rows`, one per batch row.
template <typename Fn>
void for_each_chunk(const ModelParams& p, const ModelInputs& inputs, const InteractionDataset& ds,
                    std::span<const std::size_t> rows, const ForwardOptions& options,
                    std::size_t batch_size, Fn&& fn) {
  if (batch_size == 0) throw ParameterError("batch size must be >= 1");
  // Attention context is the chunk, so chunks are drawn from a fixed
  // permutation rather than file order (which groups labels together).
  RandomStream stream(kEvalOrderSeed ^ rows.size());
  const auto perm = stream.permutation(rows.size());
  std::vector<std::size_t> chunk_rows, chunk_pos;
  for (std::size_t begin = 0; begin < rows.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, rows.size());
    chunk_pos.assign(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                     perm.begin() + static_cast<std::ptrdiff_t>(end));
    chunk_rows.clear();
    for (std::size_t k : chunk_pos) chunk_rows.push_back(rows[k]);
    const auto pairs = resolve_pairs(ds, inputs, chunk_rows);
    fn(std::span<const std::size_t>(chunk_pos), forward(pairs, inputs, p, options));
  }
}

}  // namespace

std::vector<double> score_pairs(const ModelParams& p, const ModelInputs& inputs,
                                const InteractionDataset& ds, std::span<const std::size_t> rows,
                                const ForwardOptions& options, std::size_t batch_size) {
  std::vector<double> scores(rows.size());
  for_each_chunk(p, inputs, ds, rows, options, batch_size,
                 [&](std::span<const std::size_t> pos, const BatchActivations& acts) {
                   for (std::size_t i = 0; i < pos.size(); ++i) scores[pos[i]] = acts.probs[i];
                 });
  return scores;
}

std::vector<int> labels_of(const InteractionDataset& ds, std::span<const std::size_t> rows) {
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) labels.push_back(ds.pairs.at(r).label);
  return labels;
}

MetricsReport evaluate(const ModelParams& p, const ModelInputs& inputs,
                       const InteractionDataset& ds, std::span<const std::size_t> rows,
                       const ForwardOptions& options, std::size_t batch_size) {
  if (rows.empty()) throw InputError("evaluate: no pairs to evaluate");
  const auto scores = score_pairs(p, inputs, ds, rows, options, batch_size);
  const auto labels = labels_of(ds, rows);
  return metrics_report(scores, labels);
}

void dump_representations(const ModelParams& p, const ModelInputs& inputs,
                          const InteractionDataset& ds, std::span<const std::size_t> rows,
                          const ForwardOptions& options, std::size_t batch_size,
                          const std::filesystem::path& path) {
  Matrix all(rows.size(), 2 * p.dims.hidden);
  for_each_chunk(p, inputs, ds, rows, options, batch_size,
                 [&](std::span<const std::size_t> pos, const BatchActivations& acts) {
                   for (std::size_t i = 0; i < pos.size(); ++i) {
                     std::copy(acts.joint.row(i).begin(), acts.joint.row(i).end(),
                               all.row(pos[i]).begin());
                   }
                 });
  write_emb1(path, all);
  std::ofstream side(path.string() + ".labels.tsv");
  if (!side) throw InputError("cannot open label sidecar for '" + path.string() + "'");
  side << "drug_id\tprotein_id\tlabel\n";
  for (std::size_t r : rows) {
    const auto& pair = ds.pairs.at(r);
    side << pair.drug << '\t' << pair.protein << '\t' << pair.label << '\n';
  }
}

}  // namespace llm3dti
