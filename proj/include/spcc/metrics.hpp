#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "spcc/cad_model.hpp"
#include "spcc/geometry.hpp"

namespace spcc {

// Mean squared nearest-neighbour distance from P to Q plus the same from Q to P.
// Above kChamferIndexThreshold points a uniform grid index replaces the brute
// force scan; both give bit-identical results.
inline constexpr std::size_t kChamferIndexThreshold = 1000;
double chamfer(const PointCloud& p, const PointCloud& q);
double chamfer_brute_force(const PointCloud& p, const PointCloud& q);

struct MmdCov {
  double mmd = 0;
  double cov = 0;
};

// Chamfer matrix between every reference and generated cloud.
std::vector<std::vector<double>> chamfer_matrix(const std::vector<PointCloud>& reference,
                                                const std::vector<PointCloud>& generated, unsigned jobs = 0);

// MMD: mean over references of the smallest chamfer to any generated cloud.
// COV: fraction of references that are the nearest reference of at least one
// generated cloud (ties go to the lowest reference index).
MmdCov mmd_cov(const std::vector<PointCloud>& generated, const std::vector<PointCloud>& reference,
               unsigned jobs = 0);

inline constexpr int kDefaultJsdGrid = 28;

// Base-2 Jensen-Shannon divergence of the occupancy histograms of all points
// in each set, binned on a grid^3 lattice over the union bounding box.
double jsd(const std::vector<PointCloud>& generated, const std::vector<PointCloud>& reference,
           int grid = kDefaultJsdGrid);

struct NovelScore {
  double value = 0;
  bool empty_input = false;
};

NovelScore novel_score(const std::vector<CadModel>& generated, const std::unordered_set<std::string>& training_hashes);

inline constexpr int kDefaultParamTolerance = 3;

// Flattened command stream entry: SOL (loop start), Line, Arc, Circle or Extrude.
enum class CommandType { Sol, Line, Arc, Circle, Extrude };

struct FlatCommand {
  CommandType type;
  std::vector<int> params;
  std::vector<bool> exact;  // parameters compared for equality instead of within tolerance
};

std::vector<FlatCommand> flatten_commands(const CadModel& model);

struct CommandAccuracy {
  double acc_cmd = 0;
  double acc_param = 0;
};

// acc_cmd: positionwise type matches over the longer stream.
// acc_param: parameters within tol (flags exactly) at type-matched positions,
// over the total number of ground-truth parameters.
CommandAccuracy acc_cmd_param(const CadModel& pred, const CadModel& gt, int tol = kDefaultParamTolerance);

enum class Scale { Fraction, Percent };

// Half of (mean of the command and parameter accuracies) plus half of S_R.
// Throws DomainError when an argument lies outside the scale's range.
double acc_T(double acc_cmd, double acc_param, double s_r, Scale scale = Scale::Fraction);

bool exact_match(const CadModel& pred, const CadModel& gt);

struct TextScores {
  double bleu1 = 0;
  double bleu4 = 0;
  double rouge_l = 0;
};

std::vector<std::string> tokenize_text(const std::string& text);

// BLEU-1/BLEU-4 with uniform weights and closest-reference brevity penalty,
// ROUGE-L F1 maximized over references. Lowercased whitespace tokens.
TextScores text_metrics(const std::string& pred, const std::vector<std::string>& refs);

double median(std::vector<double> values);

struct CaptionPair {
  std::string prediction;
  std::vector<std::string> references;
};

struct ReportOptions {
  int resolution = kDefaultResolution;
  int samples = kDefaultSampleCount;
  std::uint64_t seed = 0;
  int tol = kDefaultParamTolerance;
  int jsd_grid = kDefaultJsdGrid;
  unsigned jobs = 0;
};

struct ReportInputs {
  // nullopt marks a generated item that failed to parse
  std::vector<std::optional<CadModel>> generated;
  std::vector<CadModel> reference;
  // When set, generated[i] is paired with reference[i].
  bool aligned = false;
  std::optional<std::unordered_set<std::string>> training_hashes;
  std::vector<CaptionPair> captions;
};

struct MetricsReport {
  std::optional<double> cov, mmd, jsd, sr, novel, acc_cmd, acc_param, acc_t, mcd, em, bleu1, bleu4, rouge_l;
  bool novel_empty = false;
  std::size_t generated_count = 0;
  std::size_t buildable_count = 0;
  std::size_t reference_count = 0;
  std::size_t aligned_pairs = 0;
};

MetricsReport compute_report(const ReportInputs& inputs, const ReportOptions& options = {});

// Scaled values under the table names (x100), nulls for metrics that could
// not be computed, and the unscaled values under "raw".
nlohmann::json report_to_json(const MetricsReport& report);

}  // namespace spcc
