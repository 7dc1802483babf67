#include "spcc/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "spcc/error.hpp"
#include "spcc/parallel.hpp"

namespace spcc {

namespace {

double sq_dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Uniform bucket grid over Q for exact nearest-neighbour queries.
class NearestIndex {
 public:
  explicit NearestIndex(const PointCloud& q) : q_(q) {
    lo_ = hi_ = q.front();
    for (const auto& p : q) {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y), std::min(lo_.z, p.z)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y), std::max(hi_.z, p.z)};
    }
    const double extent = std::max({hi_.x - lo_.x, hi_.y - lo_.y, hi_.z - lo_.z, 1e-12});
    n_ = std::clamp(static_cast<int>(std::cbrt(static_cast<double>(q.size()) / 2.0)), 1, 128);
    cell_ = extent / n_ * (1 + 1e-9);
    cells_.resize(static_cast<std::size_t>(n_) * n_ * n_);
    for (std::size_t i = 0; i < q.size(); ++i) {
      cells_[flat(cell_of(q[i].x, lo_.x), cell_of(q[i].y, lo_.y), cell_of(q[i].z, lo_.z))].push_back(i);
    }
  }

  double nearest_sq(const Vec3& p) const {
    const int ci = cell_of(p.x, lo_.x), cj = cell_of(p.y, lo_.y), ck = cell_of(p.z, lo_.z);
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0;; ++r) {
      for (int k = ck - r; k <= ck + r; ++k) {
        for (int j = cj - r; j <= cj + r; ++j) {
          for (int i = ci - r; i <= ci + r; ++i) {
            if (std::max({std::abs(i - ci), std::abs(j - cj), std::abs(k - ck)}) != r) continue;
            if (i < 0 || j < 0 || k < 0 || i >= n_ || j >= n_ || k >= n_) continue;
            for (std::size_t idx : cells_[flat(i, j, k)]) best = std::min(best, sq_dist(p, q_[idx]));
          }
        }
      }
      if (ci - r <= 0 && cj - r <= 0 && ck - r <= 0 && ci + r >= n_ - 1 && cj + r >= n_ - 1 && ck + r >= n_ - 1) {
        return best;
      }
      // Every unvisited point lies outside the searched cube of cells.
      const double gap = std::min({axis_gap(p.x, lo_.x, ci, r), axis_gap(p.y, lo_.y, cj, r),
                                   axis_gap(p.z, lo_.z, ck, r)});
      if (gap > 0 && gap * gap * (1 - 1e-9) > best) return best;
    }
  }

 private:
  int cell_of(double v, double lo) const {
    return std::clamp(static_cast<int>(std::floor((v - lo) / cell_)), 0, n_ - 1);
  }
  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * n_ + static_cast<std::size_t>(j)) * n_ + static_cast<std::size_t>(i);
  }
  double axis_gap(double v, double lo, int c, int r) const {
    // Cells outside [0, n) are empty, so the cube may extend without bound there.
    const double inf = std::numeric_limits<double>::infinity();
    const double lower = c - r <= 0 ? inf : v - (lo + (c - r) * cell_);
    const double upper = c + r >= n_ - 1 ? inf : (lo + (c + r + 1) * cell_) - v;
    return std::min(lower, upper);
  }

  const PointCloud& q_;
  Vec3 lo_, hi_;
  int n_ = 1;
  double cell_ = 1;
  std::vector<std::vector<std::size_t>> cells_;
};

double directed_brute(const PointCloud& p, const PointCloud& q) {
  double sum = 0;
  for (const auto& a : p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : q) best = std::min(best, sq_dist(a, b));
    sum += best;
  }
  return sum / static_cast<double>(p.size());
}

double directed_indexed(const PointCloud& p, const PointCloud& q) {
  const NearestIndex index(q);
  double sum = 0;
  for (const auto& a : p) sum += index.nearest_sq(a);
  return sum / static_cast<double>(p.size());
}

void require_clouds(const PointCloud& p, const PointCloud& q) {
  if (p.empty() || q.empty()) throw EmptinessError("chamfer distance needs two non-empty point clouds");
}

void require_batch(const std::vector<PointCloud>& clouds, const char* what) {
  if (clouds.empty()) throw EmptinessError(std::string(what) + " set is empty");
  for (const auto& c : clouds) {
    if (c.empty()) throw EmptinessError(std::string(what) + " set contains an empty point cloud");
  }
}

void push(FlatCommand& cmd, int value, bool exact = false) {
  cmd.params.push_back(value);
  cmd.exact.push_back(exact);
}

std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::string, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      key += tokens[i + k];
      key += '\x1f';
    }
    ++counts[key];
  }
  return counts;
}

double bleu(const std::vector<std::string>& pred, const std::vector<std::vector<std::string>>& refs, int order) {
  if (pred.empty()) return 0;
  double log_sum = 0;
  for (int n = 1; n <= order; ++n) {
    const auto counts = ngram_counts(pred, static_cast<std::size_t>(n));
    long total = 0, clipped = 0;
    for (const auto& [gram, c] : counts) {
      total += c;
      int max_ref = 0;
      for (const auto& ref : refs) {
        const auto rc = ngram_counts(ref, static_cast<std::size_t>(n));
        const auto it = rc.find(gram);
        if (it != rc.end()) max_ref = std::max(max_ref, it->second);
      }
      clipped += std::min(c, max_ref);
    }
    if (total == 0 || clipped == 0) return 0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total)) / order;
  }
  const auto c = static_cast<double>(pred.size());
  double r = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& ref : refs) {
    const auto len = static_cast<double>(ref.size());
    const double gap = std::abs(len - c);
    if (gap < best_gap || (gap == best_gap && len < r)) {
      best_gap = gap;
      r = len;
    }
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum);
}

double rouge_l(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
  if (pred.empty() || ref.empty()) return 0;
  std::vector<std::size_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (std::size_t i = 1; i <= pred.size(); ++i) {
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = pred[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const auto lcs = static_cast<double>(prev[ref.size()]);
  if (lcs == 0) return 0;
  const double p = lcs / static_cast<double>(pred.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2 * p * r / (p + r);
}

std::vector<PointCloud> sample_all(const std::vector<const CadModel*>& models, const ReportOptions& options,
                                   std::vector<bool>& ok) {
  std::vector<PointCloud> clouds(models.size());
  ok.assign(models.size(), false);
  std::vector<char> flags(models.size(), 0);
  parallel_for(models.size(), options.jobs == 0 ? default_jobs() : options.jobs, [&](std::size_t i) {
    try {
      const VoxelSolid solid = evaluate_model(*models[i], options.resolution, 1);
      if (solid.count() == 0) return;
      clouds[i] = sample_surface_points(solid, options.samples, options.seed + i);
      flags[i] = 1;
    } catch (const Error&) {
    }
  });
  for (std::size_t i = 0; i < models.size(); ++i) ok[i] = flags[i] != 0;
  return clouds;
}

}  // namespace

double chamfer_brute_force(const PointCloud& p, const PointCloud& q) {
  require_clouds(p, q);
  return directed_brute(p, q) + directed_brute(q, p);
}

double chamfer(const PointCloud& p, const PointCloud& q) {
  require_clouds(p, q);
  const double forward = q.size() > kChamferIndexThreshold ? directed_indexed(p, q) : directed_brute(p, q);
  const double backward = p.size() > kChamferIndexThreshold ? directed_indexed(q, p) : directed_brute(q, p);
  return forward + backward;
}

std::vector<std::vector<double>> chamfer_matrix(const std::vector<PointCloud>& reference,
                                                const std::vector<PointCloud>& generated, unsigned jobs) {
  std::vector<std::vector<double>> m(reference.size(), std::vector<double>(generated.size()));
  const std::size_t cols = generated.size();
  parallel_for(reference.size() * cols, jobs == 0 ? default_jobs() : jobs, [&](std::size_t idx) {
    m[idx / cols][idx % cols] = chamfer(reference[idx / cols], generated[idx % cols]);
  });
  return m;
}

MmdCov mmd_cov(const std::vector<PointCloud>& generated, const std::vector<PointCloud>& reference, unsigned jobs) {
  require_batch(generated, "generated");
  require_batch(reference, "reference");
  const auto m = chamfer_matrix(reference, generated, jobs);

  double sum = 0;
  for (const auto& row : m) sum += *std::min_element(row.begin(), row.end());

  std::vector<bool> matched(reference.size(), false);
  for (std::size_t g = 0; g < generated.size(); ++g) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < reference.size(); ++r) {
      if (m[r][g] < m[best][g]) best = r;
    }
    matched[best] = true;
  }
  const auto covered = static_cast<double>(std::count(matched.begin(), matched.end(), true));
  return {sum / static_cast<double>(reference.size()), covered / static_cast<double>(reference.size())};
}

double jsd(const std::vector<PointCloud>& generated, const std::vector<PointCloud>& reference, int grid) {
  require_batch(generated, "generated");
  require_batch(reference, "reference");
  if (grid < 1) throw DomainError("JSD grid must be positive");

  Vec3 lo = generated.front().front(), hi = lo;
  for (const auto* set : {&generated, &reference}) {
    for (const auto& cloud : *set) {
      for (const auto& p : cloud) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
      }
    }
  }
  auto bin = [&](double v, double l, double h) {
    if (!(h > l)) return 0;
    return std::clamp(static_cast<int>(std::floor((v - l) / (h - l) * grid)), 0, grid - 1);
  };
  const auto cells = static_cast<std::size_t>(grid) * grid * grid;
  auto histogram = [&](const std::vector<PointCloud>& set) {
    std::vector<double> h(cells, 0.0);
    double total = 0;
    for (const auto& cloud : set) {
      for (const auto& p : cloud) {
        const auto idx = (static_cast<std::size_t>(bin(p.x, lo.x, hi.x)) * grid +
                          static_cast<std::size_t>(bin(p.y, lo.y, hi.y))) *
                             grid +
                         static_cast<std::size_t>(bin(p.z, lo.z, hi.z));
        h[idx] += 1.0;
        total += 1.0;
      }
    }
    for (auto& v : h) v /= total;
    return h;
  };
  const auto p = histogram(generated);
  const auto q = histogram(reference);
  double kl_p = 0, kl_q = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0) kl_q += q[i] * std::log2(q[i] / m);
  }
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

NovelScore novel_score(const std::vector<CadModel>& generated, const std::unordered_set<std::string>& training_hashes) {
  if (generated.empty()) return {0.0, true};
  std::size_t novel = 0;
  for (const auto& m : generated) {
    if (!training_hashes.contains(canonical_hash(m))) ++novel;
  }
  return {static_cast<double>(novel) / static_cast<double>(generated.size()), false};
}

std::vector<FlatCommand> flatten_commands(const CadModel& model) {
  std::vector<FlatCommand> out;
  for (const auto& pair : model.pairs) {
    for (const auto& loop : pair.sketch.loops) {
      out.push_back({CommandType::Sol, {}, {}});
      for (const auto& curve : loop.curves) {
        FlatCommand cmd;
        if (const auto* line = std::get_if<Line>(&curve)) {
          cmd.type = CommandType::Line;
          push(cmd, line->end.x);
          push(cmd, line->end.y);
        } else if (const auto* arc = std::get_if<Arc>(&curve)) {
          cmd.type = CommandType::Arc;
          push(cmd, arc->end.x);
          push(cmd, arc->end.y);
          push(cmd, arc->sweep);
          push(cmd, arc->ccw ? 1 : 0, true);
        } else {
          const auto& circle = std::get<Circle>(curve);
          cmd.type = CommandType::Circle;
          push(cmd, circle.center.x);
          push(cmd, circle.center.y);
          push(cmd, circle.radius);
        }
        out.push_back(std::move(cmd));
      }
    }
    const ExtrudeCmd& e = pair.extrude;
    FlatCommand cmd;
    cmd.type = CommandType::Extrude;
    for (int angle : e.orient) push(cmd, angle);
    push(cmd, e.origin.x);
    push(cmd, e.origin.y);
    push(cmd, e.origin.z);
    push(cmd, static_cast<int>(std::lround(e.scale / kScaleMax * 255.0)));
    push(cmd, e.dist1);
    push(cmd, e.dist2);
    push(cmd, static_cast<int>(e.op), true);
    push(cmd, static_cast<int>(e.extent), true);
    out.push_back(std::move(cmd));
  }
  return out;
}

CommandAccuracy acc_cmd_param(const CadModel& pred, const CadModel& gt, int tol) {
  const auto p = flatten_commands(pred);
  const auto g = flatten_commands(gt);
  const std::size_t longest = std::max(p.size(), g.size());
  if (longest == 0) return {1.0, 1.0};

  std::size_t type_matches = 0, gt_params = 0, param_matches = 0;
  for (const auto& cmd : g) gt_params += cmd.params.size();
  for (std::size_t i = 0; i < std::min(p.size(), g.size()); ++i) {
    if (p[i].type != g[i].type) continue;
    ++type_matches;
    for (std::size_t k = 0; k < g[i].params.size(); ++k) {
      const int diff = std::abs(p[i].params[k] - g[i].params[k]);
      if (g[i].exact[k] ? diff == 0 : diff <= tol) ++param_matches;
    }
  }
  CommandAccuracy acc;
  acc.acc_cmd = static_cast<double>(type_matches) / static_cast<double>(longest);
  acc.acc_param = gt_params == 0 ? (type_matches == longest ? 1.0 : 0.0)
                                 : static_cast<double>(param_matches) / static_cast<double>(gt_params);
  return acc;
}

double acc_T(double acc_cmd, double acc_param, double s_r, Scale scale) {
  const double top = scale == Scale::Fraction ? 1.0 : 100.0;
  for (double v : {acc_cmd, acc_param, s_r}) {
    if (!(v >= 0.0 && v <= top)) {
      throw DomainError("accuracy " + std::to_string(v) + " is outside [0, " + std::to_string(top) +
                        "]; arguments must share one scale");
    }
  }
  return 0.5 * ((acc_cmd + acc_param) / 2.0 + s_r);
}

bool exact_match(const CadModel& pred, const CadModel& gt) { return canonical_hash(pred) == canonical_hash(gt); }

std::vector<std::string> tokenize_text(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) { return std::tolower(c); });
    tokens.push_back(tok);
  }
  return tokens;
}

TextScores text_metrics(const std::string& pred, const std::vector<std::string>& refs) {
  if (refs.empty()) throw EmptinessError("text metrics need at least one reference");
  const auto p = tokenize_text(pred);
  std::vector<std::vector<std::string>> r;
  for (const auto& ref : refs) r.push_back(tokenize_text(ref));
  TextScores s;
  s.bleu1 = bleu(p, r, 1);
  s.bleu4 = bleu(p, r, 4);
  for (const auto& ref : r) s.rouge_l = std::max(s.rouge_l, rouge_l(p, ref));
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) throw EmptinessError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MetricsReport compute_report(const ReportInputs& in, const ReportOptions& options) {
  if (in.aligned && in.generated.size() != in.reference.size()) {
    throw DomainError("aligned evaluation needs equally many generated and reference items");
  }
  MetricsReport rep;
  rep.generated_count = in.generated.size();
  rep.reference_count = in.reference.size();

  std::vector<const CadModel*> gen_models;
  std::vector<std::size_t> gen_slot(in.generated.size(), SIZE_MAX);
  for (std::size_t i = 0; i < in.generated.size(); ++i) {
    if (in.generated[i]) {
      gen_slot[i] = gen_models.size();
      gen_models.push_back(&*in.generated[i]);
    }
  }
  std::vector<const CadModel*> ref_models;
  for (const auto& m : in.reference) ref_models.push_back(&m);

  std::vector<bool> gen_ok, ref_ok;
  const auto gen_clouds = sample_all(gen_models, options, gen_ok);
  const auto ref_clouds = sample_all(ref_models, options, ref_ok);
  rep.buildable_count = static_cast<std::size_t>(std::count(gen_ok.begin(), gen_ok.end(), true));

  if (!in.generated.empty()) {
    rep.sr = static_cast<double>(rep.buildable_count) / static_cast<double>(in.generated.size());
  }

  std::vector<PointCloud> gen_set, ref_set;
  for (std::size_t i = 0; i < gen_clouds.size(); ++i) {
    if (gen_ok[i]) gen_set.push_back(gen_clouds[i]);
  }
  for (std::size_t i = 0; i < ref_clouds.size(); ++i) {
    if (ref_ok[i]) ref_set.push_back(ref_clouds[i]);
  }
  if (!gen_set.empty() && !ref_set.empty()) {
    const MmdCov mc = mmd_cov(gen_set, ref_set, options.jobs);
    rep.mmd = mc.mmd;
    rep.cov = mc.cov;
    rep.jsd = jsd(gen_set, ref_set, options.jsd_grid);
  }

  if (in.training_hashes) {
    std::vector<CadModel> parsed;
    for (const auto& g : in.generated) {
      if (g) parsed.push_back(*g);
    }
    const NovelScore ns = novel_score(parsed, *in.training_hashes);
    rep.novel = ns.value;
    rep.novel_empty = ns.empty_input;
  }

  if (in.aligned && !in.generated.empty()) {
    rep.aligned_pairs = in.generated.size();
    double cmd_sum = 0, param_sum = 0, em = 0;
    std::vector<double> cds;
    for (std::size_t i = 0; i < in.generated.size(); ++i) {
      if (!in.generated[i]) continue;
      const auto acc = acc_cmd_param(*in.generated[i], in.reference[i], options.tol);
      cmd_sum += acc.acc_cmd;
      param_sum += acc.acc_param;
      if (exact_match(*in.generated[i], in.reference[i])) em += 1;
      const std::size_t slot = gen_slot[i];
      if (gen_ok[slot] && ref_ok[i]) cds.push_back(chamfer(gen_clouds[slot], ref_clouds[i]));
    }
    const auto n = static_cast<double>(in.generated.size());
    rep.acc_cmd = cmd_sum / n;
    rep.acc_param = param_sum / n;
    rep.em = em / n;
    if (!cds.empty()) rep.mcd = median(cds);
    rep.acc_t = acc_T(*rep.acc_cmd, *rep.acc_param, *rep.sr);
  }

  if (!in.captions.empty()) {
    double b1 = 0, b4 = 0, rl = 0;
    for (const auto& c : in.captions) {
      const TextScores s = text_metrics(c.prediction, c.references);
      b1 += s.bleu1;
      b4 += s.bleu4;
      rl += s.rouge_l;
    }
    const auto n = static_cast<double>(in.captions.size());
    rep.bleu1 = b1 / n;
    rep.bleu4 = b4 / n;
    rep.rouge_l = rl / n;
  }
  return rep;
}

nlohmann::json report_to_json(const MetricsReport& r) {
  const std::pair<const char*, const std::optional<double>*> fields[] = {
      {"COV", &r.cov},       {"MMD", &r.mmd},       {"JSD", &r.jsd},           {"SR", &r.sr},
      {"Novel", &r.novel},   {"ACC_cmd", &r.acc_cmd}, {"ACC_param", &r.acc_param}, {"ACC_T", &r.acc_t},
      {"MCD", &r.mcd},       {"EM", &r.em},         {"BLEU1", &r.bleu1},       {"BLEU4", &r.bleu4},
      {"ROUGE_L", &r.rouge_l}};
  nlohmann::json out = nlohmann::json::object();
  nlohmann::json raw = nlohmann::json::object();
  for (const auto& [name, value] : fields) {
    if (*value) {
      out[name] = **value * 100.0;
      raw[name] = **value;
    } else {
      out[name] = nullptr;
      raw[name] = nullptr;
    }
  }
  out["raw"] = raw;
  out["counts"] = {{"generated", r.generated_count},
                   {"buildable", r.buildable_count},
                   {"reference", r.reference_count},
                   {"aligned_pairs", r.aligned_pairs}};
  if (r.novel_empty) out["warnings"] = {"Novel computed over an empty generated set"};
  return out;
}

}  // namespace spcc
