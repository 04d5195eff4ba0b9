#include "wmlab/token_schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wmlab {
namespace {

template <typename BoostMask>
TokenMap sample_biased(const ToyARModel& model, Index rows, Index cols, std::uint64_t rng_seed, double delta,
                       BoostMask&& boost_mask) {
  if (!(model.temperature > 0)) throw ParameterError("temperature must be positive");
  if (delta < 0) throw ParameterError("delta must be >= 0");
  TokenMap tokens(rows, cols, model.vocab_size);
  std::vector<std::int32_t> seq;
  seq.reserve(static_cast<std::size_t>(rows * cols));
  SplitMix64 rng(rng_seed);
  for (Index i = 0; i < rows * cols; ++i) {
    Eigen::VectorXd logits = model_logits(model, seq);
    if (delta > 0) {
      const std::vector<std::uint8_t> mask = boost_mask(std::span<const std::int32_t>(seq), static_cast<std::size_t>(i));
      for (std::int32_t v = 0; v < model.vocab_size; ++v)
        if (mask[v]) logits[v] += delta;
    }
    const std::int32_t t = sample_categorical(logits, model.temperature, rng);
    seq.push_back(t);
    tokens[i] = t;
  }
  return tokens;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie in (0,1)");
}

}  // namespace

Eigen::VectorXd model_logits(const ToyARModel& model, std::span<const std::int32_t> prefix) {
  const auto window = context_window(prefix, prefix.size(), model.context_len, model.vocab_size);
  SplitMix64 rng(context_hash(window, model.seed));
  Eigen::VectorXd logits(model.vocab_size);
  const double scale = model.logit_scale * std::sqrt(3.0);
  for (std::int32_t v = 0; v < model.vocab_size; ++v) logits[v] = scale * (2.0 * uniform01(rng) - 1.0);
  return logits;
}

std::int32_t sample_categorical(const Eigen::VectorXd& logits, double temperature, SplitMix64& rng) {
  const Eigen::VectorXd scaled = logits / temperature;
  const Eigen::ArrayXd w = (scaled.array() - scaled.maxCoeff()).exp();
  const double u = uniform01(rng) * w.sum();
  double acc = 0.0;
  for (Index v = 0; v < w.size(); ++v) {
    acc += w[v];
    if (u < acc) return static_cast<std::int32_t>(v);
  }
  // Round-off at the top end: last token with nonzero weight.
  for (Index v = w.size() - 1; v >= 0; --v)
    if (w[v] > 0) return static_cast<std::int32_t>(v);
  return 0;
}

TokenMap sample_tokens(const ToyARModel& model, Index rows, Index cols, std::uint64_t rng_seed) {
  return sample_biased(model, rows, cols, rng_seed, 0.0,
                       [](std::span<const std::int32_t>, std::size_t) { return std::vector<std::uint8_t>{}; });
}

// ---- KGW ------------------------------------------------------------------

TokenMap embed_kgw(const ToyARModel& model, const KgwParams& params, Index rows, Index cols, std::uint64_t rng_seed) {
  check_gamma(params.gamma);
  return sample_biased(model, rows, cols, rng_seed, params.delta,
                       [&](std::span<const std::int32_t> seq, std::size_t i) {
                         const auto window = context_window(seq, i, params.key.context_len, model.vocab_size);
                         return green_mask(context_hash(window, params.key.secret), model.vocab_size, params.gamma);
                       });
}

bool kgw_is_green(std::span<const std::int32_t> sequence, std::size_t position, std::int32_t vocab_size,
                  const WatermarkKey& key, double gamma) {
  const auto window = context_window(sequence, position, key.context_len, vocab_size);
  const auto green = green_set(context_hash(window, key.secret), vocab_size, gamma);
  return std::find(green.begin(), green.end(), sequence[position]) != green.end();
}

DetectionReport detect_kgw(const TokenMap& tokens, const WatermarkKey& key, double gamma,
                           std::span<const double> fpr_levels) {
  check_gamma(gamma);
  const auto l = static_cast<Index>(key.context_len);
  if (tokens.length() < l + 1) throw ParameterError("detect_kgw: sequence shorter than context + 1");
  const std::vector<std::int32_t> seq = tokens.sequence();
  std::int64_t green = 0;
  for (Index i = l; i < tokens.length(); ++i)
    green += kgw_is_green(seq, static_cast<std::size_t>(i), tokens.vocab_size, key, gamma) ? 1 : 0;
  return make_detection_report(tokens.length() - l, green, gamma, fpr_levels);
}

// ---- IndexMark --------------------------------------------------------------

TokenPairing build_pairing(const Codebook& codebook, std::uint64_t key) {
  const Index n = codebook.size();
  if (n < 2) throw ParameterError("build_pairing: codebook needs >= 2 vectors");
  struct Candidate {
    double dist;
    std::int32_t a;
    std::int32_t b;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      candidates.push_back({(codebook.vectors.row(i) - codebook.vectors.row(j)).squaredNorm(),
                            static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)});
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.dist != y.dist) return x.dist < y.dist;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  TokenPairing pairing;
  pairing.partner.assign(static_cast<std::size_t>(n), -1);
  pairing.color.assign(static_cast<std::size_t>(n), -1);
  for (const Candidate& c : candidates) {
    if (pairing.partner[c.a] >= 0 || pairing.partner[c.b] >= 0) continue;
    pairing.partner[c.a] = c.b;
    pairing.partner[c.b] = c.a;
    pairing.pairs.emplace_back(c.a, c.b);
    const bool lower_green = (derive_seed(key, static_cast<std::uint64_t>(c.a)) & 1ULL) == 0;
    pairing.color[c.a] = lower_green ? 1 : 0;
    pairing.color[c.b] = lower_green ? 0 : 1;
    if (static_cast<Index>(2 * pairing.pairs.size()) + 1 >= n) break;
  }
  for (Index v = 0; v < n; ++v)
    if (pairing.partner[v] < 0) pairing.leftover = static_cast<std::int32_t>(v);
  return pairing;
}

TokenMap embed_indexmark(const TokenMap& tokens, const TokenPairing& pairing) {
  TokenMap out = tokens;
  for (Index i = 0; i < out.length(); ++i) {
    const std::int32_t t = out[i];
    if (pairing.color[t] == 0) out[i] = pairing.partner[t];
  }
  return out;
}

DetectionReport detect_indexmark(const TokenMap& tokens, const TokenPairing& pairing,
                                 std::span<const double> fpr_levels) {
  std::int64_t trials = 0;
  std::int64_t green = 0;
  for (Index i = 0; i < tokens.length(); ++i) {
    const std::int32_t t = tokens[i];
    if (t < 0 || t >= static_cast<std::int32_t>(pairing.color.size())) throw ParameterError("token outside pairing");
    if (!pairing.is_paired(t)) continue;
    ++trials;
    green += pairing.is_green(t) ? 1 : 0;
  }
  return make_detection_report(trials, green, 0.5, fpr_levels);
}

// ---- ClusterMark ------------------------------------------------------------

namespace {

std::int32_t nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& v) {
  std::int32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < centroids.rows(); ++k) {
    const double d = (centroids.row(k) - v).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::int32_t>(k);
    }
  }
  return best;
}

}  // namespace

ClusterAssignment cluster_codebook(const Codebook& codebook, std::int32_t clusters, std::uint64_t seed) {
  const Index n = codebook.size();
  if (clusters < 1 || clusters > n) throw ParameterError("cluster_codebook: need 1 <= K <= |V|");
  ClusterAssignment out;
  out.clusters = clusters;

  // Distinct initial centroids: partial Fisher-Yates over token indices.
  std::vector<std::int32_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(seed);
  for (std::int32_t k = 0; k < clusters; ++k) {
    const auto j = k + static_cast<std::int32_t>(uniform_index(rng, static_cast<std::uint64_t>(n - k)));
    std::swap(perm[k], perm[j]);
  }
  out.centroids.resize(clusters, codebook.dim());
  for (std::int32_t k = 0; k < clusters; ++k) out.centroids.row(k) = codebook.vectors.row(perm[k]);

  auto assign = [&](const Eigen::MatrixXd& centroids) {
    std::vector<std::int32_t> a(static_cast<std::size_t>(n));
    for (Index v = 0; v < n; ++v) a[v] = nearest_centroid(centroids, codebook.vectors.row(v));
    return a;
  };

  out.cluster_of = assign(out.centroids);
  for (int it = 1; it <= kKMeansMaxIterations; ++it) {
    out.iterations = it;
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(clusters, codebook.dim());
    std::vector<Index> counts(static_cast<std::size_t>(clusters), 0);
    for (Index v = 0; v < n; ++v) {
      next.row(out.cluster_of[v]) += codebook.vectors.row(v);
      ++counts[out.cluster_of[v]];
    }
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(n), 0);
    for (std::int32_t k = 0; k < clusters; ++k) {
      if (counts[k] > 0) {
        next.row(k) /= double(counts[k]);
        continue;
      }
      // Empty cluster: farthest vector from its current centroid.
      Index far = -1;
      double far_d = -1.0;
      for (Index v = 0; v < n; ++v) {
        if (taken[v]) continue;
        const double d = (codebook.vectors.row(v) - out.centroids.row(out.cluster_of[v])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = v;
        }
      }
      taken[far] = 1;
      next.row(k) = codebook.vectors.row(far);
    }
    std::vector<std::int32_t> reassigned = assign(next);
    out.centroids = std::move(next);
    const bool unchanged = reassigned == out.cluster_of;
    out.cluster_of = std::move(reassigned);
    if (unchanged) {
      out.converged = true;
      break;
    }
  }
  return out;
}

TokenMap embed_clustermark(const ToyARModel& model, const ClusterAssignment& clusters, const ClusterMarkParams& params,
                           Index rows, Index cols, std::uint64_t rng_seed) {
  check_gamma(params.gamma);
  if (static_cast<std::int32_t>(clusters.cluster_of.size()) != model.vocab_size)
    throw ParameterError("cluster assignment does not cover the vocabulary");
  return sample_biased(model, rows, cols, rng_seed, params.delta, [&](std::span<const std::int32_t> seq, std::size_t i) {
    std::vector<std::int32_t> ids(seq.size());
    const std::size_t first = i >= static_cast<std::size_t>(params.key.context_len) ? i - params.key.context_len : 0;
    for (std::size_t k = first; k < i; ++k) ids[k] = clusters.cluster_of[seq[k]];
    const auto window = context_window(ids, i, params.key.context_len, clusters.clusters);
    const auto cluster_green = green_mask(context_hash(window, params.key.secret), clusters.clusters, params.gamma);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(model.vocab_size));
    for (std::int32_t v = 0; v < model.vocab_size; ++v) mask[v] = cluster_green[clusters.cluster_of[v]];
    return mask;
  });
}

bool clustermark_is_green(std::span<const std::int32_t> sequence, std::size_t position,
                          const ClusterAssignment& clusters, const WatermarkKey& key, double gamma) {
  std::vector<std::int32_t> ids(position + 1);
  const std::size_t first = position >= static_cast<std::size_t>(key.context_len) ? position - key.context_len : 0;
  for (std::size_t k = first; k <= position; ++k) ids[k] = clusters.cluster_of[sequence[k]];
  const auto window = context_window(ids, position, key.context_len, clusters.clusters);
  const auto green = green_set(context_hash(window, key.secret), clusters.clusters, gamma);
  return std::find(green.begin(), green.end(), ids[position]) != green.end();
}

DetectionReport detect_clustermark(const TokenMap& tokens, const ClusterAssignment& clusters, const WatermarkKey& key,
                                   double gamma, std::span<const double> fpr_levels) {
  check_gamma(gamma);
  const auto l = static_cast<Index>(key.context_len);
  if (tokens.length() < l + 1) throw ParameterError("detect_clustermark: sequence shorter than context + 1");
  const std::vector<std::int32_t> seq = tokens.sequence();
  std::int64_t green = 0;
  for (Index i = l; i < tokens.length(); ++i)
    green += clustermark_is_green(seq, static_cast<std::size_t>(i), clusters, key, gamma) ? 1 : 0;
  return make_detection_report(tokens.length() - l, green, gamma, fpr_levels);
}

// ---- Serialization ------------------------------------------------------------

nlohmann::json tokenmap_to_json(const TokenMap& tokens) {
  return {{"h", tokens.height()}, {"w", tokens.width()}, {"vocab_size", tokens.vocab_size}, {"indices", tokens.sequence()}};
}

TokenMap tokenmap_from_json(const nlohmann::json& doc) {
  TokenMap t(doc.at("h").get<Index>(), doc.at("w").get<Index>(), doc.at("vocab_size").get<std::int32_t>());
  const auto idx = doc.at("indices").get<std::vector<std::int32_t>>();
  if (static_cast<Index>(idx.size()) != t.length()) throw FormatError("token map: index count does not match h*w");
  for (Index i = 0; i < t.length(); ++i) t[i] = idx[static_cast<std::size_t>(i)];
  t.validate();
  return t;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= std::uint32_t(in[at + b]) << (8 * b);
  return v;
}

}  // namespace

std::vector<std::uint8_t> tokenmap_to_bytes(const TokenMap& tokens) {
  std::vector<std::uint8_t> out{'W', 'M', 'T', 'K'};
  put_u32(out, static_cast<std::uint32_t>(tokens.height()));
  put_u32(out, static_cast<std::uint32_t>(tokens.width()));
  put_u32(out, static_cast<std::uint32_t>(tokens.vocab_size));
  for (Index i = 0; i < tokens.length(); ++i) put_u32(out, static_cast<std::uint32_t>(tokens[i]));
  return out;
}

TokenMap tokenmap_from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || bytes[0] != 'W' || bytes[1] != 'M' || bytes[2] != 'T' || bytes[3] != 'K')
    throw FormatError("token map: bad header");
  const std::uint32_t h = get_u32(bytes, 4);
  const std::uint32_t w = get_u32(bytes, 8);
  const std::uint32_t v = get_u32(bytes, 12);
  if (bytes.size() != 16 + 4 * std::size_t(h) * w) throw FormatError("token map: truncated payload");
  TokenMap t(h, w, static_cast<std::int32_t>(v));
  for (Index i = 0; i < t.length(); ++i) t[i] = static_cast<std::int32_t>(get_u32(bytes, 16 + 4 * std::size_t(i)));
  t.validate();
  return t;
}

}  // namespace wmlab
