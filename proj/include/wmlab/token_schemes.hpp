#pragma once

// Token-level watermarks: KGW (the WMAR core), IndexMark and ClusterMark,
// on top of a toy autoregressive logit model.
//
// Token maps are generated and scored in raster order. The first l
// positions of a sequence have no full context: they are generated with
// sentinel-padded contexts (sentinel = vocabulary size, or K for cluster
// contexts) and are never scored.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wmlab/hashing.hpp"
#include "wmlab/stats.hpp"
#include "wmlab/types.hpp"

namespace wmlab {

/// Stationary toy language model: the logits after a context are a seeded
/// pseudo-random table keyed by the hash of the previous `context_len`
/// tokens, logit[v] = logit_scale * sqrt(3) * (2u - 1) with u uniform.
/// logit_scale = 0 gives uniform logits.
struct ToyARModel {
  std::uint64_t seed = 1;
  std::int32_t vocab_size = 256;
  double temperature = 1.0;
  double logit_scale = 1.0;
  int context_len = 1;
};

/// Logits for the next token after `prefix`.
Eigen::VectorXd model_logits(const ToyARModel& model, std::span<const std::int32_t> prefix);

/// Samples index from softmax((logits) / temperature).
std::int32_t sample_categorical(const Eigen::VectorXd& logits, double temperature, SplitMix64& rng);

/// Ancestral sampling of a rows x cols token map.
TokenMap sample_tokens(const ToyARModel& model, Index rows, Index cols, std::uint64_t rng_seed);

// ---- KGW ------------------------------------------------------------------

struct KgwParams {
  WatermarkKey key;
  double gamma = 0.25;
  double delta = 2.0;
};

/// Sampling with delta added to the logits of each step's green set.
TokenMap embed_kgw(const ToyARModel& model, const KgwParams& params, Index rows, Index cols, std::uint64_t rng_seed);

/// Green set membership of the token at `position`, recomputed from context.
bool kgw_is_green(std::span<const std::int32_t> sequence, std::size_t position, std::int32_t vocab_size,
                  const WatermarkKey& key, double gamma);

DetectionReport detect_kgw(const TokenMap& tokens, const WatermarkKey& key, double gamma,
                           std::span<const double> fpr_levels = kDefaultFprLevels);

// ---- IndexMark --------------------------------------------------------------

struct TokenPairing {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  std::vector<std::int32_t> partner;  // -1 for the leftover
  std::vector<std::int8_t> color;     // 1 green, 0 red, -1 leftover
  std::int32_t leftover = -1;

  bool is_green(std::int32_t token) const { return color[token] == 1; }
  bool is_paired(std::int32_t token) const { return partner[token] >= 0; }
};

/// Greedy matching: repeatedly pairs the globally closest unpaired vectors
/// (ties by lower index pair). The green member of each pair is chosen by a
/// keyed coin on the pair's lower index.
TokenPairing build_pairing(const Codebook& codebook, std::uint64_t key = 0);

/// Replaces every red token by its green partner.
TokenMap embed_indexmark(const TokenMap& tokens, const TokenPairing& pairing);

/// Counts green members over paired positions against Binomial(T, 1/2).
DetectionReport detect_indexmark(const TokenMap& tokens, const TokenPairing& pairing,
                                 std::span<const double> fpr_levels = kDefaultFprLevels);

// ---- ClusterMark ------------------------------------------------------------

struct ClusterAssignment {
  std::int32_t clusters = 0;
  std::vector<std::int32_t> cluster_of;
  Eigen::MatrixXd centroids;  // clusters x d
  int iterations = 0;
  bool converged = false;
};

inline constexpr int kKMeansMaxIterations = 100;

/// Seeded k-means over codebook vectors. Initial centroids are K distinct
/// codebook vectors; iterates until the assignment is unchanged (at most
/// kKMeansMaxIterations rounds). An empty cluster is re-seeded with the
/// vector farthest from its current centroid. The returned assignment is
/// nearest-centroid (lowest id on ties) with respect to `centroids`.
ClusterAssignment cluster_codebook(const Codebook& codebook, std::int32_t clusters, std::uint64_t seed);

struct ClusterMarkParams {
  WatermarkKey key;
  double gamma = 0.25;
  double delta = 5.0;
};

TokenMap embed_clustermark(const ToyARModel& model, const ClusterAssignment& clusters, const ClusterMarkParams& params,
                           Index rows, Index cols, std::uint64_t rng_seed);

bool clustermark_is_green(std::span<const std::int32_t> sequence, std::size_t position,
                          const ClusterAssignment& clusters, const WatermarkKey& key, double gamma);

DetectionReport detect_clustermark(const TokenMap& tokens, const ClusterAssignment& clusters, const WatermarkKey& key,
                                   double gamma, std::span<const double> fpr_levels = kDefaultFprLevels);

// ---- Serialization ------------------------------------------------------------

/// {"h": .., "w": .., "vocab_size": .., "indices": [raster order]}
nlohmann::json tokenmap_to_json(const TokenMap& tokens);
TokenMap tokenmap_from_json(const nlohmann::json& doc);

/// Flat binary: magic "WMTK", then h, w, vocab_size as little-endian u32,
/// then h*w little-endian i32 indices in raster order.
std::vector<std::uint8_t> tokenmap_to_bytes(const TokenMap& tokens);
TokenMap tokenmap_from_bytes(std::span<const std::uint8_t> bytes);

}  // namespace wmlab
