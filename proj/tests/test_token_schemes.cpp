#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "wmlab/corpus.hpp"
#include "wmlab/hashing.hpp"
#include "wmlab/token_schemes.hpp"
#include "wmlab/toyvae.hpp"

using namespace wmlab;

namespace {

ToyARModel uniform_model(std::int32_t vocab = 256) {
  ToyARModel m;
  m.vocab_size = vocab;
  m.logit_scale = 0.0;
  return m;
}

Codebook line_codebook(std::vector<double> values) {
  Codebook cb;
  cb.vectors.resize(Index(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) cb.vectors(Index(i), 0) = values[i];
  return cb;
}

}  // namespace

TEST_CASE("model logits are deterministic and context dependent") {
  ToyARModel m;
  const std::vector<std::int32_t> a{1, 2, 3};
  const std::vector<std::int32_t> b{1, 2, 4};
  CHECK(model_logits(m, a) == model_logits(m, a));
  CHECK(model_logits(m, a) != model_logits(m, b));
  CHECK(model_logits(uniform_model(), a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("categorical sampling follows softmax") {
  Eigen::VectorXd logits(3);
  logits << 0.0, std::log(2.0), std::log(5.0);
  SplitMix64 rng(4);
  std::vector<int> hits(3, 0);
  const int n = 80000;
  for (int i = 0; i < n; ++i) ++hits[sample_categorical(logits, 1.0, rng)];
  CHECK(hits[0] / double(n) == doctest::Approx(0.125).epsilon(0.05));
  CHECK(hits[1] / double(n) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(hits[2] / double(n) == doctest::Approx(0.625).epsilon(0.05));
}

TEST_CASE("KGW green fraction on uniform logits: gamma e^delta / (gamma e^delta + 1 - gamma)") {
  const double expected = 0.25 * std::exp(2.0) / (0.25 * std::exp(2.0) + 0.75);
  CHECK(expected == doctest::Approx(0.711).epsilon(1e-3));
  std::int64_t green = 0, trials = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const TokenMap t = embed_kgw(uniform_model(), {{42, 1}, 0.25, 2.0}, 16, 16, s);
    const DetectionReport r = detect_kgw(t, {42, 1}, 0.25);
    green += r.green;
    trials += r.trials;
  }
  CHECK(double(green) / double(trials) == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("KGW scores positions l..n-1 and rejects the wrong key") {
  const TokenMap t = embed_kgw(ToyARModel{}, {{7, 2}, 0.25, 4.0}, 8, 8, 3);
  const DetectionReport right = detect_kgw(t, {7, 2}, 0.25);
  CHECK(right.trials == 62);
  CHECK(right.p < 1e-10);
  CHECK(detect_kgw(t, {8, 2}, 0.25).p > 1e-4);
}

TEST_CASE("unwatermarked KGW sequences are roughly calibrated") {
  int flagged = 0;
  const int n = 2000;
  for (int s = 0; s < n; ++s)
    flagged += detect_kgw(sample_tokens(ToyARModel{}, 16, 16, 1000 + s), {42, 1}, 0.25).p < 0.01;
  CHECK(flagged / double(n) < 0.025);
  CHECK(flagged / double(n) > 0.002);
}

TEST_CASE("pairing on {0, 0.1, 10, 10.1}") {
  const TokenPairing p = build_pairing(line_codebook({0.0, 0.1, 10.0, 10.1}), 3);
  REQUIRE(p.pairs.size() == 2);
  const std::set<std::pair<std::int32_t, std::int32_t>> pairs(p.pairs.begin(), p.pairs.end());
  CHECK(pairs == std::set<std::pair<std::int32_t, std::int32_t>>{{0, 1}, {2, 3}});
  CHECK(p.partner == std::vector<std::int32_t>{1, 0, 3, 2});
  CHECK(p.leftover == -1);
  for (auto [a, b] : p.pairs) CHECK(p.color[a] + p.color[b] == 1);
}

TEST_CASE("odd codebooks leave one token unpaired") {
  const TokenPairing p = build_pairing(line_codebook({0.0, 0.1, 10.0, 10.1, 50.0}), 1);
  CHECK(p.leftover == 4);
  CHECK(p.color[4] == -1);
  CHECK_FALSE(p.is_paired(4));
}

TEST_CASE("pair colours are balanced across keys") {
  const Codebook cb = build_codebook(2, 64, 4);
  int lower_green = 0, pairs = 0;
  for (std::uint64_t key = 0; key < 50; ++key) {
    const TokenPairing p = build_pairing(cb, key);
    for (auto [a, b] : p.pairs) {
      lower_green += p.is_green(std::min(a, b));
      ++pairs;
    }
  }
  CHECK(lower_green / double(pairs) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("IndexMark replaces red tokens and detects at N_g = T") {
  ProfileSpec s = token_lab_spec();
  s.codebook_layout = CodebookLayout::Paired;
  const EncoderProfile prof(s);
  const TokenPairing pairing = build_pairing(prof.codebook(), 42);
  const TokenMap raw = sample_tokens(ToyARModel{}, 16, 16, 5);
  const TokenMap wm = embed_indexmark(raw, pairing);
  for (Index i = 0; i < wm.length(); ++i) {
    if (pairing.is_paired(raw[i])) CHECK(pairing.is_green(wm[i]));
    if (pairing.is_green(raw[i])) CHECK(wm[i] == raw[i]);
  }
  const DetectionReport r = detect_indexmark(wm, pairing);
  CHECK(r.green == r.trials);
  CHECK(r.gamma == 0.5);
}

TEST_CASE("k-means recovers well separated blobs") {
  Codebook cb;
  cb.vectors.resize(30, 2);
  SplitMix64 rng(3);
  const double centres[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  for (int i = 0; i < 30; ++i) {
    cb.vectors(i, 0) = centres[i % 3][0] + 0.1 * standard_normal(rng);
    cb.vectors(i, 1) = centres[i % 3][1] + 0.1 * standard_normal(rng);
  }
  const ClusterAssignment a = cluster_codebook(cb, 3, 9);
  CHECK(a.converged);
  for (int i = 3; i < 30; ++i) CHECK(a.cluster_of[i] == a.cluster_of[i % 3]);
  const std::set<std::int32_t> ids(a.cluster_of.begin(), a.cluster_of.end());
  CHECK(ids.size() == 3);
}

TEST_CASE("k-means assignment is nearest-centroid and deterministic") {
  const Codebook cb = build_codebook(4, 256, 8);
  const ClusterAssignment a = cluster_codebook(cb, 64, 11);
  const ClusterAssignment b = cluster_codebook(cb, 64, 11);
  CHECK(a.cluster_of == b.cluster_of);
  for (Index v = 0; v < cb.size(); ++v) {
    Index best = 0;
    (a.centroids.rowwise() - cb.vectors.row(v)).rowwise().squaredNorm().minCoeff(&best);
    CHECK(a.cluster_of[v] == best);
  }
  CHECK_THROWS_AS(cluster_codebook(cb, 0, 1), ParameterError);
  CHECK_THROWS_AS(cluster_codebook(cb, 257, 1), ParameterError);
}

TEST_CASE("ClusterMark with K = |V| and identity clusters reduces to KGW") {
  ClusterAssignment id;
  id.clusters = 256;
  id.cluster_of.resize(256);
  std::iota(id.cluster_of.begin(), id.cluster_of.end(), 0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const TokenMap t = sample_tokens(ToyARModel{}, 8, 8, s);
    const DetectionReport c = detect_clustermark(t, id, {42, 1}, 0.25);
    const DetectionReport k = detect_kgw(t, {42, 1}, 0.25);
    CHECK(c.green == k.green);
    CHECK(c.trials == k.trials);
  }
  const ClusterAssignment full = cluster_codebook(build_codebook(4, 256, 8), 256, 1);
  CHECK(std::set<std::int32_t>(full.cluster_of.begin(), full.cluster_of.end()).size() == 256);
}

TEST_CASE("ClusterMark embeds and detects") {
  const EncoderProfile prof(token_lab_spec());
  const ClusterAssignment cl = cluster_codebook(prof.codebook(), 64, 11);
  const TokenMap t = embed_clustermark(ToyARModel{}, cl, {{42, 1}, 0.25, 5.0}, 16, 16, 2);
  CHECK(detect_clustermark(t, cl, {42, 1}, 0.25).p < 1e-20);
}

TEST_CASE("token map serialization round trips") {
  const TokenMap t = sample_tokens(ToyARModel{}, 5, 3, 1);
  CHECK(tokenmap_from_json(tokenmap_to_json(t)).indices == t.indices);
  const auto bytes = tokenmap_to_bytes(t);
  CHECK(bytes.size() == 16 + 4 * 15);
  CHECK(tokenmap_from_bytes(bytes).indices == t.indices);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(tokenmap_from_bytes(bad), FormatError);
}

TEST_CASE("two 1-d blobs with K = 2 match the brute-force optimal split") {
  const Codebook cb = line_codebook({0.0, 0.3, 0.1, 5.0, 5.2, 4.9, 0.2});
  const ClusterAssignment a = cluster_codebook(cb, 2, 4);
  // Brute force over all 2-colourings for the minimal within-cluster sum of squares.
  const int n = int(cb.size());
  double best = 1e300;
  int best_mask = 0;
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    double cost = 0;
    for (int side = 0; side < 2; ++side) {
      double sum = 0, sq = 0;
      int cnt = 0;
      for (int i = 0; i < n; ++i)
        if (((mask >> i) & 1) == side) {
          sum += cb.vectors(i, 0);
          sq += cb.vectors(i, 0) * cb.vectors(i, 0);
          ++cnt;
        }
      cost += sq - sum * sum / cnt;
    }
    if (cost < best) {
      best = cost;
      best_mask = mask;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK((a.cluster_of[i] == a.cluster_of[j]) == (((best_mask >> i) & 1) == ((best_mask >> j) & 1)));
}

TEST_CASE("substitution within a cluster leaves N_g unchanged") {
  const EncoderProfile prof(token_lab_spec());
  const ClusterAssignment cl = cluster_codebook(prof.codebook(), 64, 11);
  const TokenMap t = embed_clustermark(ToyARModel{}, cl, {{42, 1}, 0.25, 5.0}, 16, 16, 8);
  TokenMap swapped = t;
  SplitMix64 rng(1);
  for (Index i = 0; i < swapped.length(); ++i) {
    std::vector<std::int32_t> mates;
    for (std::int32_t v = 0; v < 256; ++v)
      if (cl.cluster_of[v] == cl.cluster_of[t[i]]) mates.push_back(v);
    swapped[i] = mates[uniform_index(rng, mates.size())];
  }
  CHECK(detect_clustermark(swapped, cl, {42, 1}, 0.25).green == detect_clustermark(t, cl, {42, 1}, 0.25).green);
}
