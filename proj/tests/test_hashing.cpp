#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "wmlab/errors.hpp"
#include "wmlab/hashing.hpp"

using namespace wmlab;

namespace {

std::vector<std::vector<std::string>> load_vectors() {
  std::ifstream in(std::string(WMLAB_FIXTURE_DIR) + "/hash_vectors.txt");
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<std::string> f;
    for (std::string w; ss >> w;) f.push_back(w);
    if (!f.empty()) out.push_back(f);
  }
  return out;
}

std::uint64_t u64(const std::string& s) { return std::stoull(s); }

}  // namespace

TEST_CASE("SplitMix64 matches the published reference stream") {
  SplitMix64 rng(1234567);
  CHECK(rng() == 6457827717110365317ULL);
  CHECK(rng() == 3203168211198807973ULL);
}

TEST_CASE("hash recipe matches the Python reference vectors") {
  int checked = 0;
  for (const auto& f : load_vectors()) {
    if (f[0] == "mix") {
      CHECK(mix64(u64(f[1])) == u64(f[2]));
    } else if (f[0] == "stream") {
      SplitMix64 rng(u64(f[1]));
      for (std::size_t k = 2; k < f.size(); ++k) CHECK(rng() == u64(f[k]));
    } else if (f[0] == "ctx") {
      const std::size_t n = std::stoul(f[2]);
      std::vector<std::int64_t> toks;
      for (std::size_t k = 0; k < n; ++k) toks.push_back(std::stoll(f[3 + k]));
      CHECK(context_hash(toks, u64(f[1])) == u64(f[3 + n]));
    } else if (f[0] == "derive") {
      CHECK(derive_seed(u64(f[1]), u64(f[2])) == u64(f[3]));
    } else if (f[0] == "green") {
      const auto g = green_set(u64(f[1]), std::stoi(f[2]), std::stod(f[3]));
      REQUIRE(g.size() == std::stoul(f[4]));
      for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == std::stoi(f[5 + k]));
    }
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("context window pads with the sentinel") {
  const std::vector<std::int32_t> seq{5, 6, 7};
  CHECK(context_window(seq, 0, 2, 99) == std::vector<std::int64_t>{99, 99});
  CHECK(context_window(seq, 1, 2, 99) == std::vector<std::int64_t>{99, 5});
  CHECK(context_window(seq, 2, 2, 99) == std::vector<std::int64_t>{5, 6});
  CHECK(context_window(seq, 2, 1, 99) == std::vector<std::int64_t>{6});
}

TEST_CASE("green set has floor(gamma V) distinct members") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = green_set(seed, 257, 0.25);
    CHECK(g.size() == 64);
    const std::set<std::int32_t> unique(g.begin(), g.end());
    CHECK(unique.size() == g.size());
    CHECK(*unique.begin() >= 0);
    CHECK(*unique.rbegin() < 257);
  }
  CHECK_THROWS_AS(green_set(1, 16, 0.0), ParameterError);
  CHECK_THROWS_AS(green_set(1, 16, 1.0), ParameterError);
}

TEST_CASE("green set membership is unbiased across seeds") {
  std::vector<int> hits(32, 0);
  const int seeds = 4000;
  for (int s = 0; s < seeds; ++s)
    for (auto v : green_set(derive_seed(3, s), 32, 0.25)) ++hits[v];
  for (int h : hits) CHECK(std::abs(double(h) / seeds - 0.25) < 0.03);
}

TEST_CASE("uniform_index stays in range and covers it") {
  SplitMix64 rng(9);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) ++seen[uniform_index(rng, 7)];
  for (int c : seen) CHECK(std::abs(c - 1000) < 150);
  CHECK_THROWS_AS(uniform_index(rng, 0), ParameterError);
}

TEST_CASE("standard normal moments") {
  SplitMix64 rng(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = standard_normal(rng);
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}
