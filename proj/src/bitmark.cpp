#include "wmlab/bitmark.hpp"

#include <algorithm>
#include <cmath>

#include "wmlab/hashing.hpp"

namespace wmlab {

void ScaleSchedule::validate(Index latent_h, Index latent_w) const {
  if (sizes.empty()) throw ParameterError("schedule has no scales");
  if (scales.size() != sizes.size()) throw ParameterError("schedule needs one constant per scale");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i].first < 1 || sizes[i].second < 1) throw ParameterError("scale sizes must be >= 1");
    if (!(scales[i] > 0) || !std::isfinite(scales[i])) throw ParameterError("scale constants must be positive");
    if (i > 0 && (sizes[i].first < sizes[i - 1].first || sizes[i].second < sizes[i - 1].second))
      throw ParameterError("schedule sizes must be nondecreasing");
  }
  if (sizes.back().first != latent_h || sizes.back().second != latent_w)
    throw ShapeError("final scale must equal the latent resolution");
}

Index ScaleSchedule::bit_count(Index dim) const {
  Index n = 0;
  for (const auto& [h, w] : sizes) n += h * w * dim;
  return n;
}

ScaleSchedule dyadic_schedule(Index h, Index w) {
  if (h < 1 || w < 1) throw ParameterError("dyadic_schedule: sizes must be >= 1");
  ScaleSchedule s;
  Index k = 1;
  while (true) {
    const Index sh = std::min(k, h);
    const Index sw = std::min(k, w);
    s.sizes.emplace_back(sh, sw);
    s.scales.push_back(std::ldexp(1.0, -static_cast<int>(s.sizes.size())));
    if (sh == h && sw == w) break;
    k *= 2;
  }
  return s;
}

void GreenNGramSet::validate() const {
  if (context_len < 0 || context_len > 16) throw ParameterError("green n-gram context must lie in [0,16]");
  const std::uint32_t space = 1u << (context_len + 1);
  if (members.empty() || members.size() >= space) throw ParameterError("green set must be a nonempty proper subset");
  std::vector<std::uint32_t> sorted = members;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ParameterError("green set has duplicate members");
  if (sorted.back() >= space) throw ParameterError("green member outside the n-gram space");
}

bool GreenNGramSet::contains(std::uint32_t code) const {
  return std::find(members.begin(), members.end(), code) != members.end();
}

double GreenNGramSet::null_gamma() const { return double(members.size()) / double(1u << (context_len + 1)); }

BitSeq unfold_bits(const Latent& quantized) {
  BitSeq bits;
  bits.reserve(static_cast<std::size_t>(quantized.dim() * quantized.height() * quantized.width()));
  for (Index c = 0; c < quantized.dim(); ++c)
    for (Index y = 0; y < quantized.height(); ++y)
      for (Index x = 0; x < quantized.width(); ++x) bits.push_back(quantized(c, y, x) > 0 ? 1 : 0);
  return bits;
}

Latent fold_bits(std::span<const std::uint8_t> bits, Index dim, Index h, Index w, double level) {
  if (static_cast<Index>(bits.size()) != dim * h * w) throw ShapeError("fold_bits: bit count mismatch");
  Latent out(dim, h, w);
  std::size_t k = 0;
  for (Index c = 0; c < dim; ++c)
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) out(c, y, x) = bits[k++] ? level : -level;
  return out;
}

ResidualPyramid residual_decompose(const Latent& latent, const ScaleSchedule& schedule) {
  const Index h = latent.height();
  const Index w = latent.width();
  schedule.validate(h, w);
  ResidualPyramid pyr;
  pyr.scales.reserve(schedule.count());
  Latent residual = latent;
  for (std::size_t i = 0; i < schedule.count(); ++i) {
    const auto [hi, wi] = schedule.sizes[i];
    ScaleResidual sr;
    sr.unquantized = resize_latent(residual, hi, wi, schedule.resample);
    sr.quantized = sr.unquantized;
    const double s = schedule.scales[i];
    for (auto& ch : sr.quantized.channels) ch = ch.unaryExpr([s](double v) { return v >= 0 ? s : -s; });
    sr.bits = unfold_bits(sr.quantized);
    residual = residual - resize_latent(sr.quantized, h, w, schedule.resample);
    pyr.scales.push_back(std::move(sr));
  }
  pyr.final_residual = std::move(residual);
  return pyr;
}

Latent ResidualPyramid::reconstruction(const ScaleSchedule& schedule, Index h, Index w) const {
  Latent out(scales.empty() ? 0 : scales[0].quantized.dim(), h, w);
  for (std::size_t i = 0; i < scales.size(); ++i)
    out = out + resize_latent(scales[i].quantized, h, w, schedule.resample);
  return out;
}

std::vector<BitSeq> ResidualPyramid::bits() const {
  std::vector<BitSeq> out;
  out.reserve(scales.size());
  for (const auto& s : scales) out.push_back(s.bits);
  return out;
}

Latent assemble_latent(const std::vector<BitSeq>& bits, const ScaleSchedule& schedule, Index dim) {
  if (bits.size() != schedule.count()) throw ShapeError("assemble_latent: one bit sequence per scale");
  const auto [h, w] = schedule.sizes.back();
  Latent out(dim, h, w);
  for (std::size_t i = 0; i < schedule.count(); ++i) {
    const auto [hi, wi] = schedule.sizes[i];
    out = out + resize_latent(fold_bits(bits[i], dim, hi, wi, schedule.scales[i]), h, w, schedule.resample);
  }
  return out;
}

BitmarkSample sample_bitmark(const ToyBitModel& model, const GreenNGramSet& green, double delta,
                             const ScaleSchedule& schedule, Index dim, std::uint64_t rng_seed) {
  green.validate();
  if (delta < 0) throw ParameterError("delta must be >= 0");
  if (dim < 1) throw ParameterError("dim must be >= 1");
  const auto l = static_cast<std::size_t>(green.context_len);
  const std::uint32_t ctx_mask = (1u << green.context_len) - 1u;
  // Logit for value 1 given the context code; an infinite delta forces green.
  std::vector<double> p_one(std::size_t{1} << green.context_len);
  for (std::uint32_t ctx = 0; ctx < p_one.size(); ++ctx) {
    const bool g1 = green.contains((ctx << 1) | 1u);
    const bool g0 = green.contains(ctx << 1);
    if (std::isinf(delta) && g1 != g0) {
      p_one[ctx] = g1 ? 1.0 : 0.0;
      continue;
    }
    const double logit = model.logit_one + (g1 ? delta : 0.0) - (g0 ? delta : 0.0);
    p_one[ctx] = 1.0 / (1.0 + std::exp(-logit));
  }
  const double p_free = 1.0 / (1.0 + std::exp(-model.logit_one));

  SplitMix64 rng(rng_seed);
  BitmarkSample out;
  out.bits.reserve(schedule.count());
  for (const auto& [hi, wi] : schedule.sizes) {
    const auto n = static_cast<std::size_t>(hi * wi * dim);
    BitSeq bits(n);
    std::uint32_t ctx = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double p = k < l ? p_free : p_one[ctx & ctx_mask];
      bits[k] = uniform01(rng) < p ? 1 : 0;
      ctx = (ctx << 1) | bits[k];
    }
    out.bits.push_back(std::move(bits));
  }
  out.latent = assemble_latent(out.bits, schedule, dim);
  return out;
}

GreenCount count_green(std::span<const std::uint8_t> bits, const GreenNGramSet& green) {
  const auto l = static_cast<std::size_t>(green.context_len);
  GreenCount gc;
  if (bits.size() <= l) return gc;
  const std::uint32_t mask = (1u << (green.context_len + 1)) - 1u;
  std::uint32_t code = 0;
  for (std::size_t k = 0; k < bits.size(); ++k) {
    code = ((code << 1) | bits[k]) & mask;
    if (k < l) continue;
    ++gc.trials;
    gc.green += green.contains(code) ? 1 : 0;
  }
  return gc;
}

BitmarkDetection detect_bitmark_bits(const std::vector<BitSeq>& bits, const ScaleSchedule& schedule,
                                     const GreenNGramSet& green, std::span<const double> fpr_levels) {
  green.validate();
  if (bits.size() != schedule.count()) throw ShapeError("detect_bitmark: one bit sequence per scale");
  BitmarkDetection det;
  std::int64_t total_green = 0;
  std::int64_t total_trials = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const GreenCount gc = count_green(bits[i], green);
    det.per_scale.push_back({schedule.sizes[i].first, schedule.sizes[i].second, gc.green, gc.trials});
    total_green += gc.green;
    total_trials += gc.trials;
  }
  det.report = make_detection_report(total_trials, total_green, green.null_gamma(), fpr_levels);
  det.bits = bits;
  return det;
}

BitmarkDetection detect_bitmark_latent(const Latent& latent, const ScaleSchedule& schedule,
                                       const GreenNGramSet& green, std::span<const double> fpr_levels) {
  return detect_bitmark_bits(residual_decompose(latent, schedule).bits(), schedule, green, fpr_levels);
}

BitmarkDetection detect_bitmark(const Image& image, const EncoderProfile& profile, const ScaleSchedule& schedule,
                                const GreenNGramSet& green, std::span<const double> fpr_levels) {
  return detect_bitmark_latent(encode(image, profile), schedule, green, fpr_levels);
}

nlohmann::json schedule_to_json(const ScaleSchedule& schedule) {
  nlohmann::json doc;
  doc["sizes"] = nlohmann::json::array();
  for (const auto& [h, w] : schedule.sizes) doc["sizes"].push_back({h, w});
  doc["scales"] = schedule.scales;
  doc["resample"] = schedule.resample == Resample::Block ? "block" : "bilinear";
  return doc;
}

ScaleSchedule schedule_from_json(const nlohmann::json& doc) {
  ScaleSchedule s;
  for (const auto& pair : doc.at("sizes")) s.sizes.emplace_back(pair.at(0).get<Index>(), pair.at(1).get<Index>());
  if (doc.contains("scales")) {
    s.scales = doc.at("scales").get<std::vector<double>>();
  } else {
    for (std::size_t i = 0; i < s.sizes.size(); ++i) s.scales.push_back(std::ldexp(1.0, -static_cast<int>(i + 1)));
  }
  const std::string mode = doc.value("resample", "block");
  if (mode == "block") {
    s.resample = Resample::Block;
  } else if (mode == "bilinear") {
    s.resample = Resample::Bilinear;
  } else {
    throw ParameterError("unknown resample mode: " + mode);
  }
  return s;
}

nlohmann::json green_to_json(const GreenNGramSet& green) {
  nlohmann::json members = nlohmann::json::array();
  for (std::uint32_t code : green.members) {
    std::string s;
    for (int b = green.context_len; b >= 0; --b) s.push_back(((code >> b) & 1u) ? '1' : '0');
    members.push_back(s);
  }
  return {{"context_len", green.context_len}, {"members", members}};
}

GreenNGramSet green_from_json(const nlohmann::json& doc) {
  GreenNGramSet g;
  g.context_len = doc.value("context_len", 1);
  g.members.clear();
  for (const auto& m : doc.at("members")) {
    const auto s = m.get<std::string>();
    if (static_cast<int>(s.size()) != g.context_len + 1) throw ParameterError("green member has wrong length: " + s);
    std::uint32_t code = 0;
    for (char ch : s) {
      if (ch != '0' && ch != '1') throw ParameterError("green member must be a bit string: " + s);
      code = (code << 1) | (ch == '1' ? 1u : 0u);
    }
    g.members.push_back(code);
  }
  g.validate();
  return g;
}

nlohmann::json per_scale_to_json(const std::vector<ScaleCount>& per_scale) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : per_scale)
    out.push_back({{"h", s.height}, {"w", s.width}, {"green", s.green}, {"trials", s.trials}, {"surplus", s.surplus()}});
  return out;
}

}  // namespace wmlab
