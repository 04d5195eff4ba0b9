#include "wmlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "wmlab/corpus.hpp"
#include "wmlab/hashing.hpp"
#include "wmlab/image_io.hpp"
#include "wmlab/metrics.hpp"

namespace wmlab {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ItemTag : std::uint64_t { kGenerateTag = 1, kControlTag = 2, kCoverTag = 3, kAttackTag = 16 };

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string indexed(const std::string& stem, Index i, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%05lld.", static_cast<long long>(i));
  return stem + buf + ext;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReportRow make_row(Index image, const std::string& scheme, const std::string& attack, const std::string& box,
                   const std::string& role, const DetectionReport& r, double psnr_db, double ssim_v,
                   std::int64_t violations) {
  ReportRow row;
  row.image = image;
  row.scheme = scheme;
  row.attack = attack;
  row.box = box;
  row.role = role;
  row.green = r.green;
  row.trials = r.trials;
  row.z = r.z;
  row.p = r.p;
  row.log10_p = r.log10_p;
  row.psnr = psnr_db;
  row.ssim = ssim_v;
  row.budget_violations = violations;
  return row;
}

json bits_to_json(const std::vector<BitSeq>& bits) {
  json out = json::array();
  for (const BitSeq& b : bits) {
    std::string s(b.size(), '0');
    for (std::size_t k = 0; k < b.size(); ++k) s[k] = b[k] ? '1' : '0';
    out.push_back(s);
  }
  return out;
}

std::vector<fs::path> image_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".png" || ext == ".ppm")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

const char* to_string(SchemeId id) {
  switch (id) {
    case SchemeId::Kgw: return "kgw";
    case SchemeId::IndexMark: return "indexmark";
    case SchemeId::ClusterMark: return "clustermark";
    case SchemeId::BitMark: return "bitmark";
  }
  return "?";
}

SchemeId scheme_id_from_string(const std::string& s) {
  for (SchemeId id : {SchemeId::Kgw, SchemeId::IndexMark, SchemeId::ClusterMark, SchemeId::BitMark})
    if (s == to_string(id)) return id;
  throw ParameterError("unknown scheme: " + s);
}

std::string AttackConfig::name() const {
  if (!label.empty()) return label;
  if (kind == "none") return kind;
  return kind + "/" + to_string(box);
}

bool AttackConfig::on_cover() const { return kind == "latentopt-forgery" || kind == "freq-inject"; }

// ---- Config -------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (count < 1) throw ParameterError("config: count must be >= 1");
  if (latent_side < 1) throw ParameterError("config: latent_side must be >= 1");
  if (jobs < 1) throw ParameterError("config: jobs must be >= 1");
  if (fpr_levels.empty()) throw ParameterError("config: at least one FPR level");
  for (double l : fpr_levels)
    if (!(l > 0 && l < 1)) throw ParameterError("config: FPR levels must lie in (0,1)");
  if (!(scheme.gamma > 0 && scheme.gamma < 1)) throw ParameterError("config: gamma must lie in (0,1)");
  if (scheme.delta < 0) throw ParameterError("config: delta must be >= 0");
  if (image_format != "ppm" && image_format != "png") throw ParameterError("config: image_format is ppm or png");
  if (scheme.id == SchemeId::ClusterMark && (scheme.clusters < 1 || scheme.clusters > profile.codebook_size))
    throw ParameterError("config: need 1 <= clusters <= codebook size");
  if (scheme.id == SchemeId::BitMark) {
    scheme.green.validate();
    if (scheme.schedule) scheme.schedule->validate(latent_side, latent_side);
  }
  static const std::vector<std::string> kinds{"none",        "vq-regen", "latentopt-removal", "latentopt-forgery",
                                              "bitopt",      "freq-inject", "perturb"};
  for (const AttackConfig& a : attacks) {
    if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end())
      throw ParameterError("config: unknown attack kind " + a.kind);
    if (a.kind == "bitopt" && scheme.id != SchemeId::BitMark) throw ParameterError("config: bitopt needs bitmark");
    if (a.kind == "vq-regen" && scheme.id == SchemeId::BitMark)
      throw ParameterError("config: vq-regen needs a token scheme");
    if (a.kind == "perturb") perturb_kind_from_string(a.params.value("type", std::string()));
    if (a.kind == "freq-inject") freq_setting(a.params.value("setting", std::string("A")).at(0));
    if (!box_consistent(profile, attacker_spec(profile, a.box), a.box))
      throw ParameterError("config: attacker profile inconsistent with box setting");
  }
}

json config_to_json(const ExperimentConfig& c) {
  json scheme = {{"id", to_string(c.scheme.id)},
                 {"gamma", c.scheme.gamma},
                 {"delta", c.scheme.delta},
                 {"key", c.scheme.key},
                 {"context_len", c.scheme.context_len},
                 {"clusters", c.scheme.clusters},
                 {"cluster_seed", c.scheme.cluster_seed},
                 {"model",
                  {{"seed", c.scheme.model.seed},
                   {"temperature", c.scheme.model.temperature},
                   {"logit_scale", c.scheme.model.logit_scale},
                   {"context_len", c.scheme.model.context_len}}},
                 {"bit_logit", c.scheme.bit_logit},
                 {"green", green_to_json(c.scheme.green)}};
  if (c.scheme.schedule) scheme["schedule"] = schedule_to_json(*c.scheme.schedule);
  json attacks = json::array();
  for (const AttackConfig& a : c.attacks) {
    json doc = a.params;
    doc["kind"] = a.kind;
    doc["box"] = to_string(a.box);
    if (!a.label.empty()) doc["label"] = a.label;
    attacks.push_back(doc);
  }
  return {{"schema_version", kConfigSchemaVersion},
          {"scheme", scheme},
          {"profile", spec_to_json(c.profile)},
          {"latent_side", c.latent_side},
          {"seed", c.seed},
          {"count", c.count},
          {"attacks", attacks},
          {"fpr_levels", c.fpr_levels},
          {"covers", {{"dir", c.cover_dir}, {"texture", c.cover_texture}}},
          {"output", {{"dir", c.out_dir}, {"image_format", c.image_format}, {"resume", c.resume}}},
          {"jobs", c.jobs}};
}

ExperimentConfig config_from_json(const json& doc) {
  const int version = doc.value("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) throw FormatError("unsupported config schema_version " + std::to_string(version));
  const json& sd = doc.at("scheme");
  ExperimentConfig c = default_config(scheme_id_from_string(sd.at("id").get<std::string>()));
  SchemeConfig& s = c.scheme;
  s.gamma = sd.value("gamma", s.gamma);
  s.delta = sd.value("delta", s.delta);
  s.key = sd.value("key", s.key);
  s.context_len = sd.value("context_len", s.context_len);
  s.clusters = sd.value("clusters", s.clusters);
  s.cluster_seed = sd.value("cluster_seed", s.cluster_seed);
  if (sd.contains("model")) {
    const json& m = sd.at("model");
    s.model.seed = m.value("seed", s.model.seed);
    s.model.temperature = m.value("temperature", s.model.temperature);
    s.model.logit_scale = m.value("logit_scale", s.model.logit_scale);
    s.model.context_len = m.value("context_len", s.model.context_len);
  }
  s.bit_logit = sd.value("bit_logit", s.bit_logit);
  if (sd.contains("green")) s.green = green_from_json(sd.at("green"));
  if (sd.contains("schedule")) s.schedule = schedule_from_json(sd.at("schedule"));
  if (doc.contains("profile")) c.profile = spec_from_json(doc.at("profile"));
  c.latent_side = doc.value("latent_side", c.latent_side);
  c.seed = doc.value("seed", c.seed);
  c.count = doc.value("count", c.count);
  if (doc.contains("attacks")) {
    c.attacks.clear();
    for (const json& a : doc.at("attacks")) {
      AttackConfig ac;
      ac.params = a;
      ac.kind = a.at("kind").get<std::string>();
      ac.box = box_level_from_string(a.value("box", std::string("white")));
      ac.label = a.value("label", std::string());
      ac.params.erase("kind");
      ac.params.erase("box");
      ac.params.erase("label");
      c.attacks.push_back(std::move(ac));
    }
  }
  c.fpr_levels = doc.value("fpr_levels", c.fpr_levels);
  if (doc.contains("covers")) {
    c.cover_dir = doc.at("covers").value("dir", c.cover_dir);
    c.cover_texture = doc.at("covers").value("texture", c.cover_texture);
  }
  if (doc.contains("output")) {
    c.out_dir = doc.at("output").value("dir", c.out_dir);
    c.image_format = doc.at("output").value("image_format", c.image_format);
    c.resume = doc.at("output").value("resume", c.resume);
  }
  c.jobs = doc.value("jobs", c.jobs);
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) { return config_from_json(json::parse(read_text(path))); }

ExperimentConfig default_config(SchemeId id) {
  ExperimentConfig c;
  c.scheme.id = id;
  switch (id) {
    case SchemeId::Kgw:
      c.profile = token_lab_spec();
      break;
    case SchemeId::IndexMark:
      c.profile = token_lab_spec();
      c.profile.codebook_layout = CodebookLayout::Paired;
      break;
    case SchemeId::ClusterMark:
      c.profile = token_lab_spec();
      c.scheme.delta = 5.0;
      c.scheme.clusters = 64;
      break;
    case SchemeId::BitMark:
      c.profile = bit_lab_spec();
      c.latent_side = kBitLabSide;
      break;
  }
  if (id != SchemeId::BitMark) c.latent_side = kTokenLabSide;
  return c;
}

// ---- Lab --------------------------------------------------------------------

Lab::Lab(ExperimentConfig config) : config_(std::move(config)), profile_(config_.profile) {
  config_.validate();
  config_.scheme.model.vocab_size = static_cast<std::int32_t>(profile_.codebook().size());
  if (config_.scheme.id == SchemeId::BitMark)
    schedule_ = config_.scheme.schedule ? *config_.scheme.schedule
                                        : dyadic_schedule(config_.latent_side, config_.latent_side);
  if (config_.scheme.id == SchemeId::IndexMark) pairing_ = build_pairing(profile_.codebook(), config_.scheme.key);
  if (config_.scheme.id == SchemeId::ClusterMark)
    clusters_ = cluster_codebook(profile_.codebook(), config_.scheme.clusters, config_.scheme.cluster_seed);
}

std::uint64_t Lab::item_seed(Index index) const { return derive_seed(config_.seed, static_cast<std::uint64_t>(index)); }

GeneratedItem Lab::generate(Index index) const {
  GeneratedItem item;
  item.index = index;
  item.seed = item_seed(index);
  const SchemeConfig& s = config_.scheme;
  const Index side = config_.latent_side;
  const std::uint64_t gen_seed = derive_seed(item.seed, kGenerateTag);
  const std::uint64_t ctl_seed = derive_seed(item.seed, kControlTag);
  const WatermarkKey key{s.key, s.context_len};
  auto render = [&](const TokenMap& t) { return decode(lookup(t, profile_.codebook()), profile_); };
  switch (s.id) {
    case SchemeId::Kgw:
      item.tokens = embed_kgw(s.model, {key, s.gamma, s.delta}, side, side, gen_seed);
      item.control = render(sample_tokens(s.model, side, side, ctl_seed));
      break;
    case SchemeId::IndexMark:
      item.tokens = embed_indexmark(sample_tokens(s.model, side, side, gen_seed), pairing_);
      item.control = render(sample_tokens(s.model, side, side, ctl_seed));
      break;
    case SchemeId::ClusterMark:
      item.tokens = embed_clustermark(s.model, clusters_, {key, s.gamma, s.delta}, side, side, gen_seed);
      item.control = render(sample_tokens(s.model, side, side, ctl_seed));
      break;
    case SchemeId::BitMark: {
      const BitmarkSample wm = sample_bitmark({s.bit_logit}, s.green, s.delta, schedule_, profile_.dim(), gen_seed);
      const BitmarkSample ctl = sample_bitmark({s.bit_logit}, s.green, 0.0, schedule_, profile_.dim(), ctl_seed);
      item.bits = wm.bits;
      item.watermarked = decode(wm.latent, profile_);
      item.control = decode(ctl.latent, profile_);
      return item;
    }
  }
  item.watermarked = render(item.tokens);
  return item;
}

Image Lab::cover(Index index) const {
  const Index side = config_.image_side();
  if (config_.cover_dir.empty())
    return synthetic_cover(side, side, derive_seed(item_seed(index), kCoverTag), config_.cover_texture);
  const std::vector<fs::path> files = image_files(config_.cover_dir);
  if (files.empty()) throw ParameterError("cover directory has no images: " + config_.cover_dir);
  return ingest_image(read_image(files[static_cast<std::size_t>(index) % files.size()]), side, side);
}

DetectionReport Lab::detect(const Image& image) const {
  const SchemeConfig& s = config_.scheme;
  if (s.id == SchemeId::BitMark) return detect_bits(image).report;
  const TokenMap t = quantize_nearest(encode(image, profile_), profile_.codebook());
  const WatermarkKey key{s.key, s.context_len};
  switch (s.id) {
    case SchemeId::Kgw: return detect_kgw(t, key, s.gamma, config_.fpr_levels);
    case SchemeId::IndexMark: return detect_indexmark(t, pairing_, config_.fpr_levels);
    case SchemeId::ClusterMark: return detect_clustermark(t, clusters_, key, s.gamma, config_.fpr_levels);
    case SchemeId::BitMark: break;
  }
  return {};
}

DetectionReport Lab::detect_truth(const GeneratedItem& item) const {
  const SchemeConfig& s = config_.scheme;
  const WatermarkKey key{s.key, s.context_len};
  switch (s.id) {
    case SchemeId::Kgw: return detect_kgw(item.tokens, key, s.gamma, config_.fpr_levels);
    case SchemeId::IndexMark: return detect_indexmark(item.tokens, pairing_, config_.fpr_levels);
    case SchemeId::ClusterMark: return detect_clustermark(item.tokens, clusters_, key, s.gamma, config_.fpr_levels);
    case SchemeId::BitMark: return detect_bitmark_bits(item.bits, schedule_, s.green, config_.fpr_levels).report;
  }
  return {};
}

BitmarkDetection Lab::detect_bits(const Image& image) const {
  return detect_bitmark(image, profile_, schedule_, config_.scheme.green, config_.fpr_levels);
}

Lab::AttackOutcome Lab::attack(const GeneratedItem& item, std::size_t attack_index) const {
  const AttackConfig& a = config_.attacks.at(attack_index);
  const json& p = a.params;
  const std::uint64_t seed = derive_seed(item.seed, kAttackTag + attack_index);
  const EncoderProfile attacker(attacker_spec(config_.profile, a.box));
  AttackOutcome out;
  out.input = a.on_cover() ? cover(item.index) : item.watermarked;
  const ImageVerifier verifier = [this](const Image& im) { return detect(im); };
  const bool use_verifier = p.value("use_verifier", true);

  if (a.kind == "none") {
    out.output = out.input;
  } else if (a.kind == "vq-regen") {
    out.output = vq_regen(out.input, attacker, p.value("k", Index{2}));
  } else if (a.kind == "latentopt-removal" || a.kind == "latentopt-forgery") {
    OptBudget b;
    b.c = p.value("c", b.c);
    b.alpha = p.value("alpha", b.alpha);
    b.steps = p.value("steps", b.steps);
    b.verify_every = p.value("verify_every", b.verify_every);
    b.seed = seed;
    const OptResult r = a.kind == "latentopt-removal"
                            ? latentopt_removal(out.input, attacker, b, use_verifier ? verifier : ImageVerifier{})
                            : latentopt_forgery(out.input, item.watermarked, attacker, b,
                                                use_verifier ? verifier : ImageVerifier{});
    out.output = r.image;
    out.trace = r.trace;
    out.budget_violations = r.budget_violations;
  } else if (a.kind == "bitopt") {
    BitOptConfig b;
    b.margin = p.value("margin", b.margin);
    b.epsilon = p.value("epsilon", b.epsilon);
    b.alpha = p.value("alpha", b.alpha);
    b.steps = p.value("steps", b.steps);
    b.target_scales = p.value("target_scales", b.target_scales);
    b.stop_p = p.value("stop_p", b.stop_p);
    if (p.value("selection", std::string("all")) == "disjoint") b.selection = TargetSelection::Disjoint;
    const BitOptResult r = bitopt_removal(out.input, attacker, schedule_, config_.scheme.green, b);
    out.output = r.image;
    out.trace = r.trace;
    out.budget_violations = r.budget_violations;
  } else if (a.kind == "freq-inject") {
    FreqInjectConfig f = freq_setting(p.value("setting", std::string("A")).at(0));
    f.spacing = p.value("spacing", f.spacing);
    f.log_alpha = p.value("log_alpha", f.log_alpha);
    f.bin_limit = p.value("bin_limit", f.bin_limit);
    f.overwrite = p.value("overwrite", f.overwrite);
    f.reference_pixels = p.value("reference_pixels", f.reference_pixels);
    f.seed = seed;
    out.output = freq_inject(out.input, f).image;
  } else if (a.kind == "perturb") {
    out.output = perturb(out.input, perturb_kind_from_string(p.at("type").get<std::string>()),
                         p.value("strength", 0.0), seed);
  } else {
    throw ParameterError("unknown attack kind " + a.kind);
  }
  return out;
}

// ---- Reports ----------------------------------------------------------------

std::vector<Aggregate> aggregate_rows(const std::vector<ReportRow>& rows, const std::vector<double>& fpr_levels) {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const ReportRow& r : rows) {
    const std::pair<std::string, std::string> k{r.attack, r.role};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  std::vector<Aggregate> out;
  for (const auto& [attack, role] : keys) {
    Aggregate a;
    a.attack = attack;
    a.role = role;
    std::vector<double> ps;
    std::vector<double> psnrs;
    std::vector<double> ssims;
    for (const ReportRow& r : rows) {
      if (r.attack != attack || r.role != role) continue;
      ps.push_back(r.p);
      psnrs.push_back(r.psnr);
      ssims.push_back(r.ssim);
    }
    a.count = static_cast<Index>(ps.size());
    for (double level : fpr_levels) a.tpr[level] = tpr_at_fpr(ps, level);
    a.median_p = median(ps);
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
    };
    mean_sd(psnrs, a.psnr_mean, a.psnr_sd);
    mean_sd(ssims, a.ssim_mean, a.ssim_sd);
    out.push_back(std::move(a));
  }
  return out;
}

RunReport make_report(const std::string& scheme, std::vector<ReportRow> rows, const std::vector<double>& fpr_levels) {
  RunReport r;
  r.scheme = scheme;
  r.fpr_levels = fpr_levels;
  r.rows = std::move(rows);
  r.aggregates = aggregate_rows(r.rows, fpr_levels);
  return r;
}

bool verify_report(const RunReport& report) {
  const std::vector<Aggregate> again = aggregate_rows(rows_from_csv(rows_to_csv(report.rows)), report.fpr_levels);
  if (again.size() != report.aggregates.size()) return false;
  for (std::size_t i = 0; i < again.size(); ++i) {
    const Aggregate& a = again[i];
    const Aggregate& b = report.aggregates[i];
    if (a.attack != b.attack || a.role != b.role || a.count != b.count || a.tpr != b.tpr) return false;
    if (!same_value(a.median_p, b.median_p) || !same_value(a.psnr_mean, b.psnr_mean) ||
        !same_value(a.psnr_sd, b.psnr_sd) || !same_value(a.ssim_mean, b.ssim_mean) ||
        !same_value(a.ssim_sd, b.ssim_sd))
      return false;
  }
  return true;
}

std::string rows_to_csv(const std::vector<ReportRow>& rows) {
  std::string out = "image,scheme,attack,box,role,green,trials,z,p,log10_p,psnr,ssim,budget_violations\n";
  for (const ReportRow& r : rows) {
    out += std::to_string(r.image) + ',' + r.scheme + ',' + r.attack + ',' + r.box + ',' + r.role + ',' +
           std::to_string(r.green) + ',' + std::to_string(r.trials) + ',' + fmt_double(r.z) + ',' + fmt_double(r.p) +
           ',' + fmt_double(r.log10_p) + ',' + fmt_double(r.psnr) + ',' + fmt_double(r.ssim) + ',' +
           std::to_string(r.budget_violations) + '\n';
  }
  return out;
}

std::vector<ReportRow> rows_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  if (line.rfind("image,scheme,attack", 0) != 0) throw FormatError("report CSV: missing header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 13) throw FormatError("report CSV: expected 13 fields");
    ReportRow r;
    r.image = std::stoll(f[0]);
    r.scheme = f[1];
    r.attack = f[2];
    r.box = f[3];
    r.role = f[4];
    r.green = std::stoll(f[5]);
    r.trials = std::stoll(f[6]);
    r.z = std::strtod(f[7].c_str(), nullptr);
    r.p = std::strtod(f[8].c_str(), nullptr);
    r.log10_p = std::strtod(f[9].c_str(), nullptr);
    r.psnr = std::strtod(f[10].c_str(), nullptr);
    r.ssim = std::strtod(f[11].c_str(), nullptr);
    r.budget_violations = std::stoll(f[12]);
    rows.push_back(std::move(r));
  }
  return rows;
}

json report_to_json(const RunReport& report) {
  json aggs = json::array();
  for (const Aggregate& a : report.aggregates) {
    json tpr = json::object();
    for (const auto& [level, rate] : a.tpr) tpr[fmt_double(level)] = rate;
    aggs.push_back({{"attack", a.attack},
                    {"role", a.role},
                    {"count", a.count},
                    {"tpr_at_fpr", tpr},
                    {"median_p", a.median_p},
                    {"psnr_mean", a.psnr_mean},
                    {"psnr_sd", a.psnr_sd},
                    {"ssim_mean", a.ssim_mean},
                    {"ssim_sd", a.ssim_sd}});
  }
  return {{"schema_version", report.schema_version},
          {"scheme", report.scheme},
          {"fpr_levels", report.fpr_levels},
          {"aggregates", aggs},
          {"rows_csv", rows_to_csv(report.rows)}};
}

RunReport report_from_json(const json& doc) {
  const int version = doc.at("schema_version").get<int>();
  if (version != kReportSchemaVersion) throw FormatError("unsupported report schema_version " + std::to_string(version));
  RunReport r;
  r.scheme = doc.at("scheme").get<std::string>();
  r.fpr_levels = doc.at("fpr_levels").get<std::vector<double>>();
  r.rows = rows_from_csv(doc.at("rows_csv").get<std::string>());
  for (const json& a : doc.at("aggregates")) {
    Aggregate g;
    g.attack = a.at("attack").get<std::string>();
    g.role = a.at("role").get<std::string>();
    g.count = a.at("count").get<Index>();
    for (const auto& [level, rate] : a.at("tpr_at_fpr").items()) g.tpr[std::strtod(level.c_str(), nullptr)] = rate.get<double>();
    auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
    g.median_p = num(a.at("median_p"));
    g.psnr_mean = num(a.at("psnr_mean"));
    g.psnr_sd = num(a.at("psnr_sd"));
    g.ssim_mean = num(a.at("ssim_mean"));
    g.ssim_sd = num(a.at("ssim_sd"));
    r.aggregates.push_back(std::move(g));
  }
  return r;
}

void parallel_for(Index n, int jobs, const std::function<void(Index)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<Index>(jobs, n); ++t) {
    pool.emplace_back([&] {
      for (Index i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---- Commands ---------------------------------------------------------------

CommandResult cmd_generate(const ExperimentConfig& config) {
  const Lab lab(config);
  const fs::path out = config.out_dir;
  fs::create_directories(out);
  const std::string ext = config.image_format;
  std::vector<json> sidecars(static_cast<std::size_t>(config.count));
  std::atomic<Index> skipped{0};
  parallel_for(config.count, config.jobs, [&](Index i) {
    sidecars[static_cast<std::size_t>(i)] = {{"index", i}, {"seed", lab.item_seed(i)}};
    if (config.resume && fs::exists(out / indexed("item", i, "json"))) {
      ++skipped;
      return;
    }
    const GeneratedItem item = lab.generate(i);
    write_image(out / indexed("watermarked", i, ext), item.watermarked);
    write_image(out / indexed("control", i, ext), item.control);
    const DetectionReport truth = lab.detect_truth(item);
    json side = {{"index", i}, {"seed", item.seed}, {"truth_p", truth.p}, {"truth_log10_p", truth.log10_p},
                 {"truth_green", truth.green}, {"truth_trials", truth.trials}};
    if (config.scheme.id == SchemeId::BitMark) {
      side["bits"] = bits_to_json(item.bits);
    } else {
      side["tokens"] = tokenmap_to_json(item.tokens);
    }
    // Sidecar last: its presence marks the item complete.
    write_text(out / indexed("item", i, "json"), side.dump(1) + "\n");
  });
  json manifest = {{"schema_version", kReportSchemaVersion},
                   {"config", config_to_json(config)},
                   {"items", sidecars}};
  write_text(out / "manifest.json", manifest.dump(1) + "\n");
  return {0, {"generated " + std::to_string(config.count - skipped) + " items in " + out.string() +
                  (skipped ? " (" + std::to_string(skipped.load()) + " resumed)" : "")}};
}

CommandResult cmd_attack(const ExperimentConfig& config) {
  const Lab lab(config);
  const fs::path out = config.out_dir;
  const std::string ext = config.image_format;
  CommandResult res;
  for (std::size_t a = 0; a < config.attacks.size(); ++a) {
    std::string label = config.attacks[a].name();
    std::replace(label.begin(), label.end(), '/', '_');
    const fs::path dir = out / "attacks" / label;
    fs::create_directories(dir);
    std::atomic<std::int64_t> violations{0};
    parallel_for(config.count, config.jobs, [&](Index i) {
      if (config.resume && fs::exists(dir / indexed("attacked", i, ext))) return;
      GeneratedItem item = lab.generate(i);
      const fs::path stored = out / indexed("watermarked", i, ext);
      if (fs::exists(stored)) item.watermarked = read_image(stored);
      const Lab::AttackOutcome o = lab.attack(item, a);
      violations += o.budget_violations;
      if (!o.trace.empty()) {
        std::ostringstream csv;
        write_trace_csv(csv, o.trace);
        write_text(dir / indexed("trace", i, "csv"), csv.str());
      }
      write_image(dir / indexed("attacked", i, ext), o.output);
    });
    res.messages.push_back("attack " + config.attacks[a].name() + " -> " + dir.string());
    if (violations > 0) {
      res.exit_code = 3;
      res.messages.push_back("budget violations: " + std::to_string(violations.load()));
    }
  }
  return res;
}

CommandResult cmd_detect(const ExperimentConfig& config, const fs::path& dir) {
  const Lab lab(config);
  const std::vector<fs::path> files = image_files(dir);
  std::vector<ReportRow> rows(files.size());
  parallel_for(static_cast<Index>(files.size()), config.jobs, [&](Index i) {
    const DetectionReport r = lab.detect(read_image(files[static_cast<std::size_t>(i)]));
    rows[static_cast<std::size_t>(i)] = make_row(i, to_string(config.scheme.id), dir.filename().string(), "-",
                                                 files[static_cast<std::size_t>(i)].stem().string().substr(0, 7) ==
                                                         "control"
                                                     ? "negative"
                                                     : "positive",
                                                 r, std::numeric_limits<double>::quiet_NaN(),
                                                 std::numeric_limits<double>::quiet_NaN(), 0);
  });
  CommandResult res;
  if (rows.empty()) return {1, {"no images in " + dir.string()}};
  const RunReport report = make_report(to_string(config.scheme.id), rows, config.fpr_levels);
  write_text(dir / "report.json", report_to_json(report).dump(1) + "\n");
  write_text(dir / "report.csv", rows_to_csv(report.rows));
  for (const Aggregate& a : report.aggregates) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s (%s): n=%lld  TPR@%.3g=%.3f  median p=%.3g", a.attack.c_str(), a.role.c_str(),
                  static_cast<long long>(a.count), config.fpr_levels[0], a.tpr.begin()->second, a.median_p);
    res.messages.push_back(buf);
  }
  if (!verify_report(report)) res.exit_code = 2;
  return res;
}

RunReport run_eval(const ExperimentConfig& config) {
  const Lab lab(config);
  const std::string scheme = to_string(config.scheme.id);
  const std::size_t per_item = config.attacks.size() + 1;
  std::vector<ReportRow> rows(static_cast<std::size_t>(config.count) * per_item);
  const fs::path cache = fs::path(config.out_dir) / "rows";
  if (config.resume) fs::create_directories(cache);
  parallel_for(config.count, config.jobs, [&](Index i) {
    const auto base = static_cast<std::size_t>(i);
    const fs::path cached = cache / indexed("item", i, "csv");
    std::vector<ReportRow> item_rows;
    if (config.resume && fs::exists(cached)) item_rows = rows_from_csv(read_text(cached));
    if (item_rows.size() != per_item) {
      item_rows.clear();
      const GeneratedItem item = lab.generate(i);
      item_rows.push_back(
          make_row(i, scheme, "control", "-", "negative", lab.detect(item.control), kPsnrCap, 1.0, 0));
      for (std::size_t a = 0; a < config.attacks.size(); ++a) {
        const AttackConfig& ac = config.attacks[a];
        const Lab::AttackOutcome o = lab.attack(item, a);
        item_rows.push_back(make_row(i, scheme, ac.name(), ac.kind == "none" ? "-" : to_string(ac.box),
                                     ac.on_cover() ? "forged" : "positive", lab.detect(o.output),
                                     psnr(o.input, o.output), ssim(o.input, o.output), o.budget_violations));
      }
      if (config.resume) write_text(cached, rows_to_csv(item_rows));
    }
    for (std::size_t a = 0; a < per_item; ++a) rows[a * static_cast<std::size_t>(config.count) + base] = item_rows[a];
  });
  return make_report(scheme, std::move(rows), config.fpr_levels);
}

CommandResult cmd_eval(const ExperimentConfig& config) {
  const RunReport report = run_eval(config);
  const fs::path out = config.out_dir;
  fs::create_directories(out);
  write_text(out / "eval.json", report_to_json(report).dump(1) + "\n");
  write_text(out / "eval.csv", rows_to_csv(report.rows));
  CommandResult res;
  for (const Aggregate& a : report.aggregates) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-28s %-8s n=%-5lld TPR@%.3g=%.3f  median p=%-10.3g PSNR=%.2f+-%.2f SSIM=%.4f",
                  a.attack.c_str(), a.role.c_str(), static_cast<long long>(a.count), config.fpr_levels[0],
                  a.tpr.begin()->second, a.median_p, a.psnr_mean, a.psnr_sd, a.ssim_mean);
    res.messages.push_back(buf);
  }
  std::int64_t violations = 0;
  for (const ReportRow& r : report.rows) violations += r.budget_violations;
  if (violations > 0) {
    res.exit_code = 3;
    res.messages.push_back("budget violations: " + std::to_string(violations));
  }
  if (!verify_report(report)) {
    res.exit_code = 2;
    res.messages.push_back("aggregates do not match rows");
  }
  return res;
}

CommandResult cmd_avg(const ExperimentConfig& config, const fs::path& dir) {
  const Lab lab(config);
  std::vector<Image> images;
  for (const fs::path& f : image_files(dir)) images.push_back(read_image(f));
  if (images.empty()) return {1, {"no images in " + dir.string()}};
  const Image mean = average_corpus(images);
  fs::create_directories(config.out_dir);
  const fs::path out = fs::path(config.out_dir) / ("average." + config.image_format);
  write_image(out, mean);
  const DetectionReport r = lab.detect(mean);
  json doc = {{"schema_version", kReportSchemaVersion}, {"images", images.size()}, {"green", r.green},
              {"trials", r.trials}, {"z", r.z}, {"p", r.p}, {"log10_p", r.log10_p}};
  if (config.scheme.id == SchemeId::BitMark) doc["per_scale"] = per_scale_to_json(lab.detect_bits(mean).per_scale);
  write_text(fs::path(config.out_dir) / "average.json", doc.dump(1) + "\n");
  char buf[160];
  std::snprintf(buf, sizeof buf, "mean of %zu images -> %s  z=%.3f p=%.3g (log10 %.2f)", images.size(),
                out.string().c_str(), r.z, r.p, r.log10_p);
  return {0, {buf}};
}

CommandResult cmd_inject(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  auto it = std::find_if(cfg.attacks.begin(), cfg.attacks.end(), [](const AttackConfig& a) { return a.kind == "freq-inject"; });
  if (it == cfg.attacks.end()) {
    AttackConfig a;
    a.kind = "freq-inject";
    a.params = {{"setting", "A"}};
    cfg.attacks = {a};
  } else {
    cfg.attacks = {*it};
  }
  const Lab lab(cfg);
  const fs::path dir = fs::path(cfg.out_dir) / "inject";
  fs::create_directories(dir);
  std::vector<ReportRow> rows(static_cast<std::size_t>(cfg.count));
  parallel_for(cfg.count, cfg.jobs, [&](Index i) {
    GeneratedItem item;
    item.index = i;
    item.seed = lab.item_seed(i);
    const Lab::AttackOutcome o = lab.attack(item, 0);
    write_image(dir / indexed("forged", i, cfg.image_format), o.output);
    rows[static_cast<std::size_t>(i)] = make_row(i, to_string(cfg.scheme.id), cfg.attacks[0].name(), "-", "forged",
                                                 lab.detect(o.output), psnr(o.input, o.output),
                                                 ssim(o.input, o.output), 0);
  });
  const RunReport report = make_report(to_string(cfg.scheme.id), rows, cfg.fpr_levels);
  write_text(dir / "report.json", report_to_json(report).dump(1) + "\n");
  write_text(dir / "report.csv", rows_to_csv(report.rows));
  const Aggregate& a = report.aggregates.front();
  char buf[200];
  std::snprintf(buf, sizeof buf, "injected %lld covers: detected@%.3g=%.3f median p=%.3g PSNR=%.2f",
                static_cast<long long>(a.count), cfg.fpr_levels[0], a.tpr.begin()->second, a.median_p, a.psnr_mean);
  return {0, {buf}};
}

}  // namespace wmlab
