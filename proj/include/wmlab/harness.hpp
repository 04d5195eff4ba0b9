#pragma once

// Experiment orchestration: config, corpus generation, attack matrix,
// detection and reports.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmlab/attacks.hpp"
#include "wmlab/bitmark.hpp"
#include "wmlab/token_schemes.hpp"
#include "wmlab/toyvae.hpp"

namespace wmlab {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

enum class SchemeId { Kgw, IndexMark, ClusterMark, BitMark };

const char* to_string(SchemeId id);
SchemeId scheme_id_from_string(const std::string& s);

struct SchemeConfig {
  SchemeId id = SchemeId::Kgw;
  double gamma = 0.25;
  double delta = 2.0;
  std::uint64_t key = 42;
  int context_len = 1;
  std::int32_t clusters = 64;        // ClusterMark
  std::uint64_t cluster_seed = 11;   // ClusterMark k-means seed
  ToyARModel model;                  // token schemes; vocab_size follows the profile
  double bit_logit = 0.0;            // BitMark toy bit model
  GreenNGramSet green;               // BitMark
  std::optional<ScaleSchedule> schedule;  // BitMark; default dyadic over the latent grid
};

struct AttackConfig {
  std::string kind = "none";  // none | vq-regen | latentopt-removal | latentopt-forgery | bitopt | freq-inject | perturb
  BoxLevel box = BoxLevel::White;
  std::string label;          // defaults to kind (+ box)
  nlohmann::json params = nlohmann::json::object();

  std::string name() const;
  /// Forgery attacks act on covers, the rest on watermarked images.
  bool on_cover() const;
};

struct ExperimentConfig {
  SchemeConfig scheme;
  ProfileSpec profile;
  Index latent_side = 16;  // tokens / latent cells per side
  std::uint64_t seed = 1;
  Index count = 10;
  std::vector<AttackConfig> attacks{AttackConfig{}};
  std::vector<double> fpr_levels{0.01};
  std::string cover_dir;  // empty = synthetic covers
  double cover_texture = 0.02;
  std::string out_dir = "out";
  std::string image_format = "ppm";
  int jobs = 1;
  /// Skip per-image work whose outputs already exist in out_dir.
  bool resume = false;

  Index image_side() const { return latent_side * profile.patch; }
  /// Throws ParameterError when counts, levels, schedule or boxes are inconsistent.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Default lab configurations per scheme.
ExperimentConfig default_config(SchemeId id);

// ---- Lab --------------------------------------------------------------------

struct GeneratedItem {
  Index index = 0;
  std::uint64_t seed = 0;
  Image watermarked;
  Image control;
  TokenMap tokens;            // token schemes
  std::vector<BitSeq> bits;   // BitMark
};

/// Verifier-side state built once per experiment.
class Lab {
 public:
  explicit Lab(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const EncoderProfile& profile() const { return profile_; }
  const ScaleSchedule& schedule() const { return schedule_; }

  std::uint64_t item_seed(Index index) const;
  GeneratedItem generate(Index index) const;
  Image cover(Index index) const;

  DetectionReport detect(const Image& image) const;
  /// Detection from ground truth (sidecar tokens or bits).
  DetectionReport detect_truth(const GeneratedItem& item) const;
  BitmarkDetection detect_bits(const Image& image) const;

  struct AttackOutcome {
    Image input;   // watermarked image or cover
    Image output;
    std::vector<TracePoint> trace;
    std::int64_t budget_violations = 0;
  };
  AttackOutcome attack(const GeneratedItem& item, std::size_t attack_index) const;

 private:
  ExperimentConfig config_;
  EncoderProfile profile_;
  ScaleSchedule schedule_;
  TokenPairing pairing_;
  ClusterAssignment clusters_;
};

// ---- Reports ----------------------------------------------------------------

struct ReportRow {
  Index image = 0;
  std::string scheme;
  std::string attack;
  std::string box;
  std::string role;  // positive | negative | forged
  std::int64_t green = 0;
  std::int64_t trials = 0;
  double z = 0.0;
  double p = 1.0;
  double log10_p = 0.0;
  double psnr = 0.0;
  double ssim = 1.0;
  std::int64_t budget_violations = 0;
};

struct Aggregate {
  std::string attack;
  std::string role;
  Index count = 0;
  std::map<double, double> tpr;  // level -> rate of p < level
  double median_p = 1.0;
  double psnr_mean = 0.0;
  double psnr_sd = 0.0;
  double ssim_mean = 0.0;
  double ssim_sd = 0.0;
};

struct RunReport {
  int schema_version = kReportSchemaVersion;
  std::string scheme;
  std::vector<double> fpr_levels;
  std::vector<ReportRow> rows;
  std::vector<Aggregate> aggregates;
};

/// Groups rows by (attack, role) in first-appearance order.
std::vector<Aggregate> aggregate_rows(const std::vector<ReportRow>& rows, const std::vector<double>& fpr_levels);
RunReport make_report(const std::string& scheme, std::vector<ReportRow> rows, const std::vector<double>& fpr_levels);
/// True when the aggregates equal a recomputation from the CSV form of the rows.
bool verify_report(const RunReport& report);

std::string rows_to_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> rows_from_csv(const std::string& csv);
nlohmann::json report_to_json(const RunReport& report);
/// Throws FormatError on an unknown schema version.
RunReport report_from_json(const nlohmann::json& doc);

/// Runs `fn(i)` for i in [0, n) on `jobs` threads.
void parallel_for(Index n, int jobs, const std::function<void(Index)>& fn);

// ---- Commands ---------------------------------------------------------------

struct CommandResult {
  int exit_code = 0;
  std::vector<std::string> messages;
};

/// Writes watermarked_NNNNN / control_NNNNN images, per-item sidecars and
/// manifest.json to config.out_dir.
CommandResult cmd_generate(const ExperimentConfig& config);
/// Attacks the generated corpus in config.out_dir; writes attacked images
/// and trace CSVs under <out_dir>/attacks/<label>/.
CommandResult cmd_attack(const ExperimentConfig& config);
/// Detects every image in `dir` and writes report.json / report.csv there.
CommandResult cmd_detect(const ExperimentConfig& config, const std::filesystem::path& dir);
/// Full scheme x attack matrix; writes eval.json and eval.csv. Per-image
/// rows are cached under <out_dir>/rows/ so an interrupted run resumes.
RunReport run_eval(const ExperimentConfig& config);
CommandResult cmd_eval(const ExperimentConfig& config);
/// Averages every image in `dir`, writes mean image and its detection.
CommandResult cmd_avg(const ExperimentConfig& config, const std::filesystem::path& dir);
/// Frequency injection on covers (setting from the first freq-inject attack
/// or setting A) with detection of each forged image.
CommandResult cmd_inject(const ExperimentConfig& config);

}  // namespace wmlab
