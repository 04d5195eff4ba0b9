// wmlab command-line front end.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/harness.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::string scheme;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
  std::optional<long long> count;
  bool resume = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--scheme", o.scheme, "default config for kgw | indexmark | clustermark | bitmark");
  cmd->add_option("--seed", o.seed, "generator seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--count", o.count, "number of images")->check(CLI::PositiveNumber);
  cmd->add_flag("--resume", o.resume, "skip images whose outputs exist");
}

wmlab::ExperimentConfig resolve(const CommonOptions& o) {
  wmlab::ExperimentConfig c = !o.config.empty() ? wmlab::load_config(o.config)
                              : wmlab::default_config(o.scheme.empty() ? wmlab::SchemeId::Kgw
                                                                       : wmlab::scheme_id_from_string(o.scheme));
  if (!o.config.empty() && !o.scheme.empty() && wmlab::scheme_id_from_string(o.scheme) != c.scheme.id)
    throw wmlab::ParameterError("--scheme disagrees with the config file");
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.count) c.count = *o.count;
  c.resume = c.resume || o.resume;
  c.validate();
  return c;
}

int finish(const wmlab::CommandResult& r) {
  for (const std::string& m : r.messages) std::printf("%s\n", m.c_str());
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wmlab: watermarking lab for autoregressive image generation"};
  app.require_subcommand(1);

  CommonOptions gen_o, atk_o, det_o, eval_o, avg_o, inj_o;
  std::string det_dir, avg_dir;
  std::string setting;
  bool print_config = false;

  auto* gen = app.add_subcommand("generate", "watermarked corpus, controls and sidecars");
  add_common(gen, gen_o);
  gen->add_flag("--print-config", print_config, "print the resolved config and exit");
  auto* atk = app.add_subcommand("attack", "attack a generated corpus");
  add_common(atk, atk_o);
  auto* det = app.add_subcommand("detect", "detect every image in a directory");
  add_common(det, det_o);
  det->add_option("--dir", det_dir, "image directory")->required()->check(CLI::ExistingDirectory);
  auto* ev = app.add_subcommand("eval", "scheme x attack matrix report");
  add_common(ev, eval_o);
  auto* avg = app.add_subcommand("avg", "mean image of a directory and its detection");
  add_common(avg, avg_o);
  avg->add_option("--dir", avg_dir, "image directory")->required()->check(CLI::ExistingDirectory);
  auto* inj = app.add_subcommand("inject", "frequency-injection forgery on covers");
  add_common(inj, inj_o);
  inj->add_option("--setting", setting, "A | B | C")->check(CLI::IsMember({"A", "B", "C"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const wmlab::ExperimentConfig c = resolve(gen_o);
      if (print_config) {
        std::printf("%s\n", wmlab::config_to_json(c).dump(2).c_str());
        return 0;
      }
      return finish(wmlab::cmd_generate(c));
    }
    if (*atk) return finish(wmlab::cmd_attack(resolve(atk_o)));
    if (*det) return finish(wmlab::cmd_detect(resolve(det_o), det_dir));
    if (*ev) return finish(wmlab::cmd_eval(resolve(eval_o)));
    if (*avg) return finish(wmlab::cmd_avg(resolve(avg_o), avg_dir));
    if (*inj) {
      wmlab::ExperimentConfig c = resolve(inj_o);
      if (!setting.empty()) {
        wmlab::AttackConfig a;
        a.kind = "freq-inject";
        a.params = {{"setting", setting}};
        c.attacks = {a};
      }
      return finish(wmlab::cmd_inject(c));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wmlab: %s\n", e.what());
    return 1;
  }
  return 0;
}
