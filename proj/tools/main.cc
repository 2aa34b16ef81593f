// Copyright (c) 2026 The ProsodyKit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "commands.h"
#include "prosodykit/error.h"
#include "run_config.h"

namespace {

using prosodykit::ErrorCode;
using namespace prosodykit::cli;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Subcommand {
  CLI::App* app = nullptr;
  std::vector<std::string> configs;
  std::string out;
  bool force = false;
  std::map<const CLI::Option*, std::string> aliases;  // option -> config key
  const CLI::Option* set = nullptr;
};

Subcommand AddSubcommand(CLI::App& root, const std::string& name, const std::string& help,
                         const std::vector<std::pair<std::string, std::string>>& aliases) {
  Subcommand s;
  s.app = root.add_subcommand(name, help);
  s.app->add_option("--config", s.configs, "key = value configuration file (repeatable)");
  s.app->add_option("--out", s.out, "output directory (default runs/<command>-<timestamp>)");
  s.app->add_flag("--force", s.force, "write into an existing output directory");
  s.set = s.app->add_option("--set")
              ->description("override a configuration key")
              ->type_name("KEY=VALUE")
              ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
              ->expected(1);
  for (const auto& [flag, key] : aliases) {
    const CLI::Option* opt = s.app->add_option(flag)
                                 ->description("sets " + key)
                                 ->type_name("VALUE")
                                 ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
                                 ->expected(1);
    s.aliases[opt] = key;
  }
  return s;
}

// Files first, then flags in command-line order; the last flag wins.
void ApplyOverrides(const Subcommand& s, RunConfig& cfg) {
  for (const auto& path : s.configs) cfg.LoadFile(path);
  std::map<const CLI::Option*, size_t> seen;
  for (const CLI::Option* opt : s.app->parse_order()) {
    const size_t i = seen[opt]++;
    if (opt == s.set) {
      const std::string& kv = opt->results().at(i);
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
      cfg.Set(kv.substr(0, eq), kv.substr(eq + 1));
    } else if (const auto it = s.aliases.find(opt); it != s.aliases.end()) {
      cfg.Set(it->second, opt->results().at(i));
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prosody transfer toolkit"};
  app.name("prosodykit");
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> model_flags = {
      {"--variant", "model.variant"},   {"--lambda", "lambda"},
      {"--lr", "train.lr"},             {"--decay-steps", "train.decay_steps"},
      {"--steps", "train.max_steps"},   {"--batch-size", "train.batch_size"},
      {"--seed", "seed"},               {"--checkpoint-interval", "train.checkpoint_interval"},
  };
  auto with = [](std::vector<std::pair<std::string, std::string>> a,
                 const std::vector<std::pair<std::string, std::string>>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  Subcommand prepare = AddSubcommand(
      app, "prepare", "compute and cache mel and F0 features",
      {{"--manifest", "data.manifest"}, {"--synthetic", "data.synthetic"}});
  bool fail_fast = false;
  prepare.app->add_flag("--fail-fast", fail_fast, "stop at the first unreadable file");

  Subcommand train = AddSubcommand(
      app, "train", "train a model",
      with({{"--manifest", "data.manifest"}, {"--features", "data.features"}}, model_flags));

  Subcommand transfer = AddSubcommand(app, "transfer", "transfer prosody from a reference",
                                      {{"--checkpoint", "transfer.checkpoint"},
                                       {"--ref", "transfer.ref"},
                                       {"--text", "transfer.text"},
                                       {"--speaker", "transfer.speaker"},
                                       {"--pitch-scale", "transfer.pitch_scale"},
                                       {"--fit-speaker", "transfer.fit_speaker"},
                                       {"--contour", "transfer.contour"},
                                       {"--griffin-lim-iterations", "synth.griffin_lim_iterations"}});

  Subcommand eval = AddSubcommand(app, "eval", "objective metrics between two audio directories",
                                  {{"--ref-dir", "eval.ref_dir"}, {"--est-dir", "eval.est_dir"}});

  Subcommand sweep = AddSubcommand(
      app, "sweep", "train and evaluate over adversarial weights",
      with({{"--manifest", "data.manifest"},
            {"--features", "data.features"},
            {"--eval-manifest", "data.eval_manifest"},
            {"--lambdas", "sweep.lambdas"},
            {"--seeds", "sweep.seeds"},
            {"--griffin-lim-iterations", "synth.griffin_lim_iterations"}},
           model_flags));

  Subcommand plot = AddSubcommand(app, "plot", "overlay pitch contours", {});
  std::vector<std::string> series;
  plot.app->add_option("--series", series, "NAME=PATH to a contour CSV or a WAV file")
      ->type_name("NAME=PATH");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  try {
    for (Subcommand* s : {&prepare, &train, &transfer, &eval, &sweep, &plot}) {
      if (!app.got_subcommand(s->app)) continue;
      RunConfig cfg;
      ApplyOverrides(*s, cfg);
      RunContext ctx{s->app->get_name(), command_line, s->out, s->force};
      if (s == &prepare) return RunPrepare(ctx, cfg, fail_fast);
      if (s == &train) return RunTrain(ctx, cfg);
      if (s == &transfer) return RunTransfer(ctx, cfg);
      if (s == &eval) return RunEval(ctx, cfg);
      if (s == &sweep) return RunSweep(ctx, cfg);
      return RunPlot(ctx, cfg, series);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const prosodykit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kNumericalFailure:
        return kExitNumerical;
      case ErrorCode::kInvalidArgument:
      case ErrorCode::kPrecondition:
        return kExitUsage;
      default:
        return kExitData;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
