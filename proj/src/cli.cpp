#include "roa/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "roa/model_io.hpp"
#include "roa/report.hpp"
#include "roa/train.hpp"
#include "roa/verify.hpp"
#include "roa/version.hpp"

namespace roa {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  unsigned workers = 1;
};

struct TrainOpts {
  std::string system;
  TrainConfig cfg;
  std::string out, log;
};

struct VerifyOpts {
  std::string model;
  double delta_scale = 1e-6;
  double eps = 1e-4;
  std::size_t max_boxes = 1000000;
  std::string report, summary, cex;
};

struct ReportOpts {
  std::string model, report, quadratic, optimized, name;
  std::size_t resolution = 200;
};

std::string in_dir(const Globals& g, const std::string& name) {
  if (name.empty()) return name;
  const fs::path p(name);
  if (p.is_absolute()) return name;
  return (fs::path(g.out_dir) / p).string();
}

std::string stem_of(const std::string& path) {
  fs::path p(path);
  return (p.parent_path() / p.stem()).string();
}

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const std::string& path, const std::string& command, const std::string& system,
                    const nlohmann::ordered_json& config, const nlohmann::ordered_json& files) {
  nlohmann::ordered_json m;
  m["tool"] = "roacert";
  m["version"] = kVersion;
  m["command"] = command;
  m["system"] = system;
  m["config"] = config;
  m["files"] = files;
  m["finished_utc"] = now_utc();
  write_text_file(path, m.dump(2) + "\n");
}

void add_train_options(CLI::App* cmd, TrainOpts& o) {
  cmd->add_option("--system", o.system, "Builtin system name or path to a system config")->required();
  cmd->add_option("--hidden", o.cfg.hidden, "Hidden neurons")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--lr", o.cfg.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--epochs", o.cfg.epochs, "Full-batch epochs")->capture_default_str();
  cmd->add_option("--grid", o.cfg.grid_per_dim, "Grid points per dimension")->check(CLI::Range(2, 100000))
      ->capture_default_str();
  cmd->add_option("--eps-vdot", o.cfg.eps_vdot, "Required decrease margin on grid points")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--sigmoid-k", o.cfg.sigmoid_k, "Sigmoid sharpness before level scaling")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--beta", o.cfg.beta, "alpha = beta * alpha_bar, beta > 1")->capture_default_str();
  cmd->add_option("--delta", o.cfg.delta, "Origin analysis radius (0 = one grid step)")->capture_default_str();
  cmd->add_option("--out", o.out, "Model file (default <system>_seed<seed>.model)");
  cmd->add_option("--log", o.log, "Training log CSV (default <model stem>.log.csv)");
}

void add_verify_options(CLI::App* cmd, VerifyOpts& o) {
  cmd->add_option("--delta-scale", o.delta_scale, "delta_sat as a multiple of the grid step")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--eps", o.eps, "Origin exclusion radius (clamped to the proven-decay radius)")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--max-boxes", o.max_boxes, "Branch-and-bound budget per hypercube")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--report", o.report, "Report CSV (default <model stem>.report.csv)");
  cmd->add_option("--summary", o.summary, "Summary JSON (default <model stem>.summary.json)");
  cmd->add_option("--counterexamples", o.cex, "Counterexample CSV (default <model stem>.cex.csv)");
}

int run_verify(const Globals& g, const LoadedModel& m, const std::string& model_path, const VerifyOpts& o,
               std::ostream& out, std::ostream& err) {
  const LyapCandidate& c = m.candidate;
  VerifyConfig vc = default_verify_config(m.grid, o.delta_scale, o.eps);
  vc.max_boxes = o.max_boxes;
  vc.workers = g.workers;
  if (o.eps > c.origin.eps)
    err << "warning: --eps " << o.eps << " exceeds the proven-decay radius " << c.origin.eps << "; using "
        << c.origin.eps << "\n";

  const GridValues gv = evaluate_grid(c, m.grid, g.workers);
  const std::vector<bool> mask = roa_membership_hard(gv.V, gv.Vdot, m.meta.train.eps_vdot);
  const VerifyReport r = certify(c, mask, m.grid, vc);

  const std::string stem = in_dir(g, fs::path(model_path).stem().string());
  const std::string report = o.report.empty() ? stem + ".report.csv" : in_dir(g, o.report);
  const std::string summary = o.summary.empty() ? stem + ".summary.json" : in_dir(g, o.summary);
  const std::string cex = o.cex.empty() ? stem + ".cex.csv" : in_dir(g, o.cex);

  nlohmann::ordered_json extra;
  extra["system"] = c.sys->name;
  extra["kind"] = m.meta.kind;
  extra["model"] = model_path;
  extra["delta_scale"] = o.delta_scale;
  extra["eps_vdot"] = m.meta.train.eps_vdot;
  extra["max_boxes"] = o.max_boxes;
  write_text_file(report, report_csv(r));
  write_text_file(cex, counterexamples_csv(r));
  write_text_file(summary, summary_json(r, extra.dump()));

  nlohmann::ordered_json cfg{{"delta_scale", o.delta_scale}, {"eps", o.eps}, {"eps_used", r.eps_used},
                             {"delta_sat", r.delta_sat},     {"max_boxes", o.max_boxes}, {"workers", g.workers}};
  write_manifest(stem + ".verify.manifest.json", "verify", c.sys->name, cfg,
                 {{"model", model_path}, {"report", report}, {"summary", summary}, {"counterexamples", cex}});

  out << c.sys->name << " [" << m.meta.kind << "]: members " << r.member_count() << ", verified "
      << r.count(CubeStatus::Verified) << ", counterexamples " << r.count(CubeStatus::Counterexample)
      << ", delta-counterexamples " << r.count(CubeStatus::DeltaCounterexample) << ", budget exhausted "
      << r.count(CubeStatus::BudgetExhausted) << ", certified " << r.certified_count() << " (c_max "
      << r.c_max << ", eps " << r.eps_used << ", delta " << r.delta_sat << ")\n";
  out << "wrote " << report << "\n";
  return 0;
}

nlohmann::ordered_json train_config_json(const TrainConfig& c) {
  return {{"hidden", c.hidden},       {"lr", c.lr},         {"epochs", c.epochs},
          {"grid", c.grid_per_dim},   {"eps_vdot", c.eps_vdot}, {"sigmoid_k", c.sigmoid_k},
          {"beta", c.beta},           {"delta", c.delta},   {"seed", c.seed},
          {"workers", c.workers}};
}

int cmd_train(const Globals& g, TrainOpts o, std::ostream& out, std::ostream& err) {
  o.cfg.seed = g.seed;
  o.cfg.workers = g.workers;
  o.cfg.validate();
  const SystemPtr sys = resolve_system(o.system);
  const std::string model = in_dir(g, o.out.empty() ? sys->name + "_seed" + std::to_string(g.seed) + ".model" : o.out);
  const std::string log = o.log.empty() ? stem_of(model) + ".log.csv" : in_dir(g, o.log);

  const TrainResult res = train(sys, o.cfg);
  ModelMeta meta;
  meta.kind = "neural";
  meta.train = o.cfg;
  meta.best_epoch = res.best_epoch;
  meta.best_cardinality = res.best_cardinality;
  write_text_file(model, model_to_json(res.candidate, meta));
  write_text_file(log, train_log_csv(res.log));
  write_manifest(stem_of(model) + ".train.manifest.json", "train", sys->name, train_config_json(o.cfg),
                 {{"model", model}, {"log", log}});

  out << sys->name << ": best hard cardinality " << res.best_cardinality << " of " << res.grid.size() << " at epoch "
      << res.best_epoch << " (alpha " << res.candidate.alpha << ", eps " << res.candidate.origin.eps << ")\n";
  out << "wrote " << model << "\n";
  if (res.diverged) {
    err << "error: training diverged after " << res.log.size() << " epochs; wrote the last good snapshot\n";
    return 1;
  }
  return 0;
}

int cmd_verify(const Globals& g, const VerifyOpts& o, std::ostream& out, std::ostream& err) {
  const LoadedModel m = model_from_json(read_text_file(o.model));
  return run_verify(g, m, o.model, o, out, err);
}

int cmd_baseline(const Globals& g, TrainOpts o, const std::string& kind, const VerifyOpts& vo, std::ostream& out,
                 std::ostream& err) {
  o.cfg.seed = g.seed;
  o.cfg.workers = g.workers;
  o.cfg.validate();
  const SystemPtr sys = resolve_system(o.system);
  const std::string model = in_dir(g, o.out.empty() ? sys->name + "_" + kind + ".model" : o.out);
  const std::string log = o.log.empty() ? stem_of(model) + ".log.csv" : in_dir(g, o.log);

  const TrainResult res = train_quadratic_baseline(sys, o.cfg, kind == "optimized");
  ModelMeta meta;
  meta.kind = kind;
  meta.train = o.cfg;
  meta.best_epoch = res.best_epoch;
  meta.best_cardinality = res.best_cardinality;
  const std::string text = model_to_json(res.candidate, meta);
  write_text_file(model, text);
  write_text_file(log, train_log_csv(res.log));
  write_manifest(stem_of(model) + ".train.manifest.json", "baseline", sys->name, train_config_json(o.cfg),
                 {{"model", model}, {"log", log}, {"kind", kind}});
  out << sys->name << " " << kind << " baseline: hard cardinality " << res.best_cardinality << "\n";
  out << "wrote " << model << "\n";
  if (res.diverged) {
    err << "error: baseline optimization diverged\n";
    return 1;
  }
  return run_verify(g, model_from_json(text), model, vo, out, err);
}

int cmd_report(const Globals& g, const ReportOpts& o, std::ostream& out) {
  const LoadedModel m = model_from_json(read_text_file(o.model));
  const ReportData nn = parse_report_csv(read_text_file(o.report));
  if (nn.points.size() != m.grid.size()) throw std::runtime_error("report does not match the model's grid");
  std::optional<ReportData> quad, opt;
  if (!o.quadratic.empty()) quad = parse_report_csv(read_text_file(o.quadratic));
  if (!o.optimized.empty()) opt = parse_report_csv(read_text_file(o.optimized));

  ReportInputs in;
  in.nn = &m.candidate;
  in.nn_report = &nn;
  in.quad_report = quad ? &*quad : nullptr;
  in.opt_report = opt ? &*opt : nullptr;
  in.render_res = o.resolution;
  const FigureSet figs = render_figures(in);

  const std::string base = in_dir(g, o.name.empty() ? m.candidate.sys->name : o.name);
  const std::vector<std::pair<std::string, const std::string*>> files = {
      {base + "_V.svg", &figs.V_svg},
      {base + "_Vdot.svg", &figs.Vdot_svg},
      {base + "_roa.svg", &figs.roa_svg},
      {base + "_fields.csv", &figs.fields_csv},
      {base + "_combined.csv", &figs.combined_csv}};
  nlohmann::ordered_json listed;
  for (const auto& [path, text] : files) {
    write_text_file(path, *text);
    listed.push_back(path);
    out << "wrote " << path << "\n";
  }
  write_manifest(base + ".report.manifest.json", "report", m.candidate.sys->name,
                 {{"resolution", o.resolution}, {"model", o.model}, {"report", o.report},
                  {"quadratic", o.quadratic}, {"optimized", o.optimized}},
                 {{"figures", listed}});
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural Lyapunov training and region-of-attraction certification", "roacert"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  auto* systems = app.add_subcommand("systems", "List builtin systems");

  TrainOpts train_o;
  auto* train_cmd = app.add_subcommand("train", "Train a neural Lyapunov candidate");
  add_train_options(train_cmd, train_o);

  VerifyOpts verify_o;
  auto* verify_cmd = app.add_subcommand("verify", "Certify a trained model's region estimate");
  verify_cmd->add_option("--model", verify_o.model, "Model file")->required()->check(CLI::ExistingFile);
  add_verify_options(verify_cmd, verify_o);

  TrainOpts base_o;
  VerifyOpts base_v;
  std::string kind;
  auto* base_cmd = app.add_subcommand("baseline", "Quadratic baselines: train (if optimized), save and verify");
  add_train_options(base_cmd, base_o);
  base_cmd->add_option("--kind", kind, "quadratic or optimized")
      ->required()
      ->check(CLI::IsMember({"quadratic", "optimized"}));
  add_verify_options(base_cmd, base_v);

  ReportOpts report_o;
  auto* report_cmd = app.add_subcommand("report", "Render SVG figures and combined CSV from reports");
  report_cmd->add_option("--model", report_o.model, "Neural model file")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--report", report_o.report, "Neural report CSV")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--quadratic", report_o.quadratic, "Quadratic baseline report CSV")
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--optimized", report_o.optimized, "Optimized quadratic report CSV")
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--name", report_o.name, "Output file prefix (default: system name)");
  report_cmd->add_option("--resolution", report_o.resolution, "Render grid per dimension")
      ->check(CLI::Range(10, 2000))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (!g.out_dir.empty()) fs::create_directories(g.out_dir);
    if (*systems) {
      for (const auto& name : builtin_system_names()) {
        const SystemPtr s = builtin_system(name);
        out << name << "  (" << s->dim() << " states, domain";
        for (const auto& d : s->domain.dims()) out << " [" << d.lo << ", " << d.hi << "]";
        out << ")\n";
      }
      return 0;
    }
    if (*train_cmd) return cmd_train(g, train_o, out, err);
    if (*verify_cmd) return cmd_verify(g, verify_o, out, err);
    if (*base_cmd) return cmd_baseline(g, base_o, kind, base_v, out, err);
    if (*report_cmd) return cmd_report(g, report_o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace roa
