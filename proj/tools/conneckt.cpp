// conneckt: command-line front end over the header-only library.
//
// Every run writes <primary output>.manifest.json holding the resolved value
// of every parameter; `conneckt replay --manifest PATH` re-runs it.

#include <chrono>
#include <concepts>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "conneckt/conneckt.hpp"

#ifndef CONNECKT_VERSION
#define CONNECKT_VERSION "dev"
#endif

namespace {

using namespace conneckt;
using json = nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kBadInput = 4,
  kDimension = 5,
  kParameter = 6,
  kNumerical = 7,
  kEvaluation = 8,
};

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, missing or malformed argument)\n"
    "  3  I/O error (missing or unwritable file)\n"
    "  4  malformed input file (format, parse, index out of range)\n"
    "  5  dimension or shape mismatch\n"
    "  6  invalid parameter value\n"
    "  7  numerical failure (singular covariance, constant neuron)\n"
    "  8  evaluation undefined (no edges or no non-edges)\n"
    "Errors are reported as one JSON line on stderr:\n"
    "  {\"error\":KIND,\"exit_code\":N,\"message\":TEXT}\n"
    "Environment: CONNECKT_THREADS is used when --threads is absent.";

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return kIo;
    case ErrorKind::Format:
    case ErrorKind::Parse:
    case ErrorKind::Range: return kBadInput;
    case ErrorKind::Shape:
    case ErrorKind::Dimension: return kDimension;
    case ErrorKind::Parameter: return kParameter;
    case ErrorKind::Contract:
    case ErrorKind::Conditioning:
    case ErrorKind::Degeneracy: return kNumerical;
    case ErrorKind::Evaluation: return kEvaluation;
  }
  return kInternal;
}

int report_error(const std::string& kind, int code, const std::string& message) {
  json err;
  err["error"] = kind;
  err["exit_code"] = code;
  err["message"] = message;
  std::cerr << err.dump() << '\n';
  return code;
}

// ---------------------------------------------------------------------------
// Parameters. Each registered option remembers how to print its final value,
// which is what lands in the manifest and what replay feeds back.

std::string text_of(const std::string& v) { return v; }
std::string text_of(double v) { return format_real(v); }
template <std::unsigned_integral T>
std::string text_of(T v) {
  return std::to_string(v);
}

struct Param {
  std::string name;  // without leading dashes
  bool flag = false;
  std::function<std::string()> value;
};

class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& description)
      : app_(parent.add_subcommand(name, description)) {}

  template <typename T>
  CLI::Option* option(const std::string& name, T& var, const std::string& description) {
    params_.push_back({name, false, [&var] { return text_of(var); }});
    return app_->add_option("--" + name, var, description)->capture_default_str();
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& description) {
    params_.push_back({name, true, [&var] { return var ? "true" : "false"; }});
    return app_->add_flag("--" + name, var, description);
  }

  bool given(const std::string& name) const { return app_->count("--" + name) > 0; }
  CLI::App* app() const { return app_; }

  /// Final parameter values; empty strings mean "not set" and are omitted.
  json parameters() const {
    json out = json::object();
    for (const auto& p : params_) {
      const auto v = p.value();
      if (!v.empty()) out[p.name] = v;
    }
    return out;
  }

 private:
  CLI::App* app_;
  std::vector<Param> params_;
};

struct Manifest {
  std::string subcommand;
  json parameters;
  json inputs = json::object();
  json outputs = json::object();
  json resolved = json::object();
};

void write_manifest(const Manifest& m, const std::string& path, std::size_t threads,
                    std::chrono::steady_clock::time_point start) {
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  json doc;
  doc["tool"] = "conneckt";
  doc["version"] = CONNECKT_VERSION;
  doc["subcommand"] = m.subcommand;
  doc["parameters"] = m.parameters;
  doc["inputs"] = m.inputs;
  doc["outputs"] = m.outputs;
  doc["resolved"] = m.resolved;
  doc["threads"] = threads;
  doc["duration_seconds"] = elapsed.count();
  detail::write_file(path, doc.dump(2) + "\n");
}

std::string manifest_path(const std::string& primary_output) {
  return primary_output + ".manifest.json";
}

/// A real-valued flag given as text; malformed values are parameter errors.
double flag_real(const std::string& flag, std::string_view text) {
  try {
    return detail::parse_real(text, 1, 1);
  } catch (const Error&) {
    fail(ErrorKind::Parameter, "--" + flag + ": '" + std::string(text) + "' is not a number");
  }
}

/// "A:B:STEP" -> tau grid.
std::vector<double> parse_tau_grid(const std::string& text) {
  std::vector<std::string_view> parts;
  std::string_view rest = text;
  for (auto pos = rest.find(':'); pos != std::string_view::npos; pos = rest.find(':')) {
    parts.push_back(rest.substr(0, pos));
    rest.remove_prefix(pos + 1);
  }
  parts.push_back(rest);
  if (parts.size() != 3) {
    fail(ErrorKind::Parameter, "--tau-grid expects A:B:STEP, got '" + text + "'");
  }
  return tau_range(flag_real("tau-grid", parts[0]), flag_real("tau-grid", parts[1]),
                   flag_real("tau-grid", parts[2]));
}

// ---------------------------------------------------------------------------
// Subcommand option sets.

struct PipelineFlags {
  std::string lowpass = "f1";
  double tau = 0.15;
  std::string c;            // empty: 1, or the ensemble mode's value
  std::string regularizer;  // empty: w, or the ensemble mode's value
  std::string k_file;

  void add(Command& cmd) {
    cmd.option("lowpass", lowpass, "Low-pass filter: none, f1, f2, f3, f4")
        ->check(CLI::IsMember({"none", "f1", "f2", "f3", "f4"}));
    cmd.option("tau", tau, "Hard threshold on the differenced signal (> 0)");
    cmd.option("c", c, "Magnitude-smoothing exponent in (0, 1] [default: 1; full mode: 0.9]");
    cmd.option("regularizer", regularizer,
               "Global regularizer: none, w, wstar [default: w; full mode: wstar]")
        ->check(CLI::IsMember({"none", "w", "wstar"}));
    cmd.option("k-file", k_file,
               "Piecewise-linear k(S) as \"x,y\" lines, used by wstar [default: k = 1]");
  }

  /// Fills empty fields with the given defaults and builds the config.
  PipelineConfig resolve(double default_c, Regularizer default_reg) {
    if (c.empty()) c = format_real(default_c);
    if (regularizer.empty()) regularizer = to_string(default_reg);
    PipelineConfig cfg;
    cfg.lowpass = parse_lowpass(lowpass);
    cfg.tau = tau;
    cfg.c = flag_real("c", c);
    cfg.regularizer = parse_regularizer(regularizer);
    if (!k_file.empty()) cfg.k = load_piecewise_linear(k_file);
    cfg.validate();
    return cfg;
  }
};

struct SimulateFlags {
  std::size_t p = 50;
  double density = SimParams{}.density;
  std::size_t T = SimParams{}.T;
  std::uint64_t seed = 1;
  double p_spont = SimParams{}.p_spont;
  double p_trans = SimParams{}.p_trans;
  double decay = SimParams{}.decay;
  double noise_sd = SimParams{}.noise_sd;
  std::string out_fluor, out_net;
};

struct FilterFlags {
  std::string in, out;
  PipelineFlags pipeline;
};

struct InferFlags {
  std::string in, out;
  std::string preset = "none";
  std::string method;  // empty: parcorr, or avg-parcorr under --preset full
  PipelineFlags pipeline;
  std::string pca = "0.8p";
  double ridge = 0.0;
  bool standardize = false;
  std::string mode;  // empty: simplified, or full under --preset full
  std::string tau_grid;
  bool skip_degenerate = false;
  std::string directivity;  // empty: off, or q under --preset full
  double phi1 = 0.2, phi2 = 0.5, phi3 = 1.0, dir_weight = 0.997;
  bool z_normalize = false;
  std::string dir_lowpass = "f1";
  double dir_tau = 0.15;
  std::string dir_regularizer = "w";
};

struct EvalFlags {
  std::string scores, network, out_report, out_roc, out_pr;
};

// ---------------------------------------------------------------------------
// Flows.

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

NetworkLoad load_network_warn(const std::string& path, std::size_t p) {
  auto load = load_network(path, p);
  if (load.ignored_self_loops > 0) {
    warn("ignored " + std::to_string(load.ignored_self_loops) + " self-loop entr" +
         (load.ignored_self_loops == 1 ? "y" : "ies") + " in " + path);
  }
  return load;
}

void run_simulate(SimulateFlags& f, Manifest& m) {
  SimParams sp;
  sp.p = f.p;
  sp.density = f.density;
  sp.T = f.T;
  sp.seed = f.seed;
  sp.p_spont = f.p_spont;
  sp.p_trans = f.p_trans;
  sp.decay = f.decay;
  sp.noise_sd = f.noise_sd;
  const auto net = generate_network(sp);
  const auto rec = simulate_recording(net, sp);
  save_fluorescence(rec, f.out_fluor);
  save_network(net, f.out_net);
  m.outputs["fluorescence"] = f.out_fluor;
  m.outputs["network"] = f.out_net;
  m.resolved["edges"] = net.edge_count();
}

void run_filter(FilterFlags& f, Manifest& m) {
  const auto cfg = f.pipeline.resolve(1.0, Regularizer::W);
  const auto rec = load_fluorescence(f.in);
  const auto out = apply_pipeline(rec, cfg);
  save_fluorescence(out, f.out);
  m.inputs["fluorescence"] = f.in;
  m.outputs["filtered"] = f.out;
  m.resolved["neurons"] = out.neurons();
  m.resolved["samples"] = out.samples();
  m.resolved["time_offset"] = out.time_offset;
}

void run_infer(InferFlags& f, Command& cmd, std::size_t threads, Manifest& m) {
  if (f.preset == "full") {
    if (f.method.empty()) f.method = "avg-parcorr";
    if (f.mode.empty()) f.mode = "full";
    if (f.directivity.empty()) f.directivity = "q";
  }
  if (f.method.empty()) f.method = "parcorr";
  if (f.mode.empty()) f.mode = "simplified";
  if (f.directivity.empty()) f.directivity = "off";
  if (f.tau_grid.empty()) f.tau_grid = "0.1:0.21:0.001";

  const auto mode = parse_ensemble_mode(f.mode);
  const bool averaged = f.method == "avg-parcorr";
  const auto mode_defaults = default_grid(mode).pipeline_template;
  const auto pipeline = averaged
      ? f.pipeline.resolve(mode_defaults.c, mode_defaults.regularizer)
      : f.pipeline.resolve(1.0, Regularizer::W);
  if (averaged && (cmd.given("lowpass") || cmd.given("tau"))) {
    warn("--lowpass and --tau are ignored by avg-parcorr; the grid supplies them");
  }

  InferenceOptions inference;
  inference.pca = PcaSetting::parse(f.pca);
  inference.ridge = f.ridge;
  inference.standardize = f.standardize;

  DirectivityConfig dir;
  dir.phi1 = f.phi1;
  dir.phi2 = f.phi2;
  dir.phi3 = f.phi3;
  dir.weight = f.dir_weight;
  dir.z_normalize = f.z_normalize;
  dir.signal.lowpass = parse_lowpass(f.dir_lowpass);
  dir.signal.tau = f.dir_tau;
  dir.signal.regularizer = parse_regularizer(f.dir_regularizer);
  if (f.directivity != "off") {
    dir.validate();
    dir.signal.validate();
  }

  const auto rec = load_fluorescence(f.in);
  m.inputs["fluorescence"] = f.in;
  m.resolved["neurons"] = rec.neurons();
  m.resolved["samples"] = rec.samples();

  AssociationMatrix scores;
  if (averaged) {
    auto cfg = default_grid(mode);
    cfg.tau_grid = parse_tau_grid(f.tau_grid);
    cfg.pipeline_template = pipeline;
    cfg.inference = inference;
    cfg.skip_degenerate = f.skip_degenerate;
    auto result = run_ensemble(rec, cfg, threads);
    json skipped = json::array();
    for (const auto& s : result.skipped) {
      warn("skipped grid point (" + std::string(to_string(s.lowpass)) + ", tau=" +
           format_real(s.tau) + "): " + s.reason);
      skipped.push_back({{"lowpass", to_string(s.lowpass)}, {"tau", s.tau}, {"reason", s.reason}});
    }
    m.resolved["grid_points"] = result.evaluated;
    m.resolved["skipped_points"] = skipped;
    scores = std::move(result.scores);
  } else {
    const auto filtered = apply_pipeline(rec, pipeline);
    if (f.method == "pearson") {
      scores = pearson_correlation(filtered);
    } else {
      scores = partial_correlation(filtered, inference);
    }
  }
  if (f.method != "pearson") {
    const auto m_used = inference.pca.components(rec.neurons());
    m.resolved["pca_components"] = m_used ? json(*m_used) : json("off");
  }

  if (f.directivity != "off") {
    auto counts = activation_counts(apply_pipeline(rec, dir.signal), dir, threads);
    if (dir.z_normalize) counts = normalized(std::move(counts));
    scores = f.directivity == "q" ? blended_association(scores, counts, dir.weight)
                                  : thresholded_association(scores, counts, dir.phi3);
  }

  save_association(scores, f.out);
  m.outputs["scores"] = f.out;
}

/// Score matrix plus matching ground truth.
std::pair<AssociationMatrix, NetworkLoad> load_scored(const EvalFlags& f, Manifest& m) {
  auto scores = load_association(f.scores);
  std::optional<NetworkLoad> net;
  try {
    net = load_network_warn(f.network, scores.size());
  } catch (const Error& e) {
    // An index past the score matrix means the two files disagree on p.
    if (e.kind() != ErrorKind::Range) throw;
    fail(ErrorKind::Dimension, std::string(e.what()) + " (scores cover " +
                                   std::to_string(scores.size()) + " neurons)");
  }
  m.inputs["scores"] = f.scores;
  m.inputs["network"] = f.network;
  return {std::move(scores), std::move(*net)};
}

void write_curves(const EvalReport& r, const EvalFlags& f, Manifest& m) {
  if (!f.out_roc.empty()) {
    save_curve(r.roc_points, f.out_roc);
    m.outputs["roc"] = f.out_roc;
  }
  if (!f.out_pr.empty()) {
    save_curve(r.pr_points, f.out_pr);
    m.outputs["pr"] = f.out_pr;
  }
}

void run_eval(EvalFlags& f, Manifest& m) {
  const auto [scores, load] = load_scored(f, m);
  const auto r = evaluate(scores, load.network);
  json report;
  report["auroc"] = r.auroc;
  report["auprc"] = r.auprc;
  report["positives"] = r.positives;
  report["pairs"] = r.pairs;
  report["neurons"] = scores.size();
  report["ignored_self_loops"] = load.ignored_self_loops;
  detail::write_file(f.out_report, report.dump(2) + "\n");
  m.outputs["report"] = f.out_report;
  write_curves(r, f, m);
}

void run_curves(EvalFlags& f, Manifest& m) {
  if (f.out_roc.empty() && f.out_pr.empty()) {
    fail(ErrorKind::Parameter, "curves needs --out-roc, --out-pr or both");
  }
  const auto [scores, load] = load_scored(f, m);
  write_curves(evaluate(scores, load.network), f, m);
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, int depth = 0);

/// Rebuilds the command line recorded in a manifest.
std::vector<std::string> replay_args(const std::string& path) {
  json doc;
  try {
    doc = json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "manifest " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("subcommand") || !doc.contains("parameters") ||
      !doc["subcommand"].is_string() || !doc["parameters"].is_object()) {
    fail(ErrorKind::Format, "manifest " + path + " lacks subcommand or parameters");
  }
  std::vector<std::string> args{doc["subcommand"].get<std::string>()};
  if (args[0] == "replay") fail(ErrorKind::Format, "manifest " + path + " records a replay");
  for (const auto& [name, value] : doc["parameters"].items()) {
    if (!value.is_string()) fail(ErrorKind::Format, "manifest parameter " + name + " is not a string");
    const auto v = value.get<std::string>();
    if (v == "true") {
      args.push_back("--" + name);
    } else if (v != "false") {
      args.push_back("--" + name);
      args.push_back(v);
    }
  }
  return args;
}

int run(const std::vector<std::string>& args, int depth) {
  CLI::App app{"Connectivity inference from fluorescence recordings.", "conneckt"};
  app.set_version_flag("--version", CONNECKT_VERSION);
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<long long> threads_flag;
  app.add_option("--threads", threads_flag,
                 "Worker threads (>= 1); never changes any output byte [env: CONNECKT_THREADS, "
                 "default: 1]");

  SimulateFlags sim;
  Command simulate(app, "simulate", "Generate a random network and a recording driven by it");
  simulate.option("p", sim.p, "Neuron count (>= 2)");
  simulate.option("density", sim.density, "Edge probability per ordered pair, in [0, 1]");
  simulate.option("T", sim.T, "Samples");
  simulate.option("seed", sim.seed, "64-bit seed");
  simulate.option("p-spont", sim.p_spont, "Spontaneous firing probability per step");
  simulate.option("p-trans", sim.p_trans, "Firing probability given an input spike at t-1");
  simulate.option("decay", sim.decay, "Fluorescence decay factor per step, in (0, 1)");
  simulate.option("noise-sd", sim.noise_sd, "Additive Gaussian noise standard deviation");
  simulate.option("out-fluor", sim.out_fluor, "Output fluorescence CSV")->required();
  simulate.option("out-net", sim.out_net, "Output network CSV")->required();

  FilterFlags flt;
  Command filter(app, "filter", "Run the signal-conditioning pipeline on a recording");
  filter.option("in", flt.in, "Input fluorescence CSV")->required();
  filter.option("out", flt.out, "Output filtered CSV (same layout)")->required();
  flt.pipeline.add(filter);

  InferFlags inf;
  Command infer(app, "infer", "Score every ordered neuron pair");
  infer.option("in", inf.in, "Input fluorescence CSV")->required();
  infer.option("out", inf.out, "Output association CSV \"i,j,score\"")->required();
  infer.option("preset", inf.preset,
               "none, or full: avg-parcorr, full mode, directivity q (explicit flags win)")
      ->check(CLI::IsMember({"none", "full"}));
  infer.option("method", inf.method, "parcorr, pearson, avg-parcorr [default: parcorr]")
      ->check(CLI::IsMember({"parcorr", "pearson", "avg-parcorr"}));
  inf.pipeline.add(infer);
  infer.option("pca", inf.pca, "Precision estimate: component count M, fraction \"0.8p\", or off");
  infer.option("ridge", inf.ridge, "Added to the covariance diagonal before inversion (>= 0)");
  infer.flag("standardize", inf.standardize, "Use the correlation matrix instead of covariance");
  infer.option("mode", inf.mode, "avg-parcorr grid: simplified or full [default: simplified]")
      ->check(CLI::IsMember({"simplified", "full"}));
  infer.option("tau-grid", inf.tau_grid, "avg-parcorr thresholds A:B:STEP [default: 0.1:0.21:0.001]");
  infer.flag("skip-degenerate", inf.skip_degenerate,
             "Drop singular grid points (logged) instead of failing");
  infer.option("directivity", inf.directivity, "off, q (blend) or r (threshold) [default: off]")
      ->check(CLI::IsMember({"off", "q", "r"}));
  infer.option("phi1", inf.phi1, "Activation window lower bound");
  infer.option("phi2", inf.phi2, "Activation window upper bound");
  infer.option("phi3", inf.phi3, "Threshold on z for directivity r (> 0)");
  infer.option("dir-weight", inf.dir_weight, "Blend weight for directivity q, in [0, 1]");
  infer.flag("z-normalize", inf.z_normalize, "Divide z by T'-1 before blending");
  infer.option("dir-lowpass", inf.dir_lowpass, "Low-pass filter of the directivity signal")
      ->check(CLI::IsMember({"none", "f1", "f2", "f3", "f4"}));
  infer.option("dir-tau", inf.dir_tau, "Threshold of the directivity signal");
  infer.option("dir-regularizer", inf.dir_regularizer, "Regularizer of the directivity signal")
      ->check(CLI::IsMember({"none", "w", "wstar"}));

  EvalFlags ev;
  Command eval(app, "eval", "AUROC and AUPRC of a score file against a network");
  eval.option("scores", ev.scores, "Association CSV")->required();
  eval.option("network", ev.network, "Ground-truth network CSV \"i,j,w\"")->required();
  eval.option("out-report", ev.out_report, "Output JSON report")->required();
  eval.option("out-roc", ev.out_roc, "Optional ROC curve CSV \"fpr,tpr\"");
  eval.option("out-pr", ev.out_pr, "Optional PR curve CSV \"recall,precision\"");

  EvalFlags cv;
  Command curves(app, "curves", "Write ROC and PR curves of a score file");
  curves.option("scores", cv.scores, "Association CSV")->required();
  curves.option("network", cv.network, "Ground-truth network CSV \"i,j,w\"")->required();
  curves.option("out-roc", cv.out_roc, "ROC curve CSV \"fpr,tpr\"");
  curves.option("out-pr", cv.out_pr, "PR curve CSV \"recall,precision\"");

  std::string manifest_in;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", manifest_in, "Manifest JSON written by an earlier run")
      ->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << CONNECKT_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error("usage", kUsage, e.what());
  }

  try {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t threads = resolve_threads(threads_flag);

    if (replay->parsed()) {
      if (depth > 0) fail(ErrorKind::Format, "nested replay");
      return run(replay_args(manifest_in), depth + 1);
    }

    Manifest m;
    std::string primary;
    Command* cmd = nullptr;
    if (simulate.app()->parsed()) {
      cmd = &simulate;
      run_simulate(sim, m);
      primary = sim.out_fluor;
    } else if (filter.app()->parsed()) {
      cmd = &filter;
      run_filter(flt, m);
      primary = flt.out;
    } else if (infer.app()->parsed()) {
      cmd = &infer;
      run_infer(inf, infer, threads, m);
      primary = inf.out;
    } else if (eval.app()->parsed()) {
      cmd = &eval;
      run_eval(ev, m);
      primary = ev.out_report;
    } else {
      cmd = &curves;
      run_curves(cv, m);
      primary = cv.out_roc.empty() ? cv.out_pr : cv.out_roc;
    }
    m.subcommand = cmd->app()->get_name();
    m.parameters = cmd->parameters();
    write_manifest(m, manifest_path(primary), threads, start);
    return kOk;
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), exit_code_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return report_error("internal", kInternal, "out of memory");
  } catch (const std::exception& e) {
    return report_error("internal", kInternal, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}
