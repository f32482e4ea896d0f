#include "coorbit/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "coorbit/all.hpp"
#include "coorbit/io.hpp"

namespace coorbit::cli {

namespace {

using io::Json;

struct Options {
  unsigned threads = 0;
  std::string out;
  bool quiet = false;

  std::string group;
  std::string data;
  std::string manifest;
  bool ids = false;

  int p = 0;  // 0: default for the chosen n
  int n = 1;
  std::uint64_t seed = 0;
  std::uint64_t window_seed = 0;
  int j = 1;
  double tol = kDefaultSeparationTol;

  int dim = 0;
  int m = 0;

  long budget = 10000;
  double floor = 1e-2;
  int refine = 16;
  int steps = 200;
};

/// COORBIT_SEED replaces every --seed style flag when set.
void apply_seed_override(Options& opt) {
  const char* env = std::getenv("COORBIT_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw Error(Errc::parse_error, "COORBIT_SEED is not an unsigned integer");
  opt.seed = v;
  opt.window_seed = v;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    io::write_file(path, text);
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct Loaded {
  io::GroupSpec spec;
  GroupActiond action;
};

Loaded load_group(const std::string& path) {
  io::GroupSpec spec = io::load_group_spec(path);
  GroupActiond action = io::build_group(spec);
  return {std::move(spec), std::move(action)};
}

Datasetd load_data(const std::string& path, bool ids, const GroupActiond& action) {
  Datasetd data = io::load_dataset_csv(path, ids);
  if (data.empty()) throw Error(Errc::parse_error, path + ": dataset is empty");
  if (data.dim() != action.dim()) {
    throw Error(Errc::dimension_mismatch, path + ": points have length " + std::to_string(data.dim()) +
                                              ", group acts on R^" + std::to_string(action.dim()));
  }
  return data;
}

/// The n = 1 plan is the 2d-window max filter; otherwise p defaults to p_n.
SelectionSet resolve_plan(const GroupActiond& action, int n, int& p) {
  const int d = static_cast<int>(action.dim());
  if (n == 1) {
    if (p == 0) p = 2 * d;
    if (p != 2 * d) {
      throw Error(Errc::p_out_of_range, "p = " + std::to_string(p) + " with n = 1 must equal 2d = " +
                                            std::to_string(2 * d));
    }
    return SelectionSet::singleton(p);
  }
  const GammaProfile profile = gamma_profile(action);
  if (p == 0 && n >= 1 && n <= profile.order) p = std::max(profile.p(n), d);
  return plan_selection(profile, n, p);
}

Json args_json(const std::string& command, const Options& opt) {
  Json a;
  a["group"] = opt.group;
  if (command == "embed") {
    a["data"] = opt.data;
    a["ids"] = opt.ids;
  }
  a["p"] = opt.p;
  a["n"] = opt.n;
  a["seed"] = opt.seed;
  if (command == "collide") {
    a["budget"] = opt.budget;
    a["floor"] = opt.floor;
    a["refine"] = opt.refine;
    a["steps"] = opt.steps;
  }
  a["out"] = opt.out;
  return a;
}

std::string manifest_path(const Options& opt) {
  if (!opt.manifest.empty()) return opt.manifest;
  if (!opt.out.empty()) return opt.out + ".manifest.json";
  return {};
}

void write_manifest(const std::string& command, const Options& opt, const io::GroupSpec& spec,
                    const EmbeddingConfig<double>& config, const Json& inputs, double seconds) {
  const std::string path = manifest_path(opt);
  if (path.empty()) return;
  Json m;
  m["command"] = command;
  m["tool_version"] = kToolVersion;
  m["args"] = args_json(command, opt);
  Json resolved = io::to_json(config);
  resolved["group"] = io::to_json(spec);
  m["config"] = resolved;
  m["inputs"] = inputs;
  m["wall_time_s"] = seconds;
  io::write_file(path, dump(m));
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_verify(const Options& opt, std::ostream& out) {
  const auto [spec, action] = load_group(opt.group);
  const VerificationReport report = verify_group(action);
  Json j = io::to_json(report);
  j["order"] = action.order();
  j["dim"] = action.dim();
  emit(dump(j), opt.out, out);
  return report.passed() ? kOk : kDomain;
}

int cmd_gamma(const Options& opt, std::ostream& out) {
  const auto [spec, action] = load_group(opt.group);
  emit(dump(io::to_json(gamma_profile(action))), opt.out, out);
  return kOk;
}

int cmd_plan(Options opt, std::ostream& out) {
  const auto [spec, action] = load_group(opt.group);
  const SelectionSet sel = resolve_plan(action, opt.n, opt.p);
  Json j;
  j["n"] = opt.n;
  j["p"] = opt.p;
  j["selection"] = io::to_json(sel);
  emit(dump(j), opt.out, out);
  return kOk;
}

int cmd_sample(const Options& opt, std::ostream& out) {
  if (opt.dim < 2) throw Error(Errc::dimension_too_small, "--dim must be at least 2");
  if (opt.p < 1) throw Error(Errc::config_inconsistent, "--p must be at least 1");
  Json j;
  j["seed"] = opt.seed;
  j["windows"] = io::to_json(sample_windows(opt.dim, opt.p, opt.seed));
  if (opt.m > 0) j["reduction"] = io::to_json(sample_reduction(opt.m, opt.dim, mix_seed(opt.seed, 1)));
  emit(dump(j), opt.out, out);
  return kOk;
}

void write_embedding(const EmbeddingConfig<double>& config, const GroupActiond& action, const Datasetd& data,
                     const Options& opt, std::ostream& out) {
  const Eigen::MatrixXd rows = embed_dataset(config, action, data, opt.threads);
  std::ostringstream csv;
  io::write_csv(csv, rows, opt.ids ? data.ids() : std::vector<std::string>{});
  emit(csv.str(), opt.out, out);
}

int cmd_embed(Options opt, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto [spec, action] = load_group(opt.group);
  const std::string data_text = io::read_file(opt.data);
  const Datasetd data = load_data(opt.data, opt.ids, action);
  SelectionSet sel = resolve_plan(action, opt.n, opt.p);
  const auto config = make_config<double>(static_cast<int>(action.dim()), opt.p, std::move(sel), opt.seed);
  write_embedding(config, action, data, opt, out);
  Json inputs;
  inputs["group"] = {{"path", opt.group}, {"digest", io::digest(io::read_file(opt.group))}};
  inputs["data"] = {{"path", opt.data}, {"digest", io::digest(data_text)}};
  write_manifest("embed", opt, spec, config, inputs, elapsed(start));
  return kOk;
}

int cmd_bounds(const Options& opt, std::ostream& out) {
  const auto [spec, action] = load_group(opt.group);
  const Datasetd closed = orbit_closure(action, load_data(opt.data, opt.ids, action));
  if (opt.j < 1 || opt.j > action.order()) {
    throw Error(Errc::rank_out_of_range, "--j must lie in [1, " + std::to_string(action.order()) + "]");
  }
  const WindowBankd bank = sample_windows(static_cast<int>(action.dim()), 1, opt.window_seed);
  const BoundsReport report = lipschitz_bounds(action, bank.window(0), opt.j, closed, opt.tol);
  Json j = io::to_json(report);
  j["j"] = opt.j;
  j["window_seed"] = opt.window_seed;
  j["window"] = io::vector_json(bank.window(0));
  j["closure_applied"] = true;
  j["points_after_closure"] = closed.size();
  emit(dump(j), opt.out, out);
  return kOk;
}

int cmd_separate(Options opt, std::ostream& out) {
  const auto [spec, action] = load_group(opt.group);
  const Datasetd closed = orbit_closure(action, load_data(opt.data, opt.ids, action));
  SelectionSet sel = resolve_plan(action, opt.n, opt.p);
  const auto config = make_config<double>(static_cast<int>(action.dim()), opt.p, std::move(sel), opt.seed);
  const Embedding<double> psi(config, action);
  const auto pairs =
      separation_check_with(action, closed, [&](const Eigen::VectorXd& x) { return psi(x); }, opt.tol);
  Json j;
  j["separated"] = pairs.empty();
  j["unseparated"] = io::to_json(pairs);
  j["orbit_count"] = orbit_representatives(action, closed).size();
  j["config"] = io::to_json(config);
  emit(dump(j), opt.out, out);
  return kOk;
}

Json collide_json(const GroupActiond& action, const EmbeddingConfig<double>& config, const Options& opt) {
  CollisionOptions search;
  search.budget = opt.budget;
  search.floor = opt.floor;
  search.seed = mix_seed(opt.seed, 2);
  search.refine = opt.refine;
  search.descent_steps = opt.steps;
  search.threads = opt.threads;
  const auto report = collision_search(action, config.bank, config.sel, search);
  Json j = io::to_json(report);
  j["windows"] = io::to_json(config.bank);
  j["selection"] = io::to_json(config.sel);
  return j;
}

int cmd_collide(Options opt, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto [spec, action] = load_group(opt.group);
  SelectionSet sel = resolve_plan(action, opt.n, opt.p);
  // Search runs on Φ itself, never on a reduction.
  EmbeddingConfig<double> config{sample_windows(static_cast<int>(action.dim()), opt.p, opt.seed), std::move(sel),
                                 std::nullopt, opt.seed};
  emit(dump(collide_json(action, config, opt)), opt.out, out);
  Json inputs;
  inputs["group"] = {{"path", opt.group}, {"digest", io::digest(io::read_file(opt.group))}};
  write_manifest("collide", opt, spec, config, inputs, elapsed(start));
  return kOk;
}

/// Re-executes an embed or collide run from its manifest, using the recorded
/// resolved configuration rather than re-deriving it from seeds.
int cmd_run(const Options& cli_opt, std::ostream& out, std::ostream& err) {
  Json m;
  try {
    m = Json::parse(io::read_file(cli_opt.manifest));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, cli_opt.manifest + ": " + e.what());
  }
  try {
    const std::string command = m.at("command").get<std::string>();
    const Json& args = m.at("args");
    const Json& resolved = m.at("config");
    Options opt;
    opt.threads = cli_opt.threads;
    opt.out = cli_opt.out.empty() ? args.at("out").get<std::string>() : cli_opt.out;
    opt.p = args.at("p").get<int>();
    opt.n = args.at("n").get<int>();
    opt.seed = args.at("seed").get<std::uint64_t>();
    const io::GroupSpec spec = io::parse_group_spec(resolved.at("group"));
    const GroupActiond action = io::build_group(spec);
    const EmbeddingConfig<double> config = io::config_from_json(resolved);
    if (command == "embed") {
      opt.data = args.at("data").get<std::string>();
      opt.ids = args.at("ids").get<bool>();
      const std::string recorded = m.at("inputs").at("data").at("digest").get<std::string>();
      if (io::digest(io::read_file(opt.data)) != recorded) {
        err << "error: " << opt.data << " changed since the manifest was written\n";
        return kDomain;
      }
      write_embedding(config, action, load_data(opt.data, opt.ids, action), opt, out);
      return kOk;
    }
    if (command == "collide") {
      opt.budget = args.at("budget").get<long>();
      opt.floor = args.at("floor").get<double>();
      opt.refine = args.at("refine").get<int>();
      opt.steps = args.at("steps").get<int>();
      emit(dump(collide_json(action, config, opt)), opt.out, out);
      return kOk;
    }
    throw Error(Errc::parse_error, "manifest command \"" + command + "\" cannot be replayed");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, cli_opt.manifest + ": " + e.what());
  }
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::parse_error: return kParse;
    case Errc::io_error: return kIo;
    default: return kDomain;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group-invariant embeddings via sorted coorbits"};
  app.require_subcommand(1);
  Options opt;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--threads", opt.threads, "Worker threads (0 = auto)");
    sub->add_option("--out", opt.out, "Write the result here instead of stdout");
    sub->add_flag("--quiet", opt.quiet, "Suppress diagnostics");
  };
  const auto plan_flags = [&](CLI::App* sub) {
    sub->add_option("--p", opt.p, "Window count (default 2d for n = 1, else p_n)");
    sub->add_option("--n", opt.n, "Entries kept per rich coorbit");
  };

  auto* verify = app.add_subcommand("verify", "Check the group laws of a group spec");
  verify->add_option("group", opt.group)->required();
  common(verify);

  auto* gamma = app.add_subcommand("gamma", "Spectral profile gamma and window counts p_n");
  gamma->add_option("group", opt.group)->required();
  common(gamma);

  auto* plan = app.add_subcommand("plan", "Selection set for n entries per coorbit");
  plan->add_option("group", opt.group)->required();
  plan_flags(plan);
  common(plan);

  auto* sample = app.add_subcommand("sample", "Sample a Gaussian window bank");
  sample->add_option("--dim", opt.dim)->required();
  sample->add_option("--p", opt.p)->required();
  sample->add_option("--seed", opt.seed);
  sample->add_option("--m", opt.m, "Also sample a reduction R^m -> R^{2d}");
  common(sample);

  auto* embed = app.add_subcommand("embed", "Embed a CSV dataset");
  embed->add_option("group", opt.group)->required();
  embed->add_option("data", opt.data)->required();
  plan_flags(embed);
  embed->add_option("--seed", opt.seed);
  embed->add_option("--manifest", opt.manifest, "Manifest path (default <out>.manifest.json)");
  embed->add_flag("--ids", opt.ids, "First CSV column holds point ids");
  common(embed);

  auto* bounds = app.add_subcommand("bounds", "Optimal bi-Lipschitz constants of one coorbit entry");
  bounds->add_option("group", opt.group)->required();
  bounds->add_option("data", opt.data)->required();
  bounds->add_option("--window-seed", opt.window_seed);
  bounds->add_option("--j", opt.j, "Coorbit rank (1-based)");
  bounds->add_option("--tol", opt.tol, "Collision threshold");
  bounds->add_flag("--ids", opt.ids);
  common(bounds);

  auto* separate = app.add_subcommand("separate", "List orbit pairs the embedding fails to separate");
  separate->add_option("group", opt.group)->required();
  separate->add_option("data", opt.data)->required();
  plan_flags(separate);
  separate->add_option("--seed", opt.seed);
  separate->add_option("--tol", opt.tol);
  separate->add_flag("--ids", opt.ids);
  common(separate);

  auto* collide = app.add_subcommand("collide", "Adversarial search for near-collisions");
  collide->add_option("group", opt.group)->required();
  plan_flags(collide);
  collide->add_option("--budget", opt.budget, "Random restarts");
  collide->add_option("--floor", opt.floor, "Minimum orbit distance");
  collide->add_option("--refine", opt.refine, "Restarts refined by coordinate descent");
  collide->add_option("--steps", opt.steps, "Coordinate sweeps per refinement");
  collide->add_option("--seed", opt.seed);
  collide->add_option("--manifest", opt.manifest);
  common(collide);

  auto* replay = app.add_subcommand("run", "Replay an embed or collide run from its manifest");
  replay->add_option("--manifest", opt.manifest)->required();
  common(replay);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    apply_seed_override(opt);
    if (*verify) return cmd_verify(opt, out);
    if (*gamma) return cmd_gamma(opt, out);
    if (*plan) return cmd_plan(opt, out);
    if (*sample) return cmd_sample(opt, out);
    if (*embed) return cmd_embed(opt, out);
    if (*bounds) return cmd_bounds(opt, out);
    if (*separate) return cmd_separate(opt, out);
    if (*collide) return cmd_collide(opt, out);
    if (*replay) return cmd_run(opt, out, err);
  } catch (const Error& e) {
    if (!opt.quiet) err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  }
  return kUsage;
}

}  // namespace coorbit::cli
