// Desk-scale acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "coorbit/all.hpp"
#include "coorbit/cli.hpp"
#include "coorbit/io.hpp"
#include "oracles.hpp"

using namespace coorbit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Builtin {
  std::string name;
  GroupActiond action;
};

std::vector<Builtin> builtins(int d_min = 2, int d_max = 8) {
  std::vector<Builtin> out;
  for (int d = d_min; d <= d_max; ++d) {
    out.push_back({"cyclic" + std::to_string(d), build_cyclic_shift(d)});
    out.push_back({"sign_flip" + std::to_string(d), build_sign_flip(d)});
    if (d >= 3) out.push_back({"dihedral" + std::to_string(d), build_dihedral(d)});
  }
  return out;
}

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double rel_dev(const VectorXd& got, const VectorXd& want) {
  const double scale = inf_norm(want);
  const double diff = inf_norm(got - want);
  return scale > 0 ? diff / scale : diff;
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// A random selection on p windows with ranks drawn from [1, N].
SelectionSet random_selection(Rng& rng, int p, int order) {
  std::vector<std::vector<int>> ranks(p);
  for (auto& r : ranks) {
    std::set<int> picked;
    const int count = uniform_int(rng, 1, std::min(order, 3));
    while (static_cast<int>(picked.size()) < count) picked.insert(uniform_int(rng, 1, order));
    r.assign(picked.begin(), picked.end());
  }
  return SelectionSet(ranks);
}

Datasetd random_invariant(Rng& rng, const GroupActiond& action, int orbits) {
  Datasetd data(static_cast<int>(action.dim()));
  for (int k = 0; k < orbits; ++k) data.add(gaussian_vector(rng, action.dim()), "p" + std::to_string(k));
  return orbit_closure(action, data);
}

Outcome invariance() {
  Rng rng(101);
  double worst = 0;
  for (const auto& [name, g] : builtins()) {
    const int d = static_cast<int>(g.dim());
    for (int k = 0; k < 1000; ++k) {
      const int p = uniform_int(rng, 1, 3);
      const WindowBankd bank(gaussian_matrix(rng, d, p));
      const CoorbitMap<double> phi(g, bank, random_selection(rng, p, g.order()));
      const VectorXd x = gaussian_vector(rng, d);
      const int e = uniform_int(rng, 0, g.order() - 1);
      worst = std::max(worst, rel_dev(phi(apply(g, e, x)), phi(x)));
    }
  }
  return {worst <= 1e-12, "max relative deviation " + fmt("%.3g", worst) + " (tol 1e-12)"};
}

// Relative to ‖w‖‖x‖, which bounds every coorbit entry. Relative to the
// entries themselves the error is dominated by the rounding of λx in the
// test inputs whenever ⟨U_g w, x⟩ nearly cancels; that figure is reported too.
Outcome scaling_and_symmetry() {
  Rng rng(202);
  double worst = 0, worst_entrywise = 0;
  for (const auto& [name, g] : builtins()) {
    const int d = static_cast<int>(g.dim());
    for (int k = 0; k < 1000; ++k) {
      const VectorXd w = gaussian_vector(rng, d), x = gaussian_vector(rng, d);
      const VectorXd base = full_coorbit(g, w, x);
      const auto record = [&](const VectorXd& got, const VectorXd& want, double scale) {
        worst = std::max(worst, inf_norm(got - want) / scale);
        worst_entrywise = std::max(worst_entrywise, rel_dev(got, want));
      };
      for (double lambda : {0.5, 2.0, 10.0}) {
        const double scale = lambda * w.norm() * x.norm();
        record(full_coorbit(g, VectorXd(lambda * w), x), lambda * base, scale);
        record(full_coorbit(g, w, VectorXd(lambda * x)), lambda * base, scale);
      }
      record(full_coorbit(g, x, w), base, w.norm() * x.norm());
    }
  }
  return {worst <= 1e-12, "max deviation relative to ||w|| ||x|| " + fmt("%.3g", worst) +
                              " (tol 1e-12); relative to the entries " + fmt("%.3g", worst_entrywise)};
}

Outcome lipschitz() {
  Rng rng(303);
  double worst_excess = -1e300;
  for (const auto& [name, g] : builtins()) {
    const int d = static_cast<int>(g.dim());
    for (int k = 0; k < 10000; ++k) {
      const VectorXd w = gaussian_vector(rng, d), x = gaussian_vector(rng, d), y = gaussian_vector(rng, d);
      const int j = uniform_int(rng, 1, g.order());
      const double lhs = std::abs(coorbit_entry(g, w, j, x) - coorbit_entry(g, w, j, y));
      worst_excess = std::max(worst_excess, lhs - w.norm() * quotient_distance(g, x, y).distance);
    }
  }
  bool bounds_ok = true;
  const auto all = builtins(2, 6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto& g = all[static_cast<std::size_t>(trial) % all.size()].action;
    const auto data = random_invariant(rng, g, uniform_int(rng, 2, 6));
    const VectorXd w = gaussian_vector(rng, g.dim());
    const auto report = lipschitz_bounds(g, w, uniform_int(rng, 1, g.order()), data);
    bounds_ok = bounds_ok && report.a_w <= report.b_w && report.b_w <= w.norm() + 1e-9;
  }
  return {worst_excess <= 1e-9 && bounds_ok, "max excess over ||w|| d " + fmt("%.3g", worst_excess) +
                                                  " (tol 1e-9), bounds ordered on 50 datasets: " +
                                                  (bounds_ok ? "yes" : "no")};
}

Outcome genericity() {
  Rng rng(404);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = uniform_int(rng, 2, 6);
    const auto all = builtins(d, d);
    const auto& g = all[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(all.size()) - 1))].action;
    const auto data = random_invariant(rng, g, uniform_int(rng, 2, 20));
    const WindowBankd bank(gaussian_matrix(rng, d, 1));
    if (!separation_check(g, bank, SelectionSet::singleton(1), data).empty()) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " of 100 trials left a pair unseparated"};
}

double search_ratio(const GroupActiond& g, const SelectionSet& sel, int p, std::uint64_t seed) {
  CollisionOptions opt;
  opt.budget = 10000;
  opt.floor = 1e-2;
  opt.seed = mix_seed(seed, 2);
  const auto bank = sample_windows(static_cast<int>(g.dim()), p, seed);
  return collision_search(g, bank, sel, opt).ratio;
}

Outcome max_filter_collisions() {
  double worst = 1e300;
  for (int d = 3; d <= 5; ++d) {
    for (const auto& g : {build_cyclic_shift(d), build_dihedral(d)}) {
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        worst = std::min(worst, search_ratio(g, SelectionSet::singleton(2 * d), 2 * d, seed));
      }
    }
  }
  return {worst > 1e-3, "smallest ratio " + fmt("%.4g", worst) + " over 60 runs (need > 1e-3)"};
}

Outcome rich_coorbit_plan() {
  const auto cyc = build_cyclic_shift(4);
  const auto profile = gamma_profile(cyc);
  const auto brute = oracle::gamma(cyc);
  const bool gamma_ok = profile.gamma == std::vector<int>{3, 3, 2} && brute == profile.gamma;
  const bool p2_ok = profile.p(2) == 6 && 2 * 4 - brute[static_cast<std::size_t>(cyc.order() - 2)] == 6;
  const auto sel = plan_selection(profile, 2, 6);
  double worst = 1e300;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) worst = std::min(worst, search_ratio(cyc, sel, 6, seed));
  bool window_bound = true;
  for (const auto& [name, g] : builtins()) {
    const auto pr = gamma_profile(g);
    for (int n = 2; n <= g.order(); ++n) window_bound = window_bound && pr.p(n) >= static_cast<int>(g.dim()) + 1;
  }
  const bool pass = gamma_ok && p2_ok && sel.m() == 8 && worst > 1e-3 && window_bound;
  return {pass, std::string("gamma (3,3,2) ") + (gamma_ok ? "ok" : "MISMATCH") + ", p_2 = " +
                    std::to_string(profile.p(2)) + ", m = " + std::to_string(sel.m()) + ", smallest ratio " +
                    fmt("%.4g", worst) + ", p_n >= d+1 " + (window_bound ? "on all built-ins" : "VIOLATED")};
}

Outcome gamma_oracle() {
  int checked = 0, mismatches = 0;
  for (const auto& [name, g] : builtins()) {
    if (g.order() > 48) continue;
    ++checked;
    if (gamma_profile(g).gamma != oracle::gamma(g)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over " + std::to_string(checked) + " actions"};
}

Outcome metric_axioms() {
  Rng rng(808);
  double symmetry = 0, triangle = -1e300;
  bool zero_iff = true;
  for (const auto& [name, g] : builtins()) {
    const int d = static_cast<int>(g.dim());
    for (int k = 0; k < 10000; ++k) {
      const VectorXd x = gaussian_vector(rng, d), y = gaussian_vector(rng, d), z = gaussian_vector(rng, d);
      const double xy = quotient_distance(g, x, y).distance;
      symmetry = std::max(symmetry, std::abs(xy - quotient_distance(g, y, x).distance));
      triangle = std::max(triangle, quotient_distance(g, x, z).distance - xy - quotient_distance(g, y, z).distance);
    }
    for (int k = 0; k < 200; ++k) {
      const VectorXd x = gaussian_vector(rng, d);
      const VectorXd gx = apply(g, uniform_int(rng, 0, g.order() - 1), x);
      const VectorXd other = gaussian_vector(rng, d);
      zero_iff = zero_iff && quotient_distance(g, x, gx).distance <= 1e-12 * (1 + x.norm()) && same_orbit(g, x, gx);
      zero_iff = zero_iff && quotient_distance(g, x, other).distance > 0 && !same_orbit(g, x, other);
    }
  }
  const bool pass = symmetry <= 1e-12 && triangle <= 1e-9 && zero_iff;
  return {pass, "symmetry " + fmt("%.3g", symmetry) + " (tol 1e-12), triangle excess " + fmt("%.3g", triangle) +
                    " (tol 1e-9), zero iff same orbit: " + (zero_iff ? "yes" : "no")};
}

std::set<std::pair<std::string, std::string>> pair_set(const std::vector<UnseparatedPair>& pairs) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& p : pairs) out.insert({p.first, p.second});
  return out;
}

Outcome reduction() {
  int rank_failures = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int d = 2 + static_cast<int>(seed % 5);
    const int m = 1 + static_cast<int>(seed % static_cast<std::uint64_t>(2 * d));
    if (!full_column_rank(sample_reduction(m, d, seed).matrix)) ++rank_failures;
  }
  Rng rng(909);
  int disagreements = 0, unseparated_before = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 3 + trial % 3;
    const auto seed = static_cast<std::uint64_t>(trial);
    if (trial % 2 == 0) {
      // One window under ±I: x and x + v with v ⟂ w share |⟨w, ·⟩|, so the
      // dataset carries planted collisions that ℓ must keep.
      const auto g = build_sign_flip(d);
      auto config = make_config<double>(d, 1, SelectionSet::singleton(1), 1000 + seed);
      const VectorXd w = config.bank.window(0);
      Datasetd raw(d);
      for (int k = 0; k < 4; ++k) {
        const VectorXd x = gaussian_vector(rng, d);
        VectorXd v = gaussian_vector(rng, d);
        v -= (v.dot(w) / w.squaredNorm()) * w;
        raw.add(x, "x" + std::to_string(k));
        if (k < 2) raw.add(VectorXd(x + v), "y" + std::to_string(k));
      }
      const auto data = orbit_closure(g, raw);
      const auto before = separation_check(g, config.bank, config.sel, data, 1e-9);
      config.reduction = sample_reduction(1, d, 2000 + seed);
      const Embedding<double> psi(config, g);
      const auto after = separation_check_with(g, data, [&](const VectorXd& x) { return psi(x); }, 1e-9);
      if (pair_set(before) != pair_set(after)) ++disagreements;
      if (!before.empty()) ++unseparated_before;
      continue;
    }
    const auto g = build_dihedral(d);
    const auto data = random_invariant(rng, g, 6);
    const int p = 1 + trial % 4;
    const auto sel = SelectionSet::top(p, 2);
    auto config = make_config<double>(d, p, sel, 1000 + seed);
    const auto before = separation_check(g, config.bank, config.sel, data);
    if (sel.m() <= 2 * d) config.reduction = sample_reduction(sel.m(), d, 2000 + seed);
    const Embedding<double> psi(config, g);
    const auto after = separation_check_with(g, data, [&](const VectorXd& x) { return psi(x); });
    if (pair_set(before) != pair_set(after)) ++disagreements;
    if (!before.empty()) ++unseparated_before;
  }
  return {rank_failures == 0 && disagreements == 0,
          std::to_string(rank_failures) + " rank failures in 100 seeds, " + std::to_string(disagreements) +
              " separation disagreements in 20 datasets (" + std::to_string(unseparated_before) +
              " with collisions)"};
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "coorbit_acceptance";
  fs::create_directories(dir);
  const std::string group = (dir / "dihedral4.json").string();
  const std::string data = (dir / "points.csv").string();
  io::write_file(group, R"({"type": "dihedral", "dim": 4})");
  Rng rng(1010);
  Datasetd points(4);
  for (int k = 0; k < 25; ++k) points.add(gaussian_vector(rng, 4), "p" + std::to_string(k));
  {
    std::ostringstream csv;
    io::write_csv(csv, points.matrix());
    io::write_file(data, csv.str());
  }
  const auto out = [&](const char* name) { return (dir / name).string(); };
  bool ok = true;
  for (const char* n : {"1", "2"}) {
    const std::vector<std::string> embed{"embed", group, data, "--n", n, "--seed", "17"};
    auto a = embed, b = embed;
    a.insert(a.end(), {"--out", out("embed_a.csv")});
    b.insert(b.end(), {"--out", out("embed_b.csv"), "--threads", "4"});
    ok = ok && run_cli(a) == 0 && run_cli(b) == 0 &&
         io::read_file(out("embed_a.csv")) == io::read_file(out("embed_b.csv"));
  }
  const std::vector<std::string> collide{"collide", group, "--budget", "2000", "--seed", "17"};
  auto ca = collide, cb = collide;
  ca.insert(ca.end(), {"--out", out("collide_a.json")});
  cb.insert(cb.end(), {"--out", out("collide_b.json")});
  ok = ok && run_cli(ca) == 0 && run_cli(cb) == 0 &&
       io::read_file(out("collide_a.json")) == io::read_file(out("collide_b.json"));

  // The last embed ran with n = 2; recompute it through the library.
  const auto g = build_dihedral(4);
  const auto profile = gamma_profile(g);
  const int p = std::max(profile.p(2), 4);
  const auto config = make_config<double>(4, p, plan_selection(profile, 2, p), 17);
  const MatrixXd expected = embed_dataset(config, g, points);
  std::istringstream csv(io::read_file(out("embed_a.csv")));
  const MatrixXd got = io::read_dataset_csv(csv, false).matrix();
  double worst = 1e300;
  if (got.rows() == expected.rows() && got.cols() == expected.cols()) {
    worst = (got - expected).cwiseAbs().maxCoeff();
  }
  return {ok && worst <= 1e-12, std::string("byte-identical reruns: ") + (ok ? "yes" : "no") +
                                    ", CLI vs library max deviation " + fmt("%.3g", worst) + " (tol 1e-12)"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
    double time_limit_s;  // 0 when the criterion has no time limit
  };
  const std::vector<Criterion> criteria{
      {"1 invariance", invariance, 10},
      {"2 homogeneity and symmetry", scaling_and_symmetry, 0},
      {"3 Lipschitz bound", lipschitz, 0},
      {"4 generic separation", genericity, 30},
      {"5 max filter near-collisions", max_filter_collisions, 0},
      {"6 rich coorbit plan", rich_coorbit_plan, 0},
      {"7 gamma oracle", gamma_oracle, 5},
      {"8 metric axioms", metric_axioms, 0},
      {"9 reduction consistency", reduction, 0},
      {"10 CLI determinism", cli_determinism, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome result;
    try {
      result = c.check();
    } catch (const std::exception& e) {
      result = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && seconds >= c.time_limit_s) {
      result.pass = false;
      result.detail += ", over the time limit";
    }
    std::string timing = fmt("%.2f s", seconds);
    if (c.time_limit_s > 0) timing += fmt(" (limit %.0f s)", c.time_limit_s);
    std::printf("[%s] %s: %s; %s\n", result.pass ? "PASS" : "FAIL", c.name, result.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    if (!result.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
