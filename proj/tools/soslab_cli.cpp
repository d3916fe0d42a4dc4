// Command line front end: one subcommand per tool or experiment.
// Exit codes: 0 ok, 2 usage or configuration error, 3 guard violation, 1 anything else.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "soslab/experiments.hpp"

using namespace soslab;

namespace {

Site parse_site(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("expected x,y but got '" + s + "'");
  try {
    return {std::stoll(s.substr(0, comma)), std::stoll(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw std::invalid_argument("expected x,y but got '" + s + "'");
  }
}

struct Common {
  std::string out = "soslab_out";
  std::uint64_t seed = 1;
  bool svg = false;
};

struct Run {
  std::string name;
  std::vector<std::pair<std::string, std::string>> files;
};

BoundaryCondition boundary_by_name(const std::string& name, const Box& box) {
  if (name == "zero") return BoundaryCondition::constant(0);
  if (name == "dobrushin") return BoundaryCondition::dobrushin_0111();
  if (name == "legs") return BoundaryCondition::legs(1, 0, box.origin.x + box.width / 4, box.origin.x + 3 * box.width / 4 - 1);
  throw std::invalid_argument("unknown boundary '" + name + "' (zero|dobrushin|legs)");
}

StepDistribution step_by_name(const std::string& name, double beta, const std::string& deco, int cutoff, int tilt_cutoff) {
  if (name == "uniform3") return uniform_step3();
  if (name == "ssrw") return ssrw_step();
  if (name == "oz") return oz_step(beta, decoration_by_name(deco, beta), {1, 0}, cutoff, tilt_cutoff).step.normalized();
  throw std::invalid_argument("unknown step '" + name + "' (uniform3|ssrw|oz)");
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soslab: SOS interfaces, contour polymers and their effective random walk"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file; a [section] named after the subcommand sets its options");
  Common common;
  app.add_option("--out", common.out, "Output directory (SOSLAB_OUTPUT_DIR overrides)");
  app.add_option("--seed", common.seed, "Master seed");
  app.add_flag("--svg", common.svg, "Also write SVG plots");

  std::function<Run()> job;

  // sample ---------------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "Heat-bath chain; per-sweep observables and the final field");
  struct {
    int L = 16, height = 0, sweeps = 1000;
    double beta = 1.0;
    bool floor = false;
    std::string boundary = "zero";
  } so;
  sample->add_option("--L", so.L, "Box width")->check(CLI::PositiveNumber);
  sample->add_option("--height", so.height, "Box height (default L)");
  sample->add_option("--beta", so.beta)->check(CLI::PositiveNumber);
  sample->add_option("--boundary", so.boundary, "zero|dobrushin|legs");
  sample->add_flag("--floor", so.floor);
  sample->add_option("--sweeps", so.sweeps)->check(CLI::NonNegativeNumber);
  sample->callback([&] {
    job = [&] {
      const Box box(so.L, so.height > 0 ? so.height : so.L);
      HeightField f(box, boundary_by_name(so.boundary, box), so.floor, so.beta);
      Rng rng = task_rng(common.seed, 0);
      const auto series = run_chain(f, so.sweeps, rng,
                                    {[](const HeightField& h) {
                                       double s = 0;
                                       const Box& b = h.box();
                                       for (i64 y = b.origin.y; y < b.origin.y + b.height; ++y)
                                         for (i64 x = b.origin.x; x < b.origin.x + b.width; ++x) s += h.at({x, y});
                                       return s / static_cast<double>(b.width * b.height);
                                     },
                                     [](const HeightField& h) { return static_cast<double>(hamiltonian(h)); }});
      Table t;
      t.columns = {"sweep", "mean_height", "energy"};
      for (std::size_t i = 0; i < series.size(); ++i) t.add({num(static_cast<i64>(i + 1)), num(series[i][0]), num(series[i][1])});
      Table field;
      field.columns = {"x", "y", "h"};
      for (i64 y = box.origin.y; y < box.origin.y + box.height; ++y)
        for (i64 x = box.origin.x; x < box.origin.x + box.width; ++x) field.add({num(x), num(y), num(f.at({x, y}))});
      return Run{"sample", {{"sample.csv", t.csv()}, {"field.csv", field.csv()}}};
    };
  });

  // enumerate ------------------------------------------------------------
  auto* enumerate = app.add_subcommand("enumerate", "Exact partition function and site marginals of a small box");
  struct {
    int L = 3, height = 0, hmax = -1;
    double beta = 1.0;
    bool floor = false;
    std::string boundary = "zero";
  } eo;
  enumerate->add_option("--L", eo.L)->check(CLI::PositiveNumber);
  enumerate->add_option("--height", eo.height, "Box height (default L)");
  enumerate->add_option("--beta", eo.beta)->check(CLI::PositiveNumber);
  enumerate->add_option("--boundary", eo.boundary, "zero|dobrushin|legs");
  enumerate->add_flag("--floor", eo.floor);
  enumerate->add_option("--hmax", eo.hmax, "Height truncation (default from beta)");
  enumerate->callback([&] {
    job = [&] {
      const Box box(eo.L, eo.height > 0 ? eo.height : eo.L);
      const ExactResult r = exact_enumerate(box, boundary_by_name(eo.boundary, box), eo.floor, eo.beta, eo.hmax);
      Table t;
      t.columns = {"x", "y", "h", "p"};
      for (std::size_t i = 0; i < r.sites.size(); ++i)
        for (int h = r.h_lo; h <= r.h_hi; ++h)
          t.add({num(r.sites[i].x), num(r.sites[i].y), num(h), num(r.marginals[i][static_cast<std::size_t>(h - r.h_lo)])});
      Table s;
      s.columns = {"log_z", "h_lo", "h_hi", "tail_bound"};
      s.add({num(r.log_z), num(r.h_lo), num(r.h_hi), num(r.tail_bound)});
      return Run{"enumerate", {{"marginals.csv", t.csv()}, {"summary.csv", s.csv()}}};
    };
  });

  // tension --------------------------------------------------------------
  auto* tension = app.add_subcommand("tension", "Finite-N surface tension -log G(N y)/(N|y|) for N = 1..nmax");
  struct {
    double beta = 2.0;
    std::string dir = "1,0", decoration = "zero";
    int nmax = 10, extra = 6, cap = 18;
  } to;
  tension->add_option("--beta", to.beta)->check(CLI::PositiveNumber);
  tension->add_option("--dir", to.dir, "Direction x,y");
  tension->add_option("--nmax", to.nmax)->check(CLI::PositiveNumber);
  tension->add_option("--decoration", to.decoration, "zero|sos");
  tension->add_option("--extra-len", to.extra, "Excess length over |N y|_1");
  tension->add_option("--cap", to.cap, "Largest contour length enumerated");
  tension->callback([&] {
    job = [&] {
      const Site y = parse_site(to.dir);
      std::vector<int> ns;
      for (int n = 1; n <= to.nmax; ++n) ns.push_back(n);
      const TensionEntry e = surface_tension(y, to.beta, decoration_by_name(to.decoration, to.beta), ns, to.extra, to.cap);
      Table t;
      t.columns = {"N", "tau_N", "extrapolated", "stderr"};
      std::vector<double> xs;
      for (std::size_t i = 0; i < e.n.size(); ++i) {
        t.add({num(e.n[i]), num(e.values[i]), num(e.extrapolated), num(e.stderr_fit)});
        xs.push_back(e.n[i]);
      }
      Run r{"tension", {{"tension.csv", t.csv()}}};
      if (common.svg) r.files.push_back({"tension.svg", svg_plot(xs, {e.values}, "tau_N against N")});
      return r;
    };
  });

  // steps ----------------------------------------------------------------
  auto* steps = app.add_subcommand("steps", "Effective random-walk step law from irreducible animals");
  struct {
    double beta = 2.0;
    std::string dir = "1,0", decoration = "zero";
    int cutoff = 12, tilt_cutoff = 16;
  } st;
  steps->add_option("--beta", st.beta)->check(CLI::PositiveNumber);
  steps->add_option("--dir", st.dir, "Direction x,y");
  steps->add_option("--decoration", st.decoration, "zero|sos");
  steps->add_option("--cutoff", st.cutoff, "Largest irreducible length in the step law");
  steps->add_option("--tilt-cutoff", st.tilt_cutoff, "Cutoff used to find the tilt");
  steps->callback([&] {
    job = [&] {
      const StepReport r = oz_step(st.beta, decoration_by_name(st.decoration, st.beta), parse_site(st.dir), st.cutoff,
                                   std::max(st.cutoff, st.tilt_cutoff));
      Table t;
      t.columns = {"vx", "vy", "mass"};
      for (std::size_t i = 0; i < r.step.steps.size(); ++i)
        t.add({num(r.step.steps[i].x), num(r.step.steps[i].y), num(r.step.probs[i])});
      Table s;
      s.columns = {"h1", "h2", "tau", "mass", "colinearity", "mean_x", "sigma_sq"};
      s.add({num(r.tilt.h1), num(r.tilt.h2), num(r.tau), num(r.mass), num(r.colinearity), num(r.step.mean_x()),
             num(r.step.sigma_sq())});
      return Run{"steps", {{"steps.csv", t.csv()}, {"summary.csv", s.csv()}}};
    };
  });

  // bridge ---------------------------------------------------------------
  auto* bridge = app.add_subcommand("bridge", "Walk bridges conditioned to stay in the upper half-plane");
  struct {
    std::string step = "uniform3", decoration = "zero";
    double beta = 2.0;
    int cutoff = 12, tilt_cutoff = 16, N = 64, u = 1, v = 1, samples = 10;
  } bo;
  bridge->add_option("--step", bo.step, "uniform3|ssrw|oz");
  bridge->add_option("--beta", bo.beta)->check(CLI::PositiveNumber);
  bridge->add_option("--decoration", bo.decoration, "zero|sos");
  bridge->add_option("--cutoff", bo.cutoff);
  bridge->add_option("--tilt-cutoff", bo.tilt_cutoff);
  bridge->add_option("--N", bo.N)->check(CLI::PositiveNumber);
  bridge->add_option("--u", bo.u)->check(CLI::NonNegativeNumber);
  bridge->add_option("--v", bo.v)->check(CLI::NonNegativeNumber);
  bridge->add_option("--samples", bo.samples)->check(CLI::PositiveNumber);
  bridge->callback([&] {
    job = [&] {
      const StepDistribution law = step_by_name(bo.step, bo.beta, bo.decoration, bo.cutoff, std::max(bo.cutoff, bo.tilt_cutoff));
      const BridgeSampler sampler(law, {0, bo.u}, {bo.N, bo.v});
      Rng rng = task_rng(common.seed, 0);
      Table t;
      t.columns = {"sample", "k", "x", "y"};
      for (int i = 0; i < bo.samples; ++i) {
        const WalkPath p = sampler.sample(rng);
        t.add({num(i), "0", num(p.start.x), num(p.start.y)});
        for (std::size_t k = 0; k < p.positions.size(); ++k)
          t.add({num(i), num(static_cast<i64>(k + 1)), num(p.positions[k].x), num(p.positions[k].y)});
      }
      Table s;
      s.columns = {"hitting_probability"};
      s.add({num(sampler.probability())});
      return Run{"bridge", {{"bridges.csv", t.csv()}, {"summary.csv", s.csv()}}};
    };
  });

  // ballot ---------------------------------------------------------------
  auto* ballot = app.add_subcommand("ballot", "Survival and hitting exponents, profile variance and V1 spread");
  struct {
    std::string step = "uniform3", profile_step = "", decoration = "zero";
    double beta = 2.0;
    int cutoff = 12, tilt_cutoff = 16;
    BallotOptions opt;
  } ba;
  ballot->add_option("--step", ba.step, "Step for the exponents: uniform3|ssrw|oz");
  ballot->add_option("--profile-step", ba.profile_step, "Step for profile and spread (default --step)");
  ballot->add_option("--beta", ba.beta)->check(CLI::PositiveNumber);
  ballot->add_option("--decoration", ba.decoration, "zero|sos");
  ballot->add_option("--cutoff", ba.cutoff);
  ballot->add_option("--tilt-cutoff", ba.tilt_cutoff);
  ballot->add_option("--k-grid", ba.opt.k_grid);
  ballot->add_option("--n-grid", ba.opt.n_grid);
  ballot->add_option("--profile-k", ba.opt.profile_k);
  ballot->add_option("--grid-max", ba.opt.grid_max);
  ballot->add_option("--grid-n", ba.opt.grid_n);
  ballot->callback([&] {
    job = [&] {
      const int tc = std::max(ba.cutoff, ba.tilt_cutoff);
      const StepDistribution s = step_by_name(ba.step, ba.beta, ba.decoration, ba.cutoff, tc);
      const StepDistribution p =
          ba.profile_step.empty() ? s : step_by_name(ba.profile_step, ba.beta, ba.decoration, ba.cutoff, tc);
      const BallotReport r = ballot_check(s, p, ba.opt);
      Table t;
      t.columns = {"quantity", "estimate", "stderr", "window"};
      for (const FitResult* f : {&r.survival_slope, &r.hitting_slope, &r.profile_variance_ratio, &r.v1_spread})
        t.add({f->quantity, num(f->estimate), num(f->stderr_), "\"" + f->window + "\""});
      return Run{"ballot", {{"ballot.csv", t.csv()}}};
    };
  });

  // experiments ----------------------------------------------------------
  auto* mr = app.add_subcommand("exp-min-rho", "Minimum displacement of the top macroscopic level line");
  MinRhoConfig mrc;
  mr->add_option("--beta", mrc.beta)->check(CLI::PositiveNumber);
  mr->add_option("--sizes", mrc.sizes, "Box sizes L");
  mr->add_option("--samples", mrc.samples)->check(CLI::PositiveNumber);
  mr->add_option("--chains", mrc.chains)->check(CLI::PositiveNumber);
  mr->add_option("--burn-in", mrc.burn_in);
  mr->add_option("--thin", mrc.thin);
  mr->callback([&] {
    job = [&] {
      mrc.seed = common.seed;
      const MinRhoResult r = exp_min_rho(mrc);
      Run run{"exp-min-rho", {{"min_rho_samples.csv", r.table().csv()}, {"min_rho_quantiles.csv", r.quantiles().csv()}}};
      if (common.svg) {
        std::vector<double> xs, q10, q50;
        for (int L : mrc.sizes) {
          xs.push_back(L);
          q10.push_back(r.quantile(L, 0.1).value_or(NAN));
          q50.push_back(r.quantile(L, 0.5).value_or(NAN));
        }
        run.files.push_back({"min_rho.svg", svg_plot(xs, {q10, q50}, "q10 and median of min rho / L^(1/3)")});
      }
      return run;
    };
  });

  auto* ex = app.add_subcommand("exp-excursion-sos", "Rescaled open 1-contour against the Brownian excursion");
  ExcursionConfig exc;
  ex->add_option("--beta", exc.beta)->check(CLI::PositiveNumber);
  ex->add_option("--sizes", exc.sizes, "Box widths N");
  ex->add_option("--times", exc.times);
  ex->add_option("--samples", exc.samples)->check(CLI::PositiveNumber);
  ex->add_option("--chains", exc.chains)->check(CLI::PositiveNumber);
  ex->add_option("--height", exc.height);
  ex->add_option("--burn-in", exc.burn_in);
  ex->add_option("--thin", exc.thin);
  ex->add_option("--decoration", exc.decoration, "zero|sos");
  ex->add_option("--cutoff-min", exc.cutoff_min);
  ex->add_option("--cutoff-max", exc.cutoff_max);
  ex->add_option("--sigma-sq", exc.sigma_sq, "Fixed sigma^2 (skips the step-law estimate)");
  ex->add_option("--y-ref", exc.y_ref, "Reference height used with --sigma-sq");
  ex->add_option("--ref-half-len", exc.ref_half_len);
  ex->add_option("--ref-samples", exc.ref_samples);
  ex->callback([&] {
    job = [&] {
      exc.seed = common.seed;
      const ExcursionResult r = exp_excursion_sos(exc);
      Table s;
      s.columns = {"cutoff", "sigma_sq"};
      for (std::size_t i = 0; i < r.sigma.cutoffs.size(); ++i) s.add({num(r.sigma.cutoffs[i]), num(r.sigma.values[i])});
      Run run{"exp-excursion-sos", {{"excursion_ks.csv", r.table().csv()}, {"sigma.csv", s.csv()}}};
      if (common.svg) {
        std::vector<double> xs, ks;
        for (int N : exc.sizes) {
          xs.push_back(N);
          ks.push_back(r.ks(N, 0.5).value_or(NAN));
        }
        run.files.push_back({"excursion_ks.svg", svg_plot(xs, {ks}, "KS at t=1/2 against N")});
      }
      return run;
    };
  });

  auto* at = app.add_subcommand("exp-area-tilt", "Floored contour area against the area-tilted unfloored law");
  AreaTiltConfig atc;
  at->add_option("--beta", atc.beta)->check(CLI::PositiveNumber);
  at->add_option("--L", atc.L)->check(CLI::PositiveNumber);
  at->add_option("--n", atc.n);
  at->add_option("--c-inf", atc.c_inf);
  at->add_option("--level", atc.level);
  at->add_option("--sweeps", atc.sweeps)->check(CLI::PositiveNumber);
  at->add_option("--burn-in", atc.burn_in);
  at->add_option("--thin", atc.thin);
  at->callback([&] {
    job = [&] {
      atc.seed = common.seed;
      return Run{"exp-area-tilt", {{"area_tilt.csv", exp_area_tilt(atc).table().csv()}}};
    };
  });

  auto* oz = app.add_subcommand("exp-oz-battery", "Normalization, colinearity, mass gap, hitting and comparability checks");
  OzBatteryConfig ozc;
  std::vector<std::string> oz_dirs{"1,0"};
  oz->add_option("--beta", ozc.beta)->check(CLI::PositiveNumber);
  oz->add_option("--decoration", ozc.decoration, "zero|sos");
  oz->add_option("--directions", oz_dirs, "Directions x,y (an empty string gives none)");
  oz->add_option("--cutoff", ozc.cutoff);
  oz->add_option("--tilt-cutoff", ozc.tilt_cutoff);
  oz->add_option("--comparability-nmax", ozc.comparability_nmax);
  oz->callback([&] {
    job = [&] {
      ozc.directions.clear();
      for (const auto& d : oz_dirs)
        if (!d.empty()) ozc.directions.push_back(parse_site(d));
      return Run{"exp-oz-battery", {{"oz_battery.csv", exp_oz_battery(ozc).csv()}}};
    };
  });

  for (auto* sub : app.get_subcommands({})) sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (const char* env = std::getenv("SOSLAB_OUTPUT_DIR"); env && *env) common.out = env;

  try {
    RunManifest m;
    m.started = utc_timestamp();
    m.config_hash = sha256_hex(app.config_to_str(true, false));
    m.seeds = {common.seed};
    m.versions = module_versions();
    Run r = job();
    m.experiment = r.name;
    m.finished = utc_timestamp();
    write_outputs(common.out, m, r.files);
    std::vector<std::string> names;
    for (const auto& f : r.files) names.push_back(f.first);
    std::cout << r.name << ": wrote " << join(names) << " to " << common.out << "\n";
    for (const auto& f : r.files)
      if (f.first.ends_with(".csv") && f.second.size() < 4000) std::cout << f.second;
    return 0;
  } catch (const GuardError& e) {
    std::cerr << "guard: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
}
