#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ubmc/couplings.hpp"
#include "ubmc/errors.hpp"
#include "ubmc/estimator.hpp"
#include "ubmc/gaussian_linear.hpp"
#include "ubmc/harness/baseline.hpp"
#include "ubmc/harness/config.hpp"
#include "ubmc/independence_sampler.hpp"
#include "ubmc/models/circle.hpp"
#include "ubmc/models/contracting_normals.hpp"
#include "ubmc/models/elliptic.hpp"
#include "ubmc/models/logistic.hpp"
#include "ubmc/pcn.hpp"
#include "ubmc/schedule.hpp"
#include "ubmc/survival.hpp"
#include "ubmc/tuning.hpp"

namespace ubmc::harness {

/// Per-draw CSV text and the JSON summary of one run.
struct RunOutput {
  std::string csv;
  json summary;
};

namespace detail {

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <EstimandValue V>
std::string draws_csv(const BatchResult<V>& b) {
  const std::size_t k = b.mean.size();
  std::string out = "replicate,N,";
  if (k == 1) {
    out += "z";
  } else {
    for (std::size_t c = 0; c < k; ++c) out += (c ? ",z_" : "z_") + std::to_string(c + 1);
  }
  out += ",work,level_max_dim\n";
  for (std::size_t r = 0; r < b.draws.size(); ++r) {
    const auto& d = b.draws[r];
    out += std::to_string(r) + "," + std::to_string(d.level);
    for (double z : value::components(d.value)) out += "," + fmt(z);
    out += "," + fmt(d.work) + "," + std::to_string(d.level_max_dim) + "\n";
  }
  return out;
}

inline json scalar_or_array(const std::vector<double>& v) {
  if (v.size() == 1) return v[0];
  return v;
}

/// Moments, work and the empirical MSE-work product. With a reference the MSE
/// is mean ‖Z − ref‖², otherwise the summed variance.
template <EstimandValue V>
json batch_summary(const BatchResult<V>& b, const std::optional<std::vector<double>>& reference) {
  json s;
  s["replicates"] = b.draws.size();
  s["mean"] = scalar_or_array(b.mean);
  s["variance"] = scalar_or_array(b.variance);
  s["standard_error"] = scalar_or_array(b.standard_error);
  s["expected_work"] = b.mean_work;
  double mse = 0.0;
  if (reference) {
    for (const auto& d : b.draws) {
      const auto z = value::components(d.value);
      for (std::size_t c = 0; c < z.size(); ++c) mse += (z[c] - (*reference)[c]) * (z[c] - (*reference)[c]);
    }
    mse /= static_cast<double>(b.draws.size());
    s["reference"] = scalar_or_array(*reference);
    std::vector<double> zscore(b.mean.size());
    for (std::size_t c = 0; c < zscore.size(); ++c)
      zscore[c] = b.standard_error[c] > 0.0 ? (b.mean[c] - (*reference)[c]) / b.standard_error[c] : 0.0;
    s["z_score"] = scalar_or_array(zscore);
  } else {
    for (double v : b.variance) mse += v;
  }
  s["mse"] = mse;
  s["msework_product"] = mse * b.mean_work;
  return s;
}

inline LevelSchedule fixed_schedule(Params& s, std::uint64_t default_m, std::size_t default_levels) {
  if (s.has("steps")) return LevelSchedule(s.integers("steps"));
  const auto levels = static_cast<std::size_t>(s.integer("levels", default_levels));
  if (s.has("slope")) {
    const auto slope = s.integer("slope");
    return LevelSchedule::affine(slope, s.integer("offset", slope), levels);
  }
  const auto m = s.integer("m", default_m);
  return LevelSchedule::affine(m, m, levels);
}

inline const std::vector<std::string>& explicit_kinds() {
  static const std::vector<std::string> k = {"geometric", "polynomial", "tabulated"};
  return k;
}

inline SurvivalDistribution explicit_survival(Params& p, const std::string& kind) {
  if (kind == "geometric") return SurvivalDistribution::geometric(p.number("rate"), p.number("exponent", 1.0));
  if (kind == "polynomial") return SurvivalDistribution::polynomial(p.number("t"));
  require(kind == "tabulated", "unknown survival kind " + kind);
  auto head = p.numbers("values");
  const auto tail = p.choice("tail", {"zero", "geometric"}, "zero");
  if (tail == "zero") return SurvivalDistribution::tabulated(std::move(head));
  return SurvivalDistribution::tabulated(std::move(head), SurvivalDistribution::Tail::geometric,
                                         p.number("tail_ratio"));
}

/// Survival spec with one extra experiment-specific kind (e.g. "optimal").
template <class Special>
SurvivalDistribution parse_survival(const json& spec, const std::string& special_kind, bool special_available,
                                    const Special& special) {
  Params p(spec, "survival");
  std::vector<std::string> kinds = explicit_kinds();
  if (!special_kind.empty()) kinds.push_back(special_kind);
  const std::string fallback = special_available ? special_kind : "";
  if (!p.has("kind") && fallback.empty()) throw ValidationError("missing required parameter survival.kind");
  const std::string kind = p.choice("kind", kinds, fallback);
  std::optional<SurvivalDistribution> out;
  if (kind == special_kind && !special_kind.empty()) {
    require(special_available, "survival.kind = \"" + special_kind + "\" is not available for this schedule");
    out = special();
  } else {
    out = explicit_survival(p, kind);
  }
  p.finish();
  return *out;
}

struct Baseline {
  std::uint64_t steps = 0;
  std::uint64_t restarts = 200;
  std::uint64_t resamples = 1000;
};

inline std::optional<Baseline> parse_baseline(const json& spec) {
  if (spec.is_null()) return std::nullopt;
  Params p(spec, "baseline");
  Baseline b;
  b.steps = p.integer("steps");
  b.restarts = p.integer("restarts", b.restarts);
  b.resamples = p.integer("resamples", b.resamples);
  p.finish();
  require(b.steps >= 1 && b.restarts >= 2, "baseline needs steps ≥ 1 and restarts ≥ 2");
  return b;
}

inline EstimatorSample sample_of(const BatchResult<double>& b) {
  EstimatorSample s;
  for (const auto& d : b.draws) {
    s.values.push_back(d.value);
    s.work.push_back(d.work);
  }
  return s;
}

inline json comparison_json(const ErgodicResult& e, const Comparison& c, std::uint64_t steps) {
  return {{"baseline_mse", e.mse},
          {"baseline_mse_times_work", e.mse * e.work},
          {"baseline_steps", steps},
          {"baseline_restarts", e.averages.size()},
          {"baseline_product", c.baseline_product},
          {"unbiased_product", c.unbiased_product},
          {"ratio", c.ratio},
          {"ratio_ci_low", c.ci_low},
          {"ratio_ci_high", c.ci_high},
          {"resamples", c.resamples}};
}

/// f(x) = x_k on a vector state, 0 past its end.
struct CoordinateFn {
  std::size_t index = 1;
  double operator()(std::span<const double> x) const { return index <= x.size() ? x[index - 1] : 0.0; }
};

/// f(x) = Σ_k x_k.
struct SumFn {
  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
};

template <class Fn>
auto timed(bool enabled, json& summary, const Fn& body) {
  const auto start = std::chrono::steady_clock::now();
  auto result = body();
  if (enabled)
    summary["wall_clock_ns"] =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline json schedule_json(const LevelSchedule& s, std::size_t shown = 8) {
  json j;
  std::vector<std::uint64_t> a(s.steps().begin(), s.steps().begin() + std::min(shown, s.levels()));
  j["levels"] = s.levels();
  j["steps_head"] = a;
  if (s.transdimensional()) {
    std::vector<std::uint64_t> d(s.dims().begin(), s.dims().begin() + std::min(shown, s.levels()));
    j["dims_head"] = d;
  }
  return j;
}

template <EstimandValue V>
RunOutput finish_run(const ExperimentConfig& c, const BatchResult<V>& b, json summary,
                     const std::optional<std::vector<double>>& reference) {
  json s = batch_summary(b, reference);
  for (auto& [k, v] : summary.items()) s[k] = v;
  s["experiment"] = c.experiment;
  s["seed"] = c.seed;
  s["config"] = c.echo();
  return {draws_csv(b), s};
}

}  // namespace detail

inline RunOutput run_contracting_normals(const ExperimentConfig& c) {
  Params m(c.model, "model");
  const double rho = m.number("rho");
  const double x0 = m.number("x0", 0.0);
  m.finish();
  const models::ContractingNormals cn(rho);
  Params s(c.schedule, "schedule");
  const auto schedule = detail::fixed_schedule(s, 4, 200);
  s.finish();
  Params f(c.functional, "functional");
  f.choice("kind", {"identity"}, "identity");
  f.finish();
  std::vector<double> ts(schedule.steps().begin(), schedule.steps().end());
  const auto nus = tuning::nu_contracting_normals(rho, schedule.steps());
  const auto survival = detail::parse_survival(c.survival, "optimal", x0 == 0.0,
                                               [&] { return tuning::optimal_survival(nus, ts).survival; });
  const auto baseline = detail::parse_baseline(c.baseline);

  json extra;
  extra["schedule"] = detail::schedule_json(schedule);
  if (x0 == 0.0) {
    const auto report = tuning::msework_report(nus, ts, survival);
    extra["analytic"] = {{"second_moment", second_moment_formula(nus, survival)},
                         {"expected_work", report.expected_work},
                         {"msework_product", report.product}};
  }
  auto gen = [&](std::size_t level, Stream& rng) {
    return coupled_contraction_delta<double>(cn, cn, schedule, level, x0, [](double x) { return x; }, rng);
  };
  const auto batch = detail::timed(c.wall_clock, extra, [&] {
    return estimate_batch<double>(gen, survival, c.replicates, c.seed, {c.parallel, false});
  });
  if (baseline) {
    const auto erg = ergodic_baseline<double>(cn, [](double x) { return x; }, x0, baseline->steps,
                                              baseline->restarts, c.seed, 0.0, c.parallel);
    EstimatorSample base{erg.averages, std::vector<double>(erg.averages.size(), erg.work)};
    const auto cmp = compare_msework(base, detail::sample_of(batch), 0.0, baseline->resamples, c.seed);
    extra["comparison"] = detail::comparison_json(erg, cmp, baseline->steps);
    extra["comparison"]["ergodic_limit"] = tuning::ergodic_msework_limit(rho);
  }
  return detail::finish_run(c, batch, extra, std::vector<double>{0.0});
}

inline RunOutput run_circle(const ExperimentConfig& c) {
  Params m(c.model, "model");
  const double x0 = models::CircleChain::wrap(m.number("x0", 0.0));
  m.finish();
  Params s(c.schedule, "schedule");
  const auto schedule = detail::fixed_schedule(s, 2, 200);
  s.finish();
  Params f(c.functional, "functional");
  const bool use_sin = f.choice("kind", {"cos", "sin"}, "cos") == "sin";
  f.finish();
  const auto survival = c.survival.empty() ? SurvivalDistribution::geometric(0.5, 1.0)
                                           : detail::parse_survival(c.survival, "", false, [] {
                                               return SurvivalDistribution::geometric(0.5, 1.0);
                                             });
  const models::CircleChain chain;
  auto fn = [use_sin](double x) { return use_sin ? std::sin(x) : std::cos(x); };
  auto gen = [&](std::size_t level, Stream& rng) {
    return coupled_contraction_delta<double>(chain, chain, schedule, level, x0, fn, rng);
  };
  json extra;
  extra["schedule"] = detail::schedule_json(schedule);
  const auto batch = detail::timed(c.wall_clock, extra, [&] {
    return estimate_batch<double>(gen, survival, c.replicates, c.seed, {c.parallel, false});
  });
  return detail::finish_run(c, batch, extra, std::vector<double>{0.0});
}

inline RunOutput run_linear_gaussian(const ExperimentConfig& c) {
  namespace gl = gaussian_linear;
  Params m(c.model, "model");
  const double p = m.number("p", 0.0);
  const double a = m.number("a", 2.0);
  const double lower = m.number("data_lower", 0.5);
  const double upper = m.number("data_upper", 1.5);
  m.finish();
  const gl::Model model(p, a, gl::Model::golden_data(lower, upper));

  Params s(c.schedule, "schedule");
  const auto theorem = s.choice("theorem", {"holder-truncation", "linear-tail", "none"}, "holder-truncation");
  std::vector<std::uint64_t> dims;
  std::optional<SurvivalDistribution> theorem_survival;
  bool prior_tail = theorem == "linear-tail";
  if (theorem != "none") {
    const auto geometry = s.choice("geometry", {"dyadic", "polynomial"}, "dyadic");
    gl::TheoremParams prm;
    prm.a = a;
    prm.p = p;
    prm.s = s.number("s", 1.0);
    prm.q = s.number("q", prm.q);
    prm.epsilon = s.number("epsilon", prm.epsilon);
    prm.levels = static_cast<std::size_t>(s.integer("levels", prm.levels));
    auto ts = gl::theorem_schedule(theorem == "linear-tail" ? gl::Variant::linear_tail : gl::Variant::holder_truncation,
                                   geometry == "dyadic" ? gl::Geometry::dyadic : gl::Geometry::polynomial, prm);
    dims = std::move(ts.dims);
    theorem_survival = ts.survival;
  } else {
    dims = s.integers("dims");
    require_strictly_increasing(dims, "dimension");
    prior_tail = s.choice("estimator", {"truncation", "prior-tail"}, "truncation") == "prior-tail";
  }
  s.finish();

  Params f(c.functional, "functional");
  const auto kind = f.choice("kind", {"coordinate", "linear"}, "coordinate");
  const gl::LinearFunctional fn = kind == "coordinate"
                                      ? gl::LinearFunctional::coordinate(static_cast<std::size_t>(f.integer("index", 1)))
                                      : gl::LinearFunctional{f.numbers("coefficients")};
  f.finish();
  require(!fn.coefficients.empty(), "functional.coefficients must be nonempty");

  const auto survival = detail::parse_survival(c.survival, "theorem", theorem_survival.has_value(),
                                               [&] { return *theorem_survival; });
  double reference = 0.0;
  for (std::size_t ell = 1; ell <= fn.coefficients.size(); ++ell)
    reference += fn.coefficient(ell) * model.posterior(ell).mean;

  auto gen = [&](std::size_t level, Stream& rng) {
    return prior_tail ? gl::prior_tail_delta(model, dims, level, fn, rng)
                      : gl::truncation_delta(model, dims, level, fn, rng);
  };
  json extra;
  extra["estimator"] = prior_tail ? "prior-tail" : "truncation";
  std::vector<std::uint64_t> head(dims.begin(), dims.begin() + std::min<std::size_t>(8, dims.size()));
  extra["schedule"] = {{"levels", dims.size()}, {"dims_head", head}};
  const auto batch = detail::timed(c.wall_clock, extra, [&] {
    return estimate_batch<double>(gen, survival, c.replicates, c.seed, {c.parallel, false});
  });
  return detail::finish_run(c, batch, extra, std::vector<double>{reference});
}

inline RunOutput run_indep_sampler(const ExperimentConfig& c) {
  Params m(c.model, "model");
  const double gamma = m.number("gamma", 4.0);
  const auto points = m.numbers("observation_points", {0.25, 0.5, 0.75});
  const double alpha = m.number("alpha_star", 0.0);
  const models::Elliptic ell(gamma, points);
  auto data = m.has("data") ? m.numbers("data") : ell.synthetic_data();
  m.finish();
  require(data.size() == points.size(), "model.data must have one value per observation point");
  const auto model = ell.prior_model(data, alpha);

  Params f(c.functional, "functional");
  const auto kind = f.choice("kind", {"sum", "coordinate"}, "sum");
  const auto index = static_cast<std::size_t>(f.integer("index", 1));
  f.finish();
  require(index >= 1, "functional.index must be ≥ 1");

  Params s(c.schedule, "schedule");
  std::optional<independence::Theorem5Schedule> th;
  std::optional<LevelSchedule> explicit_schedule;
  if (s.has("steps")) {
    explicit_schedule.emplace(s.integers("steps"), s.integers("dims"));
    require(explicit_schedule->transdimensional(), "schedule.dims is required");
  } else {
    const double kappa = s.number("kappa", 2.0 * (gamma - 1.0));
    th = independence::theorem5_schedule(s.number("q", 2.0), ell.beta(), kappa, ell.theta(), model.alpha_star,
                                         s.number("t", 4.75), static_cast<std::size_t>(s.integer("levels", 40)));
  }
  s.finish();
  const LevelSchedule& schedule = th ? th->schedule : *explicit_schedule;
  model.validate(static_cast<std::size_t>(schedule.dim(schedule.levels() - 1)));
  const auto survival = detail::parse_survival(c.survival, "theorem", th.has_value(), [&] { return th->survival; });

  const std::vector<double> x0(static_cast<std::size_t>(schedule.dim(0)), 0.0);
  const bool use_sum = kind == "sum";
  auto fn = [use_sum, index](std::span<const double> x) {
    return use_sum ? detail::SumFn{}(x) : detail::CoordinateFn{index}(x);
  };
  auto gen = [&](std::size_t level, Stream& rng) {
    return independence::unbiased_is_delta(model, schedule, level, fn, x0, rng);
  };
  json extra;
  extra["alpha_star"] = model.alpha_star;
  extra["schedule"] = detail::schedule_json(schedule);
  if (th) extra["c_star"] = th->c_star;
  const auto batch = detail::timed(c.wall_clock, extra, [&] {
    return estimate_batch<double>(gen, survival, c.replicates, c.seed, {c.parallel, false});
  });
  return detail::finish_run(c, batch, extra, std::nullopt);
}

inline RunOutput run_pcn(const ExperimentConfig& c) {
  Params m(c.model, "model");
  pcn::Model model;
  model.rho = m.number("rho", 0.5);
  model.regularity = m.number("regularity", 2.0);
  model.cost_exponent = m.number("theta", 1.0);
  const auto potential = m.choice("potential", {"zero", "norm", "bounded"}, "zero");
  m.finish();
  const double reg = model.regularity;
  model.lambda = [reg](std::size_t l) { return std::pow(static_cast<double>(l), -2.0 * reg); };
  if (potential == "zero") {
    model.potential = [](std::span<const double>) { return 0.0; };
  } else if (potential == "norm") {
    model.potential = [](std::span<const double> x) { return pcn::norm(x); };
  } else {
    model.potential = [](std::span<const double> x) { return std::min(1.0, pcn::norm(x)); };
  }
  model.lipschitz = potential == "zero" ? 0.0 : 1.0;

  Params f(c.functional, "functional");
  f.choice("kind", {"coordinate"}, "coordinate");
  const auto index = static_cast<std::size_t>(f.integer("index", 1));
  f.finish();
  require(index >= 1, "functional.index must be ≥ 1");

  Params s(c.schedule, "schedule");
  std::optional<pcn::Theorem67Schedule> th;
  std::optional<LevelSchedule> explicit_schedule;
  if (s.has("steps")) {
    explicit_schedule.emplace(s.integers("steps"), s.integers("dims"));
  } else {
    const auto regime = s.choice("theorem", {"bounded", "unbounded"}, potential == "norm" ? "unbounded" : "bounded");
    th = pcn::theorem67_schedule(reg, regime == "bounded" ? pcn::Regime::bounded : pcn::Regime::unbounded,
                                 s.integer("m", 2), s.number("r", 0.5), model.cost_exponent,
                                 s.number("epsilon", 0.5), static_cast<std::size_t>(s.integer("levels", 40)));
  }
  s.finish();
  const LevelSchedule& schedule = th ? th->schedule : *explicit_schedule;
  require(schedule.transdimensional(), "pcn schedule needs dimensions");
  model.validate(static_cast<std::size_t>(std::min<std::uint64_t>(schedule.dim(schedule.levels() - 1), 1u << 16)));
  const auto survival = detail::parse_survival(c.survival, "theorem", th.has_value(), [&] { return th->survival; });

  const detail::CoordinateFn fn{index};
  auto gen = [&](std::size_t level, Stream& rng) {
    return pcn::unbiased_pcn_delta(model, schedule, level, fn, std::span<const double>{}, rng);
  };
  json extra;
  extra["schedule"] = detail::schedule_json(schedule);
  const auto batch = detail::timed(c.wall_clock, extra, [&] {
    return estimate_batch<double>(gen, survival, c.replicates, c.seed, {c.parallel, false});
  });
  // Every potential here is even, so each coordinate has posterior mean 0.
  return detail::finish_run(c, batch, extra, std::vector<double>{0.0});
}

inline RunOutput run_logistic(const ExperimentConfig& c) {
  Params m(c.model, "model");
  const auto rows = static_cast<std::size_t>(m.integer("rows", 100));
  const auto design_seed = m.integer("design_seed", 2019);
  const double rho = m.number("rho", 0.6);
  const auto rwm_steps = static_cast<std::size_t>(m.integer("rwm_steps", 100'000));
  const double rwm_step = m.number("rwm_step", 0.35);
  const auto reference_kind = m.choice("reference", {"fit", "identity"}, "fit");
  const auto start = m.choice("start", {"center", "zero"}, "center");
  const auto reference_steps = m.integer("reference_steps", 1'000'000);
  m.finish();
  require(rows >= 1, "model.rows must be ≥ 1");

  Params f(c.functional, "functional");
  f.choice("kind", {"coordinate"}, "coordinate");
  const auto index = static_cast<std::size_t>(f.integer("index", 1));
  f.finish();
  require(index >= 1 && index <= 3, "functional.index must lie in [1, 3]");

  Params s(c.schedule, "schedule");
  const auto schedule = detail::fixed_schedule(s, 10, 400);
  s.finish();
  const auto survival = c.survival.empty() ? SurvivalDistribution::geometric(0.5, 1.0)
                                           : detail::parse_survival(c.survival, "", false, [] {
                                               return SurvivalDistribution::geometric(0.5, 1.0);
                                             });
  const auto baseline = detail::parse_baseline(c.baseline);

  const auto data = models::Logistic::synthetic(rows, design_seed);
  const auto fit = models::logistic_reference_fit(data, rwm_steps, c.seed, rwm_step);
  const auto model = reference_kind == "fit" ? models::modified_pcn(data, rho, fit.center, fit.cholesky)
                                             : models::plain_pcn(data, rho);
  const std::vector<double> x0 = start == "center" ? fit.center : std::vector<double>(3, 0.0);
  const detail::CoordinateFn fn{index};
  auto gen = [&](std::size_t level, Stream& rng) {
    return pcn::unbiased_pcn_delta(model, schedule, level, fn, x0, rng, 3);
  };
  json extra;
  extra["schedule"] = detail::schedule_json(schedule);
  extra["fit"] = {{"center", fit.center}, {"covariance", fit.covariance}, {"rwm_acceptance", fit.acceptance_rate}};
  const auto batch = detail::timed(c.wall_clock, extra, [&] {
    return estimate_batch<double>(gen, survival, c.replicates, c.seed, {c.parallel, false});
  });
  auto kernel = [&model](const pcn::State& x, Stream& rng) {
    return pcn::pcn_step(model, x, pcn::draw_noise(model, 3, rng)).state;
  };
  auto coord = [index](const pcn::State& x) { return x.x[index - 1]; };
  if (!baseline) return detail::finish_run(c, batch, extra, std::nullopt);

  // Long-run reference value for the MSE of both sides.
  Stream ref_rng(StreamKey::root(c.seed).child(Phase::pilot).child(1));
  pcn::State x = pcn::make_state(model, x0);
  double sum = 0.0;
  for (std::uint64_t k = 0; k < reference_steps; ++k) {
    x = kernel(x, ref_rng);
    sum += coord(x);
  }
  const double reference = sum / static_cast<double>(std::max<std::uint64_t>(1, reference_steps));
  const auto erg = ergodic_baseline<pcn::State>(kernel, coord, pcn::make_state(model, x0), baseline->steps,
                                                baseline->restarts, c.seed, reference, c.parallel);
  EstimatorSample base{erg.averages, std::vector<double>(erg.averages.size(), erg.work)};
  const auto cmp = compare_msework(base, detail::sample_of(batch), reference, baseline->resamples, c.seed);
  extra["comparison"] = detail::comparison_json(erg, cmp, baseline->steps);
  extra["comparison"]["reference_steps"] = reference_steps;
  return detail::finish_run(c, batch, extra, std::vector<double>{reference});
}

/// Tuning tables: closed-form optimum per ρ and, optionally, the
/// partial-knowledge survival for a bound rate ρ̃. CSV columns differ from the
/// estimator experiments.
inline RunOutput run_tune(const ExperimentConfig& c) {
  Params m(c.model, "model");
  std::vector<double> grid;
  for (int k = 0; k < 10; ++k) grid.push_back(0.5 + 0.05 * k);
  grid = m.numbers("rho_grid", grid);
  const bool has_w = m.has("w");
  const double w = has_w ? m.number("w") : tuning::optimal_w();
  const bool partial = m.has("partial_rho");
  const double partial_rho = m.number("partial_rho", 0.5);
  const auto i0 = static_cast<std::size_t>(m.integer("partial_i0", 3));
  const auto bounds = m.numbers("partial_bounds", {0.6, 0.7, 0.8});
  const auto partial_m = m.integer("partial_m", 1);
  const auto partial_levels = static_cast<std::size_t>(m.integer("partial_levels", 200));
  m.finish();
  Params(c.schedule, "schedule").finish();
  Params(c.survival, "survival").finish();
  Params(c.functional, "functional").finish();
  require(c.baseline.is_null(), "tune takes no baseline");
  require(w < 0.0, "model.w must be negative");
  for (double r : grid) require(r > 0.0 && r < 1.0, "model.rho_grid entries must lie in (0, 1)");

  json summary;
  summary["experiment"] = c.experiment;
  summary["seed"] = c.seed;
  summary["optimal_w"] = w;
  std::string csv = "rho,m,closed_form,ergodic_limit,ratio\n";
  json rows = json::array();
  for (double rho : grid) {
    const auto mm = tuning::optimal_m(rho, w);
    const double closed = tuning::unbiased_msework_closed_form(rho, mm);
    const double limit = tuning::ergodic_msework_limit(rho);
    csv += detail::fmt(rho) + "," + std::to_string(mm) + "," + detail::fmt(closed) + "," + detail::fmt(limit) + "," +
           detail::fmt(closed / limit) + "\n";
    rows.push_back({{"rho", rho}, {"m", mm}, {"closed_form", closed}, {"ergodic_limit", limit}, {"ratio", closed / limit}});
  }
  summary["rows"] = rows;
  if (partial) {
    require(partial_rho > 0.0 && partial_rho < 1.0, "model.partial_rho must lie in (0, 1)");
    require(i0 >= 1 && partial_levels > i0 + 1, "partial knowledge needs i0 ≥ 1 and more levels than i0 + 1");
    const auto a = LevelSchedule::affine(partial_m, partial_m, partial_levels);
    const auto nus = tuning::nu_contracting_normals(partial_rho, a.steps());
    std::vector<double> ts(a.steps().begin(), a.steps().end());
    const auto exact = tuning::optimal_survival(nus, ts);
    json pk = json::array();
    for (double rb : bounds) {
      require(rb >= partial_rho && rb < 1.0, "partial bounds must lie in [partial_rho, 1)");
      const auto r = tuning::partial_knowledge_optimize(std::span<const double>(nus).first(i0 + 1), rb, a.steps(),
                                                        partial_levels - 1);
      pk.push_back({{"rho_bound", rb}, {"product", r.product}, {"tail_constant", r.tail_constant}, {"head", r.head}});
    }
    summary["partial_knowledge"] = {{"rho", partial_rho}, {"i0", i0}, {"m", partial_m},
                                    {"exact_optimum", exact.product}, {"bounds", pk}};
  }
  summary["config"] = c.echo();
  return {csv, summary};
}

inline RunOutput run_experiment(const ExperimentConfig& c) {
  require(c.baseline.is_null() || c.experiment == "contracting-normals" || c.experiment == "logistic",
          "experiment \"" + c.experiment + "\" takes no baseline");
  if (c.experiment == "contracting-normals") return run_contracting_normals(c);
  if (c.experiment == "circle") return run_circle(c);
  if (c.experiment == "linear-gaussian") return run_linear_gaussian(c);
  if (c.experiment == "indep-sampler") return run_indep_sampler(c);
  if (c.experiment == "pcn") return run_pcn(c);
  if (c.experiment == "logistic") return run_logistic(c);
  if (c.experiment == "tune") return run_tune(c);
  throw ValidationError("unknown experiment \"" + c.experiment + "\"");
}

/// dir/draws.csv and dir/summary.json, LF line endings.
inline void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [](const std::filesystem::path& file, const std::string& text) {
    std::ofstream o(file, std::ios::binary);
    if (!o) throw std::runtime_error("cannot open " + file.string() + " for writing");
    o << text;
    if (!o) throw std::runtime_error("failed writing " + file.string());
  };
  write(dir / "draws.csv", out.csv);
  write(dir / "summary.json", out.summary.dump(2) + "\n");
}

}  // namespace ubmc::harness
