#include "rbda/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <thread>

#include "rbda/error.hpp"
#include "rbda/poisson.hpp"
#include "rbda/rng.hpp"
#include "rbda/solver.hpp"

namespace rbda {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string progress_line(std::string_view who, std::int64_t step, const FieldSet& fs,
                          double courant, double fu, double ft) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%.*s step=%lld t=%.4f courant=%.4f max_div=%.3e ke=%.6e force_u=%.4e "
                "force_theta=%.4e",
                static_cast<int>(who.size()), who.data(), static_cast<long long>(step), fs.time,
                courant, divergence(fs).max_abs(), kinetic_energy(fs), fu, ft);
  return buf;
}

void fill_uniform(ScalarField& f, double half_width, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(-half_width, half_width);
  for (double& x : f.values()) x = dist(rng);
}

}  // namespace

FieldSet sample_random_state(const StaggeredGrid& grid, std::uint64_t seed) {
  FieldSet fs(grid);
  fill_uniform(fs.u, 0.1, derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::u)}));
  fill_uniform(fs.v, 0.1, derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::v)}));
  fill_uniform(fs.theta, 0.2, derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::theta)}));
  return apply_boundary_conditions(fs);
}

FieldSet random_initial_state(const StaggeredGrid& grid, std::uint64_t seed) {
  PoissonSolver solver(grid);
  FieldSet fs = project(sample_random_state(grid, seed), 1.0, solver);
  fs.pressure.fill(0.0);
  return fs;
}

const std::vector<ObservationFrame>& ReferenceRun::frames(ObservationKey key) const {
  const auto it = clean.find(key);
  if (it == clean.end()) {
    throw MissingInput("reference run holds no frames for R=" + std::to_string(key.r) +
                       ", S=" + std::to_string(key.s));
  }
  return it->second;
}

ReferenceRun run_reference(const ExperimentConfig& cfg, std::span<const ObservationKey> keys,
                           const LogSink& log, const SnapshotSink& snapshots) {
  cfg.validate();
  const auto t_start = Clock::now();
  const StaggeredGrid grid = cfg.grid();
  const PhysicsParams params = cfg.physics();
  PoissonSolver solver(grid);
  TimeStepper stepper(cfg.dt, cfg.cfl_limit);

  ReferenceRun run;
  run.config = cfg;
  std::vector<std::pair<ObservationKey, ObservationGrid>> grids;
  for (ObservationKey key : keys) {
    if (key.s < 1) throw ConfigError("temporal downscaling factor must be >= 1");
    if (run.clean.count(key)) continue;
    grids.emplace_back(key, ObservationGrid(grid, key.r));
    run.clean[key];
  }

  FieldSet fs = random_initial_state(grid, cfg.seed_reference);
  const std::int64_t spin = cfg.spinup_steps();
  for (std::int64_t n = 0; n < spin; ++n) {
    fs = step(fs, stepper, params, solver);
    if (log && (n + 1) % cfg.log_stride == 0) {
      log(progress_line("spinup", n + 1, fs, stepper.last_courant(), 0.0, 0.0));
    }
  }
  fs.time = 0.0;

  const std::int64_t steps = cfg.steps();
  const int snapshot_stride = cfg.effective_snapshot_stride();
  for (std::int64_t n = 0;; ++n) {
    if (n % cfg.metric_stride == 0) run.truth.push_back(fs);
    for (auto& [key, og] : grids) {
      if (n % key.s == 0) run.clean[key].push_back(subsample(fs, og, fs.time, key.s));
    }
    if (snapshots && n % snapshot_stride == 0) snapshots(fs, n);
    run.max_kinetic_energy = std::max(run.max_kinetic_energy, kinetic_energy(fs));
    if (log && n % cfg.log_stride == 0) {
      log(progress_line("reference", n, fs, stepper.last_courant(), 0.0, 0.0));
    }
    if (n == steps) break;
    fs = step(fs, stepper, params, solver);
    run.max_courant = std::max(run.max_courant, stepper.last_courant());
  }
  run.wall_seconds = seconds_since(t_start);
  return run;
}

MemberSpec member_spec(const ExperimentConfig& cfg, int index) {
  MemberSpec m;
  m.index = index;
  m.algorithm = cfg.algorithm;
  m.key = {cfg.r, cfg.s};
  m.sigma_theta = cfg.sigma_theta;
  m.sigma_u = cfg.sigma_u;
  m.mu_u = cfg.mu_u;
  m.mu_theta = cfg.mu_theta;
  m.noise_seed = cfg.seed_noise;
  m.initial_seed = derive_seed(cfg.seed_initial, {static_cast<std::uint64_t>(index)});
  return m;
}

const SkillSeries& MemberResult::find(Score score, Variable v) const {
  for (const SkillSeries& s : series) {
    if (s.score == score && s.variable == v) return s;
  }
  throw MissingInput("member " + std::to_string(spec.index) + " has no " +
                     std::string(to_string(score)) + " series for " +
                     std::string(to_string(v)));
}

namespace {

constexpr std::array<Variable, 3> all_variables{Variable::u, Variable::v, Variable::theta};
constexpr std::array<Score, 3> member_scores{Score::ae, Score::rmse, Score::rrmse};

double score_of(Score s, const ScalarField& d, const ScalarField& t) {
  switch (s) {
    case Score::ae: return abs_error(d, t);
    case Score::rmse: return rmse(d, t);
    default: return rrmse(d, t);
  }
}

}  // namespace

MemberResult run_member(const ExperimentConfig& cfg, std::span<const FieldSet> truth,
                        std::span<const ObservationFrame> clean, const MemberSpec& spec,
                        const LogSink& log) {
  const auto t_start = Clock::now();
  const StaggeredGrid grid = cfg.grid();
  const std::int64_t steps = cfg.steps();
  const auto needed = static_cast<std::size_t>(steps / cfg.metric_stride + 1);
  if (truth.size() < needed) {
    throw MissingInput("truth covers " + std::to_string(truth.size()) +
                       " metric times, horizon needs " + std::to_string(needed));
  }
  if (!(truth.front().grid() == grid)) throw ConfigError("truth was computed on another grid");

  MemberResult result;
  result.spec = spec;
  for (Score s : member_scores) {
    for (Variable v : all_variables) {
      result.series.push_back(SkillSeries{s, v, std::to_string(spec.index), {}, {}});
    }
  }

  const ObservationGrid og(grid, spec.key.r);
  const NoiseSpec noise{spec.sigma_theta, spec.sigma_u, spec.noise_seed};
  const std::vector<ObservationFrame> stream =
      perturb_stream(clean, noise, static_cast<std::uint64_t>(spec.index));
  const NudgingConfig ncfg{spec.algorithm, spec.mu_u, spec.mu_theta, spec.key.s};
  FieldSet initial = random_initial_state(grid, spec.initial_seed);
  initial.time = truth.front().time;
  TimeStepper stepper(cfg.dt, cfg.cfl_limit);
  const std::string who = std::string(to_string(spec.algorithm)) + "[" +
                          std::to_string(spec.index) + "]";

  const StepObserver observer = [&](const FieldSet& fs, std::int64_t n) {
    if (n % cfg.metric_stride == 0) {
      const FieldSet& tr = truth[static_cast<std::size_t>(n / cfg.metric_stride)];
      result.times.push_back(fs.time);
      std::size_t k = 0;
      for (Score s : member_scores) {
        for (Variable v : all_variables) {
          result.series[k++].append(fs.time, score_of(s, field_of(fs, v), field_of(tr, v)));
        }
      }
      for (Variable v : all_variables) {
        result.l2[static_cast<std::size_t>(v)].push_back(
            lambda(std::span<const ScalarField>(&field_of(fs, v), 1), field_of(tr, v)));
      }
    }
    if (n % cfg.field_stride == 0 || n == steps) result.fields.push_back(fs);
    if (log && n % cfg.log_stride == 0) {
      const ObservationFrame& frame = stream[static_cast<std::size_t>(n / spec.key.s)];
      const ForcingTerm f = cda_forcing(fs, frame, og, ncfg);
      log(progress_line(who, n, fs, stepper.last_courant(), f.max_abs_u(), f.max_abs_theta()));
    }
  };

  try {
    const DownscalingResult d =
        run_downscaling(initial, stream, og, ncfg, cfg.physics(), stepper, steps, observer);
    result.ok = true;
    result.max_forcing_u = d.max_forcing_u;
    result.max_forcing_theta = d.max_forcing_theta;
    result.max_courant = d.max_courant;
  } catch (const NumericalBlowup& e) {
    result.error = e.what();
    result.exit_code = static_cast<int>(e.exit_code());
  } catch (const SolverFailure& e) {
    result.error = e.what();
    result.exit_code = static_cast<int>(e.exit_code());
  }
  if (!result.ok && log) log(who + " failed: " + result.error);
  result.wall_seconds = seconds_since(t_start);
  return result;
}

int default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double window_mean(const std::vector<double>& times, const std::vector<double>& values,
                   double t_start) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= t_start - 1e-12) {
      acc += values[i];
      ++count;
    }
  }
  if (count == 0) throw UndefinedMetric("plateau window holds no samples");
  return acc / static_cast<double>(count);
}

double plateau_onset(const SkillSeries& series, double window, double tolerance) {
  const auto& t = series.times;
  const auto& y = series.values;
  if (t.empty()) throw UndefinedMetric("plateau of an empty series");
  auto slope_from = [&](std::size_t i0) -> std::optional<double> {
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (std::size_t i = i0; i < t.size() && t[i] <= t[i0] + window + 1e-12; ++i) {
      if (!(y[i] > 0.0)) continue;
      const double ly = std::log10(y[i]);
      st += t[i];
      sy += ly;
      stt += t[i] * t[i];
      sty += t[i] * ly;
      ++n;
    }
    if (n < 3) return std::nullopt;
    const double dn = static_cast<double>(n);
    const double den = dn * stt - st * st;
    if (den == 0.0) return std::nullopt;
    return (dn * sty - st * sy) / den;
  };
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] + window > t.back() + 1e-12) break;
    bool flat = true;
    for (std::size_t j = i; j < t.size() && t[j] + window <= t.back() + 1e-12; ++j) {
      const auto s = slope_from(j);
      if (s && std::abs(*s) > tolerance) {
        flat = false;
        break;
      }
    }
    if (flat) return t[i];
  }
  return t.back();
}

EnsembleStats ensemble_stats(std::span<const MemberResult> members,
                             std::span<const FieldSet> truth,
                             double plateau_fraction) {
  EnsembleStats st;
  std::vector<const MemberResult*> ok;
  for (const MemberResult& m : members) {
    if (m.ok) {
      ok.push_back(&m);
    } else {
      ++st.members_failed;
    }
  }
  st.members_ok = ok.size();
  if (ok.empty()) throw UndefinedMetric("no member of the ensemble completed");
  const std::vector<double>& times = ok.front()->times;
  for (const MemberResult* m : ok) {
    if (m->times != times || m->fields.size() != ok.front()->fields.size()) {
      throw ConfigError("ensemble members were recorded on different time axes");
    }
  }
  const double horizon = times.back();
  st.plateau_start = times.front() + plateau_fraction * (horizon - times.front());

  for (Variable v : all_variables) {
    const auto vi = static_cast<std::size_t>(v);
    SkillSeries lam{Score::lambda, v, std::string(ensemble_member), {}, {}};
    for (std::size_t i = 0; i < times.size(); ++i) {
      double acc = 0.0;
      for (const MemberResult* m : ok) acc += m->l2[vi][i];
      lam.append(times[i], acc / static_cast<double>(ok.size()));
    }
    st.lambda_final[vi] = lam.last();
    st.lambda_plateau[vi] = window_mean(lam.times, lam.values, st.plateau_start);
    st.series.push_back(std::move(lam));
  }

  std::vector<ScalarField> slice;
  slice.reserve(ok.size());
  for (Variable v : all_variables) {
    const auto vi = static_cast<std::size_t>(v);
    SkillSeries spread{Score::aes, v, std::string(ensemble_member), {}, {}};
    if (ok.size() >= 2) {
      for (std::size_t j = 0; j < ok.front()->fields.size(); ++j) {
        slice.clear();
        for (const MemberResult* m : ok) slice.push_back(field_of(m->fields[j], v));
        spread.append(ok.front()->fields[j].time, aes(slice));
      }
      st.aes_final[vi] = spread.last();
    }
    st.series.push_back(std::move(spread));

    slice.clear();
    for (const MemberResult* m : ok) slice.push_back(field_of(m->final_state(), v));
    st.mean_solution_rrmse[vi] = rrmse(ensemble_mean(slice), field_of(truth.back(), v));
    for (const MemberResult* m : ok) {
      const SkillSeries& rr = m->find(Score::rrmse, v);
      st.member_rrmse_final[vi].push_back(rr.last());
      st.member_rrmse_plateau[vi].push_back(window_mean(rr.times, rr.values, st.plateau_start));
    }
  }
  return st;
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("fit needs as many abscissae as ordinates");
  if (x.size() < 3) {
    throw ConfigError("fit refused: " + std::to_string(x.size()) +
                      " sweep points, at least 3 are required");
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ConfigError("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("log-log fit needs distinct abscissae");
  LogLogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.points = lx.size();
  return f;
}

}  // namespace rbda
