#include "kickedtop/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "kickedtop/classical_top.hpp"
#include "kickedtop/coupled_tops.hpp"
#include "kickedtop/quantum_top.hpp"

namespace kickedtop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

CoherentParams first_top(const InitialPair& p) { return {p.theta1, p.phi1}; }
CoherentParams second_top(const InitialPair& p) { return {p.theta2, p.phi2}; }

double tilde_gamma0(double epsilon, double j) { return 2.0 * std::pow(epsilon, 1.8) * j * j * kD0; }

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

RateSettings rate_settings(const ExperimentConfig& c) {
  RateSettings s;
  s.j = c.j;
  s.epsilon = c.epsilon;
  s.steps = c.steps;
  s.fit = {c.fit_start, c.fit_end};
  s.ensemble = c.ensemble;
  s.sigma = c.classical_sigma();
  s.lyapunov_steps = c.lyapunov_steps;
  s.seed = c.seed;
  s.lag = {c.lag_start_fraction, c.zero_padding};
  s.von_neumann = c.von_neumann;
  s.norm_tolerance = c.norm_tolerance;
  return s;
}

RateRow measure_rates(double k1, double k2, const InitialPair& initial, const RateSettings& s) {
  RateRow row;
  row.k1 = k1;
  row.k2 = k2;
  row.initial = initial;

  const EntropySeries series = entropy_series(CoupledParams(s.j, k1, k2, s.epsilon), first_top(initial),
                                              second_top(initial), s.steps, {s.von_neumann, s.norm_tolerance});
  row.gamma_ratio = production_rate(series.times, series.linear, s.fit) / (s0(s.epsilon, s.j) * kD0);
  row.gamma_vn_ratio =
      s.von_neumann ? production_rate(series.times, series.von_neumann, s.fit) / tilde_gamma0(s.epsilon, s.j) : kNaN;

  LambdaSumInput in;
  in.origin1 = first_top(initial);
  in.origin2 = second_top(initial);
  in.k1 = k1;
  in.k2 = k2;
  in.sigma = s.sigma;
  in.samples = static_cast<std::size_t>(s.ensemble);
  in.steps = s.lyapunov_steps;
  in.seed = s.seed;
  row.lambda_sum = lambda_sum(in);

  const auto c1 = correlation_matrix(TopParams(s.j, k1), first_top(initial), s.steps, CorrelationLabel::top1);
  const auto c2 = correlation_matrix(TopParams(s.j, k2), second_top(initial), s.steps, CorrelationLabel::top2);
  row.sigma1_sq_ratio = mean_diagonal(c1, s.fit) / kSigmaSatSq;
  row.sigma2_sq_ratio = mean_diagonal(c2, s.fit) / kSigmaSatSq;
  const OmegaEstimate om = estimate_omega(product_correlation(c1, c2), s.lag);
  row.omega = om.omega;
  row.omega_degenerate = om.degenerate;
  return row;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  for (double x : v)
    if (std::isnan(x)) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RateAnalysis analyze_rates(const std::vector<RateRow>& rows) {
  RateAnalysis out;
  double err_coth = 0.0, err_sigma2 = 0.0, err_improved = 0.0;
  std::size_t n_pred = 0;
  for (const RateRow& r : rows) {
    FitRow f;
    f.rate = r;
    if (r.gamma_ratio > 1.0) {
      f.gamma_eff = gamma_eff(r.gamma_ratio, 1.0);
      f.gamma_eff_ok = true;
    } else {
      f.gamma_eff = kNaN;
    }
    if (r.lambda_sum > 0.0) {
      PhenoParams p;
      p.gamma = r.lambda_sum;
      p.epsilon = 1.0;
      p.j = 1.0;
      f.pred_coth = pheno_rate(p) / p.gamma0();
      p.sigma2_sq = r.sigma2_sq_ratio * kSigmaSatSq;
      f.pred_sigma2 = improved_rate(p) / p.gamma0();
      p.omega = r.omega;
      f.pred_improved = improved_rate(p) / p.gamma0();
      err_coth += std::abs(r.gamma_ratio - f.pred_coth);
      err_sigma2 += std::abs(r.gamma_ratio - f.pred_sigma2);
      err_improved += std::abs(r.gamma_ratio - f.pred_improved);
      ++n_pred;
    } else {
      // No decay rate to feed the models with.
      f.pred_coth = f.pred_sigma2 = f.pred_improved = kNaN;
    }
    out.rows.push_back(f);
  }
  if (n_pred) {
    out.mae_coth = err_coth / n_pred;
    out.mae_sigma2 = err_sigma2 / n_pred;
    out.mae_improved = err_improved / n_pred;
  } else {
    out.mae_coth = out.mae_sigma2 = out.mae_improved = kNaN;
  }

  std::map<double, std::vector<const FitRow*>> groups;
  for (const FitRow& f : out.rows) groups[f.rate.k1].push_back(&f);
  for (const auto& [k, members] : groups) {
    std::vector<double> ratio, vn, ge, ls;
    for (const FitRow* f : members) {
      ratio.push_back(f->rate.gamma_ratio);
      vn.push_back(f->rate.gamma_vn_ratio);
      ge.push_back(f->gamma_eff_ok ? f->gamma_eff : kInf);
      ls.push_back(f->rate.lambda_sum);
    }
    out.by_k.push_back({k, members.size(), median(ratio), sample_sd(ratio), median(vn), median(ge), median(ls)});
  }

  std::vector<double> x, y;
  for (const RateRow& r : rows) {
    x.push_back(r.lambda_sum);
    y.push_back(r.gamma_ratio);
  }
  if (x.size() >= 2 && *std::max_element(x.begin(), x.end()) > *std::min_element(x.begin(), x.end())) {
    out.ratio_vs_lambda = least_squares(x, y);
    out.has_linear_fit = true;
  }
  return out;
}

std::vector<EpsPoint> sweep_eps(double j, double k1, double k2, const InitialPair& initial, int steps,
                                const std::vector<double>& eps, int workers, double norm_tolerance) {
  std::vector<EpsPoint> out(eps.size());
  const SpinBasis basis(j);
  const SpinState psi1 = coherent_state(basis, first_top(initial));
  const SpinState psi2 = coherent_state(basis, second_top(initial));
  parallel_for(eps.size(), workers, [&](std::size_t i) {
    const CoupledPropagator prop(CoupledParams(j, k1, k2, eps[i]));
    CoupledState psi = CoupledState::product(psi1, psi2);
    for (int t = 0; t < steps; ++t) prop.step(psi);
    const double drift = std::abs(psi.norm() - 1.0);
    if (drift > norm_tolerance * (steps + 1))
      throw NumericalFailure("coupled-state norm drifted by " + format_double(drift) + " at eps=" +
                             format_double(eps[i]));
    out[i] = {eps[i], linear_entropy(reduced_density(psi)), von_neumann_entropy(psi)};
  });
  return out;
}

EpsFit fit_eps_scaling(const std::vector<EpsPoint>& points, double eps_min, double eps_max) {
  std::vector<double> x, y_lin, y_vn;
  for (const EpsPoint& p : points) {
    if (p.epsilon < eps_min || p.epsilon > eps_max) continue;
    if (!(p.s_lin > 0.0) || !(p.s_vn > 0.0))
      throw NumericalFailure("non-positive entropy at eps=" + format_double(p.epsilon) + " cannot enter a log-log fit");
    x.push_back(std::log(p.epsilon));
    y_lin.push_back(std::log(p.s_lin));
    y_vn.push_back(std::log(p.s_vn));
  }
  if (x.size() < 2) throw std::invalid_argument("fewer than two sweep points inside the eps fit range");
  return {least_squares(x, y_lin), least_squares(x, y_vn)};
}

// ---------------------------------------------------------------------------

CsvTable entropy_table(const std::vector<int>& t, const std::vector<double>& s_lin, const std::vector<double>& s_vn) {
  CsvBuilder b({"t", "S_lin", "S_vN"});
  for (std::size_t i = 0; i < t.size(); ++i) {
    b.cell(t[i]).cell(s_lin[i]).cell(s_vn.empty() ? kNaN : s_vn[i]);
    b.end_row();
  }
  return b.table();
}

CsvTable variance_table(const std::vector<int>& t, const std::vector<double>& sigma2) {
  CsvBuilder b({"t", "sigma2"});
  for (std::size_t i = 0; i < t.size(); ++i) {
    b.cell(t[i]).cell(sigma2[i]);
    b.end_row();
  }
  return b.table();
}

namespace {

const std::vector<std::string> kRateColumns = {
    "k1",         "k2",
    "theta1",     "phi1",
    "theta2",     "phi2",
    "Gamma_over_Gamma0", "GammavN_over_tildeGamma0",
    "lambda_sum", "sigma1_sq_over_sat",
    "sigma2_sq_over_sat", "omega",
    "omega_degenerate"};

}  // namespace

CsvTable rates_table(const std::vector<RateRow>& rows) {
  CsvBuilder b(kRateColumns);
  for (const RateRow& r : rows) {
    b.cell(r.k1).cell(r.k2);
    b.cell(r.initial.theta1).cell(r.initial.phi1).cell(r.initial.theta2).cell(r.initial.phi2);
    b.cell(r.gamma_ratio).cell(r.gamma_vn_ratio).cell(r.lambda_sum);
    b.cell(r.sigma1_sq_ratio).cell(r.sigma2_sq_ratio).cell(r.omega).cell(r.omega_degenerate ? 1 : 0);
    b.end_row();
  }
  return b.table();
}

std::vector<RateRow> rates_from_table(const CsvTable& t) {
  std::vector<RateRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    RateRow r;
    r.k1 = t.number(i, "k1");
    r.k2 = t.number(i, "k2");
    r.initial = {t.number(i, "theta1"), t.number(i, "phi1"), t.number(i, "theta2"), t.number(i, "phi2")};
    r.gamma_ratio = t.number(i, "Gamma_over_Gamma0");
    r.gamma_vn_ratio = t.number(i, "GammavN_over_tildeGamma0");
    r.lambda_sum = t.number(i, "lambda_sum");
    r.sigma1_sq_ratio = t.number(i, "sigma1_sq_over_sat");
    r.sigma2_sq_ratio = t.number(i, "sigma2_sq_over_sat");
    r.omega = t.number(i, "omega");
    r.omega_degenerate = t.number(i, "omega_degenerate") != 0.0;
    out.push_back(r);
  }
  return out;
}

CsvTable eps_table(const std::vector<EpsPoint>& points) {
  CsvBuilder b({"epsilon", "S_lin", "S_vN"});
  for (const EpsPoint& p : points) {
    b.cell(p.epsilon).cell(p.s_lin).cell(p.s_vn);
    b.end_row();
  }
  return b.table();
}

std::vector<EpsPoint> eps_from_table(const CsvTable& t) {
  std::vector<EpsPoint> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    out.push_back({t.number(i, "epsilon"), t.number(i, "S_lin"), t.number(i, "S_vN")});
  return out;
}

CsvTable fit_report_table(const RateAnalysis& a) {
  CsvBuilder b({"k", "Gamma_over_Gamma0", "GammavN_over_tildeGamma0", "gamma_eff", "lambda_sum", "omega",
                "sigma2_sq_over_sat", "gamma_eff_status", "theta1", "phi1", "theta2", "phi2", "pred_coth",
                "pred_sigma2", "pred_improved"});
  for (const FitRow& f : a.rows) {
    const RateRow& r = f.rate;
    b.cell(r.k1).cell(r.gamma_ratio).cell(r.gamma_vn_ratio).cell(f.gamma_eff).cell(r.lambda_sum).cell(r.omega);
    b.cell(r.sigma2_sq_ratio).cell(std::string(f.gamma_eff_ok ? "ok" : "out_of_domain"));
    b.cell(r.initial.theta1).cell(r.initial.phi1).cell(r.initial.theta2).cell(r.initial.phi2);
    b.cell(f.pred_coth).cell(f.pred_sigma2).cell(f.pred_improved);
    b.end_row();
  }
  return b.table();
}

// ---------------------------------------------------------------------------
// Runner

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> k_values(const ExperimentConfig& c) {
  return c.k_list.empty() ? std::vector<double>{c.k} : c.k_list;
}

std::string tag(double v) { return format_double(v); }

void run_single_top(const ExperimentConfig& c, OutputDirectory& out) {
  const SpinBasis basis(c.j);
  const CoherentParams origin = first_top(c.initial);
  for (double k : k_values(c)) {
    const VarianceSeries v = variance_series(TopParams(c.j, k), origin, c.steps);
    out.write_csv("variance_k" + tag(k) + ".csv", variance_table(v.times, v.values));
    if (c.husimi_theta == 0 || c.snapshot_times.empty()) continue;

    const auto grid = husimi_grid(c.husimi_theta, c.husimi_phi);
    const OperatorMatrix u = floquet_operator(basis, k);
    std::vector<int> times = c.snapshot_times;
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    SpinState psi = coherent_state(basis, origin);
    int t = 0;
    for (int target : times) {
      psi = evolve(psi, u, target - t);
      t = target;
      const std::vector<double> q = husimi(psi, grid);
      CsvBuilder b({"theta", "phi", "Q"});
      for (std::size_t i = 0; i < grid.size(); ++i) {
        b.cell(grid[i].theta).cell(grid[i].phi).cell(q[i]);
        b.end_row();
      }
      out.write_csv("husimi_k" + tag(k) + "_t" + std::to_string(t) + ".csv", b.table());
    }
  }
}

void run_classical(const ExperimentConfig& c, OutputDirectory& out) {
  const CoherentParams origin = first_top(c.initial);
  const ClassicalEnsemble ensemble =
      sample_ensemble(origin, c.classical_sigma(), static_cast<std::size_t>(c.ensemble), c.seed);
  CsvBuilder summary({"k", "lambda"});
  for (double k : k_values(c)) {
    const VarianceSeries v = ensemble_variance_series(ensemble, k, c.steps);
    out.write_csv("variance_classical_k" + tag(k) + ".csv", variance_table(v.times, v.values));
    summary.cell(k).cell(ensemble_lyapunov(ensemble, k, c.lyapunov_steps));
    summary.end_row();

    if (!c.snapshot_times.empty()) {
      const int last = *std::max_element(c.snapshot_times.begin(), c.snapshot_times.end());
      std::vector<ClassicalPoint> pts = ensemble.points;
      for (int t = 0; t <= last; ++t) {
        if (t > 0)
          for (auto& p : pts) p = map_step(p, k);
        if (std::find(c.snapshot_times.begin(), c.snapshot_times.end(), t) == c.snapshot_times.end()) continue;
        CsvBuilder b({"theta", "phi"});
        for (const auto& p : pts) {
          const CoherentParams a = p.angles();
          b.cell(a.theta).cell(a.phi);
          b.end_row();
        }
        out.write_csv("ensemble_k" + tag(k) + "_t" + std::to_string(t) + ".csv", b.table());
      }
    }

    if (c.poincare_steps > 0) {
      std::vector<CoherentParams> starts;
      if (c.initial_set.empty()) {
        for (int i = 1; i <= 11; ++i) starts.emplace_back(i * std::numbers::pi / 12.0, c.initial.phi1);
      } else {
        for (const auto& p : c.initial_set) starts.push_back(first_top(p));
      }
      CsvBuilder b({"orbit_id", "t", "theta", "phi"});
      for (const OrbitPoint& p : poincare_section(k, starts, c.poincare_steps)) {
        b.cell(p.orbit_id).cell(p.t).cell(p.theta).cell(p.phi);
        b.end_row();
      }
      out.write_csv("poincare_k" + tag(k) + ".csv", b.table());
    }
  }
  out.write_csv("lyapunov_classical.csv", summary.table());
}

void run_coupled(const ExperimentConfig& c, OutputDirectory& out) {
  const CoupledParams params(c.j, c.k, c.second_k(), c.epsilon);
  const EntropySeries s = entropy_series(params, first_top(c.initial), second_top(c.initial), c.steps,
                                         {c.von_neumann, c.norm_tolerance});
  out.write_csv("entropy.csv", entropy_table(s.times, s.linear, s.von_neumann));
  if (!c.perturbative) return;
  const auto c1 = correlation_matrix(TopParams(c.j, c.k), first_top(c.initial), c.steps, CorrelationLabel::top1);
  const auto c2 =
      correlation_matrix(TopParams(c.j, c.second_k()), second_top(c.initial), c.steps, CorrelationLabel::top2);
  const std::vector<double> pt = s_lin_pt_series(product_correlation(c1, c2), c.epsilon, c.j);
  CsvBuilder b({"t", "S_lin_pt", "S_lin"});
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    b.cell(s.times[i]).cell(pt[i]).cell(s.linear[i]);
    b.end_row();
  }
  out.write_csv("perturbative.csv", b.table());
}

void run_sweep_eps(const ExperimentConfig& c, OutputDirectory& out) {
  const auto pts = sweep_eps(c.j, c.k, c.second_k(), c.initial, c.steps, c.eps_list, c.workers, c.norm_tolerance);
  out.write_csv("sweep_eps.csv", eps_table(pts));
}

void run_correlation(const ExperimentConfig& c, OutputDirectory& out) {
  const auto c1 = correlation_matrix(TopParams(c.j, c.k), first_top(c.initial), c.steps, CorrelationLabel::top1);
  const auto c2 =
      correlation_matrix(TopParams(c.j, c.second_k()), second_top(c.initial), c.steps, CorrelationLabel::top2);
  const auto d = product_correlation(c1, c2);
  CsvBuilder b({"t", "tau", "ReD", "ImD"});
  for (int t = 1; t <= d.horizon(); ++t) {
    for (int tau = 0; tau < t; ++tau) {
      cplx v = d(t, t - tau);
      if (c.normalize == Normalization::d0) {
        v /= kD0;
      } else if (c.normalize == Normalization::diagonal) {
        const double scale = std::sqrt(d(t, t).real() * d(t - tau, t - tau).real());
        v = scale > 0.0 ? v / scale : cplx(kNaN, kNaN);
      }
      b.cell(t).cell(tau).cell(v.real()).cell(v.imag());
      b.end_row();
    }
  }
  out.write_csv("correlation.csv", b.table());

  const FitWindow window{c.fit_start, c.fit_end};
  const OmegaEstimate om = estimate_omega(d, {c.lag_start_fraction, c.zero_padding});
  CsvBuilder s({"quantity", "value"});
  const std::pair<const char*, double> rows[] = {
      {"sigma1_sq", mean_diagonal(c1, window)}, {"sigma2_sq", mean_diagonal(c2, window)},
      {"mean_D_diagonal", mean_diagonal(d, window)}, {"D0", kD0},
      {"omega", om.omega}, {"omega_degenerate", om.degenerate ? 1.0 : 0.0}};
  for (const auto& [name, value] : rows) {
    s.cell(std::string(name)).cell(value);
    s.end_row();
  }
  out.write_csv("correlation_summary.csv", s.table());
}

void run_rates(const ExperimentConfig& c, OutputDirectory& out, const std::string& file,
               const std::vector<std::pair<double, InitialPair>>& points, double k2_override) {
  const RateSettings s = rate_settings(c);
  std::vector<RateRow> rows(points.size());
  parallel_for(points.size(), c.workers, [&](std::size_t i) {
    const double k1 = points[i].first;
    rows[i] = measure_rates(k1, std::isnan(k2_override) ? k1 : k2_override, points[i].second, s);
  });
  out.write_csv(file, rates_table(rows));
}

void run_sweep_k(const ExperimentConfig& c, OutputDirectory& out) {
  const auto set = c.initial_set.empty() ? default_chaotic_set() : c.initial_set;
  std::vector<std::pair<double, InitialPair>> points;
  for (double k : k_values(c))
    for (const auto& p : set) points.emplace_back(k, p);
  run_rates(c, out, "sweep_k.csv", points, kNaN);
}

void run_weak_scan(const ExperimentConfig& c, OutputDirectory& out) {
  const auto thetas = c.theta2_list.empty() ? default_scan_thetas() : c.theta2_list;
  std::vector<std::pair<double, InitialPair>> points;
  for (double t2 : thetas) points.emplace_back(c.k, InitialPair{c.initial.theta1, c.initial.phi1, t2, c.scan_phi2});
  run_rates(c, out, "scan.csv", points, c.second_k());
}

std::filesystem::path fit_input_path(const ExperimentConfig& c) {
  if (!c.fit_input.empty()) return c.fit_input;
  const std::filesystem::path dir = resolve_output_dir(c);
  switch (c.kind) {
    case ExperimentKind::sweep_k:
      return dir / "sweep_k.csv";
    case ExperimentKind::weak_chaos_scan:
      return dir / "scan.csv";
    case ExperimentKind::sweep_eps:
      return dir / "sweep_eps.csv";
    default:
      throw ConfigError("fit.input", "no sweep output to fit for experiment kind '" + std::string(to_string(c.kind)) +
                                         "'; set fit.input");
  }
}

bool has_column(const CsvTable& t, const std::string& name) {
  return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
}

void run_fit(const ExperimentConfig& c, OutputDirectory& out) {
  const auto path = fit_input_path(c);
  CsvTable table;
  try {
    table = read_csv(path);
  } catch (const std::exception& e) {
    throw ConfigError("fit.input", std::string(e.what()) + " (run the sweep first)");
  }
  if (table.rows.empty()) throw ConfigError("fit.input", "'" + path.string() + "' has no data rows");

  if (has_column(table, "epsilon")) {
    std::vector<EpsPoint> pts;
    try {
      pts = eps_from_table(table);
    } catch (const std::out_of_range& e) {
      throw ConfigError("fit.input", e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("fit.input", e.what());
    }
    EpsFit fit;
    try {
      fit = fit_eps_scaling(pts, c.eps_fit_min, c.eps_fit_max);
    } catch (const NumericalFailure&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("run.eps_fit_min", e.what());
    }
    CsvBuilder b({"entropy", "slope", "intercept", "points", "eps_min", "eps_max"});
    b.cell(std::string("S_lin")).cell(fit.linear.slope).cell(fit.linear.intercept);
    b.cell(static_cast<long long>(fit.linear.points)).cell(c.eps_fit_min).cell(c.eps_fit_max);
    b.end_row();
    b.cell(std::string("S_vN")).cell(fit.von_neumann.slope).cell(fit.von_neumann.intercept);
    b.cell(static_cast<long long>(fit.von_neumann.points)).cell(c.eps_fit_min).cell(c.eps_fit_max);
    b.end_row();
    out.write_csv("eps_fit.csv", b.table());
    return;
  }

  std::vector<RateRow> rows;
  try {
    rows = rates_from_table(table);
  } catch (const std::out_of_range& e) {
    throw ConfigError("fit.input", e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("fit.input", e.what());
  }
  const RateAnalysis a = analyze_rates(rows);
  out.write_csv("fit_report.csv", fit_report_table(a));

  CsvBuilder by_k({"k", "count", "median_Gamma_over_Gamma0", "sd_Gamma_over_Gamma0", "median_GammavN_over_tildeGamma0",
                   "median_gamma_eff", "median_lambda_sum"});
  for (const KSummary& s : a.by_k) {
    by_k.cell(s.k).cell(static_cast<long long>(s.count)).cell(s.median_ratio).cell(s.sd_ratio);
    by_k.cell(s.median_vn_ratio).cell(s.median_gamma_eff).cell(s.median_lambda_sum);
    by_k.end_row();
  }
  out.write_csv("fit_by_k.csv", by_k.table());

  CsvBuilder summary({"quantity", "value"});
  const double nan = kNaN;
  const std::pair<const char*, double> rows_out[] = {
      {"linfit_slope", a.has_linear_fit ? a.ratio_vs_lambda.slope : nan},
      {"linfit_intercept", a.has_linear_fit ? a.ratio_vs_lambda.intercept : nan},
      {"mae_coth", a.mae_coth},
      {"mae_sigma2", a.mae_sigma2},
      {"mae_improved", a.mae_improved},
      {"mae_reduction", 1.0 - a.mae_improved / a.mae_coth}};
  for (const auto& [name, value] : rows_out) {
    summary.cell(std::string(name)).cell(value);
    summary.end_row();
  }
  out.write_csv("fit_summary.csv", summary.table());
}

}  // namespace

std::string resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("KTOPS_OUTPUT_DIR"); env && *env) return env;
  return "ktops_out";
}

RunOutcome run_command(const std::string& command, ExperimentConfig config) {
  if (command != "run" && command != "sweep" && command != "fit")
    throw std::invalid_argument("unknown command '" + command + "'");
  config.output_dir = resolve_output_dir(config);
  validate(config);
  if (command == "sweep" && !is_sweep(config.kind))
    throw ConfigError("experiment.kind", "'" + std::string(to_string(config.kind)) + "' is not a sweep; use run");
  const bool fitting = command == "fit" || config.kind == ExperimentKind::pheno_fit;

  RunOutcome outcome;
  outcome.output_dir = config.output_dir;
  OutputDirectory out(outcome.output_dir);
  RunManifest& m = outcome.manifest;
  m.version = library_version();
  m.command = fitting ? "fit" : command;
  m.config_text = to_ini(config);
  m.seed = config.seed;
  m.started_utc = utc_now();
  const auto start = std::chrono::steady_clock::now();

  try {
    if (fitting) {
      run_fit(config, out);
    } else {
      switch (config.kind) {
        case ExperimentKind::single_top: run_single_top(config, out); break;
        case ExperimentKind::classical: run_classical(config, out); break;
        case ExperimentKind::coupled: run_coupled(config, out); break;
        case ExperimentKind::sweep_eps: run_sweep_eps(config, out); break;
        case ExperimentKind::sweep_k: run_sweep_k(config, out); break;
        case ExperimentKind::correlation: run_correlation(config, out); break;
        case ExperimentKind::weak_chaos_scan: run_weak_scan(config, out); break;
        case ExperimentKind::pheno_fit: break;
      }
    }
  } catch (const NumericalFailure& e) {
    out.mark_incomplete();
    m.status = "failed";
    m.error = e.what();
    outcome.exit_code = kExitNumerical;
  } catch (const DomainError& e) {
    out.mark_incomplete();
    m.status = "failed";
    m.error = e.what();
    outcome.exit_code = kExitNumerical;
  }

  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.outputs = out.records();
  const std::string name = fitting ? "fit_manifest.json" : "manifest.json";
  std::ofstream f(outcome.output_dir / name, std::ios::binary | std::ios::trunc);
  f << manifest_to_json(m);
  if (!f) throw std::runtime_error("cannot write manifest in '" + outcome.output_dir.string() + "'");
  return outcome;
}

}  // namespace kickedtop
