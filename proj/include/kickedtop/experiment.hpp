#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "kickedtop/config.hpp"
#include "kickedtop/output.hpp"
#include "kickedtop/perturbation.hpp"

namespace kickedtop {

// Runs fn(0..n-1) on up to `workers` threads. Results must be written to
// per-index slots by fn; the first exception by index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Entanglement production rates for one (k, initial condition) point.

struct RateSettings {
  double j = 80.0;
  double epsilon = 1e-4;
  int steps = 100;
  FitWindow fit;
  int ensemble = 100;
  double sigma = 0.0;
  int lyapunov_steps = 100;
  std::uint64_t seed = 0;
  LagOptions lag;
  bool von_neumann = true;
  double norm_tolerance = 1e-12;
};

RateSettings rate_settings(const ExperimentConfig& config);

struct RateRow {
  double k1 = 0.0;
  double k2 = 0.0;
  InitialPair initial;
  double gamma_ratio = 0.0;     // Gamma / Gamma0 from S_lin
  double gamma_vn_ratio = 0.0;  // Gamma_vN / (2 eps^1.8 j^2 D0); nan when not computed
  double lambda_sum = 0.0;
  double sigma1_sq_ratio = 0.0;  // time-averaged C_i(l,l) / sigma_sat^2
  double sigma2_sq_ratio = 0.0;
  double omega = 0.0;
  bool omega_degenerate = false;
};

RateRow measure_rates(double k1, double k2, const InitialPair& initial, const RateSettings& s);

struct FitRow {
  RateRow rate;
  double gamma_eff = 0.0;  // nan when Gamma/Gamma0 <= 1
  bool gamma_eff_ok = false;
  double pred_coth = 0.0;      // coth(lambda_sum / 2)
  double pred_sigma2 = 0.0;    // with (sigma2/sigma_sat)^2, omega = 0
  double pred_improved = 0.0;  // with (sigma2/sigma_sat)^2 and omega
};

struct KSummary {
  double k = 0.0;
  std::size_t count = 0;
  double median_ratio = 0.0;
  double sd_ratio = 0.0;
  double median_vn_ratio = 0.0;
  double median_gamma_eff = 0.0;  // out-of-domain rows count as +inf
  double median_lambda_sum = 0.0;
};

struct RateAnalysis {
  std::vector<FitRow> rows;
  std::vector<KSummary> by_k;  // ascending k
  LinearFit ratio_vs_lambda;   // Gamma/Gamma0 = slope * lambda_sum + intercept
  bool has_linear_fit = false;
  double mae_coth = 0.0;
  double mae_sigma2 = 0.0;
  double mae_improved = 0.0;
};

// gamma = lambda_sum and (sigma1/sigma_sat)^2 = 1 in the model predictions.
RateAnalysis analyze_rates(const std::vector<RateRow>& rows);

double median(std::vector<double> v);

// ---------------------------------------------------------------------------
// Coupling sweep at a fixed horizon.

struct EpsPoint {
  double epsilon = 0.0;
  double s_lin = 0.0;
  double s_vn = 0.0;
};

std::vector<EpsPoint> sweep_eps(double j, double k1, double k2, const InitialPair& initial, int steps,
                                const std::vector<double>& eps, int workers, double norm_tolerance = 1e-12);

struct EpsFit {
  LinearFit linear;       // log S_lin vs log eps
  LinearFit von_neumann;  // log S_vN vs log eps
};

// Points with eps inside [eps_min, eps_max] only.
EpsFit fit_eps_scaling(const std::vector<EpsPoint>& points, double eps_min, double eps_max);

// ---------------------------------------------------------------------------
// CSV schemas.

CsvTable entropy_table(const std::vector<int>& t, const std::vector<double>& s_lin, const std::vector<double>& s_vn);
CsvTable variance_table(const std::vector<int>& t, const std::vector<double>& sigma2);
CsvTable rates_table(const std::vector<RateRow>& rows);
std::vector<RateRow> rates_from_table(const CsvTable& table);
CsvTable eps_table(const std::vector<EpsPoint>& points);
std::vector<EpsPoint> eps_from_table(const CsvTable& table);
CsvTable fit_report_table(const RateAnalysis& analysis);

// ---------------------------------------------------------------------------
// Command runner used by the CLI.

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  RunManifest manifest;
};

// Output directory: config value, else $KTOPS_OUTPUT_DIR, else "ktops_out".
std::string resolve_output_dir(const ExperimentConfig& config);

// command is "run", "sweep" or "fit". Throws ConfigError for invalid configs
// and unusable fit inputs; numerical failures are reported in the outcome
// (exit code 3, manifest status "failed", outputs flagged incomplete).
RunOutcome run_command(const std::string& command, ExperimentConfig config);

}  // namespace kickedtop
