#pragma once

// Experiment configuration: an INI-style file with [experiment], [system],
// [initial], [run] and [fit] sections. Lists are comma separated; an
// initial-condition set is a ';'-separated list of "theta phi" (both tops)
// or "theta1 phi1 theta2 phi2" tuples. Only whole-line comments are allowed.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kickedtop/errors.hpp"

namespace kickedtop {

enum class ExperimentKind {
  single_top,
  classical,
  coupled,
  sweep_eps,
  sweep_k,
  correlation,
  weak_chaos_scan,
  pheno_fit,
};

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_kind(std::string_view text);  // throws ConfigError("experiment.kind", ...)
bool is_sweep(ExperimentKind kind);

struct InitialPair {
  double theta1 = 0.89;
  double phi1 = 0.63;
  double theta2 = 0.89;
  double phi2 = 0.63;

  bool operator==(const InitialPair&) const = default;
};

enum class Normalization { none, d0, diagonal };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::coupled;
  std::uint64_t seed = 12345;
  std::string output_dir;  // empty: KTOPS_OUTPUT_DIR, then "ktops_out"
  int workers = 1;

  double j = 80.0;
  double k = 3.0;
  std::optional<double> k2;  // second top; defaults to k
  std::vector<double> k_list;
  double epsilon = 1e-3;
  std::vector<double> eps_list;

  InitialPair initial;
  std::vector<InitialPair> initial_set;
  std::vector<double> theta2_list;  // weak-chaos scan; first top at initial.theta1/phi1
  double scan_phi2 = -0.6;

  int steps = 128;
  int fit_start = 20;
  int fit_end = 100;
  int ensemble = 100;
  std::optional<double> sigma;  // classical width; defaults to 1/sqrt(j)
  int lyapunov_steps = 100;
  double lag_start_fraction = 0.5;
  int zero_padding = 4;
  Normalization normalize = Normalization::none;
  bool perturbative = false;
  bool von_neumann = true;
  double norm_tolerance = 1e-12;  // allowed norm drift per step
  std::vector<int> snapshot_times;
  int husimi_theta = 0;
  int husimi_phi = 0;
  int poincare_steps = 0;
  double eps_fit_min = 1e-5;
  double eps_fit_max = 3e-4;

  std::string fit_input;  // pheno-fit: path of a sweep CSV

  double second_k() const { return k2.value_or(k); }
  double classical_sigma() const;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

// Canonical INI text; parse_config(to_ini(c)) == c for every valid c.
std::string to_ini(const ExperimentConfig& config);

// "section.key=value", applied as if it appeared in the file.
void apply_override(ExperimentConfig& config, std::string_view assignment);

// Checks every numeric field against the preconditions of the routines the
// experiment kind will call. Throws ConfigError naming the first bad field.
void validate(const ExperimentConfig& config);

// Default chaotic-sea set used by the k sweep when none is configured.
std::vector<InitialPair> default_chaotic_set();
// Default theta2 values for the weak-chaos scan, crossing the k = 3 island
// centred near (0.9, -0.6).
std::vector<double> default_scan_thetas();

}  // namespace kickedtop
