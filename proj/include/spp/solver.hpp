#pragma once

#include "spp/diagnostics.hpp"
#include "spp/problems.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spp {

/// mu_k = mu0 (constant) or mu0 / (k + 1)^gamma (polynomial).
struct StepSchedule {
  enum class Kind { constant, polynomial };

  Kind kind = Kind::polynomial;
  double mu0 = 1.0;
  double gamma = 1.0;

  static StepSchedule constant(double mu0);
  static StepSchedule polynomial(double mu0, double gamma);

  /// Throws invalid_stepsize for mu0 <= 0 or gamma <= 0 (polynomial).
  void validate() const;
  /// "const_mu0=0.1" or "poly_mu0=1_gamma=0.5".
  std::string label() const;
};

/// The index is shifted by one so that mu_0 = mu0.
double step_size(const StepSchedule& schedule, std::int64_t k);

enum class Sampling {
  /// xi_k drawn i.i.d. from the problem weights.
  random,
  /// xi_k = k mod N; a deterministic sweep.
  cyclic,
};

struct MetricOptions {
  /// F* for the envelope residual column; absent -> NaN.
  std::optional<double> F_star;
  /// X* for the dist^2 column; absent or uncertified -> NaN.
  std::optional<OptimalSetModel> optimal_set;
  bool feasibility = true;
  /// Record every `stride`-th iterate (plus the last one).
  std::int64_t stride = 1;
  /// When false the wall-time column is written as 0 so traces stay
  /// byte-reproducible.
  bool record_timing = true;
};

struct RunOptions {
  Sampling sampling = Sampling::random;
  MetricOptions metrics;
};

struct TraceRecord {
  std::int64_t k = 0;
  double mu = 0.0;
  double dist_sq = 0.0;
  double envelope_residual = 0.0;
  double feasibility_residual = 0.0;
  std::int64_t wall_time_ns = 0;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  Vector final_iterate;
};

/// x^{k+1} = z_{mu_k}(x^k; xi_k) for k = 0 .. iterations-1, with xi_k
/// sampled from its own seeded stream. Record k holds metrics of x^k.
RunTrace spp_run(const StochasticProblem& problem, const Vector& x0, const StepSchedule& schedule,
                 std::int64_t iterations, std::uint64_t seed, const RunOptions& options = {});

/// Per-iteration mean and sample variance of each metric over rounds.
struct MeanTrace {
  std::vector<std::int64_t> k;
  std::vector<double> mu;
  std::vector<TraceRecord> mean;
  /// Sample (n-1) variance; zero for a single round.
  std::vector<TraceRecord> variance;
  std::size_t rounds = 0;
};

/// Reference implementation: rounds run one after another with seeds
/// base_seed, base_seed+1, ...
MeanTrace replicate_serial(const StochasticProblem& problem, const Vector& x0, const StepSchedule& schedule,
                           std::int64_t iterations, std::size_t rounds, std::uint64_t base_seed,
                           const RunOptions& options = {});

/// OpenMP kernel: rounds run concurrently, aggregation happens afterwards in
/// round order, so the result is bit-identical to replicate_serial.
MeanTrace replicate_parallel(const StochasticProblem& problem, const Vector& x0, const StepSchedule& schedule,
                             std::int64_t iterations, std::size_t rounds, std::uint64_t base_seed,
                             const RunOptions& options = {}, int threads = 0);

/// Serial for threads == 1, parallel otherwise (0 = OpenMP default).
MeanTrace replicate(const StochasticProblem& problem, const Vector& x0, const StepSchedule& schedule,
                    std::int64_t iterations, std::size_t rounds, std::uint64_t base_seed,
                    const RunOptions& options = {}, int threads = 1);

MeanTrace aggregate(const std::vector<RunTrace>& runs);

/// Fixed trace schema.
inline constexpr const char* kTraceHeader = "k,mu_k,dist_sq,envelope_residual,feasibility_residual,wall_time_ns";

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& rows);
void write_trace_csv(std::ostream& out, const RunTrace& trace);
/// Writes the mean columns.
void write_trace_csv(std::ostream& out, const MeanTrace& trace);
/// Throws parse with the offending column name on schema mismatch.
std::vector<TraceRecord> read_trace_csv(std::istream& in);

/// Shortest round-trip decimal form; "nan" / "inf" / "-inf" for non-finite.
std::string format_double(double value);

}  // namespace spp
