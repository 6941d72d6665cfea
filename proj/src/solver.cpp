#include "spp/solver.hpp"

#include "spp/rng.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

StepSchedule StepSchedule::constant(double mu0) {
  StepSchedule s{Kind::constant, mu0, 0.0};
  s.validate();
  return s;
}

StepSchedule StepSchedule::polynomial(double mu0, double gamma) {
  StepSchedule s{Kind::polynomial, mu0, gamma};
  s.validate();
  return s;
}

void StepSchedule::validate() const {
  if (!(mu0 > 0.0) || !std::isfinite(mu0)) throw Error(ErrorCode::invalid_stepsize, "mu0 must be positive");
  if (kind == Kind::polynomial && (!(gamma > 0.0) || !std::isfinite(gamma))) {
    throw Error(ErrorCode::invalid_stepsize, "polynomial schedule needs gamma > 0");
  }
}

std::string StepSchedule::label() const {
  if (kind == Kind::constant) return "const_mu0=" + format_double(mu0);
  return "poly_mu0=" + format_double(mu0) + "_gamma=" + format_double(gamma);
}

double step_size(const StepSchedule& schedule, std::int64_t k) {
  if (k < 0) throw Error(ErrorCode::domain, "iteration index must be >= 0");
  if (schedule.kind == StepSchedule::Kind::constant) return schedule.mu0;
  return schedule.mu0 / std::pow(static_cast<double>(k) + 1.0, schedule.gamma);
}

RunTrace spp_run(const StochasticProblem& problem, const Vector& x0, const StepSchedule& schedule,
                 std::int64_t iterations, std::uint64_t seed, const RunOptions& options) {
  schedule.validate();
  if (iterations < 1) throw Error(ErrorCode::invalid_spec, "iterations must be >= 1");
  if (x0.size() != problem.dimension() || !x0.allFinite()) {
    throw Error(ErrorCode::invalid_spec, "x0 must be finite with the problem dimension");
  }
  const auto& metrics = options.metrics;
  if (metrics.stride < 1) throw Error(ErrorCode::invalid_spec, "metric stride must be >= 1");
  const bool with_dist = metrics.optimal_set && metrics.optimal_set->certified();

  auto engine = rng::make_engine(seed, rng::Stream::sampling);
  const auto& w = problem.weights();
  std::discrete_distribution<std::size_t> pick(w.data(), w.data() + w.size());

  RunTrace trace;
  trace.records.reserve(static_cast<std::size_t>(iterations / metrics.stride + 2));
  const auto start = std::chrono::steady_clock::now();
  auto record = [&](std::int64_t k, const Vector& x) {
    TraceRecord r;
    r.k = k;
    r.mu = step_size(schedule, k);
    r.dist_sq = kNaN;
    if (with_dist) {
      const double d = dist_to_optimal(*metrics.optimal_set, x);
      r.dist_sq = d * d;
    }
    r.envelope_residual = metrics.F_star ? envelope_residual(problem, x, r.mu, *metrics.F_star) : kNaN;
    r.feasibility_residual = metrics.feasibility ? evaluate_feasibility(problem, x) : kNaN;
    if (metrics.record_timing) {
      r.wall_time_ns =
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    }
    trace.records.push_back(r);
  };

  Vector x = x0;
  record(0, x);
  for (std::int64_t k = 0; k < iterations; ++k) {
    const std::size_t index = options.sampling == Sampling::random
                                  ? pick(engine)
                                  : static_cast<std::size_t>(k % static_cast<std::int64_t>(problem.size()));
    try {
      x = moreau(problem.component(index), x, step_size(schedule, k)).z;
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(k) + ": " + e.what());
    }
    if ((k + 1) % metrics.stride == 0 || k + 1 == iterations) record(k + 1, x);
  }
  trace.final_iterate = std::move(x);
  return trace;
}

MeanTrace aggregate(const std::vector<RunTrace>& runs) {
  if (runs.empty()) throw Error(ErrorCode::invalid_spec, "nothing to aggregate");
  const std::size_t rows = runs.front().records.size();
  for (const auto& r : runs) {
    if (r.records.size() != rows) throw Error(ErrorCode::invalid_spec, "traces differ in length");
  }
  MeanTrace out;
  out.rounds = runs.size();
  out.mean.resize(rows);
  out.variance.resize(rows);
  out.k.resize(rows);
  out.mu.resize(rows);
  const auto n = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& first = runs.front().records[i];
    out.k[i] = first.k;
    out.mu[i] = first.mu;
    TraceRecord& m = out.mean[i];
    TraceRecord& v = out.variance[i];
    m.k = v.k = first.k;
    m.mu = v.mu = first.mu;
    double wall = 0.0;
    for (const auto& run : runs) {
      const auto& r = run.records[i];
      m.dist_sq += r.dist_sq;
      m.envelope_residual += r.envelope_residual;
      m.feasibility_residual += r.feasibility_residual;
      wall += static_cast<double>(r.wall_time_ns);
    }
    m.dist_sq /= n;
    m.envelope_residual /= n;
    m.feasibility_residual /= n;
    m.wall_time_ns = static_cast<std::int64_t>(std::llround(wall / n));
    if (runs.size() > 1) {
      double vw = 0.0;
      for (const auto& run : runs) {
        const auto& r = run.records[i];
        v.dist_sq += (r.dist_sq - m.dist_sq) * (r.dist_sq - m.dist_sq);
        v.envelope_residual += (r.envelope_residual - m.envelope_residual) * (r.envelope_residual - m.envelope_residual);
        v.feasibility_residual +=
            (r.feasibility_residual - m.feasibility_residual) * (r.feasibility_residual - m.feasibility_residual);
        const double dw = static_cast<double>(r.wall_time_ns) - wall / n;
        vw += dw * dw;
      }
      v.dist_sq /= n - 1.0;
      v.envelope_residual /= n - 1.0;
      v.feasibility_residual /= n - 1.0;
      v.wall_time_ns = static_cast<std::int64_t>(std::llround(vw / (n - 1.0)));
    }
  }
  return out;
}

MeanTrace replicate_serial(const StochasticProblem& problem, const Vector& x0, const StepSchedule& schedule,
                           std::int64_t iterations, std::size_t rounds, std::uint64_t base_seed,
                           const RunOptions& options) {
  if (rounds < 1) throw Error(ErrorCode::invalid_spec, "rounds must be >= 1");
  std::vector<RunTrace> runs;
  runs.reserve(rounds);
  for (std::size_t r = 0; r < rounds; ++r) {
    runs.push_back(spp_run(problem, x0, schedule, iterations, base_seed + r, options));
  }
  return aggregate(runs);
}

MeanTrace replicate_parallel(const StochasticProblem& problem, const Vector& x0, const StepSchedule& schedule,
                             std::int64_t iterations, std::size_t rounds, std::uint64_t base_seed,
                             const RunOptions& options, int threads) {
  if (rounds < 1) throw Error(ErrorCode::invalid_spec, "rounds must be >= 1");
  std::vector<RunTrace> runs(rounds);
  std::vector<std::exception_ptr> failures(rounds);
  const auto count = static_cast<std::int64_t>(rounds);
#ifdef _OPENMP
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
#endif
  for (std::int64_t r = 0; r < count; ++r) {
    try {
      runs[static_cast<std::size_t>(r)] =
          spp_run(problem, x0, schedule, iterations, base_seed + static_cast<std::uint64_t>(r), options);
    } catch (...) {
      failures[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  (void)threads;
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return aggregate(runs);
}

MeanTrace replicate(const StochasticProblem& problem, const Vector& x0, const StepSchedule& schedule,
                    std::int64_t iterations, std::size_t rounds, std::uint64_t base_seed, const RunOptions& options,
                    int threads) {
  if (threads == 1) return replicate_serial(problem, x0, schedule, iterations, rounds, base_seed, options);
  return replicate_parallel(problem, x0, schedule, iterations, rounds, base_seed, options, threads);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& rows) {
  out << kTraceHeader << '\n';
  for (const auto& r : rows) {
    out << r.k << ',' << format_double(r.mu) << ',' << format_double(r.dist_sq) << ','
        << format_double(r.envelope_residual) << ',' << format_double(r.feasibility_residual) << ','
        << r.wall_time_ns << '\n';
  }
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) { write_trace_csv(out, trace.records); }

void write_trace_csv(std::ostream& out, const MeanTrace& trace) { write_trace_csv(out, trace.mean); }

namespace {

double parse_double(const std::string& cell, const std::string& column, std::size_t line) {
  if (cell == "nan") return kNaN;
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw Error(ErrorCode::parse, "column '" + column + "' line " + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  static const std::vector<std::string> expected = split(kTraceHeader);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw Error(ErrorCode::parse, "empty trace CSV");
  if (line.back() == '\r') line.pop_back();
  const auto header = split(line);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= header.size()) throw Error(ErrorCode::parse, "missing column '" + expected[i] + "'");
    if (header[i] != expected[i]) {
      throw Error(ErrorCode::parse, "unexpected column '" + header[i] + "' where '" + expected[i] + "' belongs");
    }
  }
  if (header.size() > expected.size()) throw Error(ErrorCode::parse, "unexpected column '" + header.back() + "'");

  std::vector<TraceRecord> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != expected.size()) {
      throw Error(ErrorCode::parse, "line " + std::to_string(number) + " has " + std::to_string(cells.size()) +
                                        " cells, expected " + std::to_string(expected.size()));
    }
    TraceRecord r;
    r.k = static_cast<std::int64_t>(parse_double(cells[0], expected[0], number));
    r.mu = parse_double(cells[1], expected[1], number);
    r.dist_sq = parse_double(cells[2], expected[2], number);
    r.envelope_residual = parse_double(cells[3], expected[3], number);
    r.feasibility_residual = parse_double(cells[4], expected[4], number);
    r.wall_time_ns = static_cast<std::int64_t>(parse_double(cells[5], expected[5], number));
    rows.push_back(r);
  }
  if (rows.empty()) throw Error(ErrorCode::parse, "trace CSV has a header but no rows");
  return rows;
}

}  // namespace spp
