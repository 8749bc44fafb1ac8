#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ucnn/proxy.hpp"
#include "ucnn/sampling.hpp"
#include "ucnn/uc.hpp"

namespace ucnn::eval {

/// |c_hat - c| / c. Throws PreconditionError when c <= 0.
double relative_error(double c_hat, double c);

/// Pearson coefficient. Throws PreconditionError on fewer than 2 pairs,
/// unequal lengths or zero variance.
double correlation(std::span<const double> x, std::span<const double> y);

/// Mean nearest-neighbour distance of `queries` to the index.
double density(const proxy::ProxyIndex& index, const grid::GridCase& grid,
               std::span<const sampling::UcInput> queries);

/// A test scenario with its exact (ground-truth) solution.
struct TestSample {
  sampling::UcInput input;
  uc::UcSolution exact;
  double exact_seconds = 0.0;  // build + solve wall time
};

using ExactSolver = std::function<uc::UcSolution(const sampling::UcInput&)>;

ExactSolver internal_solver(const grid::GridCase& grid, uc::UcOptions opts = {});

/// Solves every input; row order follows `inputs`.
std::vector<TestSample> solve_test_set(std::span<const sampling::UcInput> inputs, const ExactSolver& solver,
                                       int workers = 1);

struct Row {
  std::uint64_t id = 0;
  int month = 0;
  std::string status;      // exact solve status
  bool included = false;   // feasible exact solve with a positive cost
  double exact_cost = 0.0;
  double predicted_cost = 0.0;
  double relative_error = 0.0;  // 0 when excluded
  double distance = 0.0;
  std::uint64_t neighbor = 0;
  double exact_seconds = 0.0;
  double proxy_seconds = 0.0;
};

struct Aggregates {
  std::size_t rows = 0;
  std::size_t excluded = 0;
  double mean_relative_error = 0.0;  // over included rows
  double correlation = 0.0;          // over included rows; NaN when undefined
  double density = 0.0;              // mean distance over all rows
  double mean_exact_seconds = 0.0;
  double mean_proxy_seconds = 0.0;
  double speedup = 0.0;  // mean exact / mean proxy
};

/// Recomputes the aggregates from rows alone.
Aggregates aggregate(std::span<const Row> rows);

struct EvalReport {
  std::vector<Row> rows;
  Aggregates overall;
  std::map<int, Aggregates> by_month;
};

/// Predicts every test sample and compares against its exact label. With
/// `require_disjoint`, a test id also present in the index throws
/// DisjointnessError.
EvalReport evaluate(const grid::GridCase& grid, const proxy::ProxyIndex& index, std::span<const TestSample> tests,
                    bool require_disjoint = true, int workers = 1);

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

struct SweepPoint {
  std::size_t size = 0;
  EvalReport report;
};

/// Indexes nested prefixes of `pool` shuffled by `shuffle_seed`, one report
/// per size. Sizes must be ascending; throws PreconditionError when a size
/// exceeds the pool.
std::vector<SweepPoint> sweep_train_size(const grid::GridCase& grid, std::span<const proxy::Record> pool,
                                         std::span<const std::size_t> sizes, std::span<const TestSample> tests,
                                         const Eigen::VectorXd& xi, proxy::Backend backend,
                                         std::uint64_t shuffle_seed, int workers = 1);

struct BenchmarkResult {
  std::size_t instances = 0;  // timed instances, warm-up excluded
  double mean_build_seconds = 0.0;
  double mean_solve_seconds = 0.0;
  double mean_exact_seconds = 0.0;
  double mean_proxy_seconds = 0.0;
  double speedup = 0.0;
  std::vector<double> exact_seconds, proxy_seconds;  // per timed instance
};

/// Times exact solve and proxy query per input sequentially. The first input
/// only warms the process and is not timed.
BenchmarkResult benchmark_runtime(const grid::GridCase& grid, const proxy::ProxyIndex& index,
                                  std::span<const sampling::UcInput> inputs, const uc::UcOptions& opts);

// Persistence. Reports split into a deterministic part (rows without wall
// times, accuracy aggregates) and a timing sidecar, so equal inputs give
// byte-identical reports.

using Header = std::vector<std::pair<std::string, std::string>>;

void write_report(std::ostream& out, const EvalReport& report, const Header& header);
void write_timings(std::ostream& out, const EvalReport& report, const Header& header);
void write_sweep(std::ostream& out, std::span<const SweepPoint> sweep, const Header& header);

/// Reads the rows of write_report output (timings are left at 0).
std::vector<Row> read_report_rows(std::istream& in);

}  // namespace ucnn::eval
