#include "ucnn/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "ucnn/parallel.hpp"

namespace ucnn::eval {

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_header(std::ostream& out, const Header& header) {
  for (const auto& [k, v] : header) out << "# " << k << ": " << v << '\n';
}

void write_aggregates(std::ostream& out, const std::string& prefix, const Aggregates& a) {
  out << "# " << prefix << "rows: " << a.rows << '\n'
      << "# " << prefix << "excluded: " << a.excluded << '\n'
      << "# " << prefix << "mean_relative_error: " << num(a.mean_relative_error) << '\n'
      << "# " << prefix << "correlation: " << num(a.correlation) << '\n'
      << "# " << prefix << "density: " << num(a.density) << '\n';
}

}  // namespace

double relative_error(double c_hat, double c) {
  if (!(c > 0.0)) throw PreconditionError("relative error needs a positive reference cost");
  return std::abs(c_hat - c) / c;
}

double correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("correlation needs paired samples");
  if (x.size() < 2) throw PreconditionError("correlation needs at least 2 pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw PreconditionError("correlation is undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double density(const proxy::ProxyIndex& index, const grid::GridCase& grid,
               std::span<const sampling::UcInput> queries) {
  if (queries.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& q : queries) sum += std::sqrt(index.nearest(proxy::featurize(grid, q)).squared);
  return sum / static_cast<double>(queries.size());
}

ExactSolver internal_solver(const grid::GridCase& grid, uc::UcOptions opts) {
  return [&grid, opts](const sampling::UcInput& x) { return uc::solve(grid, x, opts); };
}

std::vector<TestSample> solve_test_set(std::span<const sampling::UcInput> inputs, const ExactSolver& solver,
                                       int workers) {
  std::vector<TestSample> out(inputs.size());
  parallel_for(inputs.size(), workers, [&](std::size_t i) {
    const auto t0 = clock::now();
    out[i].exact = solver(inputs[i]);
    out[i].exact_seconds = seconds_since(t0);
    out[i].input = inputs[i];
  });
  return out;
}

Aggregates aggregate(std::span<const Row> rows) {
  Aggregates a;
  a.rows = rows.size();
  std::vector<double> exact, predicted;
  double rel = 0.0, dist = 0.0, te = 0.0, tp = 0.0;
  for (const auto& r : rows) {
    dist += r.distance;
    te += r.exact_seconds;
    tp += r.proxy_seconds;
    if (!r.included) {
      ++a.excluded;
      continue;
    }
    rel += r.relative_error;
    exact.push_back(r.exact_cost);
    predicted.push_back(r.predicted_cost);
  }
  const std::size_t k = exact.size();
  a.mean_relative_error = k ? rel / static_cast<double>(k) : 0.0;
  try {
    a.correlation = correlation(predicted, exact);
  } catch (const PreconditionError&) {
    a.correlation = std::numeric_limits<double>::quiet_NaN();
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    a.density = dist / n;
    a.mean_exact_seconds = te / n;
    a.mean_proxy_seconds = tp / n;
  }
  a.speedup = a.mean_proxy_seconds > 0.0 ? a.mean_exact_seconds / a.mean_proxy_seconds : 0.0;
  return a;
}

EvalReport evaluate(const grid::GridCase& grid, const proxy::ProxyIndex& index, std::span<const TestSample> tests,
                    bool require_disjoint, int workers) {
  if (require_disjoint) {
    std::unordered_set<std::uint64_t> train;
    for (const auto& r : index.records()) train.insert(r.id);
    for (const auto& t : tests) {
      if (train.count(t.input.id)) {
        throw DisjointnessError("test sample " + std::to_string(t.input.id) + " is also in the training set");
      }
    }
  }
  EvalReport report;
  report.rows.resize(tests.size());
  parallel_for(tests.size(), workers, [&](std::size_t i) {
    const TestSample& t = tests[i];
    const proxy::Prediction p = index.predict(grid, t.input);
    Row& r = report.rows[i];
    r.id = t.input.id;
    r.month = t.input.month;
    r.status = uc::to_string(t.exact.status);
    r.exact_cost = t.exact.cost;
    r.predicted_cost = p.cost;
    r.distance = p.distance;
    r.neighbor = p.neighbor;
    r.exact_seconds = t.exact_seconds;
    r.proxy_seconds = p.seconds;
    r.included = t.exact.feasible() && t.exact.cost > 0.0;
    if (r.included) r.relative_error = relative_error(p.cost, t.exact.cost);
  });
  report.overall = aggregate(report.rows);
  std::map<int, std::vector<Row>> months;
  for (const auto& r : report.rows) months[r.month].push_back(r);
  for (const auto& [m, rows] : months) report.by_month[m] = aggregate(rows);
  return report;
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  sampling::Rng rng(seed);
  // Modulo draw keeps the permutation identical across standard libraries;
  // the bias is below 2^-50 for any realistic pool.
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

std::vector<SweepPoint> sweep_train_size(const grid::GridCase& grid, std::span<const proxy::Record> pool,
                                         std::span<const std::size_t> sizes, std::span<const TestSample> tests,
                                         const Eigen::VectorXd& xi, proxy::Backend backend,
                                         std::uint64_t shuffle_seed, int workers) {
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0) throw PreconditionError("sweep sizes must be positive");
    if (sizes[k] > pool.size()) {
      throw PreconditionError("sweep size " + std::to_string(sizes[k]) + " exceeds the pool of " +
                              std::to_string(pool.size()));
    }
    if (k && sizes[k] < sizes[k - 1]) throw PreconditionError("sweep sizes must be ascending");
  }
  const auto order = shuffled_order(pool.size(), shuffle_seed);
  proxy::ProxyIndex index(xi, proxy::index_fingerprint(grid), backend);
  std::vector<SweepPoint> out;
  for (std::size_t size : sizes) {
    // Growing one index keeps every prefix nested in the next.
    for (std::size_t i = index.size(); i < size; ++i) index.add_sample(pool[order[i]]);
    out.push_back({size, evaluate(grid, index, tests, true, workers)});
  }
  return out;
}

BenchmarkResult benchmark_runtime(const grid::GridCase& grid, const proxy::ProxyIndex& index,
                                  std::span<const sampling::UcInput> inputs, const uc::UcOptions& opts) {
  BenchmarkResult b;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto t0 = clock::now();
    const uc::UcSolution sol = uc::solve(grid, inputs[i], opts);
    const double exact = seconds_since(t0);
    t0 = clock::now();
    const proxy::Prediction p = index.predict(grid, inputs[i]);
    const double query = seconds_since(t0);
    (void)p;
    if (i == 0) continue;  // warm-up
    b.exact_seconds.push_back(exact);
    b.proxy_seconds.push_back(query);
    b.mean_build_seconds += sol.build_seconds;
    b.mean_solve_seconds += sol.solve_seconds;
  }
  b.instances = b.exact_seconds.size();
  if (b.instances == 0) return b;
  const double n = static_cast<double>(b.instances);
  b.mean_build_seconds /= n;
  b.mean_solve_seconds /= n;
  b.mean_exact_seconds = std::accumulate(b.exact_seconds.begin(), b.exact_seconds.end(), 0.0) / n;
  b.mean_proxy_seconds = std::accumulate(b.proxy_seconds.begin(), b.proxy_seconds.end(), 0.0) / n;
  b.speedup = b.mean_proxy_seconds > 0.0 ? b.mean_exact_seconds / b.mean_proxy_seconds : 0.0;
  return b;
}

void write_report(std::ostream& out, const EvalReport& report, const Header& header) {
  write_header(out, header);
  write_aggregates(out, "", report.overall);
  for (const auto& [m, a] : report.by_month) write_aggregates(out, "month_" + std::to_string(m) + "_", a);
  out << "id,month,status,included,exact_cost,predicted_cost,relative_error,distance,neighbor\n";
  for (const auto& r : report.rows) {
    out << r.id << ',' << r.month << ',' << r.status << ',' << (r.included ? 1 : 0) << ',' << num(r.exact_cost)
        << ',' << num(r.predicted_cost) << ',' << num(r.relative_error) << ',' << num(r.distance) << ','
        << r.neighbor << '\n';
  }
}

void write_timings(std::ostream& out, const EvalReport& report, const Header& header) {
  write_header(out, header);
  out << "# mean_exact_seconds: " << num(report.overall.mean_exact_seconds) << '\n'
      << "# mean_proxy_seconds: " << num(report.overall.mean_proxy_seconds) << '\n'
      << "# speedup: " << num(report.overall.speedup) << '\n'
      << "id,exact_seconds,proxy_seconds\n";
  for (const auto& r : report.rows) out << r.id << ',' << num(r.exact_seconds) << ',' << num(r.proxy_seconds) << '\n';
}

void write_sweep(std::ostream& out, std::span<const SweepPoint> sweep, const Header& header) {
  write_header(out, header);
  out << "size,rows,excluded,mean_relative_error,correlation,density\n";
  for (const auto& p : sweep) {
    const auto& a = p.report.overall;
    out << p.size << ',' << a.rows << ',' << a.excluded << ',' << num(a.mean_relative_error) << ','
        << num(a.correlation) << ',' << num(a.density) << '\n';
  }
}

std::vector<Row> read_report_rows(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  bool seen_columns = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_columns) {
      seen_columns = true;
      continue;
    }
    std::stringstream ss(line);
    std::vector<std::string> f;
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 9) throw SchemaError("report row has " + std::to_string(f.size()) + " fields");
    try {
      Row r;
      r.id = std::stoull(f[0]);
      r.month = std::stoi(f[1]);
      r.status = f[2];
      r.included = f[3] == "1";
      r.exact_cost = std::stod(f[4]);
      r.predicted_cost = std::stod(f[5]);
      r.relative_error = std::stod(f[6]);
      r.distance = std::stod(f[7]);
      r.neighbor = std::stoull(f[8]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw SchemaError("malformed report row: " + line);
    }
  }
  return rows;
}

}  // namespace ucnn::eval
