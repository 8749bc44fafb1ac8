#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ucnn/archive.hpp"
#include "ucnn/evaluation.hpp"
#include "ucnn/grid.hpp"
#include "ucnn/mps.hpp"
#include "ucnn/parallel.hpp"
#include "ucnn/proxy.hpp"
#include "ucnn/sampling.hpp"
#include "ucnn/uc.hpp"

namespace ucnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string case_path, sampler_path, out, index_dir, test, inputs, xi_file, external_dir, config_file;
  std::vector<std::string> train;
  long count = 1;
  std::uint64_t first_id = 0;
  std::optional<std::uint64_t> seed;
  int horizon = 24;
  bool n1 = false;
  bool no_ramps = false;
  double gap = 1e-6;
  long node_limit = 1'000'000;
  double time_limit = 3600.0;
  std::string backend = "linear";
  double xi_demand = 1.0, xi_wind = 1.0, xi_topology = proxy::kTopologyWeight;
  std::vector<std::size_t> sizes;
  std::uint64_t shuffle_seed = 0;
  bool allow_overlap = false;
  bool with_solution = false;
  double external_wait = 0.0;
  int workers = 0;  // 0: UCNN_WORKERS, else hardware concurrency
};

// Keys of a --config document; each overrides the flag of the same name.
void apply_config_file(RunConfig& c) {
  std::ifstream in(c.config_file);
  if (!in) throw MissingArtifactError("config file not found: " + c.config_file);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("config file: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw SchemaError("config file must hold a JSON object");
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "case") c.case_path = v.get<std::string>();
      else if (key == "sampler") c.sampler_path = v.get<std::string>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "index") c.index_dir = v.get<std::string>();
      else if (key == "train") c.train = v.is_array() ? v.get<std::vector<std::string>>() : std::vector{v.get<std::string>()};
      else if (key == "test") c.test = v.get<std::string>();
      else if (key == "inputs") c.inputs = v.get<std::string>();
      else if (key == "count") c.count = v.get<long>();
      else if (key == "first_id") c.first_id = v.get<std::uint64_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "horizon") c.horizon = v.get<int>();
      else if (key == "n1") c.n1 = v.get<bool>();
      else if (key == "no_ramps") c.no_ramps = v.get<bool>();
      else if (key == "gap") c.gap = v.get<double>();
      else if (key == "node_limit") c.node_limit = v.get<long>();
      else if (key == "time_limit") c.time_limit = v.get<double>();
      else if (key == "backend") c.backend = v.get<std::string>();
      else if (key == "xi_demand") c.xi_demand = v.get<double>();
      else if (key == "xi_wind") c.xi_wind = v.get<double>();
      else if (key == "xi_topology") c.xi_topology = v.get<double>();
      else if (key == "xi_file") c.xi_file = v.get<std::string>();
      else if (key == "sizes") c.sizes = v.get<std::vector<std::size_t>>();
      else if (key == "shuffle_seed") c.shuffle_seed = v.get<std::uint64_t>();
      else if (key == "allow_overlap") c.allow_overlap = v.get<bool>();
      else if (key == "with_solution") c.with_solution = v.get<bool>();
      else if (key == "external_dir") c.external_dir = v.get<std::string>();
      else if (key == "external_wait") c.external_wait = v.get<double>();
      else if (key == "workers") c.workers = v.get<int>();
      else throw SchemaError("config file: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw SchemaError("config file: " + std::string(e.what()));
  }
}

int worker_count(const RunConfig& c) {
  if (c.workers > 0) return c.workers;
  if (const char* env = std::getenv("UCNN_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::logic_error&) {
    }
    throw SchemaError(std::string("UCNN_WORKERS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw PreconditionError(std::string("missing required option ") + flag);
}

uc::UcOptions uc_options(const RunConfig& c) {
  if (c.horizon < 1) throw PreconditionError("--horizon must be >= 1");
  uc::UcOptions o;
  o.horizon = c.horizon;
  o.n1_enabled = c.n1;
  o.ramps = !c.no_ramps;
  o.bnb.relative_gap = c.gap;
  o.bnb.node_limit = c.node_limit;
  o.bnb.time_limit_s = c.time_limit;
  return o;
}

json options_json(const uc::UcOptions& o) {
  return {{"horizon", o.horizon},
          {"n1", o.n1_enabled},
          {"ramps", o.ramps},
          {"gap", o.bnb.relative_gap},
          {"node_limit", o.bnb.node_limit},
          {"time_limit", o.bnb.time_limit_s}};
}

uc::UcOptions options_from_json(const json& j) {
  uc::UcOptions o;
  try {
    o.horizon = j.at("horizon").get<int>();
    o.n1_enabled = j.at("n1").get<bool>();
    o.ramps = j.at("ramps").get<bool>();
    o.bnb.relative_gap = j.at("gap").get<double>();
    o.bnb.node_limit = j.at("node_limit").get<long>();
    o.bnb.time_limit_s = j.at("time_limit").get<double>();
  } catch (const json::exception& e) {
    throw SchemaError("archive options: " + std::string(e.what()));
  }
  return o;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string dump_lines(const std::vector<json>& docs) {
  std::string s;
  for (const auto& d : docs) s += d.dump() + '\n';
  return s;
}

eval::Header header_of(const archive::Provenance& p, const std::string& kind) {
  return {{"artifact", kind},
          {"tool_version", p.tool_version},
          {"config_hash", p.config_hash},
          {"seed", std::to_string(p.seed)},
          {"fingerprint", p.fingerprint}};
}

json index_provenance(const fs::path& dir) {
  std::ifstream in(dir / "provenance.json");
  if (!in) throw MissingArtifactError("index provenance not found in " + dir.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("index provenance: " + std::string(e.what()));
  }
}

Eigen::VectorXd weights(const RunConfig& c, const grid::GridCase& grid, int hours) {
  Eigen::VectorXd xi(proxy::feature_length(grid, hours));
  if (!c.xi_file.empty()) {
    std::ifstream in(c.xi_file);
    if (!in) throw MissingArtifactError("weights file not found: " + c.xi_file);
    std::vector<double> w;
    try {
      w = json::parse(in).get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw SchemaError("weights file: " + std::string(e.what()));
    }
    if (static_cast<Eigen::Index>(w.size()) != xi.size()) {
      throw PreconditionError("weights file has " + std::to_string(w.size()) + " entries, features have " +
                              std::to_string(xi.size()));
    }
    return Eigen::Map<const Eigen::VectorXd>(w.data(), xi.size());
  }
  const Eigen::Index nd = hours * grid.num_buses(), nw = hours * grid.num_wind();
  xi.head(nd).setConstant(c.xi_demand);
  xi.segment(nd, nw).setConstant(c.xi_wind);
  xi.tail(grid.num_lines()).setConstant(c.xi_topology);
  return xi;
}

int hours_of(const std::vector<proxy::Record>& records, const grid::GridCase& grid) {
  const auto per_hour = grid.num_buses() + grid.num_wind();
  return static_cast<int>((records.front().features.size() - grid.num_lines()) / per_hour);
}

std::vector<proxy::Record> load_pool(const RunConfig& c, const grid::GridCase& grid, json& sources,
                                     std::uint64_t& seed) {
  if (c.train.empty()) throw PreconditionError("missing required option --train");
  std::vector<proxy::Record> pool;
  sources = json::array();
  for (std::size_t k = 0; k < c.train.size(); ++k) {
    const auto a = archive::read_archive(c.train[k]);
    auto recs = archive::to_records(grid, a);
    if (k == 0) seed = a.header.provenance.seed;
    sources.push_back({{"config_hash", a.header.provenance.config_hash}, {"records", a.entries.size()}});
    for (auto& r : recs) pool.push_back(std::move(r));
  }
  if (pool.empty()) throw PreconditionError("training archives hold no labeled scenarios");
  return pool;
}

std::map<std::uint64_t, double> read_timings(const fs::path& archive_path) {
  std::map<std::uint64_t, double> out;
  std::ifstream in(archive::timings_path(archive_path));
  for (std::string line; std::getline(in, line);) {
    try {
      const auto j = json::parse(line);
      out[j.at("id").get<std::uint64_t>()] = j.at("build_seconds").get<double>() + j.at("solve_seconds").get<double>();
    } catch (const json::exception&) {
      // torn sidecar line; timing simply unknown
    }
  }
  return out;
}

std::vector<eval::TestSample> test_samples(const archive::Archive& a, const fs::path& path) {
  const auto timings = read_timings(path);
  std::vector<eval::TestSample> out;
  for (const auto& e : a.entries) {
    eval::TestSample t;
    t.input = e.input;
    if (e.solution) {
      t.exact = *e.solution;
    } else {
      t.exact.status = e.status;
    }
    if (auto it = timings.find(e.input.id); it != timings.end()) t.exact_seconds = it->second;
    out.push_back(std::move(t));
  }
  return out;
}

// ---- generate ----

struct Outcome {
  archive::Entry entry;
  json timing;
};

/// Appends outcomes to the archive strictly in id order, whatever order the
/// workers finish in.
class OrderedWriter {
 public:
  OrderedWriter(const fs::path& path, std::size_t total) : out_(path, std::ios::binary | std::ios::app),
        timings_(archive::timings_path(path), std::ios::binary | std::ios::app), slots_(total) {
    if (!out_) throw Error("cannot append to " + path.string());
  }

  void put(std::size_t slot, Outcome o) {
    std::lock_guard lock(mutex_);
    slots_[slot] = std::move(o);
    while (next_ < slots_.size() && slots_[next_]) {
      out_ << archive::entry_to_json(slots_[next_]->entry).dump() << '\n';
      out_.flush();
      timings_ << slots_[next_]->timing.dump() << '\n';
      timings_.flush();
      slots_[next_].reset();
      ++next_;
    }
    if (!out_) throw Error("archive write failed");
  }

  std::size_t written() const { return next_; }

 private:
  std::mutex mutex_;
  std::ofstream out_, timings_;
  std::vector<std::optional<Outcome>> slots_;
  std::size_t next_ = 0;
};

Outcome label(const grid::GridCase& grid, const sampling::UcInput& x, const uc::UcOptions& opts) {
  Outcome o;
  o.entry.input = x;
  try {
    const uc::UcSolution sol = uc::solve(grid, x, opts);
    o.entry.status = sol.status;
    if (sol.feasible()) o.entry.solution = std::make_shared<const uc::UcSolution>(sol);
    o.timing = {{"id", x.id}, {"build_seconds", sol.build_seconds}, {"solve_seconds", sol.solve_seconds},
                {"nodes", sol.nodes}};
  } catch (const Error& e) {
    o.entry.status = uc::SolveStatus::Failed;
    o.timing = {{"id", x.id}, {"build_seconds", 0.0}, {"solve_seconds", 0.0}, {"error", e.what()}};
  }
  if (!o.entry.solution) std::cerr << "warning: scenario " << x.id << ": " << uc::to_string(o.entry.status) << '\n';
  return o;
}

fs::path manifest_path(const fs::path& archive_path) {
  auto p = archive_path;
  p += ".manifest.json";
  return p;
}

void write_manifest(const fs::path& path, const archive::Archive& a) {
  json ids = json::array(), flagged = json::array();
  for (const auto& e : a.entries) {
    ids.push_back(e.input.id);
    if (!e.labeled()) flagged.push_back(e.input.id);
  }
  json doc = {{"provenance", a.header.provenance.to_json()},
              {"count", a.entries.size()},
              {"ids", ids},
              {"flagged", flagged}};
  write_text(manifest_path(path), doc.dump(2) + '\n');
}

int cmd_generate(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.sampler_path, "--sampler");
  require(c.out, "--out");
  if (c.count < 1) throw PreconditionError("--count must be >= 1");
  const auto grid = grid::load_case(c.case_path);
  const auto sampler = sampling::load_sampler_config(c.sampler_path);
  sampler.check_against(grid);
  const auto opts = uc_options(c);
  const bool external = !c.external_dir.empty();

  archive::ArchiveHeader header;
  header.provenance.seed = c.seed.value_or(sampler.seed);
  header.provenance.fingerprint = grid::fingerprint(grid);
  header.first_id = c.first_id;
  header.options = options_json(opts);
  header.options["solver"] = external ? "external" : "internal";
  header.provenance.config_hash = archive::hash_json({{"command", "generate"},
                                                      {"sampler", sampling::sampler_config_to_json(sampler)},
                                                      {"seed", header.provenance.seed},
                                                      {"first_id", header.first_id},
                                                      {"options", header.options}});
  const json header_doc = archive::header_to_json(header);

  const fs::path out = c.out;
  std::set<std::uint64_t> done;
  if (fs::exists(out)) {
    const auto existing = archive::read_archive(out);
    if (archive::header_to_json(existing.header) != header_doc) {
      throw PreconditionError(out.string() + " holds an archive with a different configuration");
    }
    if (existing.truncated) fs::resize_file(out, existing.valid_bytes);
    for (const auto& e : existing.entries) done.insert(e.input.id);
    std::cerr << "resuming: " << done.size() << " scenarios already in " << out.string() << '\n';
  } else {
    write_text(out, header_doc.dump() + '\n');
    write_text(archive::timings_path(out), "");
  }

  std::vector<std::uint64_t> pending;
  for (long k = 0; k < c.count; ++k) {
    const std::uint64_t id = c.first_id + static_cast<std::uint64_t>(k);
    if (!done.count(id)) pending.push_back(id);
  }
  OrderedWriter writer(out, pending.size());
  const std::uint64_t seed = header.provenance.seed;

  if (!external) {
    parallel_for(pending.size(), worker_count(c), [&](std::size_t i) {
      writer.put(i, label(grid, sampling::sample_scenario(sampler, grid, seed, pending[i]), opts));
    });
  } else {
    // Watch-directory exchange: one MPS per scenario out, one solution file
    // per scenario back.
    const fs::path dir = c.external_dir;
    fs::create_directories(dir);
    std::vector<sampling::UcInput> inputs;
    std::vector<uc::UcModel> models;
    for (auto id : pending) {
      inputs.push_back(sampling::sample_scenario(sampler, grid, seed, id));
      models.push_back(uc::build_milp(grid, inputs.back(), opts));
      const fs::path mps = dir / ("scenario_" + std::to_string(id) + ".mps");
      if (!fs::exists(mps)) milp::export_standard(models.back().model, mps);
    }
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(c.external_wait);
    std::vector<bool> taken(pending.size(), false);
    for (;;) {
      for (std::size_t i = 0; i < pending.size(); ++i) {
        if (taken[i]) continue;
        const fs::path sol_path = dir / ("scenario_" + std::to_string(pending[i]) + ".sol");
        if (!fs::exists(sol_path)) continue;
        Outcome o;
        o.entry.input = inputs[i];
        const auto values = milp::import_solution(sol_path, models[i].model);
        uc::UcSolution sol = uc::decode(models[i], values);
        try {
          sol.breakdown = uc::evaluate_cost(grid, inputs[i], sol);
          sol.cost = sol.breakdown.total();
          sol.status = uc::validate_solution(grid, inputs[i], sol, opts, 1e-5).empty() ? uc::SolveStatus::Optimal
                                                                                         : uc::SolveStatus::Failed;
        } catch (const ValidationError&) {
          sol.status = uc::SolveStatus::Failed;
        }
        o.entry.status = sol.status;
        if (sol.feasible()) o.entry.solution = std::make_shared<const uc::UcSolution>(sol);
        else std::cerr << "warning: scenario " << pending[i] << ": external solution rejected\n";
        o.timing = {{"id", pending[i]}, {"build_seconds", 0.0}, {"solve_seconds", 0.0}, {"external", true}};
        writer.put(i, std::move(o));
        taken[i] = true;
      }
      if (writer.written() == pending.size() || std::chrono::steady_clock::now() >= deadline) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
  }

  const auto final_archive = archive::read_archive(out);
  write_manifest(out, final_archive);
  const std::size_t left = pending.size() - writer.written();
  std::cout << "archive " << out.string() << ": " << final_archive.entries.size() << " scenarios";
  if (left) std::cout << ", " << left << " awaiting external solutions";
  std::cout << '\n';
  return left ? kPending : kOk;
}

// ---- build-index ----

int cmd_build_index(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.out, "--out");
  const auto grid = grid::load_case(c.case_path);
  json sources;
  std::uint64_t seed = 0;
  auto pool = load_pool(c, grid, sources, seed);
  const auto xi = weights(c, grid, hours_of(pool, grid));
  const auto backend = proxy::backend_from_string(c.backend);
  const auto index = proxy::ProxyIndex::build(std::move(pool), xi, proxy::index_fingerprint(grid), backend);
  const fs::path dir = c.out;
  index.save(dir);
  archive::Provenance p;
  p.seed = seed;
  p.fingerprint = grid::fingerprint(grid);
  p.config_hash = archive::hash_json({{"command", "build-index"},
                                      {"sources", sources},
                                      {"weights", std::vector<double>(xi.data(), xi.data() + xi.size())},
                                      {"backend", proxy::to_string(backend)}});
  write_text(dir / "provenance.json", json{{"provenance", p.to_json()}, {"sources", sources}}.dump(2) + '\n');
  std::cout << "index " << dir.string() << ": " << index.size() << " records, dimension " << index.dimension()
            << ", backend " << proxy::to_string(backend) << '\n';
  return kOk;
}

// ---- predict ----

std::vector<sampling::UcInput> read_inputs(const fs::path& path, json& source) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("inputs not found: " + path.string());
  std::string first;
  std::getline(in, first);
  json doc;
  try {
    doc = json::parse(first);
  } catch (const json::parse_error&) {
    doc = nullptr;
  }
  if (doc.is_object() && doc.value("format", "") == "ucnn-scenarios") {
    const auto a = archive::read_archive(path);
    source = {{"archive", a.header.provenance.config_hash}};
    std::vector<sampling::UcInput> out;
    for (const auto& e : a.entries) out.push_back(e.input);
    return out;
  }
  in.clear();
  in.seekg(0);
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  source = {{"input", archive::hash_json(doc)}};
  std::vector<sampling::UcInput> out;
  if (doc.is_array()) {
    for (const auto& d : doc) out.push_back(sampling::input_from_json(d));
  } else {
    out.push_back(sampling::input_from_json(doc));
  }
  return out;
}

int cmd_predict(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.index_dir, "--index");
  require(c.inputs, "--inputs");
  const auto grid = grid::load_case(c.case_path);
  const auto index = proxy::ProxyIndex::load(c.index_dir);
  const auto index_prov = archive::Provenance::from_json(index_provenance(c.index_dir).at("provenance"));
  json source;
  const auto inputs = read_inputs(c.inputs, source);

  std::vector<proxy::Prediction> preds(inputs.size());
  parallel_for(inputs.size(), worker_count(c), [&](std::size_t i) { preds[i] = index.predict(grid, inputs[i]); });

  archive::Provenance p = index_prov;
  p.config_hash = archive::hash_json(
      {{"command", "predict"}, {"index", index_prov.config_hash}, {"source", source}, {"with_solution", c.with_solution}});
  std::vector<json> lines{{{"format", "ucnn-predictions"}, {"provenance", p.to_json()}}};
  std::vector<json> timing_lines;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    json row = {{"id", inputs[i].id}, {"neighbor", preds[i].neighbor}, {"cost", preds[i].cost},
                {"distance", preds[i].distance}};
    if (c.with_solution && preds[i].solution) row["solution"] = uc::solution_to_json(*preds[i].solution);
    lines.push_back(std::move(row));
    timing_lines.push_back({{"id", inputs[i].id}, {"seconds", preds[i].seconds}});
  }
  if (c.out.empty()) {
    std::cout << dump_lines(lines);
  } else {
    write_text(c.out, dump_lines(lines));
    write_text(fs::path(c.out).string() + ".timings.jsonl", dump_lines(timing_lines));
    std::cout << "predictions " << c.out << ": " << inputs.size() << " queries\n";
  }
  return kOk;
}

// ---- evaluate / sweep / benchmark ----

void print_aggregates(const eval::Aggregates& a) {
  std::cout << "  rows " << a.rows << " (excluded " << a.excluded << "), mean relative error " << a.mean_relative_error
            << ", correlation " << a.correlation << ", density " << a.density << '\n';
}

int cmd_evaluate(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.index_dir, "--index");
  require(c.test, "--test");
  require(c.out, "--out");
  const auto grid = grid::load_case(c.case_path);
  const auto index = proxy::ProxyIndex::load(c.index_dir);
  const auto index_prov = archive::Provenance::from_json(index_provenance(c.index_dir).at("provenance"));
  const auto test = archive::read_archive(c.test);
  if (test.header.provenance.fingerprint != grid::fingerprint(grid)) {
    throw FingerprintError("test archive was generated for a different case");
  }
  const auto tests = test_samples(test, c.test);
  const auto report = eval::evaluate(grid, index, tests, !c.allow_overlap, worker_count(c));

  archive::Provenance p = index_prov;
  p.config_hash = archive::hash_json({{"command", "evaluate"},
                                      {"index", index_prov.config_hash},
                                      {"test", test.header.provenance.config_hash},
                                      {"allow_overlap", c.allow_overlap}});
  const auto header = header_of(p, "evaluation");
  std::ostringstream rep, tim;
  eval::write_report(rep, report, header);
  eval::write_timings(tim, report, header);
  write_text(fs::path(c.out) / "report.csv", rep.str());
  write_text(fs::path(c.out) / "timings.csv", tim.str());
  std::cout << "evaluation " << c.out << ":\n";
  print_aggregates(report.overall);
  return kOk;
}

int cmd_sweep(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.test, "--test");
  require(c.out, "--out");
  if (c.sizes.empty()) throw PreconditionError("missing required option --sizes");
  const auto grid = grid::load_case(c.case_path);
  json sources;
  std::uint64_t seed = 0;
  const auto pool = load_pool(c, grid, sources, seed);
  const auto xi = weights(c, grid, hours_of(pool, grid));
  const auto test = archive::read_archive(c.test);
  if (test.header.provenance.fingerprint != grid::fingerprint(grid)) {
    throw FingerprintError("test archive was generated for a different case");
  }
  const auto tests = test_samples(test, c.test);
  const auto sweep = eval::sweep_train_size(grid, pool, c.sizes, tests, xi, proxy::backend_from_string(c.backend),
                                            c.shuffle_seed, worker_count(c));
  archive::Provenance p;
  p.seed = c.shuffle_seed;
  p.fingerprint = grid::fingerprint(grid);
  p.config_hash = archive::hash_json({{"command", "sweep"},
                                      {"sources", sources},
                                      {"test", test.header.provenance.config_hash},
                                      {"sizes", c.sizes},
                                      {"weights", std::vector<double>(xi.data(), xi.data() + xi.size())},
                                      {"backend", c.backend}});
  const auto header = header_of(p, "sweep");
  std::ostringstream s;
  eval::write_sweep(s, sweep, header);
  write_text(fs::path(c.out) / "sweep.csv", s.str());
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    std::ostringstream r;
    auto h = header;
    h.emplace_back("size", std::to_string(sweep[k].size));
    eval::write_report(r, sweep[k].report, h);
    write_text(fs::path(c.out) / ("report_" + std::to_string(k) + "_" + std::to_string(sweep[k].size) + ".csv"),
               r.str());
  }
  std::cout << "sweep " << c.out << ":\n";
  for (const auto& pt : sweep) {
    std::cout << "  size " << pt.size;
    print_aggregates(pt.report.overall);
  }
  return kOk;
}

int cmd_benchmark(const RunConfig& c) {
  require(c.case_path, "--case");
  require(c.index_dir, "--index");
  require(c.test, "--test");
  require(c.out, "--out");
  const auto grid = grid::load_case(c.case_path);
  const auto index = proxy::ProxyIndex::load(c.index_dir);
  const auto index_prov = archive::Provenance::from_json(index_provenance(c.index_dir).at("provenance"));
  const auto test = archive::read_archive(c.test);
  std::vector<sampling::UcInput> inputs;
  for (const auto& e : test.entries) {
    if (static_cast<long>(inputs.size()) >= c.count + 1) break;  // +1 warm-up
    inputs.push_back(e.input);
  }
  const auto opts = options_from_json(test.header.options);
  const auto b = eval::benchmark_runtime(grid, index, inputs, opts);

  archive::Provenance p = index_prov;
  p.config_hash = archive::hash_json({{"command", "benchmark"},
                                      {"index", index_prov.config_hash},
                                      {"test", test.header.provenance.config_hash},
                                      {"count", c.count}});
  json ids = json::array();
  for (std::size_t i = 1; i < inputs.size(); ++i) ids.push_back(inputs[i].id);
  const json plan = {{"provenance", p.to_json()}, {"warmup_id", inputs.empty() ? json(nullptr) : json(inputs[0].id)},
                     {"timed_ids", ids}, {"options", test.header.options}};
  const json timings = {{"instances", b.instances},
                        {"mean_build_seconds", b.mean_build_seconds},
                        {"mean_solve_seconds", b.mean_solve_seconds},
                        {"mean_exact_seconds", b.mean_exact_seconds},
                        {"mean_proxy_seconds", b.mean_proxy_seconds},
                        {"speedup", b.speedup},
                        {"exact_seconds", b.exact_seconds},
                        {"proxy_seconds", b.proxy_seconds},
                        {"hardware_threads", std::thread::hardware_concurrency()}};
  write_text(fs::path(c.out) / "benchmark.json", plan.dump(2) + '\n');
  write_text(fs::path(c.out) / "benchmark_timings.json", timings.dump(2) + '\n');
  std::cout << "benchmark " << c.out << ": " << b.instances << " instances, exact " << b.mean_exact_seconds
            << " s (build " << b.mean_build_seconds << ", solve " << b.mean_solve_seconds << "), proxy "
            << b.mean_proxy_seconds << " s, speedup " << b.speedup << "x\n";
  return kOk;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return kSchema;
  if (dynamic_cast<const ValidationError*>(&e)) return kValidation;
  if (dynamic_cast<const MissingArtifactError*>(&e)) return kMissingArtifact;
  if (dynamic_cast<const FingerprintError*>(&e)) return kFingerprint;
  if (dynamic_cast<const DisjointnessError*>(&e)) return kDisjointness;
  if (dynamic_cast<const PreconditionError*>(&e)) return kPrecondition;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  return kError;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  RunConfig c;
  CLI::App app{"Unit-commitment proxy: exact MILP solves and nearest-neighbour prediction", "ucnn"};
  app.set_version_flag("--version", archive::kToolVersion);
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", c.config_file, "JSON file whose keys override flags");
    s->add_option("--case", c.case_path, "grid case JSON");
    s->add_option("--workers", c.workers, "worker threads (default: $UCNN_WORKERS, else all cores)");
  };
  auto solver = [&](CLI::App* s) {
    s->add_option("--horizon", c.horizon, "scheduled hours");
    s->add_flag("--n1", c.n1, "enforce N-1 line security");
    s->add_flag("--no-ramps", c.no_ramps, "drop ramp limits");
    s->add_option("--gap", c.gap, "relative optimality gap");
    s->add_option("--node-limit", c.node_limit, "branch-and-bound node limit");
    s->add_option("--time-limit", c.time_limit, "per-solve time limit, s");
  };
  auto index_opts = [&](CLI::App* s) {
    s->add_option("--backend", c.backend, "search backend: linear | kd-tree");
    s->add_option("--xi-demand", c.xi_demand, "distance weight on demand coordinates");
    s->add_option("--xi-wind", c.xi_wind, "distance weight on wind coordinates");
    s->add_option("--xi-topology", c.xi_topology, "distance weight on topology coordinates");
    s->add_option("--xi-file", c.xi_file, "JSON array with one weight per feature");
  };

  auto* gen = app.add_subcommand("generate", "sample scenarios and label them with exact solves");
  common(gen);
  solver(gen);
  gen->add_option("--sampler", c.sampler_path, "sampler config JSON");
  gen->add_option("--out", c.out, "scenario archive (JSONL); resumed when present");
  gen->add_option("--count", c.count, "number of scenarios");
  gen->add_option("--first-id", c.first_id, "id of the first scenario");
  gen->add_option("--seed", seed, "stream seed (default: sampler config)");
  gen->add_option("--external-dir", c.external_dir, "exchange MPS / solution files here instead of solving");
  gen->add_option("--external-wait", c.external_wait, "seconds to wait for external solutions");

  auto* bi = app.add_subcommand("build-index", "index labeled scenarios for nearest-neighbour lookup");
  common(bi);
  index_opts(bi);
  bi->add_option("--train", c.train, "scenario archive(s)");
  bi->add_option("--out", c.out, "index directory");

  auto* pr = app.add_subcommand("predict", "predict solutions for scenarios");
  common(pr);
  pr->add_option("--index", c.index_dir, "index directory");
  pr->add_option("--inputs", c.inputs, "scenario archive, or JSON scenario / array of scenarios");
  pr->add_option("--out", c.out, "predictions (JSONL); stdout when omitted");
  pr->add_flag("--with-solution", c.with_solution, "include the predicted schedule");

  auto* ev = app.add_subcommand("evaluate", "compare predictions with exact labels on a test archive");
  common(ev);
  ev->add_option("--index", c.index_dir, "index directory");
  ev->add_option("--test", c.test, "labeled test archive");
  ev->add_option("--out", c.out, "report directory");
  ev->add_flag("--allow-overlap", c.allow_overlap, "skip the train/test disjointness check");

  auto* sw = app.add_subcommand("sweep", "evaluate nested training prefixes of increasing size");
  common(sw);
  index_opts(sw);
  sw->add_option("--train", c.train, "scenario archive(s) forming the pool");
  sw->add_option("--test", c.test, "labeled test archive");
  sw->add_option("--sizes", c.sizes, "ascending training sizes")->delimiter(',');
  sw->add_option("--shuffle-seed", c.shuffle_seed, "seed of the pool permutation");
  sw->add_option("--out", c.out, "report directory");

  auto* bm = app.add_subcommand("benchmark", "time exact solves against proxy queries");
  common(bm);
  bm->add_option("--index", c.index_dir, "index directory");
  bm->add_option("--test", c.test, "scenario archive to re-solve");
  bm->add_option("--count", c.count, "timed instances (one extra warm-up)");
  bm->add_option("--out", c.out, "report directory");
  bm->callback([&] {
    if (bm->count("--count") == 0) c.count = 20;
  });

  std::vector<std::string> argv_store{"ucnn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (seed) c.seed = seed;
    if (!c.config_file.empty()) apply_config_file(c);
    if (gen->parsed()) return cmd_generate(c);
    if (bi->parsed()) return cmd_build_index(c);
    if (pr->parsed()) return cmd_predict(c);
    if (ev->parsed()) return cmd_evaluate(c);
    if (sw->parsed()) return cmd_sweep(c);
    if (bm->parsed()) return cmd_benchmark(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return kUsage;
}

}  // namespace ucnn::cli
