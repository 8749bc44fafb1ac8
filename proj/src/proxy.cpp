#include "ucnn/proxy.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "ucnn/hash.hpp"

namespace ucnn::proxy {

using nlohmann::json;

int feature_length(const grid::GridCase& grid, int hours) {
  return hours * grid.num_buses() + hours * grid.num_wind() + grid.num_lines();
}

Eigen::VectorXd featurize(const grid::GridCase& grid, const sampling::UcInput& x) {
  const int T = x.hours();
  if (x.demand.cols() != grid.num_buses() || x.wind.cols() != grid.num_wind() || x.wind.rows() != T ||
      static_cast<int>(x.top.size()) != grid.num_lines()) {
    throw PreconditionError("input shape does not match the case");
  }
  Eigen::VectorXd phi(feature_length(grid, T));
  Eigen::Index k = 0;
  for (int t = 0; t < T; ++t)
    for (int b = 0; b < grid.num_buses(); ++b) phi[k++] = x.demand(t, b);
  for (int t = 0; t < T; ++t)
    for (int w = 0; w < grid.num_wind(); ++w) phi[k++] = x.wind(t, w);
  for (auto bit : x.top) phi[k++] = bit;
  return phi;
}

Eigen::VectorXd default_weights(const grid::GridCase& grid, int hours) {
  Eigen::VectorXd xi = Eigen::VectorXd::Ones(feature_length(grid, hours));
  xi.tail(grid.num_lines()).setConstant(kTopologyWeight);
  return xi;
}

std::string index_fingerprint(const grid::GridCase& grid) {
  return hex64(fnv1a64(kConvention, fnv1a64(grid::case_to_json(grid).dump())));
}

const char* to_string(Backend b) { return b == Backend::KdTree ? "kd-tree" : "linear"; }

Backend backend_from_string(const std::string& s) {
  if (s == "linear") return Backend::Linear;
  if (s == "kd-tree" || s == "kdtree") return Backend::KdTree;
  throw SchemaError("unknown search backend '" + s + "'");
}

// ---- kd-tree ----

namespace {
constexpr std::size_t kLeafSize = 16;

// (sq, id) lexicographic order: smaller distance first, then lower id.
bool better(double sq, std::uint64_t id, double best_sq, std::uint64_t best_id) {
  return sq < best_sq || (sq == best_sq && id < best_id);
}
}  // namespace

void KdTree::build(const Eigen::MatrixXd& points, std::vector<std::size_t> members) {
  order_ = std::move(members);
  nodes_.clear();
  if (!order_.empty()) build_node(points, 0, order_.size());
}

int KdTree::build_node(const Eigen::MatrixXd& points, std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, -1, -1, begin, end});
  if (end - begin <= kLeafSize) return id;
  int dim = -1;
  double widest = 0.0;
  for (Eigen::Index d = 0; d < points.rows(); ++d) {
    double lo = points(d, order_[begin]), hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = points(d, order_[i]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      dim = static_cast<int>(d);
    }
  }
  if (dim < 0) return id;  // all points coincide
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return points(dim, a) < points(dim, b); });
  const double split = points(dim, order_[mid]);
  const int left = build_node(points, begin, mid);
  const int right = build_node(points, mid, end);
  nodes_[id].dim = dim;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(const Eigen::MatrixXd& points, const std::vector<std::uint64_t>& ids, const Eigen::VectorXd& q,
                    std::size_t& best, double& best_sq, bool& found) const {
  if (!nodes_.empty()) search_node(0, points, ids, q, best, best_sq, found);
}

void KdTree::search_node(int n, const Eigen::MatrixXd& points, const std::vector<std::uint64_t>& ids,
                         const Eigen::VectorXd& q, std::size_t& best, double& best_sq, bool& found) const {
  const Node& node = nodes_[n];
  if (node.dim < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t p = order_[i];
      const double sq = squared_distance(q, points.col(static_cast<Eigen::Index>(p)));
      if (!found || better(sq, ids[p], best_sq, ids[best])) {
        best = p;
        best_sq = sq;
        found = true;
      }
    }
    return;
  }
  // Left holds coordinates <= split, right >= split.
  const double diff = q[node.dim] - node.split;
  const int near = diff <= 0.0 ? node.left : node.right;
  const int far = diff <= 0.0 ? node.right : node.left;
  search_node(near, points, ids, q, best, best_sq, found);
  // The computed slab term never exceeds the same coordinate's term in a
  // computed distance, so the strict test is exact.
  if (!found || diff * diff <= best_sq) search_node(far, points, ids, q, best, best_sq, found);
}

// ---- index ----

ProxyIndex::ProxyIndex(Eigen::VectorXd xi, std::string fingerprint, Backend backend)
    : xi_(std::move(xi)), fingerprint_(std::move(fingerprint)), backend_(backend) {
  if (xi_.size() == 0) throw PreconditionError("distance weights are empty");
  if (!(xi_.array() > 0.0).all() || !xi_.allFinite()) {
    throw PreconditionError("distance weights must be positive and finite");
  }
}

ProxyIndex ProxyIndex::build(std::vector<Record> records, Eigen::VectorXd xi, std::string fingerprint,
                             Backend backend) {
  if (records.empty()) throw PreconditionError("cannot build an index from no records");
  ProxyIndex index(std::move(xi), std::move(fingerprint), backend);
  for (const auto& r : records) {
    if (!r.fingerprint.empty() && r.fingerprint != index.fingerprint_) {
      throw FingerprintError("record " + std::to_string(r.id) + " was built for a different case");
    }
  }
  index.records_.reserve(records.size());
  index.scaled_.resize(index.dimension(), static_cast<Eigen::Index>(records.size()));
  std::unordered_set<std::uint64_t> seen;
  for (auto& r : records) {
    if (!seen.insert(r.id).second) throw PreconditionError("duplicate sample id " + std::to_string(r.id));
    if (r.features.size() != index.dimension()) throw PreconditionError("feature length mismatch");
    r.fingerprint.clear();
    index.scaled_.col(static_cast<Eigen::Index>(index.records_.size())) = index.xi_.cwiseProduct(r.features);
    index.ids_.push_back(r.id);
    index.records_.push_back(std::move(r));
  }
  if (backend == Backend::KdTree) index.rebuild_tree();
  return index;
}

void ProxyIndex::add_sample(Record record) {
  if (record.features.size() != dimension()) throw PreconditionError("feature length mismatch");
  if (!record.fingerprint.empty() && record.fingerprint != fingerprint_) {
    throw FingerprintError("record " + std::to_string(record.id) + " was built for a different case");
  }
  if (std::find(ids_.begin(), ids_.end(), record.id) != ids_.end()) {
    throw PreconditionError("duplicate sample id " + std::to_string(record.id));
  }
  const auto n = static_cast<Eigen::Index>(records_.size());
  if (scaled_.cols() <= n) scaled_.conservativeResize(dimension(), std::max<Eigen::Index>(16, 2 * n));
  scaled_.col(n) = xi_.cwiseProduct(record.features);
  record.fingerprint.clear();
  ids_.push_back(record.id);
  records_.push_back(std::move(record));
  // Buffered inserts; rebuild once the buffer outgrows the tree.
  if (backend_ == Backend::KdTree && records_.size() - tree_count_ > std::max<std::size_t>(tree_count_, 64)) {
    rebuild_tree();
  }
}

void ProxyIndex::rebuild_tree() {
  std::vector<std::size_t> all(records_.size());
  std::iota(all.begin(), all.end(), 0);
  tree_.build(scaled_, std::move(all));
  tree_count_ = records_.size();
}

Neighbor ProxyIndex::nearest(const Eigen::VectorXd& features) const {
  if (records_.empty()) throw PreconditionError("index is empty");
  if (features.size() != dimension()) throw PreconditionError("feature length mismatch");
  const Eigen::VectorXd q = xi_.cwiseProduct(features);
  std::size_t best = 0;
  double best_sq = 0.0;
  bool found = false;
  std::size_t scan_from = 0;
  if (backend_ == Backend::KdTree) {
    tree_.search(scaled_, ids_, q, best, best_sq, found);
    scan_from = tree_count_;
  }
  for (std::size_t p = scan_from; p < records_.size(); ++p) {
    const double sq = squared_distance(q, scaled_.col(static_cast<Eigen::Index>(p)));
    if (!found || better(sq, ids_[p], best_sq, ids_[best])) {
      best = p;
      best_sq = sq;
      found = true;
    }
  }
  return {best, best_sq};
}

Prediction ProxyIndex::predict(const grid::GridCase& grid, const sampling::UcInput& x) const {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  if (records_.empty()) throw PreconditionError("index is empty");
  if (index_fingerprint(grid) != fingerprint_) throw FingerprintError("index was built for a different case");
  const Neighbor nb = nearest(featurize(grid, x));
  const Record& r = records_[nb.position];
  Prediction p;
  p.neighbor = r.id;
  p.cost = r.cost;
  p.distance = std::sqrt(nb.squared);
  p.solution = r.solution;
  p.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return p;
}

void ProxyIndex::save(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  json meta;
  meta["format_version"] = kIndexFormatVersion;
  meta["fingerprint"] = fingerprint_;
  meta["convention"] = kConvention;
  meta["backend"] = to_string(backend_);
  meta["dimension"] = dimension();
  meta["count"] = records_.size();
  meta["weights"] = std::vector<double>(xi_.data(), xi_.data() + xi_.size());
  {
    std::ofstream out(dir / "meta.json");
    if (!out) throw Error("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
  }
  std::ofstream out(dir / "records.jsonl");
  if (!out) throw Error("cannot write " + (dir / "records.jsonl").string());
  for (const auto& r : records_) {
    json line;
    line["id"] = r.id;
    line["seed"] = r.seed;
    line["month"] = r.month;
    line["cost"] = r.cost;
    line["features"] = std::vector<double>(r.features.data(), r.features.data() + r.features.size());
    line["solution"] = r.solution ? uc::solution_to_json(*r.solution) : json(nullptr);
    out << line.dump() << '\n';
  }
  if (!out) throw Error("failed writing " + (dir / "records.jsonl").string());
}

ProxyIndex ProxyIndex::load(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw MissingArtifactError("index metadata not found in " + dir.string());
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("index metadata: ") + e.what());
  }
  std::vector<Record> records;
  std::string fingerprint;
  Eigen::VectorXd xi;
  Backend backend;
  std::size_t count = 0;
  try {
    if (meta.at("format_version").get<int>() != kIndexFormatVersion) {
      throw SchemaError("unsupported index format version");
    }
    if (meta.at("convention").get<std::string>() != kConvention) {
      throw FingerprintError("index uses a different flattening convention");
    }
    fingerprint = meta.at("fingerprint").get<std::string>();
    backend = backend_from_string(meta.at("backend").get<std::string>());
    const auto w = meta.at("weights").get<std::vector<double>>();
    xi = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    count = meta.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("index metadata: ") + e.what());
  }
  std::ifstream in(dir / "records.jsonl");
  if (!in) throw MissingArtifactError("index records not found in " + dir.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Record r;
      r.id = j.at("id").get<std::uint64_t>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.month = j.at("month").get<int>();
      r.cost = j.at("cost").get<double>();
      const auto f = j.at("features").get<std::vector<double>>();
      r.features = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
      if (!j.at("solution").is_null()) {
        r.solution = std::make_shared<const uc::UcSolution>(uc::solution_from_json(j.at("solution")));
      }
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw SchemaError(std::string("index record: ") + e.what());
    }
  }
  if (records.size() != count) throw SchemaError("index record count does not match its metadata");
  return build(std::move(records), std::move(xi), std::move(fingerprint), backend);
}

}  // namespace ucnn::proxy
