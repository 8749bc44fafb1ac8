#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ucnn/error.hpp"
#include "ucnn/grid.hpp"
#include "ucnn/sampling.hpp"
#include "ucnn/uc.hpp"

namespace ucnn::proxy {

/// Flattening convention: demand hour-major (hour 1 all buses, hour 2 all
/// buses, ...), then wind hour-major, then topology by line order.
inline constexpr const char* kConvention = "hour-major:demand,wind,topology:v1";
inline constexpr int kIndexFormatVersion = 1;
inline constexpr double kTopologyWeight = 100.0;

int feature_length(const grid::GridCase& grid, int hours);

Eigen::VectorXd featurize(const grid::GridCase& grid, const sampling::UcInput& x);

/// kTopologyWeight on topology coordinates, 1 elsewhere.
Eigen::VectorXd default_weights(const grid::GridCase& grid, int hours);

/// Squared xi-weighted distance over already-scaled coordinates. A plain
/// left-to-right loop so every backend sees bit-identical sums.
template <typename DerivedA, typename DerivedB>
double squared_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a.derived().coeff(i) - b.derived().coeff(i);
    s += d * d;
  }
  return s;
}

/// sqrt(sum_i (xi_i (a_i - b_i))^2). Throws PreconditionError on length mismatch.
template <typename DerivedA, typename DerivedB, typename DerivedW>
double distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                const Eigen::MatrixBase<DerivedW>& xi) {
  if (a.size() != b.size() || a.size() != xi.size()) throw PreconditionError("feature length mismatch");
  return std::sqrt(squared_distance(xi.cwiseProduct(a), xi.cwiseProduct(b)));
}

/// Fingerprint binding an index to a case and a flattening convention.
std::string index_fingerprint(const grid::GridCase& grid);

struct Record {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  int month = 0;
  Eigen::VectorXd features;  // unscaled phi(x)
  double cost = 0.0;
  std::shared_ptr<const uc::UcSolution> solution;
  std::string fingerprint;  // empty: taken from the index
};

enum class Backend : std::uint8_t { Linear, KdTree };

const char* to_string(Backend b);
Backend backend_from_string(const std::string& s);

struct Neighbor {
  std::size_t position = 0;  // into records()
  double squared = 0.0;
};

struct Prediction {
  std::uint64_t neighbor = 0;
  double cost = 0.0;
  double distance = 0.0;
  double seconds = 0.0;
  std::shared_ptr<const uc::UcSolution> solution;
};

/// Exact kd-tree over scaled coordinates. Splits on the widest dimension at
/// the median; a subtree is skipped only when its slab bound strictly
/// exceeds the best squared distance, so equal-distance candidates are all
/// seen and the lowest id wins as in a linear scan.
class KdTree {
 public:
  /// Indexes columns `members` of `points`. The matrix is not retained.
  void build(const Eigen::MatrixXd& points, std::vector<std::size_t> members);
  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return order_.size(); }

  /// Improves (best, best_sq) in place; `ids` ranks equal distances.
  void search(const Eigen::MatrixXd& points, const std::vector<std::uint64_t>& ids, const Eigen::VectorXd& q,
              std::size_t& best, double& best_sq, bool& found) const;

 private:
  struct Node {
    int dim = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
    std::size_t begin = 0, end = 0;  // leaf range in order_
  };
  int build_node(const Eigen::MatrixXd& points, std::size_t begin, std::size_t end);
  void search_node(int node, const Eigen::MatrixXd& points, const std::vector<std::uint64_t>& ids,
                   const Eigen::VectorXd& q, std::size_t& best, double& best_sq, bool& found) const;

  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Nearest-neighbour store of solved scenarios. Reads are safe to run
/// concurrently; add_sample needs exclusive access.
class ProxyIndex {
 public:
  ProxyIndex(Eigen::VectorXd xi, std::string fingerprint, Backend backend = Backend::Linear);

  /// Throws PreconditionError on empty input, FingerprintError on mixed
  /// fingerprints.
  static ProxyIndex build(std::vector<Record> records, Eigen::VectorXd xi, std::string fingerprint,
                          Backend backend = Backend::Linear);

  /// Throws PreconditionError on a duplicate id or a length mismatch.
  void add_sample(Record record);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  int dimension() const { return static_cast<int>(xi_.size()); }
  const std::vector<Record>& records() const { return records_; }
  const Eigen::VectorXd& weights() const { return xi_; }
  const std::string& fingerprint() const { return fingerprint_; }
  Backend backend() const { return backend_; }

  /// Exact nearest record to unscaled features; ties go to the lowest id.
  Neighbor nearest(const Eigen::VectorXd& features) const;

  /// Throws PreconditionError on an empty index, FingerprintError when the
  /// case does not match.
  Prediction predict(const grid::GridCase& grid, const sampling::UcInput& x) const;

  /// Two-part archive: meta.json plus records.jsonl.
  void save(const std::filesystem::path& dir) const;
  static ProxyIndex load(const std::filesystem::path& dir);

 private:
  void rebuild_tree();

  Eigen::VectorXd xi_;
  std::string fingerprint_;
  Backend backend_;
  std::vector<Record> records_;
  Eigen::MatrixXd scaled_;  // dimension x capacity, column per record
  std::vector<std::uint64_t> ids_;
  KdTree tree_;
  std::size_t tree_count_ = 0;  // records_[0, tree_count_) are in the tree
};

}  // namespace ucnn::proxy
