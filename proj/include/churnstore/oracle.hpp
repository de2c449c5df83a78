#ifndef CHURNSTORE_ORACLE_HPP
#define CHURNSTORE_ORACLE_HPP

#include <churnstore/common.hpp>
#include <churnstore/netgen.hpp>
#include <churnstore/spectral.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace churnstore {

inline constexpr std::uint32_t kOracleMaxNodes = 4096;

/// Position distribution of a walk over the nodes of one round, plus the
/// probability mass destroyed by churn along the way.
template <typename Scalar>
struct DistributionVector {
  Round round = 0;
  std::vector<NodeId> nodes;                         // slot -> node at `round`
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probability;  // indexed by slot
  Scalar kill_mass = 0;

  Scalar operator[](NodeId id) const {
    for (std::size_t s = 0; s < nodes.size(); ++s) {
      if (nodes[s] == id) return probability[static_cast<Eigen::Index>(s)];
    }
    return Scalar(0);
  }
  Scalar total() const { return probability.sum() + kill_mass; }
};

/// Per-round operators over slots for rounds (t0, t]: the kill mask of each
/// round's churn and the transition operator of that round's graph.
template <typename Scalar>
class WindowOperators {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  WindowOperators(const DynamicNetworkSchedule& schedule, Round t0, Round t) : schedule_(schedule), t0_(t0), t_(t) {
    if (schedule.n() > kOracleMaxNodes) {
      throw Error(ErrorCode::TooLarge, "exact oracle limited to n <= " + std::to_string(kOracleMaxNodes));
    }
    if (t < t0 || t0 < 0 || t >= schedule.horizon()) throw Error(ErrorCode::OutOfHorizon, "bad oracle window");
    const GraphSnapshot* last = nullptr;
    for (Round r = t0 + 1; r <= t; ++r) {
      const GraphSnapshot& g = schedule.snapshot(r);
      if (!last || g.adjacency != last->adjacency) ops_.push_back(transition_operator<Scalar>(g));
      index_.push_back(ops_.size() - 1);
      last = &g;
    }
  }

  /// Forward: per round, zero the churned-out slots (unless the schedule
  /// preserves walks), then apply one step of that round's graph. Columns of
  /// `x` are independent distributions; returns the killed mass per column.
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> forward(Matrix& x) const {
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> killed = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(x.cols());
    for (Round r = t0_ + 1; r <= t_; ++r) {
      kill(x, r, killed);
      Matrix next = op(r) * x;
      x.swap(next);
    }
    return killed;
  }

  /// The same product in reverse order with transposed factors: per round
  /// from t down to t0+1, one step of that round's graph then its kill mask.
  /// Run from a destination indicator it yields, for every origin slot at
  /// t0, the probability that a walk from there ends at the destination.
  void reverse(Matrix& y) const {
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> ignored = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(y.cols());
    for (Round r = t_; r > t0_; --r) {
      Matrix next = op(r).transpose() * y;
      y.swap(next);
      kill(y, r, ignored);
    }
  }

 private:
  const Eigen::SparseMatrix<Scalar>& op(Round r) const { return ops_[index_[static_cast<std::size_t>(r - t0_ - 1)]]; }

  void kill(Matrix& x, Round r, Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& killed) const {
    if (schedule_.preserves_walks()) return;
    for (Slot s : schedule_.event(r).slots) {
      killed += x.row(s);
      x.row(s).setZero();
    }
  }

  const DynamicNetworkSchedule& schedule_;
  Round t0_, t_;
  std::vector<Eigen::SparseMatrix<Scalar>> ops_;
  std::vector<std::size_t> index_;
};

/// Exact distribution π(𝒢, s, t, t0) of a walk started at `s` in round t0,
/// computed by repeated application of the per-round transition operator.
template <typename Scalar = double>
DistributionVector<Scalar> exact_walk_distribution(const DynamicNetworkSchedule& schedule, NodeId s, Round t0,
                                                   Round t) {
  if (schedule.n() > kOracleMaxNodes) {
    throw Error(ErrorCode::TooLarge, "exact oracle limited to n <= " + std::to_string(kOracleMaxNodes));
  }
  if (!schedule.present(s, t0)) throw Error(ErrorCode::UnknownNode, "source not present at t0");
  WindowOperators<Scalar> ops(schedule, t0, t);
  typename WindowOperators<Scalar>::Matrix x = WindowOperators<Scalar>::Matrix::Zero(schedule.n(), 1);
  x(schedule.slot_of(s), 0) = Scalar(1);
  const auto killed = ops.forward(x);

  DistributionVector<Scalar> out;
  out.round = t;
  out.nodes = schedule.snapshot(t).nodes;
  out.probability = x.col(0);
  out.kill_mass = killed[0];
  return out;
}

/// All sources at once: column j is the distribution at round t of a walk
/// started at `sources[j]` in round t0 (rows are slots at t).
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> exact_walk_matrix(const DynamicNetworkSchedule& schedule,
                                                                        const std::vector<NodeId>& sources, Round t0,
                                                                        Round t) {
  WindowOperators<Scalar> ops(schedule, t0, t);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> x =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(schedule.n(), static_cast<Eigen::Index>(sources.size()));
  for (std::size_t j = 0; j < sources.size(); ++j) {
    if (!schedule.present(sources[j], t0)) throw Error(ErrorCode::UnknownNode, "source not present at t0");
    x(schedule.slot_of(sources[j]), static_cast<Eigen::Index>(j)) = Scalar(1);
  }
  ops.forward(x);
  return x;
}

/// Distribution of the origin (over nodes of round t0) of a walk started in
/// round t0 uniformly over V^{t0}, conditioned on ending at `d` in round t.
/// Computed by running the reversed schedule forward from `d`.
template <typename Scalar = double>
DistributionVector<Scalar> origin_distribution_reversed(const DynamicNetworkSchedule& schedule, NodeId d, Round t0,
                                                        Round t) {
  if (!schedule.present(d, t)) throw Error(ErrorCode::UnknownNode, "destination not present at t");
  WindowOperators<Scalar> ops(schedule, t0, t);
  typename WindowOperators<Scalar>::Matrix y = WindowOperators<Scalar>::Matrix::Zero(schedule.n(), 1);
  y(schedule.slot_of(d), 0) = Scalar(1);
  ops.reverse(y);
  DistributionVector<Scalar> out;
  out.round = t0;
  out.nodes = schedule.snapshot(t0).nodes;
  const Scalar mass = y.sum();
  out.probability = mass > Scalar(0) ? Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(y.col(0) / mass)
                                     : Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(y.col(0));
  return out;
}

template <typename Derived1, typename Derived2>
typename Derived1::Scalar total_variation(const Eigen::MatrixBase<Derived1>& p, const Eigen::MatrixBase<Derived2>& q) {
  return (p - q).cwiseAbs().sum() / typename Derived1::Scalar(2);
}

}  // namespace churnstore

#endif  // CHURNSTORE_ORACLE_HPP
