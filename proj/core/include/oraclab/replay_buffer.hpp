#pragma once

#include "oraclab/agent.hpp"
#include "oraclab/rng.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace oraclab {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  double cost = 0.0;
  Eigen::VectorXd next_state;
  bool terminated = false;
};

/// Fixed-capacity ring of transitions with uniform sampling. Storage grows
/// with the number of insertions up to the capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

  void push(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertions() const { return insertions_; }

  /// Uniform with replacement. Requires size() >= batch_size.
  agents::Batch sample(std::size_t batch_size, Rng& rng) const;
  /// Sampled slot indices, exposed for uniformity checks.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  Transition at(std::size_t slot) const;

 private:
  std::size_t capacity_;
  int state_dim_;
  int action_dim_;
  std::size_t width_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::uint64_t insertions_ = 0;
  std::vector<double> data_;  // row per slot: s, a, r, c, s', done
};

}  // namespace oraclab
