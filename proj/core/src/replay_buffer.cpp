#include "oraclab/replay_buffer.hpp"

#include <stdexcept>

namespace oraclab {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int action_dim)
    : capacity_(capacity),
      state_dim_(state_dim),
      action_dim_(action_dim),
      width_(static_cast<std::size_t>(2 * state_dim + action_dim + 3)) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
  if (state_dim < 1 || action_dim < 1) throw std::invalid_argument("replay buffer dims must be >= 1");
}

void ReplayBuffer::push(const Transition& t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ || t.action.size() != action_dim_) {
    throw std::invalid_argument("transition shape does not match the replay buffer");
  }
  if (size_ < capacity_ && data_.size() < (next_ + 1) * width_) data_.resize((next_ + 1) * width_);
  double* row = data_.data() + next_ * width_;
  for (int i = 0; i < state_dim_; ++i) *row++ = t.state[i];
  for (int i = 0; i < action_dim_; ++i) *row++ = t.action[i];
  *row++ = t.reward;
  *row++ = t.cost;
  for (int i = 0; i < state_dim_; ++i) *row++ = t.next_state[i];
  *row = t.terminated ? 1.0 : 0.0;

  next_ = (next_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
  ++insertions_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0 || size_ < batch_size) throw std::logic_error("replay buffer holds fewer transitions than the batch");
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.index(size_));
  return idx;
}

agents::Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  const auto idx = sample_indices(batch_size, rng);
  const auto b = static_cast<Eigen::Index>(batch_size);
  agents::Batch out;
  out.states.resize(state_dim_, b);
  out.actions.resize(action_dim_, b);
  out.next_states.resize(state_dim_, b);
  out.rewards.resize(b);
  out.costs.resize(b);
  out.terminated.resize(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double* row = data_.data() + idx[static_cast<std::size_t>(j)] * width_;
    for (int i = 0; i < state_dim_; ++i) out.states(i, j) = *row++;
    for (int i = 0; i < action_dim_; ++i) out.actions(i, j) = *row++;
    out.rewards[j] = *row++;
    out.costs[j] = *row++;
    for (int i = 0; i < state_dim_; ++i) out.next_states(i, j) = *row++;
    out.terminated[j] = *row;
  }
  return out;
}

Transition ReplayBuffer::at(std::size_t slot) const {
  if (slot >= size_) throw std::out_of_range("replay buffer slot out of range");
  const double* row = data_.data() + slot * width_;
  Transition t;
  t.state.resize(state_dim_);
  t.action.resize(action_dim_);
  t.next_state.resize(state_dim_);
  for (int i = 0; i < state_dim_; ++i) t.state[i] = *row++;
  for (int i = 0; i < action_dim_; ++i) t.action[i] = *row++;
  t.reward = *row++;
  t.cost = *row++;
  for (int i = 0; i < state_dim_; ++i) t.next_state[i] = *row++;
  t.terminated = *row != 0.0;
  return t;
}

}  // namespace oraclab
