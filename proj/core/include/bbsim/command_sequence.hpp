#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bbsim {

/// Non-empty ordered list of control commands. This is both the decision
/// module's stored state and the shape of controller proposals; the
/// non-emptiness invariant is enforced at construction so the kernel can
/// always pop a head command.
template <typename Command>
class CommandSequence {
 public:
  explicit CommandSequence(std::vector<Command> commands)
      : commands_(std::move(commands)) {
    if (commands_.empty()) {
      throw std::invalid_argument("CommandSequence requires at least one command");
    }
  }

  static CommandSequence single(Command c) {
    return CommandSequence(std::vector<Command>{std::move(c)});
  }

  std::size_t size() const { return commands_.size(); }
  const Command& operator[](std::size_t i) const { return commands_[i]; }
  const Command& head() const { return commands_.front(); }
  const Command& last() const { return commands_.back(); }

  /// Index into the sequence as if the last command repeated forever.
  const Command& at_or_last(std::size_t j) const {
    return j < commands_.size() ? commands_[j] : commands_.back();
  }

  auto begin() const { return commands_.begin(); }
  auto end() const { return commands_.end(); }
  const std::vector<Command>& commands() const { return commands_; }

 private:
  std::vector<Command> commands_;
};

/// Pop the head command. A one-command sequence repeats instead of
/// shrinking, so the result is always a valid (non-empty) sequence.
template <typename Command>
std::pair<Command, CommandSequence<Command>> dm_step(const CommandSequence<Command>& s) {
  Command u = s.head();
  if (s.size() == 1) {
    return {std::move(u), s};
  }
  std::vector<Command> rest(s.begin() + 1, s.end());
  return {std::move(u), CommandSequence<Command>(std::move(rest))};
}

/// Command applied j steps into the sequence under the repeat-last-forever
/// tail semantics. Used by checkers to evaluate the infinite horizon.
template <typename Command>
const Command& last_command_extension(const CommandSequence<Command>& s, std::size_t j) {
  return s.at_or_last(j);
}

}  // namespace bbsim
