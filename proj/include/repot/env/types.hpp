#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace repot {

enum class EnvId { hanoi, checker, river, blocksworld };

inline const char* env_name(EnvId e) {
  switch (e) {
    case EnvId::hanoi: return "hanoi";
    case EnvId::checker: return "checker";
    case EnvId::river: return "river";
    case EnvId::blocksworld: return "blocksworld";
  }
  return "?";
}

inline std::optional<EnvId> env_from_name(const std::string& s) {
  if (s == "hanoi") return EnvId::hanoi;
  if (s == "checker") return EnvId::checker;
  if (s == "river") return EnvId::river;
  if (s == "blocksworld") return EnvId::blocksworld;
  return std::nullopt;
}

// ---- Actions -------------------------------------------------------------

struct HanoiMove {
  int disk = 0;
  int from = 0;
  int to = 0;
  auto operator<=>(const HanoiMove&) const = default;
};

struct CheckerSlide {
  int from = 0;
  int to = 0;
  auto operator<=>(const CheckerSlide&) const = default;
};

struct CheckerJump {
  int from = 0;
  int over = 0;
  int to = 0;
  auto operator<=>(const CheckerJump&) const = default;
};

enum class BankSide { left, right };

inline const char* bank_name(BankSide b) { return b == BankSide::left ? "left" : "right"; }
inline BankSide other_bank(BankSide b) { return b == BankSide::left ? BankSide::right : BankSide::left; }

struct RiverCross {
  BankSide to = BankSide::right;
  std::vector<std::string> passengers;  // 1 or 2 entity names, canonical form sorted
  auto operator<=>(const RiverCross&) const = default;
};

enum class BlockOp { pick_up, put_down, stack, unstack };

struct BlocksAction {
  BlockOp op = BlockOp::pick_up;
  std::string a;
  std::string b;  // only stack/unstack
  auto operator<=>(const BlocksAction&) const = default;
};

using Action = std::variant<HanoiMove, CheckerSlide, CheckerJump, RiverCross, BlocksAction>;

inline EnvId action_env(const Action& a) {
  switch (a.index()) {
    case 0: return EnvId::hanoi;
    case 1:
    case 2: return EnvId::checker;
    case 3: return EnvId::river;
    default: return EnvId::blocksworld;
  }
}

// ---- States ----------------------------------------------------------------

struct HanoiState {
  int n_disks = 0;
  std::array<std::vector<int>, 3> pegs;  // bottom -> top, disk 1 is smallest
  auto operator<=>(const HanoiState&) const = default;
};

enum class Cell : std::uint8_t { empty, left_token, right_token };

struct CheckerState {
  std::vector<Cell> board;  // left_token moves rightward, right_token leftward
  auto operator<=>(const CheckerState&) const = default;
};

struct RiverState {
  int pairs = 0;  // actors a1..ak, agents b1..bk
  std::vector<BankSide> actor_bank;
  std::vector<BankSide> agent_bank;
  BankSide boat = BankSide::left;
  auto operator<=>(const RiverState&) const = default;
};

struct BlocksState {
  std::set<std::string> blocks;
  std::map<std::string, std::string> on;  // x -> y, x rests on y
  std::set<std::string> on_table;
  std::optional<std::string> holding;
  auto operator<=>(const BlocksState&) const = default;
};

using EnvState = std::variant<HanoiState, CheckerState, RiverState, BlocksState>;

inline EnvId state_env(const EnvState& s) {
  switch (s.index()) {
    case 0: return EnvId::hanoi;
    case 1: return EnvId::checker;
    case 2: return EnvId::river;
    default: return EnvId::blocksworld;
  }
}

// Goals: exact target state, or a predicate subset (blocksworld).
struct GoalState {
  EnvState state;
};

struct GoalPredicates {
  std::set<std::string> predicates;  // canonical predicate text
};

using Goal = std::variant<GoalState, GoalPredicates>;

// ---- Step / parse results --------------------------------------------------

struct StepResult {
  bool valid = false;
  EnvState next_state;   // unchanged copy of the input when invalid
  std::string error;     // one-line message naming the violated rule
};

struct ParseError {
  size_t pos = 0;        // byte offset into the input
  std::string message;
};

struct EnvMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void require_env(EnvId want, EnvId got, const char* what) {
  if (want != got)
    throw EnvMismatch(std::string("environment mismatch: ") + what + " belongs to " +
                      env_name(got) + ", expected " + env_name(want));
}

}  // namespace repot
